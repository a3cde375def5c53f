"""End-to-end experiment pipeline, run manifests and run comparison."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .core import ParameterError, evaluate_on_grid, write_coefficients_csv, write_pgm
from .designs import RNG_DESCRIPTION, TRIM_STREAM, design_read, design_write, make_design
from .metrics import recovery_report
from .phantoms import load_phantom, save_phantom
from .reconstruction import AdmmParams, Measurements, reconstruct

MANIFEST_NAME = "manifest.json"
TIMING_KEYS = {"timings", "wall_time_ms", "runtime_s"}


class ExperimentError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and artifacts written so far are kept."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ExperimentSpec:
    name: str
    phantom: str = "standard"
    scheme: str = "lowest_block"
    design_params: dict = field(default_factory=lambda: {"m": 8, "d": 2})
    seed: int = 7
    method: str = "partial"
    m: int = 8
    rho: float = 1.0
    max_iter: int = 2000
    eps_primal: float = 1e-7
    eps_dual: float = 1e-7
    oversample: int = 4
    G: int = 1024
    out_dir: str = "runs"

    def __post_init__(self):
        if self.method not in ("partial", "vdp", "bvmin"):
            raise ParameterError(f"unknown method {self.method!r}")
        if self.phantom != "standard" and not Path(self.phantom).is_file():
            raise ParameterError(f"phantom spec {self.phantom!r} not found")
        if self.scheme == "file" and not Path(self.design_params.get("path", "")).is_file():
            raise ParameterError("design file not found")
        if self.G < 2 * self.m + 1:
            raise ParameterError("metric grid too coarse for the reconstruction degree")

    def admm_params(self) -> AdmmParams:
        return AdmmParams(m=self.m, rho=self.rho, max_iter=self.max_iter, eps_primal=self.eps_primal,
                          eps_dual=self.eps_dual, oversample=self.oversample)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def standard_experiments(out_root="runs", seed: int = 7) -> dict:
    """The six-run suite: three lowest-block recoveries, hierarchical, uniform, and hierarchical at 1089."""
    low = {"m": 8, "d": 2}
    hier = {"n_target": 289, "k0": 2, "alpha": 1.0, "k_cap": 5, "d": 2}
    specs = {
        "exp1_partial_lowest": dict(scheme="lowest_block", design_params=low, method="partial", m=8),
        "exp2_vdp_lowest": dict(scheme="lowest_block", design_params=low, method="vdp", m=8),
        "exp3_bvmin_lowest": dict(scheme="lowest_block", design_params=low, method="bvmin", m=128),
        "exp4_bvmin_hier289": dict(scheme="hierarchical", design_params=hier, method="bvmin", m=128),
        "exp5_bvmin_uniform289": dict(scheme="uniform_random", design_params={"n_target": 289, "half_width": 64, "d": 2},
                                      method="bvmin", m=128),
        "exp6_bvmin_hier1089": dict(scheme="hierarchical", design_params=dict(hier, n_target=1089, k0=3),
                                    method="bvmin", m=128),
    }
    return {k: ExperimentSpec(name=k, seed=seed, out_dir=str(Path(out_root) / k), **v) for k, v in specs.items()}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    tool_version: str
    spec: dict
    inputs: dict
    artifacts: dict
    timings: dict
    seeds: dict
    results: dict
    status: str = "ok"
    failed_stage: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default) + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))

    @property
    def out_dir(self) -> Path:
        return Path(self.spec["out_dir"])


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def run_experiment(spec: ExperimentSpec) -> RunManifest:
    """Run every stage of ``spec``, writing artifacts and ``manifest.json`` into ``spec.out_dir``.

    On failure a manifest with ``status="failed"`` is still written next to
    the artifacts produced so far, and :class:`ExperimentError` is raised.
    """
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(
        tool_version=__version__,
        spec=spec.to_dict(),
        inputs={},
        artifacts={},
        timings={},
        seeds={"root": spec.seed, "rng": RNG_DESCRIPTION,
               "streams": {"band k": "k", "trim/fill": TRIM_STREAM, "uniform": 0}},
        results={},
    )

    def artifact(name, path):
        man.artifacts[name] = {"path": Path(path).name, "sha256": sha256_file(path)}

    state = {}

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            fn()
        except Exception as exc:
            man.status, man.failed_stage = "failed", name
            man.timings[name] = time.perf_counter() - t0
            man.write(out / MANIFEST_NAME)
            raise ExperimentError(name, exc) from exc
        man.timings[name] = time.perf_counter() - t0

    def do_phantom():
        ph = load_phantom(spec.phantom)
        if spec.phantom != "standard":
            man.inputs["phantom"] = {"path": spec.phantom, "sha256": sha256_file(spec.phantom)}
        save_phantom(ph, out / "phantom.json")
        artifact("phantom", out / "phantom.json")
        man.inputs["phantom_id"] = sha256_file(out / "phantom.json")
        state["phantom"] = ph

    def do_design():
        if spec.scheme == "file":
            des = design_read(spec.design_params["path"])
        else:
            des = make_design(spec.scheme, spec.design_params, spec.seed)
        if len(des) == 0:
            raise ParameterError("empty design")
        n_target = spec.design_params.get("n_target")
        if n_target is not None and len(des) != n_target:
            raise ParameterError(f"design has {len(des)} frequencies, expected {n_target}")
        design_write(des, out / "design.txt")
        artifact("design", out / "design.txt")
        state["design"] = des

    def do_measure():
        meas = Measurements.from_source(state["design"], state["phantom"])
        meas.write_csv(out / "measurements.csv")
        artifact("measurements", out / "measurements.csv")
        state["meas"] = meas

    def do_reconstruct():
        poly, rep = reconstruct(spec.method, state["meas"], spec.m,
                                spec.admm_params() if spec.method == "bvmin" else None)
        write_coefficients_csv(poly, out / "recon_coeffs.csv")
        artifact("recon_coeffs", out / "recon_coeffs.csv")
        if rep is not None:
            rep.to_json(out / "convergence.json")
            artifact("convergence", out / "convergence.json")
            man.results["convergence"] = rep.to_dict()
        state["poly"], state["conv"] = poly, rep

    def do_render():
        truth = state["phantom"].render(spec.G)
        recon = evaluate_on_grid(state["poly"], spec.G)
        lo = float(min(truth.values.min(), recon.values.min()))
        hi = float(max(truth.values.max(), recon.values.max()))
        write_pgm(truth, out / "truth.pgm", lo, hi)
        write_pgm(recon, out / "recon.pgm", lo, hi)
        for name in ("truth", "recon"):
            artifact(f"{name}_pgm", out / f"{name}.pgm")
            artifact(f"{name}_pgm_meta", out / f"{name}.pgm.json")
        lo_t, hi_t = float(truth.values.min()), float(truth.values.max())
        man.results["overshoot"] = max(0.0, float(recon.values.max()) - hi_t, lo_t - float(recon.values.min()))

    def do_metrics():
        rep = recovery_report(state["poly"], state["phantom"], state["design"], spec.G)
        d = rep.to_dict()
        d.update(n=len(state["design"]), scheme=spec.scheme, method=spec.method, phantom=state["phantom"].name,
                 design_sha256=man.artifacts["design"]["sha256"])
        if state["conv"] is not None:
            d["solver"] = state["conv"].to_dict()
        (out / "metrics.json").write_text(json.dumps(d, indent=2, sort_keys=True, default=_json_default) + "\n")
        artifact("metrics", out / "metrics.json")
        man.results["metrics"] = rep.to_dict()
        man.results["n"] = len(state["design"])

    for name, fn in [("phantom", do_phantom), ("design", do_design), ("measure", do_measure),
                     ("reconstruct", do_reconstruct), ("render", do_render), ("metrics", do_metrics)]:
        stage(name, fn)
    man.write(out / MANIFEST_NAME)
    return man


def rerun(manifest_path, out_dir) -> RunManifest:
    """Run the experiment recorded in a manifest again, into ``out_dir``."""
    spec = dict(RunManifest.load(manifest_path).spec)
    spec["out_dir"] = str(out_dir)
    return run_experiment(ExperimentSpec.from_dict(spec))


def _numeric_diffs(a, b, path=""):
    """Yield ``(path, a, b)`` for leaves that differ; timing fields are skipped."""
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k in TIMING_KEYS:
                continue
            yield from _numeric_diffs(a.get(k), b.get(k), f"{path}/{k}")
    elif isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        for i, (x, y) in enumerate(zip(a, b)):
            yield from _numeric_diffs(x, y, f"{path}[{i}]")
    elif isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        if not (a == b or (math.isnan(a) and math.isnan(b))):
            yield path, a, b
    elif a != b:
        yield path, a, b


def compare_manifests(a: RunManifest, b: RunManifest, tol: float = 1e-9) -> dict:
    """Reproducibility check: identical design bytes and results within ``tol`` (timings ignored)."""
    design_same = a.artifacts.get("design", {}).get("sha256") == b.artifacts.get("design", {}).get("sha256")
    mismatches = []
    for path, x, y in _numeric_diffs(a.results, b.results):
        if isinstance(x, (int, float)) and isinstance(y, (int, float)):
            if abs(x - y) <= tol * max(1.0, abs(x), abs(y)):
                continue
        mismatches.append({"field": path, "a": x, "b": y})
    return {"design_identical": design_same, "mismatches": mismatches,
            "ok": design_same and not mismatches}


COMPARE_COLUMNS = ["name", "n", "scheme", "method", "L1_error", "L2_error", "edge_discrepancy",
                   "bv_objective", "runtime_s"]


def compare_runs(manifests, csv_path=None, json_path=None) -> list:
    """Tabulate runs over the same phantom and metric grid."""
    mans = [m if isinstance(m, RunManifest) else RunManifest.load(m) for m in manifests]
    if len(mans) < 2:
        raise ParameterError("compare needs at least two manifests")
    if len({m.inputs.get("phantom_id") for m in mans}) != 1:
        raise ParameterError("runs use different phantoms")
    if len({m.spec["G"] for m in mans}) != 1:
        raise ParameterError("runs use different metric grids")
    rows = []
    for m in mans:
        met = m.results["metrics"]
        lp = met["lp_errors"]
        rows.append({
            "name": m.spec["name"], "n": m.results["n"], "scheme": m.spec["scheme"], "method": m.spec["method"],
            "L1_error": lp["1.0"], "L2_error": lp["2.0"], "edge_discrepancy": met["edge_discrepancy"],
            "bv_objective": met["bv_objective"], "runtime_s": sum(m.timings.values()),
        })
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, COMPARE_COLUMNS)
            w.writeheader()
            w.writerows(rows)
    if json_path is not None:
        Path(json_path).write_text(json.dumps(rows, indent=2) + "\n")
    return rows

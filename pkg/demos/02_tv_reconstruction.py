# %% [markdown]
# Total-variation-minimizing recovery from Fourier samples.
#
# Among all degree-m polynomials that agree with the measured coefficients,
# pick the one with the least gradient mass on a fine grid. We compare the
# lowest block against a hierarchical design with the same budget.
# `--m 128 --max-iter 2000` reproduces the full-size setting (a few minutes).

# %%
import argparse
import time

from fourier_sampling.designs import lowest_block, make_design
from fourier_sampling.metrics import recovery_report
from fourier_sampling.phantoms import standard_phantom
from fourier_sampling.reconstruction import AdmmParams, Measurements, bv_min_admm, vdp_recon

ap = argparse.ArgumentParser()
ap.add_argument("--m", type=int, default=64)
ap.add_argument("--max-iter", type=int, default=600)
ap.add_argument("--seed", type=int, default=7)
args = ap.parse_args()

ph = standard_phantom()
designs = {
    "lowest block": lowest_block(8, 2),
    "hierarchical": make_design("hierarchical", {"n_target": 289, "k0": 2, "alpha": 1.0,
                                                 "k_cap": 4 if args.m < 128 else 5, "d": 2}, args.seed),
}

# %%
print("vdp baseline:", round(recovery_report(vdp_recon(Measurements.from_source(designs["lowest block"], ph), 8),
                                             ph, None, 512).edge_discrepancy, 4))
for name, des in designs.items():
    meas = Measurements.from_source(des, ph)
    t0 = time.perf_counter()
    poly, rep = bv_min_admm(meas, AdmmParams(m=args.m, max_iter=args.max_iter))
    er = recovery_report(poly, ph, des, 512)
    print(f"{name:13s} n={len(des)} max|xi|={meas.max_degree:3d} objective {rep.final_objective:.4f} "
          f"edge discrepancy {er.edge_discrepancy:.4f} feasibility {er.feasibility:.1e} "
          f"({time.perf_counter() - t0:.1f}s, converged={rep.converged})")

# %% [markdown]
# Spending part of the budget on scattered higher frequencies lets the
# minimizer place edges more precisely than any amount of work on the
# lowest block alone.

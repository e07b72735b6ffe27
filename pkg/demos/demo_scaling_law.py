"""Finite-length scaling law: predicted vs measured waterfall error rates.

Assembles scaling parameters for both ensemble families (threshold, plateau
slope, variance parameter, covariance decay), predicts word error rates,
and compares the protograph construction against the unstructured random
one at equal code size.  Scaled down to minutes of runtime; the true
published operating points use L=100 and M up to 2000.
"""

from pathlib import Path

from scldpc import ScalingParams, equivalent_M, mu0, predict_wer, wer_point
from scldpc import EnsembleSpec

OUT = Path(__file__).parent / "demo_out"
OUT.mkdir(exist_ok=True)

# parameters of the (3,6,L) pair at their common threshold; gamma is the
# only constant that differs between the families, and it enters the
# survival time exponentially
proto = ScalingParams(epsilon_star=0.48815, gamma=5.31, delta1_star=0.80,
                      theta=0.55, tau_star=19.9)
rand = ScalingParams(epsilon_star=0.48815, gamma=4.33, delta1_star=0.80,
                     theta=0.62, tau_star=18.3)

L, M = 100, 512
rows = ["epsilon,family,mu0,p_star"]
for eps in (0.44, 0.45, 0.46):
    for name, p in (("protograph", proto), ("random", rand)):
        rows.append(f"{eps},{name},{mu0(p, M, eps)!r},{predict_wer(p, M, eps, L)!r}")
(OUT / "predicted_wer.csv").write_text("\n".join(rows) + "\n")
for eps in (0.44, 0.45, 0.46):
    pp = predict_wer(proto, M, eps, L)
    pr = predict_wer(rand, M, eps, L)
    print(f"eps={eps}: predicted WER protograph {pp:.3g} vs random {pr:.3g} "
          f"(ratio {pr / pp:.1f})")

# the code-size premium the random family pays for equal survival time:
# with shared variance and decay parameters it is the square of the
# plateau-slope ratio
ratio = equivalent_M(rand, proto, M_b=M, eps_ref=0.45) / M
print(f"random ensemble needs M multiplied by {ratio:.2f} to match the protograph")

# --- a quick measured point to compare against ------------------------------
eps = 0.45
for family in ("protograph", "random"):
    spec = EnsembleSpec(family, 3, 6, L)
    pt = wer_point(spec, M, eps, trials=3000, seed=23, target_errors=60,
                   n_graphs=64)
    print(f"measured {family} WER at eps={eps}, M={M}: "
          f"{pt.wer:.4g} ({pt.errors}/{pt.trials})")

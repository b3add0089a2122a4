"""A tour of the intensity algebra: base families, kernels, and bounds.

Run:  python3 demos/01_intensity_landscape.py
"""

import numpy as np

from mtpp import (
    ConstantBase,
    EventSequence,
    ExpDecayKernel,
    GammaBase,
    HawkesModel,
    RayleighKernel,
    SinusoidalBase,
    ZeroKernel,
    conditional_intensity,
    eval_base,
    eval_kernel,
    intensity_upper_bound,
    kernel_sup,
    total_intensity,
)

print("=== Base intensity families ===")
bases = {
    "constant":   ConstantBase(c0=0.5),
    "sinusoidal": SinusoidalBase(amplitude=2.0, omega=1.5, phase=0.3, c0=0.4),
    "gamma bump": GammaBase(amplitude=25.0, power=1.5, decay=4.0, c0=0.2),
}
grid = np.linspace(0.0, 4.0, 9)
for name, spec in bases.items():
    vals = ", ".join(f"{eval_base(spec, t):5.2f}" for t in grid)
    print(f"  {name:<11} mu(t) on [0,4]: {vals}")
print("  (the sinusoid clamps at zero where the raw wave dips negative)")

print("\n=== Interaction kernels ===")
kernels = {
    "exp decay": ExpDecayKernel(alpha=0.8, beta=2.0),
    "rayleigh":  RayleighKernel(a0=0.6, a1=0.15, t_shift=0.05),
    "zero":      ZeroKernel(),
}
dts = np.linspace(0.0, 1.0, 6)
for name, spec in kernels.items():
    vals = ", ".join(f"{eval_kernel(spec, float(d)):5.2f}" for d in dts)
    print(f"  {name:<9} gamma(dt) on [0,1]: {vals}   sup = {kernel_sup(spec):.3f}")

print("\n=== A two-mark Hawkes model ===")
model = HawkesModel(
    mark_count=2,
    bases=[ConstantBase(0.3), ConstantBase(0.2)],
    kernels=[
        [ExpDecayKernel(0.5, 1.5), ExpDecayKernel(0.3, 1.0)],
        [RayleighKernel(0.4, 0.2, 0.0), ExpDecayKernel(0.6, 2.0)],
    ],
    prefactors=[[1, -1], [1, 1]],  # mark 1 inhibits mark 0
)
history = EventSequence([0.5, 1.1, 1.6], [0, 1, 0], horizon=2.0, mark_count=2)
print("  history:", [(f"{t:.1f}", k) for t, k in zip(history.times, history.marks)])
for t in (1.7, 2.0, 3.0, 6.0):
    lam = [conditional_intensity(model, history, t, k) for k in range(2)]
    tot = total_intensity(model, history, t)
    print(f"  t={t:>4}: lambda_0={lam[0]:.4f}  lambda_1={lam[1]:.4f}  total={tot:.4f}")

print("\n=== Thinning bounds dominate the intensity ===")
t_from, lookahead = 1.7, 1.0
bound = intensity_upper_bound(model, history, t_from, lookahead)
s = np.linspace(t_from + 1e-9, t_from + lookahead, 200)
worst = model.intensity_at(history.times, history.marks, s).sum(axis=1).max()
print(f"  bound on ({t_from}, {t_from + lookahead}] = {bound:.4f}; "
      f"max realized total = {worst:.4f}")

print("\n=== Models round-trip through JSON ===")
clone = HawkesModel.from_json(model.to_json())
print("  clone == model:", clone == model)

"""One bead on a string: the smallest system with a closed-form flow.

A single mass m at x on [0, 1] with h = 1, H = 0 has one eigenvalue
z = (1 + h) / (m (1 + h x)), which the flow keeps fixed.  Under the k = 1
flow the bead drifts right and loses mass:

    x(t) = (x0 + 1) e^(t / z) - 1,        m(t) = m0 e^(-t / z) (for this start).

The bead reaches the right end in finite time.  The integrator detects this
and stops with a partial trajectory instead of stepping past the boundary.
"""

import math

import numpy as np

from isostring import (BoundaryConditions, DiscreteString, FlowSpec, FlowState, IntegrationError,
                       StepPolicy, integrate, spectrum)

s = DiscreteString([0.5], [1.0], BoundaryConditions(1.0, 0.0))
z = spectrum(s).z[0]
print(f"eigenvalue z = {z:.15f} (closed form {2 / 3:.15f})")

t_exit = z * math.log(2.0 / 1.5)
print(f"predicted exit time: {t_exit:.6f}")

ts = np.linspace(0.0, 0.18, 7)
tr = integrate(FlowState(s), FlowSpec(1), ts[-1], StepPolicy(1e-12), sample_times=ts)
print("\n   t        x(t)          closed form     m(t)          closed form")
for t, x, m in zip(tr.times, tr.positions[:, 0], tr.masses[:, 0]):
    print(f"{t:5.3f}  {x:.12f}  {1.5 * math.exp(t / z) - 1:.12f}  "
          f"{m:.12f}  {math.exp(-t / z):.12f}")
print(f"eigenvalue drift along the run: {np.max(tr.spectral_drift):.2e}")

try:
    integrate(FlowState(s), FlowSpec(1), 1.0, StepPolicy(1e-10), sample_times=np.linspace(0, 1, 21))
except IntegrationError as exc:
    last = exc.trajectory
    print(f"\nrunning to t = 1 stops early: {exc}")
    print(f"last accepted sample t = {last.times[-1]:g}, x = {last.positions[-1, 0]:.6f}")

"""Rational flows: shifting the spectral parameter by epsilon.

The rational flow with shift epsilon replaces the Green's function powers
by the resolvent (I + epsilon K M)^(-1).  It is still isospectral.  As
epsilon shrinks it tends to the truncated flow, and the gap closes linearly
in epsilon.
"""

import numpy as np

from isostring import (BoundaryConditions, DiscreteString, FlowSpec, FlowState, StepPolicy,
                       integrate, vector_field)

s = DiscreteString([0.2, 0.45, 0.7], [0.3, 0.2, 0.25], BoundaryConditions(1.0, 1.0))
k = 1
x0, m0 = vector_field(s, FlowSpec(k))
print(" epsilon    |field(eps) - field(0)|   ratio to epsilon")
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    x1, m1 = vector_field(s, FlowSpec(k, eps))
    gap = max(np.max(np.abs(x1 - x0)), np.max(np.abs(m1 - m0)))
    print(f"{eps:8.0e}   {gap:22.3e}   {gap / eps:16.4f}")

for eps in (0.1, 1.0):
    tr = integrate(FlowState(s), FlowSpec(k, eps), 0.5, StepPolicy(1e-11),
                   sample_times=np.linspace(0, 0.5, 6))
    print(f"epsilon = {eps}: eigenvalue drift over [0, 0.5] = {np.max(tr.spectral_drift):.1e}")

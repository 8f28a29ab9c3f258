"""
Weyl operators on coherent spans
================================

Exponential vectors are never truncated: a vector is a finite sum
u_i (x) w(f_i) and every inner product is exp(-chi(f_i, f_j)).  That is
enough to check the Weyl relations exactly and to compare the Weyl
cocycle X_t = W(c 1_[0,t)) with its scalar semigroups.
"""
import numpy as np

from qscocycles import CoherentSpanElement, StepFunction, operator_kernel, weyl_scalar_family
from qscocycles.kernels import ccr_residual, weyl_direct_kernel, weyl_gram_identity_defect
from qscocycles.verify import SampleSpec, dichotomy_scan

c = 0.7 + 0.2j
T = [0, 1, 1j]
F = weyl_scalar_family(c, T)

print("   t   |T^00_t|     exp(-t|c|^2/2)")
for t in (0.25, 0.5, 1.0, 2.0):
    print(f"{t:5.2f}  {abs(F.op(0, 0, t)[0, 0]):.8f}  {np.exp(-t * abs(c) ** 2 / 2):.8f}")

# kernel from the semigroup decomposition vs the direct Fock-space pairing
f = StepFunction([0.3, 1.1], [[1], [0]], [1j])
g = StepFunction([0.8], [[1j]], [1])
print("decomposition:", np.round(operator_kernel(F, f, g, 1.5)[0, 0], 10))
print("direct       :", np.round(weyl_direct_kernel([c], f, g, 1.5), 10))

# Weyl relations on a two-term span
h1 = StepFunction.indicator([1], 1.0)
h2 = StepFunction([0.5, 2.0], [[0], [1j]], [0])
xi = CoherentSpanElement([([1.0], StepFunction.indicator([1j], 0.4)), ([2.0], StepFunction.constant([0]))])
print("CCR residual:", ccr_residual(h1, h2, xi))

x = np.array([[0], [1], [1j]])
print("Grammian identity defect:", weyl_gram_identity_defect(x, np.eye(3), 1.0))

for prop in ("isometric", "coisometric"):
    rep = dichotomy_scan(F, prop, spec=SampleSpec(trials=40))
    print(prop, rep.properties["pattern"])

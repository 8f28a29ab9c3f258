"""
Two tests for complete contractivity
====================================

A family is completely contractive in the weighted sense when a ratio of
norms stays below 1; equivalently its Paulsen tilde family is completely
positive.  Both are evaluated on the same samples here, for a contractive
family, a deliberately growing one, and the transpose semigroup, which is
positive and unital but not completely contractive.
"""
import numpy as np

from qscocycles import AssociatedFamily, contraction_scaled, full_algebra, trivial_family
from qscocycles.verify import SampleSpec, verify_theorem_S

spec = SampleSpec(n_max=3, trials=100)

transpose = np.zeros((4, 4))
for i in range(2):
    for j in range(2):
        transpose[j * 2 + i, i * 2 + j] = 1.0

families = {
    "trivial": trivial_family(full_algebra(1), [0, 1, 1j]),
    "grows like exp(t)": contraction_scaled(trivial_family(full_algebra(1), [0, 1, 1j]), -1.0),
    "exp(t (transpose - id))": AssociatedFamily(full_algebra(2), [0], {(0, 0): transpose - np.eye(4)}),
}

for name, F in families.items():
    rep = verify_theorem_S(F, spec)
    norm, tilde = rep.check("norm-bound"), rep.check("tilde-positivity")
    print(f"{name:26s} norm bound {'ok' if norm.passed else 'FAILS'}   "
          f"tilde positivity {'ok' if tilde.passed else 'FAILS'}   "
          f"agree: {rep.check('criteria-agree').passed}")
    if not norm.passed:
        print(f"{'':26s} worst ratio {norm.witness['ratio']:.4f} at t = {norm.witness['t']}")

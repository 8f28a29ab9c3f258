"""
From semigroups to a cocycle and back
=====================================

Start from the dephasing semigroup S_t on Mat_2 and the noise values
T = {0, 1, i}.  The family P^{x,y}_t = exp(-t chi(x, y)) S_t satisfies the
positivity and Grammian bounds, so the semigroup decomposition assembles a
completely positive contraction cocycle.  Here the kernel is evaluated by
hand and then checked by the sampled verifiers.
"""
import numpy as np

from qscocycles import CocycleKernel, StepFunction, dephasing_generator, product_family
from qscocycles.kernels import cocycle_identity_defect, shift_restrict
from qscocycles.verify import SampleSpec, verify_theorem_Q

F = product_family(dephasing_generator(), [0, 1, 1j])
K = CocycleKernel(F)

# f is 1 on [0, 0.5) and i afterwards; g is 0 throughout
f = StepFunction([0.5], [[1]], [1j])
g = StepFunction.constant([0])
a = np.array([[1, 1], [1, 1]], dtype=complex)
print("factors over [0, 1.5):", K.factors(f, g, 1.5))
print("k^{f,g}_1.5(a) =")
print(np.round(K.eval(f, g, 1.5, a), 5))

# splitting [0, 2) at r = 0.7 gives the same answer
print("cocycle identity defect:", cocycle_identity_defect(K, f, g, 0.7, 1.3, a))
print("shifted f:", shift_restrict(f, 0.7))

rep = verify_theorem_Q(F, SampleSpec(n_max=3, trials=60))
print(rep.summary())
print("kernel is unital:", rep.properties["kernel_unital"])

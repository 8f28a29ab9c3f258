"""
A unital CP semigroup that is not a global semigroup
=====================================================

On Mat_2(C) take Phi([[a, b], [c, d]]) = [[d, 0], [0, a]] and Psi = Phi - id.
exp(t c Psi) is unital and completely positive for every t, and it even
sends the all-ones matrix to the 2 x 2 Grammian of T = {0, 1}.  Still it
mixes the diagonal, so it cannot act entrywise on blocks.
"""
import numpy as np

from qscocycles import counterexample_family, evolve, schur_action_defect
from qscocycles.verify import SampleSpec, normalisation_defect, verify_theorem_R

G, meta = counterexample_family(c=0.5)

# the all-ones matrix goes where a Grammian should
for t in (0.5, 1.0, 2.0):
    P = evolve(G, t)
    print(f"t = {t}:  P_t(box) =", np.round(P(np.ones((2, 2))).real, 5).tolist(),
          f" exp(-t/2) = {np.exp(-t / 2):.5f}")

# ... but the diagonal projection leaks into the other corner
P1 = evolve(G, 1.0)
print("P_1(p_0) =", np.round(P1(np.diag([1.0, 0.0])).real, 5).tolist())
print("Schur-action defect at t = 1:", round(schur_action_defect(P1, 2), 5))
print("normalisation defect at (0, 0), t = 1:", round(normalisation_defect(G, meta["T"], 1.0, 0, 0), 5))

# the verifier finds the same thing on its own
rep = verify_theorem_R(G, meta["T"], SampleSpec(trials=40))
print(rep.summary())
print("witness:", rep.check("normalisation").witness)

# doubling the rate doubles the decay of the off-diagonal entry
G1, _ = counterexample_family(c=1.0)
print("c = 1, t = 1 off-diagonal:", round(evolve(G1, 1.0)(np.ones((2, 2)))[0, 1].real, 5),
      " exp(-1) =", round(np.exp(-1), 5))

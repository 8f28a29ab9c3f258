"""Semigroup decompositions and characterisation checks for quantum stochastic cocycles."""
from .errors import *  # noqa: F401,F403
from .numcore import (DEFAULT_TOL, Tolerances, block_psd_factor, box, chi, expm, gram_matrix, herm_eig,
                      is_psd, min_eig, op_norm, psd_inv_sqrt, psd_sqrt, schur_product)
from .opspace import (OperatorSpace, SuperMap, Verdict, adjoint_map, amplify, choi, full_algebra,
                      ket_space, map_from_function, matrix_space, membership, operator_space,
                      schur_action_defect, tilde_map, tilde_system, unitise, extend_cp)
from .semigroups import (AssociatedFamily, Generator, OperatorFamily, contraction_scaled,
                         counterexample_family, dephasing_generator, evolve, global_generator,
                         global_semigroup, ket_family, lindblad_generator, product_family, schur_tuple,
                         tilde_family, trivial_family, trivial_operator_family, weyl_scalar_family)
from .kernels import (CocycleKernel, CoherentSpanElement, StepFunction, chi_path, cocycle_identity_defect,
                      eval_kernel, exp_gram, form_matrix, operator_kernel, pairing,
                      partition_invariance_defect, shift_restrict, span_norm_form, time_reverse,
                      weyl_apply, weyl_gram_identity_defect, weyl_kernel)
from .verify import (Report, SampleSpec, dichotomy_scan, verify_cstar_interval, verify_global_rank_one,
                     verify_left_contraction, verify_prop_PP, verify_theorem_Q, verify_theorem_R,
                     verify_theorem_S, verify_theorem_W)

__version__ = "0.1.0"

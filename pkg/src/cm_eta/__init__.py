"""Class polynomials for singular values of multiple eta-quotients."""

from .classpoly import ClassPolynomial, compute_class_poly, oracle_full_product
from .errors import CMEtaError
from .etaquot import EtaQuotientSpec, check_invariance, eval_w, make_spec
from .galois_plan import EvaluationPlan, atkin_lehner_plan, build_plan
from .mpc_eta import eta
from .qforms import QuadForm, class_group, n_system

__all__ = [
    "CMEtaError",
    "ClassPolynomial",
    "EtaQuotientSpec",
    "EvaluationPlan",
    "QuadForm",
    "atkin_lehner_plan",
    "build_plan",
    "check_invariance",
    "class_group",
    "compute_class_poly",
    "eta",
    "eval_w",
    "make_spec",
    "n_system",
    "oracle_full_product",
]

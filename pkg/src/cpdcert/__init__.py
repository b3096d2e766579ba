"""Uniqueness certificates for canonical polyadic decompositions of third-order tensors."""

__version__ = "0.1.0"

from .certify import (  # noqa: E402
    Conclusion,
    UniquenessCertificate,
    certify_overall,
    certify_third_factor,
    mode_rotate,
    replay,
)
from .combinatorics import CombinadicTable, MultiIndex, product_vector, rank as rank_index, unrank  # noqa: E402
from .compound import compound, compound_diag, khatri_rao_compound, phi_map  # noqa: E402
from .conditions import (  # noqa: E402
    ConditionVerdict,
    Status,
    check_Cm,
    check_Hm,
    check_Km,
    check_Um,
    check_Wm,
    h_profile,
    m_for_C,
)
from .errors import CpdCertError, DomainError, InternalError, ResourceError, combinatorial_cap  # noqa: E402
from .linalg import Matrix, k_rank, khatri_rao, kron, rank, vec  # noqa: E402
from .tensor import FactorTriple, Tensor3, build_tensor, match_factors, match_single_factor  # noqa: E402

__all__ = [
    "CombinadicTable", "Conclusion", "ConditionVerdict", "CpdCertError", "DomainError", "FactorTriple",
    "InternalError", "Matrix", "MultiIndex", "ResourceError", "Status", "Tensor3", "UniquenessCertificate",
    "__version__", "build_tensor", "certify_overall", "certify_third_factor", "check_Cm", "check_Hm", "check_Km",
    "check_Um", "check_Wm", "combinatorial_cap", "compound", "compound_diag", "h_profile", "k_rank",
    "khatri_rao", "khatri_rao_compound", "kron", "m_for_C", "match_factors", "match_single_factor",
    "mode_rotate", "phi_map", "product_vector", "rank", "rank_index", "replay", "unrank", "vec",
]

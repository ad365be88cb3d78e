"""Exact computations in mixed Tsirelson spaces T[(M_k, theta_k)]."""

from .foundations import (Constant, ExplicitList, FinVec, InvLinear, InvLogPow, PowerLaw, RatInterval,
                          envelope, rat, restrict, theta_at)
from .families import (AnK, ExplicitFinite, PairConsecutive, PairTailPow2, Schreier, Singletons, UnionOf,
                       admissible, contains, derivative, index)
from .spaces import AdmissibleSeq, FiniteMixed, tsirelson
from .norm import lambda_table, norm, norm_iterated, segment_sum_norm

__version__ = "0.1.0"

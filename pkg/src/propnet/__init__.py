"""Incentive-compatible transaction propagation for leader-first blockchains."""

from propnet.errors import DomainError
from propnet.fees import FeeParameters, FeeSchedule, fee_shares, share_of
from propnet.kernels import BACKEND

__all__ = ["BACKEND", "DomainError", "FeeParameters", "FeeSchedule", "fee_shares", "share_of"]
__version__ = "0.1.0"

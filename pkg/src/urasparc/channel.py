"""Block-fading MIMO channel simulation and power bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class ActivityVector:
    """Per-column received power ``gamma``; colliding users superpose."""

    gamma: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.gamma > 0)

    @property
    def K(self) -> int:
        return int(np.count_nonzero(self.gamma > 0))


@dataclass(frozen=True, eq=False)
class ReceivedBlock:
    Y: np.ndarray
    sigma2: float

    def __post_init__(self):
        if self.Y.ndim != 2:
            raise InvalidParameterError("received block must be a D x M matrix")
        if not self.sigma2 > 0:
            raise InvalidParameterError("noise variance must be positive")

    @property
    def D(self) -> int:
        return self.Y.shape[0]

    @property
    def M(self) -> int:
        return self.Y.shape[1]


def build_activity(section_indices, N) -> ActivityVector:
    """Turn ``(column, lsfc)`` pairs of the active users into an activity vector."""
    gamma = np.zeros(int(N))
    for k, g in section_indices:
        k = int(k)
        if not 0 <= k < N:
            raise InvalidParameterError(f"column index {k} outside [0, {N})")
        if not g > 0:
            raise InvalidParameterError("large-scale fading coefficients must be positive")
        gamma[k] += g
    return ActivityVector(gamma)


def complex_normal(rng, shape, var=1.0):
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = math.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_block(cb: Codebook, act: ActivityVector, M, sigma2, seed) -> ReceivedBlock:
    """Draw ``Y = A diag(sqrt(gamma)) H + Z`` for one coherence block.

    Only the active rows of ``H`` are drawn, so the cost is ``O(D K M)``.
    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    gamma = np.asarray(act.gamma, dtype=float)
    if gamma.shape != (cb.num_cols,):
        raise InvalidParameterError("activity vector length must match codebook width")
    if M < 1 or not sigma2 > 0:
        raise InvalidParameterError("need M >= 1 and sigma2 > 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    D = cb.num_rows
    supp = np.flatnonzero(gamma > 0)
    H = complex_normal(rng, (supp.size, M))
    Z = complex_normal(rng, (D, M), sigma2)
    Y = (cb.entries[:, supp] * np.sqrt(gamma[supp])) @ H + Z
    return ReceivedBlock(np.ascontiguousarray(Y), float(sigma2))


# ---------------------------------------------------------------------------
# power parameterizations

def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise InvalidParameterError(f"{k} must be positive, got {v}")


def ebn0_to_sigma2(ebn0_db, L, D, B, g=1.0) -> float:
    """Noise variance giving the requested per-user Eb/N0 (dB).

    ``Eb/N0 = L D g / (B sigma2)``.
    """
    _positive(L=L, D=D, B=B, g=g)
    if math.isinf(ebn0_db) and ebn0_db > 0:
        return 0.0
    return float(L * D * g / (B * 10.0 ** (ebn0_db / 10.0)))


def sigma2_to_ebn0(sigma2, L, D, B, g=1.0) -> float:
    _positive(sigma2=sigma2, L=L, D=D, B=B, g=g)
    return float(lin_to_db(L * D * g / (B * sigma2)))


def snr_to_sigma2(snr_db, g=1.0) -> float:
    """``SNR = g / sigma2``."""
    _positive(g=g)
    return float(g / 10.0 ** (snr_db / 10.0))


def sigma2_to_snr(sigma2, g=1.0) -> float:
    _positive(sigma2=sigma2, g=g)
    return float(lin_to_db(g / sigma2))


@dataclass(frozen=True)
class PowerSpec:
    ebn0_db: float
    snr_db: float
    g: float
    sigma2: float
    B: int
    L: int
    D: int

    @property
    def D_total(self) -> int:
        return self.L * self.D

    @property
    def R(self) -> float:
        return self.B / self.D_total

    @classmethod
    def from_ebn0(cls, ebn0_db, L, D, B, g=1.0) -> "PowerSpec":
        s2 = ebn0_to_sigma2(ebn0_db, L, D, B, g)
        return cls(float(ebn0_db), sigma2_to_snr(s2, g), g, s2, B, L, D)

    @classmethod
    def from_snr(cls, snr_db, L, D, B, g=1.0) -> "PowerSpec":
        s2 = snr_to_sigma2(snr_db, g)
        return cls(sigma2_to_ebn0(s2, L, D, B, g), float(snr_db), g, s2, B, L, D)

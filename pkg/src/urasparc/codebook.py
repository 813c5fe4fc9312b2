"""Common SPARC codebooks shared by every potential user.

All generators return a :class:`Codebook` whose ``D x N`` complex matrix has
columns of squared norm ``D``. Codebooks are immutable once built.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionsError


class CodebookKind(enum.IntEnum):
    SUBSAMPLED_FOURIER = 0
    SPHERE_UNIFORM = 1
    BERNOULLI = 2

    @classmethod
    def parse(cls, value) -> "CodebookKind":
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "fourier": cls.SUBSAMPLED_FOURIER,
            "subsampled_fourier": cls.SUBSAMPLED_FOURIER,
            "subsampledfourier": cls.SUBSAMPLED_FOURIER,
            "sphere": cls.SPHERE_UNIFORM,
            "sphere_uniform": cls.SPHERE_UNIFORM,
            "sphereuniform": cls.SPHERE_UNIFORM,
            "bernoulli": cls.BERNOULLI,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown codebook kind {value!r}") from None

    @property
    def label(self) -> str:
        return {0: "fourier", 1: "sphere", 2: "bernoulli"}[int(self)]


@dataclass(frozen=True)
class Codebook:
    """A ``D x N`` complex codebook matrix with metadata.

    ``entries`` is stored read-only; columns are the codewords ``a_k``.
    """

    entries: np.ndarray
    kind: CodebookKind
    seed: int

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.complex128, order="F", copy=True)
        if a.ndim != 2:
            raise InvalidDimensionsError("codebook entries must be a 2-D matrix")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "kind", CodebookKind.parse(self.kind))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def num_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def num_cols(self) -> int:
        return self.entries.shape[1]

    D = num_rows
    N = num_cols

    def column_norms_sq(self) -> np.ndarray:
        a = self.entries
        return (a.real**2 + a.imag**2).sum(axis=0)

    def is_real(self) -> bool:
        return not np.any(self.entries.imag)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _check_dims(D, N):
    if int(D) != D or int(N) != N or D < 1 or N < 1:
        raise InvalidDimensionsError(f"need positive integer dimensions, got D={D}, N={N}")
    return int(D), int(N)


def _rng(seed):
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def gen_subsampled_fourier(D, N, seed=0, rows=None) -> Codebook:
    """Column-normalized sub-sampled DFT codebook.

    ``D`` distinct rows of the ``N``-point DFT matrix are drawn uniformly
    without replacement and kept in ascending order. Entries have unit
    modulus, so every column has squared norm exactly ``D``.

    Parameters
    ----------
    D, N : int
        Number of rows (channel uses) and columns (codewords). ``N`` must be
        a power of two and ``D <= N``.
    seed : int
        Seed for the row selection.
    rows : sequence of int, optional
        Explicit row selection; overrides the random draw.
    """
    D, N = _check_dims(D, N)
    if not _is_power_of_two(N):
        raise InvalidDimensionsError(f"N={N} is not a power of two")
    if D > N:
        raise InvalidDimensionsError(f"D={D} exceeds N={N}")
    if rows is None:
        rows = np.sort(_rng(seed).choice(N, size=D, replace=False))
    else:
        rows = np.sort(np.asarray(rows, dtype=np.int64))
        if rows.size != D or np.unique(rows).size != D or rows.min() < 0 or rows.max() >= N:
            raise InvalidDimensionsError("explicit rows must be D distinct indices in [0, N)")
    # exact integer phase index keeps entries bit-reproducible
    phase = np.outer(rows.astype(np.int64), np.arange(N, dtype=np.int64)) % N
    entries = np.exp(-2j * np.pi * phase / N)
    return Codebook(entries, CodebookKind.SUBSAMPLED_FOURIER, seed)


def gen_sphere_uniform(D, N, seed=0) -> Codebook:
    """Columns drawn i.i.d. uniformly from the complex sphere of radius sqrt(D)."""
    D, N = _check_dims(D, N)
    rng = _rng(seed)
    g = rng.standard_normal((D, N)) + 1j * rng.standard_normal((D, N))
    g *= np.sqrt(D) / np.linalg.norm(g, axis=0)
    return Codebook(g, CodebookKind.SPHERE_UNIFORM, seed)


def gen_bernoulli(D, N, seed=0) -> Codebook:
    """Real +/-1 equiprobable entries, stored as complex."""
    D, N = _check_dims(D, N)
    signs = _rng(seed).integers(0, 2, size=(D, N)) * 2 - 1
    return Codebook(signs.astype(np.complex128), CodebookKind.BERNOULLI, seed)


_GENERATORS = {
    CodebookKind.SUBSAMPLED_FOURIER: gen_subsampled_fourier,
    CodebookKind.SPHERE_UNIFORM: gen_sphere_uniform,
    CodebookKind.BERNOULLI: gen_bernoulli,
}


def generate(kind, D, N, seed=0) -> Codebook:
    return _GENERATORS[CodebookKind.parse(kind)](D, N, seed)


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    argmax_pair: tuple
    bound_sphere: float
    bound_bernoulli: float
    extra: dict = field(default_factory=dict)


def sphere_coherence_bound(D, N) -> float:
    """High-probability coherence bound for sphere-uniform columns.

    Valid when ``8 log(DN) < D``; reported regardless for display.
    """
    return math.sqrt(32.0 * math.log(D * N) / D)


def bernoulli_coherence_bound(D, N, eps=0.05) -> float:
    """Coherence bound for +/-1 matrices holding with probability >= 1 - eps**2."""
    return 2.0 * math.sqrt(math.log(N / eps) / D)


def mutual_coherence(cb: Codebook, eps: float = 0.05, block: int = 1024) -> CoherenceReport:
    """Largest normalized inner product between two distinct columns.

    The Gram matrix is scanned in column blocks so full-size codebooks
    (N = 4096) never need the full ``N x N`` matrix in memory.
    """
    D, N = cb.entries.shape
    if N < 2:
        raise InvalidDimensionsError("mutual coherence needs at least two columns")
    a = cb.entries.real if cb.is_real() else cb.entries
    norms = np.sqrt(cb.column_norms_sq())
    an = a / norms
    best, pair = -1.0, (0, 1)
    for start in range(0, N, block):
        stop = min(start + block, N)
        g = np.abs(an[:, start:stop].conj().T @ an)
        # mask self and lower pairs so each unordered pair is seen once
        rows = np.arange(start, stop)[:, None]
        g[np.arange(N)[None, :] <= rows] = -1.0
        idx = int(np.argmax(g))
        r, c = divmod(idx, N)
        if g[r, c] > best:
            best, pair = float(g[r, c]), (start + r, c)
    return CoherenceReport(
        mu=min(max(best, 0.0), 1.0),
        argmax_pair=pair,
        bound_sphere=sphere_coherence_bound(D, N),
        bound_bernoulli=bernoulli_coherence_bound(D, N, eps),
    )

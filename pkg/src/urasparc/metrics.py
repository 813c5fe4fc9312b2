"""Per-user probability of error (miss detections plus false alarms)."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidParameterError


@dataclass(frozen=True)
class DecodingReport:
    decoded: frozenset
    truth: frozenset
    p_md: float
    p_fa: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def p_e(self) -> float:
        return self.p_md + self.p_fa

    @property
    def hits(self) -> int:
        return len(self.decoded & self.truth)


def pupe(decoded, truth, **diagnostics) -> DecodingReport:
    """Plug-in PUPE for one trial.

    ``p_md = 1 - |decoded & truth| / K`` and
    ``p_fa = |decoded - truth| / |decoded|``, with ``p_fa = 0`` for an empty
    decoded set. Only set contents matter; order and multiplicity do not.
    """
    decoded, truth = frozenset(decoded), frozenset(truth)
    if not truth:
        raise InvalidParameterError("the set of transmitted messages is empty")
    hits = len(decoded & truth)
    p_md = 1.0 - hits / len(truth)
    p_fa = (len(decoded) - hits) / len(decoded) if decoded else 0.0
    return DecodingReport(decoded, truth, p_md, p_fa, dict(diagnostics))

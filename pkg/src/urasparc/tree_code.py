"""Outer tree code: parity-linked sections and list stitching.

Bit conventions
---------------
A message is a ``B``-bit string, most significant bit first. Section ``l``
carries its ``b_l`` info bits followed by ``p_l`` parity bits, read MSB first
into an integer ``pi_l`` in ``[0, 2**J)``. Parity bits of section ``l`` are
``G_l @ v mod 2`` where ``v`` holds the first ``m_l = b_1 + ... + b_{l-1}``
info bits of the message.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidAllocationError


@dataclass(frozen=True, eq=False)
class TreeCodeConfig:
    B: int
    L: int
    J: int
    info_bits: tuple
    parity_bits: tuple
    parity_matrices: tuple  # G_1 (empty), G_2, ..., G_L as uint8 arrays
    seed: int = 0

    def __post_init__(self):
        info = tuple(int(b) for b in self.info_bits)
        par = tuple(int(p) for p in self.parity_bits)
        if len(info) != self.L or len(par) != self.L:
            raise InvalidAllocationError("need one info/parity count per section")
        if any(b + p != self.J for b, p in zip(info, par)):
            raise InvalidAllocationError("b_l + p_l must equal J in every section")
        if par[0] != 0:
            raise InvalidAllocationError("the first section carries no parity")
        if any(p < 0 or p > self.J for p in par):
            raise InvalidAllocationError("parity counts must lie in [0, J]")
        if sum(info) != self.B:
            raise InvalidAllocationError(f"info bits sum to {sum(info)}, expected B={self.B}")
        mats = [np.asarray(g, dtype=np.uint8) for g in self.parity_matrices]
        if len(mats) == self.L - 1:
            mats = [np.zeros((0, 0), dtype=np.uint8)] + mats
        if len(mats) != self.L:
            raise InvalidAllocationError("need L - 1 parity matrices")
        m = 0
        for l, (g, p) in enumerate(zip(mats, par)):
            if l > 0 and g.shape != (p, m):
                raise InvalidAllocationError(
                    f"G_{l + 1} has shape {g.shape}, expected {(p, m)}")
            if np.any(g > 1):
                raise InvalidAllocationError("parity matrices must be binary")
            g.setflags(write=False)
            m += info[l]
        object.__setattr__(self, "info_bits", info)
        object.__setattr__(self, "parity_bits", par)
        object.__setattr__(self, "parity_matrices", tuple(mats))

    @property
    def rate(self) -> float:
        return self.B / (self.L * self.J)

    @property
    def total_parity(self) -> int:
        return sum(self.parity_bits)

    def prefix_lengths(self):
        """``m_l`` for every section: info bits preceding section ``l``."""
        out, m = [], 0
        for b in self.info_bits:
            out.append(m)
            m += b
        return out

    def to_json(self) -> str:
        return json.dumps({"B": self.B, "L": self.L, "J": self.J,
                           "parity_alloc": list(self.parity_bits), "seed": self.seed})

    @classmethod
    def from_json(cls, text) -> "TreeCodeConfig":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        return make_tree_config(d["B"], d["L"], d["J"], d["parity_alloc"], d.get("seed", 0))


def make_tree_config(B, L, J, parity_alloc, seed=0) -> TreeCodeConfig:
    """Build a tree code whose parity matrices are fair-coin draws from ``seed``."""
    parity_alloc = [int(p) for p in parity_alloc]
    if len(parity_alloc) != L:
        raise InvalidAllocationError(f"parity allocation has {len(parity_alloc)} entries, L={L}")
    if parity_alloc[0] != 0:
        raise InvalidAllocationError("p_1 must be 0")
    if any(p < 0 or p > J for p in parity_alloc):
        raise InvalidAllocationError("each p_l must lie in [0, J]")
    info = [J - p for p in parity_alloc]
    if sum(info) != B:
        raise InvalidAllocationError(f"allocation carries {sum(info)} info bits, B={B}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    mats, m = [], info[0]
    for l in range(1, L):
        mats.append(rng.integers(0, 2, size=(parity_alloc[l], m), dtype=np.uint8))
        m += info[l]
    return TreeCodeConfig(B, L, J, info, parity_alloc, tuple(mats), int(seed))


def single_section_config(J) -> TreeCodeConfig:
    """Degenerate ``L = 1`` code: the message is the column index itself."""
    return make_tree_config(J, 1, J, [0], 0)


@dataclass(frozen=True)
class MessageTuple:
    info: str
    sections: tuple


# ---------------------------------------------------------------------------
# integer helpers; bit 0 of a string is the MSB of the integer

def bits_to_int(bits) -> int:
    if isinstance(bits, str):
        return int(bits, 2) if bits else 0
    v = 0
    for b in bits:
        v = (v << 1) | (int(b) & 1)
    return v


def int_to_bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


class _ParityTable:
    """Parity matrices packed as integer row masks over the info prefix."""

    def __init__(self, cfg: TreeCodeConfig):
        self.cfg = cfg
        self.m = cfg.prefix_lengths()
        self.rows = []
        for l, g in enumerate(cfg.parity_matrices):
            masks = [bits_to_int(row) for row in g] if l > 0 else []
            self.rows.append(masks)

    def parity(self, l: int, prefix: int) -> int:
        """Parity value of section ``l`` for an ``m_l``-bit info prefix."""
        p = 0
        for mask in self.rows[l]:
            p = (p << 1) | ((mask & prefix).bit_count() & 1)
        return p


def _table(cfg) -> _ParityTable:
    t = cfg.__dict__.get("_parity_table")
    if t is None:
        t = _ParityTable(cfg)
        object.__setattr__(cfg, "_parity_table", t)
    return t


def encode_int(info: int, cfg: TreeCodeConfig) -> tuple:
    """Section indices for a message given as a ``B``-bit integer."""
    tab = _table(cfg)
    out, consumed = [], 0
    for l, (b, p) in enumerate(zip(cfg.info_bits, cfg.parity_bits)):
        chunk = (info >> (cfg.B - consumed - b)) & ((1 << b) - 1) if b else 0
        prefix = info >> (cfg.B - consumed) if consumed else 0
        out.append((chunk << p) | tab.parity(l, prefix))
        consumed += b
    return tuple(out)


def tree_encode(info, cfg: TreeCodeConfig) -> MessageTuple:
    """Encode one ``B``-bit message (string or bit sequence) into ``L`` sections."""
    if isinstance(info, str):
        bits = info
    else:
        bits = "".join(str(int(b) & 1) for b in info)
    if len(bits) != cfg.B or set(bits) - {"0", "1"}:
        raise ValueError(f"message must be {cfg.B} binary digits")
    return MessageTuple(bits, encode_int(bits_to_int(bits), cfg))


def tree_decode_int(lists, cfg: TreeCodeConfig, max_out=None) -> list:
    """Stitch per-section candidate lists into messages (integer form).

    Depth-first over sections with parity pruning. Candidates are visited in
    list order so surviving paths come out in lexicographic path order.
    """
    if len(lists) != cfg.L:
        raise ValueError(f"expected {cfg.L} section lists, got {len(lists)}")
    tab = _table(cfg)
    # per section: parity value -> [info chunk, ...] in list order
    buckets = []
    for l, cand in enumerate(lists):
        p = cfg.parity_bits[l]
        pmask = (1 << p) - 1
        d: dict = {}
        seen = set()
        for c in cand:
            c = int(c)
            if c in seen:
                continue
            seen.add(c)
            d.setdefault(c & pmask, []).append(c >> p)
        buckets.append(d)

    out, emitted = [], set()
    limit = float("inf") if max_out is None else int(max_out)
    if limit <= 0:
        return out
    L = cfg.L
    info_bits = cfg.info_bits
    # stack of (section, prefix); children pushed reversed to keep list order
    stack = [(0, 0)]
    while stack:
        l, prefix = stack.pop()
        if l == L:
            if prefix not in emitted:
                emitted.add(prefix)
                out.append(prefix)
                if len(out) >= limit:
                    break
            continue
        chunks = buckets[l].get(tab.parity(l, prefix))
        if not chunks:
            continue
        b = info_bits[l]
        for chunk in reversed(chunks):
            stack.append((l + 1, (prefix << b) | chunk))
    return out


def tree_decode(lists, cfg: TreeCodeConfig, max_out=None) -> list:
    """Recover info-bit strings whose every section appears in ``lists``.

    Parameters
    ----------
    lists : sequence of sequences of int
        Candidate section indices, one list per section.
    cfg : TreeCodeConfig
    max_out : int, optional
        Cap on the number of returned messages (the list size ``T``).

    Returns
    -------
    list of str
        Distinct messages in lexicographic path order.
    """
    return [int_to_bits(v, cfg.B) for v in tree_decode_int(lists, cfg, max_out)]

"""Monte Carlo experiment harness for the concatenated SPARC + tree-code pipeline.

One trial draws ``K`` distinct ``B``-bit messages, tree-encodes them, sends
every section through an independently faded block, decodes each block with
every configured inner decoder, stitches the per-section lists with the tree
decoder and scores the result with PUPE. All decoders of a trial see the same
blocks, so decoder comparisons are paired.

Random streams
--------------
Every stream is a ``SeedSequence(master_seed, spawn_key=...)`` child:

=====================  ============================
``(0, trial)``         message draw
``(1, trial, l)``      fading and noise of section ``l``
``(2, trial, l)``      coordinate order of the decoders in section ``l``
=====================  ============================

Grid points reuse the streams of a trial (common random numbers), which keeps
curves across a sweep smooth without biasing any single point.

Output
------
The result table is written as CSV with the fixed column order
:data:`CSV_COLUMNS`. It holds only deterministic quantities, so the same
configuration and master seed reproduce it byte for byte. Wall-clock decode
times go to a sidecar ``<stem>.timing.csv`` with columns :data:`TIMING_COLUMNS`.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .channel import (build_activity, ebn0_to_sigma2, sigma2_to_ebn0, sigma2_to_snr,
                      simulate_block, snr_to_sigma2)
from .codebook import CodebookKind, generate
from .decoders import DECODERS, DecoderConfig, decode, select_top
from .errors import ConfigError, TableParseError
from .metrics import pupe
from .tree_code import encode_int, make_tree_config, tree_decode_int

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "name", "grid_index", "trial", "decoder", "rho", "codebook", "D", "J", "N",
    "L", "B", "K", "T", "M", "ebn0_db", "snr_db", "sigma2",
    "p_md", "p_fa", "p_e", "n_decoded", "n_hits",
    "screen_size_mean", "sweeps_mean", "rebuilds",
)
TIMING_COLUMNS = ("name", "grid_index", "trial", "decoder", "K", "J", "M", "ebn0_db",
                  "decode_seconds", "seconds_per_section")

_INT_COLUMNS = {"grid_index", "trial", "D", "J", "N", "L", "B", "K", "T", "M",
                "n_decoded", "n_hits", "rebuilds"}
_STR_COLUMNS = {"name", "decoder", "codebook"}


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class DecoderSpec:
    name: str
    rho: float = 1.0
    k_hat: int | None = None
    alpha: float = 1.0
    max_sweeps: int = 15
    tol: float = 1e-6

    def config(self, k_hat_default, seed) -> DecoderConfig:
        return DecoderConfig(rho=self.rho, k_hat=self.k_hat or k_hat_default, alpha=self.alpha,
                             max_sweeps=self.max_sweeps, tol=self.tol, seed=seed)


def _as_tuple(x, cast):
    if x is None:
        return None
    if isinstance(x, (list, tuple)):
        return tuple(cast(v) for v in x)
    return (cast(x),)


@dataclass(frozen=True)
class ExperimentConfig:
    """Experiment description; ``K``, ``M``, ``J`` and the power axis may be grids.

    The inner-code sections are a tree code with ``L`` sections of ``J`` bits
    when ``parity_alloc`` is given; otherwise a single uncoded section with
    ``B = J``.
    """

    name: str
    D: int
    J: tuple
    K: tuple
    M: tuple
    trials: int
    decoders: tuple
    ebn0_db: tuple | None = None
    snr_db: tuple | None = None
    codebook_kind: str = "fourier"
    codebook_seed: int = 0
    B: int | None = None
    L: int = 1
    parity_alloc: tuple | None = None
    tree_seed: int = 0
    K_delta: int = 0
    lsfc: float = 1.0
    master_seed: int = 0
    output: str | None = None
    workers: int | None = None

    def __post_init__(self):
        for name in ("J", "K", "M", "ebn0_db", "snr_db", "parity_alloc"):
            cast = float if name in ("ebn0_db", "snr_db") else int
            object.__setattr__(self, name, _as_tuple(getattr(self, name), cast))
        decs = tuple(d if isinstance(d, DecoderSpec) else DecoderSpec(**d) for d in self.decoders)
        object.__setattr__(self, "decoders", decs)
        if self.B is None and self.parity_alloc is None and len(self.J) == 1:
            object.__setattr__(self, "B", self.J[0])
        self.validate()

    # -- invariants --------------------------------------------------------
    def validate(self):
        err = []
        for name in ("J", "K", "M"):
            if not getattr(self, name):
                err.append(f"{name} grid is empty")
        if (self.ebn0_db is None) == (self.snr_db is None):
            err.append("give exactly one of ebn0_db and snr_db")
        elif not self.power_grid:
            err.append("power grid is empty")
        elif not all(math.isfinite(x) for x in self.power_grid):
            err.append("power grid entries must be finite")
        if self.trials < 1:
            err.append("trials must be at least 1")
        if self.D < 1:
            err.append("D must be positive")
        if any(m < 1 for m in self.M):
            err.append("M must be positive")
        if any(k < 1 for k in self.K):
            err.append("K must be positive")
        if self.K_delta < 0:
            err.append("K_delta must be nonnegative")
        if not self.lsfc > 0:
            err.append("lsfc must be positive")
        if not self.decoders:
            err.append("no decoders configured")
        for d in self.decoders:
            if d.name not in DECODERS:
                err.append(f"unknown decoder {d.name!r}")
        try:
            CodebookKind.parse(self.codebook_kind)
        except ValueError as e:
            err.append(str(e))
        if self.parity_alloc is None:
            if self.L != 1:
                err.append("L > 1 needs a parity allocation")
            if len(self.J) > 1 and self.B is not None:
                err.append("a J grid is only supported for uncoded single sections")
            elif self.B is not None and self.B != self.J[0]:
                err.append("single-section runs need B = J")
        else:
            if len(self.J) != 1:
                err.append("a J grid cannot be combined with a tree code")
            elif self.B is None:
                err.append("tree code needs B")
            else:
                try:
                    self.tree(self.J[0])
                except ValueError as e:
                    err.append(str(e))
        if not err:
            for J in self.J:
                N = 2**J
                B = self.bits(J)
                for K in self.K:
                    if K + self.K_delta > N:
                        err.append(f"T = {K + self.K_delta} exceeds N = {N}")
                    if B < 63 and K > 2**B:
                        err.append(f"cannot draw {K} distinct {B}-bit messages")
                for d in self.decoders:
                    if d.k_hat is not None and d.k_hat > N:
                        err.append(f"k_hat = {d.k_hat} exceeds N = {N}")
        if err:
            raise ConfigError("; ".join(err))

    # -- derived ------------------------------------------------------------
    @property
    def power_grid(self) -> tuple:
        return self.ebn0_db if self.ebn0_db is not None else self.snr_db

    @property
    def power_axis(self) -> str:
        return "ebn0_db" if self.ebn0_db is not None else "snr_db"

    def bits(self, J) -> int:
        return self.B if self.parity_alloc is not None else J

    def tree(self, J):
        if self.parity_alloc is None:
            return make_tree_config(J, 1, J, [0], self.tree_seed)
        return make_tree_config(self.B, self.L, J, list(self.parity_alloc), self.tree_seed)

    @property
    def D_total(self) -> int:
        return self.L * self.D

    def grid(self) -> list:
        """Grid points ``(J, K, M, power)`` in a fixed order."""
        return list(itertools.product(self.J, self.K, self.M, self.power_grid))

    def sigma2(self, J, power) -> float:
        if self.ebn0_db is not None:
            return ebn0_to_sigma2(power, self.L, self.D, self.bits(J), self.lsfc)
        return snr_to_sigma2(power, self.lsfc)

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "codebook": {"kind": self.codebook_kind, "D": self.D, "J": list(self.J),
                         "seed": self.codebook_seed},
            "K": list(self.K), "K_delta": self.K_delta, "M": list(self.M),
            "lsfc": self.lsfc,
            "decoders": [asdict(x) for x in self.decoders],
            "trials": self.trials, "master_seed": self.master_seed,
            "output": self.output, "workers": self.workers,
        }
        d[self.power_axis] = list(self.power_grid)
        if self.parity_alloc is not None:
            d["tree"] = {"B": self.B, "L": self.L, "parity_alloc": list(self.parity_alloc),
                         "seed": self.tree_seed}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        version = d.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
        try:
            cb = d.pop("codebook")
            tree = d.pop("tree", None) or {}
            kw = dict(
                name=d.pop("name", "experiment"),
                codebook_kind=cb.get("kind", "fourier"), D=int(cb["D"]), J=cb["J"],
                codebook_seed=int(cb.get("seed", 0)),
                K=d.pop("K"), M=d.pop("M"), trials=int(d.pop("trials")),
                decoders=d.pop("decoders"),
            )
        except KeyError as e:
            raise ConfigError(f"missing config field {e.args[0]!r}") from None
        if tree:
            kw.update(B=int(tree["B"]), L=int(tree["L"]), parity_alloc=tree["parity_alloc"],
                      tree_seed=int(tree.get("seed", 0)))
        for key in ("ebn0_db", "snr_db", "K_delta", "lsfc", "master_seed", "output", "workers"):
            if key in d:
                kw[key] = d.pop(key)
        if d:
            raise ConfigError(f"unknown config fields: {sorted(d)}")
        try:
            return cls(**kw)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# random streams

STREAM_MESSAGES, STREAM_CHANNEL, STREAM_DECODER = 0, 1, 2


def stream(master_seed, kind, trial, section=None) -> np.random.SeedSequence:
    key = (kind, trial) if section is None else (kind, trial, section)
    return np.random.SeedSequence(int(master_seed), spawn_key=key)


def decoder_seed(master_seed, trial, section) -> int:
    return int(stream(master_seed, STREAM_DECODER, trial, section).generate_state(1, np.uint64)[0])


def draw_messages(rng, K, B) -> list:
    """``K`` distinct uniform ``B``-bit integers, in draw order."""
    nbytes = (B + 7) // 8
    shift = 8 * nbytes - B
    seen, out = set(), []
    while len(out) < K:
        v = int.from_bytes(rng.bytes(nbytes), "big") >> shift
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


# ---------------------------------------------------------------------------
# results

@dataclass
class ResultRow:
    name: str
    grid_index: int
    trial: int
    decoder: str
    rho: float
    codebook: str
    D: int
    J: int
    N: int
    L: int
    B: int
    K: int
    T: int
    M: int
    ebn0_db: float
    snr_db: float
    sigma2: float
    p_md: float
    p_fa: float
    p_e: float
    n_decoded: int
    n_hits: int
    screen_size_mean: float | None
    sweeps_mean: float
    rebuilds: int
    section_seconds: list = field(default_factory=list)

    @property
    def decode_seconds(self) -> float:
        return float(sum(self.section_seconds))

    def csv_values(self) -> list:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]

    def timing_values(self) -> list:
        per = self.decode_seconds / max(len(self.section_seconds), 1)
        vals = [self.name, self.grid_index, self.trial, self.decoder, self.K, self.J, self.M,
                self.ebn0_db, self.decode_seconds, per]
        return [_fmt(v) for v in vals]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = round(float(v), 12)
        return repr(x + 0.0)
    return str(v)


@lru_cache(maxsize=8)
def _codebook(kind, D, J, seed):
    return generate(kind, D, 2**J, seed)


@lru_cache(maxsize=8)
def _tree(cfg_json, J):
    return ExperimentConfig.from_dict(json.loads(cfg_json)).tree(J)


def run_trial(cfg: ExperimentConfig, grid_index, trial, _tree_cfg=None) -> list:
    """Run one trial at one grid point; one :class:`ResultRow` per decoder."""
    J, K, M, power = cfg.grid()[grid_index]
    N, B, L = 2**J, cfg.bits(J), cfg.L
    T = K + cfg.K_delta
    tree = _tree_cfg or cfg.tree(J)
    cb = _codebook(cfg.codebook_kind, cfg.D, J, cfg.codebook_seed)
    sigma2 = cfg.sigma2(J, power)
    snr_db = sigma2_to_snr(sigma2, cfg.lsfc)
    ebn0_db = sigma2_to_ebn0(sigma2, L, cfg.D, B, cfg.lsfc)

    msg_rng = np.random.default_rng(stream(cfg.master_seed, STREAM_MESSAGES, trial))
    messages = draw_messages(msg_rng, K, B)
    codewords = [encode_int(m, tree) for m in messages]

    ndec = len(cfg.decoders)
    lists = [[] for _ in range(ndec)]
    seconds = [[] for _ in range(ndec)]
    screens = [[] for _ in range(ndec)]
    sweeps = [[] for _ in range(ndec)]
    rebuilds = [0] * ndec
    for l in range(L):
        act = build_activity([(c[l], cfg.lsfc) for c in codewords], N)
        blk = simulate_block(cb, act, M, sigma2, stream(cfg.master_seed, STREAM_CHANNEL, trial, l))
        seed = decoder_seed(cfg.master_seed, trial, l)
        for i, spec in enumerate(cfg.decoders):
            dcfg = spec.config(T, seed)
            t0 = time.perf_counter()
            est = decode(spec.name, cb, blk, sigma2, dcfg)
            seconds[i].append(time.perf_counter() - t0)
            lists[i].append(select_top(est, T))
            sweeps[i].append(est.sweeps_used)
            rebuilds[i] += est.diagnostics.get("rebuilds", 0)
            if "screen_size" in est.diagnostics:
                screens[i].append(est.diagnostics["screen_size"])

    rows = []
    for i, spec in enumerate(cfg.decoders):
        decoded = tree_decode_int(lists[i], tree, max_out=T)
        rep = pupe(decoded, messages)
        rows.append(ResultRow(
            name=cfg.name, grid_index=grid_index, trial=trial, decoder=spec.name,
            rho=spec.rho, codebook=CodebookKind.parse(cfg.codebook_kind).label,
            D=cfg.D, J=J, N=N, L=L, B=B, K=K, T=T, M=M, ebn0_db=ebn0_db, snr_db=snr_db,
            sigma2=sigma2, p_md=rep.p_md, p_fa=rep.p_fa, p_e=rep.p_e,
            n_decoded=len(rep.decoded), n_hits=rep.hits,
            screen_size_mean=float(np.mean(screens[i])) if screens[i] else None,
            sweeps_mean=float(np.mean(sweeps[i])), rebuilds=rebuilds[i],
            section_seconds=seconds[i],
        ))
    return rows


def _run_task(args):
    cfg_json, grid_index, trial = args
    cfg = ExperimentConfig.from_dict(json.loads(cfg_json))
    return run_trial(cfg, grid_index, trial, _tree(cfg_json, cfg.grid()[grid_index][0]))


def worker_count(cfg: ExperimentConfig) -> int:
    env = os.environ.get("URA_WORKERS")
    cap = max(int(env), 1) if env else None
    n = cfg.workers or cap or 1
    return max(min(n, cap) if cap else n, 1)


def run_experiment(cfg: ExperimentConfig, progress=True) -> list:
    """Run every (grid point, trial) pair; returns rows ordered by (trial, grid index, decoder).

    Rows are written to ``cfg.output`` (plus the timing sidecar) when set.
    """
    grid = cfg.grid()
    tasks = [(g, t) for t in range(cfg.trials) for g in range(len(grid))]
    workers = worker_count(cfg)
    log.info("%s: %d grid points x %d trials, %d worker(s)", cfg.name, len(grid), cfg.trials, workers)
    rows = []
    started = time.perf_counter()
    if workers == 1:
        trees = {J: cfg.tree(J) for J in cfg.J}
        for n, (g, t) in enumerate(tasks, 1):
            rows.extend(run_trial(cfg, g, t, trees[grid[g][0]]))
            if progress and n % max(len(tasks) // 20, 1) == 0:
                log.info("%s: %d/%d tasks, %.0f s", cfg.name, n, len(tasks),
                         time.perf_counter() - started)
    else:
        payload = json.dumps(cfg.to_dict())
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_run_task, [(payload, g, t) for g, t in tasks], chunksize=1):
                rows.extend(chunk)
    order = {d.name: i for i, d in enumerate(cfg.decoders)}
    rows.sort(key=lambda r: (r.trial, r.grid_index, order[r.decoder]))
    if cfg.output:
        write_results(rows, cfg.output)
    return rows


# ---------------------------------------------------------------------------
# table I/O

def timing_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".timing.csv")


def _write_csv(path, header, records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(records)
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as f:
        f.write(buf.getvalue())
    os.replace(tmp, path)


def write_results(rows, path):
    _write_csv(path, CSV_COLUMNS, [r.csv_values() for r in rows])
    _write_csv(timing_path(path), TIMING_COLUMNS, [r.timing_values() for r in rows])


def _parse_value(col, text, line):
    if col in _STR_COLUMNS:
        return text
    if text == "":
        return None
    try:
        return int(text) if col in _INT_COLUMNS else float(text)
    except ValueError:
        raise TableParseError(f"column {col!r}: cannot parse {text!r}", line) from None


def read_table(path, required=CSV_COLUMNS) -> list:
    """Parse a result (or timing) CSV into dicts with typed values."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise TableParseError("empty file, no header row", 1) from None
        except csv.Error as e:
            raise TableParseError(str(e), 1) from None
        missing = [c for c in required if c not in header]
        if missing:
            raise TableParseError(f"header lacks columns {missing}", 1)
        out = []
        try:
            for rec in reader:
                line = reader.line_num
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise TableParseError(
                        f"expected {len(header)} fields, found {len(rec)}", line)
                out.append({c: _parse_value(c, v, line) for c, v in zip(header, rec)})
        except csv.Error as e:
            raise TableParseError(str(e), reader.line_num) from None
    return out


# ---------------------------------------------------------------------------
# summaries

GROUP_KEYS = ("decoder", "rho", "J", "K", "M", "ebn0_db", "snr_db")


def summarize(rows) -> list:
    """Mean PUPE components per grid point and decoder, in first-seen order."""
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[k] if isinstance(r, dict) else getattr(r, k)
                                for k in GROUP_KEYS), []).append(r)
    out = []
    for key, rs in groups.items():
        get = (lambda r, c: r[c]) if isinstance(rs[0], dict) else getattr
        rec = dict(zip(GROUP_KEYS, key))
        rec["trials"] = len(rs)
        for c in ("p_md", "p_fa", "p_e"):
            rec[c] = float(np.mean([get(r, c) for r in rs]))
        out.append(rec)
    return out


def mean_times(timing_rows) -> dict:
    """Mean decode seconds per trial keyed by ``(decoder, J, K, M, ebn0_db)``."""
    acc = {}
    for r in timing_rows:
        acc.setdefault((r["decoder"], r["J"], r["K"], r["M"], r["ebn0_db"]), []).append(
            r["decode_seconds"])
    return {k: float(np.mean(v)) for k, v in acc.items()}


NOT_ACHIEVED = None


def min_ebn0_for_target(rows, target_pe=0.05) -> dict:
    """Smallest grid Eb/N0 whose mean PUPE is at most ``target_pe``.

    Returns a dict keyed by ``(decoder, rho, J, K, M)``; the value is the
    Eb/N0 in dB, or :data:`NOT_ACHIEVED` (``None``) when no grid point
    reaches the target.
    """
    best = {}
    for rec in summarize(rows):
        key = (rec["decoder"], rec["rho"], rec["J"], rec["K"], rec["M"])
        best.setdefault(key, NOT_ACHIEVED)
        # trial means are ratios of small integers; absorb summation round-off
        if rec["p_e"] <= target_pe + 1e-12:
            cur = best[key]
            if cur is None or rec["ebn0_db"] < cur:
                best[key] = rec["ebn0_db"]
    return best

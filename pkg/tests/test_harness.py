import json
import time
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from urasparc import harness
from urasparc.channel import build_activity, simulate_block
from urasparc.codebook import gen_subsampled_fourier
from urasparc.decoders import accml, select_top, DecoderConfig
from urasparc.errors import ConfigError, TableParseError
from urasparc.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    STREAM_CHANNEL,
    STREAM_DECODER,
    STREAM_MESSAGES,
    decoder_seed,
    draw_messages,
    min_ebn0_for_target,
    read_table,
    run_experiment,
    stream,
    timing_path,
)
from urasparc.metrics import pupe
from urasparc.plots import emit_plots
from urasparc.presets import FIG3B_PARITY, PRESET_NAMES, preset, preset_dict
from urasparc.tree_code import encode_int, tree_decode_int


def small_dict(**kw):
    d = {
        "schema_version": 1, "name": "small",
        "codebook": {"kind": "fourier", "D": 16, "J": 6, "seed": 3},
        "K": 5, "K_delta": 0, "M": [8, 16], "snr_db": [0.0, 10.0],
        "decoders": [{"name": "accml", "rho": 1.0}, {"name": "ml"}, {"name": "one_step_iht"}],
        "trials": 3, "master_seed": 9,
    }
    d.update(kw)
    return d


def small(**kw):
    return ExperimentConfig.from_dict(small_dict(**kw))


# ---------------------------------------------------------------------------
# configuration

@pytest.mark.parametrize("kw,msg", [
    ({"M": []}, "M grid is empty"),
    ({"K": 100}, "exceeds N"),
    ({"trials": 0}, "trials"),
    ({"ebn0_db": [0.0]}, "exactly one"),
    ({"snr_db": [float("nan")]}, "finite"),
    ({"decoders": [{"name": "amp"}]}, "unknown decoder"),
    ({"decoders": [{"name": "ml", "k_hat": 65}]}, "k_hat"),
    ({"colour": "red"}, "unknown config fields"),
    ({"schema_version": 7}, "schema_version"),
    ({"tree": {"B": 10, "L": 2, "parity_alloc": [0, 3]}}, "B"),
])
def test_config_errors(kw, msg):
    with pytest.raises(ConfigError, match=msg):
        small(**kw)


def test_config_error_lists_every_problem():
    with pytest.raises(ConfigError) as e:
        small(trials=0, M=[])
    assert "trials" in str(e.value) and "M grid" in str(e.value)


def test_config_json_round_trip(tmp_path):
    cfg = preset("fig3b")
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    assert ExperimentConfig.load(p) == cfg


def test_fig3b_preset_verbatim():
    cfg = preset("fig3b")
    assert cfg.K == (50, 75, 100, 125, 150) and cfg.M == (64,)
    assert cfg.D == 120 and cfg.D_total == 1440
    assert (cfg.B, cfg.L, cfg.J) == (50, 12, (12,))
    assert list(cfg.parity_alloc) == [0, 7, 8, 8, 8, 8, 8, 8, 8, 8, 11, 12] == FIG3B_PARITY
    assert cfg.K_delta == 50
    assert cfg.decoders[0].name == "accml" and cfg.decoders[0].rho == 1.05
    assert {d.name for d in cfg.decoders} == {"accml", "ml"}


def test_all_presets_valid():
    for name in PRESET_NAMES:
        assert preset_dict(name)["schema_version"] == 1
        preset(name)
    with pytest.raises(ConfigError):
        preset("fig9")


def test_sigma2_from_ebn0():
    cfg = preset("fig3b")
    assert cfg.sigma2(12, 0.0) == pytest.approx(28.8)


# ---------------------------------------------------------------------------
# random streams

def test_stream_collision_scan():
    seen = set()
    total = 0
    for t in range(1000):
        keys = [(STREAM_MESSAGES, t, None)] + [(k, t, l) for k in (STREAM_CHANNEL, STREAM_DECODER)
                                               for l in range(12)]
        for kind, trial, sec in keys:
            bg = np.random.PCG64(stream(7, kind, trial, sec))
            v = bg.random_raw(40)
            seen.update(v.tolist())
            total += v.size
    assert total == 1_000_000
    assert len(seen) == total


def test_decoder_seeds_distinct():
    seeds = {decoder_seed(0, t, l) for t in range(200) for l in range(12)}
    assert len(seeds) == 2400


def test_draw_messages_distinct_in_range():
    rng = np.random.default_rng(0)
    m = draw_messages(rng, 200, 8)
    assert len(set(m)) == 200 and max(m) < 256
    m = draw_messages(np.random.default_rng(1), 16, 50)
    assert max(m) < 2**50 and max(m) > 2**40


# ---------------------------------------------------------------------------
# pipeline

def test_sanity_pipeline():
    cfg = preset("sanity")
    rows = run_experiment(cfg, progress=False)
    assert len(rows) == cfg.trials
    tree = cfg.tree(8)
    cb = gen_subsampled_fourier(32, 256, 0)
    for row in rows:
        t = row.trial
        msgs = draw_messages(np.random.default_rng(stream(1, STREAM_MESSAGES, t)), 4, 20)
        codes = [encode_int(m, tree) for m in msgs]
        lists = []
        for l in range(4):
            act = build_activity([(c[l], 1.0) for c in codes], 256)
            blk = simulate_block(cb, act, 32, row.sigma2, stream(1, STREAM_CHANNEL, t, l))
            est = accml(cb, blk, row.sigma2, DecoderConfig(seed=decoder_seed(1, t, l)))
            lists.append(select_top(est, 4))
            # inner decoding is exact: every transmitted section survives
            assert {c[l] for c in codes} <= set(lists[-1])
        # what remains is the tree decoder's behaviour on correct lists
        ref = pupe(tree_decode_int(lists, tree, max_out=4), msgs)
        assert row.p_e == ref.p_e


def test_determinism_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_experiment(small(trials=1, output=str(a)), progress=False)
    run_experiment(small(trials=1, output=str(b)), progress=False)
    assert a.read_bytes() == b.read_bytes()
    head = a.read_bytes().split(b"\r\n")[0].decode()
    assert head.split(",") == list(CSV_COLUMNS)
    assert timing_path(a).exists()


def test_workers_schedule_independent(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_experiment(small(output=str(a)), progress=False)
    monkeypatch.setenv("URA_WORKERS", "2")
    cfg = small(output=str(b), workers=4)
    assert harness.worker_count(cfg) == 2
    run_experiment(cfg, progress=False)
    assert a.read_bytes() == b.read_bytes()


def test_row_order_and_grid():
    rows = run_experiment(small(trials=2), progress=False)
    assert len(rows) == 2 * 4 * 3
    keys = [(r.trial, r.grid_index) for r in rows]
    assert keys == sorted(keys)
    assert [r.decoder for r in rows[:3]] == ["accml", "ml", "one_step_iht"]
    assert all(r.T == r.K for r in rows)


def test_timing_excludes_channel(monkeypatch):
    real = harness.simulate_block

    def slow(*a, **k):
        time.sleep(0.05)
        return real(*a, **k)

    monkeypatch.setattr(harness, "simulate_block", slow)
    rows = run_experiment(small(trials=1, M=[8], snr_db=[10.0]), progress=False)
    assert all(r.decode_seconds < 0.05 for r in rows)


# ---------------------------------------------------------------------------
# tables and summaries

def fake_rows(pe):
    return [{"decoder": "ml", "rho": 1.0, "J": 12, "K": 50, "M": 64, "ebn0_db": e, "snr_db": e - 15,
             "p_md": pe, "p_fa": 0.0, "p_e": pe} for e in (-6.0, -4.0, -2.0) for _ in range(3)]


def test_min_ebn0_all_zero():
    assert min_ebn0_for_target(fake_rows(0.0)) == {("ml", 1.0, 12, 50, 64): -6.0}


def test_min_ebn0_all_one():
    assert min_ebn0_for_target(fake_rows(1.0)) == {("ml", 1.0, 12, 50, 64): None}


def test_min_ebn0_threshold():
    rows = fake_rows(0.0)
    for r in rows:
        r["p_e"] = {-6.0: 0.3, -4.0: 0.05, -2.0: 0.0}[r["ebn0_db"]]
    assert min_ebn0_for_target(rows)[("ml", 1.0, 12, 50, 64)] == -4.0


def _write_table(tmp_path, text):
    p = tmp_path / "t.csv"
    p.write_text(text)
    return p


def test_read_table_errors(tmp_path):
    with pytest.raises(TableParseError, match="line 1"):
        read_table(_write_table(tmp_path, ""))
    with pytest.raises(TableParseError, match="line 1: header lacks"):
        read_table(_write_table(tmp_path, "name,trial\nx,1\n"))
    rows = run_experiment(small(trials=1, M=[8], snr_db=[10.0]), progress=False)
    harness.write_results(rows, tmp_path / "ok.csv")
    lines = (tmp_path / "ok.csv").read_text().splitlines()
    bad = lines[:2] + [lines[2] + ",extra"]
    with pytest.raises(TableParseError, match="line 3: expected"):
        read_table(_write_table(tmp_path, "\n".join(bad) + "\n"))
    bad = lines[:2] + [lines[2].replace(",accml,", ",accml,") .replace(",16,", ",sixteen,", 1)]
    with pytest.raises(TableParseError, match="line 3: column"):
        read_table(_write_table(tmp_path, "\n".join(bad) + "\n"))


def test_read_table_round_trip(tmp_path):
    rows = run_experiment(small(trials=1), progress=False)
    harness.write_results(rows, tmp_path / "r.csv")
    back = read_table(tmp_path / "r.csv")
    assert [r["p_e"] for r in back] == [round(r.p_e, 12) for r in rows]
    assert back[0]["decoder"] == "accml" and isinstance(back[0]["K"], int)


# ---------------------------------------------------------------------------
# plots

def _markers(svg, gid):
    root = ET.parse(svg).getroot()
    for g in root.iter("{http://www.w3.org/2000/svg}g"):
        if g.get("id") == gid:
            return len(list(g.iter("{http://www.w3.org/2000/svg}use")))
    return None


def test_plot_empty_table(tmp_path):
    p = _write_table(tmp_path, ",".join(CSV_COLUMNS) + "\r\n")
    out = tmp_path / "plots"
    with pytest.raises(TableParseError):
        emit_plots(p, out)
    assert not out.exists()


def test_plot_single_point(tmp_path):
    cfg = small(trials=1, M=[8], snr_db=[10.0], decoders=[{"name": "ml"}],
                output=str(tmp_path / "r.csv"))
    run_experiment(cfg, progress=False)
    paths = emit_plots(tmp_path / "r.csv", tmp_path / "plots")
    assert len(paths) == 1 and paths[0].suffix == ".svg"
    assert _markers(paths[0], "series0") == 1
    assert _markers(paths[0], "series1") is None
    assert _markers(paths[0], "target") is not None


def test_plot_axes_for_sweeps(tmp_path):
    run_experiment(small(trials=1, output=str(tmp_path / "r.csv")), progress=False)
    names = sorted(p.name for p in emit_plots(tmp_path / "r.csv", tmp_path / "plots"))
    assert names == ["pupe_vs_M.svg", "pupe_vs_ebn0_db.svg"]
    # byte-stable output
    first = (tmp_path / "plots" / "pupe_vs_M.svg").read_bytes()
    emit_plots(tmp_path / "r.csv", tmp_path / "plots")
    assert (tmp_path / "plots" / "pupe_vs_M.svg").read_bytes() == first


@pytest.mark.slow
def test_plot_fig3b_preset(tmp_path):
    cfg = preset("fig3b", trials=1, ebn0_db=[-2.0, 0.0], output=str(tmp_path / "r.csv"))
    run_experiment(cfg, progress=False)
    paths = emit_plots(tmp_path / "r.csv", tmp_path / "plots")
    assert {p.name for p in paths} == {"pupe_vs_K.svg", "pupe_vs_ebn0_db.svg", "time_vs_K.svg"}
    ebn0 = tmp_path / "plots" / "pupe_vs_ebn0_db.svg"
    # 5 K values x 2 decoders, two Eb/N0 points each
    assert [_markers(ebn0, f"series{i}") for i in range(10)] == [2] * 10
    assert _markers(ebn0, "series10") is None and _markers(ebn0, "target") is not None

import json

import numpy as np

from urasparc.channel import build_activity, simulate_block
from urasparc.cli import main
from urasparc.fileio import read_codebook, write_block
from urasparc.presets import preset_dict


def test_gen_codebook_and_decode(tmp_path, capsys):
    cbp, blkp = tmp_path / "cb.bin", tmp_path / "y.bin"
    assert main(["gen-codebook", "--kind", "fourier", "--rows", "16", "--cols", "64",
                 "--seed", "2", "--out", str(cbp)]) == 0
    cb = read_codebook(cbp)
    act = build_activity([(5, 1.0), (40, 1.0)], 64)
    write_block(blkp, simulate_block(cb, act, 200, 0.05, 1))
    capsys.readouterr()
    assert main(["decode", "--codebook", str(cbp), "--block", str(blkp), "--decoder", "accml",
                 "--top", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert sorted(out["top"]) == [5, 40] and "screen_size" in out
    assert main(["decode", "--codebook", str(cbp), "--block", str(blkp), "--decoder", "iht",
                 "--khat", "2"]) == 0
    assert sorted(json.loads(capsys.readouterr().out)["active_set"]) == [5, 40]


def test_run_summarize_plot(tmp_path, capsys):
    d = preset_dict("sanity")
    d["trials"] = 2
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps(d))
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(cfgp), "--out", str(out)]) == 0
    assert out.exists()
    capsys.readouterr()
    assert main(["summarize", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("decoder,rho,J,K,M") and "minimal Eb/N0" in text
    assert main(["plot", "--in", str(out), "--outdir", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "pupe_vs_ebn0_db.svg").exists()


def test_summarize_not_achieved(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["run", "--preset", "sanity", "--trials", "1", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["summarize", "--in", str(out), "--target-pe", "-1"]) == 0
    assert "not-achieved" in capsys.readouterr().out


def test_errors_exit_code(tmp_path, capsys):
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"schema_version": 1, "codebook": {"D": 4, "J": 3}, "K": 2,
                               "M": 4, "snr_db": [0.0], "decoders": [], "trials": 1}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert "no decoders" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()
    assert main(["summarize", "--in", str(tmp_path / "missing.csv")]) == 2
    junk = tmp_path / "junk.bin"
    junk.write_bytes(np.zeros(40, np.uint8).tobytes())
    assert main(["decode", "--codebook", str(junk), "--block", str(junk),
                 "--decoder", "ml"]) == 2


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    assert "desk_fig3b" in capsys.readouterr().out.split()
    assert main(["presets", "fig3b"]) == 0
    assert json.loads(capsys.readouterr().out)["K_delta"] == 50

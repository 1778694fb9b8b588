import numpy as np
import pytest

from qspeech.cli import main
from qspeech.data import synth_tone_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest = synth_tone_corpus(root / "wav", 8, ("lo", "mid", "hi"),
                                 np.random.default_rng(0))
    return manifest


@pytest.fixture(scope="module")
def tiny_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "tiny.cfg"
    p.write_text("""
        model.n_conv_layers = 2
        model.conv_channels = 2
        model.n_dense_layers = 1
        model.dense_width = 4
        model.dropout = 0.0
        model.l2 = 0.0
        train.epochs = 2
        train.fine_tune_epochs = 1
        train.batch_size = 4
        train.seed = 3
    """, encoding="utf-8")
    return p


@pytest.fixture(scope="module")
def trained_run(corpus, tiny_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main(["train", "--config", str(tiny_config), "--manifest", str(corpus),
                 "--out", str(out)])
    assert code == 0
    return out


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6
    assert all(line.startswith("PASS") for line in lines)


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as e:
        main(["train"])  # missing required --manifest/--out
    assert e.value.code == 1


def test_unknown_subcommand_exits_one():
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1


def test_extract_writes_features_and_manifest(corpus, tmp_path, capsys):
    out = tmp_path / "feats"
    assert main(["extract", "--manifest", str(corpus), "--out", str(out)]) == 0
    new_manifest = out / "manifest.tsv"
    assert new_manifest.exists()
    lines = new_manifest.read_text().strip().splitlines()
    assert len(lines) == 8
    from qspeech.features import load_features
    first_path = lines[0].split("\t")[1]
    fs = load_features(first_path)
    assert fs.width == 41


def test_extract_parallel_matches_serial(corpus, tmp_path):
    a, b = tmp_path / "serial", tmp_path / "parallel"
    assert main(["extract", "--manifest", str(corpus), "--out", str(a)]) == 0
    assert main(["extract", "--manifest", str(corpus), "--out", str(b),
                 "--workers", "2"]) == 0
    for fa in sorted(a.glob("*.qfeat")):
        fb = b / fa.name
        assert fa.read_bytes() == fb.read_bytes()


def test_extract_missing_wav_exits_two(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("u1\tmissing.wav\tlo\n", encoding="utf-8")
    code = main(["extract", "--manifest", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2


def test_train_writes_log_and_checkpoints(trained_run, capsys):
    assert (trained_run / "best.ckpt").exists()
    assert (trained_run / "last.ckpt").exists()


def test_eval_reports_per(trained_run, corpus, capsys):
    code = main(["eval", "--checkpoint", str(trained_run / "best.ckpt"),
                 "--manifest", str(corpus)])
    assert code == 0
    out = capsys.readouterr().out
    assert "per=" in out and "utterances=8" in out


def test_eval_with_phone_map(trained_run, corpus, tmp_path, capsys):
    pmap = tmp_path / "fold.txt"
    pmap.write_text("mid lo\n", encoding="utf-8")
    code = main(["eval", "--checkpoint", str(trained_run / "best.ckpt"),
                 "--manifest", str(corpus), "--phone-map", str(pmap)])
    assert code == 0


def test_decode_writes_transcripts(trained_run, corpus, tmp_path, capsys):
    out_file = tmp_path / "hyp.tsv"
    code = main(["decode", "--checkpoint", str(trained_run / "best.ckpt"),
                 "--manifest", str(corpus), "--out", str(out_file)])
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert len(lines) == 8
    for line in lines:
        utt_id, _, rest = line.partition("\t")
        assert utt_id.startswith("tone")
        assert all(s in ("lo", "mid", "hi") for s in rest.split())


def test_decode_corrupted_checkpoint_exits_two(trained_run, corpus, tmp_path):
    bad = tmp_path / "bad.ckpt"
    raw = bytearray((trained_run / "best.ckpt").read_bytes())
    raw[60] ^= 0x55
    bad.write_bytes(bytes(raw))
    code = main(["decode", "--checkpoint", str(bad), "--manifest", str(corpus)])
    assert code == 2


def test_inspect_prints_counts(tiny_config, capsys):
    assert main(["inspect", "--config", str(tiny_config)]) == 0
    out = capsys.readouterr().out
    assert "quaternion model parameters:" in out
    assert "weight ratio (real/quaternion): 4.000" in out


def test_train_resume_from_checkpoint(corpus, tiny_config, trained_run, tmp_path):
    out = tmp_path / "resumed"
    code = main(["train", "--config", str(tiny_config), "--manifest", str(corpus),
                 "--out", str(out), "--checkpoint", str(trained_run / "last.ckpt")])
    assert code == 0  # schedule already complete; resumes and exits cleanly


def test_train_bad_manifest_exits_two(tiny_config, tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("broken line without tabs\n", encoding="utf-8")
    code = main(["train", "--config", str(tiny_config), "--manifest", str(bad),
                 "--out", str(tmp_path / "o")])
    assert code == 2

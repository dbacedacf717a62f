import json
import subprocess
import sys

import pytest

from cipherlstm.cli import load_config, main
from cipherlstm.training import ConfigError

TINY = ["--set", "hidden_size=8", "--set", "batch_size=4", "--set", "max_steps=6", "--set", "eval_every=3",
        "--set", "eval_count=10", "--set", "unseen_count=5"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cipher_roundtrip(capsys):
    code, out, _ = run(capsys, "cipher", "--cipher", "autokey", "--key", "KEY", "--encrypt", "--text",
                       "YOUKNOWNOTHINGJONSNOW")
    assert code == 0 and out.strip() == "ISSIBIGACPUWGNRBTBBBO"
    code, out, _ = run(capsys, "cipher", "--cipher", "autokey", "--key", "KEY", "--decrypt", "--text",
                       "ISSIBIGACPUWGNRBTBBBO")
    assert out.strip() == "YOUKNOWNOTHINGJONSNOW"
    code, out, _ = run(capsys, "cipher", "--cipher", "enigma", "--key", "AAA", "--encrypt", "--text", "AAAAA")
    assert out.strip() == "LKTLX"


@pytest.mark.parametrize("argv", [
    ["cipher", "--cipher", "vigenere", "--key", "TOOLONGKEY", "--encrypt", "--text", "ABC"],
    ["cipher", "--cipher", "vigenere", "--key", "KEY", "--encrypt", "--text", "abc!"],
    ["cipher", "--cipher", "enigma", "--key", "AB", "--encrypt", "--text", "ABC"],
])
def test_cipher_bad_input_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("error:")


def test_load_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"cipher": "autokey", "hidden_size": 32}))
    c = load_config(str(path), ["hidden_size=64", "holdout_keys=[\"KEY\",\"ABC\"]", "unseen_key=ABC"])
    assert (c.cipher, c.hidden_size, c.holdout_keys, c.unseen_key) == ("autokey", 64, ("KEY", "ABC"), "ABC")
    with pytest.raises(ConfigError):
        load_config(None, ["nokey"])
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"), [])


def test_train_eval_trace(capsys, tmp_path):
    out = tmp_path / "run"
    code, stdout, _ = run(capsys, "train", *TINY, "--seed", "3", "--out", str(out))
    assert code == 0 and stdout.startswith("steps=6 ")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["config"]["seed"] == 3
    assert set(manifest["artifacts"]) == {"metrics", "checkpoint", "config"}
    assert json.loads((out / "config.json").read_text())["hidden_size"] == 8

    code, stdout, _ = run(capsys, "eval", "--checkpoint", str(out / "checkpoint.ckpt"), "--count", "10",
                          "--lengths", "14,28", "--out", str(tmp_path / "ev"))
    assert code == 0 and "acc_unseen_key=" in stdout and "unseen_key=KEY" in stdout
    assert (tmp_path / "ev" / "generalization.csv").read_text().startswith("length,accuracy\n")

    code, stdout, _ = run(capsys, "trace", "--checkpoint", str(out / "checkpoint.ckpt"), "--key", "KEY",
                          "--units", "0,1", "--out", str(tmp_path / "tr"))
    assert code == 0 and "key=KEY" in stdout
    header = (tmp_path / "tr" / "trace.csv").read_text().splitlines()[0]
    assert header == "t,input_char,output_char,net_shift,unit_0,unit_1"
    assert (tmp_path / "tr" / "memory_norm.csv").exists()

    code, stdout, _ = run(capsys, "train", *TINY, "--set", "seed=3", "--set", "max_steps=9",
                          "--resume", str(out / "checkpoint.ckpt"), "--out", str(out))
    assert code == 0 and stdout.startswith("steps=9 ")


def test_attack_train_and_eval(capsys, tmp_path):
    code, stdout, _ = run(capsys, "attack", *TINY, "--count", "20", "--out", str(tmp_path / "a"))
    assert code == 0 and "key_char_accuracy=" in stdout
    assert (tmp_path / "a" / "attack_eval.csv").read_text().startswith("char_accuracy,exact_key_rate,count\n")
    code, stdout, _ = run(capsys, "attack", "--checkpoint", str(tmp_path / "a" / "checkpoint.ckpt"), "--count", "20")
    assert code == 0
    run(capsys, "train", *TINY, "--out", str(tmp_path / "d"))
    code, _, err = run(capsys, "attack", "--checkpoint", str(tmp_path / "d" / "checkpoint.ckpt"))
    assert code == 2 and "attack" in err


def test_sweep(capsys, tmp_path):
    code, stdout, _ = run(capsys, "sweep", *TINY, "--sizes", "4,6", "--out", str(tmp_path))
    assert code == 0 and stdout.strip() == "n4=not_reached n6=not_reached"
    assert set(json.loads((tmp_path / "manifest.json").read_text())["artifacts"]) == {
        "metrics_n4", "metrics_n6", "summary"}


def test_gradcheck_pass_and_fail(capsys):
    code, stdout, _ = run(capsys, "gradcheck", "--trials", "1", "--n", "4", "--T", "3")
    assert code == 0 and stdout.strip().endswith("PASS")
    code, stdout, _ = run(capsys, "gradcheck", "--trials", "1", "--n", "4", "--T", "3", "--perturb", "1e-3")
    assert code == 1 and "FAIL" in stdout


def test_config_errors_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--set", "hidden_size=-1", "--out", str(tmp_path))
    assert code == 2 and "hidden_size" in err
    code, _, err = run(capsys, "train", "--set", "colour=red", "--out", str(tmp_path))
    assert code == 2 and "unknown" in err


def test_runtime_errors_exit_3(capsys, tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"CRNN\x01garbage")
    code, _, err = run(capsys, "eval", "--checkpoint", str(bad))
    assert code == 3 and err.startswith("error:")
    code, _, _ = run(capsys, "eval", "--checkpoint", str(tmp_path / "missing.ckpt"))
    assert code == 2


def test_module_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "cipherlstm", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "exit codes:" in proc.stdout
    for cmd in ("cipher", "train", "eval", "attack", "trace", "sweep", "gradcheck"):
        assert cmd in proc.stdout

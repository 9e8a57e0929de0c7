import json
import subprocess
import sys

import pytest

from conftest import FIXTURES
from muhflz.cli import run


def _run(*args, capsys=None):
    code = run(list(args))
    return code


def test_prove_countdown(capsys):
    code = run(["prove", str(FIXTURES / "countdown.hes"), "--backend", "builtin", "--domain", "-6..6"])
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "valid"
    assert code == 0


def test_emit_nu_contains_counter(capsys):
    code = run(["--emit", "nu", str(FIXTURES / "fib_termination.hes")])
    out = capsys.readouterr().out
    assert code == 0
    assert "Fib u" in out
    assert "=u" not in out  # nu-only


def test_emit_nu_deterministic(capsys):
    args = ["--emit", "nu", str(FIXTURES / "succ_chain.hes")]
    run(args)
    first = capsys.readouterr().out
    run(args)
    second = capsys.readouterr().out
    assert first == second


def test_emit_dual(capsys):
    code = run(["--emit", "dual", str(FIXTURES / "countdown.hes")])
    out = capsys.readouterr().out
    assert code == 0
    assert "exists" in out and "=v" in out


def test_emit_tags_json(capsys):
    code = run(["--emit", "tags", str(FIXTURES / "succ_chain_pure.hes")])
    out = capsys.readouterr().out
    assert code == 0
    payload = json.loads(out)
    assert "binders" in payload


def test_missing_file_exits_3(capsys):
    assert run(["prove", "missing.hes"]) == 3


def test_parse_error_exits_3(tmp_path, capsys):
    bad = tmp_path / "bad.hes"
    bad.write_text("Main =v X;\n")
    assert run(["prove", str(bad)]) == 3


def test_bad_mode_exits_3(capsys):
    assert run(["frobnicate", str(FIXTURES / "countdown.hes")]) == 3


def test_invalid_exits_1(tmp_path, capsys):
    f = tmp_path / "false.hes"
    f.write_text("Main =v 0 >= 1;\n")
    code = run([str(f), "--domain", "-4..4", "--max-iterations", "2", "--deadline", "10"])
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "invalid"
    assert code == 1


def test_unknown_exits_2(tmp_path, capsys):
    f = tmp_path / "succ.hes"
    f.write_text((FIXTURES / "succ_chain.hes").read_text())
    code = run(
        ["prove", str(f), "--domain", "0..10", "--no-extra-args",
         "--max-iterations", "2", "--deadline", "20"]
    )
    assert code == 2


def test_json_report(capsys):
    code = run([str(FIXTURES / "countdown.hes"), "--domain", "-6..6", "--report", "json"])
    out = capsys.readouterr().out
    payload = json.loads(out)
    assert payload["outcome"] == "valid"
    assert code == 0


def test_env_backend_used_when_flag_absent(tmp_path, monkeypatch, capsys):
    stub = tmp_path / "solver.sh"
    stub.write_text("#!/bin/sh\necho valid\n")
    stub.chmod(0o755)
    monkeypatch.setenv("MUHFLZ_BACKEND", str(stub))
    code = run(["prove", str(FIXTURES / "countdown.hes"), "--deadline", "10"])
    out = capsys.readouterr().out
    assert code == 0 and out.splitlines()[0] == "valid"


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "muhflz.cli"],
        input="",
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 3  # no file given

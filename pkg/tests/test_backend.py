import os
import stat
import textwrap

import pytest

from conftest import fixture_text
from muhflz.backend import (
    BackendVerdict, Builtin, External, backend_from_env, solve,
)
from muhflz.eval import Domain
from muhflz.parser import parse_hes
from muhflz.tags import infer_tags
from muhflz.transform import ApproxParams, eliminate_mu
from muhflz.typecheck import typecheck


def _approx(name, c, d):
    h = typecheck(parse_hes(fixture_text(name)))
    return eliminate_mu(h, infer_tags(h), ApproxParams(c, d, c, d))


def test_builtin_countdown_valid():
    v = solve(Builtin(Domain(-6, 6)), _approx("countdown.hes", 1, 1))
    assert v.outcome == "valid"


def test_builtin_scaled_invalid_then_valid():
    assert solve(Builtin(Domain(-8, 8)), _approx("countdown_scaled.hes", 1, 1)).outcome == "invalid"
    assert solve(Builtin(Domain(-8, 8)), _approx("countdown_scaled.hes", 2, 2)).outcome == "valid"


def test_builtin_is_deterministic():
    spec = Builtin(Domain(-8, 8))
    h = _approx("countdown_scaled.hes", 1, 1)
    assert {solve(spec, h).outcome for _ in range(3)} == {"invalid"}


def test_mu_rejected_before_dispatch():
    h = typecheck(parse_hes(fixture_text("countdown.hes")))
    with pytest.raises(ValueError):
        solve(Builtin(Domain(-4, 4)), h)


def _stub(tmp_path, body: str) -> External:
    path = tmp_path / "solver.sh"
    path.write_text("#!/bin/sh\n" + textwrap.dedent(body))
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return External((str(path),), timeout_s=5.0)


def test_external_verdict_parsing(tmp_path):
    h = _approx("countdown.hes", 1, 1)
    assert solve(_stub(tmp_path, 'echo "  VALID  "\n'), h).outcome == "valid"
    assert solve(_stub(tmp_path, 'echo noise\necho invalid\n'), h).outcome == "invalid"
    v = solve(_stub(tmp_path, 'echo unknown\n'), h)
    assert v.outcome == "unknown"


def test_external_garbage_is_unknown(tmp_path):
    v = solve(_stub(tmp_path, 'echo maybe\nexit 7\n'), h=_approx("countdown.hes", 1, 1))
    assert v.outcome == "unknown"
    assert "exit 7" in v.detail


def test_external_timeout_is_unknown(tmp_path):
    v = solve(_stub(tmp_path, "sleep 30\n"), h=_approx("countdown.hes", 1, 1))
    # the driver deadline is tighter than the sleep
    assert v.outcome == "unknown"


def test_external_receives_the_hes_file(tmp_path):
    ext = _stub(
        tmp_path,
        'grep -q "=v" "$1" && echo valid || echo unknown\n',
    )
    assert solve(ext, _approx("countdown.hes", 1, 1)).outcome == "valid"


def test_external_missing_binary_is_unknown():
    v = solve(External(("/nonexistent/solver",), timeout_s=2.0), _approx("countdown.hes", 1, 1))
    assert v.outcome == "unknown"


def test_backend_from_env(monkeypatch):
    monkeypatch.setenv("MUHFLZ_BACKEND", "/usr/bin/solver --fast")
    spec = backend_from_env()
    assert spec == External(("/usr/bin/solver", "--fast"))
    monkeypatch.delenv("MUHFLZ_BACKEND")
    assert backend_from_env() is None


def test_external_timeout_capped_by_deadline(tmp_path):
    import time

    ext = _stub(tmp_path, "sleep 30\n")
    t0 = time.monotonic()
    v = solve(ext, _approx("countdown.hes", 1, 1), deadline=time.monotonic() + 1.0)
    assert v.outcome == "unknown"
    assert time.monotonic() - t0 < 10

"""Acceptance criteria 1 to 14 on the core suite.

Each criterion gets its own test that prints one PASS/FAIL line past
pytest's output capture, so the lines appear in a plain ``pytest -v`` log.
"""
import pytest

from gcflab.acceptance import Suite, check_determinism


@pytest.fixture(scope="module")
def suite_results(tmp_path_factory):
    first = tmp_path_factory.mktemp("verify_a")
    results = {r.number: r for r in Suite("core", out_dir=str(first)).run_all()}
    second = tmp_path_factory.mktemp("verify_b")
    results[14] = check_determinism(str(first), str(second), "core")
    return results


@pytest.mark.parametrize("number", range(1, 15), ids=lambda k: f"criterion_{k:02d}")
def test_criterion(number, suite_results, capsys):
    result = suite_results[number]
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()

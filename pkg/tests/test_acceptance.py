"""Acceptance criteria 1-16 at their stated tolerances.

Criteria 1-15 come from one in-process ``verify --suite full`` run; 16
repeats the run in a fresh interpreter and compares the two reports.
"""

import json
import subprocess
import sys

import pytest

from conftest import ACCEPTANCE_LINES
from fracdiff.acceptance import CRITERIA, CriterionResult, determinism_check
from fracdiff.cli import main


@pytest.fixture(scope="module")
def full_report(tmp_path_factory):
    path = tmp_path_factory.mktemp("verify") / "first.json"
    code = main(["verify", "--suite", "full", "--json", "--out", str(path)])
    text = path.read_text()
    results = {r["criterion"]: CriterionResult(r["criterion"], r["name"], r["passed"], r["detail"])
               for r in json.loads(text)}
    return code, text, results


def _record(res: CriterionResult):
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return res


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(full_report, number):
    _, _, results = full_report
    assert _record(results[number]).passed


def test_criterion_16_determinism(full_report, tmp_path):
    code, first, _ = full_report
    path = tmp_path / "second.json"
    proc = subprocess.run([sys.executable, "-m", "fracdiff", "verify", "--suite", "full", "--json",
                           "--out", str(path)], capture_output=True, text=True)
    assert proc.returncode == code, proc.stderr
    assert _record(determinism_check(first, path.read_text())).passed


def test_verify_exit_code_matches_results(full_report):
    code, _, results = full_report
    assert code == (0 if all(r.passed for r in results.values()) else 1)

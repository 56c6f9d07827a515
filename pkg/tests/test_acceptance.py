"""The twelve acceptance criteria, each run at its stated tolerance.

Criteria 1 to 11 reuse the checks of the verification suites; criterion 12 runs the
simulator twice from the same configuration.  Each test records one PASS/FAIL line
that is printed in the terminal summary.
"""

import pytest

from capwave import verify
from capwave.cli import main

CRITERIA = {
    1: ("elliptic oracle equivalence", "elliptic", ("elliptic ",)),
    2: ("DtN spectral check", "elliptic", ("DtN ",)),
    3: ("singular exponents", "elliptic", ("corner ", "angle gate")),
    4: ("commutator suite", "commutators", ("commutator ",)),
    5: ("Hodge projection", "commutators", ("Hodge ", "pressure gauges")),
    6: ("equilibrium fixed point", "energy", ("equilibrium drift", "Taylor sign at rest", "F at equilibrium")),
    7: ("contact law", "contact", ("slip law", "contact speed sign", "F and F1")),
    8: ("energy monitoring", "energy", ("energy bounded", "no energy growth", "dissipation integral")),
    9: ("physical energy law", "energy", ("symbolic energy-law", "energy-law residual", "physical energy nonincreasing")),
    10: ("J-equation and contact-relation residuals", None, ("J-equation residual", "contact-relation residual")),
    11: ("Picard refinement", "energy", ("Picard ",)),
}

# checks that must be present for each criterion (guards against silently empty selections)
EXPECTED_COUNT = {1: 8, 2: 5, 3: 9, 4: 5, 5: 3, 6: 3, 7: 3, 8: 3, 9: 3, 10: 2, 11: 3}

_cache = {}


def _suite(name):
    if name not in _cache:
        _cache[name] = verify.run_suite(name, seed=0)[0]
    return _cache[name]


def _select(number):
    _, suite, prefixes = CRITERIA[number]
    suites = [suite] if suite else ["energy", "contact"]
    checks = [c for s in suites for c in _suite(s).checks if c.name.startswith(prefixes)]
    if number == 10:  # the equilibrium variants of these residuals belong to criterion 6 in spirit
        checks = [c for c in checks if "equilibrium" not in c.name]
    return checks


def _record(log, number, passed, detail):
    log.append(f"{'PASS' if passed else 'FAIL'} {number}: {CRITERIA.get(number, ('determinism',))[0]}  [{detail}]")


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    checks = _select(number)
    passed = len(checks) == EXPECTED_COUNT[number] and all(c.passed for c in checks)
    worst = [c for c in checks if not c.passed] or checks
    detail = "; ".join(f"{c.name.strip()} = {c.measured:.4g} (threshold {c.threshold:.4g})" for c in worst[:3])
    _record(acceptance_log, number, passed, detail)
    for c in checks:
        print(c.line())
    assert len(checks) == EXPECTED_COUNT[number], [c.name for c in checks]
    assert all(c.passed for c in checks), "\n".join(c.line() for c in checks if not c.passed)


DETERMINISM_CONFIG = """\
geometry: {M: 16, N: 16}
physics: {sigma: 0.1, beta_c: 1.0, g: 1.0, omega_s: 0.42}
initial:
  angle_relaxation: {omega_0: 0.45}
numerics: {t_end: 0.15}
output: {cadence: 2, figures: false}
"""


def test_criterion_12_determinism(tmp_path, acceptance_log):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(DETERMINISM_CONFIG)
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    files = ["report.csv"] + sorted(p.name for p in (tmp_path / "a" / "snapshots").iterdir())
    same = []
    for f in files:
        sub = "" if f == "report.csv" else "snapshots"
        same.append((tmp_path / "a" / sub / f).read_bytes() == (tmp_path / "b" / sub / f).read_bytes())
    passed = all(same) and len(files) > 2
    _record(acceptance_log, 12, passed, f"{sum(same)}/{len(files)} files bit-identical")
    assert passed

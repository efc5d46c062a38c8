"""Scenario files and the command line driver."""

import textwrap

import pytest

from bvcalc.cli import main
from bvcalc.scenario import REPORT_COLUMNS

EXPLICIT_CHAINRULE = """
    [scenario]
    kind = chainrule-verify
    tolerance = 1e-9
    label = step-check

    [flux]
    term1.f = poly 0 1
    term1.K = poly 1 + jump 0.5 1

    [u]
    component1 = poly 0.5 1 + jump 0.5 -0.25

    [test_functions]
    phi1 = bump 0.1 0.9 1.0
    phi2 = bump 0.2 0.8 0.7
"""

SUITE_CHAINRULE = """
    [scenario]
    kind = chainrule-verify
    cases = 3
    label = mini-suite
"""

TINY_CLAW = """
    [scenario]
    kind = claw-run
    label = tiny-claw

    [flux]
    term1.f = poly 0 1
    term1.K = poly 1 + jump 0.5 1

    [u]
    initial = poly 1.0

    [claw]
    cells = 24
    time = 0.1
    range = 0.1 2.5
"""

TINY_ENTROPY = """
    [scenario]
    kind = entropy-check
    label = tiny-entropy

    [flux]
    term1.f = poly 0 1
    term1.K = poly 1 + jump 0.5 1

    [u]
    initial = poly 1.3 + jump 0.35 -0.9

    [test_functions]
    phi1 = bump 0.1 0.9 0.05 0.35 1.0

    [claw]
    cells = 32
    time = 0.4
    range = 0.1 2.5
    alpha = 0.6 1.0
"""


def write_ini(tmp_path, text, name="scenario.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def read_report(out_dir):
    lines = (out_dir / "report.csv").read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


# -- parse errors ------------------------------------------------------------


@pytest.mark.parametrize(
    "name,body,fragment",
    [
        ("no-scenario-section", "[flux]\nterm1.f = poly 0 1\n", "[scenario]"),
        ("missing-kind", "[scenario]\nseed = 1\n", "[scenario] kind"),
        ("bad-kind", "[scenario]\nkind = warp\n", "[scenario] kind"),
        (
            "bad-domain",
            "[scenario]\nkind = coarea-check\ndomain = 0 one\n",
            "[scenario] domain",
        ),
        (
            "bad-cases",
            "[scenario]\nkind = coarea-check\ncases = few\n",
            "[scenario] cases",
        ),
        (
            "negative-tolerance",
            "[scenario]\nkind = coarea-check\ntolerance = -1\n",
            "[scenario] tolerance",
        ),
        (
            "unknown-key",
            "[scenario]\nkind = coarea-check\nflux_capacitor = 1\n",
            "[scenario] flux_capacitor",
        ),
        (
            "missing-flux-K",
            "[scenario]\nkind = chainrule-verify\n\n[flux]\nterm1.f = poly 0 1\n",
            "[flux] term1.K",
        ),
        (
            "jump-on-boundary",
            TINY_CLAW.replace("poly 1.0", "poly 1.0 + jump 0.0 1"),
            "[u] initial",
        ),
        (
            "claw-missing-range",
            TINY_CLAW.replace("    range = 0.1 2.5\n", ""),
            "[claw] range",
        ),
        (
            "entropy-missing-alpha",
            TINY_ENTROPY.replace("    alpha = 0.6 1.0\n", ""),
            "[claw] alpha",
        ),
        (
            "phi-outside-domain",
            EXPLICIT_CHAINRULE.replace("bump 0.1 0.9 1.0", "bump -0.5 0.9 1.0"),
            "[test_functions] phi1",
        ),
    ],
)
def test_parse_errors_name_the_field(tmp_path, capsys, name, body, fragment):
    path = write_ini(tmp_path, body, f"{name}.ini")
    rc = main(["run", path, "--out", str(tmp_path / "out")])
    err = capsys.readouterr().err
    assert rc == 2
    assert err.startswith("bvcalc: scenario error:")
    assert fragment in err


def test_missing_file_is_a_scenario_error(tmp_path, capsys):
    rc = main(["run", str(tmp_path / "nope.ini")])
    assert rc == 2
    assert "cannot read" in capsys.readouterr().err


def test_bad_flag_values(tmp_path, capsys):
    path = write_ini(tmp_path, EXPLICIT_CHAINRULE)
    assert main(["run", path, "--jobs", "0"]) == 2
    assert "--jobs" in capsys.readouterr().err
    assert main(["run", path, "--tol", "-3"]) == 2
    assert "--tol" in capsys.readouterr().err


# -- end-to-end runs ---------------------------------------------------------


def test_explicit_chainrule_run(tmp_path, capsys):
    path = write_ini(tmp_path, EXPLICIT_CHAINRULE)
    out = tmp_path / "out"
    rc = main(["run", path, "--out", str(out)])
    assert rc == 0
    assert capsys.readouterr().out.startswith(
        "step-check [chainrule-verify]: 2/2 cases passed"
    )
    header, rows = read_report(out)
    assert header == ",".join(REPORT_COLUMNS)
    assert [r[1] for r in rows] == ["explicit/phi0", "explicit/phi1"]
    for row in rows:
        assert len(row) == len(REPORT_COLUMNS)
        assert row[0] == "step-check"
        assert row[-1] == "pass"
        residual = float(row[-3])
        assert residual <= 1e-9 * (1.0 + abs(float(row[2])))
    assert (out / "timing.csv").exists()


@pytest.mark.parametrize(
    "kind,cases,n_rows",
    [("approx-demo", 2, 2), ("coarea-check", 3, 3), ("comparison-check", 2, 2)],
)
def test_suite_kinds_run_clean(tmp_path, kind, cases, n_rows):
    body = f"[scenario]\nkind = {kind}\ncases = {cases}\nlabel = t-{kind}\n"
    path = write_ini(tmp_path, body)
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == 0
    header, rows = read_report(out)
    assert len(rows) == n_rows
    assert all(r[-1] == "pass" for r in rows)


def test_approx_demo_writes_staircase(tmp_path):
    path = write_ini(tmp_path, "[scenario]\nkind = approx-demo\ncases = 1\n")
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == 0
    lines = (out / "stairs_case00.csv").read_text().splitlines()
    assert lines[0].startswith("x,exact1,approx1")
    assert len(lines) > 700


def test_claw_run_writes_field(tmp_path):
    path = write_ini(tmp_path, TINY_CLAW)
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == 0
    header, rows = read_report(out)
    assert len(rows) == 1 and rows[0][-1] == "pass"
    lines = (out / "field.csv").read_text().splitlines()
    assert lines[0] == "x,t,u,mass_drift"
    body = [line.split(",") for line in lines[1:]]
    assert len(body) % 24 == 0
    steps = len(body) // 24
    assert steps >= 1
    assert max(float(r[3]) for r in body) <= 1e-12
    times = sorted({float(r[1]) for r in body})
    assert len(times) == steps


def test_entropy_check_run(tmp_path):
    path = write_ini(tmp_path, TINY_ENTROPY)
    out = tmp_path / "out"
    assert main(["run", path, "--out", str(out)]) == 0
    header, rows = read_report(out)
    assert len(rows) == 2  # two levels x one test function
    for row in rows:
        assert row[-1] == "pass"
        assert float(row[2]) <= 1e-3  # signed production stays dissipative


def test_tolerance_override_fails_cases_but_writes_report(tmp_path, capsys):
    path = write_ini(tmp_path, SUITE_CHAINRULE)
    out = tmp_path / "out"
    rc = main(["run", path, "--out", str(out), "--tol", "1e-17"])
    assert rc == 1
    header, rows = read_report(out)
    assert any(r[-1] == "fail" for r in rows)
    assert all(r[-2] == repr(1e-17) for r in rows)


def test_reports_are_deterministic_across_runs_and_jobs(tmp_path):
    path = write_ini(tmp_path, SUITE_CHAINRULE)
    outs = [tmp_path / f"out{i}" for i in range(3)]
    assert main(["run", path, "--out", str(outs[0])]) == 0
    assert main(["run", path, "--out", str(outs[1])]) == 0
    assert main(["run", path, "--out", str(outs[2]), "--jobs", "3"]) == 0
    blobs = [(o / "report.csv").read_bytes() for o in outs]
    assert blobs[0] == blobs[1] == blobs[2]


def test_seed_override_changes_suite(tmp_path):
    path = write_ini(tmp_path, SUITE_CHAINRULE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", path, "--out", str(a)]) == 0
    assert main(["run", path, "--out", str(b), "--seed", "99"]) == 0
    assert (a / "report.csv").read_bytes() != (b / "report.csv").read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    path = write_ini(tmp_path, EXPLICIT_CHAINRULE)
    env_out = tmp_path / "env-out"
    monkeypatch.setenv("BVCALC_OUT", str(env_out))
    monkeypatch.chdir(tmp_path)
    assert main(["run", path]) == 0
    assert (env_out / "report.csv").exists()
    assert str(env_out) in capsys.readouterr().out

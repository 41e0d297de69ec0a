"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line (shown even
under output capture) before asserting.  Run on its own with
``python3 -m pytest tests/test_acceptance.py -v``.
"""

import time
from importlib import resources

import pytest

from helpers import corpus
from microdeduct import driver
from microdeduct.aux_infer import analyze_intervals
from microdeduct.differential import DOMAIN, pipeline_case, solver_case, wp_case
from microdeduct.driver import AUX_OUTPUT, FUNC_OUTPUT
from microdeduct.frontend import parse_module
from microdeduct.logic import MACHINE_MAX, RESULT, Int, Location, Old, Var, conj, disj, eq, in_range
from microdeduct.solver import entails

pytestmark = pytest.mark.slow

PIPELINE_SEEDS = 500
WP_SEEDS = 1000
SOLVER_SEEDS = 2000


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return emit


@pytest.fixture(scope="module")
def fuzz_corpus():
    """Pipeline outcomes on the first PIPELINE_SEEDS programs where inference ran."""
    outcomes, seed = [], 0
    skipped = 0
    while len(outcomes) < PIPELINE_SEEDS:
        out = pipeline_case(seed)
        seed += 1
        if out.status == "ok":
            outcomes.append(out)
        else:
            skipped += 1
    return outcomes, skipped


def _mutual(a, b):
    return entails(a, b).valid and entails(b, a).valid


def test_c1_golden_end_to_end(tmp_path, report, example_source):
    src = tmp_path / "running_example.c"
    src.write_text(example_source)
    t0 = time.perf_counter()
    code = driver.main([str(src)])
    secs = time.perf_counter() - t0
    m = parse_module((tmp_path / AUX_OUTPUT).read_text())
    sat, wo = m.function("saturate"), m.function("write_output")
    IN = Location("global", "in")
    x, lim = Var(sat.param_loc(sat.params[0])), Var(sat.param_loc(sat.params[1]))
    ens_ok = entails(sat.contract.post, disj(eq(RESULT, Old(IN)), eq(RESULT, Int(10)))).valid
    req_ok = _mutual(sat.contract.pre, conj(eq(lim, Int(10)), eq(x, Var(IN)), in_range(x, 0, MACHINE_MAX)))
    wo_assigns = wo.contract.assigned == frozenset({Location("global", "out")})
    sat_assigns = sat.contract.assigned == frozenset()
    ok = code == 0 and secs < 5 and ens_ok and req_ok and wo_assigns and sat_assigns
    detail = (
        f"exit={code} time={secs:.2f}s ensures={ens_ok} requires={req_ok} "
        f"assigns(write_output)={wo_assigns} assigns(saturate)={sat_assigns}"
    )
    assert report(1, ok, detail)


def test_c2_evaluation_module(tmp_path, report):
    text = corpus("eval_module.c")
    m = parse_module(text)
    entry = m.function(m.entry).contract
    shape = (len(m.helpers), len(entry.ensures), entry.assigns is not None and len(entry.assigns.locations) >= 1)
    src = tmp_path / "eval_module.c"
    src.write_text(text)
    t0 = time.perf_counter()
    code = driver.main([str(src)])
    secs = time.perf_counter() - t0
    loc = sum(1 for line in text.splitlines() if line.strip())
    ok = code == 0 and secs < 30 and shape == (5, 5, True)
    assert report(2, ok, f"exit={code} time={secs:.2f}s helpers={shape[0]} ensures={shape[1]} assigns={shape[2]} loc={loc}")


def test_c3_inference_soundness(fuzz_corpus, report):
    outcomes, skipped = fuzz_corpus
    violations = [(o.seed, o.helper_violations) for o in outcomes if o.helper_violations]
    unproved = [o.seed for o in outcomes if o.contract_true and o.verdict != "verified"]
    true_count = sum(1 for o in outcomes if o.contract_true)
    ok = not violations and not unproved
    detail = (
        f"programs={len(outcomes)} (skipped {skipped}) helper_violations={len(violations)} "
        f"true_contracts={true_count} unverified_true={len(unproved)}"
    )
    assert report(3, ok, detail), (violations[:3], unproved[:10])


def test_c4_wp_differential(report):
    bad = []
    checked = 0
    for seed in range(WP_SEEDS):
        out = wp_case(seed)
        checked += out.checked
        if out.unsound is not None or out.not_weakest is not None:
            bad.append(out)
    ok = not bad
    assert report(4, ok, f"cases={WP_SEEDS} states={checked} failures={len(bad)}"), bad[:3]


def test_c5_solver_differential(report):
    outs = [solver_case(seed) for seed in range(SOLVER_SEEDS)]
    disagree = [o for o in outs if not o.agrees]
    bad_models = [o for o in outs if not o.model_ok]
    unknown = sum(1 for o in outs if o.verdict == "UNKNOWN") / len(outs)
    ok = not disagree and not bad_models and unknown < 0.10
    detail = f"formulas={len(outs)} disagreements={len(disagree)} bad_models={len(bad_models)} unknown_rate={unknown:.1%}"
    assert report(5, ok, detail), disagree[:3]


def test_c6_interval_soundness(fuzz_corpus, report, example):
    outcomes, _ = fuzz_corpus
    escapes = [(o.seed, o.interval_escapes) for o in outcomes if o.interval_escapes]
    res = analyze_intervals(example)
    tmp = Location("local", "tmp", "main")
    body = example.function("main").body
    after_sat = res.points[("main", body[1].span)][tmp]
    final_out = res.points[("main", body[-1].span)][Location("global", "out")]
    golden = (after_sat.lo, after_sat.hi, final_out.lo, final_out.hi) == (0, 10, 0, 100)
    ok = not escapes and golden
    detail = f"programs={len(outcomes)} domain={list(DOMAIN)} escapes={len(escapes)} saturate={after_sat} out={final_out}"
    assert report(6, ok, detail), escapes[:3]


def test_c7_stage_composability(tmp_path, report):
    names = sorted(p.name for p in resources.files("microdeduct.corpus").iterdir() if p.name.endswith(".c"))
    mismatched = []
    for name in names:
        whole, steps = tmp_path / name / "all", tmp_path / name / "steps"
        for d in (whole, steps):
            d.mkdir(parents=True)
            (d / name).write_text(corpus(name))
        driver.main([str(whole / name)])
        driver.main(["-func", str(steps / name)])
        driver.main(["-aux", str(steps / FUNC_OUTPUT)])
        driver.main(["-wp", str(steps / AUX_OUTPUT)])
        if (whole / "report.txt").read_bytes() != (steps / "report.txt").read_bytes():
            mismatched.append(name)
    ok = not mismatched
    assert report(7, ok, f"programs={len(names)} ({', '.join(names)}) mismatched={mismatched}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))

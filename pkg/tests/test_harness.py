import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partagree.cli import main
from partagree.harness import (
    ScenarioError,
    check_trace,
    derive_seed,
    load_scenario,
    parse_range,
    parse_trace,
    read_config,
    run,
    scenario_from_dict,
    sweep,
)
from partagree.netcore import format_edges
from partagree.protocol import KnownBound, budget_k_agreement, budget_p_agreement

MINIMAL = """
n = 10
p = 2
protocol = p_agreement

[adversary]
name = static_path
"""

PHASED = """
p = 2
protocol = unknown_size
quiet_period = 2
expect_disagreement = true

[adversary]
name = phased_path
k = 2
t = 5
"""


def test_minimal_config_defaults():
    s = load_scenario(MINIMAL)
    assert s.variant == KnownBound(15)
    assert s.inputs == tuple(range(1, 11))
    assert s.horizon == 15 and s.level == 2 and not s.budget_override


def test_load_from_path(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text(MINIMAL)
    assert load_scenario(path) == load_scenario(MINIMAL)
    assert load_scenario(str(path)) == load_scenario(MINIMAL)


def test_gamma_override_flagged():
    s = load_scenario(MINIMAL + "\n", {"gamma": 4})
    assert s.gamma == 4 and s.budget_override
    trace = run(s)
    assert "budget_override=true" in trace.lines()[0]


def test_gamma_equal_to_formula_not_flagged():
    assert not load_scenario(MINIMAL, {"gamma": 15}).budget_override


@pytest.mark.parametrize(
    "text, field",
    [
        (MINIMAL.replace("p = 2", "p = 2\nbogus = 1"), "bogus"),
        (MINIMAL.replace("n = 10", "n = 10\ninputs = 1,2,3"), "inputs"),
        (MINIMAL.replace("static_path", "teleport"), "adversary.name"),
        (MINIMAL + "candidate_budget = 3\n", "adversary.candidate_budget"),
        (MINIMAL.replace("p_agreement", "k_agreement"), "epsilon"),
        (MINIMAL.replace("p_agreement", "unknown_size\nquiet_period = 2"), "horizon"),
        (MINIMAL.replace("n = 10", "n = 10\nhorizon = 3"), "horizon"),
        (PHASED.replace("t = 5", "t = 4"), "adversary.t"),
        (PHASED.replace("p = 2", "p = 2\nn = 30"), "n"),
        (PHASED.replace("p = 2", "p = 1"), "p"),
        (MINIMAL + "\n[extra]\nx = 1\n", "extra"),
    ],
)
def test_invalid_configs_name_the_field(text, field):
    with pytest.raises(ScenarioError) as info:
        load_scenario(text)
    assert info.value.field == field


def test_random_inputs_follow_seed():
    a = load_scenario(MINIMAL + "", {"inputs": "random", "seed": 3})
    b = load_scenario(MINIMAL, {"inputs": "random", "seed": 3})
    c = load_scenario(MINIMAL, {"inputs": "random", "seed": 4})
    assert a.inputs == b.inputs != c.inputs
    assert all(1 <= x <= 10 for x in a.inputs)


def test_run_static_path_n10():
    trace = run(load_scenario(MINIMAL))
    v = trace.verdict
    assert v.agreement_k <= 2 and v.validity_ok and v.termination_ok
    assert v.rounds_used == 15
    assert len(trace.records) == 16
    assert trace.succeeded()


def test_run_single_process():
    trace = run(scenario_from_dict({"n": 1, "p": 1}, {"name": "static_path"}))
    assert len(trace.records) == 1
    assert trace.records[0].decided == (1,)
    assert trace.verdict.agreement_k == 1 and trace.verdict.termination_ok


def test_run_phased_path():
    trace = run(load_scenario(PHASED))
    s = trace.scenario
    assert s.n == 33 and s.horizon == 6 and s.target == 2
    assert trace.verdict.decision_set == {1, 2, 3}
    phased = s.adversary_params["phased"]
    for i in (1, 2, 3):
        assert trace.final_states[phased.isolated(i)].decided == i
    assert all(rec.comps == 2 for rec in trace.records[1:])
    # disagreement was the goal, so the inverted exit signal is success
    assert trace.succeeded()


def test_record_count_and_round_zero_phi():
    s = scenario_from_dict({"n": 7, "p": 2, "inputs": "3,1,4,1,5,9,2"}, {"name": "random_partition"})
    trace = run(s)
    assert len(trace.records) == trace.rounds + 1
    from partagree.analysis import potential

    assert trace.records[0].phi == potential(s.inputs, 2)
    assert trace.records[0].edges is None


def test_abort_records_offending_round():
    text = """
n = 4
p = 2
[adversary]
name = scripted
schedule = 0-1,2-3 ; 1-2
"""
    trace = run(load_scenario(text))
    assert trace.aborted is not None and trace.aborted.round == 1 and trace.aborted.count == 3
    assert "abort t=1 comps=3" in trace.text()
    assert not trace.verdict.termination_ok and not trace.succeeded()


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(1, 4), st.integers(0, 10**6),
       st.sampled_from(["static_path", "random_partition", "greedy_min_phi"]))
def test_run_is_deterministic(n, p, seed, name):
    s = scenario_from_dict({"n": n, "p": p, "seed": seed, "inputs": "random"}, {"name": name})
    assert run(s).text() == run(s).text()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(1, 3), st.integers(0, 10**6), st.randoms(use_true_random=False))
def test_anonymity(n, p, seed, rnd):
    base = scenario_from_dict({"n": n, "p": p, "seed": seed, "inputs": "random"}, {"name": "random_partition"})
    trace = run(base)
    perm = list(range(n))
    rnd.shuffle(perm)
    schedule = " ; ".join(
        ",".join(f"{perm[i]}-{perm[j]}" for i, j in rec.edges.sorted_edges()) for rec in trace.records[1:]
    )
    inputs = [0] * n
    for v in range(n):
        inputs[perm[v]] = base.inputs[v]
    adv = {"name": "scripted", "schedule": schedule} if trace.rounds else {"name": "static_path"}
    permuted = run(scenario_from_dict({"n": n, "p": p, "inputs": ",".join(map(str, inputs))}, adv))
    for rec, prec in zip(trace.records, permuted.records):
        assert [rec.mins[v] for v in range(n)] == [prec.mins[perm[v]] for v in range(n)]
    assert trace.verdict == permuted.verdict


def test_trace_roundtrip_and_check():
    trace = run(load_scenario(MINIMAL))
    data = parse_trace(trace.text())
    assert data["header"]["gamma"] == "15"
    assert len(data["records"]) == 16
    assert data["records"][3]["edges"] is not None
    assert format_edges(data["records"][3]["edges"]) == format_edges(trace.records[3].edges)
    assert check_trace(trace.text()) == []


def test_check_trace_catches_tampering():
    text = run(load_scenario(MINIMAL)).text()
    lines = text.splitlines()
    lines[-1] = lines[-1].replace("agreement_k=1", "agreement_k=2")
    assert any("agreement_k" in m for m in check_trace("\n".join(lines)))
    lines = text.splitlines()
    # swap in a 3-component topology for round 1
    lines[2] = lines[2].rsplit("edges=", 1)[0] + "edges=0-1"
    problems = check_trace("\n".join(lines))
    assert any("components" in m for m in problems)


def test_check_trace_phased_path_clean():
    assert check_trace(run(load_scenario(PHASED)).text()) == []


def test_parse_range():
    assert parse_range("4..7") == ["4", "5", "6", "7"]
    assert parse_range("0.5, 1,2") == ["0.5", "1", "2"]
    assert parse_range("") == []


def test_sweep_empty_range():
    assert sweep(read_config(MINIMAL), {"n": []}, trials=2) == []
    assert sweep(read_config(MINIMAL), {}, trials=2) == []


def test_sweep_epsilon_gamma_column():
    base = read_config(MINIMAL.replace("p_agreement", "k_agreement\nepsilon = 1").replace("n = 10", "n = 16"))
    rows = sweep(base, {"epsilon": ["0.5", "1", "2"]}, trials=2)
    for row, eps in zip(rows, ["0.5", "1", "2"]):
        gamma, k = budget_k_agreement(16, 2, eps)
        assert row.gamma == gamma and row.target == k
        assert row.all_ok and row.max_agreement_k <= k


def test_sweep_greedy_within_budget():
    base = read_config(MINIMAL.replace("static_path", "greedy_min_phi"))
    rows = sweep(base, {"n": parse_range("4..12")}, trials=1)
    assert [r.values["n"] for r in rows] == [str(n) for n in range(4, 13)]
    for r in rows:
        assert r.all_ok
        assert r.worst_merge_round <= budget_p_agreement(int(r.values["n"]), 2)


def test_sweep_records_failures_per_point():
    base = read_config(MINIMAL)
    rows = sweep(base, {"inputs": ["1,2", "distinct"]}, trials=1)
    assert len(rows[0].failures) == 1 and "inputs" in rows[0].failures[0]
    assert rows[1].all_ok


def test_sweep_seeds_stable_when_points_added():
    base = read_config(MINIMAL.replace("static_path", "random_partition"))
    small = sweep(base, {"n": ["5", "6"]}, trials=3)
    big = sweep(base, {"n": ["5", "6", "7"]}, trials=3)
    assert small == big[:2]
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2) != derive_seed(0, 2, 1)


def test_sweep_parallel_matches_serial():
    base = read_config(MINIMAL.replace("static_path", "random_partition"))
    vary = {"n": ["4", "8"], "p": ["1", "3"]}
    assert sweep(base, vary, trials=2, workers=2) == sweep(base, vary, trials=2)


def test_cli_run_and_check(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(MINIMAL)
    out = tmp_path / "run.trace"
    assert main(["run", str(cfg), "--trace-out", str(out), "--quiet"]) == 0
    assert capsys.readouterr().out == ""
    assert main(["check", str(out)]) == 0
    assert "check ok" in capsys.readouterr().out


def test_cli_overrides(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(MINIMAL.replace("static_path", "random_partition"))
    assert main(["run", str(cfg), "--seed", "5", "--horizon", "20"]) == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert "seed=5" in header and "horizon=20" in header
    assert main(["run", str(cfg), "--horizon", "3"]) == 2


def test_cli_expect_disagreement_exit(tmp_path):
    cfg = tmp_path / "phased.cfg"
    cfg.write_text(PHASED)
    assert main(["run", str(cfg), "--quiet"]) == 0
    cfg.write_text(PHASED.replace("expect_disagreement = true", "expect_disagreement = false"))
    assert main(["run", str(cfg), "--quiet"]) == 1


def test_cli_oracle(capsys):
    assert main(["oracle", "4", "2"]) == 0
    assert "worst_rounds=3 budget=3" in capsys.readouterr().out
    assert main(["oracle", "6", "2"]) == 2


def test_cli_sweep(tmp_path, capsys):
    cfg = tmp_path / "sw.cfg"
    cfg.write_text(MINIMAL + "\n[sweep]\nn = 3..5\ntrials = 2\n")
    assert main(["sweep", str(cfg)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("point\tn\tgamma")
    assert len(lines) == 4

"""Scenario configs, the lockstep execution loop, traces and sweeps.

Config files are flat ``key = value`` lines with an ``[adversary]``
section (and, for sweeps, a ``[sweep]`` section)::

    n = 10
    p = 2
    protocol = p_agreement

    [adversary]
    name = static_path
"""

from __future__ import annotations

import configparser
import itertools
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from partagree import adversary as adv
from partagree.analysis import (
    Verdict,
    check_run,
    next_mins,
    phi_increase_lower_bound,
    potential,
    quotient_graph,
    round_violations,
)
from partagree.netcore import (
    PartitionViolation,
    RoundTopology,
    TopologyError,
    count_components,
    format_edges,
    parse_edges,
)
from partagree.protocol import (
    KnownBound,
    ProcessState,
    UnknownSize,
    as_fraction,
    budget_k_agreement,
    budget_p_agreement,
    outgoing_message,
    step,
)

PROTOCOLS = ("p_agreement", "k_agreement", "unknown_size")
TOP_KEYS = {
    "n", "p", "protocol", "epsilon", "quiet_period", "gamma", "inputs",
    "seed", "horizon", "expect_disagreement",
}
ADVERSARY_KEYS = {
    "static_path": set(),
    "scripted": {"schedule"},
    "random_partition": {"density"},
    "greedy_min_phi": {"candidate_budget", "level"},
    "phased_path": {"k", "t", "quiet_period"},
}
SWEEP_META_KEYS = {"trials", "workers"}


class ScenarioError(ValueError):
    """Config that does not parse or violates a scenario invariant."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class Scenario:
    n: int
    p: int
    protocol: str
    variant: KnownBound | UnknownSize
    level: int
    target: int
    adversary: str
    adversary_params: dict
    inputs: tuple[int, ...]
    seed: int
    horizon: int
    epsilon: Fraction | None = None
    budget_override: bool = False
    expect_disagreement: bool = False
    # raw key/value text the scenario was built from, kept for sweeps
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def gamma(self) -> int | None:
        return self.variant.gamma if isinstance(self.variant, KnownBound) else None

    def make_strategy(self):
        params = self.adversary_params
        if self.adversary == "static_path":
            return adv.StaticPath()
        if self.adversary == "scripted":
            return adv.Scripted(params["schedule"])
        if self.adversary == "random_partition":
            return adv.RandomPartition(params.get("density", 0.0))
        if self.adversary == "greedy_min_phi":
            return adv.GreedyMinPhi(params.get("candidate_budget", 200), params.get("level", self.level))
        if self.adversary == "phased_path":
            return adv.PhasedPath(params["phased"])
        raise ScenarioError("adversary.name", f"unknown strategy {self.adversary!r}")

    def header(self) -> str:
        fields = [
            f"n={self.n}",
            f"p={self.p}",
            f"protocol={self.protocol}",
            f"level={self.level}",
            f"target={self.target}",
            f"gamma={'-' if self.gamma is None else self.gamma}",
            f"epsilon={'-' if self.epsilon is None else self.epsilon}",
            f"T={self.variant.quiet_period if isinstance(self.variant, UnknownSize) else '-'}",
            f"adversary={self.adversary}",
            f"seed={self.seed}",
            f"horizon={self.horizon}",
            f"budget_override={_fmt_bool(self.budget_override)}",
            f"expect_disagreement={_fmt_bool(self.expect_disagreement)}",
            f"inputs={_fmt_ints(self.inputs)}",
        ]
        return "scenario " + " ".join(fields)


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def _fmt_ints(xs) -> str:
    return ",".join(str(x) for x in xs)


def _int(raw: dict, key: str, default=None, minimum: int | None = None) -> int | None:
    if key not in raw or raw[key] == "":
        return default
    try:
        value = int(raw[key])
    except ValueError:
        raise ScenarioError(key, f"expected an integer, got {raw[key]!r}") from None
    if minimum is not None and value < minimum:
        raise ScenarioError(key, f"must be >= {minimum}, got {value}")
    return value


def _bool(raw: dict, key: str) -> bool:
    value = raw.get(key, "false").strip().lower()
    if value not in ("true", "false", "1", "0", "yes", "no"):
        raise ScenarioError(key, f"expected true/false, got {value!r}")
    return value in ("true", "1", "yes")


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from a tuple of ints/strings."""
    return random.Random(":".join(str(x) for x in parts)).getrandbits(63)


def _parse_schedule(text: str, n: int) -> list[RoundTopology]:
    try:
        return [parse_edges(chunk, n) for chunk in text.split(";")]
    except (TopologyError, ValueError) as exc:
        raise ScenarioError("adversary.schedule", str(exc)) from None


def _resolve_inputs(spec: str, n: int, seed: int, default: list[int] | None) -> tuple[int, ...]:
    spec = spec.strip()
    if not spec:
        return tuple(default if default is not None else range(1, n + 1))
    if spec == "distinct":
        return tuple(range(1, n + 1))
    if spec == "random":
        rng = random.Random(derive_seed("inputs", seed))
        return tuple(rng.randint(1, n) for _ in range(n))
    try:
        values = tuple(int(x) for x in spec.split(","))
    except ValueError:
        raise ScenarioError("inputs", f"expected distinct, random or a comma list, got {spec!r}") from None
    if len(values) != n:
        raise ScenarioError("inputs", f"{len(values)} values given for n={n}")
    return values


def scenario_from_dict(top: dict, adversary: dict) -> Scenario:
    """Validate raw string key/values and resolve every default."""
    top = {k: str(v).strip() for k, v in top.items()}
    adversary = {k: str(v).strip() for k, v in adversary.items()}
    unknown = set(top) - TOP_KEYS
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown key")
    name = adversary.get("name", "")
    if name not in ADVERSARY_KEYS:
        raise ScenarioError("adversary.name", f"unknown strategy {name!r}, expected one of {sorted(ADVERSARY_KEYS)}")
    unknown = set(adversary) - ADVERSARY_KEYS[name] - {"name"}
    if unknown:
        raise ScenarioError(f"adversary.{sorted(unknown)[0]}", f"not a parameter of {name}")

    seed = _int(top, "seed", 0)
    p = _int(top, "p", minimum=1)
    if p is None:
        raise ScenarioError("p", "required")

    params: dict = {}
    default_inputs = None
    phased = None
    if name == "phased_path":
        k = _int(adversary, "k", minimum=1)
        t = _int(adversary, "t", minimum=1)
        T = _int(adversary, "quiet_period", _int(top, "quiet_period"), minimum=1)
        for key, value in (("k", k), ("t", t), ("quiet_period", T)):
            if value is None:
                raise ScenarioError(f"adversary.{key}", "required for phased_path")
        try:
            phased = adv.PhasedPathParams(k=k, segment_halfwidth=t, quiet_period=T)
        except ValueError as exc:
            raise ScenarioError("adversary.t", str(exc)) from None
        params["phased"] = phased
        default_inputs = phased.inputs()
        if p < 2:
            raise ScenarioError("p", "phased_path isolates a vertex, so p must be >= 2")

    n = _int(top, "n", phased.n if phased else None, minimum=1)
    if n is None:
        raise ScenarioError("n", "required")
    if phased and n != phased.n:
        raise ScenarioError("n", f"phased_path with k={phased.k}, t={phased.segment_halfwidth} needs n={phased.n}")

    protocol = top.get("protocol", "p_agreement")
    if protocol not in PROTOCOLS:
        raise ScenarioError("protocol", f"expected one of {PROTOCOLS}, got {protocol!r}")

    epsilon = None
    override = False
    if protocol == "p_agreement":
        gamma, level = budget_p_agreement(n, p), p
    elif protocol == "k_agreement":
        if not top.get("epsilon"):
            raise ScenarioError("epsilon", "required for k_agreement")
        try:
            epsilon = as_fraction(top["epsilon"])
        except ValueError:
            raise ScenarioError("epsilon", f"not a number: {top['epsilon']!r}") from None
        if epsilon <= 0:
            raise ScenarioError("epsilon", "must be positive")
        gamma, level = budget_k_agreement(n, p, epsilon)
    else:
        gamma, level = None, p

    if protocol == "unknown_size":
        T = _int(top, "quiet_period", phased.quiet_period if phased else None, minimum=1)
        if T is None:
            raise ScenarioError("quiet_period", "required for unknown_size")
        if phased and T != phased.quiet_period:
            raise ScenarioError("quiet_period", f"protocol T={T} differs from phased_path T={phased.quiet_period}")
        variant: KnownBound | UnknownSize = UnknownSize(T)
        if "gamma" in top:
            raise ScenarioError("gamma", "only meaningful for known-bound protocols")
    else:
        explicit = _int(top, "gamma", minimum=0)
        if explicit is not None:
            override = explicit != gamma
            gamma = explicit
        variant = KnownBound(gamma)

    target = phased.k if phased else level

    if phased:
        default_horizon = phased.horizon
    elif gamma is not None:
        default_horizon = gamma
    else:
        default_horizon = None
    horizon = _int(top, "horizon", default_horizon, minimum=0)
    if horizon is None:
        raise ScenarioError("horizon", "required for unknown_size runs without phased_path")
    if gamma is not None and horizon < gamma:
        raise ScenarioError("horizon", f"{horizon} is below the round budget {gamma}")
    if phased and horizon > phased.horizon:
        raise ScenarioError("horizon", f"phased_path construction ends after {phased.horizon} rounds")

    if name == "scripted":
        if "schedule" not in adversary:
            raise ScenarioError("adversary.schedule", "required for scripted")
        params["schedule"] = _parse_schedule(adversary["schedule"], n)
    elif name == "random_partition":
        try:
            params["density"] = float(adversary.get("density", "0") or 0)
        except ValueError:
            raise ScenarioError("adversary.density", "not a number") from None
    elif name == "greedy_min_phi":
        params["candidate_budget"] = _int(adversary, "candidate_budget", 200, minimum=1)
        params["level"] = _int(adversary, "level", level, minimum=1)

    inputs = _resolve_inputs(top.get("inputs", ""), n, seed, default_inputs)

    return Scenario(
        n=n,
        p=p,
        protocol=protocol,
        variant=variant,
        level=level,
        target=target,
        adversary=name,
        adversary_params=params,
        inputs=inputs,
        seed=seed,
        horizon=horizon,
        epsilon=epsilon,
        budget_override=override,
        expect_disagreement=_bool(top, "expect_disagreement"),
        raw={"top": top, "adversary": adversary},
    )


def read_config(source) -> dict[str, dict[str, str]]:
    """Split config text into {'top': ..., 'adversary': ..., 'sweep': ...}."""
    if isinstance(source, Path) or ("\n" not in str(source) and os.path.exists(str(source))):
        text = Path(source).read_text()
    else:
        text = str(source)
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[top]\n" + text)
    except configparser.Error as exc:
        raise ScenarioError("config", str(exc).replace("\n", " ")) from None
    sections = {name: dict(parser[name]) for name in parser.sections()}
    unknown = set(sections) - {"top", "adversary", "sweep"}
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown section")
    sections.setdefault("adversary", {})
    sections.setdefault("sweep", {})
    return sections


def load_scenario(source, overrides: dict | None = None) -> Scenario:
    """Parse a config file path or config text into a validated Scenario."""
    sections = read_config(source)
    top = dict(sections["top"])
    top.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    return scenario_from_dict(top, sections["adversary"])


@dataclass(frozen=True)
class RoundRecord:
    """State at the start of round t plus the topology E(t-1) that produced it."""

    t: int
    mins: tuple[int, ...]
    decided: tuple[int | None, ...]
    phi: int
    dphi: int | None = None
    comps: int | None = None
    qbound: int | None = None
    edges: RoundTopology | None = None

    @property
    def S(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.mins)))

    def line(self) -> str:
        def opt(x):
            return "-" if x is None else str(x)

        dec = ",".join("_" if d is None else str(d) for d in self.decided)
        edges = "-" if self.edges is None else format_edges(self.edges)
        return (
            f"t={self.t} phi={self.phi} dphi={opt(self.dphi)} S={_fmt_ints(self.S)} "
            f"comps={opt(self.comps)} qb={opt(self.qbound)} m={_fmt_ints(self.mins)} "
            f"dec={dec} edges={edges}"
        )


@dataclass
class ExecutionTrace:
    scenario: Scenario
    records: list[RoundRecord]
    final_states: tuple[ProcessState, ...]
    aborted: PartitionViolation | None = None
    verdict: Verdict | None = None

    @property
    def inputs(self) -> tuple[int, ...]:
        return self.scenario.inputs

    @property
    def rounds(self) -> int:
        return len(self.records) - 1

    @property
    def merge_round(self) -> int | None:
        """First t with |S(t)| <= the agreement target."""
        for rec in self.records:
            if len(rec.S) <= self.scenario.target:
                return rec.t
        return None

    def lines(self) -> list[str]:
        out = [self.scenario.header()]
        out += [rec.line() for rec in self.records]
        if self.aborted is not None:
            out.append(f"abort t={self.aborted.round} comps={self.aborted.count}")
        v = self.verdict
        out.append(
            f"verdict agreement_k={v.agreement_k} W={_fmt_ints(sorted(v.decision_set))} "
            f"validity={_fmt_bool(v.validity_ok)} termination={_fmt_bool(v.termination_ok)} "
            f"rounds={v.rounds_used}"
        )
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def succeeded(self) -> bool:
        """Exit-code semantics: target met, inverted for impossibility demos."""
        ok = self.aborted is None and self.verdict.satisfies(self.scenario.target)
        return ok != self.scenario.expect_disagreement


def run(scenario: Scenario) -> ExecutionTrace:
    """Execute the scenario round by round in lockstep."""
    n, level, variant = scenario.n, scenario.level, scenario.variant
    states = [ProcessState.initial(x) for x in scenario.inputs]
    if isinstance(variant, KnownBound) and variant.gamma == 0:
        states = [ProcessState(s.input, s.current_min, s.current_min) for s in states]

    def snapshot(t, **extra):
        return RoundRecord(
            t=t,
            mins=tuple(s.current_min for s in states),
            decided=tuple(s.decided for s in states),
            phi=potential(states, level),
            **extra,
        )

    records = [snapshot(0)]
    strategy = scenario.make_strategy()
    rng = random.Random(scenario.seed)
    aborted = None
    for t in range(scenario.horizon):
        if all(s.decided is not None for s in states):
            break
        ctx = adv.AdversaryContext(round=t, states=tuple(states), n=n, p=scenario.p, rng=rng)
        try:
            topo = adv.next_topology(strategy, ctx)
        except PartitionViolation as exc:
            aborted = exc
            break
        messages = [outgoing_message(s) for s in states]
        inbox = [[messages[u] for u in nbrs] for nbrs in topo.neighbors()]
        qbound = phi_increase_lower_bound(quotient_graph(states, topo, level))
        before = records[-1].phi
        states = [step(s, received, variant, t) for s, received in zip(states, inbox)]
        rec = snapshot(t + 1, comps=count_components(topo).count, qbound=qbound, edges=topo)
        records.append(replace(rec, dphi=rec.phi - before))

    trace = ExecutionTrace(scenario, records, tuple(states), aborted)
    trace.verdict = check_run(trace, scenario)
    return trace


def parse_trace(text: str) -> dict:
    """Inverse of ExecutionTrace.text(), as plain data."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("scenario "):
        raise ValueError("trace must start with a scenario header")

    def kv(line: str) -> dict[str, str]:
        tokens = line.split(" ")
        if "=" not in tokens[0]:
            tokens = tokens[1:]
        return dict(tok.split("=", 1) for tok in tokens)

    header = kv(lines[0])
    n = int(header["n"])
    records, verdict, abort = [], None, None
    for line in lines[1:]:
        if line.startswith("t="):
            f = kv(line)
            records.append(
                {
                    "t": int(f["t"]),
                    "phi": int(f["phi"]),
                    "dphi": None if f["dphi"] == "-" else int(f["dphi"]),
                    "S": tuple(int(x) for x in f["S"].split(",")),
                    "comps": None if f["comps"] == "-" else int(f["comps"]),
                    "qb": None if f["qb"] == "-" else int(f["qb"]),
                    "m": tuple(int(x) for x in f["m"].split(",")),
                    "dec": tuple(None if x == "_" else int(x) for x in f["dec"].split(",")),
                    "edges": None if f["edges"] == "-" else parse_edges(f["edges"], n),
                }
            )
        elif line.startswith("verdict "):
            verdict = kv(line)
        elif line.startswith("abort "):
            abort = kv(line)
        else:
            raise ValueError(f"unrecognized trace line {line!r}")
    if verdict is None:
        raise ValueError("trace has no verdict line")
    return {"header": header, "records": records, "verdict": verdict, "abort": abort}


def check_trace(text: str) -> list[str]:
    """Re-verify a saved trace; returns a list of problems (empty if clean).

    Checks the p bound on every topology, that each round is exactly
    min-flooding for the processes undecided at its start, the growth
    lemmas on rounds where nobody had decided yet, and the verdict line.
    """
    data = parse_trace(text)
    h = data["header"]
    p, level = int(h["p"]), int(h["level"])
    inputs = tuple(int(x) for x in h["inputs"].split(","))
    recs = data["records"]
    problems = []
    if recs[0]["m"] != inputs:
        problems.append("round-0 mins differ from inputs")
    if recs[0]["phi"] != potential(inputs, level):
        problems.append("round-0 phi differs from inputs")
    for prev, cur in zip(recs, recs[1:]):
        t, topo = cur["t"], cur["edges"]
        if topo is None:
            problems.append(f"t={t}: missing topology")
            continue
        comps = count_components(topo).count
        if comps > p or comps != cur["comps"]:
            problems.append(f"t={t}: topology has {comps} components (recorded {cur['comps']}, p={p})")
        if cur["phi"] != potential(cur["m"], level) or cur["dphi"] != cur["phi"] - prev["phi"]:
            problems.append(f"t={t}: phi/dphi inconsistent with mins")
        if cur["qb"] != phi_increase_lower_bound(quotient_graph(prev["m"], topo, level)):
            problems.append(f"t={t}: quotient bound mismatch")
        flooded = next_mins(prev["m"], topo)
        for v, (d, want, got) in enumerate(zip(prev["dec"], flooded, cur["m"])):
            if (d is None and want != got) or (d is not None and got != prev["m"][v]):
                problems.append(f"t={t}: process {v} has min {got}, expected {want if d is None else prev['m'][v]}")
        if all(d is None for d in prev["dec"]):
            problems += [f"t={t}: {msg}" for msg in round_violations(prev["m"], cur["m"], topo, p, level)]
    decisions = recs[-1]["dec"]
    W = sorted({d for d in decisions if d is not None})
    expected = {
        "agreement_k": str(len(W)),
        "W": _fmt_ints(W),
        "validity": _fmt_bool(set(W) <= set(inputs)),
        "termination": _fmt_bool(all(d is not None for d in decisions)),
        "rounds": str(len(recs) - 1),
    }
    for key, value in expected.items():
        if data["verdict"].get(key) != value:
            problems.append(f"verdict {key}={data['verdict'].get(key)} but trace implies {value}")
    return problems


def parse_range(text: str) -> list[str]:
    """`4..12` (inclusive ints) or a comma list; empty text gives []."""
    text = text.strip()
    if not text:
        return []
    if ".." in text:
        lo, hi = text.split("..", 1)
        return [str(x) for x in range(int(lo), int(hi) + 1)]
    return [x.strip() for x in text.split(",") if x.strip()]


@dataclass(frozen=True)
class SweepRow:
    point: int
    values: dict
    gamma: int | None
    target: int
    trials: int
    worst_merge_round: int | None
    max_agreement_k: int | None
    failures: tuple[str, ...]

    @property
    def all_ok(self) -> bool:
        return not self.failures


def _sweep_job(args) -> tuple[int, int, dict]:
    top, adversary, point, trial = args
    try:
        scenario = scenario_from_dict(top, adversary)
        trace = run(scenario)
    except (ValueError, PartitionViolation) as exc:
        return point, trial, {"error": str(exc)}
    result = {
        "gamma": scenario.gamma,
        "target": scenario.target,
        "merge_round": trace.merge_round,
        "agreement_k": trace.verdict.agreement_k,
    }
    if trace.aborted is not None:
        result["error"] = str(trace.aborted)
    elif not trace.succeeded():
        result["error"] = f"verdict misses target: agreement_k={trace.verdict.agreement_k}"
    return point, trial, result


def sweep(base: dict, vary: dict[str, list], trials: int = 1, workers: int = 1) -> list[SweepRow]:
    """Run every combination of `vary` values, `trials` times each.

    `base` is {'top': ..., 'adversary': ...} as returned by read_config.
    Keys of `vary` name top-level keys, or adversary keys as `adversary.x`.
    Each run's seed is derived from (base seed, point index, trial index).
    """
    keys = list(vary)
    points = list(itertools.product(*(vary[k] for k in keys))) if keys and all(vary[k] for k in keys) else []
    base_seed = int(base["top"].get("seed", 0) or 0)
    jobs = []
    for point, combo in enumerate(points):
        for trial in range(trials):
            top, adversary = dict(base["top"]), dict(base["adversary"])
            for key, value in zip(keys, combo):
                if key.startswith("adversary."):
                    adversary[key.split(".", 1)[1]] = str(value)
                else:
                    top[key] = str(value)
            top["seed"] = str(derive_seed(base_seed, point, trial))
            jobs.append((top, adversary, point, trial))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]

    rows = []
    for point, combo in enumerate(points):
        mine = [r for pt, _, r in results if pt == point]
        ok = [r for r in mine if "merge_round" in r]
        merges = [r["merge_round"] for r in ok if r["merge_round"] is not None]
        rows.append(
            SweepRow(
                point=point,
                values=dict(zip(keys, combo)),
                gamma=ok[0]["gamma"] if ok else None,
                target=ok[0]["target"] if ok else -1,
                trials=trials,
                worst_merge_round=max(merges) if merges else None,
                max_agreement_k=max(r["agreement_k"] for r in ok) if ok else None,
                failures=tuple(r["error"] for r in mine if "error" in r),
            )
        )
    return rows


def format_sweep(rows: list[SweepRow]) -> str:
    if not rows:
        return ""
    keys = list(rows[0].values)
    head = ["point", *keys, "gamma", "target", "trials", "worst_merge_round", "max_agreement_k", "failures"]
    out = ["\t".join(head)]
    for r in rows:
        def opt(x):
            return "-" if x is None else str(x)

        cells = [str(r.point), *(str(r.values[k]) for k in keys), opt(r.gamma), str(r.target),
                 str(r.trials), opt(r.worst_merge_round), opt(r.max_agreement_k), str(len(r.failures))]
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"

"""Scenario files, scenario generators, performance metrics and result export.

A scenario file is a UTF-8 JSON object with the sections ``agents``,
``graph``, ``credibility``, ``policy`` and ``run`` plus an optional
``label``. Unknown keys are rejected. See ``docs/scenario_schema.md``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .cascade import Trajectory, simulate
from .control import ControlledTrajectory, PolicyParams, receding_horizon_run
from .epistemics import DEFICIT, EXCESS, Agent, CredibilityMatrix, build_credibility_matrix
from .errors import BadRecord, EpicascadeError, ParseError, ValidationError
from .network import Graph, build_graph, generate_er_graph

__all__ = [
    "OPEN_LOOP",
    "CLOSED_LOOP",
    "EDUCATION_RELIABILITY",
    "Scenario",
    "Metrics",
    "load_scenario",
    "loads_scenario",
    "dump_scenario",
    "write_scenario",
    "generate_comparative",
    "synthesize_agent_file",
    "default_agent_file",
    "read_agent_file",
    "generate_data_driven",
    "compute_metrics",
    "run_scenario",
    "run_batch",
    "export_results",
    "default_workers",
]

OPEN_LOOP = "open_loop"
CLOSED_LOOP = "closed_loop"

EDUCATION_RELIABILITY = {"low": 0.3, "medium": 0.6, "high": 0.8}

COST_CONVENTION = "sum of all applied inputs over agents and t = 0 .. end of run"

_TOP_KEYS = {"label", "agents", "graph", "credibility", "policy", "run"}
_AGENT_KEYS = {"id", "groups", "reliability", "resistivity", "responsiveness", "seed"}
_GRAPH_KEYS = {"n", "edges", "generator"}
_GENERATOR_KEYS = {"p", "seed", "max_attempts"}
_CRED_KEYS = {"mode", "overrides"}
_POLICY_KEYS = {"omega_rho", "omega_u", "horizon", "t_max", "track_adopters"}
_RUN_KEYS = {"mode", "rng_seed", "max_t"}


@dataclass(frozen=True)
class Scenario:
    agents: tuple
    edges: tuple | None = None
    generator: dict | None = None
    credibility_mode: str = EXCESS
    overrides: tuple = ()
    policy: PolicyParams = PolicyParams()
    mode: str = CLOSED_LOOP
    rng_seed: int | None = None
    max_t: int | None = None
    label: str = ""

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def seeds(self) -> frozenset:
        return frozenset(a.id for a in self.agents if a.is_seed)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([a.rho0 for a in self.agents])

    @cached_property
    def network(self) -> Graph:
        if self.generator is not None:
            g = self.generator
            return generate_er_graph(self.n, g["p"], g["seed"], g.get("max_attempts", 1000))
        return build_graph(self.n, self.edges)

    @cached_property
    def credibility(self) -> CredibilityMatrix:
        return build_credibility_matrix(
            self.agents, self.credibility_mode, {(x, y): v for x, y, v in self.overrides}
        )


@dataclass(frozen=True)
class Metrics:
    C: float
    C_bar: float
    t_star_star: int | None
    scenario_label: str = ""
    rng_seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "C_bar": self.C_bar,
            "t_star_star": self.t_star_star,
            "scenario_label": self.scenario_label,
            "rng_seed": self.rng_seed,
            "cost_convention": COST_CONVENTION,
        }


# ---------------------------------------------------------------- parsing


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", where)
    extra = set(obj) - allowed
    if extra:
        raise ParseError(f"unknown field(s) {sorted(extra)}", where)


def _number(obj, key, where, default=None, kind=float):
    if key not in obj:
        if default is None:
            raise ParseError(f"missing field {key!r}", where)
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"field {key!r} must be a number", where)
    if kind is int:
        if int(v) != v:
            raise ParseError(f"field {key!r} must be an integer", where)
        return int(v)
    return float(v)


def _parse_agent(i, raw) -> Agent:
    where = f"agents[{i}]"
    _check_keys(raw, _AGENT_KEYS, where)
    groups = raw.get("groups", [])
    if not isinstance(groups, list) or not all(isinstance(g, str) for g in groups):
        raise ParseError("groups must be a list of strings", where)
    seed = raw.get("seed", False)
    if not isinstance(seed, bool):
        raise ParseError("seed must be true or false", where)
    aid = _number(raw, "id", where, kind=int)
    r = _number(raw, "reliability", where, 1.0)
    rho = _number(raw, "resistivity", where)
    b = _number(raw, "responsiveness", where, -1.0)
    if aid != i:
        raise ValidationError(f"{where}: agent ids must be dense and ordered 0..n-1 (got id {aid})")
    if not 0.0 <= r <= 1.0:
        raise ValidationError(f"{where}: reliability {r} outside [0, 1]")
    if not 0.0 <= rho <= 1.0:
        raise ValidationError(f"{where}: resistivity {rho} outside [0, 1]")
    if not -1.0 <= b <= 1.0 or (b == 0.0 and not seed):
        raise ValidationError(f"{where}: responsiveness {b} must lie in [-1, 1] and be nonzero for non-seeds")
    return Agent(aid, frozenset(groups), r, rho, b, seed)


def _from_tree(tree) -> Scenario:
    _check_keys(tree, _TOP_KEYS, "<root>")
    for key in ("agents", "graph"):
        if key not in tree:
            raise ParseError(f"missing section {key!r}", "<root>")
    if not isinstance(tree["agents"], list) or not tree["agents"]:
        raise ValidationError("agents: at least one agent is required")
    agents = tuple(_parse_agent(i, a) for i, a in enumerate(tree["agents"]))
    n = len(agents)
    if not any(a.is_seed for a in agents):
        raise ValidationError("agents: the seed set must be non-empty")

    graph = tree["graph"]
    _check_keys(graph, _GRAPH_KEYS, "graph")
    if "n" in graph and _number(graph, "n", "graph", kind=int) != n:
        raise ValidationError(f"graph.n = {graph['n']} does not match {n} agents")
    edges = generator = None
    if ("edges" in graph) == ("generator" in graph):
        raise ParseError("exactly one of 'edges' or 'generator' is required", "graph")
    if "edges" in graph:
        raw = graph["edges"]
        if not isinstance(raw, list) or not all(
            isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in e)
            for e in raw
        ):
            raise ParseError("edges must be a list of [int, int] pairs", "graph.edges")
        edges = tuple(tuple(e) for e in raw)
    else:
        gen = graph["generator"]
        _check_keys(gen, _GENERATOR_KEYS, "graph.generator")
        p = _number(gen, "p", "graph.generator")
        if not 0 < p <= 1:
            raise ValidationError(f"graph.generator.p = {p} outside (0, 1]")
        generator = {
            "p": p,
            "seed": _number(gen, "seed", "graph.generator", kind=int),
            "max_attempts": _number(gen, "max_attempts", "graph.generator", 1000, kind=int),
        }

    cred = tree.get("credibility", {})
    _check_keys(cred, _CRED_KEYS, "credibility")
    cmode = cred.get("mode", EXCESS)
    if cmode not in (EXCESS, DEFICIT):
        raise ValidationError(f"credibility.mode must be {EXCESS!r} or {DEFICIT!r}, got {cmode!r}")
    overrides = []
    for j, o in enumerate(cred.get("overrides", [])):
        where = f"credibility.overrides[{j}]"
        if not (isinstance(o, list) and len(o) == 3):
            raise ParseError("override must be [speaker, hearer, value]", where)
        x, y, v = o
        if not (isinstance(x, int) and isinstance(y, int) and 0 <= x < n and 0 <= y < n and x != y):
            raise ValidationError(f"{where}: override ids must be distinct agents in 0..{n - 1}")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
            raise ValidationError(f"{where}: override value must lie in [0, 1]")
        overrides.append((x, y, float(v)))

    pol = tree.get("policy", {})
    _check_keys(pol, _POLICY_KEYS, "policy")
    track = pol.get("track_adopters", False)
    if not isinstance(track, bool):
        raise ParseError("track_adopters must be true or false", "policy")
    policy = PolicyParams(
        omega_rho=_number(pol, "omega_rho", "policy", 1.0),
        omega_u=_number(pol, "omega_u", "policy", 1.0),
        horizon=_number(pol, "horizon", "policy", 10, kind=int),
        t_max=_number(pol, "t_max", "policy", 200, kind=int),
        track_adopters=track,
    )
    if not (policy.omega_rho > 0 and policy.omega_u > 0):
        raise ValidationError("policy: omega_rho and omega_u must be strictly positive")
    if policy.horizon < 1 or policy.t_max < 0:
        raise ValidationError("policy: horizon must be >= 1 and t_max >= 0")

    run = tree.get("run", {})
    _check_keys(run, _RUN_KEYS, "run")
    mode = run.get("mode", CLOSED_LOOP)
    if mode not in (OPEN_LOOP, CLOSED_LOOP):
        raise ValidationError(f"run.mode must be {OPEN_LOOP!r} or {CLOSED_LOOP!r}, got {mode!r}")
    rng_seed = run.get("rng_seed")
    if rng_seed is not None:
        rng_seed = _number(run, "rng_seed", "run", kind=int)
    max_t = run.get("max_t")
    if max_t is not None:
        max_t = _number(run, "max_t", "run", kind=int)

    label = tree.get("label", "")
    if not isinstance(label, str):
        raise ParseError("label must be a string", "<root>")

    sc = Scenario(agents, edges, generator, cmode, tuple(overrides), policy, mode, rng_seed, max_t, label)
    try:
        sc.network
        sc.credibility
    except EpicascadeError as exc:
        raise ValidationError(f"graph: {exc}") from exc
    return sc


def loads_scenario(text: str) -> Scenario:
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from exc
    return _from_tree(tree)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read scenario file: {exc.strerror}", str(path)) from exc
    return loads_scenario(text)


def _to_tree(sc: Scenario) -> dict:
    tree = {"label": sc.label, "agents": []}
    for a in sc.agents:
        tree["agents"].append(
            {
                "id": a.id,
                "groups": sorted(a.groups),
                "reliability": a.reliability,
                "resistivity": a.rho0,
                "responsiveness": a.responsiveness,
                "seed": a.is_seed,
            }
        )
    if sc.generator is not None:
        tree["graph"] = {"n": sc.n, "generator": dict(sc.generator)}
    else:
        tree["graph"] = {"n": sc.n, "edges": [list(e) for e in sc.edges]}
    tree["credibility"] = {"mode": sc.credibility_mode, "overrides": [list(o) for o in sc.overrides]}
    p = sc.policy
    tree["policy"] = {
        "omega_rho": p.omega_rho,
        "omega_u": p.omega_u,
        "horizon": p.horizon,
        "t_max": p.t_max,
        "track_adopters": p.track_adopters,
    }
    run = {"mode": sc.mode, "rng_seed": sc.rng_seed}
    if sc.max_t is not None:
        run["max_t"] = sc.max_t
    tree["run"] = run
    return tree


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(_to_tree(sc), indent=2) + "\n"


def write_scenario(sc: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(dump_scenario(sc), encoding="utf-8", newline="\n")
    return path


# ------------------------------------------------------------- generators


def generate_comparative(scenario_id: int, rng_seed: int, n: int = 20, p: float = 0.5,
                         n_seeds: int = 2, low: float = 0.5, high: float = 1.0,
                         responsiveness: float = -1.0) -> Scenario:
    """20-agent comparative setting; ids 1-3 share graph and seeds for a seed.

    1: every agent equally credible (fair). 2: seeds speak with credibility
    ``low`` to everyone, non-seeds with ``high``. 3: the reverse.
    """
    if scenario_id not in (1, 2, 3):
        raise ValueError(f"scenario_id must be 1, 2 or 3, got {scenario_id}")
    seed_ids = np.random.default_rng([rng_seed, 1]).choice(n, size=n_seeds, replace=False)
    seeds = set(seed_ids.tolist())
    agents = tuple(Agent(i, frozenset(), high, 0.8, responsiveness, i in seeds) for i in range(n))
    overrides = []
    if scenario_id != 1:
        lowered = seeds if scenario_id == 2 else set(range(n)) - seeds
        overrides = [(x, y, low) for x in sorted(lowered) for y in range(n) if y != x]
    return Scenario(
        agents=agents,
        generator={"p": p, "seed": int(rng_seed), "max_attempts": 1000},
        overrides=tuple(overrides),
        policy=PolicyParams(1.0, 1.0, 10, 200),
        mode=CLOSED_LOOP,
        rng_seed=int(rng_seed),
        label=f"comparative-{scenario_id}",
    )


_AGENT_FILE_COLUMNS = ["id", "education", "groups", "ev_owner", "resistivity"]
_GROUPS = ("gender", "income", "age", "residence")


def synthesize_agent_file(path, n: int = 168, seed: int = 2015, ev_share: float = 0.05) -> Path:
    """Write a schema-conformant synthetic survey file.

    Resistivities sit on a 0.05 grid so many agents share a value.
    """
    rng = np.random.default_rng(seed)
    edu = rng.choice(["low", "medium", "high"], size=n, p=[0.3, 0.45, 0.25])
    membership = rng.random((n, len(_GROUPS))) < np.array([0.5, 0.35, 0.3, 0.2])
    n_ev = max(1, int(round(ev_share * n)))
    ev = np.zeros(n, dtype=bool)
    ev[rng.choice(n, size=n_ev, replace=False)] = True
    rho = np.round(rng.uniform(0.3, 0.95, size=n) / 0.05) * 0.05
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_AGENT_FILE_COLUMNS)
        for i in range(n):
            groups = ";".join(g for g, m in zip(_GROUPS, membership[i]) if m)
            w.writerow([i, edu[i], groups, int(ev[i]), f"{rho[i]:.2f}"])
    return path


def default_agent_file() -> Path:
    return Path(__file__).parent / "data" / "synthetic_agents.csv"


def read_agent_file(path) -> list[dict]:
    records = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != set(_AGENT_FILE_COLUMNS):
            raise BadRecord(f"header must be {','.join(_AGENT_FILE_COLUMNS)}", 1)
        for row_no, row in enumerate(reader, start=2):
            try:
                rid = int(row["id"])
                education = row["education"].strip().lower()
                if education not in EDUCATION_RELIABILITY:
                    raise ValueError(f"unknown education level {row['education']!r}")
                ev = row["ev_owner"].strip()
                if ev not in ("0", "1"):
                    raise ValueError("ev_owner must be 0 or 1")
                rho = float(row["resistivity"])
                if not 0.0 <= rho <= 1.0:
                    raise ValueError(f"resistivity {rho} outside [0, 1]")
            except (TypeError, ValueError) as exc:
                raise BadRecord(str(exc), row_no) from exc
            if rid != len(records):
                raise BadRecord(f"ids must be dense and ordered, got {rid}", row_no)
            groups = frozenset(g for g in row["groups"].split(";") if g)
            records.append(
                {"id": rid, "education": education, "groups": groups, "ev_owner": ev == "1", "resistivity": rho}
            )
    if not records:
        raise BadRecord("no agent records", 2)
    return records


def generate_data_driven(agent_file=None, rng_seed: int = 0, jitter: float = 0.0,
                         edge_p: float = 0.05, responsiveness: float = -1.0) -> Scenario:
    """Survey-style scenario: EV owners seed the cascade.

    Reliability comes from the education level, optionally perturbed by a
    seeded uniform jitter of half-width ``jitter`` and clipped to [0, 1].
    """
    records = read_agent_file(agent_file if agent_file is not None else default_agent_file())
    rng = np.random.default_rng([rng_seed, 2])
    agents = []
    for rec in records:
        r = EDUCATION_RELIABILITY[rec["education"]]
        if jitter:
            r = float(np.clip(r + rng.uniform(-jitter, jitter), 0.0, 1.0))
        agents.append(Agent(rec["id"], rec["groups"], r, rec["resistivity"], responsiveness, rec["ev_owner"]))
    if not any(a.is_seed for a in agents):
        raise BadRecord("no EV owner in the agent file; the seed set would be empty", 2)
    return Scenario(
        agents=tuple(agents),
        generator={"p": edge_p, "seed": int(rng_seed), "max_attempts": 1000},
        policy=PolicyParams(1.0, 1.0, 10, 200),
        mode=CLOSED_LOOP,
        rng_seed=int(rng_seed),
        label="data-driven",
    )


# ----------------------------------------------------------------- running


def compute_metrics(traj: ControlledTrajectory, n: int | None = None, label: str = "",
                    rng_seed: int | None = None) -> Metrics:
    """Total cost, average cost and time of full adoption.

    ``n`` defaults to the number of agents the policy addresses (the
    non-seeds).
    """
    if n is None:
        n = traj.n - len(traj.seeds)
    total = float(traj.inputs.sum())
    return Metrics(total, total / n if n else 0.0, traj.t_star_star, label, rng_seed)


def run_scenario(sc: Scenario):
    """Run a scenario in its declared mode.

    Returns the trajectory and, for closed loop, its metrics (else ``None``).
    """
    if sc.mode == OPEN_LOOP:
        return simulate(sc.network, sc.credibility, sc.thresholds, sc.seeds, sc.max_t), None
    params = sc.policy
    if sc.max_t is not None:
        params = PolicyParams(params.omega_rho, params.omega_u, params.horizon, sc.max_t, params.track_adopters)
    traj = receding_horizon_run(sc.network, sc.credibility, sc.agents, sc.seeds, params)
    return traj, compute_metrics(traj, label=sc.label, rng_seed=sc.rng_seed)


def default_workers() -> int:
    env = os.environ.get("EPICASCADE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_batch(scenarios: Sequence[Scenario], workers: int | None = None) -> list:
    """Run scenarios, in parallel when ``workers > 1``; results keep input order."""
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(scenarios) <= 1:
        return [run_scenario(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=min(workers, len(scenarios))) as pool:
        return list(pool.map(run_scenario, scenarios))


# ------------------------------------------------------------------ export


def _f(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    return path


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    return path


def export_results(traj, metrics: Metrics | None, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write run outputs to ``out_dir`` and return the written paths.

    Closed loop: ``trajectory.csv``, ``metrics.json`` and the plot tables
    ``fig_inputs_t0.csv``, ``fig_thresholds_t1.csv`` and
    ``fig_inputs_vs_weight.csv``. Open loop: ``trajectory.csv`` with
    ratios and ``summary.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats = set(formats)
    written = []
    if isinstance(traj, Trajectory):
        if "csv" in formats:
            rows = []
            for state, ratios in zip(traj.states, traj.ratios):
                for x in range(len(ratios)):
                    rows.append([state.t, x, int(state.adopted[x]), _f(ratios[x])])
            written.append(_write_csv(out / "trajectory.csv", ["t", "agent", "adopted", "ratio"], rows))
        if "json" in formats:
            summary = {
                "s_star_star": sorted(traj.s_star_star),
                "t_fixed": traj.t_fixed,
                "switching_sets": [sorted(s) for s in traj.switching_sets],
            }
            written.append(_write_json(out / "summary.json", summary))
        return written

    if not isinstance(traj, ControlledTrajectory):
        raise TypeError(f"cannot export {type(traj).__name__}")
    n = traj.n
    if "csv" in formats:
        rows = []
        for t in range(len(traj)):
            for x in range(n):
                rows.append([
                    t, x, int(traj.adopted[t, x]), _f(traj.rho_u[t, x]),
                    _f(traj.inputs[t, x]), _f(traj.gains[t, x]), _f(traj.targets[x]),
                ])
        written.append(_write_csv(out / "trajectory.csv",
                                  ["t", "agent", "adopted", "rho_u", "u", "kappa", "target"], rows))
        policy_agents = [x for x in range(n) if x not in traj.seeds]
        rows = [[x, _f(1.0 - traj.targets[x]), _f(traj.rho_u[0, x]), _f(traj.inputs[0, x])] for x in policy_agents]
        written.append(_write_csv(out / "fig_inputs_t0.csv", ["agent", "one_minus_target", "rho_u_t0", "u_t0"], rows))
        t1 = min(1, len(traj) - 1)
        rows = [[x, _f(traj.targets[x]), _f(traj.rho_u[t1, x])] for x in policy_agents]
        written.append(_write_csv(out / "fig_thresholds_t1.csv", ["agent", "target", "rho_u_t1"], rows))
        rows = [[x, _f(traj.targets[x]), _f(traj.rho_u[0, x]), _f(traj.inputs[0, x])] for x in policy_agents]
        written.append(_write_csv(out / "fig_inputs_vs_weight.csv", ["agent", "epistemic_weight", "rho_u_t0", "u_t0"], rows))
    if "json" in formats and metrics is not None:
        m = metrics.to_dict()
        if m["C"] is not None and not math.isfinite(m["C"]):
            raise ValueError("non-finite policy cost")
        written.append(_write_json(out / "metrics.json", m))
    return written

"""Seeded scenario families and the fuzz driver.

A family maps a seed to a complete scenario, so every fuzz case can be rebuilt
and replayed from its seed alone.  Checks run inside the worker and only the
verdict summary travels back, which keeps parallel runs cheap.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable

from .checkers import DEFAULT_CHECKS, run_checks
from .runner import run_scenario
from .scenario import Scenario, liveness_bound, parse_scenario

SETTLE = 100


def _finish(data: dict, horizon_factor: int = 2) -> Scenario:
    """Validate a generated scenario and size its horizon from the liveness bound."""
    sc = parse_scenario(data, check_horizon=False)
    bound = liveness_bound(sc)
    if bound is not None:
        sc = sc.model_copy(update={"horizon": horizon_factor * bound})
    return sc


def _proposals(rng: random.Random, procs: Iterable[int]) -> dict:
    return {p: {"at": 0, "value": rng.randrange(1, 1000)} for p in procs}


def _crash_set(rng: random.Random, n: int, max_crashes: int) -> list[int]:
    k = rng.randint(0, max_crashes)
    return sorted(rng.sample(range(1, n + 1), k))


def minority_crash(seed: int) -> Scenario:
    """n=3, any single process may crash, reliable or eventually reliable channels."""
    rng = random.Random(f"minority_crash/{seed}")
    n = 3
    crashed = _crash_set(rng, n, 1)
    gst = rng.choice([0, 50, 100, 200, 300])
    return _finish({
        "name": f"minority_crash-{seed}", "n": n, "seed": seed,
        "failure_pattern": {"crashed": crashed},
        "crash_times": {p: rng.randrange(0, gst + 100) for p in crashed},
        "channels": {"correct": rng.choice(["reliable", "eventually_reliable"]),
                     "drop_rate": round(rng.uniform(0, 0.9), 2)},
        "synchrony": {"gst": gst, "delta": 10},
        "workload": {"proposals": _proposals(rng, range(1, n + 1))},
        "stop_early": {"settle": SETTLE},
    })


def random_flaky(seed: int) -> Scenario:
    """n=5, up to two crashes, random channels flaky at a random drop rate."""
    rng = random.Random(f"random_flaky/{seed}")
    n = 5
    crashed = _crash_set(rng, n, 2)
    alive = [p for p in range(1, n + 1) if p not in crashed]
    fault_p = rng.choice([0.1, 0.2, 0.35, 0.5])
    faulty = [(p, q) for p in alive for q in alive if p != q and rng.random() < fault_p]
    gst = rng.choice([0, 100, 200])
    return _finish({
        "name": f"random_flaky-{seed}", "n": n, "seed": seed,
        "failure_pattern": {"crashed": crashed, "faulty_channels": faulty},
        "crash_times": {p: rng.randrange(0, gst + 100) for p in crashed},
        "channels": {"correct": "eventually_reliable", "faulty": "flaky",
                     "drop_rate": round(rng.uniform(0.1, 0.9), 2)},
        "synchrony": {"gst": gst, "delta": 10},
        "workload": {"proposals": _proposals(rng, range(1, n + 1))},
        "stop_early": {"settle": SETTLE},
    })


def scripted_partition(seed: int) -> Scenario:
    """n=5: a minority is cut off from the rest by scripted flaky channels.

    The scripts drop whole message kinds or time windows, with no fairness.
    """
    rng = random.Random(f"scripted_partition/{seed}")
    n = 5
    minority = sorted(rng.sample(range(1, n + 1), rng.randint(1, 2)))
    rest = [p for p in range(1, n + 1) if p not in minority]
    cut = [(p, q) for p in minority for q in rest] + [(q, p) for p in minority for q in rest]
    if rng.random() < 0.5:
        one_way = rng.choice(["in", "out"])
        cut = [(p, q) for (p, q) in cut if (p in minority) == (one_way == "out")]
    rules = []
    for _ in range(rng.randint(1, 3)):
        start = rng.randrange(0, 400)
        rules.append({
            "action": rng.choice(["drop", "deliver"]),
            "kinds": rng.choice([["WISH"], ["STATE"], None]),
            "after": start,
            "before": start + rng.randrange(20, 400) if rng.random() < 0.7 else None,
        })
    gst = rng.choice([0, 100, 200])
    return _finish({
        "name": f"scripted_partition-{seed}", "n": n, "seed": seed,
        "failure_pattern": {"faulty_channels": cut},
        "channels": {"correct": "reliable", "faulty": "flaky",
                     "policy": {"rules": rules, "default": rng.choice(["drop", "deliver"])}},
        "synchrony": {"gst": gst, "delta": 10},
        "workload": {"proposals": _proposals(rng, range(1, n + 1))},
        "stop_early": {"settle": SETTLE},
    })


def register_mixed(seed: int) -> Scenario:
    """Concurrent reads and writes with crashes and flaky channels.

    Histories are kept small (at most eight operations) so the exhaustive
    oracles can cross-check most of them.
    """
    rng = random.Random(f"register_mixed/{seed}")
    n = rng.choice([3, 5])
    crashed = _crash_set(rng, n, (n - 1) // 2)
    alive = [p for p in range(1, n + 1) if p not in crashed]
    faulty = [(p, q) for p in alive for q in alive if p != q and rng.random() < 0.15]
    gst = rng.choice([0, 100, 200])
    total = rng.randint(2, 8)
    ops: dict[int, list] = {}
    value = 0
    for _ in range(total):
        p = rng.randint(1, n)
        if rng.random() < 0.5:
            value += 1
            ops.setdefault(p, []).append({"op": "write", "value": value,
                                          "at": rng.randrange(0, 300)})
        else:
            ops.setdefault(p, []).append({"op": "read", "at": rng.randrange(0, 300)})
    return _finish({
        "name": f"register_mixed-{seed}", "n": n, "seed": seed, "protocol": "register",
        "failure_pattern": {"crashed": crashed, "faulty_channels": faulty},
        "crash_times": {p: rng.randrange(0, 300) for p in crashed},
        "channels": {"correct": "eventually_reliable", "faulty": "flaky",
                     "drop_rate": round(rng.uniform(0.1, 0.9), 2)},
        "synchrony": {"gst": gst, "delta": 10},
        "workload": {"ops": ops, "think": rng.choice([0, 5, 30])},
        "stop_early": {"settle": 0},
    })


def rfc_race(seed: int) -> Scenario:
    """Consensus-backed register: one sequential client or two racing clients."""
    rng = random.Random(f"rfc_race/{seed}")
    n = 3
    race = seed % 2 == 1
    clients = [1, 2] if race else [rng.randint(1, n)]
    ops = {}
    value = 0
    for c in clients:
        seq = []
        for _ in range(rng.randint(1, 3)):
            if rng.random() < 0.5:
                value += 1
                seq.append({"op": "write", "value": value})
            else:
                seq.append({"op": "read"})
        ops[c] = seq
    return _finish({
        "name": f"rfc_race-{seed}", "n": n, "seed": seed, "protocol": "rfc",
        "channels": {"correct": "eventually_reliable", "drop_rate": 0.2},
        "synchrony": {"gst": rng.choice([0, 100]), "delta": 10},
        "workload": {"ops": ops, "think": rng.choice([0, 10])},
        "stop_early": {"settle": 0},
        "slots": 8,
    })


FAMILIES: dict[str, Callable[[int], Scenario]] = {
    "minority_crash": minority_crash,
    "random_flaky": random_flaky,
    "scripted_partition": scripted_partition,
    "register_mixed": register_mixed,
    "rfc_race": rfc_race,
}


def vary(template: Scenario, seed: int) -> Scenario:
    """Derive a fuzz case from a template: new seed, drop rate and crash set.

    Crashes are only added when the template crashes nobody; they stay within
    a minority and skip processes with listed faulty channels.
    """
    rng = random.Random(f"vary/{template.name}/{seed}")
    data = template.model_dump(mode="json")
    data["seed"] = seed
    ch = data["channels"]
    if ch["faulty"] == "flaky" and ch["policy"] is None:
        ch["drop_rate"] = round(rng.uniform(0.1, 0.9), 2)
    fp = data["failure_pattern"]
    if not fp["crashed"]:
        touched = {p for c in fp["faulty_channels"] for p in c}
        touched |= {p for ov in ch["overrides"] for p in ov["channel"]}
        if template.adversary.rogue_advance is not None:
            touched.add(template.adversary.rogue_advance.process)
        candidates = [p for p in range(1, template.n + 1) if p not in touched]
        k = min(rng.randint(0, (template.n - 1) // 2), len(candidates))
        fp["crashed"] = sorted(rng.sample(candidates, k))
        gst = data["synchrony"]["gst"]
        data["crash_times"] = {str(p): rng.randrange(0, gst + 100) for p in fp["crashed"]}
    return parse_scenario(data, check_horizon=False)


@dataclass(frozen=True)
class CaseResult:
    seed: int
    name: str
    ok: bool
    statuses: dict[str, str]
    details: dict[str, str]
    end_time: int
    decide_times: dict[int, int]
    liveness_bound: int | None


def run_case(sc: Scenario, checks: Iterable[str] | None = None) -> CaseResult:
    trace = run_scenario(sc)
    names = list(checks) if checks else list(DEFAULT_CHECKS[sc.protocol])
    report = run_checks(trace, names)
    decide = {}
    for e in trace.of_kind("Decide"):
        if e.data.get("slot", 0) == 0:
            decide.setdefault(e.process, e.time)
    return CaseResult(
        sc.seed, sc.name, report.ok,
        {v.check: v.status for v in report.verdicts},
        {v.check: v.detail for v in report.verdicts if v.status != "pass"},
        trace.end_time, decide, liveness_bound(sc))


def _family_case(args) -> CaseResult:
    family, seed, checks = args
    return run_case(FAMILIES[family](seed), checks)


def _template_case(args) -> CaseResult:
    template, seed, checks = args
    return run_case(vary(template, seed), checks)


def _map(fn, jobs: list, workers: int) -> list[CaseResult]:
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=8))


def fuzz_family(family: str, seeds: Iterable[int], checks=None, workers: int = 1) -> list[CaseResult]:
    return _map(_family_case, [(family, s, checks) for s in seeds], workers)


def fuzz_template(template: Scenario, seeds: Iterable[int], checks=None,
                  workers: int = 1) -> list[CaseResult]:
    return _map(_template_case, [(template, s, checks) for s in seeds], workers)


def summarize(results: list[CaseResult]) -> dict[str, Any]:
    counts: dict[str, dict[str, int]] = {}
    for r in results:
        for check, status in r.statuses.items():
            counts.setdefault(check, {}).setdefault(status, 0)
            counts[check][status] += 1
    failing = [r.seed for r in results if not r.ok]
    return {"runs": len(results), "failing_seeds": failing,
            "first_failing_seed": failing[0] if failing else None, "counts": counts}

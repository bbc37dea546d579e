"""Refinement checking between an implementation and a specification.

An implementation refines a specification for a client when every
observable behaviour (the sequence of step observations) of the client
running against the implementation also arises against the
specification, under the same memory model and bounds.  A positive
answer is reported as "holds-within-bound": the exploration is bounded
by the loop budget and buffer capacity, so it is not a proof for
unbounded executions.

When refinement fails, the checker returns a canonical counterexample:
among the implementation traces realising a refuting observable, it
picks one of minimal length and, among those, the one whose serialised
event sequence is lexicographically smallest.  The choice is stable
across runs and makes expected counterexamples exact test anchors.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .events import Event, Observable, ProgObs, Trace, event_to_json, observable_of
from .memmodel import ExploreConfig, TraceSet, explore
from .program import ClientProgram, ObjectDef


@dataclass(frozen=True)
class Counterexample:
    observable: Observable  # behaviour the specification cannot produce
    trace: Trace            # minimal implementation trace realising it


@dataclass(frozen=True)
class Verdict:
    verdict: str  # "holds-within-bound" | "refuted"
    counterexample: Optional[Counterexample]
    stats: Dict[str, object] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds-within-bound"


def check_wmtr(p: ClientProgram, spec: ObjectDef, impl: ObjectDef,
               cfg: ExploreConfig) -> Verdict:
    """Does the implementation refine the specification for this client
    under the configured memory model, within the exploration bounds?"""
    if spec.kind != "spec":
        raise ValueError("the abstract object must be a specification")
    ts_spec = explore(p, spec, cfg)
    ts_impl = explore(p, impl, cfg)
    obs_spec = ts_spec.observables()
    obs_impl = ts_impl.observables()
    diff = obs_impl - obs_spec
    stats = {
        "model": cfg.model.value,
        "spec_states": ts_spec.states,
        "impl_states": ts_impl.states,
        "spec_observables": len(obs_spec),
        "impl_observables": len(obs_impl),
        "refuting_observables": len(diff),
    }
    if not diff:
        return Verdict("holds-within-bound", None, stats)
    trace = _minimal_refuting_trace(ts_impl, diff)
    return Verdict("refuted", Counterexample(observable_of(trace), trace), stats)


def refute_object_refinement(spec: ObjectDef, impl: ObjectDef,
                             clients: Iterable[Tuple[str, ClientProgram]],
                             cfg: ExploreConfig):
    """Check the clients in order; return (name, verdict) for the first
    refuted one, or (None, holding verdict) with per-client stats."""
    per_client = {}
    for name, p in clients:
        v = check_wmtr(p, spec, impl, cfg)
        if not v.holds:
            return name, v
        per_client[name] = v.stats
    return None, Verdict("holds-within-bound", None,
                         {"model": cfg.model.value, "clients": per_client})


def minimize(t: Trace, p: ClientProgram, spec: ObjectDef, impl: ObjectDef,
             cfg: ExploreConfig) -> Trace:
    """Shrink a refuting implementation trace to the canonical minimal
    trace with the same observable behaviour."""
    ts_impl = explore(p, impl, cfg)
    if t not in ts_impl:
        raise ValueError("trace is not produced by the implementation")
    target = observable_of(t)
    if target in explore(p, spec, cfg).observables():
        raise ValueError("trace's observable behaviour does not refute")
    return _minimal_refuting_trace(ts_impl, {target})


def _minimal_refuting_trace(ts: TraceSet, targets) -> Trace:
    """Minimal trace whose observable lies in `targets`: shortest, then
    lexicographically smallest serialised event sequence.  Searched in
    best-first order over (state, observable-so-far) pairs, so the first
    target reached is the canonical one."""
    targets = frozenset(targets)
    prefixes = {o[:j] for o in targets for j in range(len(o) + 1)}
    ctr = 0
    heap = [((0, ()), ctr, ts.root, (), ())]
    best = {(ts.root, ()): (0, ())}
    while heap:
        prio, _, s, obs, trace = heapq.heappop(heap)
        if obs in targets:
            return trace
        if best.get((s, obs), prio) < prio:
            continue
        for burst, s2 in ts.graph[s]:
            obs2, trace2, seq2 = obs, trace, prio[1]
            dead = False
            for e in burst:
                trace2 = trace2 + (e,)
                seq2 = seq2 + (event_to_json(e),)
                if isinstance(e, ProgObs):
                    obs2 = obs2 + ((e.step.thread, e.var, e.value),)
                    if obs2 in targets:
                        ctr += 1
                        heapq.heappush(heap, ((len(trace2), seq2), ctr,
                                              None, obs2, trace2))
                    if obs2 not in prefixes:
                        dead = True
                        break
            if dead:
                continue
            prio2 = (len(trace2), seq2)
            key = (s2, obs2)
            if key not in best or prio2 < best[key]:
                best[key] = prio2
                ctr += 1
                heapq.heappush(heap, (prio2, ctr, s2, obs2, trace2))
    raise AssertionError("no trace realises the refuting observable")

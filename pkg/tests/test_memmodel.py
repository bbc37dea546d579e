"""Exploration engine tests: model-specific litmus outcomes, witness
containment, oracle agreement under SC, and empirical-order structure."""

from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmtr.events import (
    Inv, OpId, OpObs, ProgObs, ProgStep, Res, StepId, check_wellformed,
)
from wmtr.memmodel import (
    ExploreConfig, Model, TraceSet, _build, chaos_outputs, covert_ops,
    enforced_order, explore, oracle_sc,
)
from wmtr.porder import check_axioms, check_lemma1, from_traces
from wmtr.program import empty_object, parse

from conftest import corpus_text, relaxed_counter_witness, tso_spinlock_witness


def cfg(model, **kw):
    return ExploreConfig(model=model, **kw)


def load(client, obj=None):
    p = parse(corpus_text(client))
    o = parse(corpus_text(obj)) if obj else empty_object()
    return p, o


SB = """
global x = 0;
global y = 0;
global a = 0;
global b = 0;
thread T1 { x := 1; ra := y; a := ra; }
thread T2 { y := 1; rb := x; b := rb; }
"""

MP = """
global d = 0;
global f = 0;
global r = 0;
thread P { d := 1; f := 1; }
thread C { await (f = 1); rc := d; r := rc; }
"""


def final_pairs(ts, k1, k2):
    out = set()
    for o in ts.observables():
        d = {f"{th}.{v}": val for th, v, val in o}
        if k1 in d and k2 in d:
            out.add((d[k1], d[k2]))
    return out


class TestConfig:
    def test_model_coerced_from_string(self):
        assert ExploreConfig(model="tso").model is Model.TSO

    def test_bounds_validated(self):
        with pytest.raises(ValueError):
            ExploreConfig(model=Model.SC, unroll=0)
        with pytest.raises(ValueError):
            ExploreConfig(model=Model.SC, buffer=0)
        with pytest.raises(ValueError):
            ExploreConfig(model=Model.SC, values=0)

    def test_explore_rejects_invalid_program(self):
        p, o = load("fig4_client.wm")  # calls with no matching ops
        with pytest.raises(ValueError):
            explore(p, o, cfg(Model.SC))


class TestLitmus:
    def test_store_buffering(self):
        p = parse(SB)
        o = empty_object()
        sc = final_pairs(explore(p, o, cfg(Model.SC, values=1)), "T1.a", "T2.b")
        tso = final_pairs(explore(p, o, cfg(Model.TSO, values=1)), "T1.a", "T2.b")
        rx = final_pairs(explore(p, o, cfg(Model.RELAXED, values=1)), "T1.a", "T2.b")
        assert (0, 0) not in sc
        assert (0, 0) in tso and (0, 0) in rx
        assert sc == {(0, 1), (1, 0), (1, 1)}

    def test_message_passing(self):
        p = parse(MP)
        o = empty_object()
        for model, expected in ((Model.SC, {1}), (Model.TSO, {1}),
                                (Model.RELAXED, {0, 1})):
            ts = explore(p, o, cfg(model, values=1))
            got = {dict((f"{t}.{v}", val) for t, v, val in o2).get("C.r")
                   for o2 in ts.observables()}
            got.discard(None)
            assert got == expected, model

    def test_tso_flush_is_fifo(self):
        p = parse(MP)  # d:=1 before f:=1 must reach memory in that order
        ts = explore(p, empty_object(), cfg(Model.TSO, values=1))
        d1 = ("P", "d", 1)
        f1 = ("P", "f", 1)
        assert all(o.index(d1) < o.index(f1)
                   for o in ts.observables() if d1 in o and f1 in o)
        assert not any(o and o[0] == f1 for o in ts.observables())


class TestTraceSet:
    def test_prefix_closed_and_wellformed_samples(self):
        p, o = load("fig5_client.wm", "spinlock_impl.wm")
        ts = explore(p, o, cfg(Model.TSO, values=1))
        for t in ts.sample(60, seed=3):
            assert check_wellformed(t).ok
            assert t in ts
            assert t[:len(t) // 2] in ts

    def test_contains_rejects_foreign_traces(self):
        p, o = load("fig5_client.wm", "spinlock_impl.wm")
        ts = explore(p, o, cfg(Model.TSO, values=1))
        bogus = (ProgStep(StepId("T1", "z:=1", 0), ("z", 1)),
                 ProgStep(StepId("T1", "z:=1", 1), ("z", 1)))
        assert bogus not in ts
        assert (Inv(OpId("T9", "acquire", 0)),) not in ts

    def test_materialize_refuses_oversized(self):
        p, o = load("fig5_client.wm", "spinlock_impl.wm")
        ts = explore(p, o, cfg(Model.TSO, values=1))
        with pytest.raises(ValueError):
            ts.materialize(max_traces=10)

    def test_empirical_pairs_match_definition(self):
        p, o = load("fig2_client.wm", "fig2_object.wm")
        ts = _build(p, o, cfg(Model.TSO, values=1), "chaos")
        mat = ts.materialize()
        definitional = from_traces(ts.universe, mat)
        empirical = frozenset((a, b) for a, b in ts.empirical_pairs()
                              if a in ts.universe and b in ts.universe)
        assert definitional.pairs == empirical


class TestOracle:
    def test_oracle_rejects_control_flow(self):
        p = parse(MP)
        with pytest.raises(ValueError):
            oracle_sc(p, cfg(Model.SC))

    @pytest.mark.parametrize("text", [
        SB,
        "global x = 0;\nthread A { x := 1; }\nthread B { x := 2; }",
        "global x = 0;\nglobal y = 0;\n"
        "thread A { x := 1; y := x + 1; }\nthread B { r := x; y := r; }",
    ])
    def test_engine_matches_oracle(self, text):
        p = parse(text)
        c = cfg(Model.SC, values=2)
        assert explore(p, empty_object(), c).materialize() == oracle_sc(p, c)


class TestWitnesses:
    def test_tso_spinlock_witness_reachable(self):
        p, o = load("fig5_client.wm", "spinlock_impl.wm")
        ts = explore(p, o, cfg(Model.TSO, values=1))
        assert tso_spinlock_witness() in ts

    def test_relaxed_counter_witness_reachable(self):
        p, o = load("fig6_client.wm", "spinlock_impl.wm")
        ts = explore(p, o, cfg(Model.RELAXED))
        assert relaxed_counter_witness() in ts

    def test_tso_witness_not_reachable_under_sc(self):
        p, o = load("fig5_client.wm", "spinlock_impl.wm")
        ts = explore(p, o, cfg(Model.SC, values=1))
        assert tso_spinlock_witness() not in ts


class TestRefinementObservables:
    def test_spinlock_unsound_under_tso(self):
        p, ispec = load("fig5_client.wm", "spinlock_spec.wm")
        _, impl = load("fig5_client.wm", "spinlock_impl.wm")
        c = cfg(Model.TSO, values=1)
        diff = (explore(p, impl, c).observables()
                - explore(p, ispec, c).observables())
        assert diff == {
            (("T1", "z", 1), ("T3", "w", 0), ("T2", "y", 0)),
            (("T1", "z", 1), ("T2", "y", 0), ("T3", "w", 0)),
        }

    def test_counter_loses_increment_under_relaxed(self):
        p, ispec = load("fig6_client.wm", "spinlock_spec.wm")
        _, impl = load("fig6_client.wm", "spinlock_impl.wm")
        c = cfg(Model.RELAXED)
        diff = (explore(p, impl, c).observables()
                - explore(p, ispec, c).observables())
        assert diff == {
            (("T1", "y", 1), ("T2", "y", 1)),
            (("T2", "y", 1), ("T1", "y", 1)),
        }

    @pytest.mark.parametrize("client", [
        "fig4_client.wm", "fig5_notry_client.wm", "fig6_client.wm"])
    def test_lock_sound_under_tso_without_tryacquire(self, client):
        p, ispec = load(client, "spinlock_spec_notry.wm")
        _, impl = load(client, "spinlock_impl_notry.wm")
        c = cfg(Model.TSO)
        assert (explore(p, impl, c).observables()
                <= explore(p, ispec, c).observables())

    @pytest.mark.parametrize("client,spec,impl", [
        ("fig4_client.wm", "spinlock_spec_notry.wm", "spinlock_impl_notry.wm"),
        ("fig5_client.wm", "spinlock_spec.wm", "spinlock_impl.wm"),
        ("fig6_client.wm", "spinlock_spec.wm", "spinlock_impl.wm"),
    ])
    def test_spinlock_sound_under_sc(self, client, spec, impl):
        p, ispec = load(client, spec)
        _, iimpl = load(client, impl)
        c = cfg(Model.SC)
        assert (explore(p, iimpl, c).observables()
                <= explore(p, ispec, c).observables())

    @pytest.mark.parametrize("model", list(Model))
    def test_mutual_exclusion_in_spec_semantics(self, model):
        # one lock, no release: at most one of the two guarded writes runs
        p, ispec = load("fig4_client.wm", "spinlock_spec.wm")
        for o in explore(p, ispec, cfg(model)).observables():
            keys = {(th, v) for th, v, _ in o}
            assert not {("T1", "y"), ("T2", "z")} <= keys


class TestEnforcedOrder:
    def fig2(self, model, values=3):
        p, o = load("fig2_client.wm", "fig2_object.wm")
        return enforced_order(p, o, cfg(model, values=values))

    def events(self):
        obs_A = OpObs(OpId("T1", "A", 0), 1)
        obs_B = OpObs(OpId("T1", "B", 1), None)
        obs_C = OpObs(OpId("T2", "C", 0), None)
        obs_x = ProgObs(StepId("T1", "x:=rA", 0), "x", 1)
        obs_z = ProgObs(StepId("T1", "z:=1", 0), "z", 1)
        return obs_A, obs_B, obs_C, obs_x, obs_z

    @pytest.mark.parametrize("model", list(Model))
    def test_axioms_and_lemma_hold(self, model):
        po = self.fig2(model)
        assert check_axioms(po).all_hold
        assert check_lemma1(po)

    def test_sc_observations_hug_their_events(self):
        p, o = load("fig2_client.wm", "fig2_object.wm")
        ts = _build(p, o, cfg(Model.SC, values=1), "chaos")
        for t in ts.materialize():
            for i, e in enumerate(t):
                if isinstance(e, ProgObs):
                    assert t[i - 1] == ProgStep(e.step, (e.var, e.value))
                elif isinstance(e, OpObs):
                    assert t[i - 1] == Res(e.op, e.out)

    def test_tso_chain(self):
        po = self.fig2(Model.TSO)
        obs_A, obs_B, obs_C, obs_x, obs_z = self.events()
        assert (obs_A, obs_x) in po.pairs
        assert (obs_x, obs_z) in po.pairs
        assert (obs_z, obs_B) in po.pairs
        assert (obs_B, obs_C) not in po.pairs
        assert (obs_C, obs_B) not in po.pairs

    def test_relaxed_operation_observations_unordered(self):
        po = self.fig2(Model.RELAXED)
        obs_A, obs_B, obs_C, obs_x, obs_z = self.events()
        for a, b in permutations((obs_A, obs_B, obs_C), 2):
            assert (a, b) not in po.pairs
        # same-variable step/observation pairs survive
        assert (ProgStep(StepId("T1", "x:=rA", 0), ("x", 1)), obs_x) in po.pairs

    def test_relaxed_drops_cross_variable_order(self):
        po_tso = self.fig2(Model.TSO)
        po_rx = self.fig2(Model.RELAXED)
        _, _, _, obs_x, obs_z = self.events()
        assert (obs_x, obs_z) in po_tso.pairs
        assert (obs_x, obs_z) not in po_rx.pairs

    @pytest.mark.parametrize("model", list(Model))
    @pytest.mark.parametrize("client,obj", [
        ("fig4_client.wm", "spinlock_spec_notry.wm"),
        ("fig5_client.wm", "spinlock_impl.wm"),
        ("fig6_client.wm", "spinlock_spec.wm"),
    ])
    def test_axioms_across_corpus(self, model, client, obj):
        p, o = load(client, obj)
        po = enforced_order(p, o, cfg(model, values=1))
        rep = check_axioms(po)
        assert rep.all_hold, [c.name for c in rep.checks if not c.holds]
        assert check_lemma1(po)


class TestChaosHelpers:
    def test_chaos_outputs_narrow(self):
        _, o = load("fig2_client.wm", "spinlock_spec.wm")
        assert chaos_outputs(o.ops["tryAcquire"], 3) == {0, 1}
        assert chaos_outputs(o.ops["release"], 3) == {None}
        _, oi = load("fig2_client.wm", "spinlock_impl.wm")
        assert chaos_outputs(oi.ops["acquire"], 3) == {None}
        assert chaos_outputs(oi.ops["tryAcquire"], 3) == {0, 1}

    def test_chaos_outputs_literal_and_domain(self):
        _, o = load("fig2_client.wm", "fig2_object.wm")
        assert chaos_outputs(o.ops["A"], 3) == {1}
        assert chaos_outputs(o.ops["B"], 3) == {None}

    def test_covert_requires_no_store_and_no_flow(self):
        p, o = load("fig2_client.wm", "fig2_object.wm")
        assert covert_ops(p, o) == frozenset()  # all three ops write shared
        pure = parse("object impl {\n  op probe() { return 1; }\n}")
        client = parse("global g = 0;\nthread T { r := call probe(); }")
        assert covert_ops(client, pure) == {"probe"}
        leaky = parse("global g = 0;\n"
                      "thread T { r := call probe(); g := r; }")
        assert covert_ops(leaky, pure) == frozenset()


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_random_straightline_clients_match_oracle(data):
    names = ["x", "y"]
    nthreads = data.draw(st.integers(1, 2))
    lines = [f"global {v} = 0;" for v in names]
    for i in range(nthreads):
        body = []
        for j in range(data.draw(st.integers(0, 3))):
            tgt = data.draw(st.sampled_from(names + [f"r{j}"]))
            src = data.draw(st.sampled_from(
                ["0", "1", names[0], f"{names[0]} + 1", f"{names[1]} + {names[0]}"]))
            body.append(f"{tgt} := {src};")
        lines.append(f"thread T{i} {{ {' '.join(body)} }}")
    p = parse("\n".join(lines))
    c = ExploreConfig(model=Model.SC, values=2)
    assert explore(p, empty_object(), c).materialize() == oracle_sc(p, c)

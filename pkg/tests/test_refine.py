"""Refinement verdicts on the lock corpus, and counterexample shape."""

import pytest

from wmtr.events import ProgObs, check_wellformed, observable_of
from wmtr.memmodel import ExploreConfig, Model, explore
from wmtr.refine import check_wmtr, minimize, refute_object_refinement
from wmtr.program import parse

from conftest import corpus_text, tso_spinlock_witness


def load(name):
    return parse(corpus_text(name))


@pytest.fixture(scope="module")
def corpus():
    return {
        "fig4": load("fig4_client.wm"),
        "fig5": load("fig5_client.wm"),
        "fig5_notry": load("fig5_notry_client.wm"),
        "fig6": load("fig6_client.wm"),
        "spec": load("spinlock_spec.wm"),
        "impl": load("spinlock_impl.wm"),
        "spec_notry": load("spinlock_spec_notry.wm"),
        "impl_notry": load("spinlock_impl_notry.wm"),
    }


class TestRefuted:
    def test_tso_spinlock(self, corpus):
        v = check_wmtr(corpus["fig5"], corpus["spec"], corpus["impl"],
                       ExploreConfig(model=Model.TSO, values=1))
        assert v.verdict == "refuted" and not v.holds
        assert v.counterexample.observable == (
            ("T1", "z", 1), ("T3", "w", 0), ("T2", "y", 0))
        assert v.stats["refuting_observables"] == 2

    def test_tso_counterexample_trace_is_canonical(self, corpus):
        cfg = ExploreConfig(model=Model.TSO, values=1)
        v1 = check_wmtr(corpus["fig5"], corpus["spec"], corpus["impl"], cfg)
        v2 = check_wmtr(corpus["fig5"], corpus["spec"], corpus["impl"], cfg)
        t = v1.counterexample.trace
        assert t == v2.counterexample.trace
        assert check_wellformed(t).ok
        assert observable_of(t) == v1.counterexample.observable
        assert t in explore(corpus["fig5"], corpus["impl"], cfg)
        assert len(t) == 16

    def test_relaxed_counter(self, corpus):
        v = check_wmtr(corpus["fig6"], corpus["spec"], corpus["impl"],
                       ExploreConfig(model=Model.RELAXED))
        assert v.verdict == "refuted"
        assert v.counterexample.observable == (("T1", "y", 1), ("T2", "y", 1))

    def test_refute_over_client_list_stops_at_first(self, corpus):
        name, v = refute_object_refinement(
            corpus["spec"], corpus["impl"],
            [("fig4", corpus["fig4"]), ("fig5", corpus["fig5"])],
            ExploreConfig(model=Model.TSO, values=1))
        assert name == "fig5"
        assert v.verdict == "refuted"


class TestHolds:
    def test_spec_refines_itself(self, corpus):
        for model in Model:
            v = check_wmtr(corpus["fig6"], corpus["spec"], corpus["spec"],
                           ExploreConfig(model=model))
            assert v.verdict == "holds-within-bound"
            assert v.counterexample is None

    @pytest.mark.parametrize("client", ["fig4", "fig5_notry", "fig6"])
    def test_tso_lock_without_tryacquire(self, corpus, client):
        v = check_wmtr(corpus[client], corpus["spec_notry"],
                       corpus["impl_notry"], ExploreConfig(model=Model.TSO))
        assert v.holds

    @pytest.mark.parametrize("client,spec,impl", [
        ("fig4", "spec", "impl"),
        ("fig5", "spec", "impl"),
        ("fig6", "spec", "impl"),
        ("fig5_notry", "spec_notry", "impl_notry"),
    ])
    def test_sc_corpus(self, corpus, client, spec, impl):
        v = check_wmtr(corpus[client], corpus[spec], corpus[impl],
                       ExploreConfig(model=Model.SC))
        assert v.holds

    def test_relaxed_single_winner_client(self, corpus):
        v = check_wmtr(corpus["fig4"], corpus["spec"], corpus["impl"],
                       ExploreConfig(model=Model.RELAXED))
        assert v.holds

    def test_aggregate_stats_when_all_hold(self, corpus):
        name, v = refute_object_refinement(
            corpus["spec_notry"], corpus["impl_notry"],
            [("fig4", corpus["fig4"]), ("fig6", corpus["fig6"])],
            ExploreConfig(model=Model.TSO))
        assert name is None and v.holds
        assert set(v.stats["clients"]) == {"fig4", "fig6"}


class TestMinimize:
    def test_witness_shrinks_to_canonical(self, corpus):
        cfg = ExploreConfig(model=Model.TSO, values=1)
        m = minimize(tso_spinlock_witness(), corpus["fig5"], corpus["spec"],
                     corpus["impl"], cfg)
        assert observable_of(m) == observable_of(tso_spinlock_witness())
        assert len(m) <= 16
        assert m in explore(corpus["fig5"], corpus["impl"], cfg)

    def test_rejects_foreign_trace(self, corpus):
        cfg = ExploreConfig(model=Model.SC, values=1)
        with pytest.raises(ValueError, match="not produced"):
            minimize(tso_spinlock_witness(), corpus["fig5"], corpus["spec"],
                     corpus["impl"], cfg)

    def test_rejects_non_refuting_trace(self, corpus):
        cfg = ExploreConfig(model=Model.TSO, values=1)
        ts = explore(corpus["fig5"], corpus["impl"], cfg)
        t = next(t for t in ts.sample(50, seed=1) if len(t) <= 2)
        with pytest.raises(ValueError, match="does not refute"):
            minimize(t, corpus["fig5"], corpus["spec"], corpus["impl"], cfg)


class TestValidation:
    def test_spec_kind_required(self, corpus):
        with pytest.raises(ValueError, match="specification"):
            check_wmtr(corpus["fig5"], corpus["impl"], corpus["impl"],
                       ExploreConfig(model=Model.TSO))

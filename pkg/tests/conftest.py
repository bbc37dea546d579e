"""Hand-built reference traces shared across the test modules.

Both traces were written out event by event from the intended machine
behaviour and serve as ground truth: wellformedness, projections,
observable extraction, and (later) containment in the exploration
engine's output are all checked against them.
"""

from pathlib import Path

from hypothesis import strategies as st

from wmtr.events import Inv, OpId, OpObs, ProgObs, ProgStep, Res, StepId

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text()


@st.composite
def wellformed_traces(draw):
    """Random wellformed traces: the component events of each operation
    or step are produced in stage order and interleaved arbitrarily."""
    threads = ("T1", "T2", "T3")
    calls_per_thread = {th: 0 for th in threads}
    groups = []
    for _ in range(draw(st.integers(0, 4))):
        th = draw(st.sampled_from(threads))
        name = draw(st.sampled_from(("A", "B", "acquire", "tryAcquire")))
        op = OpId(th, name, calls_per_thread[th])
        calls_per_thread[th] += 1
        out = draw(st.sampled_from((None, 0, 1, 2, 3)))
        stages = draw(st.integers(1, 3))
        groups.append([Inv(op), Res(op, out), OpObs(op, out)][:stages])
    for k in range(draw(st.integers(0, 4))):
        th = draw(st.sampled_from(threads))
        sid = StepId(th, f"s{k}", 0)
        write = draw(
            st.one_of(
                st.none(),
                st.tuples(st.sampled_from("xyz"), st.integers(0, 3)),
            )
        )
        g = [ProgStep(sid, write)]
        if write is not None and draw(st.booleans()):
            g.append(ProgObs(sid, write[0], write[1]))
        groups.append(g)
    trace = []
    cursors = [0] * len(groups)
    remaining = sum(len(g) for g in groups)
    while remaining:
        avail = [i for i in range(len(groups)) if cursors[i] < len(groups[i])]
        i = draw(st.sampled_from(avail))
        trace.append(groups[i][cursors[i]])
        cursors[i] += 1
        remaining -= 1
    return tuple(trace)


def tso_spinlock_witness():
    """16-event trace of the three-thread spinlock client under a
    store-buffer machine: T2 acquires and releases, its buffered writes
    flush last; T3's tryAcquire therefore still sees the lock taken."""
    acq2 = OpId("T2", "acquire", 0)
    rel2 = OpId("T2", "release", 1)
    try3 = OpId("T3", "tryAcquire", 0)
    s_yz = StepId("T2", "y:=z", 0)
    s_z1 = StepId("T1", "z:=1", 0)
    s_aw = StepId("T3", "await(z=1)", 0)
    s_w = StepId("T3", "w:=rt", 0)
    return (
        Inv(acq2),
        Res(acq2),
        OpObs(acq2),
        Inv(rel2),
        Res(rel2),
        ProgStep(s_yz, ("y", 0)),
        ProgStep(s_z1, ("z", 1)),
        ProgObs(s_z1, "z", 1),
        ProgStep(s_aw, None),
        Inv(try3),
        Res(try3, 0),
        OpObs(try3, 0),
        ProgStep(s_w, ("w", 0)),
        ProgObs(s_w, "w", 0),
        OpObs(rel2),
        ProgObs(s_yz, "y", 0),
    )


def relaxed_counter_witness():
    """16-event trace of the locked-increment client under a
    non-multi-copy-atomic machine: both threads take the lock in turn
    yet both increments read 0, because T1's write to y reaches T2's
    core only after T2's increment ran."""
    acq1, rel1 = OpId("T1", "acquire", 0), OpId("T1", "release", 1)
    acq2, rel2 = OpId("T2", "acquire", 0), OpId("T2", "release", 1)
    s1 = StepId("T1", "y:=y+1", 0)
    s2 = StepId("T2", "y:=y+1", 0)
    return (
        Inv(acq1),
        Res(acq1),
        OpObs(acq1),
        ProgStep(s1, ("y", 1)),
        Inv(rel1),
        Res(rel1),
        OpObs(rel1),
        Inv(acq2),
        Res(acq2),
        OpObs(acq2),
        ProgStep(s2, ("y", 1)),
        Inv(rel2),
        Res(rel2),
        OpObs(rel2),
        ProgObs(s1, "y", 1),
        ProgObs(s2, "y", 1),
    )

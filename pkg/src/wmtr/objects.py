"""Object semantics.

Two views of the same interface: specification objects execute each
operation body atomically against a logical valuation, implementation
objects run instruction by instruction through a small machine whose
memory effects are handed back to the caller (shared reads go through a
supplied view function, so the surrounding memory model decides what a
load returns and where a store lands).

Specification histories interleave invocations, atomic responses, and
observations.  An observation may trail its response arbitrarily, but
invocations are gated so that at most one operation is un-observed
across distinct cores at any time; operations with no effect on shared
state are observed immediately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

from .events import Event, History, Inv, OpId, OpObs, Res, is_object_event
from .program import (
    Assign, Await, Fence, If, ObjectDef, OpDef, Return, Tas, While,
    eval_cond, eval_expr, label_of,
)

Value = Optional[int]


# --- atomic specification execution ---

class _Blocked(Exception):
    pass


def _run_atomic(stmts, state: dict, regs: dict, shared: frozenset, values: int):
    """One pass over a spec body; returns ("ret", out) or None."""

    def lookup(name):
        if name in regs:
            return regs[name]
        return state[name]

    for s in stmts:
        if isinstance(s, Assign):
            v = eval_expr(s.expr, lookup, values)
            if s.target in shared:
                state[s.target] = v
            else:
                regs[s.target] = v
        elif isinstance(s, Await):
            if not eval_cond(s.cond, lookup, values):
                raise _Blocked
        elif isinstance(s, If):
            branch = s.then if eval_cond(s.cond, lookup, values) else s.orelse
            r = _run_atomic(branch, state, regs, shared, values)
            if r is not None:
                return r
        elif isinstance(s, Return):
            out = eval_expr(s.expr, lookup, values) if s.expr is not None else None
            return ("ret", out)
        elif isinstance(s, Fence):
            pass
        else:
            raise ValueError(f"statement not allowed in a specification body: {s}")
    return None


def run_spec_body(op: OpDef, valuation: dict, arg: Value, values: int = 3):
    """Atomically execute `op` against `valuation`.  Returns the updated
    valuation and the output, or None when a guard blocks."""
    state = dict(valuation)
    regs = {op.param: arg} if op.param is not None else {}
    try:
        r = _run_atomic(op.body, state, regs, frozenset(valuation), values)
    except _Blocked:
        return None
    return state, (r[1] if r is not None else None)


def writes_shared(op: OpDef, obj: ObjectDef) -> bool:
    from .program import _all_stmts
    for s in _all_stmts(op.body):
        if isinstance(s, Assign) and s.target in obj.shared:
            return True
        if isinstance(s, Tas):
            return True
    return False


# --- the cross-core observation discipline ---

def check_atomic(h: History, coremap: Dict[str, str]) -> bool:
    """True iff no invocation happens while an operation begun on a
    different core is still unobserved."""
    unobserved: Dict[OpId, str] = {}
    for e in h:
        if isinstance(e, Inv):
            core = coremap[e.op.thread]
            if any(c != core for c in unobserved.values()):
                return False
            unobserved[e.op] = core
        elif isinstance(e, OpObs):
            unobserved.pop(e.op, None)
    return True


# --- specification histories ---

def _call_structure(events) -> Dict[str, list]:
    calls: Dict[str, list] = {}
    for e in events:
        if isinstance(e, Inv):
            calls.setdefault(e.op.thread, []).append((e.op, e.arg))
    for th, seq in calls.items():
        seq.sort(key=lambda t: t[0].instance)
        if [k.instance for k, _ in seq] != list(range(len(seq))):
            raise ValueError(f"invocation instances of thread {th} are not contiguous")
    return calls


def spec_histories(spec: ObjectDef, events, coremap: Dict[str, str],
                   bound: Optional[int] = None, values: int = 3,
                   covert: Optional[frozenset] = None) -> FrozenSet[History]:
    """Prefix-closed set of object histories the specification admits for
    the given invocation structure."""
    if spec.kind != "spec":
        raise ValueError("spec_histories needs a specification object")
    calls = _call_structure(events)
    threads = sorted(calls)
    if covert is None:
        covert = frozenset(n for n, op in spec.ops.items()
                           if not writes_shared(op, spec))
    init = (tuple(0 for _ in threads), tuple(None for _ in threads),
            tuple(sorted(spec.shared.items())), ())
    memo: dict = {}

    def hist(st) -> frozenset:
        if st in memo:
            return memo[st]
        nxt, pend, val, book = st
        out = {()}
        cores_busy = [coremap[threads[j]] for j, p in enumerate(pend)
                      if p is not None]
        cores_busy += [c for (_, _, c) in book]
        for i, th in enumerate(threads):
            core = coremap[th]
            if pend[i] is None and nxt[i] < len(calls[th]):
                if all(c == core for c in cores_busy):
                    opid, arg = calls[th][nxt[i]]
                    st2 = (_rep(nxt, i, nxt[i] + 1), _rep(pend, i, (opid, arg)),
                           val, book)
                    for t in hist(st2):
                        out.add((Inv(opid, arg),) + t)
            if pend[i] is not None:
                opid, arg = pend[i]
                r = run_spec_body(spec.ops[opid.call], dict(val), arg, values)
                if r is not None:
                    st_new, outv = r
                    val2 = tuple(sorted(st_new.items()))
                    if opid.call in covert:
                        burst = (Res(opid, outv), OpObs(opid, outv))
                        st2 = (nxt, _rep(pend, i, None), val2, book)
                        out.add(burst[:1])
                        for t in hist(st2):
                            out.add(burst + t)
                    else:
                        st2 = (nxt, _rep(pend, i, None), val2,
                               book + ((opid, outv, core),))
                        for t in hist(st2):
                            out.add((Res(opid, outv),) + t)
        for j, (opid, outv, core) in enumerate(book):
            st2 = (nxt, pend, val, book[:j] + book[j + 1:])
            for t in hist(st2):
                out.add((OpObs(opid, outv),) + t)
        memo[st] = frozenset(out)
        return memo[st]

    result = hist(init)
    if bound is not None:
        result = frozenset(h for h in result if len(h) <= bound)
    return result


def _rep(t: tuple, i: int, v):
    return t[:i] + (v,) + t[i + 1:]


def complete_history(spec: ObjectDef, h: History,
                     values: int = 3) -> FrozenSet[History]:
    """All ways of extending h with responses for its pending
    invocations.  {h} when nothing is pending; empty when some pending
    operation can never respond."""
    val = dict(spec.shared)
    pending: Dict[OpId, Value] = {}
    for e in h:
        if not is_object_event(e):
            raise ValueError("history contains a program event")
        if isinstance(e, Inv):
            pending[e.op] = e.arg
        elif isinstance(e, Res):
            if e.op not in pending:
                raise ValueError("response without a pending invocation")
            arg = pending.pop(e.op)
            r = run_spec_body(spec.ops[e.op.call], val, arg, values)
            if r is None or r[1] != e.out:
                raise ValueError("history is not replayable against the specification")
            val = r[0]

    results = set()

    def go(val, pending, acc):
        if not pending:
            results.add(tuple(acc))
            return
        for opid in sorted(pending, key=lambda k: (k.thread, k.instance)):
            r = run_spec_body(spec.ops[opid.call], val, pending[opid], values)
            if r is not None:
                rest = dict(pending)
                del rest[opid]
                go(r[0], rest, acc + [Res(opid, r[1])])

    go(val, pending, [])
    return frozenset(tuple(h) + ext for ext in results)


# --- implementation machine ---

@dataclass(frozen=True)
class Internal:
    pass


@dataclass(frozen=True)
class Store:
    var: str
    value: int


@dataclass(frozen=True)
class TasDone:
    var: str
    result: int
    store: Optional[int]  # value written on success, None on failure


@dataclass(frozen=True)
class Ret:
    out: Value


@dataclass(frozen=True)
class OpFrame:
    opid: OpId
    opname: str
    ret_reg: Optional[str]
    frames: tuple
    regs: tuple  # sorted (name, value) pairs


Machine = Tuple[Tuple[str, OpFrame], ...]

MACHINE_EMPTY: Machine = ()


def machine_get(m: Machine, thread: str) -> Optional[OpFrame]:
    for th, f in m:
        if th == thread:
            return f
    return None


def _machine_set(m: Machine, thread: str, frame: Optional[OpFrame]) -> Machine:
    rest = tuple((th, f) for th, f in m if th != thread)
    if frame is None:
        return rest
    return tuple(sorted(rest + ((thread, frame),)))


def machine_start(m: Machine, thread: str, opid: OpId, op: OpDef,
                  arg: Value, ret_reg: Optional[str]) -> Machine:
    if machine_get(m, thread) is not None:
        raise ValueError(f"thread {thread} already has an active invocation")
    regs = ((op.param, arg),) if op.param is not None else ()
    frame = OpFrame(opid, op.name, ret_reg, (("s", op.body, 0),), regs)
    return _machine_set(m, thread, frame)


def machine_peek(m: Machine, thread: str):
    """Kind of the next effective instruction: ("none",) when the thread
    has no active invocation, ("stuck",) when its loop budget is spent,
    ("tas", var) before a TAS, else ("plain",)."""
    f = machine_get(m, thread)
    if f is None:
        return ("none",)
    frames = list(f.frames)
    while frames:
        top = frames[-1]
        if top[0] == "s":
            _, stmts, i = top
            if i == len(stmts):
                frames.pop()
                continue
            s = stmts[i]
            if isinstance(s, Tas):
                return ("tas", s.var)
            if isinstance(s, Fence):
                return ("fence",)
            return ("plain",)
        _, _, k = top
        return ("stuck",) if k == 0 else ("plain",)
    return ("plain",)  # implicit return


def impl_step(m: Machine, thread: str, obj: ObjectDef, view,
              values: int = 3, unroll: int = 2):
    """Execute one instruction of the thread's active invocation.
    `view` maps a shared variable to the value this thread's load
    returns (for TAS, the caller must pass the authoritative view).
    Returns (machine', effect) or None when blocked, stuck, or idle."""
    f = machine_get(m, thread)
    if f is None:
        return None
    regs = dict(f.regs)

    def lookup(name):
        if name in regs:
            return regs[name]
        if name in obj.shared:
            return view(name)
        raise KeyError(f"unknown name {name!r} in op {f.opname}")

    def done(frames, effect, regs=None):
        if regs is None:
            frame2 = OpFrame(f.opid, f.opname, f.ret_reg, tuple(frames), f.regs)
        else:
            frame2 = OpFrame(f.opid, f.opname, f.ret_reg, tuple(frames),
                             tuple(sorted(regs.items())))
        return _machine_set(m, thread, frame2), effect

    frames = list(f.frames)
    while frames and frames[-1][0] == "s" and frames[-1][2] == len(frames[-1][1]):
        frames.pop()
    if not frames:
        return _machine_set(m, thread, None), Ret(None)
    top = frames[-1]

    if top[0] == "l":
        _, w, k = top
        if k == 0:
            return None  # stuck for good
        if eval_cond(w.cond, lookup, values):
            frames[-1] = ("l", w, k - 1)
            frames.append(("s", w.body, 0))
        else:
            frames.pop()
        return done(frames, Internal())

    _, stmts, i = top
    s = stmts[i]
    advanced = frames[:-1] + [("s", stmts, i + 1)]

    if isinstance(s, While):
        if unroll == 0:
            return None
        nf = advanced + [("l", s, unroll)]
        if eval_cond(s.cond, lookup, values):
            nf[-1] = ("l", s, unroll - 1)
            nf.append(("s", s.body, 0))
        else:
            nf.pop()
        return done(nf, Internal())
    if isinstance(s, Assign):
        v = eval_expr(s.expr, lookup, values)
        if s.target in obj.shared:
            return done(advanced, Store(s.target, v))
        regs[s.target] = v
        return done(advanced, Internal(), regs)
    if isinstance(s, Await):
        if not eval_cond(s.cond, lookup, values):
            return None
        return done(advanced, Internal())
    if isinstance(s, If):
        branch = s.then if eval_cond(s.cond, lookup, values) else s.orelse
        return done(advanced + [("s", branch, 0)], Internal())
    if isinstance(s, Fence):
        # a fence inside an op body is the caller's concern; surface it
        return done(advanced, Internal())
    if isinstance(s, Return):
        out = eval_expr(s.expr, lookup, values) if s.expr is not None else None
        return _machine_set(m, thread, None), Ret(out)
    if isinstance(s, Tas):
        value = view(s.var)
        success = value == s.test % (values + 1)
        regs[s.result] = 1 if success else 0
        swap = s.swap % (values + 1) if success else None
        m2, _ = done(advanced, None, regs)
        return m2, TasDone(s.var, 1 if success else 0, swap)
    raise TypeError(f"unexpected statement in op body: {s}")

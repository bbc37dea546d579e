"""Mini-language for client programs and shared objects.

Concrete syntax (ASCII, "//" comments):

    file   := decl* thread+
            | "object" ("spec"|"impl") "{" var* opdef* "}"
    decl   := "global" IDENT "=" INT ";"
    var    := "var" IDENT "=" INT ";"
    thread := "thread" IDENT ("core" IDENT)? "{" stmt* "}"
    stmt   := IDENT ":=" expr ";"
            | "await" "(" cond ")" ";"
            | (REG ":=")? "call" IDENT "(" expr? ")" ";"
            | "if" "(" cond ")" block ("else" block)?
            | "while" "(" cond ")" block
            | "fence" ";"
    opdef  := "op" IDENT "(" IDENT? ")" "{" opstmt* "}"
    opstmt := stmt | "return" expr? ";"
            | REG ":=" "TAS" "(" IDENT "," INT "," INT ")" ";"
    cond   := expr ("="|"!=") expr
    expr   := INT | IDENT | expr ("+"|"-") expr

Identifiers starting with "r" that are not declared as globals, object
variables, or an operation parameter denote thread-local registers.
Specification bodies are atomic by construction and therefore may not
contain loops or TAS.  `events_of_program` extracts the finite event
set of the bounded program: every syntactically reachable step with
every value it could write, plus, for each invocation, responses and
observations over the closure of possible outputs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .events import Event, Inv, OpId, OpObs, ProgObs, ProgStep, Res, StepId

# --- abstract syntax ---


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+" or "-"
    left: "Expr"
    right: "Expr"


Expr = Union[Lit, Name, BinOp]


@dataclass(frozen=True)
class Cmp:
    op: str  # "=" or "!="
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class Await:
    cond: Cmp


@dataclass(frozen=True)
class Call:
    op: str
    arg: Optional[Expr] = None
    result: Optional[str] = None


@dataclass(frozen=True)
class If:
    cond: Cmp
    then: Tuple["Stmt", ...]
    orelse: Tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class While:
    cond: Cmp
    body: Tuple["Stmt", ...]


@dataclass(frozen=True)
class Fence:
    pass


@dataclass(frozen=True)
class Return:
    expr: Optional[Expr] = None


@dataclass(frozen=True)
class Tas:
    result: str
    var: str
    test: int
    swap: int


Stmt = Union[Assign, Await, Call, If, While, Fence, Return, Tas]


@dataclass
class ClientProgram:
    globals: Dict[str, int]
    threads: Dict[str, Tuple[Stmt, ...]]
    coremap: Dict[str, str]

    def declared(self) -> frozenset:
        return frozenset(self.globals)


@dataclass
class OpDef:
    name: str
    param: Optional[str]
    body: Tuple[Stmt, ...]


@dataclass
class ObjectDef:
    kind: str  # "spec" | "impl"
    shared: Dict[str, int]
    ops: Dict[str, OpDef]


def empty_object(kind: str = "impl") -> ObjectDef:
    """Object with no operations, for clients that make no calls."""
    return ObjectDef(kind, {}, {})


# --- lexer ---

_TOKEN = re.compile(
    r"""
    (?P<skip>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<assign>:=)
  | (?P<neq>!=)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[(){};=+,\-])
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "global", "thread", "core", "await", "call", "if", "else", "while",
    "fence", "object", "spec", "impl", "op", "return", "var", "TAS",
}


@dataclass(frozen=True)
class Token:
    kind: str  # keyword/symb text, or "INT"/"IDENT"/"EOF"
    text: str
    line: int
    col: int


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


def _lex(text: str) -> List[Token]:
    out = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        pos = m.end()
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = pos
            continue
        if kind in ("skip", "comment"):
            continue
        col = m.start() - start + 1
        tok = m.group()
        if kind == "int":
            out.append(Token("INT", tok, line, col))
        elif kind == "ident":
            out.append(Token(tok if tok in _KEYWORDS else "IDENT", tok, line, col))
        else:
            out.append(Token(tok, tok, line, col))
    out.append(Token("EOF", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text or 'end of input'!r}",
                             t.line, t.col)
        return self.next()

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    # entry

    def file(self):
        if self.at("object"):
            return self.object_def()
        return self.client()

    def client(self) -> ClientProgram:
        globals_: Dict[str, int] = {}
        while self.at("global"):
            self.next()
            name = self.expect("IDENT").text
            self.expect("=")
            val = int(self.expect("INT").text)
            self.expect(";")
            if name in globals_:
                t = self.peek()
                raise ParseError(f"duplicate global {name!r}", t.line, t.col)
            globals_[name] = val
        threads: Dict[str, Tuple[Stmt, ...]] = {}
        coremap: Dict[str, str] = {}
        t = self.peek()
        if not self.at("thread"):
            raise ParseError(f"expected 'thread', found {t.text or 'end of input'!r}",
                             t.line, t.col)
        while self.at("thread"):
            self.next()
            tname = self.expect("IDENT").text
            if tname in threads:
                raise ParseError(f"duplicate thread {tname!r}", t.line, t.col)
            core = tname
            if self.at("core"):
                self.next()
                core = self.expect("IDENT").text
            body = self.block(in_op=False)
            threads[tname] = body
            coremap[tname] = core
        self.expect("EOF")
        return ClientProgram(globals_, threads, coremap)

    def object_def(self) -> ObjectDef:
        self.expect("object")
        t = self.peek()
        if self.at("spec") or self.at("impl"):
            kind = self.next().kind
        else:
            raise ParseError(f"expected 'spec' or 'impl', found {t.text!r}", t.line, t.col)
        self.expect("{")
        shared: Dict[str, int] = {}
        while self.at("var"):
            self.next()
            name = self.expect("IDENT").text
            self.expect("=")
            val = int(self.expect("INT").text)
            self.expect(";")
            shared[name] = val
        ops: Dict[str, OpDef] = {}
        while self.at("op"):
            tok = self.next()
            name = self.expect("IDENT").text
            if name in ops:
                raise ParseError(f"duplicate operation {name!r}", tok.line, tok.col)
            self.expect("(")
            param = None
            if self.at("IDENT"):
                param = self.next().text
            self.expect(")")
            body = self.block(in_op=True)
            ops[name] = OpDef(name, param, body)
        self.expect("}")
        self.expect("EOF")
        return ObjectDef(kind, shared, ops)

    def block(self, in_op: bool) -> Tuple[Stmt, ...]:
        self.expect("{")
        out = []
        while not self.at("}"):
            out.append(self.stmt(in_op))
        self.expect("}")
        return tuple(out)

    def stmt(self, in_op: bool) -> Stmt:
        t = self.peek()
        if t.kind == "await":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            self.expect(";")
            return Await(c)
        if t.kind == "fence":
            self.next()
            self.expect(";")
            return Fence()
        if t.kind == "if":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            then = self.block(in_op)
            orelse: Tuple[Stmt, ...] = ()
            if self.at("else"):
                self.next()
                orelse = self.block(in_op)
            return If(c, then, orelse)
        if t.kind == "while":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            body = self.block(in_op)
            return While(c, body)
        if t.kind == "return":
            if not in_op:
                raise ParseError("'return' is only allowed in operation bodies",
                                 t.line, t.col)
            self.next()
            e = None
            if not self.at(";"):
                e = self.expr()
            self.expect(";")
            return Return(e)
        if t.kind == "call":
            self.next()
            return self._call_rest(None)
        if t.kind == "IDENT":
            target = self.next().text
            self.expect(":=")
            if self.at("call"):
                self.next()
                return self._call_rest(target)
            if self.at("TAS"):
                tok = self.next()
                if not in_op:
                    raise ParseError("TAS is only allowed in operation bodies",
                                     tok.line, tok.col)
                self.expect("(")
                var = self.expect("IDENT").text
                self.expect(",")
                test = int(self.expect("INT").text)
                self.expect(",")
                swap = int(self.expect("INT").text)
                self.expect(")")
                self.expect(";")
                return Tas(target, var, test, swap)
            e = self.expr()
            self.expect(";")
            return Assign(target, e)
        raise ParseError(f"expected a statement, found {t.text or 'end of input'!r}",
                         t.line, t.col)

    def _call_rest(self, result: Optional[str]) -> Call:
        name = self.expect("IDENT").text
        self.expect("(")
        arg = None
        if not self.at(")"):
            arg = self.expr()
        self.expect(")")
        self.expect(";")
        return Call(name, arg, result)

    def cond(self) -> Cmp:
        left = self.expr()
        t = self.peek()
        if t.kind == "=":
            self.next()
            return Cmp("=", left, self.expr())
        if t.kind == "!=":
            self.next()
            return Cmp("!=", left, self.expr())
        raise ParseError(f"expected '=' or '!=', found {t.text!r}", t.line, t.col)

    def expr(self) -> Expr:
        e = self.atom()
        while self.at("+") or self.at("-"):
            op = self.next().kind
            e = BinOp(op, e, self.atom())
        return e

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return Lit(int(t.text))
        if t.kind == "IDENT":
            self.next()
            return Name(t.text)
        raise ParseError(f"expected a value or variable, found {t.text or 'end of input'!r}",
                         t.line, t.col)


def parse(text: str) -> Union[ClientProgram, ObjectDef]:
    return _Parser(text).file()


# --- evaluation ---

def eval_expr(e: Expr, lookup, values: int) -> int:
    """Evaluate over the bounded domain 0..values, wrapping around."""
    n = values + 1
    if isinstance(e, Lit):
        return e.value % n
    if isinstance(e, Name):
        return lookup(e.ident) % n
    left = eval_expr(e.left, lookup, values)
    right = eval_expr(e.right, lookup, values)
    return (left + right) % n if e.op == "+" else (left - right) % n


def eval_cond(c: Cmp, lookup, values: int) -> bool:
    left = eval_expr(c.left, lookup, values)
    right = eval_expr(c.right, lookup, values)
    return left == right if c.op == "=" else left != right


# --- printing ---

def expr_str(e: Expr) -> str:
    """Compact rendering, used for step labels."""
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Name):
        return e.ident
    return f"{expr_str(e.left)}{e.op}{expr_str(e.right)}"


def cond_str(c: Cmp) -> str:
    return f"{expr_str(c.left)}{c.op}{expr_str(c.right)}"


def _expr_src(e: Expr) -> str:
    if isinstance(e, BinOp):
        return f"{_expr_src(e.left)} {e.op} {_expr_src(e.right)}"
    return expr_str(e)


def _cond_src(c: Cmp) -> str:
    return f"{_expr_src(c.left)} {c.op} {_expr_src(c.right)}"


def _stmt_lines(s: Stmt, depth: int, out: List[str]) -> None:
    pad = "  " * depth
    if isinstance(s, Assign):
        out.append(f"{pad}{s.target} := {_expr_src(s.expr)};")
    elif isinstance(s, Await):
        out.append(f"{pad}await ({_cond_src(s.cond)});")
    elif isinstance(s, Call):
        head = f"{s.result} := call" if s.result else "call"
        arg = _expr_src(s.arg) if s.arg is not None else ""
        out.append(f"{pad}{head} {s.op}({arg});")
    elif isinstance(s, If):
        out.append(f"{pad}if ({_cond_src(s.cond)}) {{")
        for t in s.then:
            _stmt_lines(t, depth + 1, out)
        if s.orelse:
            out.append(f"{pad}}} else {{")
            for t in s.orelse:
                _stmt_lines(t, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, While):
        out.append(f"{pad}while ({_cond_src(s.cond)}) {{")
        for t in s.body:
            _stmt_lines(t, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, Fence):
        out.append(f"{pad}fence;")
    elif isinstance(s, Return):
        out.append(f"{pad}return {_expr_src(s.expr)};" if s.expr is not None
                   else f"{pad}return;")
    elif isinstance(s, Tas):
        out.append(f"{pad}{s.result} := TAS({s.var}, {s.test}, {s.swap});")
    else:
        raise TypeError(s)


def print_program(p: ClientProgram) -> str:
    out = [f"global {v} = {n};" for v, n in p.globals.items()]
    for th, stmts in p.threads.items():
        ann = "" if p.coremap[th] == th else f" core {p.coremap[th]}"
        out.append(f"thread {th}{ann} {{")
        for s in stmts:
            _stmt_lines(s, 1, out)
        out.append("}")
    return "\n".join(out) + "\n"


def print_object(o: ObjectDef) -> str:
    out = [f"object {o.kind} {{"]
    for v, n in o.shared.items():
        out.append(f"  var {v} = {n};")
    for op in o.ops.values():
        out.append(f"  op {op.name}({op.param or ''}) {{")
        for s in op.body:
            _stmt_lines(s, 2, out)
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


# --- static validation ---

def is_register(name: str, declared: frozenset) -> bool:
    return name.startswith("r") and name not in declared


def _scan_stmts(stmts, declared, assigned, errors, where, in_spec, in_op):
    """Name resolution and register read-before-write along all paths.
    `assigned` is the set of registers definitely written so far."""

    def check_expr(e):
        if isinstance(e, Lit):
            return
        if isinstance(e, BinOp):
            check_expr(e.left)
            check_expr(e.right)
            return
        n = e.ident
        if n in declared:
            return
        if is_register(n, declared):
            if n not in assigned:
                errors.append(f"{where}: register {n!r} read before write")
        else:
            errors.append(f"{where}: undeclared variable {n!r}")

    def check_cond(c):
        check_expr(c.left)
        check_expr(c.right)

    for s in stmts:
        if isinstance(s, Assign):
            check_expr(s.expr)
            if is_register(s.target, declared):
                assigned.add(s.target)
            elif s.target not in declared:
                errors.append(f"{where}: undeclared variable {s.target!r}")
        elif isinstance(s, Await):
            check_cond(s.cond)
        elif isinstance(s, Call):
            if in_op:
                errors.append(f"{where}: operations may not call operations")
            if s.arg is not None:
                if not isinstance(s.arg, Lit):
                    errors.append(f"{where}: call arguments must be literals")
            if s.result is not None:
                if not is_register(s.result, declared):
                    errors.append(f"{where}: call result target {s.result!r} "
                                  "is not a register")
                assigned.add(s.result)
        elif isinstance(s, If):
            check_cond(s.cond)
            a = set(assigned)
            b = set(assigned)
            _scan_stmts(s.then, declared, a, errors, where, in_spec, in_op)
            _scan_stmts(s.orelse, declared, b, errors, where, in_spec, in_op)
            assigned |= a & b
        elif isinstance(s, While):
            if in_spec:
                errors.append(f"{where}: loops are not allowed in specification bodies")
            check_cond(s.cond)
            inner = set(assigned)
            _scan_stmts(s.body, declared, inner, errors, where, in_spec, in_op)
        elif isinstance(s, Fence):
            pass
        elif isinstance(s, Return):
            if s.expr is not None:
                check_expr(s.expr)
        elif isinstance(s, Tas):
            if in_spec:
                errors.append(f"{where}: primitive not allowed in specification")
            if s.var not in declared:
                errors.append(f"{where}: undeclared variable {s.var!r}")
            if not is_register(s.result, declared):
                errors.append(f"{where}: TAS result target {s.result!r} is not a register")
            assigned.add(s.result)


def validate(p: ClientProgram, obj: ObjectDef) -> List[str]:
    """Static checks; returns a list of error messages, empty when ok."""
    errors: List[str] = []
    overlap = set(p.globals) & set(obj.shared)
    if overlap:
        errors.append("program globals and object variables must be disjoint: "
                      + ", ".join(sorted(overlap)))
    declared_client = frozenset(p.globals)
    for th, stmts in p.threads.items():
        _scan_stmts(stmts, declared_client, set(), errors, f"thread {th}",
                    in_spec=False, in_op=False)
        for s in _all_stmts(stmts):
            if isinstance(s, Call):
                op = obj.ops.get(s.op)
                if op is None:
                    errors.append(f"thread {th}: unknown operation {s.op!r}")
                    continue
                if op.param is None and s.arg is not None:
                    errors.append(f"thread {th}: operation {s.op!r} takes no argument")
                if op.param is not None and s.arg is None:
                    errors.append(f"thread {th}: operation {s.op!r} needs an argument")
    for op in obj.ops.values():
        declared = frozenset(obj.shared) | ({op.param} if op.param else frozenset())
        assigned = {op.param} if op.param and is_register(op.param, declared) else set()
        _scan_stmts(op.body, declared, set(assigned), errors, f"op {op.name}",
                    in_spec=(obj.kind == "spec"), in_op=True)
    return errors


def _all_stmts(stmts):
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from _all_stmts(s.then)
            yield from _all_stmts(s.orelse)
        elif isinstance(s, While):
            yield from _all_stmts(s.body)


# --- bounded event set ---

def label_of(s: Stmt) -> str:
    if isinstance(s, Assign):
        return f"{s.target}:={expr_str(s.expr)}"
    if isinstance(s, Await):
        return f"await({cond_str(s.cond)})"
    if isinstance(s, If):
        return f"if({cond_str(s.cond)})"
    if isinstance(s, While):
        return f"while({cond_str(s.cond)})"
    if isinstance(s, Fence):
        return "fence"
    raise TypeError(f"statement has no label: {s}")


def op_outputs(op: OpDef, values: int) -> frozenset:
    """Closure of an operation's possible outputs: the full value domain
    when some path returns a value, plus the no-value output when some
    path ends without one."""
    has_value = any(isinstance(s, Return) and s.expr is not None
                    for s in _all_stmts(op.body))
    bare = any(isinstance(s, Return) and s.expr is None
               for s in _all_stmts(op.body))
    outs = set(range(values + 1)) if has_value else set()
    if bare or not _always_returns(op.body):
        outs.add(None)
    return frozenset(outs)


def _always_returns(stmts) -> bool:
    if not stmts:
        return False
    last = stmts[-1]
    if isinstance(last, Return):
        return True
    if isinstance(last, If):
        return _always_returns(last.then) and _always_returns(last.orelse)
    return False


def events_of_program(p: ClientProgram, obj: ObjectDef,
                      bound: int = 2, values: int = 3) -> frozenset:
    """All events the bounded program can produce: every reachable step
    with every value it could write (loops unrolled to `bound`), plus
    responses and observations for every invocation over op_outputs."""
    if bound < 1 or values < 1:
        raise ValueError("bounds must be at least 1")
    domain = range(values + 1)
    events = set()
    invocations = []

    for th in sorted(p.threads):
        seen = set()

        def walk(frames, labels, calls, th=th, seen=seen):
            key = (frames, labels, calls)
            if key in seen:
                return
            seen.add(key)
            if not frames:
                return
            top, rest = frames[-1], frames[:-1]
            if top[0] == "l":
                _, w, k = top
                if k == 0:
                    return  # loop budget exhausted: the thread is stuck
                lab = label_of(w)
                inst, labels2 = _bump(labels, lab)
                events.add(ProgStep(StepId(th, lab, inst)))
                walk(rest + (("l", w, k - 1), ("s", w.body, 0)), labels2, calls)
                walk(rest, labels2, calls)
                return
            _, stmts, i = top
            if i == len(stmts):
                walk(rest, labels, calls)
                return
            s = stmts[i]
            nxt = rest + (("s", stmts, i + 1),)
            if isinstance(s, Assign):
                lab = label_of(s)
                inst, labels2 = _bump(labels, lab)
                sid = StepId(th, lab, inst)
                if s.target in p.globals:
                    vals = ([s.expr.value % (values + 1)]
                            if isinstance(s.expr, Lit) else domain)
                    for v in vals:
                        events.add(ProgStep(sid, (s.target, v)))
                        events.add(ProgObs(sid, s.target, v))
                else:
                    events.add(ProgStep(sid))
                walk(nxt, labels2, calls)
            elif isinstance(s, (Await, Fence)):
                lab = label_of(s)
                inst, labels2 = _bump(labels, lab)
                events.add(ProgStep(StepId(th, lab, inst)))
                walk(nxt, labels2, calls)
            elif isinstance(s, If):
                lab = label_of(s)
                inst, labels2 = _bump(labels, lab)
                events.add(ProgStep(StepId(th, lab, inst)))
                walk(rest + (("s", stmts, i + 1), ("s", s.then, 0)), labels2, calls)
                walk(rest + (("s", stmts, i + 1), ("s", s.orelse, 0)), labels2, calls)
            elif isinstance(s, While):
                walk(rest + (("s", stmts, i + 1), ("l", s, bound)), labels, calls)
            elif isinstance(s, Call):
                if s.op not in obj.ops:
                    raise ValueError(f"unknown operation {s.op!r}")
                arg = s.arg.value % (values + 1) if isinstance(s.arg, Lit) else None
                opid = OpId(th, s.op, calls)
                events.add(Inv(opid, arg))
                invocations.append((opid, s.op))
                walk(nxt, labels, calls + 1)
            else:
                raise TypeError(f"unexpected client statement: {s}")

        walk((("s", p.threads[th], 0),), (), 0)

    for opid, name in invocations:
        for out in op_outputs(obj.ops[name], values):
            events.add(Res(opid, out))
            events.add(OpObs(opid, out))
    return frozenset(events)


def _bump(labels: tuple, lab: str):
    d = dict(labels)
    inst = d.get(lab, 0)
    d[lab] = inst + 1
    return inst, tuple(sorted(d.items()))

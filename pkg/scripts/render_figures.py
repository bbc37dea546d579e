#!/usr/bin/env python3
"""Regenerate the reference artifacts: enforced-order graphs for the
flag-passing client under each memory model (graphviz input plus the
pair listing), and the canonical counterexample traces of the two
refutation cases.  Writes into --out (default ./figures)."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wmtr.events import trace_to_lines, pretty
from wmtr.memmodel import ExploreConfig, Model, enforced_order
from wmtr.porder import order_to_lines, to_dot
from wmtr.program import parse
from wmtr.refine import check_wmtr

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name):
    return parse((CORPUS / name).read_text())


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--values", type=int, default=3)
    args = ap.parse_args()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    p2, o2 = load("fig2_client.wm"), load("fig2_object.wm")
    for model in Model:
        cfg = ExploreConfig(model=model, values=args.values)
        po = enforced_order(p2, o2, cfg)
        (outdir / f"flag_order_{model.value}.dot").write_text(to_dot(po))
        (outdir / f"flag_order_{model.value}.txt").write_text(order_to_lines(po))
        print(f"flag_order_{model.value}: {len(po.universe)} events, "
              f"{len(po.pairs)} pairs")

    cases = [
        ("spinlock_tso", "fig5_client.wm", Model.TSO),
        ("counter_relaxed", "fig6_client.wm", Model.RELAXED),
    ]
    spec, impl = load("spinlock_spec.wm"), load("spinlock_impl.wm")
    for name, client, model in cases:
        v = check_wmtr(load(client), spec, impl,
                       ExploreConfig(model=model, values=args.values))
        assert not v.holds, name
        t = v.counterexample.trace
        (outdir / f"cex_{name}.jsonl").write_text(trace_to_lines(t) + "\n")
        (outdir / f"cex_{name}.txt").write_text(
            "\n".join(pretty(e) for e in t) + "\n")
        obs = " ".join(f"{th}.{var}={val}"
                       for th, var, val in v.counterexample.observable)
        print(f"cex_{name}: {len(t)} events, observable {obs}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

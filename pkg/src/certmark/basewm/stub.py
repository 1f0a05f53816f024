"""Minimal external decoder speaking the certmark line protocol.

Runs the reference spread-spectrum decoder (``--pattern-seed``) or replies
with fixed logits (``--fixed``). ``--bad-count`` and ``--die-after`` exist to
exercise the bridge's failure paths.

    python -m certmark.basewm.stub --pattern-seed 7
"""
import argparse
import sys

import numpy as np


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="certmark-stub-decoder")
    ap.add_argument("--pattern-seed", type=int, default=0)
    ap.add_argument("--fixed", type=str, default=None, help="space-separated logits to echo")
    ap.add_argument("--bad-count", action="store_true")
    ap.add_argument("--die-after", type=int, default=None)
    ap.add_argument("--hang", action="store_true")
    args = ap.parse_args(argv)

    from certmark.basewm.reference import gen_patterns, ss_logits
    from certmark.imageio import load_array

    out = sys.stdout
    m = None
    served = 0
    for line in sys.stdin:
        line = line.strip()
        if line.startswith("HELLO"):
            try:
                m = int(line.split("m=", 1)[1])
            except (IndexError, ValueError):
                out.write("ERR bad hello\n")
                out.flush()
                continue
            out.write("OK\n")
        elif line.startswith("DECODE "):
            if args.die_after is not None and served >= args.die_after:
                return 3
            if args.hang:
                continue
            try:
                if args.fixed is not None:
                    z = np.array([float(t) for t in args.fixed.split()])
                else:
                    x = load_array(line[len("DECODE "):])
                    z = ss_logits(x, gen_patterns(args.pattern_seed, m, x.shape))
                if args.bad_count:
                    z = z[:-1]
                out.write("LOGITS " + " ".join(repr(float(v)) for v in z) + "\n")
            except Exception as exc:  # reported over the wire, never fatal
                out.write(f"ERR {exc}\n")
            served += 1
        else:
            out.write("ERR unknown command\n")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())

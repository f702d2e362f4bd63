#!/usr/bin/env python3
"""Solve an LP file written by `migplan emit-lp` with scipy's MILP solver.

Prints the optimal objective value on one line. Exit status 3 when scipy is
missing, 4 when the solver does not report an optimum.

Only the subset of the CPLEX LP grammar that the exporter writes is read.
"""

import re
import sys

try:
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix
except ImportError:
    print("scipy not available", file=sys.stderr)
    sys.exit(3)

SECTIONS = {"maximize", "minimize", "subject to", "bounds", "binaries", "generals", "end"}


def parse_expr(tokens):
    terms = []
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        terms.append((tok, sign * (1.0 if coef is None else coef)))
        sign, coef = 1.0, None
    return terms


def parse(text):
    section = None
    sense_obj = 1.0
    objective = []
    rows = []
    bounds = {}
    integer = set()
    binary = set()
    pending = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in SECTIONS:
            if section == "objective" and pending:
                objective = parse_expr(pending)
                pending = []
            section = {"maximize": "objective", "minimize": "objective"}.get(low, low)
            if low == "maximize":
                sense_obj = -1.0
            continue
        if section in ("objective", "subject to"):
            if not pending and ":" in line:
                line = line.split(":", 1)[1]
            pending.extend(line.split())
            if section == "subject to":
                for i, tok in enumerate(pending):
                    if tok in ("<=", ">=", "="):
                        rows.append((parse_expr(pending[:i]), tok, float(pending[i + 1])))
                        pending = []
                        break
        elif section == "bounds":
            toks = line.split()
            if len(toks) == 3 and toks[1] == "=":
                bounds[toks[0]] = (float(toks[2]), float(toks[2]))
            elif len(toks) == 5:
                bounds[toks[2]] = (float(toks[0]), float(toks[4]))
            else:
                raise ValueError("unsupported bound: " + line)
        elif section == "binaries":
            binary.update(line.split())
        elif section == "generals":
            integer.update(line.split())
    return sense_obj, objective, rows, bounds, integer, binary


def main():
    if len(sys.argv) != 2:
        print("usage: lp_milp.py FILE.lp", file=sys.stderr)
        sys.exit(2)
    with open(sys.argv[1]) as f:
        sense, objective, rows, bounds, integer, binary = parse(f.read())
    names = {}
    for terms in [objective] + [r[0] for r in rows]:
        for name, _ in terms:
            names.setdefault(name, len(names))
    n = len(names)
    c = np.zeros(n)
    for name, v in objective:
        c[names[name]] += sense * v
    data, ri, ci, lo, hi = [], [], [], [], []
    for i, (terms, op, rhs) in enumerate(rows):
        for name, v in terms:
            data.append(v)
            ri.append(i)
            ci.append(names[name])
        lo.append(rhs if op in (">=", "=") else -np.inf)
        hi.append(rhs if op in ("<=", "=") else np.inf)
    a = coo_matrix((data, (ri, ci)), shape=(len(rows), n)).tocsr()
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    kind = np.zeros(n)
    for name, j in names.items():
        if name in binary:
            ub[j] = 1.0
            kind[j] = 1
        if name in integer:
            kind[j] = 1
        if name in bounds:
            lb[j], ub[j] = bounds[name]
    res = milp(c, constraints=LinearConstraint(a, lo, hi), integrality=kind, bounds=Bounds(lb, ub))
    if res.status != 0:
        print("solver status " + str(res.status) + ": " + str(res.message), file=sys.stderr)
        sys.exit(4)
    print(repr(float(sense * res.fun)))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Solve an SDPA sparse instance written by `sphbound gen-sdpa` with cvxpy.

Solves  min c^T x  s.t.  sum_i F_i x_i - F_0 >= 0  and writes objValPrimal,
xVec and xMat in the layout read by `sphbound round-cert`.

With --bisect LO HI the objective weight of the last variable (B) is reset
to 3(N - 1) for trial bounds N, and N is bisected on the test
optimum <= N^2 (f_0 is fixed to 1 in the instance).
"""

import argparse
import sys

import cvxpy as cp
import numpy as np


def parse_sdpa(path):
    with open(path) as fh:
        lines = [l for l in fh if l.strip() and l.lstrip()[0] not in '"*#']

    def toks(line):
        for ch in ",{}()":
            line = line.replace(ch, " ")
        return line.split()

    m = int(toks(lines[0])[0])
    nb = int(toks(lines[1])[0])
    sizes = [int(v) for v in toks(lines[2])[:nb]]
    c = np.array([float(v) for v in toks(lines[3])[:m]])
    mats = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(m + 1)]
    for line in lines[4:]:
        k, b, i, j, v = toks(line)[:5]
        k, b, i, j, v = int(k), int(b) - 1, int(i) - 1, int(j) - 1, float(v)
        mats[k][b][i, j] = v
        mats[k][b][j, i] = v
    return sizes, c, mats


def solve(sizes, c, mats, solver):
    m = len(c)
    x = cp.Variable(m)
    cons = []
    slacks = []
    for b, s in enumerate(sizes):
        nz = [k for k in range(1, m + 1) if np.any(mats[k][b])]
        expr = sum(mats[k][b] * x[k - 1] for k in nz) - mats[0][b]
        if s < 0:
            d = cp.diag(expr)
            cons.append(d >= 0)
            slacks.append(d)
        else:
            sym = (expr + expr.T) / 2
            cons.append(sym >> 0)
            slacks.append(sym)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver=solver)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    return prob.value, x.value, [np.asarray(s.value) for s in slacks]


def fmt(v):
    return "%.16e" % v


def write_solution(path, value, x, slacks, sizes):
    with open(path, "w") as fh:
        fh.write("* written by tools/solve_sdpa.py\n")
        fh.write("objValPrimal = %s\n" % fmt(value))
        fh.write("xVec = \n{%s}\n" % ",".join(fmt(v) for v in x))
        fh.write("xMat = \n{\n")
        for s, mat in zip(sizes, slacks):
            if s < 0:
                fh.write("{%s}\n" % ",".join(fmt(v) for v in mat))
            else:
                rows = ["{%s}" % ",".join(fmt(v) for v in row) for row in mat]
                fh.write("{ %s }\n" % ", ".join(rows))
        fh.write("}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("instance")
    ap.add_argument("solution")
    ap.add_argument("--solver", default="CLARABEL")
    ap.add_argument("--bisect", nargs=2, type=float, metavar=("LO", "HI"))
    ap.add_argument("--tolerance", type=float, default=1e-7)
    args = ap.parse_args()

    sizes, c, mats = parse_sdpa(args.instance)
    if args.bisect:
        lo, hi = args.bisect
        best = None
        while hi - lo > args.tolerance:
            mid = (lo + hi) / 2
            c[-1] = 3 * (mid - 1)
            res = solve(sizes, c, mats, args.solver)
            if res is not None and res[0] <= mid * mid:
                hi, best = mid, res
            else:
                lo = mid
        c[-1] = 3 * (hi - 1)
        best = solve(sizes, c, mats, args.solver)
        print("bound %.12f" % hi)
    else:
        best = solve(sizes, c, mats, args.solver)
    if best is None:
        sys.exit("solver did not report an optimal solution")
    write_solution(args.solution, best[0], best[1], best[2], sizes)


if __name__ == "__main__":
    main()

"""Solve a sparse SDPA file with cvxopt and print the result as JSON.

Usage: solve_sdpa.py PROBLEM.dat-s
"""

import json
import sys

from cvxopt import matrix, solvers, spmatrix


def read_sdpa(path):
    with open(path) as fh:
        lines = [l.strip() for l in fh if l.strip() and l.strip()[0] not in '"*']
    tok = lambda l: [t for t in l.replace(",", " ").replace("{", " ").replace("}", " ").split() if t]
    m = int(tok(lines[0])[0])
    nblocks = int(tok(lines[1])[0])
    sizes = [int(t) for t in tok(lines[2])[:nblocks]]
    c = [float(t) for t in tok(lines[3])[:m]]
    entries = []
    for l in lines[4:]:
        k, b, i, j, v = tok(l)
        entries.append((int(k), int(b) - 1, int(i) - 1, int(j) - 1, float(v)))
    return m, sizes, c, entries


def main():
    m, sizes, c, entries = read_sdpa(sys.argv[1])
    # cvxopt: G x + s = h, s >= 0, with s = sum F_k x_k - F_0, so G = -F_k, h = -F_0
    lp_offset, off = {}, 0
    for b, n in enumerate(sizes):
        if n < 0:
            lp_offset[b] = off
            off += -n
    n_lp = off
    gl_i, gl_j, gl_v, hl = [], [], [], [0.0] * n_lp
    gs = {b: ([], [], []) for b, n in enumerate(sizes) if n > 0}
    hs = {b: [0.0] * (n * n) for b, n in enumerate(sizes) if n > 0}
    for k, b, i, j, v in entries:
        n = sizes[b]
        if n < 0:
            row = lp_offset[b] + i
            if k == 0:
                hl[row] -= v
            else:
                gl_i.append(row)
                gl_j.append(k - 1)
                gl_v.append(-v)
            continue
        cells = {(i, j), (j, i)}
        for a, bb in cells:
            idx = a + bb * n
            if k == 0:
                hs[b][idx] -= v
            else:
                gs[b][0].append(idx)
                gs[b][1].append(k - 1)
                gs[b][2].append(-v)
    solvers.options.update({"show_progress": False, "abstol": 1e-10, "reltol": 1e-10, "feastol": 1e-10, "maxiters": 200})
    kwargs = {}
    if n_lp:
        kwargs["Gl"] = spmatrix(gl_v, gl_i, gl_j, (n_lp, m))
        kwargs["hl"] = matrix(hl)
    psd = [b for b in sorted(gs)]
    if psd:
        kwargs["Gs"] = [spmatrix(gs[b][2], gs[b][0], gs[b][1], (sizes[b] ** 2, m)) for b in psd]
        kwargs["hs"] = [matrix(hs[b], (sizes[b], sizes[b])) for b in psd]
    try:
        sol = solvers.sdp(matrix(c), **kwargs)
    except (ValueError, ArithmeticError) as exc:
        print(json.dumps({"status": "error", "message": str(exc)}))
        return
    x = sol["x"]
    print(json.dumps({
        "status": sol["status"],
        "primal_objective": sol["primal objective"],
        "dual_objective": sol["dual objective"],
        "iterations": sol.get("iterations", 0),
        "x": list(x) if x is not None else [],
    }))


if __name__ == "__main__":
    main()

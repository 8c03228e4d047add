"""Reference optima for the acceptance instances.

Enumerates every drop set of size m, solves the restricted convex program
with cvxpy (Clarabel), and records the best value together with the number
of drop sets attaining it. Run once; the output is committed as
tests/data/acceptance_oracle.json.

    dump_instances /tmp/acc && python3 freeze_oracle.py /tmp/acc out.json
"""

import itertools
import json
import math
import sys
from pathlib import Path

import cvxpy as cp
import numpy as np


def num(v):
    if isinstance(v, str):
        return math.copysign(math.inf, -1.0 if v.startswith("-") else 1.0)
    return float(v)


def load(path):
    doc = json.loads(Path(path).read_text())
    d = doc["d"]
    obj = doc["objective"]
    Q = np.array(obj["Q"], dtype=float) if "Q" in obj else np.zeros((d, d))
    c = np.array(obj["c"], dtype=float)
    reg = doc["region"]
    lo = np.array([num(v) for v in reg["bounds"]["l"]])
    hi = np.array([num(v) for v in reg["bounds"]["u"]])
    A = b = E = e = None
    if "ineq" in reg:
        A = np.array(reg["ineq"]["A"], dtype=float)
        b = np.array(reg["ineq"]["b"], dtype=float)
    if "eq" in reg:
        E = np.array(reg["eq"]["E"], dtype=float)
        e = np.array(reg["eq"]["e"], dtype=float)
    sc = doc["scenarios"]
    pieces = []
    for scen in sc["pieces"]:
        pieces.append([(np.array(p.get("quad", [0.0] * d), dtype=float),
                        np.array(p["lin"], dtype=float), float(p["offset"]))
                       for p in scen])
    S = sc["S"]
    m = int(math.floor(doc["risk"]["alpha"] * S + 1e-9))
    return dict(d=d, Q=Q, c=c, lo=lo, hi=hi, A=A, b=b, E=E, e=e,
                pieces=pieces, S=S, m=m)


def restricted(inst, enforced):
    d = inst["d"]
    x = cp.Variable(d)
    Qs = 0.5 * (inst["Q"] + inst["Q"].T)
    obj = inst["c"] @ x
    if np.any(Qs != 0):
        w, V = np.linalg.eigh(Qs)
        L = V @ np.diag(np.sqrt(np.clip(w, 0.0, None)))
        obj = obj + cp.sum_squares(L.T @ x)
    cons = []
    for j in range(d):
        if np.isfinite(inst["lo"][j]):
            cons.append(x[j] >= inst["lo"][j])
        if np.isfinite(inst["hi"][j]):
            cons.append(x[j] <= inst["hi"][j])
    if inst["A"] is not None:
        cons.append(inst["A"] @ x <= inst["b"])
    if inst["E"] is not None:
        cons.append(inst["E"] @ x == inst["e"])
    for s in enforced:
        for quad, lin, off in inst["pieces"][s]:
            expr = lin @ x + off
            if np.any(quad != 0):
                expr = expr + cp.sum(cp.multiply(quad, cp.square(x)))
            cons.append(expr <= 0)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10,
               tol_feas=1e-10)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return math.inf
    return float(prob.value)


def oracle(inst):
    S, m = inst["S"], inst["m"]
    values = []
    for drop in itertools.combinations(range(S), m):
        keep = [s for s in range(S) if s not in drop]
        values.append(restricted(inst, keep))
    best = min(values)
    ties = sum(1 for v in values if v <= best + 1e-7 * max(1.0, abs(best)))
    return best, ties


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    result = {"affine": [], "norm": []}
    for kind in ("affine", "norm"):
        k = 0
        while (src / f"{kind}_{k}.json").exists():
            best, ties = oracle(load(src / f"{kind}_{k}.json"))
            result[kind].append({"index": k, "fval": best, "optimal_drop_sets": ties})
            print(kind, k, best, ties, flush=True)
            k += 1
    out.write_text(json.dumps(result, indent=2) + "\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Brute-force Hochschild cohomology of a basis category, from the model files.

Builds the bar-type cochain complex directly (one multilinear map per
multichain U_0 ⊆ … ⊆ U_p, arguments a_i ∈ O(U_{i-1})), writes every
differential as an explicit rational matrix and takes ranks with Fractions.
Shares nothing with the Rust implementation beyond the model file format.

Exit status is nonzero if any golden value disagrees.
"""

import argparse
import itertools
import json
import sys
from fractions import Fraction
from pathlib import Path

MODELS = Path(__file__).resolve().parent.parent / "crates" / "core" / "models"

GOLDEN = {
    "point_field": [1, 0, 0],
    "point_dual": [2, 1, 1],
    "chain2": [1, 0, 0],
    "pseudocircle": [1, 1, 0],
}


def scalar(x):
    return Fraction(x) if isinstance(x, str) else Fraction(int(x))


class Model:
    def __init__(self, data):
        self.points = data["points"]
        self.min_open = {x: frozenset(v) for x, v in data["min_opens"].items()}
        self.algebras = {}
        for name, a in data["algebras"].items():
            n = len(a["basis"])
            prod = [[[scalar(c) for c in a["products"][i][j]] for j in range(n)] for i in range(n)]
            self.algebras[name] = (n, prod)
        assigned = {frozenset(e["open"]): e["algebra"] for e in data.get("assignment", [])}
        self.basis = sorted({frozenset(b) for b in data["basis"]}, key=lambda s: (len(s), sorted(s)))
        default = data.get("default_algebra")
        self.algebra_of = {u: assigned.get(u, default) for u in self.basis}
        self.maps = {}
        for r in data.get("restrictions", []):
            self.maps[(frozenset(r["from"]), frozenset(r["to"]))] = [
                [scalar(c) for c in row] for row in r["matrix"]
            ]

    def dim(self, u):
        return self.algebras[self.algebra_of[u]][0]

    def mul(self, u, a, b):
        n, prod = self.algebras[self.algebra_of[u]]
        out = [Fraction(0)] * n
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        for k, c in enumerate(prod[i][j]):
                            out[k] += x * y * c
        return out

    def restrict(self, v, u, a):
        """ρ_{v→u}(a) for u ⊆ v."""
        if u == v:
            return list(a)
        m = self.maps.get((v, u))
        if m is None:
            if self.algebra_of[u] != self.algebra_of[v]:
                raise ValueError(f"missing restriction {sorted(v)} -> {sorted(u)}")
            return list(a)
        return [sum(row[j] * a[j] for j in range(len(a))) for row in m]

    def compose(self, u, v, f, g):
        """f ∘ g for g: U → V (g ∈ O(U)) and f: V → W (f ∈ O(V))."""
        return self.mul(u, self.restrict(v, u, f), g)


def multichains(objects, length):
    out = []
    for combo in itertools.product(range(len(objects)), repeat=length):
        chain = [objects[i] for i in combo]
        if all(chain[i] <= chain[i + 1] for i in range(length - 1)):
            out.append(tuple(chain))
    return out


def unit(n, i):
    v = [Fraction(0)] * n
    v[i] = Fraction(1)
    return v


class Cochains:
    """Coordinates of C^p: (chain, tuple of argument basis indices, output index)."""

    def __init__(self, model, p):
        self.p = p
        self.index = {}
        self.keys = []
        for chain in multichains(model.basis, p + 1):
            ranges = [range(model.dim(chain[i])) for i in range(p)]
            for args in itertools.product(*ranges):
                for out in range(model.dim(chain[0])):
                    self.index[(chain, args, out)] = len(self.keys)
                    self.keys.append((chain, args, out))

    def __len__(self):
        return len(self.keys)


def evaluate(model, coords, phi, chain, args):
    """φ(chain)(a_1, …, a_p) for arbitrary argument vectors a_i ∈ O(U_{i-1})."""
    out = [Fraction(0)] * model.dim(chain[0])
    ranges = [[(j, x) for j, x in enumerate(a) if x] for a in args]
    for pick in itertools.product(*ranges):
        coeff = Fraction(1)
        for _, x in pick:
            coeff *= x
        idx = tuple(j for j, _ in pick)
        for o in range(len(out)):
            c = phi.get(coords.index[(chain, idx, o)])
            if c:
                out[o] += coeff * c
    return out


def d_phi(model, src, phi, chain, vecs):
    """(dφ)(a_{p+1}, …, a_1) on the chain U_0 ⊆ … ⊆ U_{p+1}; a_i = vecs[i-1]."""
    p = src.p
    total = [Fraction(0)] * model.dim(chain[0])

    def add(sign, v):
        for k, x in enumerate(v):
            total[k] += sign * x

    # φ on U_1 ⊆ … ⊆ U_{p+1}, then precompose with a_1: U_0 → U_1
    inner = evaluate(model, src, phi, chain[1:], vecs[1:])
    add(1, model.compose(chain[0], chain[1], inner, vecs[0]))
    for i in range(1, p + 1):
        merged = model.compose(chain[i - 1], chain[i], vecs[i], vecs[i - 1])
        face = chain[:i] + chain[i + 1:]
        add((-1) ** i, evaluate(model, src, phi, face, vecs[: i - 1] + [merged] + vecs[i + 1:]))
    # φ on U_0 ⊆ … ⊆ U_p, then postcompose with a_{p+1}: U_p → U_{p+1}
    last = evaluate(model, src, phi, chain[:-1], vecs[:-1])
    add((-1) ** (p + 1), model.compose(chain[0], chain[-2], vecs[-1], last))
    return total


def differential(model, src, dst):
    """Matrix of d: C^p → C^{p+1}, as a list of rows."""
    matrix = [[Fraction(0)] * len(src) for _ in dst.keys]
    for col in range(len(src)):
        phi = {col: Fraction(1)}
        for r, (chain, args, out) in enumerate(dst.keys):
            vecs = [unit(model.dim(chain[i]), a) for i, a in enumerate(args)]
            matrix[r][col] = d_phi(model, src, phi, chain, vecs)[out]
    return matrix


def rank(matrix):
    m = [row[:] for row in matrix if any(row)]
    if not m:
        return 0
    cols = len(m[0])
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, len(m)) if m[i][c]), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return r


def cohomology(model, top):
    spaces = [Cochains(model, p) for p in range(top + 2)]
    ranks = [rank(differential(model, spaces[p], spaces[p + 1])) for p in range(top + 1)]
    dims = [len(s) for s in spaces]
    return dims, [dims[q] - ranks[q] - (ranks[q - 1] if q else 0) for q in range(top + 1)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-degree", type=int, default=2, help="report H^q for q ≤ this")
    ap.add_argument("models", nargs="*", help="model names (default: every shipped model)")
    args = ap.parse_args()
    names = args.models or sorted(p.stem for p in MODELS.glob("*.json"))
    failed = False
    for name in names:
        data = json.loads((MODELS / f"{name}.json").read_text())
        model = Model(data)
        dims, h = cohomology(model, args.max_degree)
        line = f"{name:24} C^p {dims[:-1]}  H^q {h}"
        golden = GOLDEN.get(name)
        if golden is not None:
            ok = h[: len(golden)] == golden[: len(h)]
            failed |= not ok
            line += "  golden " + ("ok" if ok else f"MISMATCH, expected {golden}")
        print(line)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Writes the sample potentials and trees next to this script."""

import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def grid(f, nodes=401, length=1.0):
    xs = [length * i / (nodes - 1) for i in range(nodes)]
    vs = [complex(f(x)) for x in xs]
    return {"grid": xs, "values_re": [v.real for v in vs], "values_im": [v.imag for v in vs]}


def write(name, doc):
    with open(os.path.join(HERE, name), "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def edge(tail, head, f=None, nu=0):
    e = {"tail": tail, "head": head, "length": 1.0, "nu": nu}
    if f is not None:
        e["potential"] = grid(f)
    return e


write("q2_cos.json", grid(lambda x: math.cos(2 * math.pi * x)))
write("q3_linear.json", grid(lambda x: x - 0.5))
write("q2_bump.json", grid(lambda x: math.sin(math.pi * x) ** 2))

# Three-edge star with a = 1, problem k = 1 (Dirichlet on edge 3).
write("star3_k1.json", {
    "vertices": 4, "root": 0, "delay": 1.0,
    "edges": [edge(0, 1), edge(1, 2, lambda x: math.cos(2 * math.pi * x)), edge(1, 3, lambda x: x - 0.5, nu=1)],
})

# Five-edge tree, a = 2: only the edges two levels down carry a potential.
write("tree5_a2.json", {
    "vertices": 6, "root": 0, "delay": 2.0,
    "edges": [edge(0, 1), edge(1, 2), edge(1, 3), edge(2, 4, lambda x: 1.5), edge(2, 5, lambda x: -0.7)],
})

# Five-edge tree, a = 3/2: potentials on edges 2 and 3 vanish on (0, 1/2).
write("tree5_a15.json", {
    "vertices": 6, "root": 0, "delay": 1.5,
    "edges": [
        edge(0, 1),
        edge(1, 2, lambda x: max(0.0, x - 0.5), nu=1),
        edge(1, 3, lambda x: math.sin(4 * (x - 0.5)) if x > 0.5 else 0.0),
        edge(2, 4, lambda x: 1.0 + x, nu=1),
        edge(2, 5, lambda x: math.cos(2 * x)),
    ],
})

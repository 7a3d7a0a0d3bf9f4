"""Random small heaps and an independent unrolling oracle for deep equality."""

from __future__ import annotations

import random

from hintsynth.runtime.values import Obj

CLASSES = {"A": ("f", "g"), "B": ("f",), "C": ("x", "y", "z")}
LEAVES = (0, 1, -1, True, False, "", "s", None)


def random_heap(rng: random.Random, acyclic: bool, max_objects: int = 8) -> list[Obj]:
    n = rng.randint(1, max_objects)
    objs = []
    for i in range(n):
        cls = rng.choice(sorted(CLASSES))
        objs.append(Obj(i + 1, cls, {}))
    for i, o in enumerate(objs):
        for f in CLASSES[o.cls]:
            # acyclic heaps only point to later objects
            targets = objs[i + 1:] if acyclic else objs
            if targets and rng.random() < 0.5:
                o.fields[f] = rng.choice(targets)
            else:
                o.fields[f] = rng.choice(LEAVES)
    return objs


def mutate(rng: random.Random, objs: list[Obj]) -> list[Obj]:
    """A copy of the heap, sometimes with one leaf changed."""
    copies = [Obj(o.id + 100, o.cls, {}) for o in objs]
    index = {o.id: c for o, c in zip(objs, copies)}
    for o, c in zip(objs, copies):
        for f, v in o.fields.items():
            c.fields[f] = index[v.id] if isinstance(v, Obj) else v
    if rng.random() < 0.5:
        c = rng.choice(copies)
        f = rng.choice(sorted(c.fields))
        if not isinstance(c.fields[f], Obj):
            c.fields[f] = rng.choice(LEAVES)
    return copies


def unroll(v, depth: int):
    """Finite tree of a value, cut off at `depth` object levels."""
    if not isinstance(v, Obj):
        return ("v", type(v).__name__, v)
    if depth == 0:
        return ("cut", v.cls)
    return ("o", v.cls, tuple((f, unroll(v.fields[f], depth - 1)) for f in sorted(v.fields)))


def oracle_equal(a, b, depth: int = 64) -> bool:
    """Compare the depth-bounded unrollings of `a` and `b`.

    Same answer as `unroll(a, depth) == unroll(b, depth)`, memoised per object
    pair and remaining depth so that cyclic heaps stay cheap. For graphs of at
    most 8 objects each, agreement to depth 64 implies agreement at any depth.
    """
    memo: dict = {}

    def eq(x, y, k: int) -> bool:
        if not isinstance(x, Obj) or not isinstance(y, Obj):
            return unroll(x, 0) == unroll(y, 0)
        if x.cls != y.cls or sorted(x.fields) != sorted(y.fields):
            return False
        if k == 0:
            return True
        key = (x.id, y.id, k)
        if key not in memo:
            memo[key] = all(eq(x.fields[f], y.fields[f], k - 1) for f in sorted(x.fields))
        return memo[key]

    return eq(a, b, depth)

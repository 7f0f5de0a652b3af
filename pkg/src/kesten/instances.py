"""Named desk-scale instances shared by the CLI and the acceptance suite."""
from __future__ import annotations

from .graphs import SHIPPED, cayley_graph, load_shipped, schreier_graph
from .words import SubgroupSpec

GROUP_INSTANCES = {
    "Z": lambda: cayley_graph(1),
    "F2": lambda: cayley_graph(2),
    "F3": lambda: cayley_graph(3),
    "ab_in_F3": lambda: schreier_graph(SubgroupSpec.parse(3, "a,b")),
    "a2b2_in_F2": lambda: schreier_graph(SubgroupSpec.parse(2, "aa,bb")),
    "a_in_F2": lambda: schreier_graph(SubgroupSpec.parse(2, "a")),
}


def instance(name: str):
    if name in GROUP_INSTANCES:
        return GROUP_INSTANCES[name]()
    return load_shipped(name)


def all_instance_names() -> list[str]:
    return list(GROUP_INSTANCES) + list(SHIPPED)


# (instance, vertex set A, letter or slot s, n) for the quasi-invariance check.
# Cayley vertices are reduced words; other vertices are integer ids.
QINV_SUITE = [
    ("Z", [()], 0, 1),
    ("Z", [(), (0,)], 1, 2),
    ("Z", [(0,), (0, 0)], 0, 3),
    ("F2", [()], 0, 2),
    ("F2", [(0,), (1,), (2,), (3,)], 2, 2),
    ("F2", [()], 3, 3),
    ("F3", [()], 4, 1),
    ("ab_in_F3", [0], 4, 2),
    ("a2b2_in_F2", [0], 0, 2),
    ("petersen", [0], 0, 2),
    ("c5", [0, 1], 0, 3),
    ("k5", [0], 1, 2),
]

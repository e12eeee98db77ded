"""Shared fixtures and generators for the test suite: canonical instances,
exhaustive small-graph enumeration up to isomorphism, random instance sampling,
and independent certificates (brute-force matching, deficiency witnesses)."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, permutations, product

from fairmatch import Instance


def triangle(peaks: tuple[int, int, int] = (1, 1, 1)) -> Instance:
    return Instance.build(
        "triangle",
        list(zip("abc", peaks)),
        [("a", "b"), ("b", "c"), ("c", "a")],
    )


def path_instance(n: int, peaks: tuple[int, ...] | None = None, name: str | None = None) -> Instance:
    peaks = peaks or tuple(1 for _ in range(n))
    return Instance.build(
        name or f"path{n}",
        [(f"s{i}", peaks[i - 1]) for i in range(1, n + 1)],
        [(f"s{i}", f"s{i + 1}") for i in range(1, n)],
    )


def diamond_instance() -> Instance:
    return Instance.build(
        "diamond",
        [("a1", 2), ("a2", 5), ("a3", 3), ("a4", 2)],
        [("a1", "a3"), ("a1", "a4"), ("a2", "a4"), ("a2", "a3"), ("a4", "a3")],
    )


HUB15_PEAKS = {
    "s1": 2, "s2": 3, "s3": 2, "s4": 4, "s5": 4, "s6": 5, "s7": 2, "s8": 4,
    "s9": 2, "s10": 2, "s11": 2, "s12": 2, "s13": 2, "s14": 2, "s15": 2,
}

HUB15_EDGES = [
    ("s1", "s2"), ("s2", "s3"), ("s3", "s1"),
    ("s6", "s2"), ("s6", "s4"), ("s6", "s5"),
    ("s7", "s8"),
    ("s9", "s10"), ("s10", "s11"), ("s11", "s12"), ("s12", "s9"),
    ("s9", "s11"), ("s10", "s12"),
    ("s13", "s14"), ("s14", "s15"), ("s13", "s15"),
    ("s13", "s7"), ("s12", "s6"),
]


def hub15_instance() -> Instance:
    return Instance.build("hub15", list(HUB15_PEAKS.items()), HUB15_EDGES)


def hub15_json() -> dict:
    return hub15_instance().to_json_dict()


Pair = tuple[int, int]


def is_connected(n: int, edges: frozenset[Pair]) -> bool:
    if n <= 1:
        return True
    nbrs: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


def connected_graphs(n: int) -> list[frozenset[Pair]]:
    """All labeled connected graphs on vertices 0..n-1."""
    pairs = list(combinations(range(n), 2))
    graphs = []
    for bits in product((0, 1), repeat=len(pairs)):
        edges = frozenset(p for p, bit in zip(pairs, bits) if bit)
        if is_connected(n, edges):
            graphs.append(edges)
    return graphs


def _relabel(edges: frozenset[Pair], perm: tuple[int, ...]) -> frozenset[Pair]:
    return frozenset(tuple(sorted((perm[u], perm[v]))) for u, v in edges)


def graph_classes(n: int) -> list[tuple[frozenset[Pair], list[tuple[int, ...]]]]:
    """Connected graphs on n vertices up to isomorphism, each with its
    automorphism group (as vertex permutations)."""
    seen: set[frozenset[Pair]] = set()
    classes = []
    for edges in connected_graphs(n):
        if edges in seen:
            continue
        orbit = {_relabel(edges, perm) for perm in permutations(range(n))}
        seen |= orbit
        autos = [
            perm for perm in permutations(range(n)) if _relabel(edges, perm) == edges
        ]
        classes.append((edges, autos))
    return classes


def peaked_instances_up_to_iso(max_nodes: int, max_peak: int) -> list[Instance]:
    """One representative per isomorphism class of (connected graph, peak vector)."""
    instances = []
    for n in range(1, max_nodes + 1):
        for edges, autos in graph_classes(n):
            seen_peaks: set[tuple[int, ...]] = set()
            for peaks in product(range(1, max_peak + 1), repeat=n):
                canon = min(
                    tuple(peaks[perm.index(v)] for v in range(n)) for perm in autos
                )
                if canon in seen_peaks:
                    continue
                seen_peaks.add(canon)
                instances.append(
                    Instance.build(
                        f"n{n}",
                        [(f"v{i}", canon[i]) for i in range(n)],
                        [(f"v{u}", f"v{v}") for u, v in sorted(edges)],
                    )
                )
    return instances


def random_connected_instance(
    rng: random.Random, max_nodes: int, max_peak: int, extra_edge_prob: float = 0.35
) -> Instance:
    n = rng.randint(2, max_nodes)
    edges: set[Pair] = set()
    for v in range(1, n):
        edges.add(tuple(sorted((rng.randrange(v), v))))
    for pair in combinations(range(n), 2):
        if pair not in edges and rng.random() < extra_edge_prob:
            edges.add(pair)
    peaks = [rng.randint(1, max_peak) for _ in range(n)]
    return Instance.build(
        "random",
        [(f"v{i}", peaks[i]) for i in range(n)],
        [(f"v{u}", f"v{v}") for u, v in sorted(edges)],
    )


def random_bipartite_instance(rng: random.Random, max_side: int, max_peak: int):
    """A connected bipartite instance plus its (suppliers, demanders) bipartition."""
    while True:
        left = rng.randint(1, max_side)
        right = rng.randint(1, max_side)
        suppliers = [f"s{i}" for i in range(left)]
        demanders = [f"d{j}" for j in range(right)]
        edges = {
            (s, d)
            for s in suppliers
            for d in demanders
            if rng.random() < 0.6
        }
        nodes = [(v, rng.randint(1, max_peak)) for v in suppliers + demanders]
        inst = Instance.build("bipartite", nodes, sorted(edges))
        index = {v: i for i, (v, _) in enumerate(nodes)}
        as_pairs = frozenset(
            tuple(sorted((index[u], index[v]))) for u, v in inst.edges
        )
        if is_connected(len(nodes), as_pairs):
            return inst, suppliers, demanders


def instance_automorphisms(inst: Instance) -> list[dict[str, str]]:
    """All node permutations preserving adjacency and peaks (brute force)."""
    nodes = inst.nodes
    edges = set(inst.edges)
    autos = []
    for perm in permutations(nodes):
        mapping = dict(zip(nodes, perm))
        if any(inst.peaks[a] != inst.peaks[b] for a, b in mapping.items()):
            continue
        if all(tuple(sorted((mapping[u], mapping[v]))) in edges for u, v in edges):
            autos.append(mapping)
    return autos


def relabeled(inst: Instance, mapping: dict[str, str]) -> Instance:
    return Instance.build(
        inst.name + "-relabeled",
        [(mapping[node], peak) for node, peak in inst.peaks.items()],
        [
            (mapping[u], mapping[v])
            + ((inst.capacities[(u, v)],) if (u, v) in inst.capacities else ())
            for u, v in inst.edges
        ],
    )


def brute_force_max_matching_size(n: int, edges: list[Pair]) -> int:
    """Exhaustive maximum matching size on an indexed graph."""
    best = 0
    order = sorted(edges)

    def extend(position: int, used: int, size: int) -> None:
        nonlocal best
        best = max(best, size)
        for k in range(position, len(order)):
            u, v = order[k]
            if not (used >> u & 1) and not (used >> v & 1):
                extend(k + 1, used | 1 << u | 1 << v, size + 1)

    extend(0, 0, 0)
    return best


def deficiency_upper_bound(total_vertices: int, odd_components: int, witness_size: int) -> int:
    """Berge-Tutte: max matching size <= (|V| - (odd(G - U) - |U|)) / 2."""
    return (total_vertices - (odd_components - witness_size)) // 2


def expected_value(marginals: dict[int, Fraction]) -> Fraction:
    return sum((p * units for units, p in marginals.items()), Fraction(0))

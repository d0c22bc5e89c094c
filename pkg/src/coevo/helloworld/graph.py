"""Queries over models of the Graph1 metamodel (Graph, Node, Edge)."""

from __future__ import annotations

from ..model import ABSENT, Ref, Repository, id_key, reachable


def successors(repo: Repository, node: str | Ref) -> list[str]:
    """Targets of fully connected edges leaving ``node``, sorted by id."""
    out = set()
    for e in repo.get_inverse(node, "Edge.src"):
        t = repo.get_slot(e, "trg")
        if isinstance(t, Ref) and t in repo:
            out.add(t.id)
    return sorted(out, key=id_key)


def get_reachable(repo: Repository, node: str | Ref, min_len: int = 1) -> set[str]:
    """Nodes reachable from ``node`` by a directed path of length >= ``min_len``."""
    return reachable(repo, node, "Edge", "src", "trg", min_len)


def count_nodes(repo: Repository) -> int:
    return len(repo.all_instances("Node"))


def count_looping_edges(repo: Repository) -> int:
    n = 0
    for e in repo.all_instances("Edge"):
        src, trg = repo.get_slot(e, "src"), repo.get_slot(e, "trg")
        if src is not ABSENT and src == trg:
            n += 1
    return n


def count_isolated_nodes(repo: Repository) -> int:
    return sum(
        1
        for n in repo.all_instances("Node")
        if not repo.get_inverse(n, "Edge.src") and not repo.get_inverse(n, "Edge.trg")
    )


def count_dangling_edges(repo: Repository) -> int:
    return sum(
        1
        for e in repo.all_instances("Edge")
        if repo.get_slot(e, "src") is ABSENT or repo.get_slot(e, "trg") is ABSENT
    )


def count_circles(repo: Repository) -> int:
    """Directed cycles through three distinct nodes, each counted once.

    Rotations of a cycle are the same circle; the two orientations are not.
    """
    succ = {n.id: set(successors(repo, n)) for n in repo.all_instances("Node")}
    found = 0
    for a, out_a in succ.items():
        for b in out_a - {a}:
            for c in succ.get(b, set()) - {a, b}:
                if a in succ.get(c, set()):
                    found += 1
    return found // 3


def transitive_pairs(repo: Repository) -> list[tuple[str, str]]:
    """Node pairs ``(a, c)`` needing a new edge to close the edge relation."""
    pairs = []
    for a in repo.all_instances("Node"):
        direct = set(successors(repo, a))
        for c in get_reachable(repo, a, min_len=2):
            if c not in direct:
                pairs.append((a.id, c))
    return sorted(pairs, key=lambda p: (id_key(p[0]), id_key(p[1])))

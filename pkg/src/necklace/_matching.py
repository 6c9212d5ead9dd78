from typing import Dict, List, Optional, Sequence, Tuple


def perfect_matching(adj: Sequence[Sequence[int]], n_right: int) -> Tuple[Optional[List[int]], Optional[frozenset]]:
    """Kuhn's augmenting paths, left vertices and neighbours visited in index order.

    Returns ``(match, None)`` with ``match[left] = right`` when every left vertex
    is matched, else ``(None, S)`` where S is a set of left vertices with
    fewer than |S| neighbours (a Hall violator).
    """
    owner: Dict[int, int] = {}

    def augment(u: int, seen: set) -> bool:
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in owner or augment(owner[v], seen):
                owner[v] = u
                return True
        return False

    for u in range(len(adj)):
        seen: set = set()
        if not augment(u, seen):
            # left vertices reachable by alternating paths from u
            hall = {u} | {owner[v] for v in seen}
            return None, frozenset(hall)
    match = [0] * len(adj)
    for v, u in owner.items():
        match[u] = v
    return match, None

"""Dinic max-flow on a compact arc-array network.

Arcs are stored in pairs: arc ``2i`` is the forward arc, ``2i + 1`` its
residual twin. Adjacency is a CSR layout over arc ids. The kernels are
compiled with numba when it is importable and run as plain Python otherwise.
"""
import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _bfs(n_nodes, head, adj, arc_to, residual, source, sink, level, queue):
    for i in range(n_nodes):
        level[i] = -1
    level[source] = 0
    qh = 0
    qt = 0
    queue[qt] = source
    qt += 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for idx in range(head[u], head[u + 1]):
            a = adj[idx]
            w = arc_to[a]
            if level[w] < 0 and residual[a] > 0.0:
                level[w] = level[u] + 1
                queue[qt] = w
                qt += 1
    return level[sink] >= 0


@njit(cache=True)
def _blocking_flow(head, adj, arc_to, residual, source, sink, level, it, stack_node, stack_arc):
    total = 0.0
    while True:
        # iterative DFS along admissible arcs; stack_arc[d] is the arc taken from depth d
        depth = 0
        stack_node[0] = source
        found = False
        while depth >= 0:
            u = stack_node[depth]
            if u == sink:
                found = True
                break
            advanced = False
            while it[u] < head[u + 1]:
                a = adj[it[u]]
                w = arc_to[a]
                if residual[a] > 0.0 and level[w] == level[u] + 1:
                    stack_arc[depth] = a
                    depth += 1
                    stack_node[depth] = w
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                level[u] = -1  # dead end
                depth -= 1
                if depth >= 0:
                    it[stack_node[depth]] += 1
        if not found:
            return total
        push = residual[stack_arc[0]]
        for d in range(1, depth):
            if residual[stack_arc[d]] < push:
                push = residual[stack_arc[d]]
        for d in range(depth):
            a = stack_arc[d]
            residual[a] -= push
            residual[a ^ 1] += push
        total += push


@njit(cache=True)
def _dinic(n_nodes, head, adj, arc_to, residual, source, sink):
    level = np.empty(n_nodes, dtype=np.int64)
    queue = np.empty(n_nodes, dtype=np.int64)
    it = np.empty(n_nodes, dtype=np.int64)
    stack_node = np.empty(n_nodes + 1, dtype=np.int64)
    stack_arc = np.empty(n_nodes + 1, dtype=np.int64)
    flow = 0.0
    while _bfs(n_nodes, head, adj, arc_to, residual, source, sink, level, queue):
        for i in range(n_nodes):
            it[i] = head[i]
        flow += _blocking_flow(head, adj, arc_to, residual, source, sink, level, it,
                               stack_node, stack_arc)
    return flow


@njit(cache=True)
def _reachable(n_nodes, head, adj, arc_to, residual, source):
    seen = np.zeros(n_nodes, dtype=np.bool_)
    queue = np.empty(n_nodes, dtype=np.int64)
    seen[source] = True
    queue[0] = source
    qh = 0
    qt = 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for idx in range(head[u], head[u + 1]):
            a = adj[idx]
            w = arc_to[a]
            if not seen[w] and residual[a] > 0.0:
                seen[w] = True
                queue[qt] = w
                qt += 1
    return seen


def build_csr(n_nodes, tails, heads, caps):
    """Paired residual arc arrays and CSR adjacency for the given forward arcs."""
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    caps = np.asarray(caps, dtype=np.float64)
    n_arcs = len(tails)
    arc_from = np.empty(2 * n_arcs, dtype=np.int64)
    arc_to = np.empty(2 * n_arcs, dtype=np.int64)
    residual = np.zeros(2 * n_arcs, dtype=np.float64)
    arc_from[0::2] = tails
    arc_from[1::2] = heads
    arc_to[0::2] = heads
    arc_to[1::2] = tails
    residual[0::2] = caps
    adj = np.argsort(arc_from, kind="stable").astype(np.int64)
    counts = np.bincount(arc_from, minlength=n_nodes)
    head = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return head, adj, arc_to, residual


def max_flow(n_nodes, tails, heads, caps, source, sink):
    """Maximum ``source``-``sink`` flow.

    Returns ``(flow_value, source_side)`` where ``source_side`` marks nodes
    reachable from the source in the final residual network.
    """
    head, adj, arc_to, residual = build_csr(n_nodes, tails, heads, caps)
    flow = _dinic(n_nodes, head, adj, arc_to, residual, int(source), int(sink))
    side = _reachable(n_nodes, head, adj, arc_to, residual, int(source))
    return float(flow), side

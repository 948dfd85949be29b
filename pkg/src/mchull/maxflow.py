"""Integer max-flow on stencil graphs (Boykov-Kolmogorov search trees).

Nodes are the free cells of a step instance. Arc ``a = v * A + k`` leaves
node ``v`` in direction ``k``; ``head[a]`` is the neighbor node or -1.
Directions come in antipodal pairs, ``opp[k]`` being the reverse of ``k``,
so the sister of arc ``a`` is ``head[a] * A + opp[k]``.

``tr[v] > 0`` is residual capacity from the source into ``v``;
``tr[v] < 0`` is residual capacity from ``v`` to the sink. All arithmetic
is int64 and exact.
"""
from __future__ import annotations

import numba
import numpy as np

NONE = -1
TERMINAL = -2
ORPHAN = -3
_FAR = np.int64(1) << 40


@numba.njit(cache=True)
def fix_persistent(net, nbr, cost, state):
    """Fix nodes whose terminal imbalance beats all their free links.

    ``state``: 0 free, 1 fixed in (source side), 2 fixed out. ``net`` is the
    source-minus-sink terminal capacity and ``cost[k]`` the link capacity in
    direction ``k``. A free node with ``net > sum of links to free nodes``
    lies on the source side of every minimum cut, since moving it there
    strictly lowers any cut that excludes it; symmetrically for
    ``-net > links``. A fixed node's links become terminal capacity of its
    neighbors, so the rule is repeated until nothing changes.
    """
    n, A = nbr.shape
    link = np.zeros(n, np.int64)
    for v in range(n):
        if state[v] != 0:
            continue
        s = numba.int64(0)
        for k in range(A):
            j = nbr[v, k]
            if j >= 0 and state[j] == 0:
                s += cost[k]
        link[v] = s
    stack = np.empty(n, np.int64)
    onstack = np.zeros(n, np.bool_)
    top = 0
    for v in range(n - 1, -1, -1):
        if state[v] == 0:
            stack[top] = v
            onstack[v] = True
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        onstack[v] = False
        if state[v] != 0:
            continue
        if net[v] > link[v]:
            side = 1
        elif -net[v] > link[v]:
            side = 2
        else:
            continue
        state[v] = side
        for k in range(A):
            j = nbr[v, k]
            if j < 0 or state[j] != 0:
                continue
            if side == 1:
                net[j] += cost[k]
            else:
                net[j] -= cost[k]
            link[j] -= cost[k]
            if not onstack[j]:
                onstack[j] = True
                stack[top] = j
                top += 1


@numba.njit(cache=True)
def _enqueue(queue, inq, qt, qcap, v):
    if not inq[v]:
        inq[v] = True
        queue[qt] = v
        qt += 1
        if qt == qcap:
            qt = 0
    return qt


@numba.njit(cache=True)
def bk_maxflow(head, rcap, tr, opp):
    """Run max-flow in place on ``rcap``/``tr``; return (flow, augmentations)."""
    n = tr.shape[0]
    A = opp.shape[0]
    parent = np.full(n, NONE, np.int64)
    is_sink = np.zeros(n, np.bool_)
    dist = np.zeros(n, np.int64)
    ts = np.zeros(n, np.int64)
    qcap = n + 1
    queue = np.empty(qcap, np.int64)
    inq = np.zeros(n, np.bool_)
    qh = 0
    qt = 0
    orph = np.empty(qcap, np.int64)
    oh = 0
    ot = 0
    for v in range(n):
        if tr[v] != 0:
            parent[v] = TERMINAL
            is_sink[v] = tr[v] < 0
            dist[v] = 1
            qt = _enqueue(queue, inq, qt, qcap, v)
    flow = numba.int64(0)
    naug = numba.int64(0)
    clock = numba.int64(0)

    while qh != qt:
        i = queue[qh]
        qh += 1
        if qh == qcap:
            qh = 0
        inq[i] = False
        while parent[i] != NONE:
            # ---- growth: find an arc joining the two trees
            mid = NONE
            base = i * A
            if not is_sink[i]:
                for k in range(A):
                    a = base + k
                    if rcap[a] > 0:
                        j = head[a]
                        if parent[j] == NONE:
                            is_sink[j] = False
                            parent[j] = j * A + opp[k]
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
                            qt = _enqueue(queue, inq, qt, qcap, j)
                        elif is_sink[j]:
                            mid = a
                            break
                        elif ts[j] <= ts[i] and dist[j] > dist[i]:
                            parent[j] = j * A + opp[k]
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
            else:
                for k in range(A):
                    j = head[base + k]
                    if j < 0:
                        continue
                    ra = j * A + opp[k]
                    if rcap[ra] > 0:
                        if parent[j] == NONE:
                            is_sink[j] = True
                            parent[j] = ra
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
                            qt = _enqueue(queue, inq, qt, qcap, j)
                        elif not is_sink[j]:
                            mid = ra
                            break
                        elif ts[j] <= ts[i] and dist[j] > dist[i]:
                            parent[j] = ra
                            ts[j] = ts[i]
                            dist[j] = dist[i] + 1
            clock += 1
            if mid == NONE:
                break

            # ---- augmentation along source-tree path + mid + sink-tree path
            p = mid // A
            q = head[mid]
            b = rcap[mid]
            v = p
            while parent[v] != TERMINAL:
                a = parent[v]
                w = head[a]
                ra = w * A + opp[a % A]
                if rcap[ra] < b:
                    b = rcap[ra]
                v = w
            if tr[v] < b:
                b = tr[v]
            v = q
            while parent[v] != TERMINAL:
                a = parent[v]
                if rcap[a] < b:
                    b = rcap[a]
                v = head[a]
            if -tr[v] < b:
                b = -tr[v]

            rcap[mid] -= b
            rcap[q * A + opp[mid % A]] += b
            v = p
            while parent[v] != TERMINAL:
                a = parent[v]
                w = head[a]
                ra = w * A + opp[a % A]
                rcap[a] += b
                rcap[ra] -= b
                if rcap[ra] == 0:
                    parent[v] = ORPHAN
                    orph[ot] = v
                    ot += 1
                    if ot == qcap:
                        ot = 0
                v = w
            tr[v] -= b
            if tr[v] == 0:
                parent[v] = ORPHAN
                orph[ot] = v
                ot += 1
                if ot == qcap:
                    ot = 0
            v = q
            while parent[v] != TERMINAL:
                a = parent[v]
                w = head[a]
                rcap[a] -= b
                rcap[w * A + opp[a % A]] += b
                if rcap[a] == 0:
                    parent[v] = ORPHAN
                    orph[ot] = v
                    ot += 1
                    if ot == qcap:
                        ot = 0
                v = w
            tr[v] += b
            if tr[v] == 0:
                parent[v] = ORPHAN
                orph[ot] = v
                ot += 1
                if ot == qcap:
                    ot = 0
            flow += b
            naug += 1

            # ---- adoption
            while oh != ot:
                o = orph[oh]
                oh += 1
                if oh == qcap:
                    oh = 0
                sink_side = is_sink[o]
                best = NONE
                dmin = _FAR
                ob = o * A
                for k in range(A):
                    j = head[ob + k]
                    if j < 0 or is_sink[j] != sink_side or parent[j] == NONE:
                        continue
                    if sink_side:
                        ok = rcap[ob + k] > 0
                    else:
                        ok = rcap[j * A + opp[k]] > 0
                    if not ok:
                        continue
                    # does j still hang from a terminal?
                    d = numba.int64(0)
                    x = j
                    while True:
                        if ts[x] == clock:
                            d += dist[x]
                            break
                        pa = parent[x]
                        d += 1
                        if pa == TERMINAL:
                            ts[x] = clock
                            dist[x] = 1
                            break
                        if pa == ORPHAN:
                            d = _FAR
                            break
                        x = head[pa]
                    if d < _FAR:
                        if d < dmin:
                            best = ob + k
                            dmin = d
                        x = j
                        while ts[x] != clock:
                            ts[x] = clock
                            dist[x] = d
                            d -= 1
                            x = head[parent[x]]
                if best != NONE:
                    parent[o] = best
                    ts[o] = clock
                    dist[o] = dmin + 1
                else:
                    parent[o] = NONE
                    for k in range(A):
                        j = head[ob + k]
                        if j < 0 or is_sink[j] != sink_side or parent[j] == NONE:
                            continue
                        if sink_side:
                            if rcap[ob + k] > 0:
                                qt = _enqueue(queue, inq, qt, qcap, j)
                        else:
                            if rcap[j * A + opp[k]] > 0:
                                qt = _enqueue(queue, inq, qt, qcap, j)
                        pj = parent[j]
                        if pj >= 0 and head[pj] == o:
                            parent[j] = ORPHAN
                            orph[ot] = j
                            ot += 1
                            if ot == qcap:
                                ot = 0
    return flow, naug


@numba.njit(cache=True)
def source_reachable(head, rcap, tr, A):
    """Nodes reachable from the source in the residual graph."""
    n = tr.shape[0]
    seen = np.zeros(n, np.bool_)
    stack = np.empty(n, np.int64)
    top = 0
    for v in range(n):
        if tr[v] > 0:
            seen[v] = True
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for k in range(A):
            a = v * A + k
            if rcap[a] > 0:
                j = head[a]
                if not seen[j]:
                    seen[j] = True
                    stack[top] = j
                    top += 1
    return seen


@numba.njit(cache=True)
def sink_reaching(head, rcap, tr, opp):
    """Nodes that reach the sink in the residual graph."""
    n = tr.shape[0]
    A = opp.shape[0]
    seen = np.zeros(n, np.bool_)
    stack = np.empty(n, np.int64)
    top = 0
    for v in range(n):
        if tr[v] < 0:
            seen[v] = True
            stack[top] = v
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for k in range(A):
            j = head[v * A + k]
            if j < 0 or seen[j]:
                continue
            if rcap[j * A + opp[k]] > 0:
                seen[j] = True
                stack[top] = j
                top += 1
    return seen

"""Numba inner loops shared by the walk engine, samplers, and estimators.

Every kernel works on raw CSR arrays (``indptr``/``indices``) plus flat
per-vertex state, releases the GIL, and is deterministic given its inputs and
the state of the ``numpy.random.Generator`` passed in.  Rotor state is an
``int32`` array of neighbor-list positions; ``-1`` marks sink vertices, which
carry no rotor.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_TERMINATED = 0
STATUS_STEP_CAP = 1


@njit(cache=True, nogil=True)
def walk_to_sink(indptr, indices, sink, rotor, start, step_cap, u, edge_util, fv, lv):
    """One rotor walk until absorption; mutates ``rotor`` into the final state.

    Fills the odometer ``u`` (visits strictly before absorption), per-slot
    directed edge utilization, and first/last visit times (the absorbing
    vertex gets its visit time recorded but no odometer count).
    Returns (steps, status).
    """
    x = start
    t = np.int64(0)
    while not sink[x]:
        if t >= step_cap:
            return t, STATUS_STEP_CAP
        u[x] += 1
        if fv[x] < 0:
            fv[x] = t
        lv[x] = t
        j = rotor[x] + 1
        if j >= indptr[x + 1] - indptr[x]:
            j = 0
        rotor[x] = j
        e = indptr[x] + j
        edge_util[e] += 1
        x = indices[e]
        t += 1
    if fv[x] < 0:
        fv[x] = t
    lv[x] = t
    return t, STATUS_TERMINATED


@njit(cache=True, nogil=True)
def walk_many(indptr, indices, sink, rotor, start, n_walks, step_cap,
              checkpoints, watch, totals, edge_totals, snapshots):
    """``n_walks`` sequential walks without resetting rotors.

    ``totals`` accumulates per-vertex visit counts, ``edge_totals`` per-slot
    directed edge traversals.  After walk number ``checkpoints[c]`` the totals
    at the ``watch`` vertices are copied into ``snapshots[c]``.
    Returns (steps, status, walks_completed).
    """
    steps = np.int64(0)
    ci = 0
    for k in range(n_walks):
        x = start
        t = np.int64(0)
        while not sink[x]:
            if t >= step_cap:
                return steps + t, STATUS_STEP_CAP, k
            totals[x] += 1
            j = rotor[x] + 1
            if j >= indptr[x + 1] - indptr[x]:
                j = 0
            rotor[x] = j
            e = indptr[x] + j
            edge_totals[e] += 1
            x = indices[e]
            t += 1
        steps += t
        if ci < checkpoints.size and k + 1 == checkpoints[ci]:
            for w in range(watch.size):
                snapshots[ci, w] = totals[watch[w]]
            ci += 1
    return steps, STATUS_TERMINATED, n_walks


@njit(cache=True, nogil=True)
def walk_two_scale(indptr, indices, sink, rotor, start, step_cap, dist,
                   stop_radius, s_radius, watch, u, u_at_stop):
    """One walk with two-scale instrumentation; mutates ``rotor``.

    Runs to the graph's own sink, but snapshots the odometer at the ``watch``
    vertices the first time the walker reaches distance ``stop_radius`` from
    the start (the stopped-walk odometer: the trajectory up to that moment is
    exactly the walk run with the distance-``stop_radius`` sphere as sink).

    Returns ``(steps, status, reach, reentered)`` where ``reach`` is the
    largest distance seen strictly before the last visit to the ``s_radius``
    ball, and ``reentered`` flags a return to distance < stop_radius after
    first touching it.
    """
    x = start
    t = np.int64(0)
    prefix_max = np.int64(0)
    reach = np.int64(0)
    hit_stop = False
    reentered = False
    snapped = False
    while not sink[x]:
        if t >= step_cap:
            return t, STATUS_STEP_CAP, reach, reentered
        dx = dist[x]
        if dx > prefix_max:
            prefix_max = dx
        if dx <= s_radius:
            reach = prefix_max
        if not snapped and dx >= stop_radius:
            for w in range(watch.size):
                u_at_stop[w] = u[watch[w]]
            snapped = True
            hit_stop = True
        elif hit_stop and dx < stop_radius:
            reentered = True
        u[x] += 1
        j = rotor[x] + 1
        if j >= indptr[x + 1] - indptr[x]:
            j = 0
        rotor[x] = j
        x = indices[indptr[x] + j]
        t += 1
    dx = dist[x]
    if dx > prefix_max:
        prefix_max = dx
    if dx <= s_radius:
        reach = prefix_max
    if not snapped:
        for w in range(watch.size):
            u_at_stop[w] = u[watch[w]]
    return t, STATUS_TERMINATED, reach, reentered


@njit(cache=True, nogil=True)
def wilson(indptr, indices, sink, rng, step_budget):
    """Uniform sink-oriented spanning forest by loop-erased random walks.

    Vertices are processed in ascending id order; each runs a simple random
    walk until it hits the growing forest, with loops erased by overwriting
    the walk's successor choice on revisit.  Returns (rotor, steps, status).
    """
    n = indptr.size - 1
    rotor = np.full(n, -1, np.int32)
    in_forest = sink.copy()
    choice = np.full(n, -1, np.int32)
    steps = np.int64(0)
    for v0 in range(n):
        if in_forest[v0]:
            continue
        x = v0
        while not in_forest[x]:
            if steps >= step_budget:
                return rotor, steps, STATUS_STEP_CAP
            d = indptr[x + 1] - indptr[x]
            j = np.int32(rng.integers(0, d))
            choice[x] = j
            x = indices[indptr[x] + j]
            steps += 1
        x = v0
        while not in_forest[x]:
            in_forest[x] = True
            rotor[x] = choice[x]
            x = indices[indptr[x] + choice[x]]
    return rotor, steps, STATUS_TERMINATED


@njit(cache=True, nogil=True)
def random_walk_visits(indptr, indices, sink, start, n_walks, rng, step_cap,
                       visit_sum, visit_sumsq):
    """Accumulate per-vertex visit counts of independent absorbed random walks.

    Fills first and second moments so callers can form means and standard
    errors.  Returns the number of walks that exceeded the step cap.
    """
    n = indptr.size - 1
    count = np.zeros(n, np.int64)
    touched = np.empty(n, np.int64)
    capped = 0
    for k in range(n_walks):
        ntouched = 0
        x = start
        t = np.int64(0)
        while not sink[x]:
            if t >= step_cap:
                capped += 1
                break
            if count[x] == 0:
                touched[ntouched] = x
                ntouched += 1
            count[x] += 1
            d = indptr[x + 1] - indptr[x]
            j = rng.integers(0, d)
            x = indices[indptr[x] + j]
            t += 1
        for i in range(ntouched):
            v = touched[i]
            c = count[v]
            visit_sum[v] += c
            visit_sumsq[v] += c * c
            count[v] = 0
    return capped


@njit(cache=True, nogil=True)
def forest_reaches_sink(indptr, indices, sink, rotor):
    """True iff every forward rotor path reaches the sink without a cycle."""
    n = indptr.size - 1
    state = np.zeros(n, np.uint8)  # 0 unknown, 1 on current path, 2 settled
    path = np.empty(n, np.int64)
    for v0 in range(n):
        if sink[v0] or state[v0] == 2:
            continue
        x = v0
        top = 0
        while True:
            if sink[x] or state[x] == 2:
                for i in range(top):
                    state[path[i]] = 2
                break
            if state[x] == 1:
                return False
            if rotor[x] < 0 or rotor[x] >= indptr[x + 1] - indptr[x]:
                return False
            state[x] = 1
            path[top] = x
            top += 1
            x = indices[indptr[x] + rotor[x]]
    return True

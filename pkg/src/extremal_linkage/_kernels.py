"""Compiled inner loops.

Everything in here works on raw integers and floats so numba can compile it
in nopython mode. The public modules wrap these with validation and nicer
types. All uint64 arithmetic wraps modulo 2**64.

A field key is a 52-bit integer; the fitness is a strictly increasing
function of it, so window maxima are taken over keys.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX_A = np.uint64(0xBF58476D1CE4E5B9)
MIX_B = np.uint64(0x94D049BB133111EB)
LAYER_MULT = np.uint64(0xD6E8FEB86659FD93)
NODE_MULT = np.uint64(0xCA5A826395121157)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
KEY_SHIFT = np.uint64(12)
ONE = np.uint64(1)

KEY_BITS = 52
KEY_SCALE = 2.0 ** -KEY_BITS
KEY_SPAN = 2.0 ** KEY_BITS

CENSORED = -1
NOT_FOUND = -1


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> S30)) * MIX_A
    z = (z ^ (z >> S27)) * MIX_B
    return z ^ (z >> S31)


@njit(cache=True, inline="always")
def zigzag(v):
    # int64 -> uint64 bijection keeping small negatives small
    return np.uint64((v << 1) ^ (v >> 63))


@njit(cache=True, inline="always")
def layer_base(seed, h):
    x = mix64(seed + GOLDEN)
    return mix64(x ^ (zigzag(h) * LAYER_MULT + GOLDEN))


@njit(cache=True, inline="always")
def node_key(base, i):
    return np.int64(mix64(base ^ (zigzag(i) * NODE_MULT + GOLDEN)) >> KEY_SHIFT)


@njit(cache=True, inline="always")
def torus_rep(j, n):
    # centred representative, so the torus field agrees with the limit field
    # on [-(n // 2), n - n // 2)
    if j < n - n // 2:
        return j
    return j - n


@njit(cache=True, inline="always")
def key_uniform(k):
    return (k + 0.5) * KEY_SCALE


@njit(cache=True, inline="always")
def key_neglog(k):
    """-log(u) for the uniform deviate of key k, accurate near u = 1."""
    u = (k + 0.5) * KEY_SCALE
    if u < 0.5:
        return -math.log(u)
    v = (KEY_SPAN - k - 0.5) * KEY_SCALE
    return -math.log1p(-v)


@njit(cache=True, inline="always")
def key_fitness(k, delta):
    return key_neglog(k) ** (-1.0 / delta)


@njit(cache=True, inline="always")
def key_log_fitness(k, delta):
    # natural log of the fitness, finite even where the fitness overflows
    return -math.log(key_neglog(k)) / delta


@njit(cache=True)
def keys_grid(seed, idx, layers, n):
    """Keys at coordinates (idx[t], layers[t]); torus reduction when n > 0."""
    out = np.empty(idx.shape[0], dtype=np.int64)
    for t in range(idx.shape[0]):
        i = idx[t]
        if n > 0:
            i = torus_rep(i % n, n)
        out[t] = node_key(layer_base(seed, layers[t]), i)
    return out


@njit(cache=True)
def layer_keys(seed, n, h):
    base = layer_base(seed, h)
    out = np.empty(n, dtype=np.int64)
    for j in range(n):
        out[j] = node_key(base, torus_rep(j, n))
    return out


@njit(cache=True)
def fitness_from_keys(keys, delta):
    out = np.empty(keys.shape[0])
    for t in range(keys.shape[0]):
        out[t] = key_fitness(keys[t], delta)
    return out


@njit(cache=True, inline="always")
def covers_torus(f, n):
    # scope 1 + 2 ceil(f) reaches every node
    return 1.0 + 2.0 * math.ceil(f) >= n


# --- window scans -----------------------------------------------------------

@njit(cache=True)
def scan_torus(seed, n, c, r, h):
    """Argmax over torus nodes within distance r of c on layer h.

    Visits nodes by increasing distance, smaller index first, and replaces
    the incumbent only on a strictly larger key; that realises the tie rule.
    """
    base = layer_base(seed, h)
    if 2 * r + 1 >= n:
        r = n // 2
    best = node_key(base, torus_rep(c, n))
    arg = c
    for d in range(1, r + 1):
        j1 = (c - d) % n
        j2 = (c + d) % n
        lo = min(j1, j2)
        hi = max(j1, j2)
        k = node_key(base, torus_rep(lo, n))
        if k > best:
            best = k
            arg = lo
        if hi != lo:
            k = node_key(base, torus_rep(hi, n))
            if k > best:
                best = k
                arg = hi
    return arg


@njit(cache=True)
def scan_line(seed, c, r, h):
    """Argmax over integers within distance r of c on layer h (limit model)."""
    base = layer_base(seed, h)
    best = node_key(base, c)
    arg = c
    for d in range(1, r + 1):
        k = node_key(base, c - d)
        if k > best:
            best = k
            arg = c - d
        k = node_key(base, c + d)
        if k > best:
            best = k
            arg = c + d
    return arg


@njit(cache=True)
def unique_global_argmax(seed, n, h):
    """Global argmax of layer h, or NOT_FOUND when the maximum is tied."""
    base = layer_base(seed, h)
    best = np.int64(-1)
    arg = NOT_FOUND
    count = 0
    for j in range(n):
        k = node_key(base, torus_rep(j, n))
        if k > best:
            best = k
            arg = j
            count = 1
        elif k == best:
            count += 1
    if count > 1:
        return NOT_FOUND
    return arg


@njit(cache=True)
def torus_radius(f, n):
    if covers_torus(f, n):
        return n // 2
    return np.int64(math.ceil(f))


@njit(cache=True)
def torus_step(seed, n, delta, pos, f, h):
    """One arrow from (pos, h) with fitness f; returns (target, its fitness)."""
    j = scan_torus(seed, n, pos, torus_radius(f, n), h + 1)
    k = node_key(layer_base(seed, h + 1), torus_rep(j, n))
    return j, key_fitness(k, delta)


# --- coalescence --------------------------------------------------------------

@njit(cache=True)
def coalesce(seed, n, delta, start_b, cap, trace):
    """Run both walkers until they meet; returns (h, meet) or (CENSORED, -1).

    trace, when it has rows, receives (pos_a, pos_b, f_a, f_b) per layer
    until it is full.
    """
    a = np.int64(0)
    b = np.int64(start_b)
    fa = key_fitness(node_key(layer_base(seed, 0), torus_rep(a, n)), delta)
    fb = key_fitness(node_key(layer_base(seed, 0), torus_rep(b, n)), delta)
    rows = trace.shape[0]
    if rows > 0:
        trace[0, 0] = a
        trace[0, 1] = b
        trace[0, 2] = fa
        trace[0, 3] = fb
    if a == b:
        return 0, a
    for h in range(cap):
        moved = False
        if covers_torus(fa, n) and covers_torus(fb, n):
            g = unique_global_argmax(seed, n, h + 1)
            if g != NOT_FOUND:
                a = g
                b = g
                fa = key_fitness(node_key(layer_base(seed, h + 1), torus_rep(g, n)), delta)
                fb = fa
                moved = True
        if not moved:
            a, fa = torus_step(seed, n, delta, a, fa, h)
            b, fb = torus_step(seed, n, delta, b, fb, h)
        if h + 1 < rows:
            trace[h + 1, 0] = a
            trace[h + 1, 1] = b
            trace[h + 1, 2] = fa
            trace[h + 1, 3] = fb
        if a == b:
            return h + 1, a
    return CENSORED, -1


@njit(cache=True)
def coalesce_many(seeds, starts, n, delta, cap, out_h, out_meet):
    empty = np.empty((0, 4))
    for t in range(seeds.shape[0]):
        h, m = coalesce(seeds[t], n, delta, starts[t], cap, empty)
        out_h[t] = h
        out_meet[t] = m


@njit(cache=True)
def torus_scope_path(seed, n, delta, start, layers):
    """Scopes (capped at n) along one walker path on the torus."""
    out = np.empty(layers + 1, dtype=np.int64)
    pos = np.int64(start)
    f = key_fitness(node_key(layer_base(seed, 0), torus_rep(pos, n)), delta)
    for h in range(layers + 1):
        if covers_torus(f, n):
            out[h] = n
        else:
            out[h] = 1 + 2 * np.int64(math.ceil(f))
        if h < layers:
            pos, f = torus_step(seed, n, delta, pos, f, h)
    return out


@njit(cache=True)
def step_offsets(seed, f, count, first_layer):
    """Signed displacement of a limit-model step from fitness f on fresh layers."""
    r = np.int64(math.ceil(f))
    out = np.empty(count, dtype=np.int64)
    for t in range(count):
        out[t] = scan_line(seed, 0, r, first_layer + t)
    return out


@njit(cache=True)
def one_step_fitness(seeds, f, delta, n):
    """Fitness reached in one step from (0, 0) given fitness f; n <= 0 means limit."""
    out = np.empty(seeds.shape[0])
    for t in range(seeds.shape[0]):
        s = seeds[t]
        if n > 0:
            j = scan_torus(s, n, 0, torus_radius(f, n), 1)
            k = node_key(layer_base(s, 1), torus_rep(j, n))
        else:
            j = scan_line(s, 0, np.int64(math.ceil(f)), 1)
            k = node_key(layer_base(s, 1), j)
        out[t] = key_fitness(k, delta)
    return out


# --- excursions and indegrees ------------------------------------------------

@njit(cache=True)
def excursion(seed, max_steps):
    """(L, R) on layer 0 of the limit model; (0, 0) if max_steps is exceeded."""
    base = layer_base(seed, 0)
    k0 = node_key(base, 0)
    left = np.int64(0)
    for d in range(1, max_steps + 1):
        if node_key(base, -d) > k0:
            left = -d
            break
    right = np.int64(0)
    for d in range(1, max_steps + 1):
        if node_key(base, d) > k0:
            right = d
            break
    return left, right


@njit(cache=True)
def count_exact(seed, delta, left, right):
    base = layer_base(seed, -1)
    count = 0
    for i in range(left + 1, right):
        r = math.ceil(key_fitness(node_key(base, i), delta))
        if r >= abs(i) and r <= min(i - left, right - i) - 1:
            count += 1
    return count


@njit(cache=True)
def count_paper(seed, delta, left, right):
    base = layer_base(seed, -1)
    count = 1
    for i in range(left, 0):
        f = key_fitness(node_key(base, i), delta)
        if -i - 1 < f and f <= -left + i - 1:
            count += 1
    for i in range(1, right + 1):
        f = key_fitness(node_key(base, i), delta)
        if i - 1 < f and f <= right - i - 1:
            count += 1
    return count


@njit(cache=True)
def limit_degrees(seeds, delta, max_steps, exact, out):
    """Fill out with limit indegrees; returns index of a failed seed or -1."""
    for t in range(seeds.shape[0]):
        left, right = excursion(seeds[t], max_steps)
        if right == 0 or left == 0:
            return t
        if exact:
            out[t] = count_exact(seeds[t], delta, left, right)
        else:
            out[t] = count_paper(seeds[t], delta, left, right)
    return -1


@njit(cache=True)
def torus_degree(seed, n, delta):
    """Indegree of (0, 0) from layer -1 on the N-torus.

    Only sources strictly between the nearest higher nodes around 0 can have
    0 as window maximum, so the count needs no full arrow map.
    """
    base0 = layer_base(seed, 0)
    base1 = layer_base(seed, -1)
    k0 = node_key(base0, 0)
    a = np.int64(0)
    for d in range(1, n):
        if node_key(base0, torus_rep((-d) % n, n)) > k0:
            a = d
            break
    if a == 0:
        # node 0 is the global maximum: every source that sees it points to it
        count = 0
        for i in range(n):
            f = key_fitness(node_key(base1, torus_rep(i, n)), delta)
            if covers_torus(f, n) or min(i, n - i) <= math.ceil(f):
                count += 1
        return count
    b = np.int64(0)
    for d in range(1, n):
        if node_key(base0, torus_rep(d, n)) > k0:
            b = d
            break
    count = 0
    for i in range(-a + 1, b):
        f = key_fitness(node_key(base1, torus_rep(i % n, n)), delta)
        if covers_torus(f, n):
            continue
        r = math.ceil(f)
        if r >= abs(i) and i - r > -a and i + r < b:
            count += 1
    return count


@njit(cache=True)
def torus_degrees(seeds, n, delta, out):
    for t in range(seeds.shape[0]):
        out[t] = torus_degree(seeds[t], n, delta)

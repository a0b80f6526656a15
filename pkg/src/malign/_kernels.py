"""numba kernels for the lattice recursions.

All values are int64 fixed-point scores.  Out-of-band cells carry ``NEG``.
Sequences are passed as a padded ``(m, max_len)`` int64 array plus lengths.
"""

import numpy as np
from numba import njit

NEG = -(1 << 62)


@njit(cache=True, nogil=True)
def pair_score(x, y, table, k):
    """m = 2 score-only recursion with one rolling row."""
    n1 = x.shape[0]
    n2 = y.shape[0]
    row = np.zeros(n2 + 1, np.int64)
    for i in range(1, n1 + 1):
        off = x[i - 1] * k
        diag = 0
        left = 0
        for j in range(1, n2 + 1):
            up = row[j]
            best = up if up > left else left
            v = diag + table[off + y[j - 1]]
            if v > best:
                best = v
            diag = up
            row[j] = best
            left = best
    return row[n2]


@njit(cache=True, nogil=True)
def _letter_weights(m, k):
    w = np.empty(m, np.int64)
    w[m - 1] = 1
    for j in range(m - 2, -1, -1):
        w[j] = w[j + 1] * k
    return w


@njit(cache=True, nogil=True)
def _rest_strides(lens):
    m = lens.shape[0]
    stride = np.ones(m, np.int64)
    for j in range(m - 2, 0, -1):
        stride[j] = stride[j + 1] * (lens[j + 1] + 1)
    total = 1
    for j in range(1, m):
        total *= lens[j] + 1
    return stride, total


@njit(cache=True, nogil=True)
def _sweep(seqs, lens, table, k, moves):
    """Shared body of the general-m recursion.

    The trailing m - 1 axes form a slab kept for the current and previous
    index on axis 0; the innermost loop runs contiguously along the last axis.
    When ``moves`` is non-empty it receives, per cell, a bitmask of optimal
    moves: bit ``j`` (j < m) for stepping back along axis ``j``, bit ``m`` for
    the diagonal step when it is optimal and its tuple scores > 0.
    """
    m = lens.shape[0]
    n1 = lens[0]
    nl = lens[m - 1]
    record = moves.shape[0] > 0
    stride, R = _rest_strides(lens)
    diag_off = 0
    for j in range(1, m):
        diag_off += stride[j]
    w = _letter_weights(m, k)
    prev = np.zeros(R, np.int64)
    cur = np.zeros(R, np.int64)
    # rows are indexed by the middle axes 1 .. m-2
    n_rows = R // (nl + 1)
    mid = np.zeros(m, np.int64)
    for i1 in range(1, n1 + 1):
        base0 = seqs[0, i1 - 1] * w[0]
        slab = i1 * R
        for j in range(1, m - 1):
            mid[j] = 0
        for row in range(n_rows):
            r0 = row * (nl + 1)
            interior = True
            for j in range(1, m - 1):
                if mid[j] == 0:
                    interior = False
                    break
            if not interior or m == 1:
                for r in range(r0, r0 + nl + 1):
                    cur[r] = 0
            else:
                tb = base0
                for j in range(1, m - 1):
                    tb += seqs[j, mid[j] - 1] * w[j]
                cur[r0] = 0
                for il in range(1, nl + 1):
                    r = r0 + il
                    best = prev[r]
                    for j in range(1, m - 1):
                        v = cur[r - stride[j]]
                        if v > best:
                            best = v
                    v = cur[r - 1]
                    if v > best:
                        best = v
                    s = table[tb + seqs[m - 1, il - 1]]
                    dv = prev[r - diag_off] + s
                    if dv > best:
                        best = dv
                    cur[r] = best
                    if record:
                        code = 0
                        if prev[r] == best:
                            code |= 1
                        for j in range(1, m):
                            if cur[r - stride[j]] == best:
                                code |= 1 << j
                        if s > 0 and dv == best:
                            code |= 1 << m
                        moves[slab + r] = code
            j = m - 2
            while j >= 1:
                mid[j] += 1
                if mid[j] <= lens[j]:
                    break
                mid[j] = 0
                j -= 1
        prev, cur = cur, prev
    return prev[R - 1]


@njit(cache=True, nogil=True)
def lattice_score(seqs, lens, table, k):
    """General-m score-only recursion."""
    return _sweep(seqs, lens, table, k, np.zeros(0, np.uint8))


@njit(cache=True, nogil=True)
def lattice_moves(seqs, lens, table, k):
    """General-m recursion that also returns the per-cell optimal-move bitmasks."""
    _, R = _rest_strides(lens)
    moves = np.zeros((lens[0] + 1) * R, np.uint8)
    score = _sweep(seqs, lens, table, k, moves)
    return score, moves


@njit(cache=True, nogil=True)
def backtrack(moves, lens):
    """Canonical walk back from the far corner; returns aligned tuples (1-based), first to last."""
    m = lens.shape[0]
    stride = np.ones(m, np.int64)
    for j in range(m - 2, -1, -1):
        stride[j] = stride[j + 1] * (lens[j + 1] + 1)
    pos = lens.copy()
    limit = lens.min()
    out = np.empty((limit, m), np.int64)
    count = 0
    while True:
        interior = True
        for j in range(m):
            if pos[j] == 0:
                interior = False
                break
        if not interior:
            break
        flat = 0
        for j in range(m):
            flat += pos[j] * stride[j]
        code = moves[flat]
        if code & (1 << m):
            for j in range(m):
                out[count, j] = pos[j]
                pos[j] -= 1
            count += 1
        else:
            for j in range(m):
                if code & (1 << j):
                    pos[j] -= 1
                    break
    res = np.empty((count, m), np.int64)
    for i in range(count):
        for j in range(m):
            res[i, j] = out[count - 1 - i, j]
    return res


@njit(cache=True, nogil=True)
def pair_banded(x, y, table, k, lo, hi, s_star):
    """m = 2 recursion restricted to rows ``lo[i] <= j <= hi[i]``.

    Returns the best in-band value at the far corner and an upper bound on any
    walk that leaves the band: best in-band prefix up to the last in-band cell,
    plus the score of the exiting step, plus ``s*`` per remaining possible tuple.
    """
    n1 = x.shape[0]
    n2 = y.shape[0]
    prev = np.full(n2 + 1, NEG, np.int64)
    cur = np.full(n2 + 1, NEG, np.int64)
    exit_ub = NEG
    cells = 0
    for i in range(n1 + 1):
        a = lo[i]
        b = hi[i]
        for j in range(a, b + 1):
            if i == 0 or j == 0:
                val = 0
            else:
                val = NEG
                if lo[i - 1] <= j and j <= hi[i - 1] and prev[j] > val:
                    val = prev[j]
                if j - 1 >= a and cur[j - 1] > val:
                    val = cur[j - 1]
                if lo[i - 1] <= j - 1 and j - 1 <= hi[i - 1] and prev[j - 1] > NEG:
                    v = prev[j - 1] + table[x[i - 1] * k + y[j - 1]]
                    if v > val:
                        val = v
            cur[j] = val
            cells += 1
        # exits from row i
        for j in range(a, b + 1):
            val = cur[j]
            if val == NEG:
                continue
            if j + 1 <= n2 and j + 1 > b:
                rem = min(n1 - i, n2 - j - 1)
                c = val + s_star * rem
                if c > exit_ub:
                    exit_ub = c
            if i + 1 <= n1:
                if j < lo[i + 1] or j > hi[i + 1]:
                    rem = min(n1 - i - 1, n2 - j)
                    c = val + s_star * rem
                    if c > exit_ub:
                        exit_ub = c
                if j + 1 <= n2 and (j + 1 < lo[i + 1] or j + 1 > hi[i + 1]):
                    rem = min(n1 - i - 1, n2 - j - 1)
                    c = val + table[x[i] * k + y[j]] + s_star * rem
                    if c > exit_ub:
                        exit_ub = c
        prev, cur = cur, prev
        for j in range(a, b + 1):
            cur[j] = NEG
    # prev now holds row n1
    if lo[n1] <= n2 and n2 <= hi[n1]:
        final = prev[n2]
    else:
        final = NEG
    return final, exit_ub, cells


@njit(cache=True, nogil=True)
def lattice_banded(seqs, lens, table, k, lo, hi, s_star):
    """General-m banded recursion; ``lo[j, i1] <= x_j <= hi[j, i1]`` for j >= 1."""
    m = lens.shape[0]
    n1 = lens[0]
    stride, R = _rest_strides(lens)
    diag_off = 0
    for j in range(1, m):
        diag_off += stride[j]
    w = _letter_weights(m, k)
    prev = np.full(R, NEG, np.int64)
    cur = np.full(R, NEG, np.int64)
    idx = np.zeros(m, np.int64)
    exit_ub = NEG
    cells = 0
    for i1 in range(n1 + 1):
        for j in range(1, m):
            idx[j] = 0
        for r in range(R):
            inside = True
            for j in range(1, m):
                if idx[j] < lo[j, i1] or idx[j] > hi[j, i1]:
                    inside = False
                    break
            if not inside:
                cur[r] = NEG
            else:
                cells += 1
                interior = i1 > 0
                for j in range(1, m):
                    if idx[j] == 0:
                        interior = False
                        break
                if not interior:
                    cur[r] = 0
                else:
                    best = prev[r]
                    for j in range(1, m):
                        v = cur[r - stride[j]]
                        if v > best:
                            best = v
                    if prev[r - diag_off] > NEG:
                        t = seqs[0, i1 - 1] * w[0]
                        for j in range(1, m):
                            t += seqs[j, idx[j] - 1] * w[j]
                        v = prev[r - diag_off] + table[t]
                        if v > best:
                            best = v
                    cur[r] = best
                val = cur[r]
                if val > NEG:
                    # successors along axes 1.. within this slab
                    for j in range(1, m):
                        oj = idx[j] + 1
                        if oj <= lens[j] and (oj < lo[j, i1] or oj > hi[j, i1]):
                            rem = lens[0] - i1
                            for q in range(1, m):
                                left = lens[q] - idx[q] - (1 if q == j else 0)
                                if left < rem:
                                    rem = left
                            c = val + s_star * rem
                            if c > exit_ub:
                                exit_ub = c
                    if i1 + 1 <= n1:
                        # axis 0 step and diagonal step land in slab i1 + 1
                        out0 = False
                        for q in range(1, m):
                            if idx[q] < lo[q, i1 + 1] or idx[q] > hi[q, i1 + 1]:
                                out0 = True
                                break
                        if out0:
                            rem = n1 - i1 - 1
                            for q in range(1, m):
                                left = lens[q] - idx[q]
                                if left < rem:
                                    rem = left
                            c = val + s_star * rem
                            if c > exit_ub:
                                exit_ub = c
                        fits = True
                        outd = False
                        for q in range(1, m):
                            if idx[q] + 1 > lens[q]:
                                fits = False
                                break
                            if idx[q] + 1 < lo[q, i1 + 1] or idx[q] + 1 > hi[q, i1 + 1]:
                                outd = True
                        if fits and outd:
                            t = seqs[0, i1] * w[0]
                            rem = n1 - i1 - 1
                            for q in range(1, m):
                                t += seqs[q, idx[q]] * w[q]
                                left = lens[q] - idx[q] - 1
                                if left < rem:
                                    rem = left
                            c = val + table[t] + s_star * rem
                            if c > exit_ub:
                                exit_ub = c
            j = m - 1
            while j >= 1:
                idx[j] += 1
                if idx[j] <= lens[j]:
                    break
                idx[j] = 0
                j -= 1
        prev, cur = cur, prev
    return prev[R - 1], exit_ub, cells


@njit(cache=True, nogil=True)
def field_recursion(field):
    """``L[i,j] = max(L[i-1,j], L[i,j-1], L[i-1,j-1] + field[i-1,j-1])`` with zero borders."""
    n1, n2 = field.shape
    row = np.zeros(n2 + 1, field.dtype)
    for i in range(1, n1 + 1):
        diag = row[0]
        left = row[0]
        for j in range(1, n2 + 1):
            up = row[j]
            best = up if up > left else left
            v = diag + field[i - 1, j - 1]
            if v > best:
                best = v
            diag = up
            row[j] = best
            left = best
    return row[n2]


# --- words as concatenated coordinate vectors --------------------------------


@njit(cache=True, nogil=True)
def word_score(word, m, n, table, k):
    """Optimal score of the m length-n sequences stored back to back in ``word``."""
    if m == 2:
        return pair_score(word[:n], word[n:], table, k)
    seqs = np.ascontiguousarray(word).reshape((m, n))
    lens = np.full(m, n, np.int64)
    return lattice_score(seqs, lens, table, k)


@njit(cache=True, nogil=True)
def mask_scores(w, wp, m, n, table, k):
    """``f(W^A)`` for every subset mask ``A`` of the ``N = m n`` coordinates."""
    N = m * n
    out = np.empty(1 << N, np.int64)
    z = np.empty(N, np.int64)
    for mask in range(1 << N):
        for i in range(N):
            z[i] = wp[i] if (mask >> i) & 1 else w[i]
        out[mask] = word_score(z, m, n, table, k)
    return out


@njit(cache=True, nogil=True)
def single_site_scores(w, m, n, table, k):
    """``f`` of ``w`` with coordinate ``i`` set to letter ``c``, shape ``(N, k)``."""
    N = m * n
    out = np.empty((N, k), np.int64)
    z = w.copy()
    for i in range(N):
        for c in range(k):
            z[i] = c
            out[i, c] = word_score(z, m, n, table, k)
        z[i] = w[i]
    return out


@njit(cache=True, nogil=True)
def recombination_samples(w, wp, perm, sizes, f_single, m, n, table, k):
    """Products ``Delta_j f(W) * Delta_j f(W^A)`` for sampled ``(A, j)``.

    Row ``s`` uses ``A = perm[s, :sizes[s]]``, ``j = perm[s, sizes[s]]`` and the
    replacement word ``wp[s]`` (or ``wp[0]`` when ``wp`` has a single row).
    Returns the two factors per sample; ``f_single`` caches ``f(W^j)``.
    """
    S = perm.shape[0]
    N = m * n
    fw = word_score(w, m, n, table, k)
    d0 = np.empty(S, np.int64)
    da = np.empty(S, np.int64)
    z = np.empty(N, np.int64)
    shared = wp.shape[0] == 1
    for s in range(S):
        r = 0 if shared else s
        for i in range(N):
            z[i] = w[i]
        a = sizes[s]
        for t in range(a):
            c = perm[s, t]
            z[c] = wp[r, c]
        j = perm[s, a]
        d0[s] = fw - f_single[j, wp[r, j]]
        fa = word_score(z, m, n, table, k)
        z[j] = wp[r, j]
        da[s] = fa - word_score(z, m, n, table, k)
    return d0, da


@njit(cache=True, nogil=True)
def all_word_scores(m, n, table, k):
    """``f`` of every word in ``A^N``; coordinate ``i`` is base-``k`` digit ``i``."""
    N = m * n
    total = k**N
    out = np.empty(total, np.int64)
    z = np.zeros(N, np.int64)
    for code in range(total):
        out[code] = word_score(z, m, n, table, k)
        # increment the base-k counter
        i = 0
        while i < N:
            z[i] += 1
            if z[i] < k:
                break
            z[i] = 0
            i += 1
    return out


@njit(cache=True, nogil=True)
def conditional_recombination(w, coord_probs, fall, kappa, k):
    """``E(T | W = w)`` and ``E(T' | W = w)`` by summing over the resampled coordinates.

    Only ``W'`` on ``A`` and ``j`` matters for the ``(A, j)`` term, so each term
    enumerates ``k^(|A|+1)`` assignments.  Scores are in fixed-point units squared.
    """
    N = w.shape[0]
    pw = np.empty(N, np.int64)
    pw[0] = 1
    for i in range(1, N):
        pw[i] = pw[i - 1] * k
    base = 0
    for i in range(N):
        base += w[i] * pw[i]
    fw = fall[base]
    pos = np.empty(N, np.int64)
    dig = np.empty(N, np.int64)
    T = 0.0
    Tp = 0.0
    for A in range(1 << N):
        a = 0
        for i in range(N):
            if (A >> i) & 1:
                pos[a] = i
                a += 1
        if a == N:
            continue
        accT = 0.0
        accP = 0.0
        for j in range(N):
            if (A >> j) & 1:
                continue
            pos[a] = j
            for t in range(a + 1):
                dig[t] = 0
            while True:
                weight = 1.0
                code_a = base
                for t in range(a):
                    p = pos[t]
                    weight *= coord_probs[p, dig[t]]
                    code_a += (dig[t] - w[p]) * pw[p]
                zj = dig[a]
                weight *= coord_probs[j, zj]
                if weight > 0.0:
                    shift = (zj - w[j]) * pw[j]
                    d0 = fw - fall[base + shift]
                    da = fall[code_a] - fall[code_a + shift]
                    accT += weight * d0 * da
                    accP += weight * d0 * abs(da)
                t = 0
                while t <= a:
                    dig[t] += 1
                    if dig[t] < k:
                        break
                    dig[t] = 0
                    t += 1
                if t > a:
                    break
        T += kappa[a] * accT
        Tp += kappa[a] * accP
    return 0.5 * T, 0.5 * Tp

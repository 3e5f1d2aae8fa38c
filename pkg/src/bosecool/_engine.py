"""Compiled event loop shared by the 1D and shell-model simulations.

The state is a vector of level (or shell) occupations. Two channels run
side by side:

* pair collisions, laid out by pair energy (see ``rates1d.CollisionTable``);
* laser transitions, either recomputed from occupation-dependent linewidths
  (``LASER_DYNAMIC``, 1D) or read from a fixed shell-to-shell table
  (``LASER_STATIC``, ergodic 3D).

Dynamic laser rates are expensive, so the laser channel is sampled by
thinning: between state changes it is proposed at an upper bound that is cheap
to evaluate, and the exact rates are computed only when a laser candidate is
drawn. Once computed they stay valid until the next state change. The
resulting jump process is the same as a direct Gillespie simulation with all
rates refreshed after every event.
"""
import numpy as np
from numba import njit

LASER_OFF = 0
LASER_DYNAMIC = 1
LASER_STATIC = 2

KIND_COLLISION = 0
KIND_LASER = 1

# counters layout
C_COLLISIONS = 0
C_LASER = 1
C_COLLISION_OVERFLOW = 2
C_LASER_OVERFLOW = 3
C_REFRESH = 4
C_REJECT = 5
C_BOUND_VIOLATION = 6
N_COUNTERS = 7


@njit(cache=True)
def _collision_totals(N, g, src_off, src_i, src_j, dst_off, dst_k, dst_l,
                      kern_off, kern, scale, rowtot, Etot, bbuf):
    nl = N.shape[0]
    total = 0.0
    for E in range(src_off.shape[0] - 1):
        s0 = src_off[E]
        d0 = dst_off[E]
        n_dst = dst_off[E + 1] - d0
        tE = 0.0
        have_b = False
        for p in range(src_off[E + 1] - s0):
            i = src_i[s0 + p]
            j = src_j[s0 + p]
            a = N[i] * (N[j] - (1 if i == j else 0))
            if a <= 0:
                rowtot[s0 + p] = 0.0
                continue
            if not have_b:
                for q in range(n_dst):
                    k = dst_k[d0 + q]
                    l = dst_l[d0 + q]
                    Nk = N[k] if k < nl else 0
                    Nl = N[l] if l < nl else 0
                    bbuf[q] = (Nk + g[k]) * (Nl + g[l] + (1.0 if k == l else 0.0))
                have_b = True
            base = kern_off[E] + p * n_dst
            acc = 0.0
            for q in range(n_dst):
                acc += kern[base + q] * bbuf[q]
            r = scale * a * acc
            rowtot[s0 + p] = r
            tE += r
        Etot[E] = tE
        total += tE
    return total


@njit(cache=True)
def _pick_collision(target, N, g, src_off, src_i, src_j, dst_off, dst_k,
                    dst_l, kern_off, kern, scale, rowtot, Etot):
    """Select a collision given ``target`` uniform in [0, total).

    Returns (i, j, k, l, flat kernel index)."""
    nl = N.shape[0]
    n_E = Etot.shape[0]
    E = -1
    last = -1
    for e in range(n_E):
        if Etot[e] > 0.0:
            last = e
            if target < Etot[e]:
                E = e
                break
            target -= Etot[e]
    if E < 0:
        E = last
        target = Etot[E] * 0.999999999
    s0 = src_off[E]
    d0 = dst_off[E]
    n_dst = dst_off[E + 1] - d0
    p_sel = -1
    last = -1
    for p in range(src_off[E + 1] - s0):
        rt = rowtot[s0 + p]
        if rt > 0.0:
            last = p
            if target < rt:
                p_sel = p
                break
            target -= rt
    if p_sel < 0:
        p_sel = last
        target = rowtot[s0 + p_sel] * 0.999999999
    i = src_i[s0 + p_sel]
    j = src_j[s0 + p_sel]
    a = N[i] * (N[j] - (1 if i == j else 0))
    base = kern_off[E] + p_sel * n_dst
    q_sel = -1
    last = -1
    for q in range(n_dst):
        kv = kern[base + q]
        if kv == 0.0:
            continue
        k = dst_k[d0 + q]
        l = dst_l[d0 + q]
        Nk = N[k] if k < nl else 0
        Nl = N[l] if l < nl else 0
        r = scale * a * kv * (Nk + g[k]) * (Nl + g[l] + (1.0 if k == l else 0.0))
        last = q
        if target < r:
            q_sel = q
            break
        target -= r
    if q_sel < 0:
        q_sel = last
    return i, j, dst_k[d0 + q_sel], dst_l[d0 + q_sel], base + q_sel


@njit(cache=True)
def _source_weights(N, emit_avg, S):
    # S_l = sum_n <|eta_{l n}|^2> (N_n + 1)
    L, nl = emit_avg.shape
    for l in range(L):
        acc = 0.0
        for n in range(nl):
            acc += emit_avg[l, n] * (N[n] + 1.0)
        S[l] = acc


@njit(cache=True)
def _laser_refresh(N, K, delta, omega, gamma, fc_abs, fc_emit_h, emit_avg,
                   weights, S, rates, overflow):
    """Exact laser rates for the current state; returns their total."""
    nl = N.shape[0]
    L = fc_abs.shape[0]
    Q = weights.shape[0]
    _source_weights(N, emit_avg, S)
    n_occ = 0
    for n in range(nl):
        if N[n] > 0:
            n_occ += 1
    occ = np.empty(n_occ, np.int64)
    j = 0
    for n in range(nl):
        if N[n] > 0:
            occ[j] = n
            j += 1
    C = np.empty((n_occ, L), np.complex128)
    closure = np.zeros(n_occ)
    for j in range(n_occ):
        n1 = occ[j]
        for l in range(L):
            den = complex(delta - omega * (l - n1), gamma * (S[l] - emit_avg[l, n1]))
            c = gamma * fc_abs[l, n1] / den
            C[j, l] = c
            closure[j] += c.real * c.real + c.imag * c.imag
    A = C @ fc_emit_h
    rates[:, :] = 0.0
    overflow[:] = 0.0
    total = 0.0
    for j in range(n_occ):
        n1 = occ[j]
        inside = 0.0
        for n2 in range(nl):
            d = 0.0
            for q in range(Q):
                a = A[j, q * nl + n2]
                d += weights[q] * (a.real * a.real + a.imag * a.imag)
            inside += d
            if n2 != n1:
                r = K * N[n1] * (N[n2] + 1.0) * d
                rates[n1, n2] = r
                total += r
        ov = closure[j] - inside
        if ov < 0.0:
            ov = 0.0
        overflow[n1] = K * N[n1] * ov
        total += overflow[n1]
    return total


@njit(cache=True)
def _laser_bound(N, K, delta, omega, gamma, fc_abs_mag, emit_avg, tail, S):
    """Upper bound on the total laser rate (Cauchy-Schwarz over the
    intermediate-level sum, weights sqrt of the stimulated emission sums)."""
    nl = N.shape[0]
    L = fc_abs_mag.shape[0]
    _source_weights(N, emit_avg, S)
    total = 0.0
    for n1 in range(nl):
        if N[n1] == 0:
            continue
        acc = 0.0
        for l in range(L):
            f = fc_abs_mag[l, n1]
            if f == 0.0:
                continue
            R = S[l] - emit_avg[l, n1]
            d = delta - omega * (l - n1)
            acc += gamma * f / np.sqrt(d * d + gamma * gamma * R * R) * np.sqrt(S[l] + tail[l])
        total += K * N[n1] * acc * acc
    return total * (1.0 + 1e-12)


@njit(cache=True)
def _static_rates(N, g, static_D, static_over, rates, overflow):
    nl = N.shape[0]
    total = 0.0
    for n1 in range(nl):
        for n2 in range(nl):
            rates[n1, n2] = 0.0
        overflow[n1] = 0.0
        if N[n1] == 0:
            continue
        f = N[n1] / g[n1]
        for n2 in range(nl):
            if n2 == n1:
                continue
            r = static_D[n1, n2] * f * (N[n2] + g[n2]) / g[n2]
            rates[n1, n2] = r
            total += r
        overflow[n1] = static_over[n1] * f
        total += overflow[n1]
    return total


@njit(cache=True)
def _pick_laser(target, rates, overflow):
    """Returns (n1, n2); n2 = -1 marks a transition out of the truncation."""
    nl = rates.shape[0]
    l1 = -1
    l2 = -1
    for n1 in range(nl):
        for n2 in range(nl):
            r = rates[n1, n2]
            if r > 0.0:
                l1 = n1
                l2 = n2
                if target < r:
                    return n1, n2
                target -= r
        r = overflow[n1]
        if r > 0.0:
            l1 = n1
            l2 = -1
            if target < r:
                return n1, -1
            target -= r
    return l1, l2


@njit(cache=True)
def run_pulse(N, duration, max_events, seed, t0,
              g, coll_on, coll_scale, src_off, src_i, src_j, dst_off, dst_k,
              dst_l, kern_off, kern,
              laser_mode, K, delta, omega, gamma, fc_abs, fc_abs_mag,
              fc_emit_h, emit_avg, tail, weights, static_D, static_over,
              log_on, occ_int, counters):
    """Evolve ``N`` in place for ``duration`` or until ``max_events`` state
    changes. Returns (n_events, elapsed, log_t, log_kind, log_levels)."""
    np.random.seed(seed)
    nl = N.shape[0]
    rowtot = np.zeros(src_i.shape[0])
    Etot = np.zeros(src_off.shape[0] - 1)
    max_dst = 1
    for E in range(dst_off.shape[0] - 1):
        if dst_off[E + 1] - dst_off[E] > max_dst:
            max_dst = dst_off[E + 1] - dst_off[E]
    bbuf = np.zeros(max_dst)
    rates = np.zeros((nl, nl))
    overflow = np.zeros(nl)
    S = np.zeros(fc_abs.shape[0])

    cap = 1024 if log_on else 1
    log_t = np.empty(cap)
    log_kind = np.empty(cap, np.int64)
    log_lv = np.empty((cap, 4), np.int64)
    n_log = 0

    coll_total = 0.0
    if coll_on:
        coll_total = _collision_totals(N, g, src_off, src_i, src_j, dst_off, dst_k,
                                       dst_l, kern_off, kern, coll_scale, rowtot, Etot, bbuf)
    laser_total = 0.0
    laser_bound = 0.0
    laser_valid = True
    if laser_mode == LASER_STATIC:
        laser_total = _static_rates(N, g, static_D, static_over, rates, overflow)
    elif laser_mode == LASER_DYNAMIC:
        laser_bound = _laser_bound(N, K, delta, omega, gamma, fc_abs_mag, emit_avg, tail, S)
        laser_valid = False

    t = 0.0
    n_events = 0
    while n_events < max_events:
        lam_laser = laser_total if laser_valid else laser_bound
        lam = coll_total + lam_laser
        if lam <= 0.0:
            break
        tau = -np.log(1.0 - np.random.random()) / lam
        if t + tau >= duration:
            break
        for n in range(nl):
            occ_int[n] += N[n] * tau
        t += tau
        u = np.random.random() * lam
        changed = False
        kind = KIND_COLLISION
        a0 = 0
        a1 = 0
        a2 = 0
        a3 = 0
        if u < coll_total:
            i, j, k, l, _ = _pick_collision(u, N, g, src_off, src_i, src_j, dst_off, dst_k,
                                            dst_l, kern_off, kern, coll_scale, rowtot, Etot)
            if l >= nl:
                counters[C_COLLISION_OVERFLOW] += 1
            else:
                N[i] -= 1
                N[j] -= 1
                N[k] += 1
                N[l] += 1
                counters[C_COLLISIONS] += 1
                changed = True
                a0 = i
                a1 = j
                a2 = k
                a3 = l
        else:
            if not laser_valid:
                laser_total = _laser_refresh(N, K, delta, omega, gamma, fc_abs, fc_emit_h,
                                             emit_avg, weights, S, rates, overflow)
                laser_valid = True
                counters[C_REFRESH] += 1
                if laser_total > laser_bound:
                    counters[C_BOUND_VIOLATION] += 1
                if np.random.random() * laser_bound >= laser_total:
                    counters[C_REJECT] += 1
                    continue
            n1, n2 = _pick_laser(np.random.random() * laser_total, rates, overflow)
            if n2 < 0:
                counters[C_LASER_OVERFLOW] += 1
            else:
                N[n1] -= 1
                N[n2] += 1
                counters[C_LASER] += 1
                changed = True
                kind = KIND_LASER
                a0 = n1
                a1 = n2
                a2 = -1
                a3 = -1
        if not changed:
            continue
        n_events += 1
        if log_on:
            if n_log == cap:
                cap *= 2
                nt = np.empty(cap)
                nk = np.empty(cap, np.int64)
                nv = np.empty((cap, 4), np.int64)
                nt[:n_log] = log_t[:n_log]
                nk[:n_log] = log_kind[:n_log]
                nv[:n_log] = log_lv[:n_log]
                log_t = nt
                log_kind = nk
                log_lv = nv
            log_t[n_log] = t0 + t
            log_kind[n_log] = kind
            log_lv[n_log, 0] = a0
            log_lv[n_log, 1] = a1
            log_lv[n_log, 2] = a2
            log_lv[n_log, 3] = a3
            n_log += 1
        if coll_on:
            coll_total = _collision_totals(N, g, src_off, src_i, src_j, dst_off, dst_k,
                                           dst_l, kern_off, kern, coll_scale, rowtot, Etot, bbuf)
        if laser_mode == LASER_STATIC:
            laser_total = _static_rates(N, g, static_D, static_over, rates, overflow)
        elif laser_mode == LASER_DYNAMIC:
            laser_bound = _laser_bound(N, K, delta, omega, gamma, fc_abs_mag, emit_avg, tail, S)
            laser_valid = False

    if n_events >= max_events:
        elapsed = t
    else:
        for n in range(nl):
            occ_int[n] += N[n] * (duration - t)
        elapsed = duration
    return n_events, elapsed, log_t[:n_log], log_kind[:n_log], log_lv[:n_log]


@njit(cache=True)
def event_histogram(N, n_draws, seed,
                    g, coll_on, coll_scale, src_off, src_i, src_j, dst_off, dst_k,
                    dst_l, kern_off, kern,
                    laser_mode, K, delta, omega, gamma, fc_abs, fc_emit_h, emit_avg,
                    weights, static_D, static_over):
    """Draw the next event ``n_draws`` times from one fixed state.

    Returns counts per collision kernel entry, per laser (n1, n2) and per
    laser overflow source, plus the exact channel totals."""
    np.random.seed(seed)
    nl = N.shape[0]
    rowtot = np.zeros(src_i.shape[0])
    Etot = np.zeros(src_off.shape[0] - 1)
    bbuf = np.zeros(dst_k.shape[0] + 1)
    rates = np.zeros((nl, nl))
    overflow = np.zeros(nl)
    S = np.zeros(fc_abs.shape[0])
    coll_total = 0.0
    if coll_on:
        coll_total = _collision_totals(N, g, src_off, src_i, src_j, dst_off, dst_k,
                                       dst_l, kern_off, kern, coll_scale, rowtot, Etot, bbuf)
    laser_total = 0.0
    if laser_mode == LASER_STATIC:
        laser_total = _static_rates(N, g, static_D, static_over, rates, overflow)
    elif laser_mode == LASER_DYNAMIC:
        laser_total = _laser_refresh(N, K, delta, omega, gamma, fc_abs, fc_emit_h,
                                     emit_avg, weights, S, rates, overflow)
    coll_counts = np.zeros(kern.shape[0], np.int64)
    laser_counts = np.zeros((nl, nl), np.int64)
    over_counts = np.zeros(nl, np.int64)
    lam = coll_total + laser_total
    for _ in range(n_draws):
        u = np.random.random() * lam
        if u < coll_total:
            idx = _pick_collision(u, N, g, src_off, src_i, src_j, dst_off, dst_k,
                                  dst_l, kern_off, kern, coll_scale, rowtot, Etot)[4]
            coll_counts[idx] += 1
        else:
            n1, n2 = _pick_laser(u - coll_total, rates, overflow)
            if n2 < 0:
                over_counts[n1] += 1
            else:
                laser_counts[n1, n2] += 1
    return coll_counts, laser_counts, over_counts, coll_total, laser_total

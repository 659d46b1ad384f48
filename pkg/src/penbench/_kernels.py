"""Compiled Monte Carlo loops.

Every kernel reimplements, draw for draw, the random-stream protocol of the
object engine (see :mod:`penbench.rng`): trial ``t`` derives a values stream
(substream ``2t``) and a strategy stream (substream ``2t+1``) from the master
seed, instance values are drawn or shuffled from the values stream, and every
strategy decision consumes the strategy stream in the documented order. A
game scored here is bitwise-equal to the same game played through
:func:`penbench.engine.play`; ``tests/test_kernels.py`` enforces that.

Distribution codes: 0 exp(rate=p1), 1 uniform(p1, p2), 2 truncexp(cap=p1),
3 degenerate(p1). A generator code of -1 means "copy the fixed value array".
"""

from __future__ import annotations

import math

import numpy as np

from ._jit import jit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_SALT = np.uint64(0xA0761D6478BD642F)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U53 = 1.1102230246251565e-16  # 2**-53
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_TOPBIT = np.uint64(1) << np.uint64(63)


@jit
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@jit
def _seed(master, index):
    z = _mix(master ^ _SALT)
    return _mix(z + _GOLDEN * (index + _ONE))


@jit
def _u64(state):
    state = state + _GOLDEN
    return state, _mix(state)


@jit
def _unif(state):
    state, v = _u64(state)
    return state, float(v >> _S11) * _U53


@jit
def _randbelow(state, n):
    state, v = _u64(state)
    return state, int(v % np.uint64(n))


@jit
def _geom_level(state):
    state, u = _u64(state)
    j = 0
    bit = _TOPBIT
    while j < 62 and (u & bit) == _ZERO:
        j += 1
        bit = bit >> _ONE
    return state, j


@jit
def _sample(state, code, p1, p2):
    state, u = _unif(state)
    if code == 0:
        return state, -math.log1p(-u) / p1
    if code == 1:
        return state, p1 + u * (p2 - p1)
    if code == 2:
        e = -math.log1p(-u)
        return state, min(e, p1)
    return state, p1  # degenerate still consumes one uniform


@jit
def _fill_values(buf, fixed, gen_code, p1, p2, state):
    n = buf.shape[0]
    if gen_code < 0:
        for i in range(n):
            buf[i] = fixed[i]
    else:
        for i in range(n):
            state, x = _sample(state, gen_code, p1, p2)
            buf[i] = x
    return state


@jit
def _shuffle(buf, state):
    for i in range(buf.shape[0] - 1, 0, -1):
        state, j = _randbelow(state, i + 1)
        tmp = buf[i]
        buf[i] = buf[j]
        buf[j] = tmp
    return state


@jit
def _choice(state, cum):
    state, u = _unif(state)
    idx = cum.shape[0] - 1
    for i in range(cum.shape[0]):
        if u < cum[i]:
            idx = i
            break
    return state, idx


@jit
def _choice_uniform(state, count):
    state, u = _unif(state)
    idx = count - 1
    for i in range(count):
        if u < (i + 1) / count:
            idx = i
            break
    return state, idx


@jit
def _commit_probability(delta):
    if delta <= -2:
        return 1.0
    return 2.0 ** (-(delta + 2))


@jit
def _bucket_of(v, reference, k):
    # bucket 1..k of v in (0, reference], boundary ties to the lower bucket
    j = int(math.ceil(v * k / reference))
    if j < 1:
        return 1
    if j > k:
        return k
    return j


@jit
def iid_table_trials(code, p1, p2, n, thetas, cum, mix_first, theta_first, trials, t0, master):
    """Single-threshold play on n i.i.d. draws; theta from a one-draw table.

    With ``mix_first`` a pre-coin chooses ``theta_first`` (heads) or the table
    (tails). Returns per-trial scores, realized maxima and accept flags.
    """
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    accepted = np.zeros(trials, np.uint8)
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        sstate = _seed(master, np.uint64(2 * (t0 + t) + 1))
        if mix_first:
            sstate, u = _unif(sstate)
            if u < 0.5:
                theta = theta_first
            else:
                sstate, idx = _choice(sstate, cum)
                theta = thetas[idx]
        else:
            sstate, idx = _choice(sstate, cum)
            theta = thetas[idx]
        mx = 0.0
        acc = False
        score = 0.0
        for _ in range(n):
            vstate, x = _sample(vstate, code, p1, p2)
            if x > mx:
                mx = x
            if not acc and x > theta:
                acc = True
                score = x - theta
        scores[t] = score
        maxes[t] = mx
        accepted[t] = 1 if acc else 0
    return scores, maxes, accepted


@jit
def secretary_table_trials(fixed, gen_code, p1, p2, n, do_shuffle, thetas, cum, trials, t0, master):
    """Single-threshold play against a secretary instance; theta from a table."""
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    buf = np.empty(n, np.float64)
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        sstate = _seed(master, np.uint64(2 * (t0 + t) + 1))
        vstate = _fill_values(buf, fixed, gen_code, p1, p2, vstate)
        if do_shuffle:
            vstate = _shuffle(buf, vstate)
        sstate, idx = _choice(sstate, cum)
        theta = thetas[idx]
        mx = 0.0
        score = 0.0
        done = False
        for i in range(n):
            x = buf[i]
            if x > mx:
                mx = x
            if not done and x > theta:
                done = True
                score = x - theta
        scores[t] = score
        maxes[t] = mx
    return scores, maxes


@jit
def warmup_full_trials(fixed, gen_code, p1, p2, n, do_shuffle, trials, t0, master):
    """Full-information deterministic bucket threshold, then single-threshold."""
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    buf = np.empty(n, np.float64)
    k = int(math.floor(math.log2(n))) + 2
    counts = np.zeros(k + 2, np.int64)
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        vstate = _fill_values(buf, fixed, gen_code, p1, p2, vstate)
        if do_shuffle:
            vstate = _shuffle(buf, vstate)
        a1 = 0.0
        for i in range(n):
            if buf[i] > a1:
                a1 = buf[i]
        maxes[t] = a1
        if a1 <= 0.0:
            scores[t] = buf[0]  # accept the first option untested
            continue
        for j in range(k + 2):
            counts[j] = 0
        for i in range(n):
            v = buf[i]
            if v > 0.0:
                counts[_bucket_of(v, a1, k)] += 1
        suffix = 0
        j_star = 0
        for j in range(k, 0, -1):
            if j <= k - 1 and counts[j] < suffix:
                j_star = j
            suffix += counts[j]
        theta = (j_star - 1) / k * a1
        score = 0.0
        for i in range(n):
            if buf[i] > theta:
                score = buf[i] - theta
                break
        scores[t] = score
    return scores, maxes


@jit
def noinfo_trials(fixed, gen_code, p1, p2, n, do_shuffle, trials, t0, master):
    """Observe half, then hinted-threshold or hint-threshold on the rest."""
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    buf = np.empty(n, np.float64)
    m = n // 2
    rest = n - m
    k = int(math.floor(math.log2(rest))) + 2 if rest >= 1 else 2
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        sstate = _seed(master, np.uint64(2 * (t0 + t) + 1))
        vstate = _fill_values(buf, fixed, gen_code, p1, p2, vstate)
        if do_shuffle:
            vstate = _shuffle(buf, vstate)
        mx = 0.0
        for i in range(n):
            if buf[i] > mx:
                mx = buf[i]
        maxes[t] = mx
        if n == 1:
            scores[t] = buf[0]
            continue
        sstate, u = _unif(sstate)
        use_hinted = u < 0.5
        jj = 0
        if use_hinted:
            sstate, jidx = _choice_uniform(sstate, k - 1)
            jj = 1 + jidx
        hat = 0.0
        for i in range(m):
            if buf[i] > hat:
                hat = buf[i]
        if use_hinted:
            theta = (jj - 1) / k * hat
        else:
            theta = hat
        score = 0.0
        for i in range(m, n):
            if buf[i] > theta:
                score = buf[i] - theta
                break
        scores[t] = score
    return scores, maxes


@jit
def gap_trials(fixed, gen_code, p1, p2, n, do_shuffle, k_alg, trials, t0, master):
    """Observe until a bucket gap opens, then arm a permanent threshold."""
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    buf = np.empty(n, np.float64)
    counts = np.zeros(k_alg + 1, np.int64)
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        vstate = _fill_values(buf, fixed, gen_code, p1, p2, vstate)
        if do_shuffle:
            vstate = _shuffle(buf, vstate)
        a1 = 0.0
        for i in range(n):
            if buf[i] > a1:
                a1 = buf[i]
        maxes[t] = a1
        if a1 <= 0.0:
            scores[t] = buf[0]
            continue
        for j in range(k_alg + 1):
            counts[j] = 0
        for i in range(n):
            v = buf[i]
            if v > 0.0:
                counts[_bucket_of(v, a1, k_alg)] += 1
        armed = False
        theta = 0.0
        score = 0.0
        for i in range(n):
            if not armed:
                above = 0
                hit = 0
                for j in range(k_alg, 0, -1):
                    if j <= k_alg - 1 and counts[j] == 0 and above > 0:
                        hit = j
                    above += counts[j]
                if hit > 0:
                    armed = True
                    theta = (hit - 1) / k_alg * a1
            if armed:
                if buf[i] > theta:
                    score = buf[i] - theta
                    break
            else:
                v = buf[i]
                if v > 0.0:
                    counts[_bucket_of(v, a1, k_alg)] -= 1
        scores[t] = score
    return scores, maxes


@jit
def arb_hint_trials(fixed, gen_code, p1, p2, n, do_shuffle, hint_mode, hint_value, trials, t0, master):
    """Arbitrary-order hinted player with the embedded committing bit player.

    hint_mode 0 uses hint_value; hint_mode 1 uses the realized maximum
    (optimum information).
    """
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    buf = np.empty(n, np.float64)
    k = 2 * int(math.floor(math.log2(n))) + 2
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        sstate = _seed(master, np.uint64(2 * (t0 + t) + 1))
        vstate = _fill_values(buf, fixed, gen_code, p1, p2, vstate)
        if do_shuffle:
            vstate = _shuffle(buf, vstate)
        mx = 0.0
        for i in range(n):
            if buf[i] > mx:
                mx = buf[i]
        maxes[t] = mx
        hint = hint_value
        if hint_mode == 1:
            hint = mx
        sstate, jidx = _choice_uniform(sstate, k - 1)
        j_star = 1 + jidx
        theta = (j_star - 1) / k * hint
        upper = (j_star + 1) / k * hint
        delta = 0
        score = 0.0
        for i in range(n):
            x = buf[i]
            if x <= theta:
                continue
            sstate, u = _unif(sstate)
            if u < _commit_probability(delta):
                score = x - theta
                break
            spend2 = theta + (upper - theta)
            if x > spend2:
                delta -= 1
            else:
                delta += 1
        scores[t] = score
    return scores, maxes


@jit
def uniform_pick_trials(fixed, gen_code, p1, p2, n, do_shuffle, trials, t0, master):
    """Accept one uniformly random option untested."""
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    buf = np.empty(n, np.float64)
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        sstate = _seed(master, np.uint64(2 * (t0 + t) + 1))
        vstate = _fill_values(buf, fixed, gen_code, p1, p2, vstate)
        if do_shuffle:
            vstate = _shuffle(buf, vstate)
        mx = 0.0
        for i in range(n):
            if buf[i] > mx:
                mx = buf[i]
        maxes[t] = mx
        sstate, pick = _randbelow(sstate, n)
        scores[t] = buf[pick]
    return scores, maxes


@jit
def genorder_threshold_trials(k_inst, theta, trials, t0, master, draw_cap):
    """Single-threshold play against the generated-order instance.

    Values are produced lazily; the game ends at the first pass, so only the
    needed prefix of the sequence is generated. Scores of -1 flag a draw-cap
    overrun (never expected in practice).
    """
    scores = np.zeros(trials, np.float64)
    quotas = np.zeros(k_inst + 1, np.int64)
    counts = np.zeros(k_inst + 1, np.int64)
    n = 0
    for j in range(k_inst + 1):
        quotas[j] = 4 ** (k_inst - j)
        n += quotas[j]
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        for j in range(k_inst + 1):
            counts[j] = 0
        filled = 0
        draws = 0
        score = 0.0
        while filled < n:
            draws += 1
            if draws > draw_cap:
                score = -1.0
                break
            vstate, lvl = _geom_level(vstate)
            if lvl <= k_inst and counts[lvl] < quotas[lvl]:
                counts[lvl] += 1
                filled += 1
                v = float(lvl)
                if v > theta:
                    score = v - theta
                    break
        scores[t] = score
    return scores


@jit
def genorder_risky_probe(k_inst, theta, delta, sequences, t0, master, draw_cap):
    """Count, per generated sequence, the steps where level theta+1 is still
    active and, among those, how often the next value equals theta+delta."""
    hits = np.zeros(sequences, np.int64)
    actives = np.zeros(sequences, np.int64)
    quotas = np.zeros(k_inst + 1, np.int64)
    counts = np.zeros(k_inst + 1, np.int64)
    n = 0
    for j in range(k_inst + 1):
        quotas[j] = 4 ** (k_inst - j)
        n += quotas[j]
    target = theta + delta
    watch = theta + 1
    for t in range(sequences):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        for j in range(k_inst + 1):
            counts[j] = 0
        filled = 0
        draws = 0
        while filled < n:
            draws += 1
            if draws > draw_cap:
                break
            vstate, lvl = _geom_level(vstate)
            if lvl <= k_inst and counts[lvl] < quotas[lvl]:
                if counts[watch] < quotas[watch]:
                    actives[t] += 1
                    if lvl == target:
                        hits[t] += 1
                counts[lvl] += 1
                filled += 1
    return hits, actives


@jit
def single_sample_trials(codes, p1s, p2s, n, lo, hi, trials, t0, master):
    """One-sample prophet: hint = sample max; coin between the hinted
    arbitrary-order player and a single threshold at the hint.

    Returns scores, realized maxima, a flag for hint in [lo, hi], and accept
    flags.
    """
    scores = np.zeros(trials, np.float64)
    maxes = np.zeros(trials, np.float64)
    in_range = np.zeros(trials, np.uint8)
    accepted = np.zeros(trials, np.uint8)
    values = np.empty(n, np.float64)
    samples = np.empty(n, np.float64)
    k = 2 * int(math.floor(math.log2(n))) + 2
    for t in range(trials):
        vstate = _seed(master, np.uint64(2 * (t0 + t)))
        sstate = _seed(master, np.uint64(2 * (t0 + t) + 1))
        for i in range(n):
            vstate, x = _sample(vstate, codes[i], p1s[i], p2s[i])
            values[i] = x
        for i in range(n):
            vstate, x = _sample(vstate, codes[i], p1s[i], p2s[i])
            samples[i] = x
        hat = 0.0
        for i in range(n):
            if samples[i] > hat:
                hat = samples[i]
        mx = 0.0
        for i in range(n):
            if values[i] > mx:
                mx = values[i]
        maxes[t] = mx
        if lo <= hat <= hi:
            in_range[t] = 1
        sstate, u = _unif(sstate)
        score = 0.0
        acc = False
        if u < 0.5:
            sstate, jidx = _choice_uniform(sstate, k - 1)
            j_star = 1 + jidx
            theta = (j_star - 1) / k * hat
            upper = (j_star + 1) / k * hat
            delta = 0
            for i in range(n):
                x = values[i]
                if x <= theta:
                    continue
                sstate, uu = _unif(sstate)
                if uu < _commit_probability(delta):
                    score = x - theta
                    acc = True
                    break
                spend2 = theta + (upper - theta)
                if x > spend2:
                    delta -= 1
                else:
                    delta += 1
        else:
            for i in range(n):
                if values[i] > hat:
                    score = values[i] - hat
                    acc = True
                    break
        scores[t] = score
        accepted[t] = 1 if acc else 0
    return scores, maxes, in_range, accepted


@jit
def bitgame_trials(bits, trials, t0, master):
    """Wins of the committing player over repeated plays of one sequence."""
    wins = 0
    m = bits.shape[0]
    for t in range(trials):
        sstate = _seed(master, np.uint64(2 * (t0 + t) + 1))
        delta = 0
        committed = False
        for i in range(m):
            sstate, u = _unif(sstate)
            if u < _commit_probability(delta):
                committed = True
                if bits[i] == 1:
                    wins += 1
                break
            delta += 1 if bits[i] == 0 else -1
        # running off the end without committing is a loss
    return wins

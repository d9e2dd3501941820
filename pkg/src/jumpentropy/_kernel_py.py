"""Pure-Python trajectory loop, used when the compiled kernel is unavailable.

``evolve`` runs one quantum-jump trajectory with the per-step Bernoulli
scheme.  All inputs are pre-digested by :mod:`jumpentropy.pdp`:

prop : (d, d) complex
    Short-time propagator ``T4(-i H_eff dt)``.  The state is carried
    unnormalised between renormalisations (every 32 steps, after a jump and
    at every sample); probabilities are compared against ``u * ||psi||^2``.
jumps : (m, d, d) complex
    ``sqrt(rate * dt) * A`` for every open channel/direction, so that
    ``||jumps[k] @ psi||^2`` is the jump probability of the step.
psi0 : (d,) complex
    Normalised initial state.
uniforms : (n_steps,) float
    One uniform draw per step; ``u < sum(p)`` triggers a jump and the same
    draw selects the jump by inverse CDF over ``p`` in index order.
sample_every : int
    Store a sample after every ``sample_every`` steps (sample 0 is ``psi0``).
states_out, counts_out, ev_step, ev_kind :
    Optional outputs (``None`` to skip); events beyond ``len(ev_step)`` are
    counted but not stored.
rho_acc, counts_acc :
    Optional accumulators that receive ``|psi><psi|`` and the cumulative
    counts at each sample, added in place.

Returns ``(n_events, max_total_probability, status)``; ``status`` is one of
the ``STATUS_*`` codes.
"""
from __future__ import annotations

import math

STATUS_OK = 0
STATUS_STEP_TOO_LARGE = 1
STATUS_NORM_UNDERFLOW = 2
STATUS_IMPOSSIBLE_JUMP = 3


RENORM_EVERY = 32


def _sparse(mat, d):
    return [(i, j, mat[i][j].real, mat[i][j].imag)
            for i in range(d) for j in range(d) if mat[i][j].real != 0.0 or mat[i][j].imag != 0.0]


def _quad(entries, xr, xi):
    acc = 0.0
    for i, j, re, im in entries:
        acc += xr[i] * (re * xr[j] - im * xi[j]) + xi[i] * (re * xi[j] + im * xr[j])
    return acc


def evolve(prop, jumps, psi0, uniforms, sample_every, states_out, counts_out, ev_step, ev_kind,
           rho_acc=None, counts_acc=None):
    d = len(psi0)
    m = len(jumps)
    pr = [[complex(prop[i][j]).real for j in range(d)] for i in range(d)]
    pi = [[complex(prop[i][j]).imag for j in range(d)] for i in range(d)]
    j_mats = [[[complex(jumps[k][i][j]) for j in range(d)] for i in range(d)] for k in range(m)]
    j_sparse = [_sparse(jm, d) for jm in j_mats]

    # q[k] = J_k^dagger J_k, q[m] = sum over k; same summation order as the compiled loop
    q = [[[0j] * d for _ in range(d)] for _ in range(m + 1)]
    for k in range(m):
        jm = j_mats[k]
        for j in range(d):
            for l in range(d):
                ar = 0.0
                ai = 0.0
                for i in range(d):
                    z = jm[i][j]
                    b = jm[i][l]
                    ar += z.real * b.real + z.imag * b.imag
                    ai += z.real * b.imag - z.imag * b.real
                q[k][j][l] = complex(ar, ai)
                tot = q[m][j][l]
                q[m][j][l] = complex(tot.real + ar, tot.imag + ai)
    q_sparse = [_sparse(qm, d) for qm in q]
    q_total = q_sparse[m]

    xr = [complex(z).real for z in psi0]
    xi = [complex(z).imag for z in psi0]
    counts = [0] * m
    ev_cap = 0 if ev_step is None else len(ev_step)
    n_events = 0
    max_ptot = 0.0
    status = STATUS_OK
    sample = 0

    def emit(idx):
        if states_out is not None:
            states_out[idx, :] = [complex(a, b) for a, b in zip(xr, xi)]
        if counts_out is not None:
            counts_out[idx, :] = counts
        if rho_acc is not None:
            for i in range(d):
                for j in range(d):
                    rho_acc[idx, i, j] += complex(xr[i] * xr[j] + xi[i] * xi[j], xi[i] * xr[j] - xr[i] * xi[j])
        if counts_acc is not None and idx > 0:
            for k in range(m):
                counts_acc[idx, k] += counts[k]

    emit(0)
    n2 = 0.0
    for i in range(d):
        n2 += xr[i] * xr[i] + xi[i] * xi[i]
    until_sample = sample_every
    until_renorm = RENORM_EVERY
    for step, u in enumerate(uniforms.tolist() if hasattr(uniforms, "tolist") else uniforms):
        u = u * n2
        ptot = _quad(q_total, xr, xi)
        if ptot > max_ptot * n2:
            max_ptot = ptot / n2
            if max_ptot > 0.5:
                status = STATUS_STEP_TOO_LARGE
                break

        if u < ptot:
            probs = [_quad(q_sparse[k], xr, xi) for k in range(m)]
            chosen = -1
            cum = 0.0
            for k in range(m):
                cum += probs[k]
                # a tie u == cum goes to the lower index
                if probs[k] > 0.0 and u <= cum:
                    chosen = k
                    break
            if chosen < 0:
                # rounding in the running sum: take the last open channel
                for k in range(m - 1, -1, -1):
                    if probs[k] > 0.0:
                        chosen = k
                        break
            if probs[chosen] <= 1e-24 * n2:
                status = STATUS_IMPOSSIBLE_JUMP
                break
            tr = [0.0] * d
            ti = [0.0] * d
            for i, j, re, im in j_sparse[chosen]:
                tr[i] += re * xr[j] - im * xi[j]
                ti[i] += re * xi[j] + im * xr[j]
            nrm2 = 0.0
            for i in range(d):
                nrm2 += tr[i] * tr[i] + ti[i] * ti[i]
            inv = 1.0 / math.sqrt(nrm2)
            xr = [a * inv for a in tr]
            xi = [b * inv for b in ti]
            n2 = 0.0
            for i in range(d):
                n2 += xr[i] * xr[i] + xi[i] * xi[i]
            until_renorm = RENORM_EVERY
            counts[chosen] += 1
            if n_events < ev_cap:
                ev_step[n_events] = step
                ev_kind[n_events] = chosen
            n_events += 1
        else:
            tr = [0.0] * d
            ti = [0.0] * d
            nrm2 = 0.0
            for i in range(d):
                ar = 0.0
                ai = 0.0
                pri = pr[i]
                pii = pi[i]
                for j in range(d):
                    ar += pri[j] * xr[j] - pii[j] * xi[j]
                    ai += pri[j] * xi[j] + pii[j] * xr[j]
                tr[i] = ar
                ti[i] = ai
                nrm2 += ar * ar + ai * ai
            if nrm2 < 1e-24 * n2:
                status = STATUS_NORM_UNDERFLOW
                break
            xr = tr
            xi = ti
            n2 = nrm2
            until_renorm -= 1

        until_sample -= 1
        if until_renorm == 0 or until_sample == 0:
            inv = 1.0 / math.sqrt(n2)
            xr = [a * inv for a in xr]
            xi = [b * inv for b in xi]
            n2 = 0.0
            for i in range(d):
                n2 += xr[i] * xr[i] + xi[i] * xi[i]
            until_renorm = RENORM_EVERY
        if until_sample == 0:
            until_sample = sample_every
            sample += 1
            emit(sample)

    return n_events, max_ptot, status

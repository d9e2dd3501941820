# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled quantum-jump trajectory loop.

Mirrors :mod:`jumpentropy._kernel_py` decision for decision; see that
module for the argument conventions.  Operators are copied into local
arrays (real and imaginary parts split) and jump operators are stored as
sparse entry lists, since physical jump operators are almost always a
handful of matrix units.
"""
from libc.math cimport sqrt

ctypedef double complex cplx

cdef enum:
    MAXD = 8
    MAXJ = 16
    MAXNZ = 1024
    RENORM_EVERY = 32

STATUS_OK = 0
STATUS_STEP_TOO_LARGE = 1
STATUS_NORM_UNDERFLOW = 2
STATUS_IMPOSSIBLE_JUMP = 3


def evolve(const cplx[:, ::1] prop,
           const cplx[:, :, ::1] jumps,
           const cplx[::1] psi0,
           const double[::1] uniforms,
           Py_ssize_t sample_every,
           cplx[:, ::1] states_out,
           long long[:, ::1] counts_out,
           long long[::1] ev_step,
           long long[::1] ev_kind,
           cplx[:, :, ::1] rho_acc=None,
           double[:, ::1] counts_acc=None):
    cdef Py_ssize_t d = prop.shape[0]
    cdef Py_ssize_t m = jumps.shape[0]
    cdef Py_ssize_t n_steps = uniforms.shape[0]
    cdef bint store_states = states_out is not None
    cdef bint store_counts = counts_out is not None
    cdef bint store_events = ev_step is not None
    cdef bint acc_rho = rho_acc is not None
    cdef bint acc_counts = counts_acc is not None
    cdef Py_ssize_t ev_cap = ev_step.shape[0] if store_events else 0

    cdef double pr[MAXD * MAXD]
    cdef double pi[MAXD * MAXD]
    cdef int nz_start[MAXJ + 1]
    cdef int nz_row[MAXNZ]
    cdef int nz_col[MAXNZ]
    cdef double nz_re[MAXNZ]
    cdef double nz_im[MAXNZ]
    cdef double xr[MAXD]
    cdef double xi[MAXD]
    cdef double tr_[MAXD]
    cdef double ti[MAXD]
    cdef double probs[MAXJ]
    cdef double qr[MAXJ + 1][MAXD * MAXD]
    cdef double qi[MAXJ + 1][MAXD * MAXD]
    cdef int q_start[MAXJ + 2]
    cdef int q_row[MAXNZ]
    cdef int q_col[MAXNZ]
    cdef double q_re[MAXNZ]
    cdef double q_im[MAXNZ]
    cdef int nq = 0
    cdef Py_ssize_t l, kk
    cdef long long counts[MAXJ]

    cdef Py_ssize_t i, j, k, e, step, sample, chosen, until_sample, until_renorm
    cdef Py_ssize_t n_events = 0
    cdef int nnz = 0
    cdef double u, ptot, cum, nrm2, inv, n2, max_ptot = 0.0
    cdef double ar, ai, br, bi
    cdef cplx z
    cdef int status = 0

    if d > MAXD or m > MAXJ:
        raise ValueError("dimension or channel count too large for the compiled kernel")

    for i in range(d):
        for j in range(d):
            z = prop[i, j]
            pr[i * d + j] = z.real
            pi[i * d + j] = z.imag
    for k in range(m):
        nz_start[k] = nnz
        for i in range(d):
            for j in range(d):
                z = jumps[k, i, j]
                if z.real != 0.0 or z.imag != 0.0:
                    if nnz >= MAXNZ:
                        raise ValueError("too many non-zero jump-operator entries")
                    nz_row[nnz] = <int>i
                    nz_col[nnz] = <int>j
                    nz_re[nnz] = z.real
                    nz_im[nnz] = z.imag
                    nnz += 1
    nz_start[m] = nnz

    # q[k] = J_k^dagger J_k for k < m, q[m] = sum over k; stored sparse
    for kk in range(m + 1):
        for j in range(d * d):
            qr[kk][j] = 0.0
            qi[kk][j] = 0.0
    for k in range(m):
        for j in range(d):
            for l in range(d):
                ar = 0.0
                ai = 0.0
                for i in range(d):
                    z = jumps[k, i, j]
                    br = jumps[k, i, l].real
                    bi = jumps[k, i, l].imag
                    ar += z.real * br + z.imag * bi
                    ai += z.real * bi - z.imag * br
                qr[k][j * d + l] = ar
                qi[k][j * d + l] = ai
                qr[m][j * d + l] += ar
                qi[m][j * d + l] += ai
    for kk in range(m + 1):
        q_start[kk] = nq
        for j in range(d):
            for l in range(d):
                if qr[kk][j * d + l] != 0.0 or qi[kk][j * d + l] != 0.0:
                    if nq >= MAXNZ:
                        raise ValueError("too many non-zero jump-operator entries")
                    q_row[nq] = <int>j
                    q_col[nq] = <int>l
                    q_re[nq] = qr[kk][j * d + l]
                    q_im[nq] = qi[kk][j * d + l]
                    nq += 1
    q_start[m + 1] = nq

    for i in range(d):
        xr[i] = psi0[i].real
        xi[i] = psi0[i].imag
    for k in range(m):
        counts[k] = 0

    sample = 0
    if store_states:
        for i in range(d):
            states_out[0, i] = xr[i] + 1j * xi[i]
    if store_counts:
        for k in range(m):
            counts_out[0, k] = 0
    if acc_rho:
        for i in range(d):
            for j in range(d):
                rho_acc[0, i, j] = rho_acc[0, i, j] + (xr[i] * xr[j] + xi[i] * xi[j]) + 1j * (xi[i] * xr[j] - xr[i] * xi[j])

    # psi is carried unnormalised; n2 = ||psi||^2 and every probability
    # comparison is scaled by n2 instead of dividing
    n2 = 0.0
    for i in range(d):
        n2 += xr[i] * xr[i] + xi[i] * xi[i]
    until_sample = sample_every
    until_renorm = RENORM_EVERY
    for step in range(n_steps):
        u = uniforms[step] * n2
        ptot = 0.0
        for e in range(q_start[m], q_start[m + 1]):
            i = q_row[e]
            j = q_col[e]
            ptot += xr[i] * (q_re[e] * xr[j] - q_im[e] * xi[j]) + xi[i] * (q_re[e] * xi[j] + q_im[e] * xr[j])
        if ptot > max_ptot * n2:
            max_ptot = ptot / n2
            if max_ptot > 0.5:
                status = STATUS_STEP_TOO_LARGE
                break

        if u < ptot:
            for k in range(m):
                nrm2 = 0.0
                for e in range(q_start[k], q_start[k + 1]):
                    i = q_row[e]
                    j = q_col[e]
                    nrm2 += xr[i] * (q_re[e] * xr[j] - q_im[e] * xi[j]) + xi[i] * (q_re[e] * xi[j] + q_im[e] * xr[j])
                probs[k] = nrm2
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
            for i in range(d):
                tr_[i] = 0.0
                ti[i] = 0.0
            for e in range(nz_start[chosen], nz_start[chosen + 1]):
                i = nz_row[e]
                j = nz_col[e]
                tr_[i] += nz_re[e] * xr[j] - nz_im[e] * xi[j]
                ti[i] += nz_re[e] * xi[j] + nz_im[e] * xr[j]
            nrm2 = 0.0
            for i in range(d):
                nrm2 += tr_[i] * tr_[i] + ti[i] * ti[i]
            inv = 1.0 / sqrt(nrm2)
            for i in range(d):
                xr[i] = tr_[i] * inv
                xi[i] = ti[i] * inv
            n2 = 0.0
            for i in range(d):
                n2 += xr[i] * xr[i] + xi[i] * xi[i]
            until_renorm = RENORM_EVERY
            counts[chosen] += 1
            if store_events and n_events < ev_cap:
                ev_step[n_events] = step
                ev_kind[n_events] = chosen
            n_events += 1
        else:
            nrm2 = 0.0
            for i in range(d):
                ar = 0.0
                ai = 0.0
                for j in range(d):
                    br = pr[i * d + j]
                    bi = pi[i * d + j]
                    ar += br * xr[j] - bi * xi[j]
                    ai += br * xi[j] + bi * xr[j]
                tr_[i] = ar
                ti[i] = ai
                nrm2 += ar * ar + ai * ai
            if nrm2 < 1e-24 * n2:
                status = STATUS_NORM_UNDERFLOW
                break
            for i in range(d):
                xr[i] = tr_[i]
                xi[i] = ti[i]
            n2 = nrm2
            until_renorm -= 1

        until_sample -= 1
        if until_renorm == 0 or until_sample == 0:
            inv = 1.0 / sqrt(n2)
            for i in range(d):
                xr[i] = xr[i] * inv
                xi[i] = xi[i] * inv
            n2 = 0.0
            for i in range(d):
                n2 += xr[i] * xr[i] + xi[i] * xi[i]
            until_renorm = RENORM_EVERY
        if until_sample == 0:
            until_sample = sample_every
            sample += 1
            if store_states:
                for i in range(d):
                    states_out[sample, i] = xr[i] + 1j * xi[i]
            if store_counts:
                for k in range(m):
                    counts_out[sample, k] = counts[k]
            if acc_rho:
                for i in range(d):
                    for j in range(d):
                        rho_acc[sample, i, j] = rho_acc[sample, i, j] + (xr[i] * xr[j] + xi[i] * xi[j]) + 1j * (xi[i] * xr[j] - xr[i] * xi[j])
            if acc_counts:
                for k in range(m):
                    counts_acc[sample, k] += counts[k]

    return n_events, max_ptot, status

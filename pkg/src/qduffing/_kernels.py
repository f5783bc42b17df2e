"""Numba kernels for the conditional-state steppers.

All kernels operate on raw complex coefficient vectors; the banded
Hamiltonian is passed as per-diagonal coefficient arrays (diagonal hd,
drive band h1 to be multiplied by cos(Omega t), and the +-2 / +-4 bands
h2, h4).  States are renormalized after every step.  Status codes
returned by the segment runners: 0 = ok, 2 = tail-weight abort,
3 = midpoint iteration failed to converge.
"""

import numpy as np
from numba import njit

FASTMATH = {"contract", "reassoc", "arcp"}

STATUS_OK = 0
STATUS_TAIL_ABORT = 2
STATUS_NO_CONVERGENCE = 3


@njit(cache=True, fastmath=FASTMATH)
def _expectations(c, s1, nv):
    """(nrm2, <a>, <a^2>, <n>) with expectations taken on the normalized state."""
    N = c.size
    nrm2 = 0.0
    en = 0.0
    for n in range(N):
        w = c[n].real * c[n].real + c[n].imag * c[n].imag
        nrm2 += w
        en += nv[n] * w
    ea = 0.0 + 0.0j
    for n in range(N - 1):
        ea += s1[n] * np.conj(c[n]) * c[n + 1]
    ea2 = 0.0 + 0.0j
    for n in range(N - 2):
        ea2 += s1[n] * s1[n + 1] * np.conj(c[n]) * c[n + 2]
    return nrm2, ea / nrm2, ea2 / nrm2, en / nrm2


@njit(cache=True, fastmath=FASTMATH)
def _apply_hamiltonian(c, out, coswt, hd, h1, h2, h4):
    """out = H(t) c for the banded Hamiltonian (bands 0, +-1 drive, +-2, +-4)."""
    N = c.size
    for n in range(N):
        acc = (hd[n] + 0.0j) * c[n]
        if n + 1 < N:
            acc += coswt * h1[n] * c[n + 1]
        if n >= 1:
            acc += coswt * h1[n - 1] * c[n - 1]
        if n + 2 < N:
            acc += h2[n] * c[n + 2]
        if n >= 2:
            acc += np.conj(h2[n - 2]) * c[n - 2]
        if n + 4 < N:
            acc += h4[n] * c[n + 4]
        if n >= 4:
            acc += h4[n - 4] * c[n - 4]
        out[n] = acc
    return out


@njit(cache=True, fastmath=FASTMATH)
def _renorm_and_tail(c):
    N = c.size
    nrm2 = 0.0
    for n in range(N):
        nrm2 += c[n].real * c[n].real + c[n].imag * c[n].imag
    inv = 1.0 / np.sqrt(nrm2)
    for n in range(N):
        c[n] *= inv
    tail = 0.0
    for n in range(max(0, N - 4), N):
        tail += c[n].real * c[n].real + c[n].imag * c[n].imag
    return tail


@njit(cache=True, fastmath=FASTMATH)
def _ito_rhs(c, Hc, ac, drift, s1, nv, Gamma, coswt, hd, h1, h2, h4):
    """Ito drift of the normalized SSE; also fills ac = a c and returns <a>."""
    N = c.size
    _apply_hamiltonian(c, Hc, coswt, hd, h1, h2, h4)
    nrm2, ea, ea2, en = _expectations(c, s1, nv)
    for n in range(N - 1):
        ac[n] = s1[n] * c[n + 1]
    ac[N - 1] = 0.0
    ea_c = np.conj(ea)
    ea_abs2 = ea.real * ea.real + ea.imag * ea.imag
    for n in range(N):
        drift[n] = (-1j * Hc[n]
                    - Gamma * nv[n] * c[n]
                    + 2.0 * Gamma * ea_c * ac[n]
                    - Gamma * ea_abs2 * c[n])
    return ea, ea2, en


@njit(cache=True, fastmath=FASTMATH)
def run_segment_euler(c, t0, dt, dWs, phi, Omega, hd, h1, h2, h4, s1, nv,
                      Gamma, abort_tail):
    """Euler-Maruyama steps of the Ito SSE with per-step renormalization.

    Mutates c in place; returns (status, steps_done, max_tail).
    """
    N = c.size
    Hc = np.empty(N, dtype=np.complex128)
    ac = np.empty(N, dtype=np.complex128)
    drift = np.empty(N, dtype=np.complex128)
    eiphi = np.cos(phi) + 1j * np.sin(phi)
    sq2G = np.sqrt(2.0 * Gamma)
    max_tail = 0.0
    for k in range(dWs.size):
        t = t0 + k * dt
        coswt = np.cos(Omega * t)
        ea, _, _ = _ito_rhs(c, Hc, ac, drift, s1, nv, Gamma, coswt, hd, h1, h2, h4)
        dW = dWs[k]
        for n in range(N):
            noise = sq2G * eiphi * (ac[n] - ea * c[n])
            c[n] = c[n] + drift[n] * dt + noise * dW
        tail = _renorm_and_tail(c)
        if tail > max_tail:
            max_tail = tail
        if tail >= abort_tail or not np.isfinite(tail):
            return STATUS_TAIL_ABORT, k + 1, max_tail
    return STATUS_OK, dWs.size, max_tail


@njit(cache=True, fastmath=FASTMATH)
def run_segment_midpoint(c, t0, dt, dWs, phi, Omega, hd, h1, h2, h4, s1, nv,
                         Gamma, abort_tail, tol, maxit):
    """Semi-implicit midpoint steps of the Stratonovich form of the SSE.

    The drift is the Ito drift plus the Ito->Stratonovich correction
        -Gamma e^{2i phi} [(a - <a>)^2 - (<a^2> - <a>^2)] psi
        + Gamma (<n> - |<a>|^2) psi,
    and both drift and noise coefficients are evaluated at the midpoint
    state, solved by fixed-point iteration.  Mutates c in place; returns
    (status, steps_done, max_tail).
    """
    N = c.size
    Hc = np.empty(N, dtype=np.complex128)
    ac = np.empty(N, dtype=np.complex128)
    drift = np.empty(N, dtype=np.complex128)
    cm = np.empty(N, dtype=np.complex128)
    cm_new = np.empty(N, dtype=np.complex128)
    eiphi = np.cos(phi) + 1j * np.sin(phi)
    e2iphi = eiphi * eiphi
    sq2G = np.sqrt(2.0 * Gamma)
    max_tail = 0.0
    tol2 = tol * tol
    for k in range(dWs.size):
        tm = t0 + (k + 0.5) * dt
        coswt = np.cos(Omega * tm)
        dW = dWs[k]
        for n in range(N):
            cm[n] = c[n]
        converged = False
        for _ in range(maxit):
            ea, ea2, en = _ito_rhs(cm, Hc, ac, drift, s1, nv, Gamma, coswt,
                                   hd, h1, h2, h4)
            ea_abs2 = ea.real * ea.real + ea.imag * ea.imag
            scal = 2.0 * ea * ea - ea2
            delta2 = 0.0
            for n in range(N):
                aac = s1[n] * ac[n + 1] if n + 1 < N else 0.0j
                corr = (-Gamma * e2iphi * (aac - 2.0 * ea * ac[n] + scal * cm[n])
                        + Gamma * (en - ea_abs2) * cm[n])
                noise = sq2G * eiphi * (ac[n] - ea * cm[n])
                val = c[n] + 0.5 * ((drift[n] + corr) * dt + noise * dW)
                d = val - cm[n]
                delta2 += d.real * d.real + d.imag * d.imag
                cm_new[n] = val
            for n in range(N):
                cm[n] = cm_new[n]
            if delta2 < tol2:
                converged = True
                break
        if not converged:
            return STATUS_NO_CONVERGENCE, k + 1, max_tail
        for n in range(N):
            c[n] = 2.0 * cm[n] - c[n]
        tail = _renorm_and_tail(c)
        if tail > max_tail:
            max_tail = tail
        if tail >= abort_tail or not np.isfinite(tail):
            return STATUS_TAIL_ABORT, k + 1, max_tail
    return STATUS_OK, dWs.size, max_tail


@njit(cache=True)
def count_peak_rows(pdf, eps):
    """Local maxima per row, merging plateaus of equal values into one peak."""
    M, G = pdf.shape
    out = np.zeros(M, dtype=np.int64)
    for k in range(M):
        count = 0
        rising = False
        for j in range(1, G):
            if pdf[k, j] > pdf[k, j - 1]:
                rising = True
            elif pdf[k, j] < pdf[k, j - 1]:
                if rising and pdf[k, j - 1] > eps:
                    count += 1
                rising = False
        out[k] = count
    return out


@njit(cache=True, fastmath=FASTMATH)
def fold_product(c, psi_t, two_m, out):
    """out[j, r] = sum over n congruent to r (mod 2M) of c[n] psi_t[j, n]."""
    G, N = psi_t.shape
    if two_m >= N:
        for j in range(G):
            for n in range(N):
                out[j, n] = c[n] * psi_t[j, n]
            for n in range(N, two_m):
                out[j, n] = 0.0
    else:
        for j in range(G):
            for r in range(two_m):
                out[j, r] = 0.0
            for n in range(N):
                out[j, n % two_m] += c[n] * psi_t[j, n]


@njit(cache=True)
def counts_from_amp(amp, M, abs_floor, rel_floor):
    """Peak counts of |amp[:, m]|^2 for the first M angle columns.

    The counting floor per angle is max(abs_floor, rel_floor * column max),
    which keeps double-precision noise in the far tails of the density from
    being counted as turning points.
    """
    G = amp.shape[0]
    out = np.zeros(M, dtype=np.int64)
    buf = np.empty(G, dtype=np.float64)
    for m in range(M):
        vmax = 0.0
        for j in range(G):
            v = amp[j, m].real ** 2 + amp[j, m].imag ** 2
            buf[j] = v
            if v > vmax:
                vmax = v
        eps = rel_floor * vmax
        if abs_floor > eps:
            eps = abs_floor
        count = 0
        rising = False
        for j in range(1, G):
            if buf[j] > buf[j - 1]:
                rising = True
            elif buf[j] < buf[j - 1]:
                if rising and buf[j - 1] > eps:
                    count += 1
                rising = False
        out[m] = count
    return out

"""Jitted chain kernels.

Random numbers are drawn by the caller and passed in as blocks, so these
kernels and their numpy twins consume identical streams.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath={"reassoc", "contract"})
def pr_logpost_grad(theta, data):
    # one pass over A: row j is reused from cache for the dot and the axpy.
    # reassoc/contract keep the kernel odd in theta; nnan/ninf stay off so
    # divergence is still detectable.
    A, y, lam, vs2 = data
    m, p = A.shape
    grad = np.zeros(p)
    risk = 0.0
    for j in range(m):
        u = 0.0
        for i in range(p):
            u += A[j, i] * theta[i]
        res = u * u - y[j]
        risk += res * res
        c = res * u
        for i in range(p):
            grad[i] += c * A[j, i]
    scale = -lam / m
    lp = -lam * risk / (4.0 * m)
    for i in range(p):
        t2 = vs2 + theta[i] * theta[i]
        lp -= 2.0 * math.log(t2)
        grad[i] = grad[i] * scale - 4.0 * theta[i] / t2
    return lp, grad


@njit(cache=True)
def gauss_logpost_grad(theta, data):
    mean, prec = data
    p = theta.shape[0]
    grad = np.empty(p)
    lp = 0.0
    for i in range(p):
        d = theta[i] - mean[i]
        lp -= 0.5 * prec[i] * d * d
        grad[i] = -prec[i] * d
    return lp, grad


@njit(cache=True)
def _all_finite(x):
    for i in range(x.shape[0]):
        if not math.isfinite(x[i]):
            return False
    return True


@njit(cache=True)
def _norm(x):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * x[i]
    return math.sqrt(s)


@njit(cache=True)
def lmc_block(f, data, theta, gamma, h1, noise, start, burn_in, thin, samples, trace):
    n, p = noise.shape
    sq = math.sqrt(2.0 * gamma)
    for k in range(n):
        i = start + k
        lp, g = f(theta, data)
        trace[i] = lp
        for l in range(p):
            theta[l] = theta[l] + gamma * g[l] + sq * noise[k, l]
        if not _all_finite(theta):
            return i
        if h1 < math.inf:
            nrm = _norm(theta)
            if nrm > h1:
                r = h1 / nrm
                for l in range(p):
                    theta[l] *= r
        if i >= burn_in and (i - burn_in) % thin == 0:
            samples[(i - burn_in) // thin, :] = theta
    return -1


@njit(cache=True)
def mala_block(f, data, theta, grad, lp, gamma, h1, noise, unif, start, burn_in,
               thin, window, target, adapt, samples, trace, counters):
    n, p = noise.shape
    prop = np.empty(p)
    for k in range(n):
        i = start + k
        sq = math.sqrt(2.0 * gamma)
        for l in range(p):
            prop[l] = theta[l] + gamma * grad[l] + sq * noise[k, l]
        accepted = False
        if _all_finite(prop) and (h1 == math.inf or _norm(prop) <= h1):
            lp_p, g_p = f(prop, data)
            if math.isfinite(lp_p) and _all_finite(g_p):
                rev = 0.0
                fwd = 0.0
                for l in range(p):
                    d = theta[l] - prop[l] - gamma * g_p[l]
                    rev += d * d
                    e = prop[l] - theta[l] - gamma * grad[l]
                    fwd += e * e
                log_ratio = lp_p - lp - (rev - fwd) / (4.0 * gamma)
                if log_ratio >= 0.0 or math.log(unif[k]) < log_ratio:
                    accepted = True
                    theta[:] = prop
                    grad[:] = g_p
                    lp = lp_p
        if not math.isfinite(lp):
            return i, lp, gamma
        trace[i] = lp
        if accepted:
            counters[2] += 1
        if i < burn_in:
            if accepted:
                counters[0] += 1
            if adapt and (i + 1) % window == 0:
                rate = counters[0] / window
                if rate > target:
                    gamma *= 1.1
                elif rate < target:
                    gamma /= 1.1
                counters[0] = 0
        else:
            if accepted:
                counters[1] += 1
            if (i - burn_in) % thin == 0:
                samples[(i - burn_in) // thin, :] = theta
    return -1, lp, gamma

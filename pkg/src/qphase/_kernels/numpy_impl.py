"""Pure-numpy twins of the jitted kernels (same signatures, same streams)."""
import math

import numpy as np


def pr_logpost_grad(theta, data):
    A, y, lam, vs2 = data
    m = A.shape[0]
    # overflow on a diverging chain is detected by the callers' finiteness checks
    with np.errstate(over="ignore", invalid="ignore"):
        u = A @ theta
        res = u * u - y
        t2 = vs2 + theta * theta
        lp = -lam * float(res @ res) / (4.0 * m) - 2.0 * float(np.sum(np.log(t2)))
        grad = (A.T @ (res * u)) * (-lam / m) - 4.0 * theta / t2
    return lp, grad


def gauss_logpost_grad(theta, data):
    mean, prec = data
    d = theta - mean
    with np.errstate(over="ignore", invalid="ignore"):
        return -0.5 * float(np.sum(prec * d * d)), -prec * d


def lmc_block(f, data, theta, gamma, h1, noise, start, burn_in, thin, samples, trace):
    sq = math.sqrt(2.0 * gamma)
    finite_h1 = h1 < math.inf
    for k in range(noise.shape[0]):
        i = start + k
        lp, g = f(theta, data)
        trace[i] = lp
        theta += gamma * g + sq * noise[k]
        if not np.all(np.isfinite(theta)):
            return i
        if finite_h1:
            nrm = math.sqrt(float(theta @ theta))
            if nrm > h1:
                theta *= h1 / nrm
        if i >= burn_in and (i - burn_in) % thin == 0:
            samples[(i - burn_in) // thin] = theta
    return -1


def mala_block(f, data, theta, grad, lp, gamma, h1, noise, unif, start, burn_in,
               thin, window, target, adapt, samples, trace, counters):
    for k in range(noise.shape[0]):
        i = start + k
        prop = theta + gamma * grad + math.sqrt(2.0 * gamma) * noise[k]
        accepted = False
        if np.all(np.isfinite(prop)) and (h1 == math.inf or math.sqrt(float(prop @ prop)) <= h1):
            lp_p, g_p = f(prop, data)
            if math.isfinite(lp_p) and np.all(np.isfinite(g_p)):
                d = theta - prop - gamma * g_p
                e = prop - theta - gamma * grad
                log_ratio = lp_p - lp - (float(d @ d) - float(e @ e)) / (4.0 * gamma)
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
                samples[(i - burn_in) // thin] = theta
    return -1, lp, gamma

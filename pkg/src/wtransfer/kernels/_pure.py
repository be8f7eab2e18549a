"""numpy implementation of the block evaluator (reference and fallback)."""

import numpy as np

UNIT_ROUNDOFF = 2.0**-53


def decode(lo, hi, start, count):
    """Integer points with linear indices start..start+count-1 of the box lo..hi.

    The last coordinate varies fastest.
    """
    lo = np.asarray(lo, dtype=np.int64)
    sizes = np.asarray(hi, dtype=np.int64) - lo + 1
    idx = np.arange(start, start + count, dtype=np.int64)
    out = np.empty((count, len(lo)), dtype=np.int64)
    for j in range(len(lo) - 1, -1, -1):
        out[:, j] = idx % sizes[j] + lo[j]
        idx //= sizes[j]
    return out


def eval_block(theta, shift, inv_sigma, inv_rho, log_scale, lo, hi, start, count):
    """Height and two-sided error bounds for a block of integer points.

    For each point x returns
      logh  = max_j log|x_j| * inv_sigma_j,
      elo <= max_i inv_rho_i * (log|dist(theta_i . x + shift_i, Z)| - log_scale_i) <= ehi,
    where the enclosure accounts for every floating rounding step.
    """
    theta = np.asarray(theta, dtype=np.float64)
    shift = np.asarray(shift, dtype=np.float64)
    m = theta.shape[1]
    x = decode(lo, hi, start, count).astype(np.float64)
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        logh = np.max(np.log(ax) * inv_sigma, axis=1)
    v = x @ theta.T + shift
    mag = ax @ np.abs(theta).T + np.abs(shift) + np.abs(v)
    beta = (m + 4) * UNIT_ROUNDOFF * mag + 1e-30 * ax.sum(axis=1)[:, None] + 1e-300
    r = np.abs(v - np.rint(v))
    with np.errstate(divide="ignore"):
        lo_terms = (np.log(np.maximum(r - beta, 0.0)) - log_scale) * inv_rho
        hi_terms = (np.log(r + beta) - log_scale) * inv_rho
    elo = lo_terms.max(axis=1)
    ehi = hi_terms.max(axis=1)
    elo = elo - 1e-12 * (np.abs(elo) + 1.0)
    ehi = ehi + 1e-12 * (np.abs(ehi) + 1.0)
    return logh, elo, ehi

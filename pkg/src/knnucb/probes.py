"""Monte Carlo diagnostics: density-tail exponent, margin exponent, pdf mass."""

from dataclasses import dataclass

import numpy as np


class DegenerateProbeError(ValueError):
    pass


@dataclass
class ProbeResult:
    u: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    slope: float | None
    n_samples: int


def _loglog_slope(u, p):
    keep = p > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(u[keep]), np.log(p[keep]), 1)[0])


def tail_u_grid(dist, rng, probs=None, n_pilot=200_000):
    """Density levels whose tail probabilities ``P(f(X) <= u)`` are ``probs``.

    Uses a pilot sample, so the grid is independent of the probe's own draws.
    The default levels 1e-4 .. 1e-2 sit in the tail where the exponent governs.
    """
    if probs is None:
        probs = np.geomspace(1e-4, 1e-2, 12)
    fx = dist.pdf(dist.sample(rng, n_pilot))
    return np.quantile(fx, probs)


def tail_exponent_probe(dist, u_grid, n_samples, rng, chunk=250_000):
    """Estimate ``P(f(X) <= u)`` at each u and fit the log-log slope."""
    u = np.asarray(u_grid, dtype=np.float64)
    if np.any(np.diff(u) <= 0):
        raise ValueError("u_grid must be strictly increasing")
    if n_samples < 10_000:
        raise ValueError("tail probes need at least 1e4 samples")
    hits = np.zeros(u.shape[0], dtype=np.int64)
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        fx = np.sort(dist.pdf(dist.sample(rng, n)))
        hits += np.searchsorted(fx, u, side="right")
        done += n
    p = hits / n_samples
    if not p.any():
        raise DegenerateProbeError("every tail estimate is zero; move the u grid up")
    se = np.sqrt(p * (1 - p) / n_samples)
    return ProbeResult(u, p, se, _loglog_slope(u, p), n_samples)


def margin_probe(family, dist, a, u_grid, n_samples, rng):
    """Estimate ``P(0 < eta*(X) - eta_a(X) < u)`` at each u."""
    u = np.asarray(u_grid, dtype=np.float64)
    X = dist.sample(rng, n_samples)
    eta = family.means(X)
    gap = eta.max(axis=1) - eta[:, a]
    gap = np.sort(gap[gap > 0])
    p = np.searchsorted(gap, u, side="left") / n_samples
    se = np.sqrt(p * (1 - p) / n_samples)
    return ProbeResult(u, p, se, _loglog_slope(u, p), n_samples)


def mc_total_mass(dist, lo, hi, n_samples, rng):
    """Monte Carlo integral of the pdf over the box [lo, hi]: (estimate, stderr)."""
    lo, hi = np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64)
    volume = float(np.prod(hi - lo))
    U = rng.uniform(lo, hi, size=(n_samples, lo.shape[0]))
    vals = volume * dist.pdf(U)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))

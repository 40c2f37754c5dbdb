"""
Proximal operators for the pattern-shaping penalties, in their natural
complex modulus/phase form.

``prox_h(v, t)`` returns the minimizer of (1/2)||x - v||^2 + t*h(x).
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

__all__ = ["prox_l1", "prox_linf", "prox_group_l2", "group_shrink", "project_l1_ball"]


def prox_l1(v: np.ndarray, t: float) -> np.ndarray:
    """Elementwise complex soft threshold: shrink each modulus by t, keep the
    phase, zero anything inside the threshold."""
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    v = np.asarray(v)
    mod = np.abs(v)
    scale = np.maximum(0.0, 1.0 - t / np.where(mod > 0, mod, 1.0))
    return v * scale


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : sum |x_i| <= radius}.

    Moduli are projected with the sorted water-filling rule (deterministic
    tie-breaking), phases are preserved.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    v = np.asarray(v)
    mod = np.abs(v)
    if mod.sum() <= radius:
        return v.copy()
    if radius == 0.0:
        return np.zeros_like(v)
    u = np.sort(mod)[::-1]
    cumsum = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = np.nonzero(u > (cumsum - radius) / j)[0][-1]
    theta = (cumsum[rho] - radius) / (rho + 1)
    shrunk = np.maximum(mod - theta, 0.0)
    return v * np.divide(shrunk, mod, out=np.zeros_like(mod), where=mod > 0)


def prox_linf(v: np.ndarray, t: float) -> np.ndarray:
    """Prox of t*max_i |v_i| via Moreau decomposition: v minus the projection
    of v onto the L1 ball of radius t."""
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    return np.asarray(v) - project_l1_ball(v, t)


def group_shrink(v: np.ndarray, groups: Sequence[np.ndarray], t: float) -> np.ndarray:
    """Blockwise shrinkage without partition validation; inner-loop form of
    prox_group_l2 for callers that have already checked the groups."""
    out = v.copy()
    for g in groups:
        norm = np.linalg.norm(v[g])
        out[g] = 0.0 if norm <= t else v[g] * (1.0 - t / norm)
    return out


def prox_group_l2(v: np.ndarray, groups: Sequence[np.ndarray], t: float) -> np.ndarray:
    """Blockwise shrinkage: each index group is scaled by
    max(0, 1 - t/||v_g||) (zeroed when its norm is inside the threshold).

    ``groups`` must partition the indices of v.
    """
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")
    v = np.asarray(v)
    groups = [np.asarray(g).ravel() for g in groups]
    seen = np.concatenate(groups) if groups else np.array([])
    if seen.size != v.size or np.union1d(seen, np.arange(v.size)).size != v.size or np.unique(seen).size != seen.size:
        raise ValueError("groups must partition the indices of v")
    return group_shrink(v, groups, t)

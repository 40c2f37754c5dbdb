"""Shared fixtures (the packaged benchmark scenario and its derived objects)
plus the brute-force prox oracle used by the prox and acceptance tests."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.optimize

from caponshape import (
    build_manifold,
    sample_covariance,
    split_manifold,
    steering_vector,
    synthesize_snapshots,
)
from caponshape.cli import load_run_config


@pytest.fixture(scope="session")
def config():
    return load_run_config()


@pytest.fixture(scope="session")
def scenario(config):
    return config.scenario


@pytest.fixture(scope="session")
def manifold(scenario):
    return build_manifold(scenario.geometry)


@pytest.fixture(scope="session")
def split(manifold, scenario, config):
    return split_manifold(manifold, scenario.presumed_doa_deg, config.b)


@pytest.fixture(scope="session")
def a0(scenario):
    return steering_vector(scenario.geometry, scenario.presumed_doa_deg)


@pytest.fixture(scope="session")
def snapshots(scenario):
    return synthesize_snapshots(scenario)


@pytest.fixture(scope="session")
def covariance(snapshots):
    return sample_covariance(snapshots.data)


def grid_minimize(h_rows, v, t, pts_per_dim=11, zooms=12):
    """Nested grid search for min_x 0.5||x - v||^2 + t*h(x) over the real
    embedding of complex x.

    ``h_rows`` evaluates h on a (P, n) array of candidate rows at once. Each
    zoom re-centers an 11-points-per-axis grid on the incumbent and shrinks
    the half-width to 1.5 grid steps (a factor ~3.3), so 12 zooms resolve the
    minimizer to ~1e-6 from an O(1) starting box.
    """
    n = v.size
    center = np.zeros(2 * n)
    radius = float(np.abs(v).max() + t + 0.5)
    for _ in range(zooms):
        axes = [np.linspace(c - radius, c + radius, pts_per_dim) for c in center]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        x = pts[:, :n] + 1j * pts[:, n:]
        obj = 0.5 * np.sum(np.abs(x - v[np.newaxis, :]) ** 2, axis=1) + t * h_rows(x)
        center = pts[int(np.argmin(obj))]
        radius = 1.5 * (2.0 * radius / (pts_per_dim - 1))
    return center[:n] + 1j * center[n:]


def linf_polish(x0, v, t):
    """Refine a max-modulus prox candidate by solving the smooth epigraph
    form  min 0.5||x - v||^2 + t*s  s.t.  s >= |x_i|  with an SQP step.

    The pure grid walk can stall along the |x_i| = |x_j| tie valleys of the
    max-modulus penalty; the epigraph problem is smooth there, and the
    objective is convex, so the polish is global. Returns whichever of the
    two candidates has the lower objective.
    """
    n = v.size

    def unpack(p):
        return p[:n] + 1j * p[n : 2 * n], p[2 * n]

    def objective(p):
        x, s = unpack(p)
        return 0.5 * float(np.sum(np.abs(x - v) ** 2)) + t * s

    def objective_jac(p):
        x, _ = unpack(p)
        d = x - v
        return np.concatenate([d.real, d.imag, [t]])

    def con_fun(p, i):
        x, s = unpack(p)
        return s - abs(x[i])

    def con_jac(p, i):
        x, _ = unpack(p)
        g = np.zeros(2 * n + 1)
        mod = abs(x[i])
        if mod > 1e-12:
            g[i] = -x[i].real / mod
            g[n + i] = -x[i].imag / mod
        g[-1] = 1.0
        return g

    cons = [
        {"type": "ineq", "fun": (lambda p, i=i: con_fun(p, i)), "jac": (lambda p, i=i: con_jac(p, i))}
        for i in range(n)
    ]
    p0 = np.concatenate([x0.real, x0.imag, [np.abs(x0).max() + 1e-6]])
    res = scipy.optimize.minimize(
        objective, p0, jac=objective_jac, method="SLSQP", constraints=cons,
        options=dict(maxiter=200, ftol=1e-14),
    )
    x_ref = res.x[:n] + 1j * res.x[n : 2 * n]

    def full(x):
        return 0.5 * float(np.sum(np.abs(x - v) ** 2)) + t * float(np.abs(x).max())

    return x_ref if full(x_ref) <= full(x0) else x0

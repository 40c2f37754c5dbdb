"""
Beam patterns, output SINR, the mainlobe-to-sidelobe power ratio, gamma
sweeps, and the Monte Carlo benchmark.

All quality metrics are computed against the scenario's TRUE source angles
and powers; the beamformers themselves only ever see the presumed steering
direction and the sample covariance, which is what makes the mismatch
experiments meaningful.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .arrays import (
    ArrayManifold,
    ManifoldSplit,
    Scenario,
    build_manifold,
    sample_covariance,
    split_manifold,
    steering_vector,
    synthesize_snapshots,
)
from .beamformers import BeamformerSpec, solve_method
from .solver import NumericalError, SolverOptions

__all__ = [
    "DB_FLOOR",
    "DEFAULT_GAMMA_GRID",
    "BeamPattern",
    "MethodSinr",
    "SinrReport",
    "SweepPoint",
    "beam_pattern",
    "write_pattern_csv",
    "sinr",
    "optimal_sinr",
    "mspr",
    "sidelobe_mean_db",
    "gamma_sweep",
    "select_gamma",
    "monte_carlo",
]

# finite stand-in for -inf when writing files
DB_FLOOR = -300.0

# 10 points per decade over [1e-3, 1e+1]
DEFAULT_GAMMA_GRID = tuple(np.logspace(-3.0, 1.0, 41))


@dataclass(frozen=True, eq=False)
class BeamPattern:
    """Complex array gains g_n = w^H a(alpha_n) over the manifold grid.

    ``power_db`` is 20 log10 of the gain moduli after dividing the gain
    vector by its Euclidean norm, so the normalized gains have unit L2 norm;
    exact zeros give -inf (floored only when serialized).
    """

    angles_deg: np.ndarray
    gains: np.ndarray
    power_db: np.ndarray


@dataclass(frozen=True)
class MethodSinr:
    method: BeamformerSpec
    mean_sinr_db: float
    std_db: float
    trials: int
    failures: int
    per_trial_db: tuple = field(repr=False, default=())


@dataclass(frozen=True)
class SinrReport:
    """Per-method Monte Carlo SINR statistics for one mismatch value."""

    methods: tuple
    mismatch_deg: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "methods": [
                {
                    "kind": entry.method.kind.value,
                    "gamma": 0.0 if entry.method.gamma is None else entry.method.gamma,
                    "mean_sinr_db": entry.mean_sinr_db,
                    "std_db": entry.std_db,
                    "trials": entry.trials,
                    "failures": entry.failures,
                }
                for entry in self.methods
            ],
            "mismatch_deg": self.mismatch_deg,
            "seed": self.seed,
        }


def beam_pattern(w: np.ndarray, manifold: ArrayManifold) -> BeamPattern:
    """Evaluate w against every manifold column and L2-normalize."""
    w = np.asarray(w, dtype=complex).ravel()
    if w.size != manifold.matrix.shape[0]:
        raise ValueError("weight vector length does not match the manifold")
    gains = w.conj() @ manifold.matrix
    norm = np.linalg.norm(gains)
    with np.errstate(divide="ignore"):
        if norm == 0.0:
            power_db = np.full(gains.size, -np.inf)
        else:
            power_db = 20.0 * np.log10(np.abs(gains) / norm)
    return BeamPattern(angles_deg=manifold.angles_deg.copy(), gains=gains, power_db=power_db)


def write_pattern_csv(pattern: BeamPattern, path) -> None:
    """CSV with header angle_deg,gain_db,gain_re,gain_im, one row per angle.

    The complex columns hold the L2-normalized gains (consistent with
    gain_db); floats carry 9 significant digits and -inf is floored at
    -300 dB.
    """
    norm = np.linalg.norm(pattern.gains)
    unit = pattern.gains / norm if norm > 0 else pattern.gains
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["angle_deg", "gain_db", "gain_re", "gain_im"])
        for angle, g, db in zip(pattern.angles_deg, unit, pattern.power_db):
            floored = DB_FLOOR if not math.isfinite(db) else max(db, DB_FLOOR)
            writer.writerow([f"{angle:.9g}", f"{floored:.9g}", f"{g.real:.9g}", f"{g.imag:.9g}"])


def _interference_noise_power(w: np.ndarray, scenario: Scenario) -> float:
    geom = scenario.geometry
    total = scenario.noise_power * float(np.linalg.norm(w) ** 2)
    for interferer in scenario.interferers:
        a_j = steering_vector(geom, interferer.doa_deg)
        total += interferer.power * abs(w.conj() @ a_j) ** 2
    return total


def sinr(w: np.ndarray, scenario: Scenario) -> float:
    """Output SINR in dB against the scenario's true sources.

    sigma_s^2 |w^H a(theta_0)|^2 over w^H (sum_j sigma_j^2 a_j a_j^H +
    sigma_n^2 I) w, floored at -300 dB when the numerator vanishes.
    Invariant under any nonzero complex scaling of w.
    """
    w = np.asarray(w, dtype=complex).ravel()
    if np.linalg.norm(w) == 0:
        raise ValueError("weight vector must be nonzero")
    a0 = steering_vector(scenario.geometry, scenario.soi.doa_deg)
    numerator = scenario.soi.power * abs(w.conj() @ a0) ** 2
    if numerator == 0.0:
        return DB_FLOOR
    value = 10.0 * math.log10(numerator / _interference_noise_power(w, scenario))
    return max(value, DB_FLOOR)


def optimal_sinr(scenario: Scenario) -> float:
    """Best achievable SINR (dB) given the true interference-plus-noise
    covariance: sigma_s^2 a_0^H R_in^-1 a_0."""
    geom = scenario.geometry
    a0 = steering_vector(geom, scenario.soi.doa_deg)
    r_in = scenario.noise_power * np.eye(geom.num_sensors, dtype=complex)
    for interferer in scenario.interferers:
        a_j = steering_vector(geom, interferer.doa_deg)
        r_in += interferer.power * np.outer(a_j, a_j.conj())
    x = scipy.linalg.cho_solve(scipy.linalg.cho_factor(r_in), a0)
    return 10.0 * math.log10(scenario.soi.power * float(np.real(a0.conj() @ x)))


def mspr(w: np.ndarray, split: ManifoldSplit) -> float:
    """Mainlobe-to-sidelobe power ratio ||A_M^H w||^2 / ||A_S^H w||^2
    (linear; +inf when the sidelobe response is exactly zero)."""
    w = np.asarray(w, dtype=complex).ravel()
    main = float(np.linalg.norm(split.a_main.conj().T @ w) ** 2)
    side = float(np.linalg.norm(split.a_side.conj().T @ w) ** 2)
    if side == 0.0:
        return math.inf
    return main / side


def sidelobe_mean_db(w: np.ndarray, manifold: ArrayManifold, split: ManifoldSplit) -> float:
    """Mean normalized sidelobe power of w's beam pattern, in dB."""
    pattern = beam_pattern(w, manifold)
    norm = np.linalg.norm(pattern.gains)
    if norm == 0.0:
        return DB_FLOOR
    power = np.abs(pattern.gains[split.sidelobe_indices] / norm) ** 2
    mean = float(power.mean())
    if mean == 0.0:
        return DB_FLOOR
    return max(10.0 * math.log10(mean), DB_FLOOR)


@dataclass(frozen=True)
class SweepPoint:
    gamma: float
    sinr_db: float
    sidelobe_db: float
    mspr: float


def gamma_sweep(
    method: BeamformerSpec,
    scenario: Scenario,
    manifold: ArrayManifold | None = None,
    b: int = 15,
    grid=DEFAULT_GAMMA_GRID,
    options: SolverOptions = SolverOptions(),
) -> list:
    """Solve one method over a gamma grid on a single mismatch-free draw.

    The draw uses the scenario's own seed with the true SOI direction forced
    to the presumed one; each grid point records output SINR, mean sidelobe
    level, and the mainlobe-to-sidelobe ratio.
    """
    if len(grid) == 0:
        raise ValueError("gamma grid must be nonempty")
    if manifold is None:
        manifold = build_manifold(scenario.geometry)
    validation = scenario.with_soi_doa(scenario.presumed_doa_deg)
    split = split_manifold(manifold, validation.presumed_doa_deg, b)
    a = steering_vector(validation.geometry, validation.presumed_doa_deg)
    snapshots = synthesize_snapshots(validation)
    r = sample_covariance(snapshots.data)
    points = []
    for gamma in grid:
        result = solve_method(method.with_gamma(float(gamma)), r, manifold, split, a, snapshots.data, options)
        points.append(
            SweepPoint(
                gamma=float(gamma),
                sinr_db=sinr(result.weights, validation),
                sidelobe_db=sidelobe_mean_db(result.weights, manifold, split),
                mspr=mspr(result.weights, _resolve_metric_split(method, manifold, split)),
            )
        )
    return points


def _resolve_metric_split(method: BeamformerSpec, manifold: ArrayManifold, split: ManifoldSplit):
    if method.b is None or method.b == split.b:
        return split
    center_deg = float(manifold.angles_deg[split.center_index])
    return split_manifold(manifold, center_deg, method.b)


def select_gamma(
    method: BeamformerSpec,
    scenario: Scenario,
    manifold: ArrayManifold | None = None,
    b: int = 15,
    grid=DEFAULT_GAMMA_GRID,
    options: SolverOptions = SolverOptions(),
) -> float:
    """Argmax-SINR gamma over the sweep grid (first hit on ties)."""
    points = gamma_sweep(method, scenario, manifold, b, grid, options)
    best = max(range(len(points)), key=lambda i: (points[i].sinr_db, -i))
    return points[best].gamma


def monte_carlo(
    scenario: Scenario,
    methods,
    trials: int,
    base_seed: int,
    mismatch_deg: float = 0.0,
    manifold: ArrayManifold | None = None,
    b: int = 15,
    options: SolverOptions = SolverOptions(),
) -> SinrReport:
    """Repeated-draw SINR benchmark.

    Trial t re-synthesizes the scenario with seed base_seed + t and the true
    SOI direction moved to presumed + mismatch_deg; every method solves
    against the presumed direction and is scored against the truth. Methods
    with gamma = auto are tuned once by sweep on a held-out draw (seed
    base_seed - 1, no mismatch) and the tuned value is frozen across trials.
    Solver failures are excluded from the statistics and counted.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    methods = list(methods)
    if not methods:
        raise ValueError("methods list must be nonempty")
    if manifold is None:
        manifold = build_manifold(scenario.geometry)
    split = split_manifold(manifold, scenario.presumed_doa_deg, b)
    a = steering_vector(scenario.geometry, scenario.presumed_doa_deg)

    resolved = []
    for method in methods:
        if method.gamma_is_auto:
            tuned = select_gamma(method, scenario.with_seed(base_seed - 1), manifold, b,
                                 DEFAULT_GAMMA_GRID, options)
            resolved.append(method.with_gamma(tuned))
        else:
            resolved.append(method)

    true_doa = scenario.presumed_doa_deg + mismatch_deg
    values = [[] for _ in resolved]
    failures = [0] * len(resolved)
    for t in range(trials):
        trial_scenario = scenario.with_soi_doa(true_doa).with_seed(base_seed + t)
        snapshots = synthesize_snapshots(trial_scenario)
        r = sample_covariance(snapshots.data)
        for j, method in enumerate(resolved):
            try:
                result = solve_method(method, r, manifold, split, a, snapshots.data, options)
            except NumericalError:
                failures[j] += 1
                continue
            values[j].append(sinr(result.weights, trial_scenario))

    entries = []
    for method, vals, failed in zip(resolved, values, failures):
        if vals:
            mean = float(np.mean(vals))
            std = float(np.std(vals))
        else:
            mean = math.nan
            std = math.nan
        entries.append(
            MethodSinr(
                method=method,
                mean_sinr_db=mean,
                std_db=std,
                trials=trials,
                failures=failed,
                per_trial_db=tuple(vals),
            )
        )
    return SinrReport(methods=tuple(entries), mismatch_deg=float(mismatch_deg), seed=int(base_seed))

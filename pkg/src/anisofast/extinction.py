"""Numerical extinction detection and fitting of the predicted decay exponents.

With eps > 0 the regularized equation decays exponentially below the
eps-dominated scale instead of hitting exact zero, so "extinction" here means
the global sup crossing a small threshold, and the log-log fits exclude the
contaminated tail below 10x that threshold.  Decay samples are taken in both
geometries at once: the intrinsic cube is rebuilt at time parameter
(t_star - tau) for every sample, the standard cube is fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .geometry import ExponentProfile, intrinsic_cube, scale_cube, standard_cube
from .harnack import cube_contained, cube_integral, cube_sup
from .solver import Trajectory

#: sup values below FLOOR_FACTOR * threshold are excluded from fit windows
FLOOR_FACTOR = 10.0

#: least-squares fits need at least this many samples
MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class PowerLawFit:
    """Least squares on (log x, log y): y ~ exp(intercept) * x^slope."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int
    slope_stderr: float


def fit_power_law(points: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Ordinary least squares on logs; exact on synthetic pure power laws."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise DomainError("fit_power_law needs at least 3 (x, y) pairs")
    if (arr <= 0.0).any() or not np.isfinite(arr).all():
        raise DomainError("fit_power_law needs strictly positive finite points")
    lx = np.log(arr[:, 0])
    ly = np.log(arr[:, 1])
    n = lx.size
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DomainError("fit_power_law needs at least two distinct x values")
    slope = float(dx @ (ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    ss_res = float(resid @ resid)
    ss_tot = float((ly - ly.mean()) @ (ly - ly.mean()))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else float("nan")
    return PowerLawFit(
        slope=slope, intercept=intercept, r_squared=r2, n_points=n, slope_stderr=stderr
    )


def detect_extinction(traj: Trajectory, threshold: float) -> Optional[float]:
    """Earliest time the global sup drops below the threshold, or None.

    The crossing is interpolated linearly in log(sup u) between the two
    bracketing snapshots; if the first sub-threshold snapshot holds an exact
    zero (or the trajectory starts below the threshold) its own time is
    returned.
    """
    if not threshold > 0.0:
        raise DomainError(f"threshold must be positive, got {threshold!r}")
    if not traj.snapshots:
        raise DomainError("trajectory has no snapshots")
    sups = traj.sup_series()
    times = np.asarray(traj.times)
    below = sups < threshold
    if not below.any():
        return None
    k = int(np.argmax(below))
    if k == 0 or sups[k] <= 0.0:
        return float(times[k])
    s_prev, s_next = sups[k - 1], sups[k]
    frac = (math.log(s_prev) - math.log(threshold)) / (
        math.log(s_prev) - math.log(s_next)
    )
    return float(times[k - 1] + frac * (times[k] - times[k - 1]))


@dataclass(frozen=True)
class DecaySamples:
    """Per-snapshot decay observables before t_star, in both geometries."""

    tau: np.ndarray
    remaining: np.ndarray  # t_star - tau
    mass_intrinsic: np.ndarray
    sup_intrinsic: np.ndarray
    mass_standard: np.ndarray
    sup_standard: np.ndarray
    contained: np.ndarray  # whether K_{4 rho}(t_star - tau) fits in the domain
    in_window: np.ndarray  # sup >= FLOOR_FACTOR * threshold


def decay_samples(
    traj: Trajectory,
    prof: ExponentProfile,
    rho: float,
    t_star: float,
    threshold: float,
) -> DecaySamples:
    """Evaluate mass and sup over K_rho(t_star - tau) and the fixed standard cube."""
    if not rho > 0.0:
        raise DomainError(f"rho must be positive, got {rho!r}")
    std = standard_cube(rho, prof)
    floor = FLOOR_FACTOR * threshold
    rows = []
    for f in traj.snapshots:
        remaining = t_star - f.time
        if remaining <= 0.0:
            continue
        if prof.strict_fast:
            cube = intrinsic_cube(rho, remaining, prof)
            m_int = cube_integral(f, cube, 1.0)
            s_int = cube_sup(f, cube)
            contained = cube_contained(scale_cube(cube, 4.0), traj.grid)
        else:
            m_int, s_int, contained = math.nan, math.nan, False
        rows.append(
            (
                f.time,
                remaining,
                m_int,
                s_int,
                cube_integral(f, std, 1.0),
                cube_sup(f, std),
                contained,
                f.sup() >= floor,
            )
        )
    if not rows:
        raise DomainError("no snapshots strictly before t_star")
    cols = list(zip(*rows))
    return DecaySamples(
        tau=np.array(cols[0]),
        remaining=np.array(cols[1]),
        mass_intrinsic=np.array(cols[2]),
        sup_intrinsic=np.array(cols[3]),
        mass_standard=np.array(cols[4]),
        sup_standard=np.array(cols[5]),
        contained=np.array(cols[6], dtype=bool),
        in_window=np.array(cols[7], dtype=bool),
    )


@dataclass(frozen=True)
class DecayReport:
    """Fitted decay slopes against (t_star - tau) vs the predicted exponents."""

    geometry: str
    t_star: float
    threshold: float
    floor: float
    fit_window: tuple[float, float]
    n_points: int
    mass_slope: float
    mass_stderr: float
    mass_r_squared: float
    mass_theory: float
    mass_theory_terms: tuple[float, ...]
    mass_applicable: bool
    sup_slope: float
    sup_stderr: float
    sup_r_squared: float
    sup_theory: float
    sup_applicable: bool
    containment_fraction: float
    reason: str = ""


def _fit_or_nan(x: np.ndarray, y: np.ndarray):
    keep = y > 0.0
    if int(keep.sum()) < MIN_FIT_POINTS:
        return None
    return fit_power_law(np.column_stack([x[keep], y[keep]]))


def decay_report(
    traj: Trajectory,
    prof: ExponentProfile,
    rho: float,
    threshold: float,
    geometry: str = "intrinsic",
) -> DecayReport:
    """Fit the decay exponents of one geometry near extinction.

    The fit window keeps snapshots with tau >= t_star/2 (widened to all
    pre-extinction snapshots when that leaves fewer than MIN_FIT_POINTS) and
    always drops the regularization-contaminated tail sup < 10 * threshold.
    """
    if geometry not in ("intrinsic", "standard"):
        raise DomainError(f"geometry must be intrinsic or standard, got {geometry!r}")
    t_star = detect_extinction(traj, threshold)
    if t_star is None:
        raise DomainError("trajectory never crosses the extinction threshold")
    samples = decay_samples(traj, prof, rho, t_star, threshold)

    window = samples.in_window & (samples.tau >= 0.5 * t_star)
    if int(window.sum()) < MIN_FIT_POINTS:
        window = samples.in_window
    x = samples.remaining[window]
    tau_used = samples.tau[window]
    n_points = int(window.sum())
    fit_window = (
        (float(tau_used.min()), float(tau_used.max())) if n_points else (math.nan, math.nan)
    )
    contained_frac = (
        float(samples.contained[window].mean()) if n_points else math.nan
    )

    if geometry == "intrinsic":
        mass_y = samples.mass_intrinsic[window]
        sup_y = samples.sup_intrinsic[window]
        mass_ok = prof.strict_fast
        mass_theory = 1.0 / (2.0 - prof.p_bar) if prof.strict_fast else math.nan
        mass_terms = (mass_theory,)
        sup_ok = prof.strict_fast and prof.lam > 0.0
        sup_theory = mass_theory if sup_ok else math.nan
        if not prof.strict_fast:
            reason = "intrinsic geometry needs all p_i < 2"
        elif not sup_ok:
            reason = f"lam={prof.lam:.6g} <= 0"
        else:
            reason = ""
    else:
        mass_y = samples.mass_standard[window]
        sup_y = samples.sup_standard[window]
        mass_ok = prof.strict_fast
        # near extinction the stated mass rate is governed by the largest exponent
        mass_theory = 1.0 / (2.0 - prof.p[-1]) if prof.strict_fast else math.nan
        mass_terms = (
            tuple(1.0 / (2.0 - pi) for pi in prof.p) if prof.strict_fast else ()
        )
        sup_ok = prof.strict_fast and prof.lam > 0.0 and min(prof.lam_i) > 0.0
        sup_theory = (
            prof.lam_i[0] / ((2.0 - prof.p[-1]) * prof.lam) if sup_ok else math.nan
        )
        if not prof.strict_fast:
            reason = "decay exponents need all p_i < 2"
        elif not sup_ok:
            reason = (
                f"needs lam > 0 and all lam_i > 0; lam={prof.lam:.6g}, "
                f"min lam_i={min(prof.lam_i):.6g}"
            )
        else:
            reason = ""

    mass_fit = _fit_or_nan(x, mass_y) if mass_ok else None
    sup_fit = _fit_or_nan(x, sup_y) if sup_ok else None
    if mass_ok and mass_fit is None:
        mass_ok = False
        reason = (reason + "; " if reason else "") + "insufficient mass samples"
    if sup_ok and sup_fit is None:
        sup_ok = False
        reason = (reason + "; " if reason else "") + "insufficient sup samples"

    nan = math.nan
    return DecayReport(
        geometry=geometry,
        t_star=t_star,
        threshold=threshold,
        floor=FLOOR_FACTOR * threshold,
        fit_window=fit_window,
        n_points=n_points,
        mass_slope=mass_fit.slope if mass_fit else nan,
        mass_stderr=mass_fit.slope_stderr if mass_fit else nan,
        mass_r_squared=mass_fit.r_squared if mass_fit else nan,
        mass_theory=mass_theory,
        mass_theory_terms=mass_terms,
        mass_applicable=mass_ok,
        sup_slope=sup_fit.slope if sup_fit else nan,
        sup_stderr=sup_fit.slope_stderr if sup_fit else nan,
        sup_r_squared=sup_fit.r_squared if sup_fit else nan,
        sup_theory=sup_theory,
        sup_applicable=sup_ok,
        containment_fraction=contained_frac,
        reason=reason,
    )

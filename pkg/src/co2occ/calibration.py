"""Air-exchange estimation from a nighttime CO2 decay.

With the room empty and windows closed the balance reduces to
c(t) = c_out + (c0 - c_out) * exp(-lambda * t) with lambda = V_flow / V.
fit_decay recovers (lambda, c_out, c0) from a measured decay by
Levenberg-Marquardt least squares with an analytic Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .co2 import Co2Series
from .errors import ConvergenceError, DomainError, NoDecayError

MSE_TOL = 1e-6        # ppm^2 improvement below which the fit has converged
MAX_ITERATIONS = 500
MIN_SAMPLES = 100


@dataclass(frozen=True)
class DecayFit:
    """Fitted decay parameters; vdot_inf = lam * volume is reported alongside."""

    lam: float          # air-exchange rate, 1/s
    c_out: float        # ppm
    c0: float           # ppm, fitted initial level
    mse: float          # ppm^2
    iterations: int
    vdot_inf: float     # m^3/s

    def __post_init__(self):
        if self.lam <= 0 or self.c_out <= 0 or self.c0 <= self.c_out or self.mse < 0:
            raise DomainError(f"invalid decay fit: {self}")


def decay_model(t, lam: float, c_out: float, c0: float):
    """Closed-form unoccupied, closed-window concentration at time t (s)."""
    t = np.asarray(t, dtype=float)
    return c_out + (c0 - c_out) * np.exp(-lam * t)


def _jacobian(t: np.ndarray, lam: float, c_out: float, c0: float) -> np.ndarray:
    e = np.exp(-lam * t)
    return np.column_stack([-(c0 - c_out) * t * e, 1.0 - e, e])


def _initial_guess(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    c_out0 = float(np.min(y))
    c00 = float(y[0])
    excess = y - c_out0
    mask = excess > 0
    lam0 = 1e-4
    if mask.sum() >= 2:
        slope = np.polyfit(t[mask], np.log(excess[mask]), 1)[0]
        if slope < 0:
            lam0 = float(-slope)
    return lam0, c_out0, c00


def fit_decay(series: Co2Series, volume: float) -> DecayFit:
    """Least-squares fit of the decay curve to an unoccupied interval.

    Raises NoDecayError when the interval does not decay (last-quartile
    mean >= first-quartile mean) and ConvergenceError, carrying the best
    fit so far, when the MSE improvement criterion is not met within the
    iteration budget.
    """
    y = np.asarray(series.values, dtype=float)
    if len(y) < MIN_SAMPLES:
        raise DomainError(f"need >= {MIN_SAMPLES} samples, got {len(y)}")
    if volume <= 0:
        raise DomainError(f"volume must be > 0, got {volume}")
    # Only time relative to the interval start matters.
    t = series.step * np.arange(len(y), dtype=float)

    quart = len(y) // 4
    if np.mean(y[-quart:]) >= np.mean(y[:quart]):
        raise NoDecayError("no decay over the interval "
                           "(last-quartile mean >= first-quartile mean)")

    lam, c_out, c0 = _initial_guess(t, y)
    resid = y - decay_model(t, lam, c_out, c0)
    mse = float(np.mean(resid ** 2))

    mu = 1e-3
    iterations = 0
    converged = False
    while iterations < MAX_ITERATIONS:
        iterations += 1
        jac = _jacobian(t, lam, c_out, c0)
        jtj = jac.T @ jac
        jtr = jac.T @ resid
        try:
            delta = np.linalg.solve(jtj + mu * np.diag(np.diag(jtj)), jtr)
        except np.linalg.LinAlgError:
            mu *= 10.0
            continue
        lam_n, c_out_n, c0_n = lam + delta[0], c_out + delta[1], c0 + delta[2]
        if lam_n <= 0 or c_out_n <= 0 or c0_n <= c_out_n:
            mu *= 10.0
            if mu > 1e12:
                converged = True  # no admissible step improves the fit
                break
            continue
        resid_n = y - decay_model(t, lam_n, c_out_n, c0_n)
        mse_n = float(np.mean(resid_n ** 2))
        if mse_n < mse:
            improvement = mse - mse_n
            lam, c_out, c0 = lam_n, c_out_n, c0_n
            resid, mse = resid_n, mse_n
            mu = max(mu * 0.3, 1e-12)
            if improvement < MSE_TOL:
                converged = True
                break
        else:
            mu *= 10.0
            if mu > 1e12:
                converged = True
                break

    fit = DecayFit(lam=lam, c_out=c_out, c0=c0, mse=mse,
                   iterations=iterations, vdot_inf=lam * volume)
    if not converged:
        raise ConvergenceError(
            f"decay fit did not converge in {MAX_ITERATIONS} iterations "
            f"(mse={mse:.6g})", best=fit)
    return fit

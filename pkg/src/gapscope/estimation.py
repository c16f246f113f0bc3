"""Time grids, dataset acquisition, shot noise, and gap estimation by fitting.

The model fitted to the observable series is

    y(t) = offset + amplitude * cos(frequency * t + phase)

and the fitted frequency is the energy gap.  A profile-likelihood scan over
frequency seeds a Levenberg-Marquardt refinement of all four parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .circuits import TrotterStepper
from .pauli import PauliSum, PauliTerm, expectation
from .rng import generator

log = logging.getLogger(__name__)

EXACT = "exact"
SIGMA_FLOOR = 1e-12


class FitError(RuntimeError):
    pass


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    sigmas: np.ndarray
    shots: int | str = EXACT

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.sigmas = np.asarray(self.sigmas, dtype=float)
        if not (self.times.shape == self.values.shape == self.sigmas.shape) or self.times.ndim != 1:
            raise ValueError("times, values and sigmas must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.sigmas < 0):
            raise ValueError("sigmas must be non-negative")

    def __len__(self):
        return len(self.times)

    def subset(self, indices: Sequence[int]) -> "TimeSeries":
        idx = np.asarray(sorted(indices), dtype=int)
        return TimeSeries(self.times[idx], self.values[idx], self.sigmas[idx], self.shots)

    @property
    def is_exact(self) -> bool:
        return self.shots == EXACT


@dataclass
class FitResult:
    offset: float
    amplitude: float
    frequency: float
    phase: float
    covariance: np.ndarray = field(repr=False)
    gap_std: float
    residual_rms: float
    refined: bool = True

    def model(self, t) -> np.ndarray:
        return sinusoid(np.asarray(t, dtype=float), self.offset, self.amplitude,
                        self.frequency, self.phase)


def sinusoid(t, offset, amplitude, frequency, phase):
    return offset + amplitude * np.cos(frequency * t + phase)


def canonical_amplitude_phase(amplitude: float, phase: float) -> tuple[float, float]:
    if amplitude < 0:
        amplitude, phase = -amplitude, phase + math.pi
    return amplitude, phase % (2 * math.pi)


# -- time grids ---------------------------------------------------------------


def chebyshev_times(count: int, t_max: float) -> np.ndarray:
    """Chebyshev nodes of the first kind mapped onto ``(0, t_max)``, ascending."""
    if count < 1 or int(count) != count:
        raise ValueError(f"node count must be a positive integer, got {count}")
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    r = np.arange(1, count + 1)
    return 0.5 * t_max * (1.0 - np.cos((2 * r - 1) * math.pi / (2 * count)))


def uniform_times(count: int, t_max: float) -> np.ndarray:
    """``count`` equally spaced times ``t_max/count, ..., t_max``."""
    if count < 1 or not t_max > 0:
        raise ValueError("need count >= 1 and t_max > 0")
    return t_max * np.arange(1, count + 1) / count


# -- shots ----------------------------------------------------------------------


def shot_sigma(estimate: float, shots: int) -> float:
    return math.sqrt(max(1.0 - estimate * estimate, 1.0 / shots**2) / shots)


def sample_shots(p_plus: float, shots: int, rng) -> tuple[float, float]:
    """Binomial estimate of a +/-1 observable from ``shots`` projective samples.

    ``rng`` is a numpy Generator or an integer seed.
    """
    if not 0.0 <= p_plus <= 1.0 + 1e-12:
        raise ValueError(f"p_plus must be a probability, got {p_plus}")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = generator(rng)
    k = rng.binomial(int(shots), min(max(p_plus, 0.0), 1.0))
    estimate = (2 * k - shots) / shots
    return estimate, shot_sigma(estimate, shots)


def _single_string(o: PauliSum) -> PauliTerm:
    if len(o.terms) != 1 or abs(abs(o.terms[0].coefficient) - 1.0) > 1e-12:
        raise ValueError("finite-shot measurement needs a single Pauli string with coefficient +/-1")
    return o.terms[0]


def measure(value: float, o: PauliSum, shots: int | str, rng) -> tuple[float, float]:
    """Turn an exact expectation into a (value, sigma) reading."""
    if shots == EXACT:
        return value, 0.0
    term = _single_string(o)
    # sample the unit string, then restore the sign of the coefficient
    sign = 1.0 if term.coefficient > 0 else -1.0
    p_plus = 0.5 * (1.0 + sign * value)
    est, sigma = sample_shots(p_plus, int(shots), rng)
    return sign * est, sigma


# -- acquisition ----------------------------------------------------------------


def evolution_intervals(times: Sequence[float]) -> list[float]:
    """Durations of the incremental Trotter steps from t=0 through every node."""
    out = []
    prev = 0.0
    for t in times:
        span = t - prev
        if span < 0:
            raise ValueError("times must be non-decreasing from 0")
        out.append(span)
        prev = t
    return out


def acquire_series(psi: np.ndarray, h: PauliSum, o: PauliSum, times: Sequence[float],
                   steps_per_node: int = 1, shots: int | str = EXACT, seed=0,
                   node_subset: Sequence[int] | None = None) -> TimeSeries:
    """Sample ``<O(t_r)>`` by evolving ``psi`` forward node by node.

    The state is advanced from ``t_{r-1}`` to ``t_r`` with ``steps_per_node``
    equal first-order Trotter steps of ``h``, so the whole series costs
    ``steps_per_node * len(times)`` steps.  Finite shots sample every node
    independently from a stream keyed by ``(seed, node)``.
    """
    times = np.asarray(times, dtype=float)
    if shots != EXACT:
        _single_string(o)
    stepper = TrotterStepper(h)
    state = np.asarray(psi, dtype=complex)
    values, sigmas = [], []
    for r, span in enumerate(evolution_intervals(times)):
        if span > 0:
            dt = span / steps_per_node
            for _ in range(steps_per_node):
                state = stepper.step(state, dt)
        exact = expectation(o, state)
        v, s = measure(exact, o, shots, generator(seed, "shots", r))
        values.append(v)
        sigmas.append(s)
    series = TimeSeries(times, values, sigmas, shots)
    if node_subset is not None:
        series = series.subset(node_subset)
    return series


# -- fitting -------------------------------------------------------------------


def _weights(series: TimeSeries) -> np.ndarray:
    if series.is_exact or np.all(series.sigmas == 0):
        return np.ones(len(series))
    sig = np.maximum(series.sigmas, max(SIGMA_FLOOR, 1e-3 * float(np.max(series.sigmas))))
    return 1.0 / sig


def _scan(t, y, w, omegas):
    """Weighted linear least squares of (c, a, b) at each candidate frequency."""
    cos = np.cos(np.outer(omegas, t))
    sin = np.sin(np.outer(omegas, t))
    ones = np.ones_like(cos)
    basis = np.stack([ones, cos, sin], axis=-1) * w[None, :, None]  # (K, n, 3)
    rhs = (y * w)
    gram = np.einsum("kni,knj->kij", basis, basis)
    proj = np.einsum("kni,n->ki", basis, rhs)
    gram += 1e-14 * np.trace(gram, axis1=1, axis2=2)[:, None, None] * np.eye(3)
    coef = np.linalg.solve(gram, proj[..., None])[..., 0]
    resid = np.einsum("kni,ki->kn", basis, coef) - rhs[None, :]
    return np.sum(resid**2, axis=1), coef


def fit_sinusoid(series: TimeSeries, freq_bounds: tuple[float, float] | None = None,
                 oversample: int = 20, max_iter: int = 200) -> FitResult:
    """Weighted least-squares sinusoid fit with a profile-likelihood initializer.

    Exact series (no sigmas) are fitted unweighted and the covariance is scaled
    by the residual variance; shot-noise series use ``1/sigma^2`` weights and an
    unscaled covariance.
    """
    t, y = series.times, series.values
    n = len(t)
    if n < 5:
        raise FitError(f"need at least 5 points to fit, got {n}")
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise FitError("series is constant; frequency undefined")
    span = float(t[-1] - t[0]) if n > 1 else 1.0
    if freq_bounds is None:
        freq_bounds = (0.0, math.pi * n / float(t[-1]))
    lo, hi = map(float, freq_bounds)
    if lo < 0 or hi <= lo:
        raise ValueError(f"invalid frequency bounds {freq_bounds}")
    w = _weights(series)

    step = 2 * math.pi / (max(span, t[-1]) * oversample)
    omegas = np.arange(max(lo, 0.25 * step), hi + step, step)
    omegas = omegas[omegas <= hi] if np.any(omegas <= hi) else np.array([hi])
    rss, coefs = _scan(t, y, w, omegas)
    k = int(np.argmin(rss))
    c0, a0, b0 = coefs[k]
    x0 = np.array([c0, a0, b0, omegas[k]])

    def residual(p):
        c, a, b, om = p
        return w * (c + a * np.cos(om * t) + b * np.sin(om * t) - y)

    def jacobian(p):
        c, a, b, om = p
        co, si = np.cos(om * t), np.sin(om * t)
        dom = -a * t * si + b * t * co
        return w[:, None] * np.stack([np.ones_like(t), co, si, dom], axis=1)

    refined = True
    try:
        sol = least_squares(residual, x0, jac=jacobian, method="lm", xtol=1e-15,
                            ftol=1e-15, gtol=1e-15, max_nfev=max_iter * 5)
        p = sol.x
        if not sol.success or not np.all(np.isfinite(p)):
            raise FitError(sol.message)
        if np.sum(residual(p) ** 2) > np.sum(residual(x0) ** 2):
            raise FitError("refinement increased the residual")
    except (FitError, ValueError) as exc:
        log.warning("sinusoid refinement failed (%s); returning scan estimate", exc)
        p, refined = x0, False

    c, a, b, om = p
    if om < 0:
        om, b = -om, -b
    jac = jacobian([c, a, b, om])
    res = residual([c, a, b, om])
    dof = max(n - 4, 1)
    try:
        cov_lin = np.linalg.pinv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov_lin = np.full((4, 4), np.nan)
    if series.is_exact or np.all(series.sigmas == 0):
        cov_lin = cov_lin * (np.sum(res**2) / dof)

    # (c, a, b, om) -> (offset, amplitude, frequency, phase) with
    # a = A cos(phase), b = -A sin(phase)
    amp = math.hypot(a, b)
    phase = math.atan2(-b, a) % (2 * math.pi)
    g = np.zeros((4, 4))
    g[0, 0] = 1.0
    if amp > 0:
        g[1, 1], g[1, 2] = a / amp, b / amp
        g[3, 1], g[3, 2] = b / amp**2, -a / amp**2
    g[2, 3] = 1.0
    cov = g @ cov_lin @ g.T
    resid_plain = c + a * np.cos(om * t) + b * np.sin(om * t) - y
    return FitResult(
        offset=float(c), amplitude=float(amp), frequency=float(om), phase=float(phase),
        covariance=cov, gap_std=float(math.sqrt(max(cov[2, 2], 0.0))),
        residual_rms=float(np.sqrt(np.mean(resid_plain**2))), refined=refined,
    )


def dft_estimate(series: TimeSeries, pad: int = 1, rtol: float = 1e-9) -> tuple[float, float]:
    """Peak non-zero DFT bin of a uniformly sampled series: (frequency, bin width).

    ``pad > 1`` zero-pads to interpolate the spectrum; the reported resolution
    stays the unpadded bin width ``2 pi / (R dt)``.
    """
    t = series.times
    if len(t) < 3:
        raise ValueError("need at least 3 uniform samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > rtol * max(1.0, abs(dt[0])):
        raise ValueError("DFT estimate requires a uniform time grid")
    n = len(t)
    spectrum = np.abs(np.fft.rfft(series.values - np.mean(series.values), n=n * pad))
    resolution = 2 * math.pi / (n * dt[0])
    k = 1 + int(np.argmax(spectrum[1:]))
    return k * resolution / pad, resolution


@dataclass(frozen=True)
class PilotResult:
    gap_guess: float
    window: float
    points: int
    doublings: int


def pilot_gap_guess(psi: np.ndarray, h: PauliSum, o: PauliSum, points: int = 64,
                    min_bin: int = 3, max_doublings: int = 10, pad: int = 4) -> PilotResult:
    """Coarse gap guess from a DFT of a uniform, finely Trotterized pilot series.

    The first window samples at the Nyquist rate of the largest possible
    frequency ``2 * one_norm(H)``.  While the spectral peak sits below
    ``min_bin`` bins the window is doubled, keeping the Trotter step fixed.
    """
    bound = 2.0 * h.one_norm()
    if bound <= 0:
        raise ValueError("pilot needs a non-zero Hamiltonian")
    dt = math.pi / bound
    for doubling in range(max_doublings + 1):
        window = points * dt * 2**doubling
        series = acquire_series(psi, h, o, uniform_times(points, window),
                                steps_per_node=2**doubling)
        if np.ptp(series.values) <= 1e-12:
            raise FitError("pilot series is constant")
        freq, res = dft_estimate(series, pad=pad)
        if freq >= min_bin * res or doubling == max_doublings:
            return PilotResult(freq, window, points, doubling)
    raise AssertionError("unreachable")


def auto_t_max(gap_guess: float, periods: float = 1.5) -> float:
    if not gap_guess > 0:
        raise ValueError("gap guess must be positive")
    return 2 * math.pi * periods / gap_guess

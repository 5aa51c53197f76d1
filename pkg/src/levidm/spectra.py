"""Spectral estimation and the directional cross-spectrum signature.

Conventions: one-sided spectra over frequency in Hz, normalised so that the
integral over f >= 0 equals the variance.  Cross spectra are
``S_xy = <conj(x(w)) y(w)>``.  Susceptibilities use the physics sign,
``chi(w) = 1 / (m (w0^2 - w^2 - i Gamma w))``, which makes the model cross
spectrum ``s_force cos(psi) sin(psi) chi_x conj(chi_y)`` match the
estimator's sign.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .langevin import effective_omega2
from .signals import (
    Constant,
    DirectionalStochastic,
    Harmonic,
    Impulse,
    Trajectory,
    TrapConfig,
    UncorrelatedBath,
)
from .units import K_B

MIN_AVERAGES_FOR_FIT = 50


class EstimationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    freqs: np.ndarray
    s_xx: np.ndarray
    s_yy: np.ndarray
    s_zz: np.ndarray
    s_xy: np.ndarray
    n_averages: int
    segment_length: int
    overlap: float
    dt: float
    window: str = "hann"

    @property
    def df(self) -> float:
        return 1.0 / (self.segment_length * self.dt)

    def variance_inflation(self) -> float:
        """Variance factor relative to independent bins and segments.

        Neighbouring bins of a tapered periodogram are correlated, and so
        are overlapping segments; both inflate the variance of any smooth
        weighted sum of spectral bins.
        """
        return _variance_inflation(self.window, self.segment_length, self.overlap, self.n_averages)


def _variance_inflation(window, nperseg, overlap, n_segments):
    w = sps.get_window(window, nperseg)
    w2 = w * w
    rho_bins = np.abs(np.fft.fft(w2)) ** 2 / w2.sum() ** 2
    bins = float(rho_bins.sum())
    hop = nperseg - int(round(overlap * nperseg))
    segs = 1.0
    j = 1
    while j * hop < nperseg and j < n_segments:
        s = j * hop
        rho = np.dot(w[:-s], w[s:]) / w2.sum()
        segs += 2.0 * (1.0 - j / n_segments) * rho * rho
        j += 1
    return bins * segs


def welch_psd(traj: Trajectory, segment_length: int, overlap: float = 0.5) -> SpectralEstimate:
    """Hann-windowed Welch auto- and x-y cross-spectra of a trajectory."""
    n = traj.n_samples
    segment_length = int(segment_length)
    if segment_length < 2 or segment_length > n:
        raise ValueError(f"segment_length must be in [2, {n}]")
    if not 0.0 <= overlap <= 0.9:
        raise ValueError("overlap must lie in [0, 0.9]")
    hop = segment_length - int(round(overlap * segment_length))
    win = sps.get_window("hann", segment_length)
    n_seg = 1 + (n - segment_length) // hop
    nfreq = segment_length // 2 + 1

    acc = np.zeros((3, nfreq))
    acc_xy = np.zeros(nfreq, dtype=complex)
    views = [np.lib.stride_tricks.sliding_window_view(traj.positions[j], segment_length)[::hop]
             for j in range(3)]
    block = max(1, (1 << 22) // segment_length)
    # fixed block order keeps the reduction bit-stable
    for b0 in range(0, n_seg, block):
        ffts = []
        for j in range(3):
            seg = views[j][b0:b0 + block]
            seg = (seg - seg.mean(axis=1, keepdims=True)) * win
            ffts.append(np.fft.rfft(seg, axis=1))
        for j in range(3):
            acc[j] += np.sum(ffts[j].real ** 2 + ffts[j].imag ** 2, axis=0)
        acc_xy += np.sum(np.conj(ffts[0]) * ffts[1], axis=0)

    scale = traj.dt / (np.sum(win * win) * n_seg)
    one_sided = np.full(nfreq, 2.0)
    one_sided[0] = 1.0
    if segment_length % 2 == 0:
        one_sided[-1] = 1.0
    acc *= scale * one_sided
    acc_xy *= scale * one_sided
    return SpectralEstimate(
        freqs=np.fft.rfftfreq(segment_length, traj.dt),
        s_xx=acc[0], s_yy=acc[1], s_zz=acc[2], s_xy=acc_xy,
        n_averages=int(n_seg), segment_length=segment_length, overlap=float(overlap), dt=traj.dt,
    )


def average_estimates(estimates) -> SpectralEstimate:
    """Pool estimates with identical grids, weighting by their averaging counts."""
    estimates = list(estimates)
    if not estimates:
        raise ValueError("no estimates to average")
    ref = estimates[0]
    for e in estimates[1:]:
        if e.segment_length != ref.segment_length or not math.isclose(e.dt, ref.dt, rel_tol=1e-12):
            raise ValueError("estimates have different frequency grids")
    w = np.array([e.n_averages for e in estimates], dtype=float)
    w /= w.sum()

    def pool(name):
        return sum(wi * getattr(e, name) for wi, e in zip(w, estimates))

    return SpectralEstimate(
        freqs=ref.freqs, s_xx=pool("s_xx"), s_yy=pool("s_yy"), s_zz=pool("s_zz"),
        s_xy=pool("s_xy"), n_averages=int(sum(e.n_averages for e in estimates)),
        segment_length=ref.segment_length, overlap=ref.overlap, dt=ref.dt, window=ref.window,
    )


@dataclass(frozen=True)
class SusceptibilityModel:
    trap: TrapConfig

    def chi(self, axis: int, freqs):
        """Complex response chi_j(omega) for frequencies in Hz."""
        w = 2.0 * np.pi * np.asarray(freqs, dtype=float)
        w0 = self.trap.omega[axis]
        g = self.trap.gamma[axis]
        return 1.0 / (self.trap.mass * (w0 * w0 - w * w - 1j * g * w))

    def thermal_force_psd(self, axis: int) -> float:
        return 4.0 * K_B * self.trap.temp_cm[axis] * self.trap.mass * self.trap.gamma[axis]


@dataclass(frozen=True, eq=False)
class AnalyticPSD:
    """Model PSD curve plus harmonic lines as (frequency Hz, integrated power m^2)."""

    freqs: np.ndarray
    psd: np.ndarray
    lines: list = field(default_factory=list)


def analytic_psd(model: SusceptibilityModel, drives, axis: int, freqs) -> AnalyticPSD:
    """|chi|^2 (thermal + projected signal force PSD), lines reported separately."""
    freqs = np.asarray(freqs, dtype=float)
    force_psd = model.thermal_force_psd(axis)
    lines = []
    for d in drives:
        if isinstance(d, DirectionalStochastic):
            psi = d.angle()
            proj = (math.cos(psi), math.sin(psi), 0.0)[axis]
            force_psd += d.s_force * proj * proj
        elif isinstance(d, UncorrelatedBath):
            force_psd += d.s_force[axis]
        elif isinstance(d, Harmonic):
            amp = d.amplitude * d.direction[axis]
            if amp != 0.0:
                f_line = d.freq / (2.0 * np.pi)
                gain = abs(model.chi(axis, f_line)) ** 2
                lines.append((f_line, float(gain * amp * amp / 2.0)))
        elif isinstance(d, (Constant, Impulse)):
            raise ValueError(f"{type(d).__name__} has no stationary spectrum")
        else:
            raise TypeError(f"unknown drive {d!r}")
    psd = np.abs(model.chi(axis, freqs)) ** 2 * force_psd
    return AnalyticPSD(freqs=freqs, psd=psd, lines=lines)


def analytic_cross_spectrum(model: SusceptibilityModel, s_force: float, psi: float, freqs):
    """x-y cross spectrum from a directional white force at angle ``psi``."""
    if s_force < 0:
        raise ValueError("s_force must be non-negative")
    return (math.cos(psi) * math.sin(psi) * s_force
            * model.chi(0, freqs) * np.conj(model.chi(1, freqs)))


@dataclass(frozen=True)
class OrientationFit:
    """Result of :func:`estimate_orientation`.

    ``amplitude`` is the fitted s_force cos(psi) sin(psi) (N^2/Hz);
    ``excess_x``/``excess_y`` the fitted non-thermal force PSD on each
    axis; ``cross_power`` the x-y covariance (m^2) implied by the fitted
    cross spectrum.
    """

    psi_hat: float
    quadrant_sign: int
    uncertainty: float
    amplitude: float
    amplitude_sigma: float
    excess_x: float
    excess_x_sigma: float
    excess_y: float
    excess_y_sigma: float
    cross_power: float
    cross_power_sigma: float

    @property
    def significance(self) -> float:
        return abs(self.amplitude) / self.amplitude_sigma


def _weighted_scale_fit(y, template, var):
    """Least-squares real scale a for y ~ a * template with per-bin variance."""
    w = 1.0 / var
    norm = np.sum(w * np.abs(template) ** 2)
    if not np.isfinite(norm) or norm <= 0:
        raise EstimationError("singular normal equations")
    a = np.sum(w * np.real(np.conj(template) * y)) / norm
    return a, 1.0 / norm


def resonance_band(model: SusceptibilityModel, df: float = 0.0, width: float = 5.0):
    """Frequency band (Hz) covering the x and y resonances.

    Extends ``width`` linewidths (and at least ``width`` bins) beyond the
    outermost of the two resonance frequencies.
    """
    f_res = [model.trap.omega[j] / (2 * np.pi) for j in (0, 1)]
    lw = max(model.trap.gamma[0], model.trap.gamma[1]) / (2 * np.pi)
    pad = width * max(lw, df)
    return max(min(f_res) - pad, 0.0), max(f_res) + pad


def estimate_orientation(est: SpectralEstimate, model: SusceptibilityModel,
                         band: tuple[float, float] | None = None) -> OrientationFit:
    """Fit the directional-force template to a measured spectral estimate.

    The sign of the fitted cross-spectrum amplitude gives the quadrant
    (sin 2 psi); the excess auto-spectral powers on x and y (cos^2 psi,
    sin^2 psi) resolve psi against pi/2 - psi.

    Parameters
    ----------
    est : SpectralEstimate
        Averaged spectra; needs at least 50 averages.
    model : SusceptibilityModel
        Response model of the trap the data came from.
    band : (float, float), optional
        Fit band in Hz.  Defaults to :func:`resonance_band`; far from
        resonance every bin still carries equal weight in an
        inverse-variance fit while aliasing and leakage bias the model.
    """
    if est.n_averages < MIN_AVERAGES_FOR_FIT:
        raise ValueError(f"need at least {MIN_AVERAGES_FOR_FIT} averages, got {est.n_averages}")
    f = est.freqs
    if band is None:
        band = resonance_band(model, est.df)
    sel = ((f > 0) & (f < 0.5 / est.dt) & (f >= band[0]) & (f <= band[1])
           & (est.s_xx > 0) & (est.s_yy > 0))
    if np.count_nonzero(sel) < 3:
        raise EstimationError("too few usable frequency bins")
    f = f[sel]
    k = est.n_averages
    infl = est.variance_inflation()
    chi_x2 = np.abs(model.chi(0, f)) ** 2
    chi_y2 = np.abs(model.chi(1, f)) ** 2
    template = model.chi(0, f) * np.conj(model.chi(1, f))
    th_x = model.thermal_force_psd(0) * chi_x2
    th_y = model.thermal_force_psd(1) * chi_y2
    sxx, syy, sxy = est.s_xx[sel], est.s_yy[sel], est.s_xy[sel]

    # first pass weights from the data, second from the fitted model
    var_x, var_y = sxx ** 2 / k, syy ** 2 / k
    for _ in range(2):
        bx, vbx = _weighted_scale_fit(sxx - th_x, chi_x2, var_x)
        by, vby = _weighted_scale_fit(syy - th_y, chi_y2, var_y)
        mx = np.maximum(th_x + bx * chi_x2, 1e-3 * sxx)
        my = np.maximum(th_y + by * chi_y2, 1e-3 * syy)
        var_x, var_y = mx ** 2 / k, my ** 2 / k
    # each quadrature of the complex cross estimate carries half its variance
    a, va = _weighted_scale_fit(sxy, template, mx * my / (2.0 * k))
    va *= infl
    vbx *= infl
    vby *= infl

    two_psi = math.atan2(2.0 * a, bx - by)
    X, Y = bx - by, 2.0 * a
    r2 = X * X + Y * Y
    if r2 > 0:
        var_2psi = (X * X * 4.0 * va + Y * Y * (vbx + vby)) / (r2 * r2)
        unc = 0.5 * math.sqrt(var_2psi)
    else:
        unc = math.pi / 2
    full = model.chi(0, est.freqs[1:]) * np.conj(model.chi(1, est.freqs[1:]))
    cov_template = float(np.sum(full.real) * est.df)
    return OrientationFit(
        psi_hat=0.5 * two_psi,
        quadrant_sign=1 if a >= 0 else -1,
        uncertainty=min(unc, math.pi / 2),
        amplitude=float(a), amplitude_sigma=math.sqrt(va),
        excess_x=float(bx), excess_x_sigma=math.sqrt(vbx),
        excess_y=float(by), excess_y_sigma=math.sqrt(vby),
        cross_power=float(a * cov_template), cross_power_sigma=math.sqrt(va) * abs(cov_template),
    )


@dataclass(frozen=True)
class ImpulseEvent:
    t: float
    delta_p_hat: float


def oscillator_energy(traj: Trajectory, per_axis: bool = False) -> np.ndarray:
    """Mechanical energy per sample, summed over axes unless ``per_axis``.

    When the integrator step is known the discrete invariant of the
    Verlet map, 1/2 m (v^2 + (sin(w h) / h)^2 x^2), replaces
    1/2 m (v^2 + w^2 x^2); both agree to O((w h)^2).
    """
    m = traj.trap.mass
    omega = np.asarray(traj.trap.omega)
    h = traj.integrator_dt
    k_eff = (np.sin(omega * h) / h) ** 2 if h else omega ** 2
    e = 0.5 * m * (traj.velocities ** 2 + k_eff[:, None] * traj.positions ** 2)
    return e if per_axis else e.sum(axis=0)


def detect_impulses(traj: Trajectory, threshold_sigma: float, window: int | None = None):
    """Find momentum kicks from jumps in windowed oscillator energy.

    The energy is averaged over windows (default: two periods of the
    slowest mode).  Jumps between adjacent windows are scaled by the square
    root of the local energy, because thermal energy increments grow like
    sqrt(E); a jump is an event when it exceeds ``threshold_sigma`` robust
    standard deviations.  Each run of triggered windows is one event.  The
    kick is then located at the largest single-sample energy step and the
    energy change is the difference of one-window means on either side,
    with each axis corrected for damping of the excess over the averaging
    window.  ``delta_p_hat = sqrt(2 m dE)``.
    """
    if not threshold_sigma > 0:
        raise ValueError("threshold_sigma must be positive")
    if window is None:
        window = max(1, int(round(2 * 2 * math.pi / min(traj.trap.omega) / traj.dt)))
    window = int(window)
    n_win = traj.n_samples // window
    if n_win < 3:
        return []
    e_axis = oscillator_energy(traj, per_axis=True)
    e_total = e_axis.sum(axis=0)
    energy = e_total[: n_win * window].reshape(n_win, window).mean(axis=1)
    jumps = np.diff(energy)
    level = np.sqrt(np.maximum(0.5 * (energy[:-1] + energy[1:]), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(level > 0, jumps / level, 0.0)
    mad = np.median(np.abs(z - np.median(z)))
    sigma = max(1.4826 * mad, 1e-9 * float(np.max(np.abs(z))))
    if sigma == 0:
        return []
    trig = z > threshold_sigma * sigma

    # mean of exp(-gamma s) over one averaging window, per axis
    decay = np.asarray(traj.trap.gamma) * window * traj.dt
    with np.errstate(divide="ignore", invalid="ignore"):
        decay = np.where(decay > 0, -np.expm1(-decay) / decay, 1.0)

    events = []
    n = traj.n_samples
    k = 0
    while k < len(trig):
        if not trig[k]:
            k += 1
            continue
        start = k
        while k + 1 < len(trig) and trig[k + 1]:
            k += 1
        lo = start * window
        hi = min((k + 2) * window, n)
        kick = lo + 1 + int(np.argmax(np.diff(e_total[lo:hi])))
        before = e_axis[:, max(kick - window, 0):kick].mean(axis=1)
        after = e_axis[:, kick:min(kick + window, n)].mean(axis=1)
        d_e = float(np.sum((after - before) / decay))
        if d_e > 0:
            events.append(ImpulseEvent(
                t=kick * traj.dt,
                delta_p_hat=math.sqrt(2.0 * traj.trap.mass * d_e),
            ))
        k += 1
    return events

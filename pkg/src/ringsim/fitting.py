"""Least-squares estimators used by the analysis paths.

Three model families cover everything the toolkit needs: a Lorentzian dip
(quality-factor extraction from transmission sweeps), a power law (rate
scaling exponents, fitted as a line in log-log space) and a sinusoid of
known unit angular frequency (two-photon interference visibility, linear
in the basis 1, cos, sin).

The Lorentzian is fit with a damped Gauss-Newton iteration using analytic
Jacobians; the width is parameterized through a softplus transform so it
cannot change sign.  Standard errors come from the diagonal of the inverse
approximate Hessian scaled by the residual variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ringsim.resonator import TransmissionTrace

MAX_ITERATIONS = 200
STEP_TOL = 1e-10


class FitError(RuntimeError):
    pass


class NoResonanceError(FitError):
    """The trace shows no dip above the noise floor."""


class NotConvergedError(FitError):
    """The iteration hit the iteration cap before the step tolerance."""


@dataclass
class FitResult:
    """Parameter estimates with standard errors and fit diagnostics."""

    parameter_names: tuple
    parameters: dict
    standard_errors: dict
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    gradient_norm: float = 0.0
    flags: tuple = field(default_factory=tuple)

    def to_kv(self) -> str:
        lines = []
        for name in self.parameter_names:
            lines.append(f"{name}={self.parameters[name]:.10g}±{self.standard_errors[name]:.4g}")
        return "\n".join(lines) + "\n"


def _covariance(jac: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    m, n = jac.shape
    h = jac.T @ jac
    try:
        h_inv = np.linalg.inv(h)
    except np.linalg.LinAlgError:
        h_inv = np.linalg.pinv(h)
    dof = max(m - n, 1)
    s2 = float(residuals @ residuals) / dof
    return s2 * h_inv


def lm_fit(residual_fn, jacobian_fn, x0, max_iter=MAX_ITERATIONS, step_tol=STEP_TOL):
    """Damped Gauss-Newton minimization of ||residual(x)||^2.

    Returns (x, covariance, iterations, residual_norm, gradient_norm,
    converged).  Convergence means the relative parameter step fell below
    ``step_tol``; the damping factor grows on rejected steps and shrinks on
    accepted ones.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = residual_fn(x)
    jac = jacobian_fn(x)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        grad = jac.T @ r
        h = jac.T @ jac
        damp = np.diag(np.maximum(np.diag(h), 1e-30))
        try:
            step = np.linalg.solve(h + lam * damp, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h + lam * damp, -grad, rcond=None)[0]
        rel_step = float(np.max(np.abs(step) / (np.abs(x) + 1e-30)))
        x_new = x + step
        r_new = residual_fn(x_new)
        cost_new = float(r_new @ r_new)
        if cost_new <= cost:
            x, r, cost = x_new, r_new, cost_new
            jac = jacobian_fn(x)
            lam = max(lam * 0.3, 1e-12)
            if rel_step < step_tol:
                converged = True
                break
        else:
            lam *= 10.0
            if rel_step < step_tol or lam > 1e14:
                # cannot improve: already at the bottom of the basin
                converged = rel_step < step_tol
                break
    grad_norm = float(np.linalg.norm(jac.T @ r))
    cov = _covariance(jac, r)
    return x, cov, it, math.sqrt(cost), grad_norm, converged


# ---------------------------------------------------------------------------
# Lorentzian dip


def _softplus(x: float) -> float:
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


def _softplus_inv(y: float) -> float:
    # inverse of log(1 + e^x); y must be positive
    return math.log(math.expm1(y)) if y < 30 else y


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def lorentzian_profile(wavelengths, center, fwhm, depth, baseline):
    """baseline - depth / (1 + (2 (lambda - center) / fwhm)^2)."""
    u = 2.0 * (np.asarray(wavelengths, dtype=float) - center) / fwhm
    return baseline - depth / (1.0 + u * u)


def fit_lorentzian(trace: TransmissionTrace, initial_guess: dict | None = None) -> FitResult:
    """Fit a Lorentzian dip and report the quality factor center/fwhm.

    Auto-initializes from the minimum-transmittance sample when no guess is
    given.  Raises :class:`NoResonanceError` when the dip depth does not
    exceed three times the noise floor, and :class:`NotConvergedError` when
    the iteration cap is reached.
    """
    wl = np.asarray(trace.wavelengths, dtype=float)
    y = np.asarray(trace.transmittance, dtype=float)
    if wl.size < 8:
        raise ValueError(f"need at least 8 samples, got {wl.size}")

    # work in normalized coordinates so the solver sees O(1) numbers
    wl0 = float(wl.mean())
    scale = float(wl.max() - wl.min())
    if scale <= 0:
        raise ValueError("trace must span a nonzero wavelength range")
    x = (wl - wl0) / scale

    baseline0 = float(np.median(y[y >= np.percentile(y, 50)]))
    depth0 = baseline0 - float(y.min())
    noise = float(np.median(np.abs(np.diff(y)))) / math.sqrt(2.0) * 1.4826
    if depth0 <= 3.0 * noise:
        raise NoResonanceError(
            f"dip depth {depth0:.3g} does not exceed 3x the noise floor {noise:.3g}"
        )

    if initial_guess:
        c0 = (float(initial_guess.get("center", wl[int(np.argmin(y))])) - wl0) / scale
        w0 = float(initial_guess.get("fwhm", scale / 10.0)) / scale
        d0 = float(initial_guess.get("depth", depth0))
        b0 = float(initial_guess.get("baseline", baseline0))
    else:
        c0 = float(x[int(np.argmin(y))])
        below_half = y < baseline0 - depth0 / 2.0
        dx = float(np.median(np.diff(x)))
        w0 = max(float(below_half.sum()) * dx, 2.0 * dx)
        d0 = depth0
        b0 = baseline0

    def unpack(p):
        c, wraw, d, b = p
        return c, _softplus(wraw), d, b

    def residual(p):
        c, w, d, b = unpack(p)
        u = 2.0 * (x - c) / w
        return (b - d / (1.0 + u * u)) - y

    def jacobian(p):
        c, w, d, b = unpack(p)
        u = 2.0 * (x - c) / w
        lor = 1.0 / (1.0 + u * u)
        lor2 = lor * lor
        jc = -d * 4.0 * u * lor2 / w
        jw = -d * 2.0 * u * u * lor2 / w * _sigmoid(p[1])
        jd = -lor
        jb = np.ones_like(x)
        return np.column_stack((jc, jw, jd, jb))

    p0 = np.array([c0, _softplus_inv(w0), d0, b0])
    p, cov, iters, rnorm, gnorm, ok = lm_fit(residual, jacobian, p0)
    if not ok:
        raise NotConvergedError(f"no convergence after {iters} iterations")

    c, w, d, b = unpack(p)
    center = wl0 + c * scale
    fwhm = w * scale
    # chain rule back to physical parameters (the mapping is diagonal)
    grads = np.array([scale, _sigmoid(p[1]) * scale, 1.0, 1.0])
    cov_phys = cov * np.outer(grads, grads)
    q = center / fwhm
    gq = np.array([1.0 / fwhm * scale, -center / fwhm**2 * _sigmoid(p[1]) * scale, 0.0, 0.0])
    var_q = float(gq @ cov @ gq)

    names = ("center", "fwhm", "depth", "baseline", "q")
    params = {"center": center, "fwhm": fwhm, "depth": d, "baseline": b, "q": q}
    errs = {
        "center": math.sqrt(max(cov_phys[0, 0], 0.0)),
        "fwhm": math.sqrt(max(cov_phys[1, 1], 0.0)),
        "depth": math.sqrt(max(cov_phys[2, 2], 0.0)),
        "baseline": math.sqrt(max(cov_phys[3, 3], 0.0)),
        "q": math.sqrt(max(var_q, 0.0)),
    }
    if q <= 0:
        raise FitError(f"fit produced non-positive quality factor {q}")
    return FitResult(names, params, errs, cov_phys, rnorm, True, iters, gnorm)


# ---------------------------------------------------------------------------
# power law


def fit_power_law(x, y) -> FitResult:
    """y = amplitude * x^exponent via equal-weight regression in log-log space."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if x.size < 3:
        raise ValueError(f"need at least 3 samples, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fitting requires strictly positive data")
    lx = np.log(x)
    ly = np.log(y)
    design = np.column_stack((np.ones_like(lx), lx))
    beta, *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = design @ beta - ly
    cov = _covariance(design, resid)
    amplitude = math.exp(beta[0])
    exponent = float(beta[1])
    sd_log_amp = math.sqrt(max(cov[0, 0], 0.0))
    names = ("amplitude", "exponent")
    params = {"amplitude": amplitude, "exponent": exponent}
    errs = {"amplitude": amplitude * sd_log_amp, "exponent": math.sqrt(max(cov[1, 1], 0.0))}
    return FitResult(names, params, errs, cov, float(np.linalg.norm(resid)), True, 0)


# ---------------------------------------------------------------------------
# sinusoid of unit angular frequency


def fit_sinusoid(phases, counts) -> FitResult:
    """counts = offset + amplitude * cos(phase - phase_origin).

    Linear least squares in the basis (1, cos, sin); the amplitude is
    non-negative by construction.  A vanishing amplitude leaves the phase
    origin undetermined, which is flagged through an infinite standard
    error rather than an exception.
    """
    phases = np.asarray(phases, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if phases.shape != counts.shape or phases.ndim != 1:
        raise ValueError("phases and counts must be 1-d arrays of equal length")
    if phases.size < 5:
        raise ValueError(f"need at least 5 samples, got {phases.size}")
    if float(phases.max() - phases.min()) < math.pi * (1.0 - 1e-9):
        raise ValueError("phase sweep must span at least half a period")
    design = np.column_stack((np.ones_like(phases), np.cos(phases), np.sin(phases)))
    beta, *_ = np.linalg.lstsq(design, counts, rcond=None)
    resid = design @ beta - counts
    cov = _covariance(design, resid)
    c0, ca, sa = (float(v) for v in beta)
    amplitude = math.hypot(ca, sa)
    flags: tuple = ()

    tiny = 1e-12 * max(abs(c0), 1.0)
    if amplitude < tiny:
        phase_origin = 0.0
        cov_t = np.diag([cov[0, 0], cov[1, 1] + cov[2, 2], np.inf])
        flags = ("phase-origin-undetermined",)
    else:
        phase_origin = math.atan2(sa, ca)
        # delta method: (offset, amplitude, phase_origin) from (c0, ca, sa)
        g = np.array(
            [
                [1.0, 0.0, 0.0],
                [0.0, ca / amplitude, sa / amplitude],
                [0.0, -sa / amplitude**2, ca / amplitude**2],
            ]
        )
        cov_t = g @ cov @ g.T
    names = ("offset", "amplitude", "phase_origin")
    params = {"offset": c0, "amplitude": amplitude, "phase_origin": phase_origin}
    errs = {
        "offset": math.sqrt(max(cov_t[0, 0], 0.0)),
        "amplitude": math.sqrt(max(cov_t[1, 1], 0.0)),
        "phase_origin": math.sqrt(cov_t[2, 2]) if np.isfinite(cov_t[2, 2]) else math.inf,
    }
    return FitResult(names, params, errs, cov_t, float(np.linalg.norm(resid)), True, 0, flags=flags)

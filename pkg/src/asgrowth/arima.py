"""Non-seasonal ARIMA(p, d, q) estimation and forecasting.

Estimation runs in two stages on the d-times differenced series ``w``
(mean-corrected when drift is enabled):

1. conditional sum of squares (CSS), started from zero coefficients;
2. exact Gaussian maximum likelihood from a Kalman filter over the
   stationary ARMA state space, with the innovation variance profiled out.

Both stages search an unconstrained space that maps onto stationary AR and
invertible MA polynomials through partial autocorrelations.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, signal
from scipy.stats import norm

from .errors import DegenerateInput, LengthMismatch, NonConvergence, NonInvertible
from .series_stats import Z95, as_series

LOG2PI = math.log(2.0 * math.pi)
MAX_ITER = 500
# Kalman filter switches to the fast recursion once the state is this certain
_STEADY_TOL = 1e-14
# |partial autocorrelation| <= tanh(10) keeps AR roots off the unit circle
_X_BOUND = 10.0


@dataclass(frozen=True)
class ArimaSpec:
    p: int
    d: int
    q: int
    include_drift: bool = False

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError("ARIMA orders must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "ArimaSpec":
        """Parse ``"p,d,q"`` or ``"p,d,q,drift"``."""
        parts = [t.strip() for t in re.split(r"[,\s]+", text.strip("() ")) if t.strip()]
        if len(parts) not in (3, 4):
            raise ValueError(f"bad ARIMA spec {text!r}; expected p,d,q[,drift]")
        drift = False
        if len(parts) == 4:
            if parts[3].lower() not in ("drift", "1", "true", "0", "false", "nodrift"):
                raise ValueError(f"bad drift flag {parts[3]!r}")
            drift = parts[3].lower() in ("drift", "1", "true")
        p, d, q = (int(v) for v in parts[:3])
        return cls(p, d, q, drift)

    @property
    def label(self) -> str:
        base = f"ARIMA({self.p},{self.d},{self.q})"
        return base + " with drift" if self.include_drift else base

    def coef_names(self) -> list:
        names = [f"ar{i}" for i in range(1, self.p + 1)]
        names += [f"ma{j}" for j in range(1, self.q + 1)]
        if self.include_drift:
            names.append("drift")
        return names

    def n_params(self) -> int:
        return self.p + self.q + int(self.include_drift) + 1

    def validate(self, n: int) -> None:
        if self.p + self.q == 0 and not (self.include_drift or self.d >= 1):
            raise ValueError(f"{self.label} has no parameters to estimate")
        if n < self.p + self.d + self.q + 3:
            raise DegenerateInput(f"{self.label} needs at least "
                                  f"{self.p + self.d + self.q + 3} observations, got {n}")


@dataclass(frozen=True)
class ArimaFit:
    spec: ArimaSpec
    ar: np.ndarray
    ma: np.ndarray
    drift: Optional[float]
    sigma2: float
    coeff_se: np.ndarray
    z_stats: np.ndarray
    loglik: float
    aicc: float
    residuals: np.ndarray
    fitted: np.ndarray
    series: np.ndarray = field(repr=False)
    method: str = "css-ml"
    css_loglik: Optional[float] = None
    iterations: int = 0
    # predicted state for t = n+1 when the filter never reached steady state
    _state: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def coefficients(self) -> np.ndarray:
        vals = list(self.ar) + list(self.ma)
        if self.drift is not None:
            vals.append(self.drift)
        return np.asarray(vals, dtype=float)

    @property
    def coef_names(self) -> list:
        return self.spec.coef_names()

    @property
    def nobs(self) -> int:
        return self.series.size - self.spec.d

    @property
    def differenced(self) -> np.ndarray:
        return _difference(self.series, self.spec.d)

    def fitted_levels(self) -> np.ndarray:
        """One-step fitted values on the original scale (first ``d`` points omitted)."""
        return self.series[self.spec.d:] - self.residuals

    def summary(self) -> list:
        return [
            {"name": n, "coef": float(c), "se": float(s), "z": float(z)}
            for n, c, s, z in zip(self.coef_names, self.coefficients, self.coeff_se, self.z_stats)
        ]


@dataclass(frozen=True)
class ForecastResult:
    horizon: int
    points: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95

    def rows(self, origin: Optional[int] = None) -> list:
        out = []
        for h in range(self.horizon):
            row = {"h": h + 1}
            if origin is not None:
                row["year"] = origin + h + 1
            row.update(point=float(self.points[h]), se=float(self.se[h]),
                       lower=float(self.lower[h]), upper=float(self.upper[h]))
            out.append(row)
        return out


# ---------------------------------------------------------------- polynomials

def _difference(x: np.ndarray, d: int) -> np.ndarray:
    return np.diff(x, n=d) if d else x.copy()


def _pacf_to_coefs(u: np.ndarray) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to stable AR coefficients."""
    phi = np.zeros(0)
    for k, uk in enumerate(u):
        phi = np.append(phi - uk * phi[::-1], uk) if k else np.array([uk])
    return phi


def _coefs_to_pacf(phi: np.ndarray) -> np.ndarray:
    phi = np.array(phi, dtype=float)
    u = np.zeros(phi.size)
    for k in range(phi.size, 0, -1):
        uk = phi[-1]
        if abs(uk) >= 1:
            raise NonInvertible("coefficients outside the stationary region")
        u[k - 1] = uk
        phi = (phi[:-1] + uk * phi[:-1][::-1]) / (1 - uk * uk)
    return u


def _to_natural(x: np.ndarray, p: int, q: int):
    x = np.clip(x, -_X_BOUND, _X_BOUND)
    ar = _pacf_to_coefs(np.tanh(x[:p]))
    ma = -_pacf_to_coefs(np.tanh(x[p:p + q]))
    return ar, ma


def _to_unconstrained(ar, ma, p: int, q: int, clip: float = 0.999) -> np.ndarray:
    ua = np.clip(_coefs_to_pacf(ar), -clip, clip) if p else np.zeros(0)
    um = np.clip(_coefs_to_pacf(-np.asarray(ma)), -clip, clip) if q else np.zeros(0)
    return np.arctanh(np.concatenate([ua, um]))


def _min_root_modulus(coefs_one_minus: np.ndarray) -> float:
    """Smallest |z| with 1 - sum c_i z^i = 0 (inf for a constant polynomial)."""
    c = np.trim_zeros(np.asarray(coefs_one_minus, dtype=float), "b")
    if c.size == 0:
        return math.inf
    # roots are reciprocals of the companion eigenvalues; stable for tiny trailing terms
    comp = np.zeros((c.size, c.size))
    comp[0] = c
    comp[1:, :-1] = np.eye(c.size - 1)
    rho = float(np.max(np.abs(np.linalg.eigvals(comp))))
    return math.inf if rho == 0 else 1.0 / rho


def integrated_ar(ar, d: int) -> np.ndarray:
    """Coefficients phi* of phi(B)(1-B)^d written as 1 - sum phi*_i B^i."""
    poly = np.concatenate([[1.0], -np.asarray(ar, dtype=float)])
    for _ in range(d):
        poly = np.convolve(poly, [1.0, -1.0])
    return -poly[1:]


def psi_weights_for(ar, ma, d: int, horizon: int) -> np.ndarray:
    """psi_0..psi_{horizon-1} of the MA(infinity) form of an ARIMA model."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    phi = integrated_ar(ar, d)
    theta = np.asarray(ma, dtype=float)
    psi = np.zeros(horizon)
    psi[0] = 1.0
    for j in range(1, horizon):
        acc = theta[j - 1] if j <= theta.size else 0.0
        for i in range(1, min(j, phi.size) + 1):
            acc += phi[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def psi_weights(fit: ArimaFit, horizon: int) -> np.ndarray:
    return psi_weights_for(fit.ar, fit.ma, fit.spec.d, horizon)


# ------------------------------------------------------------- likelihoods

def css_residuals(w: np.ndarray, ar, ma) -> np.ndarray:
    """Conditional innovations for t >= p with pre-sample errors set to zero."""
    p = len(ar)
    u = w[p:].copy()
    for i, a in enumerate(ar, start=1):
        u -= a * w[p - i:w.size - i]
    if len(ma):
        u = signal.lfilter([1.0], np.concatenate([[1.0], ma]), u)
    return u


def _state_space(ar, ma):
    p, q = len(ar), len(ma)
    r = max(p, q + 1)
    T = np.zeros((r, r))
    T[:p, 0] = ar
    T[:-1, 1:] += np.eye(r - 1)
    R = np.zeros(r)
    R[0] = 1.0
    R[1:q + 1] = ma
    return T, R


def _stationary_cov(T: np.ndarray, R: np.ndarray) -> np.ndarray:
    r = T.shape[0]
    rhs = np.outer(R, R).ravel()
    P = np.linalg.solve(np.eye(r * r) - np.kron(T, T), rhs).reshape(r, r)
    return (P + P.T) / 2


def kalman_innovations(w: np.ndarray, ar, ma):
    """Innovations and their (unit-variance-scaled) variances for a zero-mean ARMA.

    Returns ``(v, F, state)`` where ``state`` is the predicted ``(a, P)`` for
    the next time point, or None if the filter reached steady state and the
    tail was computed with the conditional recursion.
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    n = w.size
    T, R = _state_space(ar, ma)
    RR = np.outer(R, R)
    a = np.zeros(T.shape[0])
    P = _stationary_cov(T, R)
    v = np.empty(n)
    F = np.ones(n)
    lag = max(len(ar), len(ma))
    for t in range(n):
        f = P[0, 0]
        if not f > 0:
            raise NonInvertible("non-positive prediction variance")
        e = w[t] - a[0]
        v[t], F[t] = e, f
        k = P[:, 0] / f
        a = T @ (a + k * e)
        Pu = P - np.outer(P[:, 0], P[0, :]) / f
        P = T @ Pu @ T.T + RR
        if t + 1 >= lag and t + 1 < n and np.max(np.abs(Pu)) < _STEADY_TOL:
            b_ = np.concatenate([[1.0], -ar])
            a_ = np.concatenate([[1.0], ma])
            zi = signal.lfiltic(b_, a_, v[t::-1][:len(ma)], w[t::-1][:len(ar)])
            v[t + 1:] = signal.lfilter(b_, a_, w[t + 1:], zi=zi)[0]
            return v, F, None
    return v, F, (a, P)


def _exact_nll(w, ar, ma) -> float:
    try:
        v, F, _ = kalman_innovations(w, ar, ma)
    except (NonInvertible, np.linalg.LinAlgError):
        return math.inf
    n = w.size
    s2 = np.sum(v * v / F) / n
    if not s2 > 0:
        return math.inf
    return 0.5 * (n * (LOG2PI + math.log(s2) + 1.0) + np.sum(np.log(F)))


def _css_nll(w, ar, ma) -> float:
    e = css_residuals(w, ar, ma)
    n = e.size
    s2 = e @ e / n
    if not s2 > 0:
        return math.inf
    return 0.5 * n * (LOG2PI + math.log(s2) + 1.0)


def neg_loglik(fit_or_w, ar=None, ma=None, *, conditional: bool = False) -> float:
    """Profile negative log-likelihood at natural coefficients ``ar``, ``ma``.

    ``fit_or_w`` is either an :class:`ArimaFit` (its centred differenced
    series is used) or an already prepared zero-mean series.
    """
    if isinstance(fit_or_w, ArimaFit):
        w = fit_or_w.differenced - (fit_or_w.drift or 0.0)
    else:
        w = np.asarray(fit_or_w, dtype=float)
    fn = _css_nll if conditional else _exact_nll
    return fn(w, np.asarray(ar, dtype=float), np.asarray(ma, dtype=float))


def numeric_gradient(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def numeric_hessian(f, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    k = x.size
    H = np.zeros((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h**2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej)
                                 - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return H


# ------------------------------------------------------------------ fitting

def _minimize(obj, x0, tol):
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        return optimize.minimize(obj, x0, method="BFGS", jac="3-point",
                                 options={"gtol": tol, "maxiter": MAX_ITER})


def fit(s, spec: ArimaSpec, *, method: str = "css-ml") -> ArimaFit:
    """Estimate an ARIMA model.

    Parameters
    ----------
    s : array_like
        Observations on the original (undifferenced) scale.
    spec : ArimaSpec
    method : {"css-ml", "css"}
        ``"css"`` stops after the conditional stage and reports the
        conditional likelihood.
    """
    if method not in ("css-ml", "css"):
        raise ValueError(f"unknown method {method!r}")
    y = as_series(s)
    spec.validate(y.size)
    p, d, q = spec.p, spec.d, spec.q
    w = _difference(y, d)
    if np.ptp(w) == 0 and p + q > 0:
        raise DegenerateInput("series is constant after differencing")
    mu = float(w.mean()) if spec.include_drift else None
    wc = w - (mu or 0.0)
    k = p + q

    iterations = 0
    css_ll = None
    if k == 0:
        ar, ma = np.zeros(0), np.zeros(0)
        x = np.zeros(0)
    else:
        css_obj = lambda x: _css_nll(wc, *_to_natural(x, p, q))
        res = _minimize(css_obj, np.zeros(k), 1e-8)
        x = res.x
        iterations += res.nit
        ar, ma = _to_natural(x, p, q)
        css_ll = -_css_nll(wc, ar, ma)

    if method == "css":
        e = css_residuals(wc, ar, ma)
        resid = np.concatenate([np.zeros(p), e])
        sigma2 = float(e @ e / e.size)
        loglik = css_ll if k else -0.5 * e.size * (LOG2PI + math.log(sigma2) + 1.0)
        state = None
    else:
        if k:
            best = _exact_nll(wc, ar, ma)
            ml_obj = lambda x: _exact_nll(wc, *_to_natural(x, p, q))
            # the CSS point can sit in a poor basin on short series; a second
            # start from zero costs little and never replaces a better optimum
            starts = [x] if not np.any(x) else [x, np.zeros(k)]
            stalled = []
            for x0 in starts:
                res = _minimize(ml_obj, x0, 1e-7)
                iterations += res.nit
                if res.nit >= MAX_ITER:
                    stalled.append(res)
                    continue
                if res.fun <= best:
                    best = res.fun
                    ar, ma = _to_natural(res.x, p, q)
            if len(stalled) == len(starts):
                res = min(stalled, key=lambda r: r.fun)
                raise NonConvergence(res.nit, float(res.fun), _to_natural(res.x, p, q))
        v, F, state = kalman_innovations(wc, ar, ma)
        sigma2 = float(np.sum(v * v / F) / wc.size)
        loglik = -_exact_nll(wc, ar, ma)
        resid = v

    if p and _min_root_modulus(ar) <= 1.0:
        raise NonInvertible(f"AR roots on or inside the unit circle: {ar}")
    if q and _min_root_modulus(-ma) < 1.0 - 1e-6:
        raise NonInvertible(f"MA roots inside the unit circle: {ma}")

    se = _standard_errors(wc, ar, ma, sigma2, conditional=(method == "css"))
    coefs = np.concatenate([ar, ma])
    if spec.include_drift:
        # long-run variance of the mean of an ARMA process
        lr = (1 + ma.sum()) / (1 - ar.sum())
        se = np.append(se, math.sqrt(sigma2 * lr * lr / w.size))
        coefs = np.append(coefs, mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, coefs / np.where(se > 0, se, 1.0),
                     np.copysign(np.inf, coefs))

    nobs = w.size
    kk = spec.n_params()
    aicc = -2 * loglik + 2 * kk
    aicc += 2 * kk * (kk + 1) / (nobs - kk - 1) if nobs - kk - 1 > 0 else math.inf

    return ArimaFit(spec=spec, ar=ar, ma=ma, drift=mu, sigma2=sigma2, coeff_se=se,
                    z_stats=z, loglik=float(loglik), aicc=float(aicc),
                    residuals=resid, fitted=w - resid, series=y, method=method,
                    css_loglik=css_ll, iterations=iterations, _state=state)


def _standard_errors(wc, ar, ma, sigma2, conditional=False) -> np.ndarray:
    p, q = len(ar), len(ma)
    if p + q == 0:
        return np.zeros(0)
    nll = _css_nll if conditional else _exact_nll

    def f(theta):
        try:
            return nll(wc, theta[:p], theta[p:])
        except (NonInvertible, np.linalg.LinAlgError):
            return math.nan

    with np.errstate(all="ignore"):
        H = numeric_hessian(f, np.concatenate([ar, ma]))
    if not np.all(np.isfinite(H)):
        return np.full(p + q, math.nan)
    try:
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return np.full(p + q, math.nan)
    diag = np.diag(cov)
    with np.errstate(invalid="ignore"):
        return np.where(diag > 0, np.sqrt(np.abs(diag)), math.nan)


def coefficient_significance(f: ArimaFit, threshold: float = Z95) -> list:
    """``(name, coefficient, z, significant)`` per coefficient; significant means |z| > 1.96."""
    return [(name, float(c), float(z), bool(abs(z) > threshold))
            for name, c, z in zip(f.coef_names, f.coefficients, f.z_stats)]


def z_statistic(coef: float, se: float) -> float:
    if se == 0:
        return math.copysign(math.inf, coef) if coef else math.inf
    return coef / se


# --------------------------------------------------------------- forecasting

def _forecast_differenced(f: ArimaFit, horizon: int) -> np.ndarray:
    ar, ma = f.ar, f.ma
    mu = f.drift or 0.0
    if f._state is not None:
        a, _ = f._state
        T, _ = _state_space(ar, ma)
        out = np.empty(horizon)
        for h in range(horizon):
            out[h] = a[0]
            a = T @ a
        return out + mu
    wc = list(f.differenced - mu)
    e = list(f.residuals) + [0.0] * horizon
    n = len(wc)
    for h in range(horizon):
        t = n + h
        val = sum(ar[i - 1] * wc[t - i] for i in range(1, len(ar) + 1))
        val += sum(ma[j - 1] * e[t - j] for j in range(1, len(ma) + 1) if t - j >= 0)
        wc.append(val)
    return np.asarray(wc[n:]) + mu


def forecast(f: ArimaFit, horizon: int, level: float = 0.95) -> ForecastResult:
    """Point forecasts and symmetric normal prediction intervals."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    wf = _forecast_differenced(f, horizon)
    d = f.spec.d
    if d == 1 and np.all(wf == wf[0]):
        # constant steps: h*c avoids the rounding of a running sum
        points = f.series[-1] + wf[0] * np.arange(1, horizon + 1)
    elif d:
        # undo (1-B)^d: y_t = w_t + sum_i c_i y_{t-i}
        c = integrated_ar([], d)
        hist = list(f.series)
        for h in range(horizon):
            hist.append(wf[h] + sum(c[i - 1] * hist[-i] for i in range(1, d + 1)))
        points = np.asarray(hist[len(f.series):])
    else:
        points = wf
    psi = psi_weights(f, horizon)
    se = np.sqrt(f.sigma2 * np.cumsum(psi**2))
    z = Z95 if level == 0.95 else float(norm.ppf(0.5 + level / 2))
    return ForecastResult(horizon, points, se, points - z * se, points + z * se, level)


def holdout_rmse(observed, predicted) -> float:
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if obs.shape != pred.shape:
        raise LengthMismatch(f"{obs.size} observed vs {pred.size} predicted values")
    if obs.size == 0:
        raise LengthMismatch("empty inputs")
    return float(np.sqrt(np.mean((obs - pred) ** 2)))


def simulate(spec: ArimaSpec, ar, ma, n: int, *, sigma: float = 1.0, drift: float = 0.0,
             burn: int = 200, rng=None) -> np.ndarray:
    """Draw one ARIMA path of length ``n`` on the original scale."""
    rng = np.random.default_rng(rng)
    e = rng.normal(scale=sigma, size=n + burn)
    w = signal.lfilter(np.concatenate([[1.0], ma]), np.concatenate([[1.0], -np.asarray(ar)]), e)
    w = w[burn:] + drift
    for _ in range(spec.d):
        w = np.concatenate([[0.0], np.cumsum(w)])
    return w[-n:] if spec.d else w

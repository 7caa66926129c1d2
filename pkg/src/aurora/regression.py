"""Maximum-likelihood regressions for logged behavior.

Three families cover the dependent variables: proportional odds (ordered
logistic) for Likert-style responses, Bernoulli logit for binary outcomes,
and log-link negative binomial for over-dispersed counts. Each fit is a
Newton-type iteration with analytic gradients, converging when the relative
log-likelihood change drops below 1e-10 (at most 100 iterations).

The proportional odds model uses the latent-variable sign convention
P(Y <= j | x) = logistic(alpha_j - x.beta), so positive slopes push mass
toward higher categories; with two categories it reduces to the logit fit.
The negative binomial is the NB2 parameterization, variance = mu + mu^2/theta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import digamma, expit, gammaln
from scipy.optimize import minimize_scalar
from scipy.stats import chi2

from .errors import RegressionError

MAX_ITER = 100
LL_RTOL = 1e-10
_TINY = 1e-300


@dataclass(frozen=True)
class RegressionFit:
    family: str
    coefficients: dict[str, float]
    standard_errors: dict[str, float]
    log_likelihood: float
    aic: float
    hessian_condition_number: float
    converged: bool
    n_obs: int
    n_params: int
    cutpoints: tuple[float, ...] = ()
    dispersion: Optional[float] = None
    deviance: Optional[float] = None
    pearson_chi2: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "coefficients": self.coefficients,
            "standard_errors": self.standard_errors,
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "hessian_condition_number": self.hessian_condition_number,
            "converged": self.converged,
            "n_obs": self.n_obs,
            "n_params": self.n_params,
            "cutpoints": list(self.cutpoints),
            "dispersion": self.dispersion,
            "deviance": self.deviance,
            "pearson_chi2": self.pearson_chi2,
        }


@dataclass(frozen=True)
class LRTest:
    statistic: float
    df: int
    p_value: float


def _check_rank(x: np.ndarray) -> None:
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise RegressionError("SINGULAR_DESIGN", f"rank-deficient {x.shape[1]}-column design")


# ---------------------------------------------------------------------------
# Proportional odds


def _ordinal_parts(params: np.ndarray, y: np.ndarray, x: np.ndarray, n_cats: int):
    """Per-observation interval probabilities and boundary densities."""
    k = x.shape[1]
    beta, alpha = params[:k], params[k:]
    eta = x @ beta
    # z at the upper and lower category boundaries; +-inf at the scale ends.
    z_hi = np.where(y < n_cats - 1, alpha[np.minimum(y, n_cats - 2)] - eta, np.inf)
    z_lo = np.where(y > 0, alpha[np.maximum(y - 1, 0)] - eta, -np.inf)
    f_hi = expit(z_hi)
    f_lo = expit(z_lo)
    p = f_hi - f_lo
    d_hi = np.where(np.isfinite(z_hi), f_hi * (1.0 - f_hi), 0.0)
    d_lo = np.where(np.isfinite(z_lo), f_lo * (1.0 - f_lo), 0.0)
    return p, f_hi, f_lo, d_hi, d_lo


def ordinal_loglike(params: np.ndarray, y: np.ndarray, x: np.ndarray, n_cats: int) -> float:
    """Log-likelihood at params = (slopes, cutpoints); -inf outside the valid region."""
    alpha = params[x.shape[1]:]
    if np.any(np.diff(alpha) <= 0):
        return -np.inf
    p, *_ = _ordinal_parts(params, y, x, n_cats)
    if np.any(p <= 0):
        return -np.inf
    return float(np.log(p).sum())


def ordinal_score(params: np.ndarray, y: np.ndarray, x: np.ndarray, n_cats: int) -> np.ndarray:
    """Analytic gradient of ordinal_loglike in the same parameter order."""
    k = x.shape[1]
    p, _, _, d_hi, d_lo = _ordinal_parts(params, y, x, n_cats)
    p = np.maximum(p, _TINY)
    g_beta = x.T @ ((d_lo - d_hi) / p)
    g_alpha = np.zeros(n_cats - 1)
    for j in range(n_cats - 1):
        g_alpha[j] = (d_hi[y == j] / p[y == j]).sum() - (d_lo[y == j + 1] / p[y == j + 1]).sum()
    return np.concatenate([g_beta, g_alpha])


def _ordinal_hessian(params: np.ndarray, y: np.ndarray, x: np.ndarray, n_cats: int) -> np.ndarray:
    k = x.shape[1]
    m = k + n_cats - 1
    p, f_hi, f_lo, d_hi, d_lo = _ordinal_parts(params, y, x, n_cats)
    p = np.maximum(p, _TINY)
    # Derivatives of the logistic density: f' = f (1 - 2F).
    dp_hi = d_hi * (1.0 - 2.0 * f_hi)
    dp_lo = d_lo * (1.0 - 2.0 * f_lo)
    h_hihi = dp_hi / p - (d_hi / p) ** 2
    h_lolo = -dp_lo / p - (d_lo / p) ** 2
    h_hilo = d_hi * d_lo / (p * p)

    n = len(y)
    design_hi = np.zeros((n, m))
    design_lo = np.zeros((n, m))
    design_hi[:, :k] = -x
    design_lo[:, :k] = -x
    rows = np.arange(n)
    upper = y < n_cats - 1
    design_hi[rows[upper], k + y[upper]] = 1.0
    lower = y > 0
    design_lo[rows[lower], k + y[lower] - 1] = 1.0

    hess = design_hi.T @ (design_hi * h_hihi[:, None])
    hess += design_lo.T @ (design_lo * h_lolo[:, None])
    cross = design_hi.T @ (design_lo * h_hilo[:, None])
    hess += cross + cross.T
    return hess


def fit_ordinal(y: Sequence, design: "DesignMatrix") -> RegressionFit:
    """Proportional-odds fit; the intercept column is absorbed by the cutpoints."""
    x, names = design.without_intercept()
    y_arr = np.asarray(y)
    levels = np.unique(y_arr)
    if len(levels) < 2:
        raise RegressionError("DEGENERATE", "response has a single category")
    codes = np.searchsorted(levels, y_arr)
    n_cats = len(levels)
    if x.shape[1] > 0:
        _check_rank(x)

    # Start at zero slopes with empirical-logit cutpoints (always increasing).
    cum = np.cumsum(np.bincount(codes, minlength=n_cats))[:-1] / len(codes)
    cum = np.clip(cum, 1e-6, 1 - 1e-6)
    params = np.concatenate([np.zeros(x.shape[1]), np.log(cum / (1 - cum))])

    ll = ordinal_loglike(params, codes, x, n_cats)
    converged = False
    for _ in range(MAX_ITER):
        grad = ordinal_score(params, codes, x, n_cats)
        hess = _ordinal_hessian(params, codes, x, n_cats)
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError as exc:
            raise RegressionError("SINGULAR_DESIGN", "information matrix is singular") from exc
        scale = 1.0
        new_ll = -np.inf
        while scale > 1e-12:
            candidate = params + scale * step
            new_ll = ordinal_loglike(candidate, codes, x, n_cats)
            if new_ll >= ll - 1e-12:
                break
            scale /= 2.0
        if new_ll < ll - 1e-12:
            break
        params = params + scale * step
        if abs(new_ll - ll) < LL_RTOL * (abs(ll) + 1.0):
            ll = new_ll
            converged = True
            break
        ll = new_ll
    if not converged:
        raise RegressionError("NOT_CONVERGED", f"no convergence in {MAX_ITER} iterations")

    info = -_ordinal_hessian(params, codes, x, n_cats)
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    k = x.shape[1]
    n_params = k + n_cats - 1
    return RegressionFit(
        family="ordinal",
        coefficients=dict(zip(names, params[:k])),
        standard_errors=dict(zip(names, se[:k])),
        log_likelihood=ll,
        aic=2 * n_params - 2 * ll,
        hessian_condition_number=float(np.linalg.cond(info)),
        converged=True,
        n_obs=len(y_arr),
        n_params=n_params,
        cutpoints=tuple(params[k:]),
    )


# ---------------------------------------------------------------------------
# Bernoulli logit


def logit_loglike(params: np.ndarray, y: np.ndarray, x: np.ndarray,
                  weights: Optional[np.ndarray] = None) -> float:
    eta = x @ params
    # log sigma(eta) and log(1-sigma(eta)) via the stable softplus form.
    log_p = -np.logaddexp(0.0, -eta)
    log_q = -np.logaddexp(0.0, eta)
    w = np.ones_like(eta) if weights is None else weights
    return float((w * (y * log_p + (1 - y) * log_q)).sum())


def logit_score(params: np.ndarray, y: np.ndarray, x: np.ndarray,
                weights: Optional[np.ndarray] = None) -> np.ndarray:
    mu = expit(x @ params)
    w = np.ones_like(mu) if weights is None else weights
    return x.T @ (w * (y - mu))


def fit_logit(y: Sequence, design: "DesignMatrix",
              weights: Optional[Sequence[float]] = None) -> RegressionFit:
    """Bernoulli-logit maximum likelihood by iteratively reweighted least squares."""
    x, names = design.matrix, list(design.columns)
    y_arr = np.asarray(y, dtype=float)
    if set(np.unique(y_arr)) - {0.0, 1.0}:
        raise RegressionError("DEGENERATE", "logit response must be binary")
    if y_arr.min() == y_arr.max():
        raise RegressionError("SEPARATION", "response is constant")
    w_arr = None if weights is None else np.asarray(weights, dtype=float)
    _check_rank(x)

    params = np.zeros(x.shape[1])
    ll = logit_loglike(params, y_arr, x, w_arr)
    converged = False
    for _ in range(MAX_ITER):
        mu = expit(x @ params)
        w = mu * (1 - mu)
        if w_arr is not None:
            w = w * w_arr
        info = x.T @ (x * w[:, None])
        try:
            step = np.linalg.solve(info, logit_score(params, y_arr, x, w_arr))
        except np.linalg.LinAlgError as exc:
            raise RegressionError("SINGULAR_DESIGN", "information matrix is singular") from exc
        scale = 1.0
        new_ll = -np.inf
        while scale > 1e-12:
            candidate = params + scale * step
            new_ll = logit_loglike(candidate, y_arr, x, w_arr)
            if new_ll >= ll - 1e-12:
                break
            scale /= 2.0
        params = params + scale * step
        if np.abs(params).max() > 100.0:
            raise RegressionError("SEPARATION", "diverging coefficients")
        if abs(new_ll - ll) < LL_RTOL * (abs(ll) + 1.0):
            ll = new_ll
            converged = True
            break
        ll = new_ll
    if not converged:
        raise RegressionError("NOT_CONVERGED", f"no convergence in {MAX_ITER} iterations")
    # Separated data plateaus the likelihood while fitted probabilities pin
    # to the boundary; catch it before reporting absurd odds.
    mu = expit(x @ params)
    if mu.min() < 1e-10 or mu.max() > 1.0 - 1e-10:
        raise RegressionError("SEPARATION", "fitted probabilities at the boundary")
    w = mu * (1 - mu) if w_arr is None else mu * (1 - mu) * w_arr
    info = x.T @ (x * w[:, None])
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    n_params = x.shape[1]
    return RegressionFit(
        family="logit",
        coefficients=dict(zip(names, params)),
        standard_errors=dict(zip(names, se)),
        log_likelihood=ll,
        aic=2 * n_params - 2 * ll,
        hessian_condition_number=float(np.linalg.cond(info)),
        converged=True,
        n_obs=len(y_arr),
        n_params=n_params,
    )


# ---------------------------------------------------------------------------
# Negative binomial (NB2, log link)


def nb_loglike(params: np.ndarray, y: np.ndarray, x: np.ndarray) -> float:
    """Log-likelihood at params = (slopes..., log(theta))."""
    beta, theta = params[:-1], np.exp(params[-1])
    eta = np.clip(x @ beta, -500, 500)
    mu = np.exp(eta)
    ll = (gammaln(y + theta) - gammaln(theta) - gammaln(y + 1)
          + theta * np.log(theta) + y * eta - (y + theta) * np.log(mu + theta))
    return float(ll.sum())


def nb_score(params: np.ndarray, y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Analytic gradient of nb_loglike over (slopes..., log(theta))."""
    beta, log_theta = params[:-1], params[-1]
    theta = np.exp(log_theta)
    mu = np.exp(np.clip(x @ beta, -500, 500))
    g_beta = x.T @ (theta * (y - mu) / (theta + mu))
    dtheta = (digamma(y + theta) - digamma(theta) + np.log(theta) + 1.0
              - np.log(mu + theta) - (y + theta) / (mu + theta)).sum()
    return np.concatenate([g_beta, [dtheta * theta]])


def _nb_theta_update(beta: np.ndarray, log_theta: float, y: np.ndarray, x: np.ndarray) -> float:
    """Profile ML for the dispersion with slopes held fixed."""
    params = np.concatenate([beta, [log_theta]])

    def neg(u: float) -> float:
        params[-1] = u
        return -nb_loglike(params, y, x)

    result = minimize_scalar(neg, bounds=(-10.0, 15.0), method="bounded",
                             options={"xatol": 1e-10})
    return float(result.x)


def fit_nb(y: Sequence, design: "DesignMatrix") -> RegressionFit:
    """NB2 maximum likelihood: Fisher-scoring steps on the slopes alternate
    with univariate ML updates of the dispersion."""
    x, names = design.matrix, list(design.columns)
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0):
        raise RegressionError("DEGENERATE", "counts must be non-negative")
    if y_arr.max() == 0:
        raise RegressionError("DEGENERATE", "all counts are zero")
    _check_rank(x)

    mean = y_arr.mean()
    var = y_arr.var()
    theta0 = mean * mean / (var - mean) if var > mean else 100.0
    log_theta = float(np.log(np.clip(theta0, 1e-2, 1e6)))
    params = np.zeros(x.shape[1])
    if design.has_intercept:
        params[list(design.columns).index("intercept")] = np.log(mean + 1e-9)

    ll = nb_loglike(np.concatenate([params, [log_theta]]), y_arr, x)
    converged = False
    for _ in range(MAX_ITER):
        theta = np.exp(log_theta)
        mu = np.exp(np.clip(x @ params, -500, 500))
        w = theta * mu / (theta + mu)
        info = x.T @ (x * w[:, None])
        score = x.T @ (theta * (y_arr - mu) / (theta + mu))
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError as exc:
            raise RegressionError("SINGULAR_DESIGN", "information matrix is singular") from exc
        scale = 1.0
        while scale > 1e-12:
            candidate = params + scale * step
            if nb_loglike(np.concatenate([candidate, [log_theta]]), y_arr, x) >= ll - 1e-12:
                break
            scale /= 2.0
        params = params + scale * step
        log_theta = _nb_theta_update(params, log_theta, y_arr, x)
        new_ll = nb_loglike(np.concatenate([params, [log_theta]]), y_arr, x)
        if abs(new_ll - ll) < LL_RTOL * (abs(ll) + 1.0):
            ll = new_ll
            converged = True
            break
        ll = new_ll
    if not converged:
        raise RegressionError("NOT_CONVERGED", f"no convergence in {MAX_ITER} iterations")

    theta = float(np.exp(log_theta))
    mu = np.exp(np.clip(x @ params, -500, 500))
    w = theta * mu / (theta + mu)
    info = x.T @ (x * w[:, None])
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        dev_terms = np.where(y_arr > 0, y_arr * np.log(y_arr / mu), 0.0) \
            - (y_arr + theta) * np.log((y_arr + theta) / (mu + theta))
    deviance = float(2.0 * dev_terms.sum())
    pearson = float((((y_arr - mu) ** 2) / (mu + mu * mu / theta)).sum())
    n_params = x.shape[1] + 1
    return RegressionFit(
        family="negative_binomial",
        coefficients=dict(zip(names, params)),
        standard_errors=dict(zip(names, se)),
        log_likelihood=ll,
        aic=2 * n_params - 2 * ll,
        hessian_condition_number=float(np.linalg.cond(info)),
        converged=True,
        n_obs=len(y_arr),
        n_params=n_params,
        dispersion=theta,
        deviance=deviance,
        pearson_chi2=pearson,
    )


# ---------------------------------------------------------------------------
# Reporting helpers


def odds_ratio(fit: RegressionFit, column: str, z: float = 1.96) -> tuple[float, tuple[float, float]]:
    """exp(beta) with the Wald 95% interval exp(beta +- z*se)."""
    beta = fit.coefficients[column]
    se = fit.standard_errors[column]
    return float(np.exp(beta)), (float(np.exp(beta - z * se)), float(np.exp(beta + z * se)))


def lr_test(full: RegressionFit, reduced: RegressionFit) -> LRTest:
    """Likelihood-ratio test of a reduced model nested in a full one."""
    df = full.n_params - reduced.n_params
    if df <= 0:
        raise RegressionError("NESTING_VIOLATION", "reduced model is not smaller")
    statistic = max(0.0, 2.0 * (full.log_likelihood - reduced.log_likelihood))
    return LRTest(statistic=statistic, df=df, p_value=float(chi2.sf(statistic, df)))


# ---------------------------------------------------------------------------
# Design matrices

# Reference levels match the reporting convention: effects are relative to
# the plain-list interface, to non-capital users, and to the head-to-head
# comparison of the two diversity methods.
REFERENCE_LEVELS = {"condition": "baseline", "location": "NOT-RM", "comparison": "DIV/PM"}


@dataclass(frozen=True)
class DesignMatrix:
    columns: tuple[str, ...]
    matrix: np.ndarray
    response: Optional[np.ndarray] = None
    response_name: Optional[str] = None

    @property
    def has_intercept(self) -> bool:
        return "intercept" in self.columns

    def without_intercept(self) -> tuple[np.ndarray, list[str]]:
        keep = [i for i, c in enumerate(self.columns) if c != "intercept"]
        return self.matrix[:, keep], [self.columns[i] for i in keep]


@dataclass(frozen=True)
class Formula:
    response: str
    factors: tuple[str, ...]
    interaction: bool


def parse_formula(text: str) -> Formula:
    """Parse "y ~ C(a) x C(b)" / "y ~ C(a) + C(b)"; x (or *) adds the interaction."""
    if "~" not in text:
        raise RegressionError("BAD_FORMULA", text)
    left, right = text.split("~", 1)
    interaction = any(op in right for op in ("×", "*", " x ")) or right.strip().endswith(" x")
    parts = [p.strip() for p in right.replace("×", "+").replace("*", "+").replace(" x ", "+").split("+")]
    factors = []
    for part in parts:
        if not part:
            continue
        if part.startswith("C(") and part.endswith(")"):
            factors.append(part[2:-1].strip())
        else:
            factors.append(part)
    if not factors:
        raise RegressionError("BAD_FORMULA", text)
    return Formula(response=left.strip(), factors=tuple(factors), interaction=interaction)


def _get(record, name: str):
    if isinstance(record, dict):
        return record[name]
    return getattr(record, name)


def build_design(records: Sequence, formula: Formula) -> DesignMatrix:
    """Dummy-coded design: intercept, per-factor contrasts against the
    reference level, then (for interaction formulas) elementwise products."""
    if not records:
        raise RegressionError("EMPTY_DESIGN", "no records")
    factor_levels: dict[str, list[str]] = {}
    for factor in formula.factors:
        levels = sorted({str(_get(r, factor)) for r in records})
        ref = REFERENCE_LEVELS.get(factor)
        if ref is None or ref not in levels:
            ref = levels[0]
        factor_levels[factor] = [lv for lv in levels if lv != ref]

    columns = ["intercept"]
    for factor in formula.factors:
        columns += [f"{factor}[{lv}]" for lv in factor_levels[factor]]
    if formula.interaction:
        if len(formula.factors) != 2:
            raise RegressionError("BAD_FORMULA", "interaction needs exactly two factors")
        fa, fb = formula.factors
        columns += [f"{fa}[{la}]:{fb}[{lb}]"
                    for la in factor_levels[fa] for lb in factor_levels[fb]]

    rows = np.zeros((len(records), len(columns)))
    rows[:, 0] = 1.0
    for i, record in enumerate(records):
        col = 1
        hits: dict[str, str] = {}
        for factor in formula.factors:
            value = str(_get(record, factor))
            hits[factor] = value
            for lv in factor_levels[factor]:
                rows[i, col] = 1.0 if value == lv else 0.0
                col += 1
        if formula.interaction:
            fa, fb = formula.factors
            for la in factor_levels[fa]:
                for lb in factor_levels[fb]:
                    rows[i, col] = 1.0 if (hits[fa] == la and hits[fb] == lb) else 0.0
                    col += 1

    response = None
    if formula.response:
        try:
            response = np.asarray([float(_get(r, formula.response)) for r in records])
        except (KeyError, AttributeError):
            response = None
    return DesignMatrix(columns=tuple(columns), matrix=rows,
                        response=response, response_name=formula.response or None)

"""Random-intercept linear mixed model fitted by REML.

The model is ``y = X beta + Z b + e`` with one intercept per group,
``b ~ N(0, sigma2_b I)`` and ``e ~ N(0, sigma2_e I)``.  Writing
``theta = sigma2_b / sigma2_e`` the marginal covariance is
``sigma2_e * V0`` with ``V0 = I + theta Z Z'``, which is block diagonal.
For a group of size m,

    V0_g^-1 = I - theta / (1 + theta m) J,    log|V0_g| = log(1 + theta m),

so every quantity below reduces to per-group sums.  ``beta`` and
``sigma2_e`` are profiled out and the remaining one-dimensional REML
criterion is minimised over ``log theta``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy import linalg, optimize, stats

from .formula import ModelSpec

logger = logging.getLogger(__name__)

THETA_MIN = 1e-10
THETA_MAX = 1e6
RANK_TOL = 1e-10
INTERCEPT = "Intercept"


class LmmError(ValueError):
    pass


class DesignError(LmmError):
    pass


class NumericalError(LmmError, ArithmeticError):
    def __init__(self, message: str, theta: Optional[float] = None):
        self.theta = theta
        super().__init__(message if theta is None else f"{message} (theta={theta!r})")


class ConvergenceError(LmmError, RuntimeError):
    pass


@dataclass
class DesignData:
    y: np.ndarray
    X: np.ndarray
    groups: np.ndarray  # 0-based group codes
    group_labels: tuple[str, ...]
    terms: tuple[str, ...] = ()
    response: str = "y"
    group_name: str = "group"

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        self.groups = np.asarray(self.groups, dtype=np.intp)
        if not self.terms:
            self.terms = (INTERCEPT,) + tuple(f"x{j}" for j in range(1, self.X.shape[1]))

    @property
    def n_obs(self) -> int:
        return self.y.shape[0]

    @property
    def n_groups(self) -> int:
        return len(self.group_labels)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.groups, minlength=self.n_groups)


def _encode(labels) -> tuple[np.ndarray, tuple[str, ...]]:
    """Integer-code labels in order of first appearance."""
    index: dict = {}
    codes = np.empty(len(labels), dtype=np.intp)
    for i, lab in enumerate(labels):
        codes[i] = index.setdefault(str(lab), len(index))
    return codes, tuple(index)


def _check_rank(X: np.ndarray, terms: Sequence[str]) -> None:
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        bad = [t for t, n in zip(terms, norms) if n == 0]
        raise DesignError(f"design matrix is rank deficient: all-zero column(s) {bad}")
    s = np.linalg.svd(X / norms, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise DesignError(
            f"design matrix is rank deficient (collinear columns among {list(terms)})"
        )


def make_design(y, X, groups, terms: Sequence[str] = (), response: str = "y",
                group_name: str = "group") -> DesignData:
    """Validated design from raw arrays; ``X`` must include the intercept column."""
    y = np.asarray(y, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] != y.shape[0]:
        X = X.T
    if X.shape[0] != y.shape[0]:
        raise DesignError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if len(groups) != y.shape[0]:
        raise DesignError("groups and y differ in length")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise DesignError("non-finite values in y or X")
    codes, labels = _encode(groups)
    terms = tuple(terms) or (INTERCEPT,) + tuple(f"x{j}" for j in range(1, X.shape[1]))
    if len(labels) < 2:
        raise DesignError(f"grouping factor {group_name!r} has a single level; need at least 2")
    n, p = X.shape
    if n <= p + 1:
        raise DesignError(f"need more than p + 1 = {p + 1} observations, have {n}")
    _check_rank(X, terms)
    return DesignData(y, X, codes, labels, terms, response, group_name)


def _column(data, name: str) -> np.ndarray:
    if isinstance(data, Mapping):
        if name not in data:
            raise DesignError(f"column {name!r} not found; available: {sorted(data)}")
        return np.asarray(data[name])
    try:
        return data.column(name)
    except KeyError:
        raise DesignError(f"column {name!r} not found in dataset") from None


def build_design(data, spec: ModelSpec) -> DesignData:
    """Design matrices for ``spec`` from a :class:`~memload.dataset.Dataset`
    or a mapping of column name to array.  Predictors stay on their raw scale."""
    y = np.asarray(_column(data, spec.response), dtype=float)
    cols = [np.ones_like(y)] + [np.asarray(_column(data, t), dtype=float) for t in spec.fixed_terms]
    groups = _column(data, spec.group)
    return make_design(y, np.column_stack(cols), list(groups), (INTERCEPT,) + spec.fixed_terms,
                       spec.response, spec.group)


class _Profile:
    """Per-group sufficient statistics shared by every criterion evaluation.

    Group-centred cross products are formed once so that
    X'V0^-1 X = W + sum_g s_g s_g' / (m_g (1 + theta m_g)) carries no
    cancellation, however large theta gets.
    """

    def __init__(self, d: DesignData):
        self.d = d
        g, G = d.groups, d.n_groups
        self.m = np.bincount(g, minlength=G).astype(float)
        if np.any(self.m == 0):
            raise DesignError("every group must be non-empty")
        self.S = np.stack([np.bincount(g, weights=col, minlength=G) for col in d.X.T], axis=1)
        self.T = np.bincount(g, weights=d.y, minlength=G)
        Xc = d.X - (self.S / self.m[:, None])[g]
        yc = d.y - (self.T / self.m)[g]
        self.W = Xc.T @ Xc
        self.Wy = Xc.T @ yc
        self.dof = d.n_obs - d.p

    def solve(self, theta: float):
        """GLS pieces at ``theta``: (beta, cholesky factor, residual, q, group residual sums)."""
        d = self.d
        scale = 1.0 / (self.m * (1.0 + theta * self.m))
        A = self.W + (self.S * scale[:, None]).T @ self.S
        b = self.Wy + self.S.T @ (scale * self.T)
        diag = np.diag(A)
        try:
            cf = linalg.cho_factor(A, lower=True, check_finite=True)
        except (linalg.LinAlgError, ValueError):
            raise NumericalError("X'V0^-1 X is not positive definite", theta) from None
        # pivot relative to its own diagonal entry, so raw predictor scales do not matter
        if np.min(np.diag(cf[0]) ** 2 / diag) <= RANK_TOL:
            raise NumericalError("X'V0^-1 X is numerically singular", theta)
        beta = linalg.cho_solve(cf, b)
        r = d.y - d.X @ beta
        R = np.bincount(d.groups, weights=r, minlength=d.n_groups)
        rc = r - (R / self.m)[d.groups]
        q = rc @ rc + np.sum(R * R * scale)
        return beta, cf, r, q, R

    def criterion(self, theta: float) -> float:
        beta, cf, r, q, R = self.solve(theta)
        if not q > 0:
            raise NumericalError("residual quadratic form is not positive", theta)
        value = (self.dof * math.log(q / self.dof)
                 + float(np.sum(np.log1p(theta * self.m)))
                 + 2.0 * float(np.sum(np.log(np.diag(cf[0])))))
        if not math.isfinite(value):
            raise NumericalError("non-finite REML criterion", theta)
        return value

    def gradient(self, theta: float) -> float:
        """d criterion / d theta = tr(P ZZ') - (N - p) y'PZZ'Py / y'Py."""
        beta, cf, r, q, R = self.solve(theta)
        inv1 = 1.0 / (1.0 + theta * self.m)
        w = self.S * inv1[:, None]
        trace = float(np.sum(self.m * inv1)) - float(np.sum(w * linalg.cho_solve(cf, w.T).T))
        return trace - self.dof * float(np.sum((R * inv1) ** 2)) / q


def profiled_reml_criterion(theta: float, d: DesignData) -> float:
    """Profiled REML criterion (-2 restricted log-likelihood up to a constant)

        (N - p) log sigma2(theta) + log|V0| + log|X'V0^-1 X|

    with ``sigma2(theta) = r'V0^-1 r / (N - p)`` at the GLS estimate.
    """
    if not theta >= 0:
        raise NumericalError("theta must be non-negative", theta)
    return _Profile(d).criterion(float(theta))


class FitStats(NamedTuple):
    r2: float
    mse: float
    mae: float


def fit_statistics(observed, predicted) -> FitStats:
    o = np.asarray(observed, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if o.shape != p.shape:
        raise ValueError(f"length mismatch: {o.shape} vs {p.shape}")
    if o.size < 2:
        raise ValueError("need at least two observations")
    ss_tot = float(np.sum((o - o.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("R2 is undefined for a constant observed vector")
    err = o - p
    return FitStats(1.0 - float(err @ err) / ss_tot, float(np.mean(err ** 2)), float(np.mean(np.abs(err))))


@dataclass
class LmmFit:
    beta: np.ndarray
    beta_cov: np.ndarray
    sigma2_e: float
    sigma2_b: float
    theta: float
    blups: np.ndarray
    reml_criterion: float
    n_obs: int
    n_groups: int
    p: int
    terms: tuple[str, ...]
    group_labels: tuple[str, ...]
    response: str = "y"
    group_name: str = "group"
    converged: bool = True
    boundary: Optional[str] = None
    n_evals: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.beta_cov))

    @property
    def formula(self) -> str:
        rhs = " + ".join(self.terms[1:]) or "1"
        return f"{self.response} ~ {rhs} + (1|{self.group_name})"

    def coef(self, term: str) -> float:
        return float(self.beta[self.terms.index(term)])


def fit_at(d: DesignData, theta: float, n_evals: int = 0, boundary: Optional[str] = None) -> LmmFit:
    """All fit quantities at a fixed variance ratio (``theta = 0`` is OLS)."""
    prof = _Profile(d)
    beta, cf, r, q, R = prof.solve(theta)
    sigma2_e = q / prof.dof
    if not sigma2_e > 0:
        raise NumericalError("residual variance is not positive", theta)
    p = d.p
    beta_cov = sigma2_e * linalg.cho_solve(cf, np.eye(p))
    beta_cov = 0.5 * (beta_cov + beta_cov.T)
    shrink = theta * prof.m / (1.0 + theta * prof.m)
    blups = shrink * R / prof.m
    fit = LmmFit(
        beta=beta, beta_cov=beta_cov, sigma2_e=float(sigma2_e), sigma2_b=float(theta * sigma2_e),
        theta=float(theta), blups=blups, reml_criterion=prof.criterion(theta),
        n_obs=d.n_obs, n_groups=d.n_groups, p=p, terms=tuple(d.terms),
        group_labels=tuple(d.group_labels), response=d.response, group_name=d.group_name,
        n_evals=n_evals, boundary=boundary,
    )
    fit.stats = {
        "conditional": fit_statistics(d.y, predict(fit, d, conditional=True))._asdict(),
        "marginal": fit_statistics(d.y, predict(fit, d, conditional=False))._asdict(),
    }
    return fit


def fit_reml(d: DesignData, tol: float = 1e-9, max_iter: int = 500, grid_size: int = 49) -> LmmFit:
    """REML fit by a one-dimensional search over ``u = log theta``.

    A coarse grid on [log 1e-10, log 1e6] brackets the minimum, bounded
    Brent (golden section with parabolic steps) refines it, and the root of
    the analytic derivative polishes the result so estimates are stable to
    near machine precision.  A minimum at the lower edge with a
    non-negative slope at theta = 0 is reported as ``sigma2_b = 0``.
    """
    prof = _Profile(d)
    evals = 0

    def f(u):
        nonlocal evals
        evals += 1
        return prof.criterion(math.exp(u))

    def slope(u):
        nonlocal evals
        evals += 1
        th = math.exp(u)
        return th * prof.gradient(th)

    lo, hi = math.log(THETA_MIN), math.log(THETA_MAX)
    grid = np.linspace(lo, hi, grid_size)
    values = np.array([f(u) for u in grid])
    k = int(np.argmin(values))

    if k == 0 and prof.gradient(0.0) >= 0:
        return fit_at(d, 0.0, evals, boundary="lower")
    if k == grid_size - 1 and slope(hi) <= 0:
        logger.warning("variance ratio reached the upper bound %g", THETA_MAX)
        return fit_at(d, THETA_MAX, evals, boundary="upper")

    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid_size - 1)]
    res = optimize.minimize_scalar(
        f, bounds=(a, b), method="bounded",
        options={"xatol": tol * max(1.0, abs(grid[k])), "maxiter": max_iter},
    )
    if not res.success:
        raise ConvergenceError(f"REML search did not converge in {max_iter} iterations: {res.message}")
    u = float(res.x)
    sa, sb = slope(a), slope(b)
    if sa < 0 < sb:
        u = optimize.brentq(slope, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    theta = math.exp(u)

    # a second local minimum at the boundary beats a worse interior one
    if prof.criterion(0.0) < prof.criterion(theta) and prof.gradient(0.0) >= 0:
        return fit_at(d, 0.0, evals, boundary="lower")
    return fit_at(d, theta, evals)


def _group_effects(fit: LmmFit, d: DesignData) -> tuple[np.ndarray, np.ndarray]:
    lookup = {lab: i for i, lab in enumerate(fit.group_labels)}
    idx = np.array([lookup.get(lab, -1) for lab in d.group_labels], dtype=np.intp)[d.groups]
    unseen = idx < 0
    effects = np.where(unseen, 0.0, fit.blups[np.maximum(idx, 0)])
    return effects, unseen


def predict(fit: LmmFit, d: DesignData, conditional: bool = True, return_unseen: bool = False):
    """``X beta`` plus, when conditional, the group's BLUP.

    Groups unknown to the fit get the marginal prediction and a warning.
    """
    if d.X.shape[1] != fit.p:
        raise LmmError(f"design has {d.X.shape[1]} columns, fit has {fit.p}")
    pred = d.X @ fit.beta
    unseen = np.zeros(d.n_obs, dtype=bool)
    if conditional:
        effects, unseen = _group_effects(fit, d)
        if unseen.any():
            missing = sorted({d.group_labels[g] for g in d.groups[unseen]})
            warnings.warn(f"unseen groups {missing}: using marginal predictions", stacklevel=2)
        pred = pred + effects
    return (pred, unseen) if return_unseen else pred


@dataclass
class TermRow:
    term: str
    estimate: float
    se: float
    z: float
    p: float
    ci_low: float
    ci_high: float


@dataclass
class Summary:
    rows: list[TermRow]
    sigma2_b: float
    sigma2_e: float
    reml_criterion: float

    def row(self, term: str) -> TermRow:
        for r in self.rows:
            if r.term == term:
                return r
        raise KeyError(term)


def z_inference(estimate: float, se: float) -> TermRow:
    z = estimate / se
    return TermRow("", estimate, se, z, float(2.0 * stats.norm.sf(abs(z))),
                   estimate - 1.96 * se, estimate + 1.96 * se)


def summarize(fit: LmmFit) -> Summary:
    rows = []
    for term, est, se in zip(fit.terms, fit.beta, fit.se):
        row = z_inference(float(est), float(se))
        row.term = term
        rows.append(row)
    return Summary(rows, fit.sigma2_b, fit.sigma2_e, fit.reml_criterion)


def fit_to_dict(fit: LmmFit, digits: int = 10) -> dict:
    """JSON-ready document; floats are rounded to ``digits`` significant digits."""

    def num(x):
        return float(f"{float(x):.{digits}g}")

    summ = summarize(fit)
    return {
        "formula": fit.formula,
        "response": fit.response,
        "group": fit.group_name,
        "terms": list(fit.terms),
        "beta": {r.term: num(r.estimate) for r in summ.rows},
        "se": {r.term: num(r.se) for r in summ.rows},
        "z": {r.term: num(r.z) for r in summ.rows},
        "p": {r.term: num(r.p) for r in summ.rows},
        "ci_low": {r.term: num(r.ci_low) for r in summ.rows},
        "ci_high": {r.term: num(r.ci_high) for r in summ.rows},
        "beta_cov": [[num(v) for v in row] for row in fit.beta_cov],
        "sigma2_b": num(fit.sigma2_b),
        "sigma2_e": num(fit.sigma2_e),
        "theta": num(fit.theta),
        "blups": {lab: num(v) for lab, v in zip(fit.group_labels, fit.blups)},
        "reml_criterion": num(fit.reml_criterion),
        "n_obs": fit.n_obs,
        "n_groups": fit.n_groups,
        "p": fit.p,
        "fit_statistics": {k: {s: num(v) for s, v in st.items()} for k, st in fit.stats.items()},
        "convergence": {"converged": fit.converged, "boundary": fit.boundary,
                        "criterion_evaluations": fit.n_evals},
    }


def fit_from_dict(doc: dict) -> LmmFit:
    try:
        terms = tuple(doc["terms"])
        labels = tuple(doc["blups"])
        conv = doc.get("convergence", {})
        return LmmFit(
            beta=np.array([doc["beta"][t] for t in terms], dtype=float),
            beta_cov=np.array(doc["beta_cov"], dtype=float),
            sigma2_e=float(doc["sigma2_e"]),
            sigma2_b=float(doc["sigma2_b"]),
            theta=float(doc["theta"]),
            blups=np.array([doc["blups"][g] for g in labels], dtype=float),
            reml_criterion=float(doc["reml_criterion"]),
            n_obs=int(doc["n_obs"]), n_groups=int(doc["n_groups"]), p=int(doc["p"]),
            terms=terms, group_labels=labels,
            response=doc["response"], group_name=doc["group"],
            converged=bool(conv.get("converged", True)), boundary=conv.get("boundary"),
            n_evals=int(conv.get("criterion_evaluations", 0)),
            stats=doc.get("fit_statistics", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise LmmError(f"malformed fit document: {exc!r}") from None

"""Errors-in-variables prediction benchmark.

Model: ``Y = gamma Z + eps`` and ``X_i = c Z + eta_i`` with ``Z, eps ~ N(0, 1)``
and ``eta_i ~ N(0, sigma_i^2)``, all independent. The conditional mean
``E[Y | X]`` is linear in ``X`` and known in closed form, so it serves as the
Bayes-optimal yardstick for PCA regression and treelet regression.
"""
from dataclasses import dataclass, field, replace
import csv
import io
import json
import math

import numpy as np

from .errors import InvalidDataError, SingularFitError, TreeletsError
from .linalg import reference_eigh, sample_covariance
from .treelet import TreeletModel, build_treelet

SWEEP_HEADER = ("c", "method", "mode", "mse_mean", "mse_se", "replicates")


@dataclass(frozen=True)
class EivSpec:
    p: int
    gamma: float
    c: float
    noise_vars: tuple = None

    def __post_init__(self):
        if self.p < 1:
            raise InvalidDataError(f"p must be >= 1, got {self.p}")
        nv = (1.0,) * self.p if self.noise_vars is None else tuple(float(v) for v in self.noise_vars)
        if len(nv) != self.p:
            raise InvalidDataError(f"expected {self.p} noise variances, got {len(nv)}")
        if not all(math.isfinite(v) and v > 0 for v in nv):
            raise InvalidDataError("noise variances must be finite and positive")
        if not (math.isfinite(self.gamma) and math.isfinite(self.c)):
            raise InvalidDataError("gamma and c must be finite")
        object.__setattr__(self, "noise_vars", nv)

    @property
    def precision_sum(self):
        """``S = sum_i 1 / sigma_i^2``."""
        return float(np.sum(1.0 / np.asarray(self.noise_vars)))

    def to_dict(self):
        return {"p": self.p, "gamma": self.gamma, "c": self.c, "noise_vars": list(self.noise_vars)}


def default_c_grid(p):
    return [m / math.sqrt(p) for m in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)]


def sample_eiv(spec, n, seed):
    """Return ``(y, X)`` with ``n`` i.i.d. rows; deterministic given ``seed``."""
    if n < 1:
        raise InvalidDataError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    eps = rng.standard_normal(n)
    eta = rng.standard_normal((n, spec.p)) * np.sqrt(spec.noise_vars)
    y = spec.gamma * z + eps
    X = spec.c * z[:, None] + eta
    return y, X


def oracle_predict(spec, x):
    """Closed-form ``E[Y | X = x]``; ``x`` may be one vector or rows of samples."""
    w = 1.0 / np.asarray(spec.noise_vars)
    scale = spec.gamma * spec.c / (1.0 + spec.c**2 * spec.precision_sum)
    return scale * (np.asarray(x, dtype=float) @ w)


def oracle_mse(spec):
    """Bayes risk ``gamma^2 / (1 + c^2 S) + 1``."""
    return spec.gamma**2 / (1.0 + spec.c**2 * spec.precision_sum) + 1.0


@dataclass(frozen=True)
class MethodResult:
    method: str
    mses: tuple
    mode: str = ""
    info: dict = field(default_factory=dict, compare=False)

    @property
    def replicates(self):
        return len(self.mses)

    @property
    def mean(self):
        return float(np.mean(self.mses)) if self.mses else math.nan

    @property
    def se(self):
        """Monte-Carlo standard error over replicates; undefined below two."""
        if len(self.mses) < 2:
            return math.nan
        return float(np.std(self.mses, ddof=1) / math.sqrt(len(self.mses)))


@dataclass(frozen=True)
class LinearPredictor:
    """``y_hat = intercept + (x - center) @ coef``."""

    center: np.ndarray
    coef: np.ndarray
    intercept: float

    def predict(self, X):
        return self.intercept + (np.asarray(X, dtype=float) - self.center) @ self.coef


def _ols(F, y):
    """Least squares of ``y`` on the columns of ``F`` plus an intercept."""
    n, k = F.shape
    if n < k + 2:
        raise SingularFitError(f"{n} rows cannot support {k} features plus intercept")
    Fc = F - F.mean(axis=0)
    if k and np.linalg.matrix_rank(Fc) < k:
        raise SingularFitError("selected features are collinear")
    beta = np.linalg.lstsq(Fc, y - y.mean(), rcond=None)[0] if k else np.zeros(0)
    intercept = float(y.mean() - F.mean(axis=0) @ beta) if k else float(y.mean())
    return intercept, beta


def _mse(model, y, X):
    r = y - model.predict(X)
    return float(np.mean(r * r))


def fit_pca(y, X, q=1):
    X = np.asarray(X, dtype=float)
    if not 1 <= q <= X.shape[1]:
        raise InvalidDataError(f"q must be in 1..{X.shape[1]}, got {q}")
    center = X.mean(axis=0)
    _, V = reference_eigh(sample_covariance(X))
    W = V[:, :q]
    intercept, beta = _ols((X - center) @ W, y)
    return LinearPredictor(center, W @ beta, intercept)


def pca_regress(train, test, q=1):
    model = fit_pca(*train, q=q)
    return MethodResult("pca", (_mse(model, *test),), info={"q": q})


def treelet_candidates(model, level_mode, level=None):
    """Candidate feature rows and their labels ``(level, coordinate)``.

    ``single_level`` gives the basis at one level. ``union`` gives every
    distinct coordinate appearing at any level: the raw coordinates plus the
    two rotated coordinates each merge creates.
    """
    if level_mode == "single_level":
        B = model.basis(level)
        return B, [(level, k) for k in range(model.dim)]
    if level_mode == "union":
        rows = list(np.eye(model.dim))
        labels = [(0, k) for k in range(model.dim)]
        for m in model.merges:
            B = model.basis(m.level)
            for k in (m.rotation.i, m.rotation.j):
                rows.append(B[k])
                labels.append((m.level, k))
        return np.array(rows), labels
    raise ValueError(f"unknown level_mode {level_mode!r}")


def _select_features(F, y, k, tol=1e-8):
    """Top ``k`` columns by |corr(F_col, y)|, skipping columns in the span of earlier picks."""
    Fc = F - F.mean(axis=0)
    yc = y - y.mean()
    norms = np.linalg.norm(Fc, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        score = np.abs(Fc.T @ yc) / (norms * np.linalg.norm(yc))
    score = np.where(np.isfinite(score), score, -1.0)
    order = sorted(range(F.shape[1]), key=lambda c: (-score[c], c))
    picked, Q = [], np.zeros((F.shape[0], 0))
    for col in order:
        if len(picked) == k:
            break
        if norms[col] == 0.0:
            continue
        r = Fc[:, col] - Q @ (Q.T @ Fc[:, col])
        rn = np.linalg.norm(r)
        if rn <= tol * norms[col]:
            continue
        picked.append(col)
        Q = np.column_stack([Q, r / rn])
    return picked


def _fit_treelet_at(y, X, model, center, level_mode, level, k):
    rows, labels = treelet_candidates(model, level_mode, level)
    F = (X - center) @ rows.T
    picked = _select_features(F, y, k)
    if not picked:
        raise SingularFitError("no usable treelet features")
    intercept, beta = _ols(F[:, picked], y)
    predictor = LinearPredictor(center, rows[picked].T @ beta, intercept)
    return predictor, [labels[i] for i in picked]


def _holdout_split(y, X, fraction=0.2):
    # depends on row content only, so relabeling rows leaves the split unchanged
    order = np.lexsort(np.column_stack([y, X]).T[::-1])
    step = max(2, round(1.0 / fraction))
    mask = np.zeros(len(y), dtype=bool)
    mask[order[::step]] = True
    return ~mask, mask


def fit_treelet(y, X, level_mode="single_level", level=None, K_features=1):
    """Treelet regression; in ``single_level`` mode with no level, pick it on a held-out fifth."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    available = p if level_mode == "single_level" else 3 * p - 2
    if not 1 <= K_features <= available:
        raise InvalidDataError(f"K_features must be in 1..{available}, got {K_features}")

    def tree_of(Xs):
        return build_treelet(sample_covariance(Xs)) if p > 1 else TreeletModel(1, ())

    if level_mode == "single_level" and level is None:
        fit_rows, hold_rows = _holdout_split(y, X)
        Xf, yf = X[fit_rows], y[fit_rows]
        model = tree_of(Xf)
        risks = []
        for lv in range(model.max_level + 1):
            try:
                pred, _ = _fit_treelet_at(yf, Xf, model, Xf.mean(axis=0), level_mode, lv, K_features)
                risks.append(_mse(pred, y[hold_rows], X[hold_rows]))
            except SingularFitError:
                risks.append(math.inf)
        level = int(np.argmin(risks))

    model = tree_of(X)
    if level_mode == "single_level":
        level = 0 if level is None else level
    predictor, labels = _fit_treelet_at(y, X, model, X.mean(axis=0), level_mode, level, K_features)
    return predictor, {"level": level, "features": labels}


def treelet_regress(train, test, level_mode="single_level", level=None, K_features=1):
    predictor, info = fit_treelet(*train, level_mode=level_mode, level=level, K_features=K_features)
    return MethodResult("treelet", (_mse(predictor, *test),), mode=level_mode, info=info)


@dataclass(frozen=True)
class SweepRow:
    c: float
    method: str
    mode: str
    mse_mean: float
    mse_se: float
    replicates: int
    failures: int = 0


METHODS = (("oracle", ""), ("pca", ""), ("treelet", "single_level"), ("treelet", "union"))


def run_replicate(spec, n_train, n_test, seed, q=1, K_features=1):
    """Test MSE of every method on one train/test draw; ``None`` marks a failed fit."""
    y, X = sample_eiv(spec, n_train + n_test, seed)
    train = (y[:n_train], X[:n_train])
    test = (y[n_train:], X[n_train:])
    out = {}
    r = test[0] - oracle_predict(spec, test[1])
    out[("oracle", "")] = float(np.mean(r * r))
    fits = {
        ("pca", ""): lambda: pca_regress(train, test, q),
        ("treelet", "single_level"): lambda: treelet_regress(train, test, "single_level", None, K_features),
        ("treelet", "union"): lambda: treelet_regress(train, test, "union", None, K_features),
    }
    for key, fit in fits.items():
        try:
            out[key] = fit().mses[0]
        except TreeletsError:
            out[key] = None
    return out


def sweep_cp(base_spec, c_grid, n_train, n_test, replicates, seed, q=1, K_features=1):
    """MSE table over a grid of signal loadings ``c``.

    Replicate ``r`` draws its data with seed ``seed + r`` for every grid value.
    Failed fits are dropped from their cell and counted in ``failures``; a cell
    with no successful replicate has NaN mean and standard error.
    """
    if not c_grid:
        raise InvalidDataError("c_grid must be nonempty")
    if replicates < 2:
        raise InvalidDataError("need at least 2 replicates for a standard error")
    rows = []
    for c in c_grid:
        spec = replace(base_spec, c=float(c))
        cells = {key: [] for key in METHODS}
        failures = {key: 0 for key in METHODS}
        for r in range(replicates):
            for key, mse in run_replicate(spec, n_train, n_test, seed + r, q, K_features).items():
                if mse is None:
                    failures[key] += 1
                else:
                    cells[key].append(mse)
        for method, mode in METHODS:
            res = MethodResult(method, tuple(cells[method, mode]), mode)
            rows.append(SweepRow(float(c), method, mode, res.mean, res.se, res.replicates,
                                 failures[method, mode]))
    return rows


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else format(v, ".17g")
    return str(v)


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([_fmt(r.c), r.method, r.mode, _fmt(r.mse_mean), _fmt(r.mse_se), r.replicates])
    return buf.getvalue()


def cell_lookup(rows):
    return {(r.c, r.method, r.mode): r for r in rows}


def bayes_dominance(rows, n_sigma=3.0):
    """Cells where a learned method beats the oracle by more than ``n_sigma`` combined MC sigma."""
    cells = cell_lookup(rows)
    violations = []
    for r in rows:
        if r.method == "oracle" or math.isnan(r.mse_mean):
            continue
        o = cells[r.c, "oracle", ""]
        tol = n_sigma * math.hypot(o.mse_se, r.mse_se)
        if o.mse_mean > r.mse_mean + tol:
            violations.append((r.c, r.method, r.mode, o.mse_mean, r.mse_mean, tol))
    return violations


def crossover_summary(rows, treelet_mode="single_level"):
    """Per grid value, whether PCA beats treelets (``True``), loses, or is missing."""
    cells = cell_lookup(rows)
    out = {}
    for c in sorted({r.c for r in rows}):
        a, b = cells[c, "pca", ""].mse_mean, cells[c, "treelet", treelet_mode].mse_mean
        out[c] = None if math.isnan(a) or math.isnan(b) else bool(a < b)
    return out


def sweep_report(rows, base_spec, c_grid, n_train, n_test, replicates, seed, q=1, K_features=1):
    def clean(v):
        return None if isinstance(v, float) and math.isnan(v) else v

    return {
        "spec": base_spec.to_dict(),
        "c_grid": [float(c) for c in c_grid],
        "n_train": n_train,
        "n_test": n_test,
        "replicates": replicates,
        "seed": seed,
        "q": q,
        "K_features": K_features,
        "rows": [
            {
                "c": r.c, "method": r.method, "mode": r.mode, "mse_mean": clean(r.mse_mean),
                "mse_se": clean(r.mse_se), "replicates": r.replicates, "failures": r.failures,
            }
            for r in rows
        ],
        "pca_beats_treelet": {format(c, ".17g"): v for c, v in crossover_summary(rows).items()},
    }


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True)

"""Hierarchical feature construction and selection.

Start from the raw columns, select at most ``K`` features, combine every
unordered pair of the selected features with an operator (product, or a
two-variable PCA rotation that yields two children), add the results to the
dictionary and repeat. The dictionary only grows; selection runs over all of
it by default. Runs stop once held-out risk stops improving.

Features are evaluated on the full data and standardized to mean 0 and
unit sample variance; selection and fitting use the training rows only.
"""
from dataclasses import dataclass, field
import math
import threading
import warnings

import numpy as np

from .errors import EmptySelectionError, InvalidDataError
from .linalg import jacobi_rotate, sample_covariance

OPERATORS = ("product", "pair_pca")
SELECTORS = ("marginal_correlation", "forward_stepwise")
POOLS = ("union", "latest")


@dataclass(frozen=True)
class Feature:
    id: int
    op: str
    depth: int
    index: int = None
    left: int = None
    right: int = None
    branch: str = None

    @property
    def key(self):
        if self.op == "base":
            return ("base", self.index)
        return (self.op, self.left, self.right, self.branch)


class FeatureDictionary:
    """Append-only collection of features with structural deduplication."""

    def __init__(self):
        self._features = {}
        self._by_key = {}

    @classmethod
    def from_columns(cls, p):
        d = cls()
        for i in range(p):
            d.add("base", 0, index=i)
        return d

    def copy(self):
        d = FeatureDictionary()
        d._features = dict(self._features)
        d._by_key = dict(self._by_key)
        return d

    def __len__(self):
        return len(self._features)

    def __iter__(self):
        return iter(self._features.values())

    def __contains__(self, fid):
        return fid in self._features

    def __getitem__(self, fid):
        return self._features[fid]

    def ids(self):
        return list(self._features)

    def add(self, op, depth, index=None, left=None, right=None, branch=None):
        """Add a feature unless a structurally equal one exists; return the stored one."""
        if left is not None and right is not None and left > right:
            left, right = right, left
        key = ("base", index) if op == "base" else (op, left, right, branch)
        if key in self._by_key:
            return self._features[self._by_key[key]]
        f = Feature(len(self._features), op, depth, index, left, right, branch)
        self._features[f.id] = f
        self._by_key[key] = f.id
        return f

    def expr(self, fid):
        f = self._features[fid]
        if f.op == "base":
            return f"x{f.index + 1}"
        left, right = self.expr(f.left), self.expr(f.right)
        if f.op == "product":
            return f"({left}*{right})"
        name = "pc1" if f.branch == "primary" else "pc2"
        return f"{name}({left},{right})"


class FeatureCache:
    """Memo of evaluated features keyed by id; ``None`` marks a degenerate feature."""

    def __init__(self):
        self._values = {}
        self._lock = threading.Lock()

    def __contains__(self, fid):
        return fid in self._values

    def get(self, fid):
        return self._values[fid]

    def put(self, fid, value):
        with self._lock:
            return self._values.setdefault(fid, value)


def _standardize(v, ref_scale, tol=1e-10):
    sd = float(np.std(v, ddof=1))
    if sd <= tol * ref_scale:
        return None
    return (v - v.mean()) / sd


def evaluate_feature(f, dictionary, data, cache=None):
    """Standardized values of ``f`` on ``data``, or ``None`` if it is degenerate."""
    cache = FeatureCache() if cache is None else cache
    if f.id in cache:
        return cache.get(f.id)
    data = np.asarray(data, dtype=float)
    if f.op == "base":
        if not 0 <= f.index < data.shape[1]:
            raise InvalidDataError(f"base index {f.index} out of range for {data.shape[1]} columns")
        raw = data[:, f.index]
        value = _standardize(raw, float(np.sqrt(np.mean(raw * raw))))
    else:
        a = evaluate_feature(dictionary[f.left], dictionary, data, cache)
        b = evaluate_feature(dictionary[f.right], dictionary, data, cache)
        if a is None or b is None:
            value = None
        elif f.op == "product":
            raw = a * b
            value = _standardize(raw, max(1.0, float(np.sqrt(np.mean(raw * raw)))))
        elif f.op == "pair_pca":
            pair = np.column_stack([a, b])
            rot, rotated = jacobi_rotate(sample_covariance(pair), 0, 1)
            coords = rot.apply(pair)
            primary = 1 if rotated[1, 1] > rotated[0, 0] else 0
            col = primary if f.branch == "primary" else 1 - primary
            value = _standardize(coords[:, col], 1.0)
        else:
            raise InvalidDataError(f"unknown operator {f.op!r}")
    return cache.put(f.id, value)


@dataclass(frozen=True)
class SelectorConfig:
    """Selection settings.

    ``K`` fixes the capacity; when ``None`` it is ``ceil(n ** exponent)``.
    ``min_delta`` is measured in units of the training variance of ``y``.
    ``pool="latest"`` restricts selection to the newest generation only.
    """

    K: int = None
    exponent: float = 0.5
    selector: str = "marginal_correlation"
    max_generations: int = 5
    patience: int = 2
    min_delta: float = 1e-2
    holdout_fraction: float = 0.2
    pool: str = "union"

    def __post_init__(self):
        if self.K is not None and self.K < 1:
            raise InvalidDataError(f"K must be >= 1, got {self.K}")
        if not 0 < self.holdout_fraction < 1:
            raise InvalidDataError("holdout_fraction must lie strictly between 0 and 1")
        if self.selector not in SELECTORS:
            raise InvalidDataError(f"selector must be one of {SELECTORS}")
        if self.pool not in POOLS:
            raise InvalidDataError(f"pool must be one of {POOLS}")
        if self.max_generations < 0 or self.patience < 1:
            raise InvalidDataError("need max_generations >= 0 and patience >= 1")

    def capacity(self, n):
        if self.K is not None:
            return self.K
        return max(1, math.ceil(n**self.exponent - 1e-9))


def _usable(features, dictionary, data, cache, rows):
    ids, cols = [], []
    for f in features:
        v = evaluate_feature(f, dictionary, data, cache)
        if v is not None:
            ids.append(f.id)
            cols.append(v if rows is None else v[rows])
    return ids, cols


def ms_k(features, data, y, config, cache=None, candidates=None, rows=None, K=None):
    """Select up to ``K`` features of ``features`` (a :class:`FeatureDictionary`).

    ``candidates`` restricts the pool to some feature ids and ``rows`` to some
    samples. Returns the selected features in selection order.
    """
    cache = FeatureCache() if cache is None else cache
    pool = list(features) if candidates is None else [features[i] for i in candidates]
    if not pool:
        raise EmptySelectionError("no candidate features")
    y = np.asarray(y, dtype=float)
    if rows is not None:
        y = y[rows]
    K = config.capacity(len(y)) if K is None else K
    ids, cols = _usable(pool, features, data, cache, rows)
    if not ids:
        raise EmptySelectionError("all candidate features are degenerate")
    F = np.column_stack(cols)
    if config.selector == "marginal_correlation":
        picked = _top_correlated(F, y, K)
    else:
        picked = _forward_stepwise(F, y, K, config.min_delta)
    return [features[ids[k]] for k in picked]


def _top_correlated(F, y, K):
    Fc = F - F.mean(axis=0)
    yc = y - y.mean()
    denom = np.linalg.norm(Fc, axis=0) * np.linalg.norm(yc)
    with np.errstate(invalid="ignore", divide="ignore"):
        score = np.abs(Fc.T @ yc) / denom
    score = np.where(np.isfinite(score), score, 0.0)
    # stable sort on -score keeps id order among exact ties
    return list(np.argsort(-score, kind="stable")[:K])


def _forward_stepwise(F, y, K, min_delta, tol=1e-10):
    n = len(y)
    R = F - F.mean(axis=0)
    e = y - y.mean()
    var_y = max(float(e @ e) / n, np.finfo(float).tiny)
    picked = []
    while len(picked) < K:
        norms2 = np.einsum("ij,ij->j", R, R)
        ok = norms2 > tol * n
        ok[picked] = False
        if not ok.any():
            break
        gain = np.zeros(R.shape[1])
        gain[ok] = (R[:, ok].T @ e) ** 2 / norms2[ok]
        best = int(np.argmax(np.where(ok, gain, -1.0)))
        if picked and gain[best] / n <= min_delta * var_y:
            break
        q = R[:, best] / math.sqrt(norms2[best])
        picked.append(best)
        e = e - q * (q @ e)
        R = R - np.outer(q, q @ R)
    return picked


def expand(selected, op, existing, generation=None):
    """New dictionary: ``existing`` plus ``op`` applied to every unordered pair of ``selected``.

    Products include self-pairs; ``pair_pca`` skips them because rotating a
    feature against itself only reproduces it and a zero column.
    """
    if op not in OPERATORS:
        raise InvalidDataError(f"op must be one of {OPERATORS}, got {op!r}")
    out = existing.copy()
    sel = sorted({f.id for f in selected})
    for a_pos, a in enumerate(sel):
        for b in sel[a_pos:]:
            if op == "pair_pca" and a == b:
                continue
            depth = max(existing[a].depth, existing[b].depth) + 1
            if generation is not None:
                depth = max(depth, generation)
            if op == "product":
                out.add("product", depth, left=a, right=b)
            else:
                out.add("pair_pca", depth, left=a, right=b, branch="primary")
                out.add("pair_pca", depth, left=a, right=b, branch="secondary")
    return out


def branches_per_pair(op):
    return 2 if op == "pair_pca" else 1


def _ls_fit(F, y):
    """Least-squares with intercept; minimum-norm coefficients on collinear columns."""
    center = F.mean(axis=0)
    beta = np.linalg.lstsq(F - center, y - y.mean(), rcond=None)[0]
    return float(y.mean() - center @ beta), beta


@dataclass
class HierResult:
    selected: list
    intercept: float
    coef: np.ndarray
    trace: list
    best_generation: int
    dictionary: FeatureDictionary = field(repr=False)

    @property
    def expressions(self):
        return [self.dictionary.expr(f.id) for f in self.selected]

    def trace_dict(self):
        return {"best_generation": self.best_generation, "generations": self.trace}


def run_hierarchical(data, y, op="product", config=None, seed=0):
    """Grow and select a feature dictionary until held-out risk stops improving.

    Returns the selection of the best generation (lowest held-out risk) with a
    least-squares fit on all rows, and a per-generation trace.
    """
    config = SelectorConfig() if config is None else config
    X = np.asarray(data, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < 10:
        raise InvalidDataError(f"need at least 10 rows, got {n}")
    if op not in OPERATORS:
        raise InvalidDataError(f"op must be one of {OPERATORS}, got {op!r}")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_hold = min(n - 2, max(1, round(config.holdout_fraction * n)))
    hold = np.sort(perm[:n_hold])
    train = np.sort(perm[n_hold:])
    K = config.capacity(n)
    var_y = float(np.var(y[train]))

    dictionary = FeatureDictionary.from_columns(p)
    cache = FeatureCache()
    trace, selections = [], []
    best_m, best_risk, stale = 0, math.inf, 0
    for m in range(config.max_generations + 1):
        if m > 0:
            dictionary = expand(selections[-1], op, dictionary, generation=m)
        candidates = None
        if config.pool == "latest":
            candidates = [f.id for f in dictionary if f.depth == m]
            if not candidates:
                break
        try:
            sel = ms_k(dictionary, X, y, config, cache, candidates, rows=train, K=K)
        except EmptySelectionError:
            if m == 0:
                raise
            break
        F = np.column_stack([cache.get(f.id) for f in sel])
        intercept, beta = _ls_fit(F[train], y[train])
        train_mse = float(np.mean((y[train] - intercept - F[train] @ beta) ** 2))
        hold_mse = float(np.mean((y[hold] - intercept - F[hold] @ beta) ** 2))
        selections.append(sel)
        trace.append({
            "m": m,
            "dict_size": len(dictionary),
            "selected": [dictionary.expr(f.id) for f in sel],
            "train_mse": train_mse,
            "holdout_mse": hold_mse,
        })
        if hold_mse < best_risk - config.min_delta * var_y:
            best_m, best_risk, stale = m, hold_mse, 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    sel = selections[best_m]
    F = np.column_stack([cache.get(f.id) for f in sel])
    intercept, beta = _ls_fit(F, y)
    if len(sel) > n / math.log(n):
        warnings.warn(
            f"{len(sel)} selected features exceed n/log(n) = {n / math.log(n):.1f}",
            RuntimeWarning,
            stacklevel=2,
        )
    return HierResult(sel, intercept, beta, trace, best_m, dictionary)

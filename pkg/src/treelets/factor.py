"""Latent factor models ``X = C e + sigma Z`` and a covariance-equivalent pair.

Each factor ``e_l`` is drawn from a mean-zero one-dimensional law. With
all-Gaussian factors only the covariance ``C diag(var) C^T + sigma^2 I`` is
identifiable, which :func:`example2_pair` makes concrete: it returns a
three-factor model with a redundant third loading and a two-factor model
carrying exactly the same covariance.
"""
from dataclasses import dataclass
import json
import math

import numpy as np

from .errors import DegenerateConstructionError, InvalidDataError
from .linalg import as_symmetric

DIST_KINDS = {"gaussian": "var", "uniform": "half_width", "rademacher": None, "laplace": "scale"}


@dataclass(frozen=True)
class FactorDist:
    """Mean-zero factor law; ``param`` is var, half-width or scale depending on ``kind``."""

    kind: str
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in DIST_KINDS:
            raise InvalidDataError(f"unknown factor distribution {self.kind!r}")
        if self.kind == "rademacher":
            object.__setattr__(self, "param", 1.0)
        elif not (math.isfinite(self.param) and self.param > 0):
            raise InvalidDataError(f"{self.kind} parameter must be positive, got {self.param}")

    @property
    def variance(self):
        if self.kind == "gaussian":
            return self.param
        if self.kind == "uniform":
            return self.param**2 / 3.0
        if self.kind == "laplace":
            return 2.0 * self.param**2
        return 1.0

    def sample(self, rng, n):
        if self.kind == "gaussian":
            return rng.normal(0.0, math.sqrt(self.param), n)
        if self.kind == "uniform":
            return rng.uniform(-self.param, self.param, n)
        if self.kind == "laplace":
            return rng.laplace(0.0, self.param, n)
        return rng.choice([-1.0, 1.0], n)

    def to_dict(self):
        key = DIST_KINDS[self.kind]
        return {"kind": self.kind} if key is None else {"kind": self.kind, key: self.param}

    @classmethod
    def from_dict(cls, d):
        key = DIST_KINDS.get(d["kind"])
        return cls(d["kind"]) if key is None else cls(d["kind"], float(d[key]))


def gaussian(var=1.0):
    return FactorDist("gaussian", var)


@dataclass(frozen=True, eq=False)
class FactorSpec:
    loadings: np.ndarray
    factor_dists: tuple
    noise_sigma: float = 0.0

    def __post_init__(self):
        C = np.array(self.loadings, dtype=float)
        if C.ndim != 2 or C.shape[1] < 1:
            raise InvalidDataError(f"loadings must be p x K with K >= 1, got shape {C.shape}")
        if not np.all(np.isfinite(C)):
            raise InvalidDataError("loadings have non-finite entries")
        if len(self.factor_dists) != C.shape[1]:
            raise InvalidDataError(
                f"{C.shape[1]} loading columns but {len(self.factor_dists)} factor laws"
            )
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise InvalidDataError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        C.setflags(write=False)
        object.__setattr__(self, "loadings", C)
        object.__setattr__(self, "factor_dists", tuple(self.factor_dists))

    @property
    def p(self):
        return self.loadings.shape[0]

    @property
    def K(self):
        return self.loadings.shape[1]

    @property
    def factor_variances(self):
        return np.array([d.variance for d in self.factor_dists])

    def to_dict(self):
        return {
            "p": self.p,
            "K": self.K,
            "loadings": self.loadings.ravel().tolist(),
            "factor_dists": [d.to_dict() for d in self.factor_dists],
            "noise_sigma": self.noise_sigma,
        }

    @classmethod
    def from_dict(cls, d):
        C = np.asarray(d["loadings"], dtype=float).reshape(int(d["p"]), int(d["K"]))
        return cls(C, tuple(FactorDist.from_dict(x) for x in d["factor_dists"]), float(d["noise_sigma"]))

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def sample_factor_data(spec, n, seed):
    """Draw ``n`` rows ``C e_i + sigma z_i``; deterministic given ``seed``."""
    if n < 1:
        raise InvalidDataError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    E = np.column_stack([d.sample(rng, n) for d in spec.factor_dists])
    Z = rng.standard_normal((n, spec.p))
    return E @ spec.loadings.T + spec.noise_sigma * Z


def population_covariance(spec):
    C = spec.loadings
    return as_symmetric((C * spec.factor_variances) @ C.T + spec.noise_sigma**2 * np.eye(spec.p))


def example2_pair(v1, v2, c1, c2, factor_vars=(1.0, 1.0, 1.0), sigma=1.0):
    """Two Gaussian factor models with identical covariance.

    Model A loads three factors on ``v1``, ``v2`` and ``c1 v1 + c2 v2``.
    Model B has two unit-variance factors on ``[v1 v2] L`` where ``L`` is the
    Cholesky factor of ``diag(t1, t2) + t3 (c1, c2)(c1, c2)^T``, so the third
    factor of A has been absorbed into the first two.
    """
    V = np.column_stack([np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)])
    if V.ndim != 2 or V.shape[1] != 2:
        raise InvalidDataError("v1 and v2 must be vectors of equal length")
    if np.linalg.matrix_rank(V) < 2:
        raise DegenerateConstructionError("v1 and v2 are collinear")
    t1, t2, t3 = (float(t) for t in factor_vars)
    if min(t1, t2, t3) <= 0:
        raise InvalidDataError(f"factor variances must be positive, got {factor_vars}")
    cc = np.array([c1, c2], dtype=float)

    spec_a = FactorSpec(
        np.column_stack([V, V @ cc]),
        (gaussian(t1), gaussian(t2), gaussian(t3)),
        sigma,
    )
    M = np.diag([t1, t2]) + t3 * np.outer(cc, cc)
    L = np.linalg.cholesky(M)
    spec_b = FactorSpec(V @ L, (gaussian(), gaussian()), sigma)
    return spec_a, spec_b

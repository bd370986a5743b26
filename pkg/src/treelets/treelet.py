"""Treelet tree: greedy pairwise Jacobi rotations on a covariance matrix.

At each level the most strongly coupled pair of still-active coordinates is
rotated so that their covariance vanishes. The rotated coordinate with the
larger variance (the sum variable) stays active; the other one (the
difference variable) is frozen for good. Everything is driven by the
covariance matrix alone.

Coordinates are 0-based; levels run from 1 to ``max_level`` with level 0
meaning the identity basis.
"""
from dataclasses import dataclass, field
import json

import numpy as np

from .errors import DegenerateVarianceError
from .linalg import VARIANCE_FLOOR, JacobiRotation, as_symmetric, jacobi_rotate

PAIR_SCORES = ("correlation", "covariance")


@dataclass(frozen=True)
class Merge:
    level: int
    rotation: JacobiRotation
    sum_index: int
    diff_index: int


@dataclass(frozen=True)
class TreeletModel:
    dim: int
    merges: tuple
    tie_log: tuple = ()
    # running covariance after the last level; not part of model identity
    covariance: np.ndarray = field(default=None, compare=False, repr=False)

    @property
    def max_level(self):
        return len(self.merges)

    @property
    def rotations(self):
        return [m.rotation for m in self.merges]

    @property
    def active_sets(self):
        """Active (sum) indices at levels 0..max_level."""
        active = set(range(self.dim))
        sets = [frozenset(active)]
        for m in self.merges:
            active.discard(m.diff_index)
            sets.append(frozenset(active))
        return sets

    def _check_level(self, level):
        if not 0 <= level <= self.max_level:
            raise ValueError(f"level must be in 0..{self.max_level}, got {level}")

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected last dimension {self.dim}, got {x.shape[-1]}")
        return x

    def transform(self, x, level=None):
        """Coordinates of ``x`` in the level basis (rows of a 2-D ``x`` are samples)."""
        level = self.max_level if level is None else level
        self._check_level(level)
        out = self._check_dim(x)
        for m in self.merges[:level]:
            out = m.rotation.apply(out)
        return np.array(out, dtype=float)

    def inverse_transform(self, coeffs, level=None):
        level = self.max_level if level is None else level
        self._check_level(level)
        out = self._check_dim(coeffs)
        for m in reversed(self.merges[:level]):
            out = m.rotation.apply(out, inverse=True)
        return np.array(out, dtype=float)

    def basis(self, level=None):
        """Orthonormal matrix whose rows are the level basis vectors."""
        return self.transform(np.eye(self.dim), level).T

    def to_dict(self):
        return {
            "dim": self.dim,
            "rotations": [
                {
                    "level": m.level,
                    "i": m.rotation.i,
                    "j": m.rotation.j,
                    "c": m.rotation.c,
                    "s": m.rotation.s,
                    "sum": m.sum_index,
                    "diff": m.diff_index,
                }
                for m in self.merges
            ],
            "tie_log": list(self.tie_log),
        }

    @classmethod
    def from_dict(cls, d):
        merges = tuple(
            Merge(
                level=int(r["level"]),
                rotation=JacobiRotation(int(r["i"]), int(r["j"]), float(r["c"]), float(r["s"])),
                sum_index=int(r["sum"]),
                diff_index=int(r["diff"]),
            )
            for r in d["rotations"]
        )
        return cls(int(d["dim"]), merges, tuple(int(t) for t in d["tie_log"]))

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _pair_scores(S, active, pair_score):
    sub = S[np.ix_(active, active)]
    if pair_score == "correlation":
        d = np.diag(sub)
        bad = np.flatnonzero(d <= VARIANCE_FLOOR)
        if bad.size:
            raise DegenerateVarianceError(active[bad[0]], float(d[bad[0]]))
        sd = np.sqrt(d)
        sub = sub / np.outer(sd, sd)
    rows, cols = np.triu_indices(len(active), k=1)
    return np.abs(sub[rows, cols]), rows, cols


def build_treelet(sigma, max_level=None, pair_score="correlation", tie_tolerance=1e-12):
    """Build the treelet tree of a covariance matrix.

    Candidate pairs are scored by absolute correlation (or absolute
    covariance). Every pair scoring within ``tie_tolerance`` of the best is
    treated as tied and the lexicographically smallest ``(i, j)`` wins; the
    level is then recorded in ``tie_log``.
    """
    S = as_symmetric(sigma)
    p = S.shape[0]
    if max_level is None:
        max_level = p - 1
    if not 1 <= max_level <= p - 1:
        raise ValueError(f"max_level must be in 1..{p - 1}, got {max_level}")
    if pair_score not in PAIR_SCORES:
        raise ValueError(f"pair_score must be one of {PAIR_SCORES}, got {pair_score!r}")
    d = np.diag(S)
    bad = np.flatnonzero(d <= VARIANCE_FLOOR)
    if bad.size:
        raise DegenerateVarianceError(int(bad[0]), float(d[bad[0]]))

    active = list(range(p))
    merges = []
    ties = []
    for level in range(1, max_level + 1):
        scores, rows, cols = _pair_scores(S, active, pair_score)
        # triu_indices enumerates pairs in lexicographic order
        near_best = np.flatnonzero(scores >= scores.max() - tie_tolerance)
        k = near_best[0]
        if near_best.size > 1:
            ties.append(level)
        i, j = active[rows[k]], active[cols[k]]
        rot, S = jacobi_rotate(S, i, j)
        if S[j, j] > S[i, i]:
            keep, drop = j, i
        else:
            keep, drop = i, j
        active.remove(drop)
        merges.append(Merge(level, rot, keep, drop))
    return TreeletModel(p, tuple(merges), tuple(ties), covariance=S)


def transform(model, x, level=None):
    return model.transform(x, level)


def inverse_transform(model, coeffs, level=None):
    return model.inverse_transform(coeffs, level)


def basis_at_level(model, level=None):
    return model.basis(level)


def trees_match(a, b, atol=1e-10):
    """Same merge order and sum/diff roles, with rotations equal within ``atol``."""
    if a.dim != b.dim or a.max_level != b.max_level:
        return False
    for ma, mb in zip(a.merges, b.merges):
        ra, rb = ma.rotation, mb.rotation
        if (ra.i, ra.j, ma.sum_index, ma.diff_index) != (rb.i, rb.j, mb.sum_index, mb.diff_index):
            return False
        if abs(ra.c - rb.c) > atol or abs(ra.s - rb.s) > atol:
            return False
    return True

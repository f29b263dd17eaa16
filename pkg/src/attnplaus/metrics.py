"""Plausibility statistics: ROC/AUC, correlations, Jensen-Shannon divergence.

All corpus-level quantities are micro-pooled: token scores of every
sentence are concatenated before confusion counts or correlations are
computed.  Aggregation follows the order of the input sequences, so
results are reproducible bit for bit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _st

from .errors import DataError, DegenerateTruth, DimensionError, RangeError, UndefinedCorrelation

TABLE_CHECKPOINTS = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
EXACT_PERMUTATION_MAX = 10
_PERM_CHUNK = 200_000


def default_grid(n: int = 512) -> np.ndarray:
    """``n`` evenly spaced thresholds in [0, 1] plus the table checkpoints."""
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, n), TABLE_CHECKPOINTS]))


# -- thresholding and ROC --------------------------------------------------

def binarize(scores, epsilon: float) -> np.ndarray:
    if not 0.0 <= epsilon <= 1.0:
        raise RangeError(f"threshold {epsilon} outside [0, 1]")
    return (np.asarray(scores, dtype=np.float64) >= epsilon).astype(np.int8)


def scale_to_unit(scores) -> np.ndarray:
    """Divide by the maximum so the largest score becomes 1.

    Min-max scaled heuristic maps are left unchanged; softmax maps are
    stretched over the full [0, 1] range before thresholding.
    """
    s = np.asarray(scores, dtype=np.float64)
    top = s.max()
    return s / top if top > 0 else s.copy()


def _side_vectors(maps, side):
    if side == "premise":
        return [m.premise for m in maps]
    if side == "hypothesis":
        return [m.hypothesis for m in maps]
    return [v for m in maps for v in m.sides]


def _pooled(maps, side="general", transform=None):
    vecs = _side_vectors(maps, side)
    if transform is not None:
        vecs = [transform(v) for v in vecs]
    return np.concatenate(vecs) if vecs else np.zeros(0)


def _check_pairing(candidate, truth):
    if len(candidate) != len(truth):
        raise DimensionError(f"{len(candidate)} candidate maps for {len(truth)} truth maps")
    for c, t in zip(candidate, truth):
        if c.pair_id != t.pair_id:
            raise DataError(f"map order mismatch: {c.pair_id} vs {t.pair_id}")
        if c.premise.size != t.premise.size or c.hypothesis.size != t.hypothesis.size:
            raise DimensionError(f"map {c.pair_id}: candidate and truth lengths differ")


@dataclass(frozen=True)
class RocCurve:
    """ROC points ordered by decreasing threshold."""

    epsilon: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray

    @property
    def points(self):
        return list(zip(self.epsilon.tolist(), self.tpr.tolist(), self.fpr.tolist()))

    def closed(self):
        """``(fpr, tpr)`` including the (0,0) and (1,1) anchors."""
        fpr = np.concatenate([[0.0], self.fpr, [1.0]])
        tpr = np.concatenate([[0.0], self.tpr, [1.0]])
        return fpr, tpr

    def to_csv(self) -> str:
        rows = ["epsilon,tpr,fpr"]
        rows += [f"{e!r},{t!r},{f!r}" for e, t, f in self.points]
        return "\n".join(rows) + "\n"


def roc_from_scores(scores, labels, grid) -> RocCurve:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise DimensionError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateTruth(f"truth has {n_pos} positive and {n_neg} negative tokens")
    eps = np.sort(np.asarray(grid, dtype=np.float64))[::-1]
    pos = np.sort(scores[labels])
    neg = np.sort(scores[~labels])
    # count of scores >= eps
    tp = pos.size - np.searchsorted(pos, eps, side="left")
    fp = neg.size - np.searchsorted(neg, eps, side="left")
    return RocCurve(eps, tp / n_pos, fp / n_neg)


def roc_curve(maps, truth, grid=None) -> RocCurve:
    """Micro-pooled ROC of candidate ``maps`` against binary ``truth`` maps.

    Candidate sentences are rescaled by their maximum before thresholding.
    """
    _check_pairing(maps, truth)
    grid = default_grid() if grid is None else grid
    scores = _pooled(maps, transform=scale_to_unit)
    labels = _pooled(truth) > 0
    return roc_from_scores(scores, labels, grid)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the closed ROC polyline."""
    fpr, tpr = curve.closed()
    order = np.lexsort((tpr, fpr))
    fpr, tpr = fpr[order], tpr[order]
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def auc_from_scores(scores, labels) -> float:
    """Exact AUC: thresholds at every distinct score value."""
    scores = np.asarray(scores, dtype=np.float64)
    return auc(roc_from_scores(scores, labels, np.unique(scores)))


# -- AUC as a function of the pseudo-truth threshold ----------------------

@dataclass(frozen=True)
class AucRow:
    epsilon: float
    auc_human: float | None
    auc_model: float | None

    @property
    def defined(self):
        return self.auc_human is not None and self.auc_model is not None


@dataclass(frozen=True)
class AucTable:
    rows: tuple[AucRow, ...]

    @property
    def fraction_human_better(self) -> float | None:
        defined = [r for r in self.rows if r.defined]
        if not defined:
            return None
        return sum(r.auc_human > r.auc_model for r in defined) / len(defined)

    def at(self, epsilon, tol=1e-12) -> AucRow:
        for r in self.rows:
            if abs(r.epsilon - epsilon) <= tol:
                return r
        raise KeyError(epsilon)


def auc_vs_epsilon(heuristic_maps, human_maps, model_maps, grid=None) -> AucTable:
    """Score human masks and model maps against the binarized heuristic.

    At each threshold the heuristic becomes pseudo ground truth; a
    threshold where it has no positive (or no negative) token yields an
    undefined row.
    """
    _check_pairing(human_maps, heuristic_maps)
    _check_pairing(model_maps, heuristic_maps)
    grid = default_grid() if grid is None else grid
    heur = _pooled(heuristic_maps, transform=scale_to_unit)
    human = _pooled(human_maps)
    model = _pooled(model_maps, transform=scale_to_unit)
    rows = []
    for eps in grid:
        truth = binarize(heur, float(eps)).astype(bool)
        try:
            row = AucRow(float(eps), auc_from_scores(human, truth), auc_from_scores(model, truth))
        except DegenerateTruth:
            row = AucRow(float(eps), None, None)
        rows.append(row)
    return AucTable(tuple(rows))


# -- correlation -----------------------------------------------------------

def _validate_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"correlation of shapes {x.shape} and {y.shape}")
    if x.size < 3:
        raise UndefinedCorrelation(f"need at least 3 observations, got {x.size}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelation("constant input")
    return x, y


def _r(x, y) -> float:
    xc, yc = x - x.mean(), y - y.mean()
    r = (xc @ yc) / math.sqrt((xc @ xc) * (yc @ yc))
    return float(min(1.0, max(-1.0, r)))


def _t_pvalue(r, n):
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return float(min(1.0, 2.0 * _st.t.sf(abs(t), n - 2)))


def _permutation_pvalue(x, y, r_obs):
    """Fraction of all orderings of ``y`` whose |r| reaches |r_obs|."""
    n = x.size
    xc = x - x.mean()
    xc = xc / math.sqrt(xc @ xc)
    yc = y - y.mean()
    yc = yc / math.sqrt(yc @ yc)
    target = abs(r_obs) - 1e-12
    hits = total = 0
    perms = itertools.permutations(range(n))
    while True:
        chunk = np.array(list(itertools.islice(perms, _PERM_CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        rs = yc[chunk] @ xc
        hits += int(np.count_nonzero(np.abs(rs) >= target))
        total += chunk.shape[0]
    return hits / total


def _pvalue(x, y, r):
    if x.size <= EXACT_PERMUTATION_MAX:
        return _permutation_pvalue(x, y, r)
    return _t_pvalue(r, x.size)


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation and two-sided p-value.

    Up to 10 observations the p-value is the exact permutation
    probability; beyond that the Student-t approximation with n-2
    degrees of freedom is used.
    """
    x, y = _validate_pair(x, y)
    r = _r(x, y)
    return r, _pvalue(x, y, r)


def ranks(x) -> np.ndarray:
    """Fractional ranks (ties share their average rank), starting at 1."""
    return _st.rankdata(x, method="average")


def spearman(x, y) -> tuple[float, float]:
    x, y = _validate_pair(x, y)
    rx, ry = ranks(x), ranks(y)
    rho = _r(rx, ry)
    return rho, _pvalue(rx, ry, rho)


def pearson_r(x, y) -> float:
    return _r(*_validate_pair(x, y))


def spearman_rho(x, y) -> float:
    x, y = _validate_pair(x, y)
    return _r(ranks(x), ranks(y))


# -- distributions ---------------------------------------------------------

def to_distribution(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if np.any(s < 0):
        raise RangeError("distribution from negative scores")
    total = s.sum()
    if total == 0:
        return np.full(s.shape, 1.0 / s.size)
    return s / total


def _kl(p, m):
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / m[nz])))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats; bounded by ln 2."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionError(f"JS divergence of shapes {p.shape} and {q.shape}")
    for v in (p, q):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-6:
            raise RangeError("JS divergence needs probability vectors")
    m = 0.5 * (p + q)
    js = 0.5 * _kl(p, m) + 0.5 * _kl(q, m)
    return min(max(js, 0.0), math.log(2.0))


# -- per-instance and global statistics -----------------------------------

@dataclass(frozen=True)
class InstanceRecord:
    pair_id: str
    side: str
    js: float
    spearman: float
    pearson: float


@dataclass(frozen=True)
class PerInstance:
    records: tuple[InstanceRecord, ...]
    skipped: int

    def series(self, metric, side=None) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.records
                         if side is None or r.side == side])


def per_instance_stats(candidate, reference) -> PerInstance:
    """Sentence-level JS divergence, Spearman and Pearson.

    Sentences shorter than 3 tokens, or where either map is constant,
    are skipped and counted.
    """
    _check_pairing(candidate, reference)
    records, skipped = [], 0
    for c, r in zip(candidate, reference):
        for side, cv, rv in (("premise", c.premise, r.premise),
                             ("hypothesis", c.hypothesis, r.hypothesis)):
            try:
                rho = spearman_rho(cv, rv)
                corr = pearson_r(cv, rv)
            except UndefinedCorrelation:
                skipped += 1
                continue
            js = js_divergence(to_distribution(cv), to_distribution(rv))
            records.append(InstanceRecord(c.pair_id, side, js, rho, corr))
    return PerInstance(tuple(records), skipped)


def global_correlations(candidate, reference, normalize_reference=True) -> dict:
    """Pooled-token Pearson and Spearman, per side and for both sides ("general").

    Returns ``{side: {"pearson": (r, p), "spearman": (rho, p)}}``.  The
    reference maps are turned into per-sentence distributions first.
    """
    _check_pairing(candidate, reference)
    transform = to_distribution if normalize_reference else None
    out = {}
    for side in ("premise", "hypothesis", "general"):
        x = _pooled(candidate, side)
        y = _pooled(reference, side, transform)
        out[side] = {"pearson": pearson(x, y), "spearman": spearman(x, y)}
    return out


@dataclass
class EvalReport:
    roc: RocCurve
    auc: float
    global_corr: dict
    per_instance: PerInstance
    auc_vs_epsilon: AucTable | None = None
    meta: dict = field(default_factory=dict)

    @property
    def fraction_human_better(self):
        return None if self.auc_vs_epsilon is None else self.auc_vs_epsilon.fraction_human_better

    def to_dict(self) -> dict:
        def pair(t):
            return {"coefficient": t[0], "p_value": t[1]}

        per = self.per_instance
        doc = {
            "meta": self.meta,
            "roc": [{"epsilon": e, "tpr": t, "fpr": f} for e, t, f in self.roc.points],
            "auc": self.auc,
            "global_corr": {side: {k: pair(v) for k, v in d.items()}
                            for side, d in self.global_corr.items()},
            "per_instance": {
                "skipped": per.skipped,
                "records": [{"pair_id": r.pair_id, "side": r.side, "js": r.js,
                             "spearman": r.spearman, "pearson": r.pearson}
                            for r in per.records],
            },
            "auc_vs_epsilon": None,
            "fraction_human_better": self.fraction_human_better,
        }
        if self.auc_vs_epsilon is not None:
            doc["auc_vs_epsilon"] = [
                {"epsilon": r.epsilon, "auc_human": r.auc_human, "auc_model": r.auc_model}
                for r in self.auc_vs_epsilon.rows]
        return doc


def evaluate(candidate, truth, grid=None, heuristic=None, human=None, model=None,
             meta=None) -> EvalReport:
    """Full plausibility report of ``candidate`` maps against binary ``truth``.

    The AUC-vs-threshold table is added when ``heuristic``, ``human`` and
    ``model`` map sets are all given.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    curve = roc_curve(candidate, truth, grid)
    table = None
    if heuristic is not None and human is not None and model is not None:
        table = auc_vs_epsilon(heuristic, human, model, grid)
    return EvalReport(
        roc=curve,
        auc=auc(curve),
        global_corr=global_correlations(candidate, truth),
        per_instance=per_instance_stats(candidate, truth),
        auc_vs_epsilon=table,
        meta=dict(meta or {}),
    )

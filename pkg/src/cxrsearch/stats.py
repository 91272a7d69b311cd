"""ROC curves, AUC, and the two-tailed unequal-variance t-test.

AUC is computed by tie-aware rank counting, which equals both the
Mann-Whitney pair statistic and the trapezoidal area under the threshold
ROC curve. The t-test tail probability goes through a continued-fraction
regularized incomplete beta; p-values down to the 1e-16 scale keep full
double precision, which naive quadrature would not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ScorePairs = Sequence[tuple[float, int]]


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    dof: float  # Welch-Satterthwaite, non-integer allowed
    p_value: float


def _split_scores(pairs: ScorePairs) -> tuple[np.ndarray, np.ndarray]:
    if len(pairs) == 0:
        raise ValueError("no scores")
    scores = np.asarray([p[0] for p in pairs], dtype=np.float64)
    labels = np.asarray([p[1] for p in pairs], dtype=np.int64)
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if labels.min() == labels.max():
        raise ValueError("single-class input: need both labels for a ROC")
    return scores, labels


def _threshold_counts(scores: np.ndarray,
                      labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct thresholds (descending) with cumulative TP/FP counts."""
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    last = np.flatnonzero(np.diff(s) != 0)
    bounds = np.concatenate([last, [len(s) - 1]])
    tp = np.cumsum(y)[bounds]
    fp = (bounds + 1) - tp
    return s[bounds], tp, fp


def roc_curve(pairs: ScorePairs) -> list[tuple[float, float]]:
    """(fpr, tpr) points: (0,0), then one point per distinct score, ending (1,1)."""
    _, fpr, tpr = roc_curve_detailed(pairs)
    return list(zip(fpr.tolist(), tpr.tolist()))


def roc_curve_detailed(pairs: ScorePairs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, fpr, tpr) arrays; the leading (0,0) point gets threshold inf."""
    scores, labels = _split_scores(pairs)
    thr, tp, fp = _threshold_counts(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    thresholds = np.concatenate([[np.inf], thr])
    fpr = np.concatenate([[0.0], fp / n_neg])
    tpr = np.concatenate([[0.0], tp / n_pos])
    return thresholds, fpr, tpr


def auc(pairs: ScorePairs) -> float:
    """P(random positive outranks random negative), ties half-credited."""
    scores, labels = _split_scores(pairs)
    order = np.argsort(scores, kind="stable")
    y = labels[order]
    s = scores[order]
    # tie groups over ascending scores
    starts = np.concatenate([[0], np.flatnonzero(np.diff(s) != 0) + 1])
    ends = np.concatenate([starts[1:], [len(s)]])
    pos_cum = np.concatenate([[0], np.cumsum(y)])
    n_pos = int(pos_cum[-1])
    n_neg = len(y) - n_pos
    ordered = 0.0
    for a, b in zip(starts, ends):
        pos_in = pos_cum[b] - pos_cum[a]
        neg_in = (b - a) - pos_in
        neg_below = a - pos_cum[a]
        ordered += pos_in * (neg_below + 0.5 * neg_in)
    return ordered / (n_pos * n_neg)


def trapezoid_area(points: Sequence[tuple[float, float]]) -> float:
    """Area under a piecewise-linear (x, y) curve."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += 0.5 * (x1 - x0) * (y1 + y0)
    return area


def welch_ttest(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sample t-test, two-tailed, without assuming equal variances."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise ValueError(
            f"undersized samples: need >= 2 each, got {x.size} and {y.size}")
    mx, my = x.mean(), y.mean()
    vx = x.var(ddof=1)
    vy = y.var(ddof=1)
    if vx == 0.0 and vy == 0.0:
        if mx == my:
            return TTestResult(t_stat=0.0, dof=float(x.size + y.size - 2),
                               p_value=1.0)
        raise ValueError("both sample variances are zero with unequal means")
    se2_x = vx / x.size
    se2_y = vy / y.size
    se2 = se2_x + se2_y
    t = float((mx - my) / math.sqrt(se2))
    # Welch-Satterthwaite is scale-invariant; normalize so squaring tiny
    # standard errors cannot underflow the ratio
    scale = max(se2_x, se2_y)
    rx, ry = se2_x / scale, se2_y / scale
    dof = float((rx + ry) ** 2 / (rx * rx / (x.size - 1)
                                  + ry * ry / (y.size - 1)))
    p = max(student_t_two_tailed(t, dof), 5e-324)
    return TTestResult(t_stat=t, dof=dof, p_value=p)


def student_t_two_tailed(t: float, dof: float) -> float:
    """P(|T| >= |t|) for T ~ Student-t with ``dof`` degrees of freedom."""
    if dof <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    if t == 0.0:
        return 1.0
    return betainc_reg(dof / 2.0, 0.5, dof / (dof + t * t))


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) by modified Lentz continued fraction."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float, max_iter: int = 300,
             eps: float = 1e-16) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        # even step
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + num / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + num / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction failed to converge "
        f"(a={a}, b={b}, x={x})")

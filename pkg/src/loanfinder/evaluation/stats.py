"""Randomized-blocks ANOVA, F and t tail probabilities, Pearson correlation."""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

_TINY = 1e-300


class DegenerateVarianceError(ValueError):
    pass


def _beta_cf(a: float, b: float, x: float, rtol: float, max_iter: int) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        for aa in (
            m * (b - m) * x / ((qam + m2) * (a + m2)),
            -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2)),
        ):
            d = 1.0 + aa * d
            d = 1.0 / (d if abs(d) > _TINY else _TINY)
            c = 1.0 + aa / c
            if abs(c) < _TINY:
                c = _TINY
            delta = d * c
            h *= delta
        if abs(delta - 1.0) < rtol:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float, rtol: float = 1e-10, max_iter: int = 500) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x, rtol, max_iter) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x, rtol, max_iter) / b


def f_sf(f: float, df1: int, df2: int) -> float:
    """Upper tail probability of the F distribution."""
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def t_sf(t: float, df: int) -> float:
    """Upper tail probability of Student's t distribution."""
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t)) if t else 0.5
    return tail if t >= 0 else 1.0 - tail


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_treatment: int
    df_error: int
    p_value: float
    ss_treatment: float
    ss_block: float
    ss_error: float
    ss_total: float


def blocked_anova(matrix: Sequence[Sequence[float]]) -> AnovaResult:
    """Two-way ANOVA without interaction; rows are treatments, columns blocks."""
    rows = [list(map(float, r)) for r in matrix]
    m = len(rows)
    if m < 2:
        raise ValueError("need at least two treatments")
    b = len(rows[0])
    if b < 2 or any(len(r) != b for r in rows):
        raise ValueError("need a complete matrix with at least two blocks")
    grand = math.fsum(x for r in rows for x in r) / (m * b)
    row_means = [math.fsum(r) / b for r in rows]
    col_means = [math.fsum(rows[i][j] for i in range(m)) / m for j in range(b)]
    ss_total = math.fsum((x - grand) ** 2 for r in rows for x in r)
    ss_treat = b * math.fsum((mu - grand) ** 2 for mu in row_means)
    ss_block = m * math.fsum((mu - grand) ** 2 for mu in col_means)
    ss_error = math.fsum(
        (rows[i][j] - row_means[i] - col_means[j] + grand) ** 2
        for i in range(m) for j in range(b)
    )
    df_t, df_e = m - 1, (m - 1) * (b - 1)
    scale = max(ss_total, 1.0) * 1e-12
    if ss_treat <= scale:
        # no treatment effect at all: F is 0 whatever the residual variance
        return AnovaResult(0.0, df_t, df_e, 1.0, ss_treat, ss_block, ss_error, ss_total)
    if ss_error <= scale:
        raise DegenerateVarianceError("residual variance is zero; F is undefined")
    f = (ss_treat / df_t) / (ss_error / df_e)
    return AnovaResult(f, df_t, df_e, f_sf(f, df_t, df_e), ss_treat, ss_block, ss_error, ss_total)


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson r, or None when either variable has no variance."""
    if len(x) != len(y):
        raise ValueError("x and y differ in length")
    if len(x) < 2:
        return None
    try:
        return statistics.correlation(x, y)
    except statistics.StatisticsError:
        return None


def pearson_one_sided_p(r: float, n: int) -> float | None:
    """p-value for H1: correlation has the sign of r (df = n - 2)."""
    df = n - 2
    if df < 1:
        return None
    if abs(r) >= 1.0:
        return 0.0
    t = abs(r) * math.sqrt(df / (1.0 - r * r))
    return t_sf(t, df)

"""Closed-form volumes computed through log-Gamma.

Everything is carried as a natural logarithm and exponentiated only when a
caller reads ``ExactValue.value``; the counterexample volumes involve
factorials like ``(4n(n-1))!`` that leave double range for small ``n``.
"""

import math
from dataclasses import dataclass

from ._validation import check_count, check_positive


@dataclass(frozen=True)
class ExactValue:
    log_value: float
    expression: str
    # plain floating-point evaluation, kept when it is in range and more accurate
    direct: float | None = None

    @property
    def value(self):
        if self.direct is not None:
            return self.direct
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf

    def __float__(self):
        return self.value

    def to_dict(self):
        return {"value": self.value, "log_value": self.log_value, "expression": self.expression}


def _lfact(k):
    return math.lgamma(k + 1)


def _exact_float(k):
    try:
        return float(k)
    except OverflowError:
        return math.inf


def _log(x, name):
    if isinstance(x, ExactValue):
        return x.log_value
    return math.log(check_positive(x, name))


def lp_ball_volume(k, p):
    """Volume of the unit ball of ``l_p^k``: ``(2 Gamma(1 + 1/p))^k / Gamma(1 + k/p)``."""
    k = check_count(k, "k")
    p = check_positive(p, "p", allow_inf=True)
    if math.isinf(p):
        return ExactValue(k * math.log(2.0), f"2^{k}")
    lv = k * (math.log(2.0) + math.lgamma(1 + 1 / p)) - math.lgamma(1 + k / p)
    return ExactValue(lv, f"(2*Gamma(1+1/{p:g}))^{k} / Gamma(1+{k}/{p:g})")


def lp_power_volume(vol_z, k, s, p):
    """``|B_p^s(Z)| = (Gamma(1 + k/p) |B_Z|)^s / Gamma(1 + sk/p)`` for a ``k``-dimensional ``Z``.

    Follows from ``int exp(-||x||^p) dx = Gamma(1 + dim/p) |B|``; at ``p = 1``
    this is the ``(k!)^s / (sk)!`` power formula.
    """
    k = check_count(k, "k")
    s = check_count(s, "s")
    p = check_positive(p, "p", allow_inf=True)
    lz = _log(vol_z, "vol_z")
    if math.isinf(p):
        return ExactValue(s * lz, f"|B_Z|^{s}")
    lv = s * (math.lgamma(1 + k / p) + lz) - math.lgamma(1 + s * k / p)
    return ExactValue(lv, f"(Gamma(1+{k}/{p:g})*|B_Z|)^{s} / Gamma(1+{s * k}/{p:g})")


def direct_sum_volume(vol1, k1, vol2, k2):
    """``|B_{Z1 (+)_1 Z2}| = k1! k2! / (k1 + k2)! * |B_Z1| |B_Z2|``."""
    k1 = check_count(k1, "k1")
    k2 = check_count(k2, "k2")
    lv = _lfact(k1) + _lfact(k2) - _lfact(k1 + k2) + _log(vol1, "vol1") + _log(vol2, "vol2")
    return ExactValue(lv, f"{k1}!*{k2}!/({k1 + k2})! * vol1 * vol2")


def power_volume(vol_z, k, s):
    """``|B_1^s(Z)| = (k!)^s / (sk)! * |B_Z|^s``."""
    k = check_count(k, "k")
    s = check_count(s, "s")
    lv = s * _lfact(k) - _lfact(s * k) + s * _log(vol_z, "vol_z")
    return ExactValue(lv, f"({k}!)^{s}/({s * k})! * volZ^{s}")


def mixed_sum_volume(a, b, c):
    """Volume of the unit ball of ``l_1^a (+)_1 l_1^b(l_2^c)``.

    ``2^a (c!)^b / (a + bc)! * pi^(bc/2) / Gamma(c/2 + 1)^b``; ``a = 0`` drops
    the ``l_1^a`` summand.
    """
    a = check_count(a, "a", minimum=0)
    b = check_count(b, "b")
    c = check_count(c, "c")
    lv = (a * math.log(2.0) + b * _lfact(c) - _lfact(a + b * c)
          + 0.5 * b * c * math.log(math.pi) - b * math.lgamma(c / 2 + 1))
    return ExactValue(lv, f"2^{a}*({c}!)^{b}/({a + b * c})! * pi^({b * c}/2)/Gamma({c}/2+1)^{b}")


@dataclass(frozen=True)
class CounterexampleCheck:
    n: int
    lhs: float
    rhs: float
    log_lhs: float
    log_rhs: float
    log_volume_lhs: float
    log_volume_rhs: float
    strict: bool
    routes_agree: bool


def block_counterexample_check(n):
    """Compare the coordinate section against ``B_1^{n-1}(X)`` for ``X = l_1^{2n} (+)_1 l_2^{2n}``.

    Factorial route: ``(2n)!/n!`` against ``(4/pi)^n``.  Volume route: the two
    mixed-sum volumes.  Both are evaluated in log space and must agree on
    strictness.
    """
    n = check_count(n, "n", minimum=2)
    log_lhs = _lfact(2 * n) - _lfact(n)
    log_rhs = n * math.log(4 / math.pi)
    vol_lhs = mixed_sum_volume(2 * n * (n - 2), n, 2 * n)
    vol_rhs = mixed_sum_volume(2 * n * (n - 1), n - 1, 2 * n)
    strict_f = log_lhs > log_rhs
    strict_v = vol_lhs.log_value > vol_rhs.log_value
    return CounterexampleCheck(
        n=n,
        lhs=_exact_float(math.perm(2 * n, n)),
        rhs=math.exp(log_rhs),
        log_lhs=log_lhs,
        log_rhs=log_rhs,
        log_volume_lhs=vol_lhs.log_value,
        log_volume_rhs=vol_rhs.log_value,
        strict=strict_f and strict_v,
        routes_agree=strict_f == strict_v,
    )


def diagonal_section_limit(m):
    """``(2m + 4)^(m/2) / (m 2^(m-1) Gamma(m/2))``."""
    m = check_count(m, "m", minimum=2)
    lv = 0.5 * m * math.log(2 * m + 4) - math.log(m) - (m - 1) * math.log(2) - math.lgamma(m / 2)
    try:
        direct = (2 * m + 4) ** (m / 2) / (m * 2 ** (m - 1) * math.gamma(m / 2))
    except OverflowError:
        direct = None
    if direct is not None and not math.isfinite(direct):
        direct = None
    return ExactValue(lv, f"(2*{m}+4)^({m}/2) / ({m}*2^{m - 1}*Gamma({m}/2))", direct)


def exact_volume(space):
    """Closed-form volume of the unit ball of ``space`` when one is known, else ``None``.

    Covers ``l_q`` balls, Euclidean balls, ``l_1`` direct sums and ``l_p``
    powers of those.
    """
    from .spaces import DirectSumL1, Euclidean, LpPower, LqBall

    if isinstance(space, LqBall):
        return lp_ball_volume(space.m, space.q)
    if isinstance(space, Euclidean):
        return lp_ball_volume(space.m, 2.0)
    if isinstance(space, DirectSumL1):
        a, b = exact_volume(space.left), exact_volume(space.right)
        if a is None or b is None:
            return None
        return direct_sum_volume(a, space.left.dim, b, space.right.dim)
    if isinstance(space, LpPower):
        inner = exact_volume(space.inner)
        if inner is None:
            return None
        return lp_power_volume(inner, space.inner.dim, space.n, space.p)
    return None

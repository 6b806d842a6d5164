"""Parameter plans (batch size, step, iterations, feature count) that attain
the optimal excess-risk rate ``n**(-2r / (2r + alpha))``, and the
admissibility conditions on the step size and feature count.

Worst-case tags ``c1.*`` are the ``r = 1/2, alpha = 1`` instances of the
refined tags ``c2.*``; both go through the same formulas.

=====  ==================  ===================  ==========================
tag    b                   gamma                T
=====  ==================  ===================  ==========================
k.1    1                   n^-1                 n^((e + 1) / e)
k.2    1                   n^(-2r / e)          n^((2r + 1) / e)
k.3    n^(2r / e)          1                    n^(1 / e)
k.4    n                   1                    n^(1 / e)
=====  ==================  ===================  ==========================

with ``e = 2r + alpha`` and ``M = c_M * n^((1 + alpha (2r - 1)) / e) * max(1, log n)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from sgdrf.errors import ConfigError

TAGS = ("c1.1", "c1.2", "c1.3", "c1.4", "c2.1", "c2.2", "c2.3", "c2.4")


@dataclass(frozen=True)
class RegimePlan:
    tag: str
    n: int
    r: float
    alpha: float
    b: int
    gamma: float
    theta: float
    T: int
    M: int
    predicted_passes: float
    predicted_rate_exponent: float
    gamma_constant: float = 1.0
    b_constant: float = 1.0
    M_constant: float = 1.0

    def as_row(self) -> dict:
        return asdict(self)


def _ceil(x: float) -> int:
    # n**1.5 and friends carry rounding noise; snap near-integers first
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def plan(
    tag: str,
    n: int,
    r: float = 0.5,
    alpha: float = 1.0,
    *,
    gamma_constant: float = 1.0,
    b_constant: float = 1.0,
    M_constant: float = 1.0,
) -> RegimePlan:
    """Instantiate regime ``tag`` for ``n`` training points.

    For ``c1.*`` tags ``r`` and ``alpha`` are ignored (fixed at 1/2 and 1).
    Counts are rounded up and ``b`` is clamped to ``[1, n]``.
    """
    if tag not in TAGS:
        raise ConfigError(f"unknown regime tag {tag!r}; expected one of {TAGS}")
    if int(n) != n or n < 4:
        raise ConfigError(f"n must be an integer >= 4, got {n}")
    if tag.startswith("c1"):
        r, alpha = 0.5, 1.0
    if r < 0.5:
        raise ConfigError(f"r must be >= 1/2, got {r}")
    if not 0 < alpha <= 1:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    for name, c in (("gamma_constant", gamma_constant), ("b_constant", b_constant), ("M_constant", M_constant)):
        if not c > 0:
            raise ConfigError(f"{name} must be > 0, got {c}")

    e = 2 * r + alpha
    case = tag[-1]
    if case == "1":
        b, gamma, T = 1, n**-1.0, n ** ((e + 1) / e)
    elif case == "2":
        b, gamma, T = 1, n ** (-2 * r / e), n ** ((2 * r + 1) / e)
    elif case == "3":
        b, gamma, T = b_constant * n ** (2 * r / e), 1.0, n ** (1 / e)
    else:
        b, gamma, T = n, 1.0, n ** (1 / e)
    b = min(max(_ceil(b), 1), n)
    T = _ceil(T)
    M = _ceil(M_constant * n ** ((1 + alpha * (2 * r - 1)) / e) * max(1.0, math.log(n)))
    return RegimePlan(
        tag=tag,
        n=int(n),
        r=r,
        alpha=alpha,
        b=b,
        gamma=gamma_constant * gamma,
        theta=0.0,
        T=T,
        M=M,
        predicted_passes=T / math.ceil(n / b),
        predicted_rate_exponent=-2 * r / e,
        gamma_constant=gamma_constant,
        b_constant=b_constant,
        M_constant=M_constant,
    )


@dataclass(frozen=True)
class Violation:
    condition: str
    lhs: float
    rhs: float

    def __str__(self):
        return f"{self.condition}: {self.lhs:.6g} vs {self.rhs:.6g}"


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    violations: list = field(default_factory=list)
    values: dict = field(default_factory=dict)


def admissible(p: RegimePlan, delta: float = 0.1, kappa: float = 1.0) -> Admissibility:
    """Check the step-size caps and the feature-count lower bound literally.

    ``p.gamma`` is the step actually used by SGD, which already contains the
    ``kappa**-2`` factor; the bounds are stated for ``gamma * kappa**2``.
    """
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    if not kappa > 0:
        raise ConfigError(f"kappa must be > 0, got {kappa}")
    g = p.gamma * kappa**2
    n, T, theta = p.n, p.T, p.theta
    violations = []
    values = {}

    def check(name, lhs, rhs, at_least=False):
        values[name] = (lhs, rhs)
        if not (lhs >= rhs if at_least else lhs <= rhs):
            violations.append(Violation(name, lhs, rhs))

    Teff = T ** (1 - theta) if T > 0 else 0.0
    if T > 0:
        check("gamma <= n / (9 T^(1-theta) log(n/delta))", g, n / (9 * Teff * math.log(n / delta)))
        if theta == 0:
            check("gamma <= 1 / (8 (1 + log T))", g, 1 / (8 * (1 + math.log(T))))
        else:
            check("gamma <= min(theta, 1 - theta) / 7", g, min(theta, 1 - theta) / 7)
    gT = g * Teff
    m_bound = (4 + 18 * gT) * math.log(12 * gT / delta) if gT > 0 else 0.0
    check("M >= (4 + 18 gamma T^(1-theta)) log(12 gamma T^(1-theta) / delta)", p.M, m_bound, at_least=True)
    check("n >= 32 log^2(2/delta)", n, 32 * math.log(2 / delta) ** 2, at_least=True)
    return Admissibility(not violations, violations, values)

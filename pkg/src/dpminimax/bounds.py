"""Minimax lower-bound evaluators and sample-complexity expressions.

Each evaluator computes its risk formula literally, with natural
logarithms throughout, and clamps negative privacy terms at zero: a lower
bound on a probability that falls below zero is vacuous, not an error.
Asymptotic expressions are reported with constant 1 and flagged as
unscaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import PrivacyBudget

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class BoundReport:
    """A bound value together with the (clamped) terms that produced it."""

    value: float
    term_breakdown: dict[str, float]
    binding_term: str

    @classmethod
    def from_terms(cls, terms: dict[str, float]) -> "BoundReport":
        clamped = {name: max(0.0, t) for name, t in terms.items()}
        binding = max(clamped, key=lambda name: clamped[name])
        return cls(value=clamped[binding], term_breakdown=clamped, binding_term=binding)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "terms": self.term_breakdown,
            "binding_term": self.binding_term,
        }


def _privacy_decay(epsilon: float, D: float, delta: float) -> float:
    """The coupling privacy penalty 0.9 * exp(-10*eps*D) - 10*D*delta."""
    return 0.9 * math.exp(-10.0 * epsilon * D) - 10.0 * D * delta


def le_cam_bound(tv: float, D: float, budget: PrivacyBudget) -> BoundReport:
    """Binary-testing risk bound from a pair at total variation ``tv``
    admitting a coupling with expected Hamming distance ``D``.

    Value is (1/2) * max{1 - tv, max(0, 0.9 e^{-10 eps D} - 10 D delta)}.
    """
    if not 0 <= tv <= 1:
        raise ValueError("tv must lie in [0, 1]")
    if D < 0:
        raise ValueError("D must be >= 0")
    return BoundReport.from_terms(
        {
            "indistinguishability": 0.5 * (1.0 - tv),
            "privacy": 0.5 * _privacy_decay(budget.epsilon, D, budget.delta),
        }
    )


def fano_bound(alpha: float, beta: float, D: float, M: int, epsilon: float) -> BoundReport:
    """Multi-way testing risk bound over M hypotheses.

    ``alpha`` is the pairwise loss separation, ``beta`` the pairwise KL cap,
    ``D`` the pairwise expected-Hamming coupling cap.  Value is
    max{(alpha/2)(1 - (beta + log 2)/log M), 0.4 alpha min(1, M e^{-10 eps D})}.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if alpha < 0 or beta < 0 or D < 0 or epsilon < 0:
        raise ValueError("alpha, beta, D, epsilon must be >= 0")
    log_m = math.log(M)
    info = 0.5 * alpha * (1.0 - (beta + LOG2) / log_m)
    t = log_m - 10.0 * epsilon * D
    ratio = 1.0 if t >= 0 else math.exp(t)
    return BoundReport.from_terms({"information": info, "privacy": 0.4 * alpha * ratio})


def assouad_bound(k_index: int, tau: float, D: float, budget: PrivacyBudget) -> BoundReport:
    """Hypercube decomposition risk bound.

    ``k_index`` is the hypercube dimension, ``tau`` the per-coordinate loss
    constant, ``D`` the coordinate-mixture coupling cap.  Value is
    (k_index * tau / 2) * max(0, 0.9 e^{-10 eps D} - 10 D delta).
    """
    if k_index < 1:
        raise ValueError("k_index must be >= 1")
    if tau < 0 or D < 0:
        raise ValueError("tau and D must be >= 0")
    term = 0.5 * k_index * tau * _privacy_decay(budget.epsilon, D, budget.delta)
    return BoundReport.from_terms({"privacy": term})


def _largest_n(cond, n_guess: int) -> int:
    """Largest integer n >= 0 with cond(n), given cond is nonincreasing.

    ``n_guess`` should be within a couple of steps of the answer; the exact
    threshold is then pinned by direct evaluation so that cond(n) holds and
    cond(n + 1) fails.
    """
    n = max(0, n_guess)
    while n > 0 and not cond(n):
        n -= 1
    if not cond(n):
        return 0
    while cond(n + 1):
        n += 1
    return n


def fano_sample_complexity(
    alpha_sep: float,
    beta: float,
    gamma: float,
    M: int,
    epsilon: float,
    tau: float,
) -> tuple[int, int]:
    """Exact integer threshold solves of the multi-way risk expression.

    Returns (n_classical, n_private): the largest n for which, respectively,
    (3 tau / 2)(1 - (n beta + log 2)/log M) > tau and
    1.2 tau min(1, M e^{-10 eps n gamma}) > tau.
    A vanishing threshold is reported as 0.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if beta <= 0 or gamma <= 0:
        raise ValueError("beta and gamma must be > 0")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if tau <= 0:
        raise ValueError("tau must be > 0")
    if alpha_sep < 3 * tau - 1e-12:
        raise ValueError("requires separation alpha_sep >= 3 * tau")
    log_m = math.log(M)

    def classical_cond(n: int) -> bool:
        return 1.5 * tau * (1.0 - (n * beta + LOG2) / log_m) > tau

    def private_cond(n: int) -> bool:
        t = log_m - 10.0 * epsilon * n * gamma
        ratio = 1.0 if t >= 0 else math.exp(t)
        return 1.2 * tau * min(1.0, ratio) > tau

    if log_m <= LOG2:
        n_classical = 0
    else:
        n_classical = _largest_n(classical_cond, math.floor((log_m / 3.0 - LOG2) / beta))
    n_private = _largest_n(
        private_cond, math.floor((log_m - math.log(5.0 / 6.0)) / (10.0 * epsilon * gamma))
    )
    return n_classical, n_private


def packing_bound(M: int, d: float) -> float:
    """Privacy level log(M) / d forced by M datasets within Hamming radius d.

    Reported without the hidden constant of the asymptotic statement.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if d <= 0:
        raise ValueError("d must be > 0")
    return math.log(M) / d


def group_privacy_factor(budget: PrivacyBudget, t: int) -> tuple[float, float]:
    """Privacy degradation across datasets at Hamming distance t.

    Returns (multiplier, additive) = (e^{t eps}, delta * t * e^{eps (t-1)});
    t = 0 gives the trivial (1, 0).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return 1.0, 0.0
    return math.exp(t * budget.epsilon), budget.delta * t * math.exp(budget.epsilon * (t - 1))


def _row(problem, bound, value, expression, method, scaling, table):
    return {
        "problem": problem,
        "bound": bound,
        "value": float(value),
        "expression": expression,
        "method": method,
        "scaling": scaling,
        "table": table,
    }


def sample_complexity_table(problem: str, params: dict, budget: PrivacyBudget) -> list[dict]:
    """Evaluate the summary sample-complexity expressions for one problem.

    ``params`` carries the problem parameters (k, alpha, and d or R where
    relevant).  delta = 0 selects the pure-DP expressions; delta > 0 the
    approximate-DP ones.  All rows are unscaled asymptotic expressions
    (constant 1) and are flagged as such.
    """
    alpha = params["alpha"]
    eps = budget.epsilon
    delta = budget.delta
    if alpha <= 0 or eps <= 0:
        raise ValueError("alpha and epsilon must be > 0")
    pure = delta == 0
    table = 1 if pure else 2
    rows: list[dict] = []

    if problem == "kary_tv":
        k = params["k"]
        stat = k / alpha**2
        upper = stat + k / (alpha * eps)
        rows.append(
            _row(
                problem, "upper", upper, "k/a^2 + k/(a*eps)",
                "laplace histogram + simplex projection",
                "unscaled O" if not pure else "unscaled Theta", table,
            )
        )
        if pure:
            rows.append(
                _row(
                    problem, "lower", upper, "k/a^2 + k/(a*eps)",
                    "constant-weight tv packing", "unscaled Theta", table,
                )
            )
        else:
            rows.append(
                _row(
                    problem, "lower", stat + k / (alpha * (eps + delta)),
                    "k/a^2 + k/(a*(eps+delta))",
                    "k-ary hypercube decomposition", "unscaled Omega", table,
                )
            )
    elif problem == "kary_l2":
        k = params["k"]
        stat = 1.0 / alpha**2
        small_alpha = alpha < 1.0 / math.sqrt(k)
        if small_alpha:
            upper = stat + math.sqrt(k) / (alpha * eps)
            upper_expr = "1/a^2 + sqrt(k)/(a*eps)"
            if pure:
                lower, lower_expr = upper, upper_expr
                lower_method = "tv reduction of the constant-weight packing"
            else:
                lower = stat + math.sqrt(k) / (alpha * (eps + delta))
                lower_expr = "1/a^2 + sqrt(k)/(a*(eps+delta))"
                lower_method = "tv reduction of the hypercube decomposition"
        else:
            upper = stat + math.log(k) / (alpha**2 * eps)
            upper_expr = "1/a^2 + log(k)/(a^2*eps)"
            if pure:
                lower = stat + math.log(k * alpha**2) / (alpha**2 * eps)
                lower_expr = "1/a^2 + log(k*a^2)/(a^2*eps)"
                lower_method = "sparse-support l2 packing"
            else:
                lower = stat + 1.0 / (alpha**2 * (eps + delta))
                lower_expr = "1/a^2 + 1/(a^2*(eps+delta))"
                lower_method = "restriction to a smaller alphabet"
        rows.append(
            _row(
                problem, "upper", upper, upper_expr,
                "laplace histogram + simplex projection", "unscaled O", table,
            )
        )
        rows.append(_row(problem, "lower", lower, lower_expr, lower_method, "unscaled Omega", table))
    elif problem == "product":
        k, d = params["k"], params["d"]
        base = 1.0 / alpha**2 + 1.0 / (alpha * eps)
        if pure:
            rows.append(
                _row(
                    problem, "upper", k * d * math.log(k * d / alpha) * base,
                    "k*d*log(k*d/a)*(1/a^2 + 1/(a*eps))",
                    "prior cover-based learner", "unscaled O", table,
                )
            )
            rows.append(
                _row(
                    problem, "lower", k * d * base, "k*d*(1/a^2 + 1/(a*eps))",
                    "two-level product packing", "unscaled Omega", table,
                )
            )
        else:
            if k != 2:
                raise ValueError("approximate-DP product rows exist only for k = 2")
            rows.append(
                _row(
                    problem, "upper", d * math.log(d / alpha) * base,
                    "d*log(d/a)*(1/a^2 + 1/(a*eps))",
                    "prior cover-based learner", "unscaled O", table,
                )
            )
            rows.append(
                _row(
                    problem, "lower", d / alpha**2 + d / (alpha * (eps + delta)),
                    "d/a^2 + d/(a*(eps+delta))",
                    "bernoulli hypercube decomposition", "unscaled Omega", table,
                )
            )
    elif problem == "gmix":
        if not pure:
            raise ValueError("no approximate-DP row for Gaussian mixtures")
        k, d, R = params["k"], params["d"], params["R"]
        base = 1.0 / alpha**2 + 1.0 / (alpha * eps)
        rows.append(
            _row(
                problem, "upper", k * d * math.log(d * R / alpha) * base,
                "k*d*log(d*R/a)*(1/a^2 + 1/(a*eps))",
                "prior cover-based learner", "unscaled O", table,
            )
        )
        rows.append(
            _row(
                problem, "lower", k * d * base, "k*d*(1/a^2 + 1/(a*eps))",
                "gaussian mixture packing", "unscaled Omega", table,
            )
        )
    else:
        raise ValueError(f"unknown problem {problem!r}")
    return rows

"""Optimal boosting proportions for best private arm identification.

With the best public arm pulled almost always for free, boosting effort is
allocated over the remaining K-1 arms. The error exponent of a proportion
vector w (indexed over arms != best public arm i*) is

    Gamma(w) = min( min_{a not in {1, i*}} sqrt(w_1 w_a) * Dpriv_a^2 / (sqrt(w_1) * Dpub_a + sqrt(w_a) * Dpub_1),
                    sqrt(w_1) * Dpriv_{i*}^2 / Dpub_1 )

where arm "1" is the best private arm, Dpriv/Dpub are private/public
suboptimality gaps. The maximin problem max_w Gamma(w) is concave with a
unique optimum at which the evidence terms are equal (information balance).
``solve_allocation`` exploits that structure: with x_a = w_a / w_1 and
g_a(x) = sqrt(x) * Dpriv_a^2 / (Dpub_a + sqrt(x) * Dpub_1), all g_a(x_a)
share a common value y at the optimum, y solves F(y) = 0 in closed form
below, and a boundary case caps y at Dpriv_{i*}^2 / Dpub_1.
A brute-force simplex search is provided as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import BanditInstance, RandomSource, SimplexDistribution


class UnsupportedInstanceError(ValueError):
    """Raised when the best public and private arms coincide (no deception needed)."""


class NumericalFailureError(RuntimeError):
    """Raised when the root finder cannot certify its solution."""


@dataclass(frozen=True)
class GapStructure:
    """Private and public suboptimality gaps plus the distinguished arm indices.

    ``delta_istar_priv`` is the private gap of the best public arm; ``d1`` the
    public gap of the best private arm.
    """

    private_gaps: np.ndarray
    public_gaps: np.ndarray
    best_private: int
    best_public: int
    delta_istar_priv: float
    d1: float

    @property
    def n_arms(self) -> int:
        return self.private_gaps.size

    @property
    def boostable_arms(self) -> tuple[int, ...]:
        """All arms except the best public arm, in index order (weight coordinates)."""
        return tuple(a for a in range(self.n_arms) if a != self.best_public)


def gap_structure_from_means(public_means, private_means) -> GapStructure:
    """Gap structure from mean vectors (ground truth or empirical estimates)."""
    pub = np.asarray(public_means, dtype=float)
    priv = np.asarray(private_means, dtype=float)
    if pub.shape != priv.shape or pub.ndim != 1 or pub.size < 2:
        raise ValueError("mean vectors must be 1-d, equal length, K >= 2")
    best_public = int(pub.argmax())
    best_private = int(priv.argmax())
    if (pub == pub[best_public]).sum() != 1 or (priv == priv[best_private]).sum() != 1:
        raise ValueError("best public and private arms must be unique")
    if best_public == best_private:
        raise UnsupportedInstanceError(
            "best public and private arms coincide; the allocation problem assumes they differ")
    return GapStructure(
        private_gaps=priv[best_private] - priv,
        public_gaps=pub[best_public] - pub,
        best_private=best_private,
        best_public=best_public,
        delta_istar_priv=float(priv[best_private] - priv[best_public]),
        d1=float(pub[best_public] - pub[best_private]),
    )


def gap_structure(instance: BanditInstance) -> GapStructure:
    return gap_structure_from_means(instance.public_means, instance.private_means)


def _weights_array(weights, n: int) -> np.ndarray:
    w = weights.probs if isinstance(weights, SimplexDistribution) else np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"weights must have dimension {n} (arms excluding the best public arm)")
    return w


def gamma_value(weights: np.ndarray, gaps: GapStructure) -> float:
    """Gamma(w) for a raw weight array over ``gaps.boostable_arms`` (no simplex validation)."""
    arms = gaps.boostable_arms
    w1_pos = arms.index(gaps.best_private)
    w1 = weights[w1_pos]
    if w1 <= 0.0:
        return 0.0
    sqrt_w1 = math.sqrt(w1)
    best = sqrt_w1 * gaps.delta_istar_priv ** 2 / gaps.d1
    for pos, a in enumerate(arms):
        if a == gaps.best_private:
            continue
        wa = weights[pos]
        num = sqrt_w1 * math.sqrt(wa) * gaps.private_gaps[a] ** 2
        den = sqrt_w1 * gaps.public_gaps[a] + math.sqrt(wa) * gaps.d1
        term = num / den
        if term < best:
            best = term
    return best


def gamma(weights, gaps: GapStructure) -> float:
    """Error exponent Gamma(w) of boosting proportions ``weights`` (dimension K-1, arms != i*)."""
    w = _weights_array(weights, gaps.n_arms - 1)
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    return gamma_value(w, gaps)


def evidence_terms(weights, gaps: GapStructure) -> dict[int, float]:
    """The K-1 evidence terms of Gamma(w) keyed by arm (best public arm's uses its own formula)."""
    w = _weights_array(weights, gaps.n_arms - 1)
    arms = gaps.boostable_arms
    w1 = w[arms.index(gaps.best_private)]
    sqrt_w1 = math.sqrt(max(w1, 0.0))
    terms: dict[int, float] = {
        gaps.best_public: sqrt_w1 * gaps.delta_istar_priv ** 2 / gaps.d1,
    }
    for pos, a in enumerate(arms):
        if a == gaps.best_private:
            continue
        num = sqrt_w1 * math.sqrt(max(w[pos], 0.0)) * gaps.private_gaps[a] ** 2
        den = sqrt_w1 * gaps.public_gaps[a] + math.sqrt(max(w[pos], 0.0)) * gaps.d1
        terms[a] = num / den if den > 0 else 0.0
    return terms


# --- closed-form machinery for the equalized-evidence reduction ---------------

def g_of_x(x: float, dpriv: float, dpub: float, d1: float) -> float:
    """Evidence of arm a per sqrt(w_1): g_a(x) = sqrt(x) * dpriv^2 / (dpub + sqrt(x) * d1)."""
    s = math.sqrt(x)
    return s * dpriv ** 2 / (dpub + s * d1)


def x_of_y(y: float, dpriv: float, dpub: float, d1: float) -> float:
    """Inverse of g_a: x_a(y) = (y * dpub / (dpriv^2 - y * d1))^2, valid for y < dpriv^2 / d1."""
    denom = dpriv ** 2 - y * d1
    if denom <= 0.0:
        raise ValueError("y outside the domain of the inverse")
    r = y * dpub / denom
    return r * r


def x_prime_of_y(y: float, dpriv: float, dpub: float, d1: float) -> float:
    """Derivative of x_a(y): 2 * x_a(y) * (1/y + d1 / (dpriv^2 - y * d1))."""
    x = x_of_y(y, dpriv, dpub, d1)
    return 2.0 * x * (1.0 / y + d1 / (dpriv ** 2 - y * d1))


def _other_arms(gaps: GapStructure) -> list[int]:
    return [a for a in gaps.boostable_arms if a != gaps.best_private]


def balance_equation(y: float, gaps: GapStructure) -> float:
    """F(y) = 1 + sum_a x_a(y) - (y/2) * sum_a x_a'(y); strictly decreasing, F(0) = 1."""
    if y == 0.0:
        return 1.0
    total = 1.0
    for a in _other_arms(gaps):
        dpriv = gaps.private_gaps[a]
        dpub = gaps.public_gaps[a]
        total += x_of_y(y, dpriv, dpub, gaps.d1)
        total -= 0.5 * y * x_prime_of_y(y, dpriv, dpub, gaps.d1)
    return total


@dataclass(frozen=True)
class AllocationSolution:
    """Optimal boosting proportions over ``arms`` (all arms except the best public one).

    ``case`` is "interior" when the equalized-evidence root is feasible,
    "boundary" when it is capped by the best public arm's private gap, and
    "degenerate" for K = 2 (a single boostable arm).
    """

    arms: tuple[int, ...]
    weights: SimplexDistribution
    gamma_star: float
    y_star: float
    case: str

    def weight_of(self, arm: int) -> float:
        return float(self.weights.probs[self.arms.index(arm)])


def solve_allocation(gaps: GapStructure) -> AllocationSolution:
    """Exact maximin allocation via the closed-form inverse and a bisection root.

    Finds the unique root of F(y) = 0 on (0, min_a dpriv_a^2 / d1), caps it at
    delta_istar_priv^2 / d1 (boundary case), and maps back through
    w_1 = 1 / (1 + sum x_a), w_a = x_a * w_1.
    """
    arms = gaps.boostable_arms
    others = _other_arms(gaps)
    cap = gaps.delta_istar_priv ** 2 / gaps.d1
    if not others:
        weights = SimplexDistribution(np.ones(1))
        return AllocationSolution(arms=arms, weights=weights,
                                  gamma_star=gamma_value(np.ones(1), gaps),
                                  y_star=cap, case="degenerate")

    y_hi = min(gaps.private_gaps[a] ** 2 / gaps.d1 for a in others)
    lo, hi = 0.0, y_hi * (1.0 - 1e-9)
    if balance_equation(hi, gaps) > 0.0:
        raise NumericalFailureError("balance equation does not change sign inside its domain")
    while hi - lo > 1e-12 * max(1.0, y_hi):
        mid = 0.5 * (lo + hi)
        if balance_equation(mid, gaps) > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)

    if root > cap:
        y_star, case = cap, "boundary"
    else:
        y_star, case = root, "interior"
        residual = balance_equation(y_star, gaps)
        if abs(residual) > 1e-8:
            raise NumericalFailureError(
                f"root residual {residual!r} exceeds 1e-8; instance too ill-conditioned")

    xs = {a: x_of_y(y_star, gaps.private_gaps[a], gaps.public_gaps[a], gaps.d1) for a in others}
    w1 = 1.0 / (1.0 + sum(xs.values()))
    w = np.empty(len(arms))
    for pos, a in enumerate(arms):
        w[pos] = w1 if a == gaps.best_private else xs[a] * w1
    w /= w.sum()
    weights = SimplexDistribution(w)
    return AllocationSolution(arms=arms, weights=weights,
                              gamma_star=gamma_value(w, gaps),
                              y_star=float(y_star), case=case)


# --- brute-force oracle --------------------------------------------------------

def _grid_search(gaps: GapStructure, step: float) -> np.ndarray:
    """Best weight vector on a regular simplex grid (only practical for K - 1 <= 3)."""
    m = gaps.n_arms - 1
    n = int(round(1.0 / step))
    best_w = np.full(m, 1.0 / m)
    best_g = gamma_value(best_w, gaps)
    if m == 2:
        for i in range(1, n):
            w = np.array([i / n, 1.0 - i / n])
            g = gamma_value(w, gaps)
            if g > best_g:
                best_g, best_w = g, w
    elif m == 3:
        for i in range(1, n):
            for j in range(1, n - i):
                w = np.array([i / n, j / n, (n - i - j) / n])
                g = gamma_value(w, gaps)
                if g > best_g:
                    best_g, best_w = g, w
    else:
        raise ValueError("grid search supported only for K - 1 in {2, 3}")
    return best_w


def _polish(w0: np.ndarray, gaps: GapStructure) -> tuple[np.ndarray, float]:
    """Nelder-Mead refinement on a softmax parametrization of the simplex."""
    z0 = np.log(np.maximum(w0, 1e-12))

    def neg_gamma(z):
        e = np.exp(z - z.max())
        return -gamma_value(e / e.sum(), gaps)

    res = minimize(neg_gamma, z0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000, "maxfev": 20000})
    e = np.exp(res.x - res.x.max())
    w = e / e.sum()
    return w, gamma_value(w, gaps)


def solve_allocation_oracle(gaps: GapStructure, rng: RandomSource | None = None,
                            restarts: int = 24, grid_step: float = 0.005) -> tuple[np.ndarray, float]:
    """Independent brute-force solution: simplex grid (small K) plus random restarts.

    Concavity makes any local optimum global, so Dirichlet restarts with
    Nelder-Mead polish agree with the exact solver up to search resolution.
    Returns (weights over ``gaps.boostable_arms``, gamma value).
    """
    m = gaps.n_arms - 1
    starts = [np.full(m, 1.0 / m)]
    if m in (2, 3):
        starts.append(_grid_search(gaps, grid_step))
    if rng is None:
        rng = RandomSource(0)
    for _ in range(restarts):
        starts.append(rng.gen.dirichlet(np.ones(m)))
    best_w, best_g = None, -np.inf
    for w0 in starts:
        w, g = _polish(np.asarray(w0, dtype=float), gaps)
        if g > best_g:
            best_w, best_g = w, g
    return best_w, best_g

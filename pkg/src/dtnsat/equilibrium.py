"""Closed-form satisfaction-equilibrium solvers and efficiency checks.

The solvers invert a reduced per-relay balance equation: caching cost is
linearized to e*(1-q)/lam and the failure regret is weighted by the full
fleet size n rather than by the accepting cohort alone.  The residual of
that balance is exposed (``pure_indifference_gap`` / ``mixed_indifference_gap``)
so tests can verify each returned reward solves its own equation; the exact
per-cohort utilities in :mod:`dtnsat.model` differ from the reduced model by
a small documented offset and are kept as independent operations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .model import (
    GameParams,
    contact_probability,
    delivery_share,
    expected_relay_utility_mixed,
    expected_source_utility_mixed,
    per_relay_success,
    relay_failure_probability,
)


class DegenerateFailureError(ValueError):
    """Raised when relays can never reach the destination (q = 1)."""


class DegenerateContactError(ValueError):
    """Raised when the mixed game has zero per-relay success at p = 1."""


class RangeError(ValueError):
    """Raised for an empty or inverted sweep interval."""


BISECTION_TOL = 1e-6
BISECTION_MAX_ITER = 200
# strictly-better margin for the dominance verdict, guards float noise
DOMINANCE_MARGIN = 1e-9


def reduced_cooperation_cost(params: GameParams) -> float:
    """Per-relay cooperation cost under the linearized caching-energy model.

    Returns e_r + e_t + e*(1-q)/lam; for lam = 0 the analytic limit e*tau
    is used so degenerate scenarios stay evaluable.
    """
    lam, tau = params.contact.lam, params.contact.tau
    if lam == 0:
        stored = params.energy.e_store * tau
    else:
        stored = params.energy.e_store * contact_probability(params.contact) / lam
    return params.energy.e_receive + params.energy.e_transmit + stored


def pure_indifference_gap(alpha: float, n_active: int, params: GameParams) -> float:
    """Accept-minus-reject payoff under the reduced model, pure cohort case.

    The solver's reward for cohort n_active is the exact root of this gap.
    """
    q = relay_failure_probability(params.contact)
    share = delivery_share(n_active, q)
    crowd_regret = params.sigma * (params.n - 1 + q ** n_active) / n_active
    accept = alpha * share - crowd_regret - reduced_cooperation_cost(params)
    reject = -alpha * share - params.gamma
    return accept - reject


def mixed_indifference_gap(alpha: float, p: float, params: GameParams) -> float:
    """Accept-minus-reject payoff under the reduced model, common mixing p."""
    n = params.n
    miss = (1.0 - per_relay_success(params, p)) ** n
    share = (1.0 - miss) / n
    crowd_regret = params.sigma * (n - 1 + miss) / n
    accept = alpha * share - crowd_regret - reduced_cooperation_cost(params)
    reject = -alpha * share - params.gamma
    return accept - reject


def mixed_relay_payoffs(alpha: float, p: float, params: GameParams) -> tuple[float, float]:
    """(accept, reject) payoffs of the reduced mixed model at common p."""
    n = params.n
    miss = (1.0 - per_relay_success(params, p)) ** n
    share = (1.0 - miss) / n
    crowd_regret = params.sigma * (n - 1 + miss) / n
    accept = alpha * share - crowd_regret - reduced_cooperation_cost(params)
    reject = -alpha * share - params.gamma
    return accept, reject


@dataclass(frozen=True)
class PseSolution:
    """Pure-strategy equilibria: one candidate reward per cohort size."""

    n_a_min: int
    alpha_star: dict[int, float]
    clamped: dict[int, bool]
    feasible: bool

    def unclamped(self) -> dict[int, float]:
        return {m: a for m, a in self.alpha_star.items() if not self.clamped[m]}


@dataclass(frozen=True)
class MseSolution:
    """Mixed-strategy equilibria: reward as a function of the accept prob."""

    p_min: float
    alpha_of_p: Callable[[float], float]
    z_star: float
    feasible: bool

    def table(self, points: int = 11) -> list[tuple[float, float]]:
        """Sample (p, alpha) on an even grid over [p_min, 1]."""
        if not self.feasible:
            return []
        lo = self.p_min
        grid = [lo + (1.0 - lo) * i / (points - 1) for i in range(points)]
        return [(p, self.alpha_of_p(p)) for p in grid]


@dataclass(frozen=True)
class EseSolution:
    """The equilibrium where the source's delivery constraint binds exactly."""

    p_star: float
    alpha_star: float
    binding_delivery: float
    alpha_clamped: bool = field(default=False)


def minimum_satisfying_cohort(params: GameParams) -> int:
    """Smallest integer cohort with 1 - q**m >= delta."""
    q = relay_failure_probability(params.contact)
    if q >= 1.0:
        raise DegenerateFailureError("no cohort can satisfy the source when q = 1")
    ratio = math.log(1.0 - params.delta) / math.log(q)
    # snap to the integer when float noise puts an exact bound a hair above it
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-12:
        ratio = nearest
    return max(1, math.ceil(ratio))


def pse_reward(params: GameParams, n_active: int) -> float:
    """Reward making cohort n_active indifferent under the reduced model."""
    lam = params.contact.lam
    q = relay_failure_probability(params.contact)
    if q >= 1.0:
        raise DegenerateFailureError("indifference reward undefined for q = 1")
    miss = q ** n_active
    num = lam * params.sigma * (params.n - 1 + miss) - n_active * (
        lam * (params.gamma - params.energy.e_receive - params.energy.e_transmit)
        - params.energy.e_store * (1.0 - q)
    )
    return num / (2.0 * lam * (1.0 - miss))


def solve_pse(params: GameParams) -> PseSolution:
    """All pure-strategy candidates: cohorts from the QoS bound up to n.

    Rewards falling outside [0, alpha_max] are reported clamped instead of
    saturated, since a saturated reward no longer balances the cohort.
    """
    n_a_min = minimum_satisfying_cohort(params)
    alpha_star: dict[int, float] = {}
    clamped: dict[int, bool] = {}
    for m in range(n_a_min, params.n + 1):
        a = pse_reward(params, m)
        alpha_star[m] = a
        clamped[m] = not (0.0 <= a <= params.alpha_max)
    feasible = n_a_min <= params.n and any(not c for c in clamped.values())
    return PseSolution(n_a_min=n_a_min, alpha_star=alpha_star, clamped=clamped,
                       feasible=feasible)


def mse_reward(params: GameParams, p: float) -> float:
    """Reward making relays indifferent when all accept with probability p."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    lam = params.contact.lam
    q = relay_failure_probability(params.contact)
    z = per_relay_success(params, p)
    if z <= 0:
        raise DegenerateContactError("indifference reward undefined for zero success")
    miss = (1.0 - z) ** params.n
    num = lam * params.sigma * (params.n - 1 + miss) - params.n * (
        lam * (params.gamma - params.energy.e_receive - params.energy.e_transmit)
        - params.energy.e_store * (1.0 - q)
    )
    return num / (2.0 * lam * (1.0 - miss))


def solve_mse(params: GameParams) -> MseSolution:
    """Mixed equilibria: the minimum accept probability and the reward curve."""
    ceiling = per_relay_success(params, 1.0)
    if ceiling <= 0:
        raise DegenerateContactError("per-relay success is zero even at p = 1")
    p_min = (1.0 - (1.0 - params.delta) ** (1.0 / params.n)) / ceiling
    feasible = p_min <= 1.0
    z_star = per_relay_success(params, min(p_min, 1.0))
    return MseSolution(p_min=p_min,
                       alpha_of_p=lambda p: mse_reward(params, p),
                       z_star=z_star,
                       feasible=feasible)


def solve_ese(params: GameParams) -> EseSolution:
    """Equilibrium at the binding point: smallest p meeting the QoS exactly."""
    mse = solve_mse(params)
    if not mse.feasible:
        raise DegenerateContactError(
            f"QoS delta = {params.delta} is unreachable even at p = 1")
    alpha = mse_reward(params, mse.p_min)
    clamped = not (0.0 <= alpha <= params.alpha_max)
    alpha = min(max(alpha, 0.0), params.alpha_max)
    return EseSolution(p_star=mse.p_min,
                       alpha_star=alpha,
                       binding_delivery=expected_source_utility_mixed(mse.p_min, params),
                       alpha_clamped=clamped)


def own_prob_payoff_slope(alpha: float, p: float, params: GameParams) -> float:
    """Derivative of a relay's reduced-model payoff in its own accept prob.

    The payoff is linear in the own probability, so the slope is just the
    accept/reject gap; it vanishes at the indifference reward.
    """
    return mixed_indifference_gap(alpha, p, params)


def _sweep_params(params: GameParams, sweep_var: str, value: float) -> GameParams:
    from dataclasses import replace

    if sweep_var == "tau":
        return replace(params, contact=replace(params.contact, tau=value))
    if sweep_var == "lambda":
        return replace(params, contact=replace(params.contact, lam=value))
    raise ValueError(f"sweep_var must be 'tau' or 'lambda', got {sweep_var!r}")


def satisfaction_region(params: GameParams, sweep_var: str, lo: float, hi: float,
                        fixed_p: float) -> Optional[float]:
    """Smallest swept value at which mixed delivery reaches the threshold.

    Delivery is increasing in both tau and lambda, so the crossing is found
    by bisection to 1e-6 absolute; returns None when the bound is not
    reached anywhere in [lo, hi].
    """
    if not lo < hi:
        raise RangeError(f"need lo < hi, got [{lo}, {hi}]")

    def delivery(value: float) -> float:
        return expected_source_utility_mixed(fixed_p, _sweep_params(params, sweep_var, value))

    if delivery(lo) >= params.delta:
        return lo
    if delivery(hi) < params.delta:
        return None
    a, b = lo, hi
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (a + b)
        if delivery(mid) >= params.delta:
            b = mid
        else:
            a = mid
        if b - a <= BISECTION_TOL:
            break
    return b


@dataclass(frozen=True)
class DominanceVerdict:
    """Comparison of a candidate profile against the binding equilibrium."""

    source_margin_delta: float
    relay_utility_delta: float
    dominates: bool


def pareto_dominance_check(candidate_p: float, candidate_alpha: float,
                           ese: EseSolution, params: GameParams) -> DominanceVerdict:
    """Does (p, alpha) weakly improve both sides and strictly improve one?

    The source is scored by its constraint margin (delivery minus delta) and
    the relays by their expected mixed payoff from
    :func:`dtnsat.model.expected_relay_utility_mixed`.
    """
    if not 0 <= candidate_p <= 1:
        raise ValueError(f"candidate_p must be in [0, 1], got {candidate_p}")
    if not 0 <= candidate_alpha <= params.alpha_max:
        raise ValueError(f"candidate_alpha must be in [0, alpha_max], got {candidate_alpha}")
    margin_cand = expected_source_utility_mixed(candidate_p, params) - params.delta
    margin_ese = ese.binding_delivery - params.delta
    relay_cand = expected_relay_utility_mixed(candidate_p, candidate_alpha, params)
    relay_ese = expected_relay_utility_mixed(ese.p_star, ese.alpha_star, params)
    d_margin = margin_cand - margin_ese
    d_relay = relay_cand - relay_ese
    weakly_both = d_margin >= -DOMINANCE_MARGIN and d_relay >= -DOMINANCE_MARGIN
    strictly_one = d_margin > DOMINANCE_MARGIN or d_relay > DOMINANCE_MARGIN
    return DominanceVerdict(source_margin_delta=d_margin,
                            relay_utility_delta=d_relay,
                            dominates=weakly_both and strictly_one)


def pareto_grid_scan(params: GameParams, ese: EseSolution,
                     p_points: int = 101, alpha_points: int = 101
                     ) -> list[tuple[float, float, DominanceVerdict]]:
    """Evaluate dominance on an even grid over [0,1] x [0,alpha_max].

    Returns the dominating candidates (empty means the binding equilibrium
    sits on the grid's Pareto frontier).
    """
    dominators = []
    for i in range(p_points):
        p = i / (p_points - 1)
        for j in range(alpha_points):
            a = params.alpha_max * j / (alpha_points - 1)
            verdict = pareto_dominance_check(p, a, ese, params)
            if verdict.dominates:
                dominators.append((p, a, verdict))
    return dominators

"""Monte-Carlo certification of the probability bounds.

Every experiment is reproducible: replicate r of master seed s draws its
noise from a generator seeded with mix64(s, r), replicates are processed
in fixed-size batches in replicate order, and the worker count (capped by
the CAUSALCOV_THREADS environment variable) only controls how many batches
are in flight — results are bitwise identical across worker counts.

Certification is one-sided by design: an experiment certifies its bound
when the upper edge of the 99.9% Wilson interval for the event frequency
sits at or below the bound, or trivially when the bound is vacuous (>= 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats

from ._rng import mix64, replicate_rng
from .bounds import (
    anticoncentration_bound,
    chernoff_lower_tail,
    chernoff_threshold,
    exact_mgf,
    mgf_upper_bound,
    upper_tail_bound,
)
from .errors import InvalidInput
from .estimator import least_squares, ls_bound_details
from .linalg import require_psd
from .process import (
    ProcessSpec,
    VarSystem,
    companion,
    noise_block,
    paths_from_noise,
)

__all__ = [
    "TailExperiment",
    "wilson_interval",
    "run_tail_experiment",
    "run_mgf_experiment",
    "run_identification_experiment",
    "EVENT_KINDS",
]

#: replicates per batch; fixed so batching never depends on the worker count
BATCH = 1024

#: two-sided confidence of the certification interval
CONFIDENCE = 0.999

#: standard-normal quantile for the two-sided 99.9% interval
WILSON_Z = float(_stats.norm.ppf(1.0 - (1.0 - CONFIDENCE) / 2.0))

EVENT_KINDS = (
    "lower-tail-eigenvalue",
    "chernoff-direction",
    "upper-tail-opnorm",
    "ls-error-exceeds-bound",
    "mgf-estimate",
)


@dataclass
class TailExperiment:
    """Outcome of one certification experiment.

    frequency is the empirical event frequency (or the mean estimate for
    mgf-estimate runs, whose hits field is None); ci is the certification
    interval; certified is a pure function of (ci, bound): upper edge <=
    bound, or bound >= 1 (then vacuous is set).
    """

    event: str
    replicates: int
    hits: int | None
    frequency: float
    ci: tuple[float, float]
    bound: float
    vacuous: bool
    certified: bool
    seed: int
    extras: dict = field(default_factory=dict)


def wilson_interval(hits: int, n: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise InvalidInput("need at least one trial")
    if not 0 <= hits <= n:
        raise InvalidInput(f"hits {hits} outside [0, {n}]")
    if not 0.0 < confidence < 1.0:
        raise InvalidInput("confidence must lie in (0, 1)")
    z = float(_stats.norm.ppf(1.0 - (1.0 - confidence) / 2.0))
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # the edges are exactly 0 and 1 at the degenerate counts; pin them so
    # floating-point roundoff never leaks past the closed form
    lo = 0.0 if hits == 0 else max(0.0, center - half)
    hi = 1.0 if hits == n else min(1.0, center + half)
    return lo, hi


def certify(ci_hi: float, bound: float) -> tuple[bool, bool]:
    """(certified, vacuous) for an upper CI edge against a bound."""
    vacuous = bound >= 1.0
    return (vacuous or ci_hi <= bound), vacuous


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        raw = os.environ.get("CAUSALCOV_THREADS", "1")
        try:
            workers = int(raw)
        except ValueError as exc:
            raise InvalidInput(f"CAUSALCOV_THREADS must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise InvalidInput(f"worker count must be >= 1, got {workers}")
    return workers


def _map_batches(fn, R: int, workers: int) -> np.ndarray:
    """Apply fn(start, count) -> 1-d array over fixed batches, in order."""
    spans = [(s, min(BATCH, R - s)) for s in range(0, R, BATCH)]
    if workers == 1 or len(spans) == 1:
        parts = [fn(s, c) for s, c in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda sc: fn(*sc), spans))
    return np.concatenate(parts)


def run_tail_experiment(
    spec: ProcessSpec,
    event: str,
    params: dict | None = None,
    R: int = 10_000,
    seed: int = 0,
    workers: int | None = None,
) -> TailExperiment:
    """Estimate an event frequency over R sampled paths and certify its bound.

    Events:

    - "lower-tail-eigenvalue": lam_min of the empirical covariance falls to
      or below the protected threshold; bound from anticoncentration_bound.
    - "chernoff-direction": the probed energy sum_t ||Delta X_t||^2 drops
      to half its decoupled mean; params may carry "direction" (a d' x d
      matrix, default identity); bound from chernoff_lower_tail.
    - "upper-tail-opnorm": ||sum_t X_t X_t^T|| reaches 2q times its mean
      operator norm; params must carry "q" > 1; bound from upper_tail_bound.
    """
    params = dict(params or {})
    if R < 1:
        raise InvalidInput("replicate count must be >= 1")
    workers = _resolve_workers(workers)
    op = spec.operator()
    t_eff, d = spec.effective_horizon, spec.state_dim
    extras: dict = {}

    if event == "chernoff-direction":
        direction = np.asarray(params.pop("direction", np.eye(d)), dtype=float)
        if direction.ndim != 2 or direction.shape[1] != d:
            raise InvalidInput(f"direction must be d' x {d}")
        d_mat = require_psd(direction.T @ direction, "direction Gram")
        bound = chernoff_lower_tail(op, d_mat)
        threshold = chernoff_threshold(op, d_mat)
        extras["threshold"] = threshold

        def batch_stat(start, count):
            w = noise_block(spec, seed, start, count)
            x = paths_from_noise(spec, w)
            probed = np.einsum("rtd,ed->rte", x, direction)
            return np.einsum("rte,rte->r", probed, probed)

        stat = _map_batches(batch_stat, R, workers)
        hits = int(np.count_nonzero(stat <= threshold))

    elif event == "lower-tail-eigenvalue":
        report = anticoncentration_bound(op)
        bound = report.anticonc_probability
        threshold = report.anticonc_threshold
        extras["threshold"] = threshold
        extras["psi_k"] = report.psi_k

        def batch_stat(start, count):
            w = noise_block(spec, seed, start, count)
            x = paths_from_noise(spec, w)
            grams = np.einsum("rti,rtj->rij", x, x) / t_eff
            return np.linalg.eigvalsh(grams)[:, 0]

        stat = _map_batches(batch_stat, R, workers)
        hits = int(np.count_nonzero(stat <= threshold))

    elif event == "upper-tail-opnorm":
        if "q" not in params:
            raise InvalidInput("upper-tail-opnorm needs a q parameter")
        q = float(params.pop("q"))
        bound = upper_tail_bound(op, q)
        dense = op.dense()
        rows = dense.reshape(t_eff, d, dense.shape[1])
        mean_sum = np.einsum("tiq,tjq->ij", rows, rows)
        mean_norm = float(np.linalg.eigvalsh(0.5 * (mean_sum + mean_sum.T))[-1])
        threshold = 2.0 * q * mean_norm
        extras["threshold"] = threshold
        extras["q"] = q

        def batch_stat(start, count):
            w = noise_block(spec, seed, start, count)
            x = paths_from_noise(spec, w)
            grams = np.einsum("rti,rtj->rij", x, x)
            return np.linalg.eigvalsh(grams)[:, -1]

        stat = _map_batches(batch_stat, R, workers)
        hits = int(np.count_nonzero(stat >= threshold))

    else:
        raise InvalidInput(f"unknown trajectory event {event!r}")

    if params:
        raise InvalidInput(f"unused event parameters: {sorted(params)}")
    frequency = hits / R
    ci = wilson_interval(hits, R)
    certified, vacuous = certify(ci[1], bound)
    return TailExperiment(
        event=event,
        replicates=R,
        hits=hits,
        frequency=frequency,
        ci=ci,
        bound=bound,
        vacuous=vacuous,
        certified=certified,
        seed=int(seed),
        extras=extras,
    )


def run_mgf_experiment(q, x, lam: float, R: int = 10_000, seed: int = 0) -> TailExperiment:
    """Monte-Carlo estimate of E exp(-lam [x;W]^T Q [x;W]) with a 5-SE band.

    The estimate is compared against both the closed form (consistency)
    and the exponential upper bound (certification); hits is None since
    the outcome is a mean, not an event count.  The R x m noise block is
    drawn from a single derived-seed generator.
    """
    if R < 2:
        raise InvalidInput("need at least two replicates for a standard error")
    qa = require_psd(q, "Q")
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    n = xv.shape[0]
    m = qa.shape[0] - n
    if m < 1:
        raise InvalidInput("Q must have at least one noise coordinate")
    q11, q12, q22 = qa[:n, :n], qa[:n, n:], qa[n:, n:]
    rng = np.random.Generator(np.random.PCG64(mix64(seed, 0)))
    w = rng.standard_normal((R, m))
    const = float(xv @ q11 @ xv)
    lin = 2.0 * (q12.T @ xv)
    quad = np.einsum("ri,ij,rj->r", w, q22, w)
    vals = np.exp(-lam * (const + w @ lin + quad))
    estimate = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(R))
    ci = (max(0.0, estimate - 5.0 * se), estimate + 5.0 * se)
    bound = mgf_upper_bound(q22, lam)
    certified, vacuous = certify(ci[1], bound)
    return TailExperiment(
        event="mgf-estimate",
        replicates=R,
        hits=None,
        frequency=estimate,
        ci=ci,
        bound=bound,
        vacuous=vacuous,
        certified=certified,
        seed=int(seed),
        extras={"exact": exact_mgf(qa, xv, lam), "se": se, "lam": float(lam)},
    )


def run_identification_experiment(
    sys: VarSystem,
    T: int,
    k: int,
    delta: float,
    R: int = 1000,
    seed: int = 0,
    workers: int | None = None,
) -> TailExperiment:
    """Exceedance test of the identification error bound over R replicates.

    Each replicate simulates the lifted state for T'+1 steps, fits the
    regression of Z_{t+1} on the lifted X_t by least squares, and records
    the operator-norm error.  The certified budget is 2*delta (bound
    failure plus burn-in failure); an unsatisfied burn-in is flagged in
    extras but the experiment proceeds.
    """
    if R < 1:
        raise InvalidInput("replicate count must be >= 1")
    workers = _resolve_workers(workers)
    details = ls_bound_details(sys, T, k, delta)
    bound = details["bound"]
    t_eff = details["effective_horizon"]
    a, b = companion(sys), sys.lifted_noise_map()
    a_star = sys.regression_matrix()
    d = sys.d

    def batch_stat(start, count):
        errors = np.empty(count)
        for i in range(count):
            w = replicate_rng(seed, start + i).standard_normal((t_eff + 1, sys.p))
            x = np.empty((t_eff + 1, sys.lifted_dim))
            state = b @ w[0]
            x[0] = state
            for t in range(1, t_eff + 1):
                state = a @ state + b @ w[t]
                x[t] = state
            fit = least_squares(x[:t_eff], x[1 : t_eff + 1, :d], a_star=a_star)
            errors[i] = fit.op_error
        return errors

    op_errors = _map_batches(batch_stat, R, workers)
    hits = int(np.count_nonzero(op_errors > bound))
    frequency = hits / R
    ci = wilson_interval(hits, R)
    budget = 2.0 * delta
    certified, vacuous = certify(ci[1], budget)
    return TailExperiment(
        event="ls-error-exceeds-bound",
        replicates=R,
        hits=hits,
        frequency=frequency,
        ci=ci,
        bound=budget,
        vacuous=vacuous,
        certified=certified,
        seed=int(seed),
        extras={
            "ls_bound": bound,
            "burnin_satisfied": details["burnin_satisfied"],
            "median_op_error": float(np.median(op_errors)),
            "op_errors": op_errors,
            "delta": float(delta),
            "c_sys": details["c_sys"],
        },
    )

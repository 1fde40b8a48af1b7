"""Quantal response functions, QRE fixed points, and logit path tracing.

A quantal response function maps a player's utility vector to an interior
distribution over that player's actions.  Fixed points of the composition
with the expected-payoff operator are quantal response equilibria; tracing
them along an increasing logit precision schedule yields limit candidates
that land on Nash equilibria.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import MixedProfile, expected_utility
from .monotone import is_payoff_monotone, is_weakly_payoff_monotone

FIXED_POINT_TOL = 1e-10
MAX_ITER = 100_000


class QreConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class QRF:
    """Evaluable map from utility vectors to interior probability vectors."""

    kind = "generic"

    def evaluate(self, utilities):  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, utilities):
        return self.evaluate(utilities)


class LogisticQRF(QRF):
    """Softmax with inverse temperature lam, numerically stabilized.

    Note: for lam * (utility gap) beyond ~700 the low branch underflows to
    exactly zero in double precision; outputs are interior whenever they are
    representable.
    """

    kind = "logistic"

    def __init__(self, lam):
        if not np.isfinite(lam):
            raise ValueError("lambda must be finite")
        self.lam = float(lam)

    def evaluate(self, utilities):
        x = np.asarray(utilities, dtype=float)
        z = self.lam * (x - x.max())
        e = np.exp(z)
        return e / e.sum()

    def __repr__(self):
        return f"LogisticQRF(lam={self.lam:g})"


def logistic_qrf(lam):
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return LogisticQRF(lam)


def logistic_profile(game, lam):
    return [LogisticQRF(lam) for _ in range(game.n_players)]


@dataclass
class QrePoint:
    lam: float | None
    profile: MixedProfile
    residual: float

    @property
    def interior(self):
        return self.profile.is_interior


def _apply_qrfs(game, qrfs, profile):
    return [
        np.asarray(q.evaluate(expected_utility(game, profile, i)), dtype=float)
        for i, q in enumerate(qrfs)
    ]


def _residual(profile, target_vectors):
    return max(
        float(np.max(np.abs(v - t)))
        for v, t in zip(profile.vectors, target_vectors)
    )


def qre_fixed_point(game, qrfs, start=None, tol=FIXED_POINT_TOL,
                    max_iter=MAX_ITER, lam=None):
    """Damped fixed-point iteration for sigma = p(U(sigma)).

    The damping factor halves on residual increases; a finite-difference
    Newton step on the defect map kicks in when plain iteration stalls.
    Raises QreConvergenceError with the last residual on failure.
    """
    if len(qrfs) != game.n_players:
        raise ValueError("one quantal response function per player required")
    profile = start if start is not None else MixedProfile.uniform(game)
    alpha = 1.0
    target = _apply_qrfs(game, qrfs, profile)
    res = _residual(profile, target)
    stall = 0
    for _ in range(max_iter):
        if res < tol:
            return _accept(game, qrfs, profile, target, res, lam, tol)
        step = [
            (1 - alpha) * v + alpha * t for v, t in zip(profile.vectors, target)
        ]
        cand = MixedProfile(game, step)
        cand_target = _apply_qrfs(game, qrfs, cand)
        cand_res = _residual(cand, cand_target)
        if cand_res <= res or alpha <= 1e-3:
            if res - cand_res < 1e-3 * res:
                stall += 1
            else:
                stall = 0
            profile, target, res = cand, cand_target, cand_res
            alpha = min(1.0, alpha * 1.25)
        else:
            alpha *= 0.5
        if stall >= 60:
            newton = _newton_polish(game, qrfs, profile, tol)
            if newton is not None:
                profile = newton
                target = _apply_qrfs(game, qrfs, profile)
                res = _residual(profile, target)
                if res < tol:
                    return _accept(game, qrfs, profile, target, res, lam, tol)
            stall = 0
    raise QreConvergenceError(
        f"fixed point not reached (last residual {res:.3e})", res
    )


def _accept(game, qrfs, profile, target, res, lam, tol):
    """Prefer landing on the QRF image: it is interior by construction,
    which heals exact zeros left by clipped Newton steps."""
    imaged = MixedProfile(game, target)
    imaged_res = _residual(imaged, _apply_qrfs(game, qrfs, imaged))
    if imaged_res < tol:
        return QrePoint(lam, imaged, imaged_res)
    return QrePoint(lam, profile, res)


def _stack_reduced(vectors):
    return np.concatenate([v[:-1] for v in vectors])


def _unstack_reduced(game, z):
    vecs = []
    pos = 0
    for k in game.action_counts:
        head = np.clip(z[pos : pos + k - 1], 0.0, 1.0)
        pos += k - 1
        tail = max(0.0, 1.0 - head.sum())
        vecs.append(np.concatenate([head, [tail]]))
    return MixedProfile(game, vecs)


def _newton_polish(game, qrfs, profile, tol, steps=40):
    def defect(z):
        prof = _unstack_reduced(game, z)
        target = _apply_qrfs(game, qrfs, prof)
        return _stack_reduced(prof.vectors) - _stack_reduced(target)

    z = _stack_reduced(profile.vectors)
    n = len(z)
    for _ in range(steps):
        f = defect(z)
        if np.max(np.abs(f)) < tol / 4:
            return _unstack_reduced(game, z)
        jac = np.empty((n, n))
        h = 1e-7
        for j in range(n):
            zp = z.copy()
            zp[j] += h
            jac[:, j] = (defect(zp) - f) / h
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        scale = 1.0
        base = np.max(np.abs(f))
        for _ in range(20):
            trial = z + scale * step
            if np.max(np.abs(defect(trial))) < base:
                z = trial
                break
            scale *= 0.5
        else:
            return None
    return None


def default_lambda_schedule(lam_max=1e3, steps=40, lam_min=1e-2):
    return [0.0] + list(np.logspace(np.log10(lam_min), np.log10(lam_max), steps))


@dataclass
class LogitPath:
    points: list  # accepted QrePoints, one per schedule entry
    terminal: MixedProfile
    nearest_nash: MixedProfile | None
    nash_distance: float | None


def trace_logit_path(game, lam_schedule=None, start=None, tol=FIXED_POINT_TOL):
    """Warm-started continuation along an increasing logit schedule.

    The centroid seeds lambda = 0; each accepted point seeds the next
    lambda.  Residual spikes or large profile jumps trigger step halving in
    lambda.  The terminal point is the limit candidate; its nearest
    enumerated Nash equilibrium is attached when enumeration is available.
    """
    if lam_schedule is None:
        lam_schedule = default_lambda_schedule()
    lam_schedule = [float(l) for l in lam_schedule]
    if not lam_schedule or lam_schedule[0] != 0.0:
        raise ValueError("the lambda schedule must start at 0")
    if any(b <= a for a, b in zip(lam_schedule, lam_schedule[1:])):
        raise ValueError("the lambda schedule must be strictly increasing")
    profile = start if start is not None else MixedProfile.uniform(game)
    points = []
    prev_lam = 0.0
    for lam in lam_schedule:
        point = _trace_step(game, prev_lam, lam, profile, tol, depth=0)
        points.append(point)
        profile = point.profile
        prev_lam = lam
    terminal = points[-1].profile
    nearest = None
    distance = None
    from .nash import UnsupportedGameError, nearest_nash

    try:
        distance, nearest = nearest_nash(game, terminal)
    except UnsupportedGameError:
        pass
    return LogitPath(points, terminal, nearest, distance)


def _trace_step(game, lam_lo, lam_hi, profile, tol, depth):
    qrfs = logistic_profile(game, lam_hi)
    try:
        point = qre_fixed_point(game, qrfs, start=profile, tol=tol, lam=lam_hi)
        if point.profile.distance(profile) <= 0.35 or depth >= 6:
            return point
    except QreConvergenceError:
        if depth >= 6:
            raise
    mid = 0.5 * (lam_lo + lam_hi)
    bridge = _trace_step(game, lam_lo, mid, profile, tol, depth + 1)
    return _trace_step(game, mid, lam_hi, bridge.profile, tol, depth + 1)


@dataclass
class PerturbedPoint:
    profile: MixedProfile
    distance: float
    verdict: object  # MonotonicityVerdict of the payoff-monotone test


def perturbed_monotone_point(game, mu, zeta, lam=1.0, tol=1e-12,
                             max_iter=MAX_ITER):
    """Fixed point of beta -> (1 - zeta) * mu + zeta * logit(U(beta)).

    For small zeta the output is an interior payoff-monotone profile within
    about zeta of mu (convex-combination structure bounds the distance).
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    check = is_weakly_payoff_monotone(game, mu)
    if not check.satisfied:
        raise ValueError("mu is not weakly payoff monotone")
    logit = LogisticQRF(lam)
    profile = mu
    res = np.inf
    for _ in range(max_iter):
        target = [
            (1 - zeta) * m + zeta * logit.evaluate(expected_utility(game, profile, i))
            for i, m in enumerate(mu.vectors)
        ]
        res = max(
            float(np.max(np.abs(v - t)))
            for v, t in zip(profile.vectors, target)
        )
        profile = MixedProfile(game, target)
        if res < tol:
            break
    else:
        raise QreConvergenceError(
            f"perturbation fixed point not reached (residual {res:.3e})", res
        )
    return PerturbedPoint(
        profile, profile.distance(mu), is_payoff_monotone(game, profile)
    )


@dataclass
class AuditReport:
    passed: bool
    axioms: dict  # axiom -> bool
    counterexamples: list

    def __bool__(self):
        return self.passed


def qrf_regularity_audit(qrf, n_actions, sample_count=200, seed=0,
                         eta=0.1, continuity_step=1e-7):
    """Sampled check of the four regularity axioms.

    Interiority and monotonicity are checked at each sampled utility
    vector; responsiveness via a bump of size eta on one coordinate;
    continuity via the output delta under a small perturbation.
    """
    rng = np.random.default_rng(seed)
    axioms = {
        "interiority": True,
        "continuity": True,
        "responsiveness": True,
        "monotonicity": True,
    }
    bad = []
    for _ in range(int(sample_count)):
        x = rng.uniform(-5.0, 5.0, size=n_actions)
        p = np.asarray(qrf.evaluate(x), dtype=float)
        if not np.all(p > 0.0):
            axioms["interiority"] = False
            bad.append(("interiority", x.copy()))
        a = int(rng.integers(n_actions))
        bump = x.copy()
        bump[a] += eta
        if not qrf.evaluate(bump)[a] > p[a]:
            axioms["responsiveness"] = False
            bad.append(("responsiveness", x.copy()))
        for i in range(n_actions):
            for j in range(n_actions):
                if x[i] > x[j] and not p[i] > p[j]:
                    axioms["monotonicity"] = False
                    bad.append(("monotonicity", x.copy()))
        wiggle = x + rng.uniform(-continuity_step, continuity_step, size=n_actions)
        dp = np.max(np.abs(np.asarray(qrf.evaluate(wiggle)) - p))
        if dp > 1e-3:
            axioms["continuity"] = False
            bad.append(("continuity", x.copy()))
    return AuditReport(all(axioms.values()), axioms, bad)

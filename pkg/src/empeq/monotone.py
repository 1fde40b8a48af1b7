"""Monotonicity predicates linking play frequencies to expected payoffs.

All predicates are pure functions over immutable inputs.  Strictness at
exact equality resolves as "not greater": `x` beats `y` only when
``x > y + tol``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .game import MixedProfile, expected_utility

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    player: str
    actions: tuple
    probs: tuple
    utils: tuple
    note: str


@dataclass(frozen=True)
class MonotonicityVerdict:
    satisfied: bool
    violations: tuple

    def __bool__(self):
        return self.satisfied


def _greater(x, y, tol):
    return x > y + tol


def is_weakly_payoff_monotone(game, profile, tol=DEFAULT_TOL):
    """Strictly-more-played actions must earn strictly more.

    Probability ties impose nothing; a pair violates when the probability
    gap exceeds `tol` but the utility gap does not.
    """
    bad = []
    for i, p in enumerate(game.players):
        sig = profile.vectors[i]
        eu = expected_utility(game, profile, i)
        for a, b in itertools.permutations(range(len(sig)), 2):
            if _greater(sig[a], sig[b], tol) and not _greater(eu[a], eu[b], tol):
                bad.append(
                    Violation(
                        p,
                        (game.actions[p][a], game.actions[p][b]),
                        (float(sig[a]), float(sig[b])),
                        (float(eu[a]), float(eu[b])),
                        "played strictly more without strictly higher payoff",
                    )
                )
    return MonotonicityVerdict(not bad, tuple(bad))


def is_payoff_monotone(game, profile, tol=DEFAULT_TOL):
    """Probabilities and expected utilities are ordinally equivalent.

    Utility ties (within tol) force probability ties (within tol).  When
    utilities are clearly ordered, the probabilities must realize that order
    exactly: sharper quantal responses legitimately separate actions by far
    less than tol, so the direction of the gap decides, not its size.
    """
    bad = []
    for i, p in enumerate(game.players):
        sig = profile.vectors[i]
        eu = expected_utility(game, profile, i)
        for a, b in itertools.combinations(range(len(sig)), 2):
            du = eu[a] - eu[b]
            if abs(du) <= tol:
                if abs(sig[a] - sig[b]) > tol:
                    bad.append(
                        Violation(
                            p,
                            (game.actions[p][a], game.actions[p][b]),
                            (float(sig[a]), float(sig[b])),
                            (float(eu[a]), float(eu[b])),
                            "utility tie without probability tie",
                        )
                    )
                continue
            hi, lo = (a, b) if du > 0 else (b, a)
            if not sig[hi] > sig[lo]:
                bad.append(
                    Violation(
                        p,
                        (game.actions[p][hi], game.actions[p][lo]),
                        (float(sig[hi]), float(sig[lo])),
                        (float(eu[hi]), float(eu[lo])),
                        "higher payoff without strictly higher probability",
                    )
                )
    return MonotonicityVerdict(not bad, tuple(bad))


def is_m_weakly_payoff_monotone(game, profile, m, tol=DEFAULT_TOL):
    """Weakly-better actions keep at least fraction `m` of the worse one's mass."""
    if not 0.0 <= m <= 1.0:
        raise ValueError("m must lie in [0, 1]")
    bad = []
    for i, p in enumerate(game.players):
        sig = profile.vectors[i]
        eu = expected_utility(game, profile, i)
        for a, b in itertools.permutations(range(len(sig)), 2):
            if eu[a] >= eu[b] - tol and not sig[a] >= m * sig[b] - tol:
                bad.append(
                    Violation(
                        p,
                        (game.actions[p][a], game.actions[p][b]),
                        (float(sig[a]), float(sig[b])),
                        (float(eu[a]), float(eu[b])),
                        f"sigma(a) < {m} * sigma(b) despite weakly higher payoff",
                    )
                )
    return MonotonicityVerdict(not bad, tuple(bad))


def sample_monotone_region(game, resolution, kind="weak", tol=DEFAULT_TOL):
    """Grid verdicts over the unit cube for games with two actions per player.

    Coordinates are sigma_i(first action).  Rows come out in lexicographic
    coordinate order (first player's coordinate slowest).
    """
    if any(k != 2 for k in game.action_counts):
        raise ValueError("region sampling requires exactly 2 actions per player")
    resolution = int(resolution)
    if resolution < 1:
        raise ValueError("resolution must be a positive integer")
    if kind == "weak":
        predicate = is_weakly_payoff_monotone
    elif kind == "strict":
        predicate = is_payoff_monotone
    else:
        raise ValueError("kind must be 'weak' or 'strict'")
    axis = np.linspace(0.0, 1.0, resolution + 1)
    rows = []
    for idx in itertools.product(range(resolution + 1), repeat=game.n_players):
        coords = tuple(float(axis[j]) for j in idx)
        profile = MixedProfile(game, [np.array([c, 1.0 - c]) for c in coords])
        rows.append((coords, bool(predicate(game, profile, tol).satisfied)))
    return rows


def region_csv(rows):
    """CSV text for region rows: coord_1,...,coord_k,satisfied (0/1)."""
    if not rows:
        return ""
    k = len(rows[0][0])
    lines = [",".join(f"coord_{j + 1}" for j in range(k)) + ",satisfied"]
    for coords, ok in rows:
        lines.append(",".join(repr(c) for c in coords) + f",{int(ok)}")
    return "\n".join(lines) + "\n"


def region_area(rows):
    """Fraction of grid points satisfying the predicate."""
    if not rows:
        return 0.0
    return sum(1 for _, ok in rows if ok) / len(rows)

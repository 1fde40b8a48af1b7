import json

import numpy as np
import pytest

from empeq import corpus
from empeq.ccost import (
    CalibrationError,
    ControlCostGame,
    ControlCostSpline,
    SplineError,
    SplineQRF,
    build_spline,
    cc_equilibrium_check,
    induced_qrf,
    vanishing_sequence,
)
from empeq.game import MixedProfile, expected_utility, nash_defect
from empeq.monotone import is_payoff_monotone
from empeq.qre import logistic_profile, qre_fixed_point, qrf_regularity_audit

from conftest import random_game, random_monotone_profile


def _profile_splines(game, profile, eps=0.1):
    return tuple(
        build_spline(profile.vectors[i], expected_utility(game, profile, i), eps)
        for i in range(game.n_players)
    )


def test_single_level_equal_utilities():
    sp = build_spline(np.array([0.5, 0.5]), np.array([1.0, 1.0]), 0.1)
    assert sp.derivative(0.5) - sp.derivative(0.5) == 0.0
    assert len(sp.levels) == 1


def test_gamma1_worked_example(gamma1):
    prof = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.7, "a2": 0.3}, "P2": {"b1": 0.7, "b2": 0.3}}
    )
    eu = expected_utility(gamma1, prof, 0)
    assert list(eu) == [0.7, 0.0]
    sp = build_spline(prof.vectors[0], eu, 0.1, y0=0.1)
    assert list(sp.slopes) == pytest.approx([-0.9, -0.8, -0.1, 0.0], abs=1e-12)
    assert sp.derivative(0.7) - sp.derivative(0.3) == pytest.approx(0.7, abs=1e-12)


def test_value_one_is_zero_and_asymptote():
    sp = build_spline(np.array([0.3, 0.7]), np.array([0.0, 0.7]), 0.1, y0=0.1)
    assert sp.value(1.0) == 0.0
    m0, y0 = sp.slopes[0], sp.knots[0]
    bound = sp.value(y0) + abs(m0) * y0**2 * (1e9 - 1 / y0)
    assert sp.value(1e-9) >= bound * (1 - 1e-12)
    assert sp.value(1e-9) > 1e6


def test_derivative_continuity_and_convexity():
    rng = np.random.default_rng(2)
    g = random_game(rng, (3, 4))
    prof = random_monotone_profile(g, rng)
    sp = build_spline(prof.vectors[1], expected_utility(g, prof, 1), 0.2)
    for k in sp.knots[:-1]:
        left = sp.derivative(k * (1 - 1e-12))
        right = sp.derivative(min(1.0, k * (1 + 1e-12)))
        assert abs(left - right) <= 1e-9 * max(1.0, abs(left))
    ys = np.linspace(1e-3, 1.0, 1000)
    vals = sp.value(ys)
    second = np.diff(vals, 2)
    assert np.all(second > -1e-12)
    assert np.all(np.diff(vals) < 0)  # strictly decreasing


def test_round_trip_foc(gamma1):
    prof = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.7, "a2": 0.3}, "P2": {"b1": 0.6, "b2": 0.4}}
    )
    ccg = ControlCostGame(gamma1, _profile_splines(gamma1, prof))
    ok, defect, _ = cc_equilibrium_check(ccg, prof)
    assert ok
    assert defect < 1e-12


def test_perturbation_breaks_foc(gamma1):
    prof = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.7, "a2": 0.3}, "P2": {"b1": 0.6, "b2": 0.4}}
    )
    ccg = ControlCostGame(gamma1, _profile_splines(gamma1, prof))
    moved = prof.replace(0, np.array([0.75, 0.25]))
    ok, defect, _ = cc_equilibrium_check(ccg, moved)
    assert not ok
    assert defect > 1e-3


def test_one_action_player_trivial_equilibrium():
    from empeq.game import Game

    g = Game(["P1", "P2"], {"P1": ["only"], "P2": ["l", "r"]},
             np.array([[[1.0, 2.0], [1.0, 0.0]]]))
    prof = MixedProfile(g, [np.array([1.0]), np.array([0.8, 0.2])])
    ccg = ControlCostGame(g, _profile_splines(g, prof))
    ok, defect, _ = cc_equilibrium_check(ccg, prof)
    assert ok


def test_boundary_profile_rejected(gamma1):
    interior = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.7, "a2": 0.3}, "P2": {"b1": 0.6, "b2": 0.4}}
    )
    ccg = ControlCostGame(gamma1, _profile_splines(gamma1, interior))
    pure = MixedProfile.pure(gamma1, {"P1": "a1", "P2": "b1"})
    with pytest.raises(SplineError):
        cc_equilibrium_check(ccg, pure)


def test_build_spline_input_validation():
    with pytest.raises(SplineError):
        build_spline(np.array([0.5, 0.5]), np.array([1.0, 0.0]), 0.1)  # tie/mismatch
    with pytest.raises(SplineError):
        build_spline(np.array([0.7, 0.3]), np.array([0.0, 1.0]), 0.1)  # wrong order
    with pytest.raises(SplineError):
        build_spline(np.array([0.3, 0.7]), np.array([0.0, 1.0]), 0.1, y0=0.4)
    with pytest.raises(SplineError):
        build_spline(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 0.1)  # boundary
    with pytest.raises(SplineError):
        build_spline(np.array([0.3, 0.7]), np.array([0.0, 1.0]), -0.5)


def test_induced_qrf_equal_utilities_uniform():
    sp = build_spline(np.array([0.25, 0.75]), np.array([0.0, 1.0]), 0.1)
    out = induced_qrf(sp, np.array([2.0, 2.0, 2.0]))
    assert np.allclose(out, 1 / 3, atol=1e-9)


def test_induced_qrf_round_trip(gamma1):
    prof = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.7, "a2": 0.3}, "P2": {"b1": 0.6, "b2": 0.4}}
    )
    for i in range(2):
        eu = expected_utility(gamma1, prof, i)
        sp = build_spline(prof.vectors[i], eu, 0.1)
        out = induced_qrf(sp, eu)
        assert np.max(np.abs(out - prof.vectors[i])) < 1e-9


def test_induced_qrf_matches_grid_maximization():
    rng = np.random.default_rng(8)
    for _ in range(5):
        g = random_game(rng, (2, 3))
        prof = random_monotone_profile(g, rng)
        if prof is None:
            continue
        sp = build_spline(prof.vectors[0], expected_utility(g, prof, 0), 0.3)
        x = rng.uniform(-2, 2, size=2)
        best = induced_qrf(sp, x)

        def objective(p0):
            p = np.array([p0, 1 - p0])
            return x @ p - sp.value(p).sum()

        grid = np.linspace(1e-9, 1 - 1e-9, 200_001)
        vals = [objective(p0) for p0 in grid]
        p_star = grid[int(np.argmax(vals))]
        assert abs(best[0] - p_star) < 1e-4
        assert objective(best[0]) >= max(vals) - 1e-9


def test_spline_qrf_regular():
    sp = build_spline(np.array([0.2, 0.35, 0.45]), np.array([0.0, 0.5, 1.3]), 0.15)
    rep = qrf_regularity_audit(SplineQRF(sp), 3, sample_count=80, seed=5)
    assert rep.passed


def test_serialization_round_trip():
    sp = build_spline(np.array([0.3, 0.7]), np.array([0.0, 0.7]), 0.1,
                      y0=0.1, ystar=0.5)
    doc = sp.to_dict()
    text = json.dumps(doc, sort_keys=True)
    sp2 = ControlCostSpline.from_dict(json.loads(text))
    assert json.dumps(sp2.to_dict(), sort_keys=True) == text
    ys = np.linspace(0.01, 1.0, 57)
    assert np.array_equal(sp.value(ys), sp2.value(ys))


def test_ystar_calibration_guarantee():
    sp = build_spline(np.array([0.3, 0.7]), np.array([0.0, 0.7]), 0.1,
                      y0=0.05, ystar=0.15)
    assert sp.ystar == 0.15
    # value at the calibration point undercuts the next level up by < eps
    assert sp.value(0.15) < sp.value(0.3) + 0.1
    assert np.all(np.diff(sp.slopes) > 0)


def test_ystar_collision_rejected():
    with pytest.raises(CalibrationError):
        build_spline(np.array([0.3, 0.7]), np.array([0.0, 0.7]), 0.1, ystar=0.3)


def test_ystar_slope_validation():
    with pytest.raises(CalibrationError):
        build_spline(np.array([0.3, 0.7]), np.array([0.0, 0.7]), 0.1,
                     y0=0.05, ystar=0.15, ystar_slope=5.0)
    sp = build_spline(np.array([0.3, 0.7]), np.array([0.0, 0.7]), 0.1,
                      y0=0.05, ystar=0.15, ystar_slope=5.0,
                      clamp_ystar_slope=True)
    assert np.all(np.diff(sp.slopes) > 0)


def test_random_round_trip_property():
    rng = np.random.default_rng(13)
    done = 0
    while done < 60:
        g = random_game(rng)
        prof = random_monotone_profile(g, rng)
        if prof is None:
            continue
        ccg = ControlCostGame(g, _profile_splines(g, prof, eps=float(rng.uniform(0.01, 1.0))))
        ok, defect, _ = cc_equilibrium_check(ccg, prof)
        assert ok, f"defect {defect}"
        done += 1


def test_vanishing_sequence_gamma1(gamma1):
    profs = [
        qre_fixed_point(gamma1, logistic_profile(gamma1, lam)).profile
        for lam in (1, 10, 100, 1000)
    ]
    vs = vanishing_sequence(gamma1, profs)
    assert len(vs.entries) >= 3
    sups = [e.sup_norms.max() for e in vs.entries]
    assert all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(sups, sups[1:]))
    for e in vs.entries:
        assert e.foc_defect < 1e-9
    assert nash_defect(gamma1, profs[-1]) < 1e-6


def test_vanishing_sequence_gamma2c_to_a2b2(gamma2c22):
    seq = []
    for t in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7):
        v = np.array([1.5 * t, 1 - 2.5 * t, t])
        prof = MixedProfile(gamma2c22, [v, v])
        assert is_payoff_monotone(gamma2c22, prof).satisfied
        seq.append(prof)
    vs = vanishing_sequence(gamma2c22, seq)
    assert len(vs.entries) >= 4
    # the certified limit is the middle equilibrium
    assert vs.limit.vectors[0][1] == pytest.approx(1.0, abs=1e-9)
    sups = [e.sup_norms.max() for e in vs.entries]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(sups, sups[1:]))
    assert sups[-1] < 0.1


def test_vanishing_rejects_boundary_profiles(gamma1):
    pure = MixedProfile.pure(gamma1, {"P1": "a1", "P2": "b1"})
    with pytest.raises(ValueError, match="interior"):
        vanishing_sequence(gamma1, [pure])


def test_vanishing_rejects_non_nash_terminal(gamma1):
    prof = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.75, "a2": 0.25}, "P2": {"b1": 0.75, "b2": 0.25}}
    )
    with pytest.raises(ValueError, match="defect"):
        vanishing_sequence(gamma1, [prof])


def test_vanishing_rejects_non_monotone(gamma1):
    bad = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.25, "a2": 0.75}, "P2": {"b1": 0.9, "b2": 0.1}}
    )
    with pytest.raises(ValueError, match="monotone"):
        vanishing_sequence(gamma1, [bad])


def test_vanishing_case3_flat_game():
    from empeq.game import Game

    g = Game(["P1", "P2"], {"P1": ["x", "y"], "P2": ["u", "v"]},
             np.full((2, 2, 2), 1.0))
    profs = [MixedProfile.uniform(g) for _ in range(4)]
    vs = vanishing_sequence(g, profs)
    assert vs.entries
    assert all(case == 3 for e in vs.entries for case in e.cases)

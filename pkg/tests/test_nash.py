import numpy as np
import pytest

from empeq import corpus
from empeq.game import Game, MixedProfile, nash_defect
from empeq.nash import (
    UnsupportedGameError,
    check_perfect,
    check_proper,
    enumerate_nash,
    filter_undominated,
    is_epsilon_perfect,
    is_epsilon_proper,
    nearest_nash,
    undominated_flag,
)

from conftest import random_game


def _pure_set(game, eqset):
    out = set()
    for p in eqset.isolated:
        labels = []
        for i, pl in enumerate(game.players):
            j = int(np.argmax(p.vectors[i]))
            if p.vectors[i][j] < 1 - 1e-9:
                return None
            labels.append(game.actions[pl][j])
        out.add(tuple(labels))
    return out


def test_gamma1_exactly_two_equilibria(gamma1):
    eq = enumerate_nash(gamma1)
    assert not eq.components
    assert _pure_set(gamma1, eq) == {("a1", "b1"), ("a2", "b2")}


def test_gamma2c_three_pure():
    for c in ((2, 2), (0.5, 0.5), (10, 10), (1, 1)):
        g = corpus.gamma2c(*c)
        eq = enumerate_nash(g)
        assert not eq.components
        assert _pure_set(g, eq) == {("a1", "b1"), ("a2", "b2"), ("a3", "b3")}


def test_psi_single_component(psi):
    eq = enumerate_nash(psi)
    assert not eq.isolated
    assert len(eq.components) == 1
    comp = eq.components[0]
    lo, hi = comp.interval
    ends = sorted(
        (comp.profile_at(psi, lo).vectors[0][0],
         comp.profile_at(psi, hi).vectors[0][0])
    )
    assert ends == pytest.approx([0.0, 1.0], abs=1e-9)
    for t, prof in comp.grid(psi, 11):
        assert prof.vectors[1][0] == pytest.approx(1.0, abs=1e-12)
        assert nash_defect(psi, prof) <= 1e-9


def test_phi_equilibrium_set(phi):
    eq = enumerate_nash(phi)
    assert _pure_set(phi, eq) == {("10", "10"), ("20", "20")}
    assert len(eq.components) == 1
    comp = eq.components[0]
    lo, hi = comp.interval
    p15 = sorted(
        (comp.profile_at(phi, lo).vectors[0][1],
         comp.profile_at(phi, hi).vectors[0][1])
    )
    assert p15 == pytest.approx([1 / 3, 1.0], abs=1e-9)
    for _, prof in comp.grid(phi, 21):
        assert prof.vectors[1][1] == pytest.approx(1.0, abs=1e-12)
        assert nash_defect(phi, prof) <= 1e-9


def test_matching_pennies_mixed():
    g = Game(
        ["P1", "P2"],
        {"P1": ["H", "T"], "P2": ["H", "T"]},
        np.array([[[1, -1], [-1, 1]], [[-1, 1], [1, -1]]], dtype=float),
    )
    eq = enumerate_nash(g)
    assert not eq.components
    assert len(eq.isolated) == 1
    assert np.allclose(eq.isolated[0].stacked(), 0.5, atol=1e-12)


def test_battle_three_equilibria():
    g = Game(
        ["P1", "P2"],
        {"P1": ["A", "B"], "P2": ["A", "B"]},
        np.array([[[2, 1], [0, 0]], [[0, 0], [1, 2]]], dtype=float),
    )
    eq = enumerate_nash(g)
    assert len(eq.isolated) == 3
    mixed = [p for p in eq.isolated if 0.01 < p.vectors[0][0] < 0.99]
    assert len(mixed) == 1
    assert mixed[0].vectors[0][0] == pytest.approx(2 / 3)
    assert mixed[0].vectors[1][0] == pytest.approx(1 / 3)


def test_one_by_one_game():
    g = Game(["P1"], {"P1": ["only"]}, np.array([[5.0]]))
    eq = enumerate_nash(g)
    assert len(eq.isolated) == 1
    assert eq.isolated[0].vectors[0][0] == 1.0


def test_enumeration_limit():
    rng = np.random.default_rng(0)
    g = random_game(rng, (70, 70))
    with pytest.raises(UnsupportedGameError):
        enumerate_nash(g)


def test_three_player_unsupported():
    rng = np.random.default_rng(0)
    g = random_game(rng, (2, 2, 2))
    with pytest.raises(UnsupportedGameError):
        enumerate_nash(g)


def test_affine_invariance():
    rng = np.random.default_rng(5)
    for _ in range(10):
        g = random_game(rng, (3, 3))
        scale = float(rng.uniform(0.5, 3.0))
        shift = float(rng.uniform(-5, 5))
        payoffs = g.payoffs.copy()
        payoffs[..., 0] = scale * payoffs[..., 0] + shift
        g2 = Game(g.players, g.actions, payoffs)
        eq1 = enumerate_nash(g)
        eq2 = enumerate_nash(g2)
        assert len(eq1.isolated) == len(eq2.isolated)
        assert len(eq1.components) == len(eq2.components)
        for p, q in zip(eq1.isolated, eq2.isolated):
            assert p.distance(q) <= 1e-7


def test_enumerated_profiles_are_nash():
    rng = np.random.default_rng(9)
    for _ in range(25):
        g = random_game(rng)
        eq = enumerate_nash(g)
        assert eq.isolated or eq.components, "every finite game has an equilibrium"
        for p in eq.isolated:
            assert nash_defect(g, p) <= 1e-8
        for comp in eq.components:
            for _, prof in comp.grid(g, 7):
                assert nash_defect(g, prof) <= 1e-7


# -- refinements ---------------------------------------------------------


def test_undominated_gamma2c(gamma2c22):
    eq = enumerate_nash(gamma2c22)
    rep = filter_undominated(gamma2c22, eq)
    flagged = {
        _label(gamma2c22, p): f for p, f in zip(eq.isolated, rep.isolated_flags)
    }
    assert flagged == {
        ("a1", "b1"): True,
        ("a2", "b2"): True,
        ("a3", "b3"): False,
    }


def test_undominated_phi_unique(phi):
    eq = enumerate_nash(phi)
    rep = filter_undominated(phi, eq)
    flagged = [
        _label(phi, p) for p, f in zip(eq.isolated, rep.isolated_flags) if f
    ]
    assert flagged == [("10", "10")]
    # every point of the component plays the dominated bid 15
    assert rep.component_regions == [[]]


def test_undominated_no_dominance_all_pass():
    g = Game(
        ["P1", "P2"],
        {"P1": ["H", "T"], "P2": ["H", "T"]},
        np.array([[[1, -1], [-1, 1]], [[-1, 1], [1, -1]]], dtype=float),
    )
    eq = enumerate_nash(g)
    rep = filter_undominated(g, eq)
    assert all(rep.isolated_flags)


def _label(game, profile):
    return tuple(
        game.actions[pl][int(np.argmax(profile.vectors[i]))]
        for i, pl in enumerate(game.players)
    )


def _by_label(game, eqset):
    return {_label(game, p): p for p in eqset.isolated}


def test_perfect_gamma2c(gamma2c22):
    eqs = _by_label(gamma2c22, enumerate_nash(gamma2c22))
    v11 = check_perfect(gamma2c22, eqs[("a1", "b1")])
    v22 = check_perfect(gamma2c22, eqs[("a2", "b2")])
    v33 = check_perfect(gamma2c22, eqs[("a3", "b3")])
    assert v11.status == "verified"
    assert v22.status == "verified"
    assert v33.status == "refuted"
    assert v33.certificate["kind"] == "dominated-on-support"
    for eps, witness in v22.witnesses:
        assert is_epsilon_perfect(gamma2c22, witness, eps)
        assert witness.distance(eqs[("a2", "b2")]) <= 10 * eps


def test_perfect_strict_equilibrium_fast_path(gamma1):
    eqs = _by_label(gamma1, enumerate_nash(gamma1))
    v = check_perfect(gamma1, eqs[("a1", "b1")])
    assert v.status == "verified"
    assert len(v.witnesses) == 4


def test_proper_gamma2c():
    for c in ((0.5, 0.5), (2, 2)):
        g = corpus.gamma2c(*c)
        eqs = _by_label(g, enumerate_nash(g))
        assert check_proper(g, eqs[("a1", "b1")]).status == "verified"
        v22 = check_proper(g, eqs[("a2", "b2")])
        assert v22.status == "refuted"
        assert v22.certificate["kind"] == "order-exhaustion"


def test_proper_gamma1(gamma1):
    eqs = _by_label(gamma1, enumerate_nash(gamma1))
    v = check_proper(gamma1, eqs[("a1", "b1")])
    assert v.status == "verified"
    for eps, witness in v.witnesses:
        assert is_epsilon_proper(gamma1, witness, eps)


def test_proper_witness_matches_proposition_shape(gamma2c22):
    # the verified sequence for the top equilibrium keeps utility-ranked
    # probability ratios within eps
    eqs = _by_label(gamma2c22, enumerate_nash(gamma2c22))
    v = check_proper(gamma2c22, eqs[("a1", "b1")])
    for eps, w in v.witnesses:
        x = w.vectors[0]
        assert x[1] <= eps * x[0] * (1 + 1e-9)
        assert x[2] <= eps * x[1] * (1 + 1e-9)


def test_proper_implies_perfect_on_corpus():
    for g in (corpus.gamma1(), corpus.gamma2c(2, 2), corpus.phi()):
        eq = enumerate_nash(g)
        for p in eq.isolated:
            prop = check_proper(g, p)
            if prop.status == "verified":
                assert check_perfect(g, p).status == "verified"
                assert undominated_flag(g, p)


def test_refinement_rejects_non_nash(gamma1):
    p = MixedProfile.uniform(gamma1)
    with pytest.raises(ValueError):
        check_perfect(gamma1, p)
    with pytest.raises(ValueError):
        check_proper(gamma1, p)


def test_nearest_nash(gamma1):
    p = MixedProfile.from_dict(
        gamma1, {"P1": {"a1": 0.9, "a2": 0.1}, "P2": {"b1": 0.95, "b2": 0.05}}
    )
    d, q = nearest_nash(gamma1, p)
    assert q.vectors[0][0] == pytest.approx(1.0)
    assert d == pytest.approx(0.1)


def test_nearest_nash_component_projection(psi):
    p = MixedProfile.from_dict(
        psi, {"P1": {"a1": 0.6, "a2": 0.4}, "P2": {"b1": 0.98, "b2": 0.02}}
    )
    d, q = nearest_nash(psi, p)
    assert d == pytest.approx(0.02, abs=1e-6)
    # the max-norm minimizer is any t with |t - 0.6| <= 0.02
    assert abs(q.vectors[0][0] - 0.6) <= 0.02 + 1e-9

import numpy as np
import pytest

from simbound import bounds as b
from simbound.hierarchy import (OptionModel, PhiOption, StateAbstraction, abstract_value,
                                augment_absorbing, hierarchy_gap_check, multi_time_model,
                                option_misspec)
from simbound.mdp import Mdp, Policy, random_mdp, random_policy
from simbound.verify import random_option_pair


def unrolled(base, home, pi, gamma, steps=200):
    """Step-by-step simulation of the option until it leaves ``home``; truncated at ``steps``."""
    n = base.n_states
    inside = np.zeros(n, dtype=bool)
    inside[list(home)] = True
    p_pi = np.einsum("sat,sa->st", base.transitions, pi)
    r_pi = np.einsum("sa,sa->s", base.rewards, pi)
    rows_r, rows_p = [], []
    for s in home:
        d = np.zeros(n)
        d[s] = 1.0
        r, p = 0.0, np.zeros(n)
        for t in range(steps):
            r += gamma ** t * d[inside] @ r_pi[inside]
            nxt = d @ p_pi
            p[~inside] += gamma ** (t + 1) * nxt[~inside]
            d = np.where(inside, nxt, 0.0)
        rows_r.append(r)
        rows_p.append(p)
    return np.array(rows_r), np.array(rows_p)


def random_instance(rng):
    n_s = int(rng.integers(2, 7))
    n_a = int(rng.integers(1, 4))
    g = float(rng.choice([0.5, 0.9]))
    m = random_mdp(rng, n_s, n_a, g, concentration=float(rng.choice([0.2, 1.0])))
    mapping = rng.permutation(np.concatenate([[0, 1], rng.integers(0, 2, size=n_s - 2)]))
    return m, StateAbstraction(tuple(int(x) for x in mapping))


def test_single_step_option():
    # home block of one state with no self loop: the model is the one-step MDP row
    t = np.array([[[0.0, 0.3, 0.7]], [[0, 1, 0]], [[0, 0, 1]]], dtype=float)
    m = Mdp(t, np.array([[0.4], [0.0], [0.0]]), 0.9)
    om = multi_time_model(m, StateAbstraction((0, 1, 1)), PhiOption(0, Policy(np.ones((3, 1)))))
    assert om.r == pytest.approx([0.4])
    assert om.p == pytest.approx(np.array([[0.0, 0.27, 0.63]]))


def test_never_exiting_option():
    t = np.array([[[0.5, 0.5, 0.0]], [[0.2, 0.8, 0.0]], [[0, 0, 1]]], dtype=float)
    m = Mdp(t, np.array([[1.0], [0.5], [0.0]]), 0.8)
    om = multi_time_model(m, StateAbstraction((0, 0, 1)), PhiOption(0, Policy(np.ones((3, 1)))))
    assert np.all(om.p == 0.0)
    # value of the closed chain
    inner = np.array([[0.5, 0.5], [0.2, 0.8]])
    assert om.r == pytest.approx(np.linalg.solve(np.eye(2) - 0.8 * inner, [1.0, 0.5]))
    assert augment_absorbing(om).p[:, -1] == pytest.approx([0.8, 0.8])


def test_against_unrolled_oracle(rng):
    for _ in range(100):
        m, phi = random_instance(rng)
        pi = random_policy(rng, m.n_states, m.n_actions)
        tol = m.discount ** 201 / (1 - m.discount)
        for home in range(phi.n_abstract):
            om = multi_time_model(m, phi, PhiOption(home, pi))
            r, p = unrolled(m, phi.block(home), pi.probs, m.discount)
            assert np.abs(om.r - r).max() <= tol + 1e-12
            assert np.abs(om.p - p).max() <= tol + 1e-12


def test_augmented_rows(rng):
    for _ in range(50):
        m, phi = random_instance(rng)
        pi = random_policy(rng, m.n_states, m.n_actions)
        for home in range(phi.n_abstract):
            aug = augment_absorbing(multi_time_model(m, phi, PhiOption(home, pi)))
            assert np.abs(aug.p.sum(axis=1) - m.discount).max() <= 1e-12
            assert aug.augmented and aug.n_ground == m.n_states


def test_augment_rejects_excess_mass():
    om = OptionModel(0, (0,), [1.0], [[0.0, 0.95]], 0.9)
    with pytest.raises(ValueError):
        augment_absorbing(om)


def test_augmentation_does_not_change_values(rng):
    for _ in range(20):
        o_star, _, pol = random_option_pair(rng, 6, 3)
        v = abstract_value(o_star, pol)
        v_aug = abstract_value([augment_absorbing(o) for o in o_star], pol)
        assert v_aug == pytest.approx(v, abs=1e-12)


def test_abstract_value_matches_ground_value():
    # identity abstraction with single-step options is ordinary policy evaluation
    rng = np.random.default_rng(7)
    m = random_mdp(rng, 4, 2, 0.9)
    pi = random_policy(rng, 4, 2)
    phi = StateAbstraction.identity(4)
    models = [multi_time_model(m, phi, PhiOption(s, pi)) for s in range(4)]
    from simbound.mdp import exact_value
    assert abstract_value(models, range(4)) == pytest.approx(exact_value(m, pi), abs=1e-10)


def test_option_misspec_excludes_absorbing_column():
    a = OptionModel(0, (0,), [1.0], [[0.0, 0.5]], 0.9)
    c = OptionModel(0, (0,), [0.7], [[0.0, 0.2]], 0.9)
    assert option_misspec([a], [c]) == pytest.approx((0.3, 0.3))
    assert option_misspec([augment_absorbing(a)], [augment_absorbing(c)]) == pytest.approx((0.3, 0.3))


def test_mismatch_errors():
    a = OptionModel(0, (0,), [1.0], [[0.0, 0.5]], 0.9)
    other = OptionModel(1, (1,), [1.0], [[0.5, 0.0]], 0.9)
    with pytest.raises(ValueError):
        option_misspec([a], [other])
    with pytest.raises(ValueError):
        option_misspec([a], [a, a])
    with pytest.raises(ValueError):
        abstract_value([a], [0])  # ground state 1 is not covered
    with pytest.raises(ValueError):
        StateAbstraction((0, 2))


def test_explicit_pairing():
    a0 = OptionModel(0, (0,), [1.0], [[0.0, 0.5]], 0.9)
    a1 = OptionModel(1, (1,), [0.5], [[0.4, 0.0]], 0.9)
    c0 = OptionModel(0, (0,), [0.9], [[0.0, 0.5]], 0.9)
    c1 = OptionModel(1, (1,), [0.5], [[0.3, 0.0]], 0.9)
    chk = hierarchy_gap_check([a0, a1], [c1, c0], [0, 1], pairing=[(0, 1), (1, 0)])
    assert (chk.eps_t, chk.eps_r) == pytest.approx((0.1, 0.1))


def test_random_soundness(rng):
    for _ in range(300):
        o_star, o_hat, pol = random_option_pair(rng, 6, 3)
        chk = hierarchy_gap_check(o_star, o_hat, pol)
        rep = chk.report
        assert rep.measured_gap <= rep.tight + 1e-9
        assert rep.tight <= rep.original + 1e-9

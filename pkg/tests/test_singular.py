from __future__ import annotations

import numpy as np
import pytest

from tumorfront.errors import BeyondFold, SubspaceInvalid
from tumorfront.model import ModelParams, compute_v_pm, reaction_jet
from tumorfront.singular import (
    build_singular_front,
    classify_regime,
    hamiltonian_minus,
    hamiltonian_plus,
    layer_branches,
    layer_front,
    layer_speed,
    singular_gap_width,
    slow_orbits,
    solve_w_star,
)

from oracles import bisect, layer_speed_by_shooting, w_star_by_quadrature

# Frozen by the quadrature/bisection and shooting oracles in oracles.py.
W_STAR = {
    "set1": 0.45817969559812,
    "set2": 0.44836644050536,
    "set3": 0.43795004714812,
    "set4": 0.39145681931136,
}
C_STAR = {
    "set1": 0.472777040319,
    "set2": 0.225074816301,
    "set3": 0.052632122738,
    "set4": 0.347977368904,
}


def test_layer_branches_against_bisection(reference_sets):
    for params in reference_sets.values():
        for w in (0.0, 0.2, 0.45):
            vm, vp = layer_branches(params, w)
            g = lambda v: params.rho * (1 - v) * (v - params.a) - params.delta2 * w
            assert g(vm) == pytest.approx(0.0, abs=1e-12)
            assert g(vp) == pytest.approx(0.0, abs=1e-12)
            assert vm < vp
        # at w = 0 the branches reduce to the Allee threshold and saturation
        vm0, vp0 = layer_branches(params, 0.0)
        assert vm0 == pytest.approx(params.a, abs=1e-14)
        assert vp0 == pytest.approx(1.0, abs=1e-14)


def test_layer_branches_beyond_fold():
    params = ModelParams(a=0.25, kappa=0.05, delta1=11.5, delta2=3.0, delta3=1.0,
                         rho=15.0, epsilon=0.05)
    w_fold = params.rho * (1 - params.a) ** 2 / (4 * params.delta2)
    layer_branches(params, w_fold * 0.999)
    with pytest.raises(BeyondFold):
        layer_branches(params, w_fold * 1.001)


def test_layer_front_satisfies_layer_ode(reference_sets):
    # The tanh interface must solve D v'' - c v' + rho v(1-v)(v-a) - delta2 v w = 0
    # to near machine precision; this pins both the profile and the speed formula.
    cases = [
        (reference_sets["set1"], W_STAR["set1"], "empty"),
        (reference_sets["set4"], W_STAR["set4"], "empty"),
        (reference_sets["set2"], 0.05, "healthy"),
        (reference_sets["set4"], 0.02, "healthy"),
    ]
    for params, w, subspace in cases:
        lf = layer_front(params, w, subspace)
        xi = np.linspace(-40.0 / lf.steepness, 40.0 / lf.steepness, 4001)
        v, vx, vxx = lf.v(xi), lf.v_xi(xi), lf.v_xixi(xi)
        kinetics = params.rho * v * (1 - v) * (v - params.a) - params.delta2 * v * w
        residual = lf.diffusivity * vxx - lf.speed * vx + kinetics
        assert np.max(np.abs(residual)) < 1e-10, (subspace, w)


def test_layer_front_derivatives_consistent(reference_sets):
    lf = layer_front(reference_sets["set1"], 0.3, "empty")
    xi = np.linspace(-5, 5, 101)
    h = 1e-6
    fd1 = (lf.v(xi + h) - lf.v(xi - h)) / (2 * h)
    fd2 = (lf.v(xi + h) - 2 * lf.v(xi) + lf.v(xi - h)) / h**2
    assert np.max(np.abs(fd1 - lf.v_xi(xi))) < 1e-8
    assert np.max(np.abs(fd2 - lf.v_xixi(xi))) < 1e-3


def test_layer_speed_against_shooting(reference_sets):
    for name, subspace in [("set1", "empty"), ("set4", "empty")]:
        params = reference_sets[name]
        d = 1.0 + params.kappa
        c_shoot = layer_speed_by_shooting(params, W_STAR[name], d)
        assert layer_speed(params, W_STAR[name], subspace) == pytest.approx(
            c_shoot, rel=1e-9)
    # healthy subspace: tissue slows the interface via the lower diffusivity
    params = reference_sets["set2"]
    w = 0.05
    d = params.kappa + params.delta1 * w
    c_shoot = layer_speed_by_shooting(params, w, d)
    assert layer_speed(params, w, "healthy") == pytest.approx(c_shoot, rel=1e-9)


def test_layer_front_invalid_subspace(reference_sets):
    params = reference_sets["set1"]
    with pytest.raises(SubspaceInvalid):
        layer_front(params, 0.2, "healthy")  # delta1 w = 2.5 >= 1
    with pytest.raises(ValueError):
        layer_front(params, 0.2, "vacuum")


def test_w_star_frozen_and_against_quadrature(reference_sets):
    for name, params in reference_sets.items():
        ws = solve_w_star(params)
        assert ws == pytest.approx(W_STAR[name], abs=1e-12)
        assert ws == pytest.approx(w_star_by_quadrature(params), abs=1e-10)


def test_w_star_random_draws_against_quadrature():
    rng = np.random.default_rng(11)
    done = 0
    while done < 10:
        a = rng.uniform(0.05, 0.5)
        rho = rng.uniform(0.3, 20.0)
        delta2 = rng.uniform(0.0, 0.25 * rho * (1 - np.sqrt(a)) ** 2)  # keep V+ real
        params = ModelParams(a=a, kappa=0.1, delta1=delta2 + 5.0, delta2=delta2,
                             delta3=rng.uniform(1.0, 80.0), rho=rho,
                             epsilon=0.01)
        try:
            compute_v_pm(params)
        except Exception:
            continue
        assert solve_w_star(params) == pytest.approx(
            w_star_by_quadrature(params), abs=1e-10)
        done += 1


def test_w_star_no_acid_inhibition_is_exactly_half():
    for rho in (0.5, 1.0, 15.0):
        for a in (0.1, 0.35):
            params = ModelParams(a=a, kappa=0.1, delta1=3.0, delta2=0.0,
                                 delta3=10.0, rho=rho, epsilon=0.01)
            assert solve_w_star(params) == 0.5


def test_w_star_independent_of_delta1(reference_sets):
    base = reference_sets["set1"]
    for d1 in (0.5, 2.0, 12.5, 40.0):
        params = ModelParams(a=base.a, kappa=base.kappa, delta1=d1,
                             delta2=base.delta2, delta3=base.delta3,
                             rho=base.rho, epsilon=base.epsilon)
        assert solve_w_star(params) == pytest.approx(W_STAR["set1"], abs=1e-13)


def test_hamiltonian_matching_identities(reference_sets):
    # The matched level w* is characterized by the behind-the-front energy
    # vanishing at (w*, sqrt(delta3) w*), the ahead-orbit momentum there.
    for params in reference_sets.values():
        _, vp = compute_v_pm(params)
        ws = solve_w_star(params)
        p_match = np.sqrt(params.delta3) * ws
        assert float(hamiltonian_plus(params, vp, 0.0, vp)) == pytest.approx(0.0, abs=1e-14)
        assert float(hamiltonian_plus(params, ws, p_match, vp)) == pytest.approx(
            0.0, abs=1e-10 * params.delta3)
        assert float(hamiltonian_minus(params, ws, p_match)) == pytest.approx(0.0, abs=1e-12)


def test_slow_orbits_solve_reduced_equation(reference_sets):
    # Along both orbits dw/dzeta = p and dp/dzeta = delta3 (w - v_rest(w)).
    for name in ("set1", "set4"):
        params = reference_sets[name]
        orb = slow_orbits(params)
        # ahead: v_rest = 0, explicit exponential
        sd3 = np.sqrt(params.delta3)
        assert np.allclose(orb.w_minus, orb.w_star * np.exp(sd3 * orb.zeta_minus),
                           rtol=1e-13, atol=0)
        assert np.allclose(orb.p_minus, sd3 * orb.w_minus, rtol=1e-13, atol=0)
        # behind: finite-difference the sampled orbit against the reduced flow
        z, w, p = orb.zeta_plus, orb.w_plus, orb.p_plus
        dw = np.gradient(w, z)
        dp = np.gradient(p, z)
        v_rest = np.array([layer_branches(params, wi)[1] for wi in w])
        rhs = params.delta3 * (w - v_rest)
        sl = slice(2, len(z) - len(z) // 4)  # interior, away from saddle crawl
        assert np.max(np.abs(dw[sl] - p[sl]) / np.max(p)) < 2e-3
        assert np.max(np.abs(dp[sl] - rhs[sl]) / np.max(np.abs(rhs))) < 2e-3


def test_slow_orbit_integrals(reference_sets):
    for name in ("set1", "set2", "set4"):
        params = reference_sets[name]
        orb = slow_orbits(params)
        # closed form ahead of the front
        assert orb.I_minus == pytest.approx(
            0.5 * np.sqrt(params.delta3) * orb.w_star**2, rel=1e-13)
        # independent route: integrate p^2 over zeta and add the saddle tail
        z, p = orb.zeta_plus, orb.p_plus
        tail_gap = orb.v_plus_eq - orb.w_plus[-1]
        tail = 0.5 * orb.saddle_rate * tail_gap**2
        i_plus_zeta = np.trapezoid(p * p, z) + tail
        assert orb.I_plus == pytest.approx(i_plus_zeta, rel=1e-4)
        assert orb.I_plus > 0 and orb.I_minus > 0
        assert orb.saddle_rate > 0
        assert np.all(np.diff(orb.w_plus) > 0)
        assert np.all(np.diff(orb.zeta_plus) > 0)


def test_classify_regime_reference_sets(reference_sets):
    for name, params in reference_sets.items():
        reg = classify_regime(params)
        assert reg.kind == "MalignantGap"
        assert reg.delta1_w_star == pytest.approx(params.delta1 * W_STAR[name], rel=1e-12)


def test_classify_regime_other_kinds(reference_sets):
    base = reference_sets["set1"]
    mk = lambda d1: ModelParams(a=base.a, kappa=base.kappa, delta1=d1,
                                delta2=base.delta2, delta3=base.delta3,
                                rho=base.rho, epsilon=base.epsilon)
    assert classify_regime(mk(0.6)).kind == "Benign"
    assert classify_regime(mk(1.5)).kind == "MalignantNoGap"
    assert classify_regime(mk(1.0 / W_STAR["set1"])).kind == "Crossover"


def test_singular_gap_width(reference_sets):
    params = reference_sets["set1"]
    gap = singular_gap_width(params)
    expected_zeta = np.log(params.delta1 * W_STAR["set1"]) / np.sqrt(params.delta3)
    assert gap.zeta == pytest.approx(expected_zeta, rel=1e-12)
    assert gap.xi == pytest.approx(expected_zeta / params.epsilon, rel=1e-12)
    # the acid level on the ahead orbit at -gap.zeta is exactly 1/delta1
    w_at_edge = W_STAR["set1"] * np.exp(np.sqrt(params.delta3) * (-gap.zeta))
    assert params.delta1 * w_at_edge == pytest.approx(1.0, rel=1e-12)
    # no gap -> zero width
    benign = ModelParams(a=0.1, kappa=0.1, delta1=0.6, delta2=0.1, delta3=70.0,
                         rho=1.0, epsilon=0.0063)
    assert singular_gap_width(benign) == singular_gap_width(benign).__class__(0.0, 0.0)


def test_build_singular_front_frozen_speeds(reference_sets):
    for name, params in reference_sets.items():
        front = build_singular_front(params)
        assert front.c_star == pytest.approx(C_STAR[name], abs=2e-11)
        assert front.u_star == 0.0  # all four reference sets have a gap
        assert front.w_star == pytest.approx(W_STAR[name], abs=1e-12)
        vm, vp = layer_branches(params, front.w_star)
        assert front.v_plus_star == pytest.approx(vp, rel=1e-14)


def test_build_singular_front_healthy_speed():
    # benign front: interface propagates through living tissue
    params = ModelParams(a=0.1, kappa=0.1, delta1=0.6, delta2=0.1, delta3=70.0,
                         rho=1.0, epsilon=0.0063)
    front = build_singular_front(params)
    assert front.regime.kind == "Benign"
    assert front.u_star == pytest.approx(1.0 - 0.6 * front.w_star, rel=1e-12)
    d = params.kappa + params.delta1 * front.w_star
    c_shoot = layer_speed_by_shooting(params, front.w_star, d)
    assert front.c_star == pytest.approx(c_shoot, rel=1e-9)


def test_singular_sample_structure(reference_sets):
    params = reference_sets["set1"]
    front = build_singular_front(params)
    xi = np.linspace(-12.0 / np.sqrt(params.delta3) / params.epsilon,
                     12.0 / np.sqrt(params.delta3) / params.epsilon, 6001)
    u, v, w = front.sample(xi)
    assert np.all(np.isfinite(u)) and np.all(np.isfinite(v)) and np.all(np.isfinite(w))
    # far-field states: healthy tissue on the left, tumor equilibrium on the right
    assert abs(u[0] - 1.0) < 1e-3 and abs(v[0]) < 1e-6 and abs(w[0]) < 1e-3
    assert abs(u[-1]) < 1e-12
    assert abs(v[-1] - front.orbits.v_plus_eq) < 1e-3
    assert abs(w[-1] - front.orbits.v_plus_eq) < 1e-3
    # tissue is slaved to the acid level
    assert np.allclose(u, np.maximum(1.0 - params.delta1 * w, 0.0), atol=1e-14)
    # acid monotonically increases, tumor stays within its equilibrium range
    assert np.all(np.diff(w) > -1e-12)
    assert np.all(v > -1e-12) and np.all(v < 1.0 + 1e-12)
    # the dead gap: a stretch where both u and v are essentially zero
    gap_nodes = (u < 1e-3) & (v < 1e-3)
    assert gap_nodes.sum() > 10

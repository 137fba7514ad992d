"""Property-based checks over randomized structures."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from mklab import (
    CostMatrix,
    Marginal,
    PotentialPair,
    birkhoff_level,
    birkhoff_levels,
    make_instance,
    mixture_plan,
    plan_dominates,
    potential_plan_integral,
    skew_step,
    step_signs,
    transport_cost,
    verify_exact_coupling,
)
from mklab.fileformats import dumps_canonical, instance_to_jsonable, parse_instance, InstanceSpec
from mklab.rotation import OrbitState

from conftest import nw_corner, shuffled_coupling


def marginals(draw, size):
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=size, max_size=size))
    arr = np.asarray(w)
    return Marginal(arr / arr.sum())


@st.composite
def coupled_pair(draw):
    size = draw(st.integers(2, 7))
    mu = marginals(draw, size)
    nu = marginals(draw, size)
    seed = draw(st.integers(0, 2 ** 31))
    rng = np.random.default_rng(seed)
    return mu, nu, rng


@settings(max_examples=60, deadline=None)
@given(coupled_pair())
def test_integral_is_plan_independent(data):
    mu, nu, rng = data
    p1 = nw_corner(mu, nu)
    p2 = shuffled_coupling(rng, mu, nu)
    pp = PotentialPair(rng.normal(size=mu.size), rng.normal(size=nu.size))
    assert abs(potential_plan_integral(pp, p1)
               - potential_plan_integral(pp, p2)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(coupled_pair(), st.floats(0.0, 1.0))
def test_mixture_preserves_marginals(data, w):
    mu, nu, rng = data
    p1 = nw_corner(mu, nu)
    p2 = shuffled_coupling(rng, mu, nu)
    mix = mixture_plan([p1, p2], [w, 1.0 - w])
    verify_exact_coupling(mix, mu, nu, 1e-12)


@settings(max_examples=60, deadline=None)
@given(coupled_pair(), st.floats(0.05, 0.95))
def test_domination_of_mixture_components(data, w):
    mu, nu, rng = data
    p1 = nw_corner(mu, nu)
    p2 = shuffled_coupling(rng, mu, nu)
    mix = mixture_plan([p1, p2], [w, 1.0 - w])
    result = plan_dominates(p1, mix)
    assert result.dominates
    assert result.density_bound <= 1.0 / w + 1e-9


@settings(max_examples=60, deadline=None)
@given(coupled_pair())
def test_weak_duality_for_c_transforms(data):
    mu, nu, rng = data
    cost = CostMatrix(rng.uniform(0.0, 5.0, (mu.size, nu.size)))
    phi = rng.normal(size=mu.size)
    psi = np.min(cost.entries - phi[:, None], axis=0)
    pp = PotentialPair(phi, psi)
    plan = nw_corner(mu, nu)
    assert potential_plan_integral(pp, plan) <= transport_cost(cost, plan) + 1e-9


@st.composite
def rotation_instances(draw):
    n = draw(st.integers(4, 64))
    candidates = [s for s in range(1, n) if math.gcd(s, n) == 1]
    shift = draw(st.sampled_from(candidates))
    return make_instance(n, shift)


@settings(max_examples=60, deadline=None)
@given(rotation_instances(), st.integers(0, 40))
def test_level_recursion(inst, k):
    g = step_signs(inst)
    i = k % inst.n
    assert birkhoff_level(inst, i, k + 1) == (
        birkhoff_level(inst, i, k) + g[(i + k * inst.shift) % inst.n])


@settings(max_examples=40, deadline=None)
@given(rotation_instances())
def test_period_drift_matches_parity(inst):
    # one full cycle adds the sign excess: zero for even n, one for odd n
    levels = birkhoff_levels(inst, inst.n)
    drift = 0 if inst.n % 2 == 0 else 1
    assert np.all(levels[inst.n] == 1 + drift)


@settings(max_examples=40, deadline=None)
@given(rotation_instances(), st.integers(0, 30))
def test_skew_walk_matches_levels(inst, k):
    i = (7 * k) % inst.n
    state = OrbitState(i, 0)
    for _ in range(k):
        state = skew_step(inst, state)
    assert state.level == birkhoff_level(inst, i, k) - 1
    assert state.position == (i + k * inst.shift) % inst.n


@st.composite
def rotation_specs(draw):
    kind = draw(st.sampled_from(["ap", "ex33"]))
    n = draw(st.integers(4, 32))
    if kind == "ap" and n % 2:
        n += 1
    shift = draw(st.sampled_from(
        ["auto-golden"] + [s for s in range(1, n) if math.gcd(s, n) == 1]))
    k_max = draw(st.one_of(st.none(), st.integers(1, n - 1)))
    seed = draw(st.one_of(st.none(), st.integers(0, 10 ** 6)))
    return InstanceSpec(kind=kind, n=n, shift=shift, k_max=k_max, seed=seed)


@settings(max_examples=80, deadline=None)
@given(rotation_specs())
def test_instance_roundtrip(spec):
    text = dumps_canonical(instance_to_jsonable(spec))
    back = parse_instance(text)
    assert back == spec
    assert dumps_canonical(instance_to_jsonable(back)) == text


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=True, width=64),
                min_size=1, max_size=30))
def test_float_serialization_roundtrip(values):
    text = dumps_canonical({"values": values})
    from mklab.fileformats import loads_canonical

    assert loads_canonical(text)["values"] == values

import json
import math

import pytest

import cocyclelab as cl

CAT = [[2, 1], [1, 1]]


@pytest.fixture(scope="module")
def cat():
    return cl.System.torus_automorphism(CAT)


@pytest.fixture(scope="module")
def rotation_cocycle(cat):
    return cl.Cocycle.coboundary_rotation(cat, [([1, 0], 0.3, 0.0)])


def test_iterate_and_distance(cat):
    y = cat.iterate([0.1, 0.2], 1)
    assert y.coords() == pytest.approx([0.4, 0.3], abs=1e-12)
    assert cat.distance([0.9, 0.0], [0.1, 0.0]) == pytest.approx(0.2)
    # exact group law on the dyadic grid
    x = cat.sample(5, 1)[0]
    a = cat.iterate(cat.iterate(x, -9), 21)
    b = cat.iterate(x, 12)
    assert cat.distance(a, b) == 0.0


def test_periodic_points(cat):
    assert len(cat.periodic_points(1)) == 1
    assert len(cat.periodic_points(2)) == 5
    assert len(cat.periodic_points(3)) == 16


def test_shadowing(cat):
    p = cat.periodic_points(2)[3]
    res = cat.shadow(p, 2, 0.05)
    assert res["bound_satisfied"]
    assert max(res["per_step_distances"]) < 1e-12


def test_obstruction_audit(cat, rotation_cocycle):
    rep = cl.obstruction_audit(rotation_cocycle, n_max=5, tolerance=1e-8)
    assert rep["pass"]
    assert rep["counts_per_period"] == [1, 5, 16, 45, 121]

    theta = 0.3
    rot = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    turn = cl.Cocycle.constant(cat, rot)
    rep2 = cl.obstruction_audit(turn, n_max=1)
    assert rep2["max_defect"] == pytest.approx(2 * math.sin(theta / 2), rel=1e-12)
    assert not rep2["pass"]


def test_spectrum(cat):
    diag = cl.Cocycle.constant(cat, [[2.0, 0.0], [0.0, 0.5]])
    spec = diag.spectrum([0.3, 0.7], 2000)
    assert spec["exponents"] == pytest.approx([math.log(2), -math.log(2)], abs=1e-9)
    assert not diag.zero_exponent_check(samples=2, seed=3, iters=2000)["pass"]


def test_lyapunov_norm_closed_form(cat):
    theta = 0.4
    rot = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    orth = cl.Cocycle.constant(cat, rot)
    x = cat.sample(3, 1)[0]
    got = orth.lyapunov_norm(x, 0.1, [1.0, 0.0])
    expected = math.sqrt(2.0 / math.tanh(0.1))
    assert got == pytest.approx(expected, rel=1e-9)
    assert orth.c_epsilon(x, 0.1) == pytest.approx(expected, rel=1e-9)


def test_transfer_round_trip(rotation_cocycle):
    table = cl.build_transfer(rotation_cocycle, n_points=2000, seed=11)
    assert table.size == 2000
    assert table.in_g_count == 2000
    assert cl.uniqueness_residual(table) < 1e-6
    scan = table.near_return_scan(beta=0.02)
    assert scan["pairs"] > 50
    assert 0.8 < scan["slope"] < 1.2


def test_holonomy(cat, rotation_cocycle):
    y = cat.sample(9, 1)[0]
    z = cat.local_stable_point(y, 0.02)
    h = rotation_cocycle.stable_holonomy(y, z)
    assert h["n_converged"] > 0
    # transports commute with the transfer map: H is a rotation, det = 1
    mat = h["matrix"]
    det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    assert det == pytest.approx(1.0, abs=1e-8)


def test_bracket(cat):
    x = [0.31, 0.62]
    b = cat.bracket(x, x)
    assert cat.distance(b, x) < 1e-12


def test_shift_system():
    shift = cl.System.full_shift(2)
    assert len(shift.periodic_points(3)) == 8
    x = shift.point("0110")
    y = shift.iterate(x, 4)
    assert shift.distance(x, y) == 0.0  # period-4 word


def test_config_round_trip(cat):
    config = {
        "system": {"kind": "torus_automorphism", "matrix": CAT},
        "cocycle": {
            "variant": "coboundary",
            "dimension": 2,
            "alpha": 1.0,
            "transfer": {
                "kind": "rotation_field",
                "terms": [{"freq": [1, 0], "amplitude": 0.3, "phase": 0.0}],
            },
        },
    }
    system, cocycle = cl.make(json.dumps(config))
    a = cocycle.evaluate([0.0, 0.0])
    assert a[0][0] == pytest.approx(1.0, abs=1e-12)

    bad = dict(config)
    bad["mystery"] = 1
    with pytest.raises(cl.CocycleLabError):
        cl.make(json.dumps(bad))

import math

import numpy as np
import pytest

from tempered_tof.errors import InvalidParameterError, NumericalBreakdownError, StabilityError
from tempered_tof.fractional import TemperedParams
from tempered_tof.mesh import build_graded_mesh, build_l1_table, build_spatial_mesh
from tempered_tof.solver import (
    ProblemSpec,
    StepSystem,
    assemble_rhs,
    check_stability,
    march,
    read_field_csv,
    step_system,
    thomas_solve,
    write_field_csv,
)

from oracles import dense_march, direct_weights


def bump(x):
    return x * (1.0 - x)


def spec(alpha=0.5, lam=0.0, v=1.0, D=1.0, g=bump, f=None, L=1.0, T=1.0):
    return ProblemSpec(TemperedParams(alpha, lam), v=v, D=D, L=L, T=T, g=g, f=f)


def test_stability_examples():
    assert check_stability(spec(), 0.01)
    assert check_stability(spec(), 0.01).hmax == 2.0
    res = check_stability(spec(), 2.0)
    assert not res and res.hmax == 2.0
    fitted = check_stability(spec(v=0.38, D=2.7e-3), 0.01)
    assert fitted and fitted.hmax == pytest.approx(0.0142105, rel=1e-5)


def test_march_refuses_unstable_mesh():
    with pytest.raises(StabilityError) as exc:
        march(spec(v=10.0, D=0.01), 4, 1, 10)
    assert exc.value.hmax == pytest.approx(0.002)


@pytest.mark.parametrize("bad", [dict(v=0.0), dict(D=-1.0), dict(L=0.0), dict(T=float("nan"))])
def test_problem_validation(bad):
    with pytest.raises(InvalidParameterError):
        spec(**bad)


def test_step_system_dominance():
    s = spec(v=0.38, D=2.7e-3)
    sp = build_spatial_mesh(100, 1.0)
    tab = build_l1_table(0.5, build_graded_mesh(20, 3, 1.0))
    for l in range(1, 21):
        sys_ = step_system(s, sp, tab, l, np.zeros(99))
        assert sys_.sub < 0 and sys_.sup < 0 and sys_.diag > 0
        lead = tab.tau_pow[l - 1] / math.gamma(1.5)
        assert sys_.diag - abs(sys_.sub) - abs(sys_.sup) == pytest.approx(lead, rel=1e-12)


def test_thomas_single_unknown():
    z = thomas_solve(StepSystem(sub=-1.0, diag=4.0, sup=-1.0, rhs=np.array([3.0])))
    assert z.tolist() == [0.75]


def test_thomas_hand_example():
    z = thomas_solve(StepSystem(sub=-1.0, diag=2.0, sup=-1.0, rhs=np.ones(3)))
    np.testing.assert_allclose(z, [1.5, 2.0, 1.5], rtol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_thomas_against_dense(seed):
    rng = np.random.default_rng(seed)
    sub, sup = -rng.uniform(0, 2, 2)
    diag = abs(sub) + abs(sup) + rng.uniform(1e-3, 3)
    system = StepSystem(sub, diag, sup, rng.normal(size=63))
    z = thomas_solve(system)
    A = system.dense()
    np.testing.assert_allclose(z, np.linalg.solve(A, system.rhs), rtol=0, atol=1e-10)
    assert np.abs(A @ z - system.rhs).max() <= 1e-12 * np.abs(system.rhs).max()


def test_thomas_breakdown():
    with pytest.raises(NumericalBreakdownError):
        thomas_solve(StepSystem(sub=-1.0, diag=0.0, sup=-1.0, rhs=np.ones(3)))


def test_first_step_rhs():
    s = spec()
    sp = build_spatial_mesh(4, 1.0)
    tab = build_l1_table(0.5, build_graded_mesh(5, 3, 1.0))
    Y = np.zeros((1, 5))
    Y[0, 1:-1] = bump(sp.interior)
    rhs = assemble_rhs(Y, tab, s, 1, sp)
    np.testing.assert_allclose(rhs, tab.tau_pow[0] / math.gamma(1.5) * bump(sp.interior), rtol=1e-15)


def test_second_step_rhs_matches_dense():
    s = spec()
    field = march(s, 5, 3, 4)
    ref = dense_march(0.5, 0.0, 1.0, 1.0, 1.0, 1.0, bump, None, 5, 3, 4)
    np.testing.assert_allclose(field.tempered[:3], ref[:3], rtol=0, atol=1e-12)
    sp = field.spatial
    rhs = assemble_rhs(field.tempered[:2], build_l1_table(0.5, field.temporal), s, 2, sp)
    # rebuild the l=2 right-hand side from the dense oracle's first slices
    w = direct_weights(field.t, 0.5, 2, 3) / math.gamma(1.5)
    expect = w[1] * ref[1, 1:-1] - w[0] * (ref[1, 1:-1] - ref[0, 1:-1])
    np.testing.assert_allclose(rhs, expect, rtol=1e-12)


def test_zero_data_stays_zero():
    field = march(spec(g=np.zeros_like), 12, 2, 8)
    assert not field.tempered.any() and not field.untempered.any()


def test_boundary_and_initial_rows():
    field = march(spec(lam=0.7), 10, 2, 16)
    assert not field.tempered[:, 0].any() and not field.tempered[:, -1].any()
    np.testing.assert_array_equal(field.tempered[0, 1:-1], bump(field.spatial.interior))
    fac = np.exp(-0.7 * field.t)[:, None]
    assert np.all(np.abs(field.untempered - field.tempered * fac) <= 2 * np.spacing(np.abs(field.untempered)))


def test_zero_lambda_equals_plain_solver():
    """lam=0 is the plain fractional scheme: untempered and tempered layers coincide."""
    field = march(spec(lam=0.0), 10, 3, 10)
    np.testing.assert_array_equal(field.tempered, field.untempered)
    ref = dense_march(0.5, 0.0, 1.0, 1.0, 1.0, 1.0, bump, None, 10, 3, 10)
    np.testing.assert_allclose(field.tempered, ref, rtol=0, atol=1e-12)


def test_tempered_path_matches_dense_with_forcing():
    f = lambda x, t: np.sin(np.pi * x) * (1 + t)
    field = march(spec(alpha=0.3, lam=2.0, v=0.5, D=0.2, f=f), 8, 2.5, 12)
    ref = dense_march(0.3, 2.0, 0.5, 0.2, 1.0, 1.0, bump, f, 8, 2.5, 12)
    np.testing.assert_allclose(field.tempered, ref, rtol=0, atol=1e-10)


def test_table_reuse_and_mismatch():
    s = spec()
    tab = build_l1_table(0.5, build_graded_mesh(6, 2, 1.0))
    np.testing.assert_array_equal(march(s, 6, 2, 8, table=tab).tempered, march(s, 6, 2, 8).tempered)
    with pytest.raises(InvalidParameterError):
        march(s, 7, 2, 8, table=tab)
    with pytest.raises(InvalidParameterError):
        march(s, 6, 2, 1)


def test_edge_heavy_profile_warns():
    g = lambda x: np.where(x < 0.03, 100.0, 0.01)
    with pytest.warns(RuntimeWarning, match="absorbing"):
        march(spec(g=g), 2, 1, 40)


def test_field_csv_round_trip(tmp_path):
    field = march(spec(lam=0.4), 6, 2, 5)
    path = tmp_path / "field.csv"
    write_field_csv(path, field)
    assert path.read_text().splitlines()[0] == "x,t,u"
    x, t, U = read_field_csv(path)
    np.testing.assert_array_equal(x, field.x)
    np.testing.assert_array_equal(t, field.t)
    np.testing.assert_array_equal(U, field.untempered)


def test_manufactured_r3_finest_row():
    from tempered_tof.verification import manufactured_problem, max_error
    field = march(manufactured_problem(0.5, 1.0), 160, 3, 1000)
    assert max_error(field, 0.5, 1.0) == pytest.approx(5.40e-5, rel=0.10)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempered_tof.calibration import (
    BORON_FIT,
    FitProblem,
    MeasuredTrace,
    evaluate_loss,
    fit,
    gaussian_packet,
    loss,
    synthetic_trace,
    width_from_exponent,
    write_fit_csv,
)
from tempered_tof.errors import InvalidParameterError

TIMES = np.logspace(-2, math.log10(5.0), 40)


@pytest.fixture(scope="module")
def problem():
    return FitProblem(n=60, r=3, K=128)


@pytest.fixture(scope="module")
def clean(problem):
    return synthetic_trace(BORON_FIT, problem, TIMES)


def test_packet_values():
    w = width_from_exponent(2e3)
    assert w == pytest.approx(0.0158114, rel=1e-5)
    g = gaussian_packet(0.2, w, A=3.0)
    assert g(0.2) == 3.0
    assert g(np.array([0.25, 0.15])) / 3.0 == pytest.approx(math.exp(-5), rel=1e-12)
    assert g(0.0) / 3.0 == pytest.approx(math.exp(-80), rel=1e-10)
    assert g(1.0) / 3.0 < 1e-34
    with pytest.raises(InvalidParameterError):
        gaussian_packet(0.2, 0.0)


def test_measured_trace_validation():
    with pytest.raises(InvalidParameterError):
        MeasuredTrace([1, 1, 2], [1, 1, 1])
    with pytest.raises(InvalidParameterError):
        MeasuredTrace([1, 2], [1, 0])
    with pytest.raises(InvalidParameterError):
        MeasuredTrace([0, 1], [1, 1])


def test_measured_csv(tmp_path, clean):
    path = tmp_path / "m.csv"
    clean.to_csv(path)
    back = MeasuredTrace.from_csv(path)
    np.testing.assert_array_equal(back.times, clean.times)
    np.testing.assert_array_equal(back.current, clean.current)
    (tmp_path / "h.csv").write_text("# comment\ntime,I\n0.1,2\n0.2,1\n")
    assert MeasuredTrace.from_csv(tmp_path / "h.csv").current.tolist() == [2.0, 1.0]
    (tmp_path / "bad.csv").write_text("0.1,2\nx,y\n")
    with pytest.raises(InvalidParameterError):
        MeasuredTrace.from_csv(tmp_path / "bad.csv")


def test_self_fit_loss_is_zero(problem, clean):
    detail = evaluate_loss(BORON_FIT, clean, problem)
    assert detail.value < 1e-6 and detail.skipped == 0 and detail.compared == TIMES.size


def test_perturbed_alpha_positive(problem, clean):
    assert loss({**BORON_FIT, "alpha": BORON_FIT["alpha"] + 0.1}, clean, problem) > 1e-3


@settings(max_examples=10, deadline=None)
@given(c=st.floats(1e-8, 1e8))
def test_loss_rescale_invariant(c):
    prob = FitProblem(n=30, r=3, K=128)
    data = synthetic_trace(BORON_FIT, prob, TIMES, noise=0.02, seed=3)
    point = {**BORON_FIT, "alpha": 0.6}
    assert loss(point, data.scaled(c), prob) == pytest.approx(loss(point, data, prob), rel=1e-9, abs=1e-12)


def test_unstable_candidate_penalised(problem, clean):
    detail = evaluate_loss({**BORON_FIT, "D": 1e-4}, clean, problem)
    assert not detail.stable and detail.value == problem.penalty


def test_truth_is_lattice_minimum():
    """Grid oracle: with 2% noise the truth beats every point of a 5^4 lattice of +-20% perturbations."""
    prob = FitProblem(n=60, r=3, K=128)
    data = synthetic_trace(BORON_FIT, prob, TIMES, noise=0.02, seed=11)
    truth = loss(BORON_FIT, data, prob)
    factors = (0.8, 0.9, 1.0, 1.1, 1.2)
    names = ("alpha", "lam", "v", "D")
    worse = 0
    for combo in itertools.product(factors, repeat=4):
        if combo == (1.0,) * 4:
            continue
        point = dict(BORON_FIT)
        for name, fac in zip(names, combo):
            point[name] = BORON_FIT[name] * fac
        worse += loss(point, data, prob) > truth
    assert worse == 5**4 - 1


def test_truth_is_lattice_minimum_noise_free():
    """Without noise every lattice neighbour is strictly worse, including the D axis."""
    prob = FitProblem(n=60, r=3, K=128)
    data = synthetic_trace(BORON_FIT, prob, TIMES)
    truth = loss(BORON_FIT, data, prob)
    factors = (0.8, 0.9, 1.0, 1.1, 1.2)
    for combo in itertools.product(factors, repeat=4):
        if combo == (1.0,) * 4:
            continue
        point = dict(BORON_FIT)
        for name, fac in zip(("alpha", "lam", "v", "D"), combo):
            point[name] = BORON_FIT[name] * fac
        assert loss(point, data, prob) > truth


def test_diffusion_signal_below_noise_floor():
    """Why the noisy lattice check can fail: a 20% change in D moves ln I less than 2% noise does."""
    prob = FitProblem(n=60, r=3, K=128)
    data = synthetic_trace(BORON_FIT, prob, TIMES)
    signal = loss({**BORON_FIT, "D": 1.2 * BORON_FIT["D"]}, data, prob)
    noise_floor = TIMES.size * 0.02**2
    assert signal < 0.25 * noise_floor


def test_zero_noise_fit_from_truth(problem, clean):
    res = fit(FitProblem(n=60, r=3, K=128, max_iter=50), clean, BORON_FIT, refine=False)
    assert res.loss < 1e-8
    assert res.loss <= res.initial_loss


def test_fit_respects_bounds_and_stability():
    prob = FitProblem(n=30, r=3, K=128, max_iter=60, bounds={"alpha": (0.5, 0.7), "lam": (0.5, 1.5)})
    data = synthetic_trace({**BORON_FIT, "alpha": 0.45}, FitProblem(n=30, r=3, K=128, bounds={"alpha": (0.3, 0.7)}),
                           TIMES, noise=0.02, seed=5)
    res = fit(prob, data, {**BORON_FIT, "alpha": 0.6})
    assert prob.in_bounds(res.params) and prob.is_stable(res.params)
    assert res.loss <= res.initial_loss
    assert res.loss_trace[0] == res.initial_loss
    assert all(b <= a for a, b in zip(res.loss_trace, res.loss_trace[1:]))
    assert res.refined_loss is not None
    assert "alpha" in res.report()


def test_fixed_parameters(problem, clean):
    prob = FitProblem(n=30, r=3, K=128, max_iter=20, fixed={"lam": 0.0, "x_c": 0.2, "w": BORON_FIT["w"]})
    assert prob.free == ("alpha", "v", "D")
    res = fit(prob, clean, BORON_FIT, refine=False)
    assert res.params["lam"] == 0.0


def test_bounds_validation():
    with pytest.raises(InvalidParameterError):
        FitProblem(bounds={"alpha": (0.5, 0.4)})
    with pytest.raises(InvalidParameterError):
        FitProblem(bounds={"nope": (0, 1)})
    with pytest.raises(InvalidParameterError):
        fit(FitProblem(n=10), MeasuredTrace([1, 2, 3], [3, 2, 1]), {**BORON_FIT, "alpha": 1.5})


def test_coordinate_round_trip(problem):
    z = problem.to_unconstrained(BORON_FIT)
    back = problem.from_unconstrained(z)
    for name in BORON_FIT:
        assert back[name] == pytest.approx(BORON_FIT[name], rel=1e-9)


def test_noise_is_seeded(problem):
    a = synthetic_trace(BORON_FIT, problem, TIMES, noise=0.02, seed=7)
    b = synthetic_trace(BORON_FIT, problem, TIMES, noise=0.02, seed=7)
    c = synthetic_trace(BORON_FIT, problem, TIMES, noise=0.02, seed=8)
    np.testing.assert_array_equal(a.current, b.current)
    assert not np.array_equal(a.current, c.current)


def test_fit_csv(tmp_path, problem, clean):
    res = fit(FitProblem(n=60, r=3, K=128, max_iter=5), clean, BORON_FIT, refine=False)
    path = tmp_path / "fit.csv"
    write_fit_csv(path, clean, res, FitProblem(n=60, r=3, K=128))
    rows = path.read_text().splitlines()
    assert rows[0] == "t,I_measured,I_fitted" and len(rows) == TIMES.size + 1
    fitted = np.array([float(r.split(",")[2]) for r in rows[1:]])
    np.testing.assert_allclose(fitted, clean.current, rtol=1e-3)

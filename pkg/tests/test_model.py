import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qphase.errors import DimensionError, DomainError, SparsityError
from qphase.model import (ProblemInstance, assumption_diagnostics, empirical_risk, generate_instance,
                          generate_signal, load_instance, read_matrix_csv, read_meta, risk_gradient,
                          save_instance, write_matrix_csv)
from qphase.rng import RngState

from conftest import central_diff, make_instance


@given(p=st.integers(1, 60), data=st.data())
@settings(max_examples=50, deadline=None)
def test_signal_is_sparse_unit_vector(p, data):
    s = data.draw(st.integers(1, p))
    theta = generate_signal(RngState(p * 7 + s), p, s)
    assert np.count_nonzero(theta) == s
    assert np.linalg.norm(theta) == pytest.approx(1.0, abs=1e-12)


def test_signal_support_is_uniform():
    counts = np.zeros(10)
    rng = RngState(123)
    for _ in range(4000):
        counts += generate_signal(rng, 10, 3) != 0
    # each coordinate is kept with probability 3/10
    assert np.all(np.abs(counts / 4000 - 0.3) < 0.03)


@pytest.mark.parametrize("p,s", [(5, 0), (5, 6), (0, 1), (3, -1)])
def test_signal_rejects_bad_sparsity(p, s):
    with pytest.raises(DomainError):
        generate_signal(RngState(0), p, s)


def test_sparsity_error_type():
    with pytest.raises(SparsityError):
        generate_signal(RngState(0), 4, 5)


def test_instance_noiseless_is_exact():
    rng = RngState(4)
    theta = generate_signal(rng, 6, 2)
    inst = generate_instance(rng, theta, 30, 0.0)
    np.testing.assert_array_equal(inst.y, (inst.A @ theta) ** 2)
    assert inst.s_star == 2 and inst.sigma == 0.0


def test_noise_level_does_not_shift_the_stream():
    t = np.array([1.0, 0.0])
    a = generate_instance(RngState(9), t, 20, 0.0)
    b = generate_instance(RngState(9), t, 20, 2.0)
    np.testing.assert_array_equal(a.A, b.A)
    assert not np.array_equal(a.y, b.y)


def test_instance_validation():
    with pytest.raises(DimensionError):
        ProblemInstance(np.ones((3, 2)), np.ones(4))
    with pytest.raises(DimensionError):
        ProblemInstance(np.ones((3, 2)), np.ones(3), theta_star=np.ones(3))
    with pytest.raises(DomainError):
        generate_instance(RngState(0), np.ones(2), 0, 1.0)
    with pytest.raises(DomainError):
        generate_instance(RngState(0), np.ones(2), 5, -1.0)
    inst = ProblemInstance(np.ones((3, 2)), np.ones(3))
    with pytest.raises(ValueError):
        inst.A[0, 0] = 2.0


def test_risk_against_loop_oracle(small_inst):
    theta = RngState(1).normal_vector(small_inst.p)
    ref = sum(((a @ theta) ** 2 - y) ** 2 for a, y in zip(small_inst.A, small_inst.y))
    assert empirical_risk(small_inst, theta) == pytest.approx(ref / (4 * small_inst.m), rel=1e-13)


def test_risk_gradient_matches_finite_differences(small_inst):
    theta = RngState(2).normal_vector(small_inst.p)
    fd = central_diff(lambda t: empirical_risk(small_inst, t), theta)
    np.testing.assert_allclose(risk_gradient(small_inst, theta), fd, rtol=1e-6, atol=1e-8)


def test_risk_zero_at_truth_when_noiseless(noiseless_inst):
    t = noiseless_inst.theta_star
    assert empirical_risk(noiseless_inst, t) == 0.0
    assert np.all(risk_gradient(noiseless_inst, t) == 0.0)


def test_risk_checks_shape(small_inst):
    with pytest.raises(DimensionError):
        empirical_risk(small_inst, np.zeros(small_inst.p + 1))


def test_assumption_diagnostics(small_inst):
    rep = assumption_diagnostics(small_inst, small_inst.theta_star)
    bound = max(abs(a @ small_inst.theta_star) for a in small_inst.A)
    assert rep.realized_bound == pytest.approx(bound, rel=1e-14)
    assert rep.min_eig_proxy >= 0
    # a rank-deficient design has a zero proxy
    flat = ProblemInstance(np.ones((5, 3)), np.ones(5))
    assert assumption_diagnostics(flat, np.zeros(3)).min_eig_proxy == pytest.approx(0, abs=1e-12)


def test_csv_roundtrip_is_exact(tmp_path):
    arr = RngState(0).normal_matrix(4, 3) * 1e-7
    write_matrix_csv(tmp_path / "a.csv", arr)
    np.testing.assert_array_equal(read_matrix_csv(tmp_path / "a.csv"), arr)


def test_instance_roundtrip(tmp_path):
    inst = make_instance(p=5, s=2, m=12, sigma=0.3)
    save_instance(inst, tmp_path, seed=77)
    back = load_instance(tmp_path)
    np.testing.assert_array_equal(back.A, inst.A)
    np.testing.assert_array_equal(back.y, inst.y)
    np.testing.assert_array_equal(back.theta_star, inst.theta_star)
    meta = read_meta(tmp_path / "meta.txt")
    assert meta["seed"] == "77" and meta["m"] == "12" and meta["s_star"] == "2"
    assert back.sigma == 0.3


def test_load_missing_dir(tmp_path):
    with pytest.raises(OSError):
        load_instance(tmp_path / "nope")

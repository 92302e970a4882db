import numpy as np
import pytest

from bandsure import verify
from bandsure.datagen import make_rng
from bandsure.verify import (
    OracleReport,
    check_band_structure,
    check_l11_bound,
    check_mgf_identity,
    check_moment_identities,
    check_scalar_lemmas,
    check_tail_bound,
    check_trace_bound,
    log_quadratic_gap,
    mgf_matrix,
    run_suite,
)


def test_oracle_report_kinds():
    assert OracleReport.compare("c", "t", 1.0, 1.05, 0.1).passed
    assert not OracleReport.compare("c", "t", 1.0, 1.2, 0.1).passed
    assert OracleReport.compare("c", "t", 1.0, 0.95, 0.1, kind="upper").passed
    assert not OracleReport.compare("c", "t", 1.0, 0.5, 0.1, kind="upper").passed
    assert OracleReport.compare("c", "t", 1.0, 2.0, 0.0, kind="upper").passed
    assert OracleReport.compare("c", "t", 1.0, 1.05, 0.1, kind="lower").passed
    with pytest.raises(ValueError):
        OracleReport.compare("c", "t", 1.0, 1.0, 0.1, kind="sideways")


def test_moment_reference_value():
    # E s12^2 = (1 + 10 * 0.25) / 9 for the 2x2 instance with n = 10
    rows = check_moment_identities(10, np.array([[1.0, 0.5], [0.5, 1.0]]), 20_000, make_rng(1))
    refs = [r.reference for r in rows]
    assert any(r == pytest.approx(3.5 / 9, rel=1e-14) for r in refs)
    assert all(r.passed for r in rows)


def test_moment_diagonal_sigma():
    rows = check_moment_identities(8, np.diag([1.0, 2.0]), 20_000, make_rng(2))
    assert any(r.reference == pytest.approx(2.0 / 7, rel=1e-14) for r in rows)
    assert all(r.passed for r in rows)


def test_mgf_matrix_and_hand_case():
    b = mgf_matrix(np.eye(2), [[1.0]])
    np.testing.assert_allclose(b, [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)
    rows = check_mgf_identity(np.eye(2), [[1.0]], [0.0, 0.3], 50_000, make_rng(3))
    by_t = {r.target: r for r in rows}
    zero = [r for r in rows if r.reference == 1.0]
    assert zero and all(r.value == 1.0 for r in zero)
    assert any(r.reference == pytest.approx((1 - 0.09) ** -0.5, rel=1e-12) for r in rows)
    assert all(r.passed for r in rows), by_t


def test_mgf_rejects_t_out_of_range():
    with pytest.raises(ValueError):
        check_mgf_identity(np.eye(2), [[1.0]], [0.6], 1000, make_rng(0))


def test_trace_bound_examples():
    k = 4
    e1 = np.eye(k)[0]
    r = check_trace_bound(np.eye(2 * k), e1, e1, np.ones((k, k)))
    assert r.passed and r.reference == pytest.approx(2.0)
    r0 = check_trace_bound(np.eye(2 * k), e1, e1, np.zeros((k, k)))
    assert r0.value == 0.0 and r0.passed
    with pytest.raises(ValueError):
        check_trace_bound(np.eye(2 * k), 2 * e1, e1, np.ones((k, k)))
    with pytest.raises(ValueError):
        check_trace_bound(np.eye(2 * k), e1, e1, 2 * np.ones((k, k)))


def test_tail_bound_preconditions():
    with pytest.raises(ValueError):
        check_tail_bound(np.eye(2), [[1.0]], 50, [0.6], 10_000, make_rng(0))
    with pytest.raises(ValueError):
        check_tail_bound(np.eye(2), [[1.0]], 50, [0.2], 100, make_rng(0))


def test_tail_bound_reference_at_edge():
    rows = check_tail_bound(np.eye(2), [[1.0]], 50, [0.5 - 1e-12, 0.1], 10_000, make_rng(4))
    edge = rows[0]
    assert edge.reference == pytest.approx(2 * np.exp(-6.25), rel=1e-9)
    assert all(0.0 <= r.value <= 1.0 and r.reference > 0 for r in rows)
    assert all(r.passed for r in rows)


def test_band_structure_p9_k3():
    rows = check_band_structure(verify._power_law(9), 30, 3, make_rng(5))
    assert all(r.passed for r in rows)
    counts = [r for r in rows if "K(K-1)/2" in r.target]
    assert counts and all(r.reference == 3 and r.value == 3 for r in counts)


def test_band_structure_single_block():
    rows = check_band_structure(verify._power_law(5), 20, 5, make_rng(6))
    assert all(r.passed for r in rows)


def test_l11_and_scalars():
    assert all(r.passed for r in check_l11_bound(100, 12, make_rng(7)))
    rows = check_scalar_lemmas()
    assert all(r.passed for r in rows)
    assert log_quadratic_gap(0.0) == 0.0
    assert log_quadratic_gap(-0.4) == pytest.approx(np.log(0.6) + 0.4 + 0.16, rel=1e-14)
    assert log_quadratic_gap(-0.4) == pytest.approx(0.0492, abs=1e-4)


@pytest.mark.parametrize("suite", sorted(verify.SUITES))
def test_suites_pass_and_are_deterministic(suite):
    a = run_suite(suite, seed=7)
    assert a and all(r.passed for r in a), [r for r in a if not r.passed][:3]
    if suite in ("moments", "scalars", "trace"):
        assert run_suite(suite, seed=7) == a


def test_run_suite_unknown():
    with pytest.raises(ValueError):
        run_suite("nope")

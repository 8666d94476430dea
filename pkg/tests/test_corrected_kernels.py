import numpy as np
import pytest

import perron as pr
from perron.errors import NotConvergentError
from conftest import random_positive_kernel


def split_for(kernel, strategy="row_min"):
    return pr.rank_one_split(kernel, pr.extract_minorization(kernel, strategy))


@pytest.fixture
def symmetric_split(symmetric_2x2):
    return split_for(symmetric_2x2)


class TestRecursion:
    def test_base_term_is_kernel(self, symmetric_split):
        seq = pr.build_corrected_kernels(symmetric_split, 3)
        assert seq.kernels[0] is symmetric_split.kernel

    def test_zero_remainder_collapses(self, constant_unit):
        seq = pr.build_corrected_kernels(split_for(constant_unit), 4)
        for n in range(1, 5):
            np.testing.assert_allclose(seq.kernels[n].entries, 0.0, atol=1e-13)

    def test_separable_kernel_collapses(self):
        sp = pr.make_counting_space(6)
        rng = np.random.default_rng(61)
        v = rng.uniform(0.2, 1, 6)
        u = rng.uniform(0.2, 1, 6)
        k = pr.separable_kernel(sp, v, u)
        cert = pr.extract_minorization(k, "user", profile=v, density=u)
        seq = pr.build_corrected_kernels(pr.rank_one_split(k, cert), 3)
        for n in range(1, 4):
            np.testing.assert_allclose(seq.kernels[n].entries, 0.0, atol=1e-12)

    def test_identity_remainder_by_hand(self, symmetric_split):
        # remainder is the identity here, so every corrected kernel is K
        seq = pr.build_corrected_kernels(symmetric_split, 4)
        for n in range(1, 5):
            np.testing.assert_allclose(
                seq.kernels[n].entries, symmetric_split.kernel.entries, atol=1e-12
            )

    def test_matches_operator_power_oracle(self):
        rng = np.random.default_rng(62)
        sp = pr.make_interval_space(0, 1, 20, "midpoint")
        k = random_positive_kernel(sp, rng)
        split = split_for(k)
        seq = pr.build_corrected_kernels(split, 8)
        t_op, p_op = k.operator_matrix(), None
        cert = split.certificate
        p_op = cert.alpha * np.outer(cert.profile.values, cert.functional.acting_vector())
        s_op = t_op - p_op
        power = np.eye(20)
        scale = np.abs(k.entries).max()
        for n in range(9):
            expected = (power @ t_op) / sp.weights[np.newaxis, :]
            np.testing.assert_allclose(
                seq.kernels[n].entries, expected, atol=1e-10 * scale * 3**n
            )
            power = s_op @ power

    def test_moment_scalars(self, symmetric_split):
        # profile (1,1), density (1/2,1/2): b_j = phi[T^j 1] = 3^j
        seq = pr.build_corrected_kernels(symmetric_split, 5)
        np.testing.assert_allclose(seq.moments, [3.0, 9.0, 27.0, 81.0, 243.0])

    def test_norm_growth_bound(self):
        # strictly below c^(n+1) on strictly positive kernels
        rng = np.random.default_rng(63)
        sp = pr.make_counting_space(10)
        k = random_positive_kernel(sp, rng)
        split = split_for(k)
        seq = pr.build_corrected_kernels(split, 10)
        c = k.weighted_inf_norm() + pr.rank_one_norm(split)
        for n, kern in enumerate(seq.kernels):
            assert kern.weighted_inf_norm() < c ** (n + 1)


class TestNeumannKernelResolvent:
    def test_zero_remainder_single_term(self, constant_unit):
        seq = pr.build_corrected_kernels(split_for(constant_unit), 2)
        h = pr.neumann_kernel_resolvent(seq, 2.0, tol=1e-14)
        np.testing.assert_allclose(h.entries, constant_unit.entries / 2.0, atol=1e-13)

    def test_matches_direct_solve_2x2(self, symmetric_split):
        seq = pr.build_corrected_kernels(symmetric_split, 4)
        h = pr.neumann_kernel_resolvent(seq, 4.0, tol=1e-13)
        direct = np.linalg.solve(
            4.0 * np.eye(2) - symmetric_split.remainder.operator_matrix(),
            symmetric_split.kernel.entries,
        )
        np.testing.assert_allclose(h.entries, direct, atol=1e-10)

    def test_gaussian_tail_bound_honored(self):
        sp = pr.make_interval_space(0, 1, 60, "midpoint")
        k = pr.gaussian_kernel(sp, 0.5)
        split = split_for(k)
        seq = pr.build_corrected_kernels(split, 2)
        lam = 2.0 * k.weighted_inf_norm()
        tol = 1e-11
        h = pr.neumann_kernel_resolvent(seq, lam, tol=tol)
        direct = np.linalg.solve(
            lam * np.eye(60) - split.remainder.operator_matrix(), k.entries
        )
        measured = np.abs(h.entries - direct).max()
        assert measured < 10 * tol * max(1.0, np.abs(h.entries).max())

    def test_rejects_lambda_below_norm(self, symmetric_split):
        seq = pr.build_corrected_kernels(symmetric_split, 2)
        with pytest.raises(NotConvergentError):
            pr.neumann_kernel_resolvent(seq, 0.5, tol=1e-10)

    def test_tail_bound_formula(self):
        assert pr.neumann_tail_bound(1.0, 2.0, 3) == pytest.approx((0.5**5) / 0.5)
        assert pr.neumann_tail_bound(2.0, 2.0, 3) == np.inf


class TestSubtractionIdentity:
    def test_constant_kernel(self, constant_unit):
        seq = pr.build_corrected_kernels(split_for(constant_unit), 2)
        report = pr.verify_resolvent_identity(seq, 2.0)
        assert report.relative_residual <= 1e-12

    def test_symmetric_2x2_at_five(self, symmetric_split):
        seq = pr.build_corrected_kernels(symmetric_split, 4)
        report = pr.verify_resolvent_identity(seq, 5.0)
        assert report.residual < 1e-10

    def test_random_kernel_at_twice_norm(self):
        rng = np.random.default_rng(64)
        sp = pr.make_counting_space(40)
        k = random_positive_kernel(sp, rng)
        seq = pr.build_corrected_kernels(split_for(k), 2)
        lam = 2.0 * k.weighted_inf_norm()
        report = pr.verify_resolvent_identity(seq, lam)
        assert report.relative_residual <= 1e-9


class TestBellPolynomial:
    def test_single_block(self):
        for q in range(1, 6):
            assert pr.bell_polynomial(1, q, list(range(1, q + 1))) == q

    def test_two_blocks_of_two(self):
        # only composition of 2 into two parts is (1, 1)
        assert pr.bell_polynomial(2, 2, [3.0]) == pytest.approx(9.0)

    def test_two_blocks_of_three(self):
        # compositions (1,2) and (2,1)
        assert pr.bell_polynomial(2, 3, [2.0, 5.0]) == pytest.approx(2 * 2.0 * 5.0)

    def test_rejects_p_above_q(self):
        with pytest.raises(ValueError):
            pr.bell_polynomial(3, 2, [1.0])

    def test_exact_match_with_bruteforce_small_integers(self):
        rng = np.random.default_rng(65)
        for q in range(1, 9):
            for p in range(1, q + 1):
                b = [int(x) for x in rng.integers(1, 4, size=q - p + 1)]
                fast = pr.bell_polynomial(p, q, b)
                slow = pr.bell_polynomial_bruteforce(p, q, b)
                assert fast == slow  # exact integer arithmetic

    def test_counts_compositions_when_b_is_ones(self):
        # with all b_j = 1 the value is the number of compositions C(q-1, p-1)
        from math import comb

        for q in range(1, 9):
            for p in range(1, q + 1):
                assert pr.bell_polynomial(p, q, [1] * (q - p + 1)) == comb(q - 1, p - 1)


class TestExpansionVerification:
    def test_oracles_confirm_recursion_2x2(self, symmetric_split):
        seq = pr.build_corrected_kernels(symmetric_split, 6)
        for n in (1, 2, 3, 4):
            report = pr.verify_bell_expansion(seq, n)
            assert report.bruteforce_error <= 1e-10
            assert report.bell_form_error <= 1e-10

    def test_oracles_confirm_recursion_5x5(self):
        rng = np.random.default_rng(66)
        sp = pr.make_counting_space(5)
        k = random_positive_kernel(sp, rng)
        seq = pr.build_corrected_kernels(split_for(k), 6)
        scale = max(1.0, max(np.abs(kk.entries).max() for kk in seq.kernels))
        for n in (1, 2, 3, 4):
            report = pr.verify_bell_expansion(seq, n)
            assert report.bruteforce_error <= 1e-10 * scale
            assert report.bell_form_error <= 1e-10 * scale

    def test_interval_space_oracles(self):
        rng = np.random.default_rng(67)
        sp = pr.make_interval_space(0, 1, 12, "midpoint")
        k = random_positive_kernel(sp, rng)
        seq = pr.build_corrected_kernels(split_for(k), 4)
        report = pr.verify_bell_expansion(seq, 3)
        assert report.bruteforce_error <= 1e-9
        assert report.bell_form_error <= 1e-9

    def test_variant_convention_disagrees_and_is_pinpointed(self, symmetric_split):
        # the index-shifted variant cannot reproduce the recursion; the
        # report must say so and locate the mismatch rather than patch it
        seq = pr.build_corrected_kernels(symmetric_split, 6)
        report = pr.verify_bell_expansion(seq, 3)
        assert not report.matches_variant
        assert report.max_abs_error > 1.0
        assert report.leading_term_error > 0
        assert report.first_failing is not None
        assert report.first_failing[0] == 3
        assert "disagrees" in report.note

    def test_zero_remainder_variant_also_nonzero(self, constant_unit):
        # even in the fully collapsing case the variant leading index is off
        seq = pr.build_corrected_kernels(split_for(constant_unit), 3)
        for n in (1, 2):
            report = pr.verify_bell_expansion(seq, n)
            assert report.bruteforce_error <= 1e-12
            assert report.bell_form_error <= 1e-12

    def test_caps(self, symmetric_split):
        seq = pr.build_corrected_kernels(symmetric_split, 8)
        with pytest.raises(ValueError):
            pr.verify_bell_expansion(seq, 7)
        with pytest.raises(ValueError):
            pr.verify_bell_expansion(seq, 0)


class TestSeriesStructureSharing:
    def test_kernel_series_column_matches_eigen_series_terms(self, symmetric_2x2):
        # the corrected kernels applied to the profile reproduce the
        # vector iterates behind the eigenfunction series
        split = split_for(symmetric_2x2)
        seq = pr.build_corrected_kernels(split, 6)
        ev = pr.BirmanSchwingerEvaluator(split)
        lam0 = pr.find_dominant(ev)
        term_norms = pr.series_term_norms(ev, lam0, 6)
        rem_op = split.remainder.operator_matrix()
        vec = split.certificate.profile.values.copy()
        for n in range(6):
            assert term_norms[n] == pytest.approx(
                np.max(np.abs(vec)) / lam0 ** (n + 1), rel=1e-12
            )
            vec = rem_op @ vec

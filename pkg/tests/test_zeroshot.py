import numpy as np
import pytest

from agc.errors import BadLabel, DimMismatch, DuplicateName, ZeroNorm
from agc.sphere import geodesic_point, normalize
from agc.zeroshot import (
    build_text_bank,
    margin,
    margin_directional_derivative,
    predict,
    runner_up,
)


def axis_bank(d=2, names=None):
    feats = np.eye(d)
    return build_text_bank(feats, names or [f"c{i}" for i in range(d)])


def random_bank(rng, c=16, d=32):
    return build_text_bank(rng.standard_normal((c, d)), [f"c{i}" for i in range(c)])


class TestBuildTextBank:
    def test_rows_normalized_order_preserved(self):
        bank = build_text_bank([[2.0, 0.0], [0.0, 3.0]], ["a", "b"])
        np.testing.assert_allclose(bank.features, np.eye(2), atol=1e-15)
        assert bank.names == ("a", "b")

    def test_zero_row_reports_index(self):
        with pytest.raises(ZeroNorm) as exc:
            build_text_bank([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]], ["a", "b", "c"])
        assert exc.value.row == 1

    def test_unit_rows_unchanged(self):
        rng = np.random.default_rng(0)
        rows = rng.standard_normal((4, 8))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        bank = build_text_bank(rows, list("abcd"))
        np.testing.assert_allclose(bank.features, rows, atol=1e-15)

    def test_duplicate_names_rejected(self):
        with pytest.raises(DuplicateName):
            build_text_bank(np.eye(3), ["a", "b", "a"])

    def test_needs_two_classes(self):
        with pytest.raises(DimMismatch):
            build_text_bank(np.ones((1, 4)), ["solo"])


class TestPredict:
    def test_exact_match_has_similarity_one(self):
        rng = np.random.default_rng(1)
        bank = random_bank(rng)
        pred = predict(bank.features[2], bank)
        assert pred.class_index == 2
        assert pred.similarities[2] == pytest.approx(1.0, abs=1e-12)

    def test_tie_breaks_to_lowest_index(self):
        bank = axis_bank(2)
        pred = predict(normalize([1.0, 1.0]), bank)
        assert pred.class_index == 0

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(2)
        bank = random_bank(rng, c=16, d=32)
        for _ in range(50):
            z = normalize(rng.standard_normal(32))
            best = max(range(16), key=lambda c: z @ bank.features[c])
            assert predict(z, bank).class_index == best

    def test_invariant_to_prenormalization_scale(self):
        rng = np.random.default_rng(3)
        bank = random_bank(rng, c=8, d=16)
        v = rng.standard_normal(16)
        assert predict(normalize(v), bank).class_index == predict(normalize(17.3 * v), bank).class_index

    def test_dim_mismatch(self):
        bank = axis_bank(2)
        with pytest.raises(DimMismatch):
            predict([1.0, 0.0, 0.0], bank)


class TestMargin:
    def test_axis_example(self):
        bank = axis_bank(2)
        assert margin([1.0, 0.0], bank, 0) == pytest.approx(1.0, abs=1e-15)

    def test_symmetric_point_is_zero(self):
        bank = axis_bank(2)
        assert margin(normalize([1.0, 1.0]), bank, 0) == pytest.approx(0.0, abs=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        bank = random_bank(rng)
        for _ in range(50):
            z = normalize(rng.standard_normal(32))
            y = int(rng.integers(16))
            sims = bank.features @ z
            expected = sims[y] - max(s for j, s in enumerate(sims) if j != y)
            assert margin(z, bank, y) == pytest.approx(expected, abs=1e-12)

    def test_positive_margin_implies_prediction(self):
        rng = np.random.default_rng(5)
        bank = random_bank(rng)
        for _ in range(100):
            z = normalize(rng.standard_normal(32))
            y = int(rng.integers(16))
            if margin(z, bank, y) > 0:
                assert predict(z, bank).class_index == y

    def test_bad_label(self):
        bank = axis_bank(2)
        with pytest.raises(BadLabel):
            margin([1.0, 0.0], bank, 2)


class TestRunnerUp:
    def test_two_classes(self):
        bank = axis_bank(2)
        assert runner_up([1.0, 0.0], bank, 0) == 1
        assert runner_up([1.0, 0.0], bank, 1) == 0

    def test_tie_breaks_low(self):
        bank = axis_bank(3)
        assert runner_up([1.0, 0.0, 0.0], bank, 0) == 1

    def test_matches_brute_force(self):
        rng = np.random.default_rng(6)
        bank = random_bank(rng)
        for _ in range(50):
            z = normalize(rng.standard_normal(32))
            y = int(rng.integers(16))
            sims = bank.features @ z
            expected = max((j for j in range(16) if j != y), key=lambda j: (sims[j], -j))
            assert runner_up(z, bank, y) == expected


class TestMarginDirectionalDerivative:
    def test_orthogonal_tangent_gives_zero(self):
        bank = axis_bank(4)
        z = normalize([1.0, 0.5, 0.0, 0.0])
        u = np.array([0.0, 0.0, 0.0, 1.0])  # orthogonal to z, t_y and the runner-up
        assert margin_directional_derivative(z, u, bank, 0) == pytest.approx(0.0, abs=1e-15)

    def test_planar_hand_value(self):
        # z midway between the two axis prototypes, tangent toward e1:
        # derivative = u.e1 - u.e2 = sin(pi/4) + cos(pi/4) = sqrt(2).
        bank = axis_bank(2)
        z = np.array([np.cos(np.pi / 4), np.sin(np.pi / 4)])
        u = np.array([np.sin(np.pi / 4), -np.cos(np.pi / 4)])
        assert margin_directional_derivative(z, u, bank, 0) == pytest.approx(np.sqrt(2), abs=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        h = 1e-5
        checked = 0
        while checked < 200:
            bank = random_bank(rng)
            z = normalize(rng.standard_normal(32))
            y = int(rng.integers(16))
            sims = np.delete(bank.features @ z, y)
            top2 = np.sort(sims)[-2:]
            if top2[1] - top2[0] < 1e-3:
                continue  # runner-up unstable; derivative of the active piece undefined
            checked += 1
            g = rng.standard_normal(32)
            u = normalize(g - (g @ z) * z)
            analytic = margin_directional_derivative(z, u, bank, y)
            fd = (margin(geodesic_point(z, u, h), bank, y) - margin(z, bank, y)) / h
            assert analytic == pytest.approx(fd, abs=1e-4)

    def test_orthogonal_transform_invariance(self):
        rng = np.random.default_rng(8)
        d = 16
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        q = q * np.sign(np.diag(r))
        raw = rng.standard_normal((6, d))
        bank = build_text_bank(raw, list("abcdef"))
        bank_q = build_text_bank(raw @ q.T, list("abcdef"))
        z = normalize(rng.standard_normal(d))
        g = rng.standard_normal(d)
        u = normalize(g - (g @ z) * z)
        assert margin(z, bank, 2) == pytest.approx(margin(q @ z, bank_q, 2), abs=1e-6)
        assert margin_directional_derivative(z, u, bank, 2) == pytest.approx(
            margin_directional_derivative(q @ z, q @ u, bank_q, 2), abs=1e-6
        )

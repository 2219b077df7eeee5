import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfsqrc.dfs import build_singlet_basis, singlet_projectors
from dfsqrc.errors import DimensionError, DomainError, FitError, NumericalError, ValidationError
from dfsqrc.readout import (
    FeatureVector,
    ReadoutModel,
    classify,
    fit,
    population_features,
    relative_error,
    reservoir_features,
    singlet_features,
)
from dfsqrc.states import random_density_matrix


@pytest.fixture(scope="module")
def basis():
    return build_singlet_basis(6)


def fv(values, kind="singlet"):
    return FeatureVector(np.asarray(values, dtype=float), kind)


class TestFeatures:
    def test_maximally_mixed(self, basis):
        f = singlet_features(np.eye(64) / 64, basis)
        np.testing.assert_allclose(f.values, 1 / 64, atol=1e-15)
        assert f.basis_kind == "singlet"

    def test_basis_state(self, basis):
        v = basis.vectors[:, 2]
        f = singlet_features(np.outer(v, v.conj()), singlet_projectors(basis))
        np.testing.assert_allclose(f.values, np.eye(5)[2], atol=1e-12)

    def test_computational_state(self, basis):
        rho = np.zeros((64, 64))
        rho[0b000111, 0b000111] = 1
        f = singlet_features(rho, basis)
        np.testing.assert_allclose(f.values, np.abs(basis.vectors[0b000111]) ** 2, atol=1e-15)
        assert f.values.sum() <= 1

    def test_populations(self):
        ground = np.zeros((64, 64))
        ground[0, 0] = 1
        np.testing.assert_array_equal(population_features(ground).values, 0)
        top = np.zeros((64, 64))
        top[-1, -1] = 1
        np.testing.assert_array_equal(population_features(top).values, 1)

    def test_decoupled_steady_state(self):
        single = np.diag([2 / 3, 1 / 3])
        rho = single
        for _ in range(5):
            rho = np.kron(rho, single)
        np.testing.assert_allclose(reservoir_features(rho, "population").values, 1 / 3, atol=1e-14)

    def test_bounds_on_random_states(self, rng, basis):
        for _ in range(20):
            rho = random_density_matrix(rng, 64)
            assert singlet_features(rho, basis).violations() == []
            assert population_features(rho).violations() == []

    def test_imaginary_residue_rejected(self, basis):
        bad = np.eye(64) / 64 + 1e-6j * np.diag(np.arange(64))
        with pytest.raises(NumericalError):
            singlet_features(bad, basis)

    def test_shape_checks(self, basis):
        with pytest.raises(DimensionError):
            singlet_features(np.eye(16) / 16, basis)
        with pytest.raises(DomainError):
            fv([0.1], "other")

    def test_violations(self):
        assert fv([0.6, 0.6, 0, 0, 0]).violations() == ["singlet_sum"]
        assert "feature_range" in fv([-0.1] * 6, "population").violations()


class TestFit:
    def test_two_points(self):
        m = fit([fv([0.1], "population"), fv([0.9], "population")], [0, 1])
        assert m.predict(fv([0.1], "population")) == pytest.approx(0, abs=1e-9)
        assert m.predict(fv([0.9], "population")) == pytest.approx(1, abs=1e-9)

    def test_contradictory_labels(self):
        m = fit([fv([0.4, 0.2]), fv([0.4, 0.2])], [0, 1])
        assert m.predict(fv([0.4, 0.2])) == pytest.approx(0.5)

    def test_rank_deficient(self, rng):
        x = rng.uniform(size=(6, 1))
        feats = [fv(np.concatenate([r, r, 2 * r])) for r in x]
        m = fit(feats, [0, 1] * 3)
        assert np.all(np.isfinite(m.weights))

    def test_matches_least_squares_oracle(self, rng):
        x = rng.uniform(size=(40, 5))
        y = rng.integers(0, 2, 40)
        y[:2] = [0, 1]
        m = fit([fv(r) for r in x], y)
        design = np.hstack([x, np.ones((40, 1))])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        np.testing.assert_allclose(m.weights, coef[:5], atol=1e-10)
        assert m.bias == pytest.approx(coef[5], abs=1e-10)

    def test_no_intercept(self, rng):
        x = rng.uniform(size=(10, 3))
        y = np.array([0, 1] * 5)
        m = fit([fv(r, "population") for r in x], y, intercept=False)
        coef, *_ = np.linalg.lstsq(x, y, rcond=None)
        np.testing.assert_allclose(m.weights, coef, atol=1e-12)
        assert m.bias == 0

    def test_ridge_shrinks(self, rng):
        x = rng.uniform(size=(10, 5))
        y = [0, 1] * 5
        feats = [fv(r) for r in x]
        plain, ridged = fit(feats, y), fit(feats, y, ridge=1.0)
        assert np.linalg.norm(ridged.weights) < np.linalg.norm(plain.weights)
        assert ridged.ridge == 1.0

    def test_invariant_under_feature_remixing(self, rng):
        x = rng.uniform(size=(30, 5))
        y = [0, 1] * 15
        mix = rng.standard_normal((5, 5))
        a = fit([fv(r) for r in x], y)
        b = fit([fv(mix @ r) for r in x], y)
        probe = rng.uniform(size=(10, 5))
        np.testing.assert_allclose([a.predict(fv(r)) for r in probe], [b.predict(fv(mix @ r)) for r in probe], atol=1e-9)

    @pytest.mark.parametrize(
        "feats,labels",
        [
            ([fv([0.1]), fv([0.2])], [1, 1]),
            ([fv([0.1])], [1]),
            ([fv([0.1]), fv([0.2], "population")], [0, 1]),
            ([fv([0.1]), fv([0.2])], [0, 2]),
            ([fv([0.1]), fv([0.2])], [0]),
        ],
    )
    def test_errors(self, feats, labels):
        with pytest.raises(FitError):
            fit(feats, labels)

    def test_negative_ridge(self):
        with pytest.raises(FitError):
            fit([fv([0.1]), fv([0.2])], [0, 1], ridge=-1)


class TestClassify:
    def test_constant_model(self):
        m = ReadoutModel(np.zeros(5), 1.0, "singlet")
        assert classify(m, fv([0.3] * 5)) == 1

    def test_tie_goes_to_one(self):
        m = ReadoutModel(np.array([1.0]), 0.0, "population")
        assert m.classify(fv([0.5], "population")) == 1
        assert m.classify(fv([0.5 - 1e-12], "population")) == 0

    def test_monotone(self):
        m = ReadoutModel(np.array([2.0, -1.0]), -0.2, "population")
        prev = 0
        for x in np.linspace(0, 1, 50):
            c = m.classify(fv([x, 0.3], "population"))
            assert c >= prev
            prev = c

    def test_basis_mismatch(self):
        m = ReadoutModel(np.zeros(5), 1.0, "singlet")
        with pytest.raises(DomainError):
            m.classify(fv([0.1] * 5, "population"))
        with pytest.raises(DimensionError):
            m.classify(fv([0.1] * 4))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            ReadoutModel(np.array([np.nan]), 0.0, "singlet")

    def test_text_round_trip(self):
        m = ReadoutModel(np.array([0.1, -2.5, 1 / 3]), 0.7, "population", 0.5, 1e-3, {"seed": 5, "run": 2})
        back = ReadoutModel.from_text(m.to_text())
        np.testing.assert_array_equal(back.weights, m.weights)
        assert (back.bias, back.basis_kind, back.threshold, back.ridge, back.seeds) == (
            m.bias,
            m.basis_kind,
            m.threshold,
            m.ridge,
            m.seeds,
        )


class TestRelativeError:
    model = ReadoutModel(np.array([1.0]), 0.0, "population")

    def test_all_correct(self):
        assert relative_error(self.model, [fv([0.9], "population"), fv([0.1], "population")], [1, 0]) == 0

    def test_all_wrong(self):
        assert relative_error(self.model, [fv([0.9], "population"), fv([0.1], "population")], [0, 1]) == 1

    def test_half(self):
        feats = [fv([0.9], "population")] * 10
        assert relative_error(self.model, feats, [1] * 5 + [0] * 5) == 0.5

    def test_empty(self):
        with pytest.raises(DomainError):
            relative_error(self.model, [], [])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 30))
def test_training_error_beats_chance_and_permutation_invariance(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, 5))
    y = np.array([i % 2 for i in range(n)])
    feats = [fv(r) for r in x]
    m = fit(feats, y)
    assert relative_error(m, feats, y) <= 0.5
    perm = rng.permutation(5)
    mp = fit([fv(r[perm]) for r in x], y)
    probe = rng.uniform(size=(20, 5))
    pa = np.array([m.predict(fv(r)) for r in probe])
    pb = np.array([mp.predict(fv(r[perm])) for r in probe])
    np.testing.assert_allclose(pa, pb, atol=1e-8)
    # classification agrees wherever the margin exceeds round-off
    clear = np.abs(pa - 0.5) > 1e-8
    assert np.array_equal(pa[clear] >= 0.5, pb[clear] >= 0.5)

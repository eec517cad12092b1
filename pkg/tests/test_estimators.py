import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import iwkb
from iwkb.errors import DomainError
from iwkb.estimators import IWKBProfiler, PiecewiseFitter, TransferMatrixScatterer


class TestPiecewiseFitter:
    def test_fit_predict_round_trip(self):
        xs = np.linspace(-5.0, 25.0, 120)
        vs = 0.42 + 0.31 * np.exp(-xs / 6.5)
        est = PiecewiseFitter(form="exponential", knots=[]).fit(xs, vs)
        assert np.max(np.abs(est.predict(xs) - vs)) <= 1e-8
        assert est.model_.segments[0].c == pytest.approx(6.5, rel=1e-6)

    def test_column_vector_input(self):
        xs = np.linspace(0.0, 9.0, 30)
        est = PiecewiseFitter(form="quadratic", knots=[]).fit(
            xs.reshape(-1, 1), np.full(30, 0.25)
        )
        assert est.predict([[1.0], [2.0]]) == pytest.approx([0.25, 0.25], abs=1e-10)

    def test_sklearn_protocol(self):
        est = PiecewiseFitter(form="quadratic", tol_fit=1e-4)
        params = est.get_params()
        assert params["form"] == "quadratic"
        assert params["tol_fit"] == 1e-4
        cloned = clone(est)
        assert cloned.get_params() == params
        est.set_params(form="exponential")
        assert est.form == "exponential"

    def test_not_fitted_guard(self):
        with pytest.raises(NotFittedError):
            PiecewiseFitter().predict([1.0])


class TestIWKBProfiler:
    def test_fit_on_model_with_values(self, ref_model):
        est = IWKBProfiler(far_field=(0.299, 0.701)).fit(ref_model)
        t = est.predict([-50.0, 310.0])
        assert t[0] == pytest.approx(1.0, abs=1e-10)
        assert t[1] == pytest.approx(0.299, abs=1e-10)

    def test_transform_columns(self, ref_model):
        est = IWKBProfiler(far_field=(0.299, 0.701)).fit(ref_model)
        cols = est.transform(np.linspace(-50.0, 310.0, 19))
        assert cols.shape == (19, 3)
        ok = ~np.isnan(cols[:, 0])
        assert np.allclose(cols[ok, 0] + cols[ok, 1], 1.0, atol=1e-10)

    def test_fit_from_samples(self):
        # gentle saturating ramp below the energy, fitted then profiled
        xs = np.linspace(-80.0, 80.0, 600)
        vs = 0.3 / (1.0 + np.exp(-xs / 12.0))
        est = IWKBProfiler(
            energy=0.64, far_field="oracle", knots="auto", tol_fit=5e-4,
            oracle_tol=1e-8,
        ).fit(xs, vs)
        t = est.predict([0.0])
        assert 0.0 < t[0] <= 1.0
        assert est.constants_.t_far == pytest.approx(1.0, abs=1e-3)

    def test_energy_required_for_samples(self):
        with pytest.raises(DomainError):
            IWKBProfiler().fit(np.linspace(0, 1, 10), np.zeros(10))

    def test_sklearn_protocol(self):
        est = IWKBProfiler(energy=0.64, far_field=(0.3, 0.7))
        cloned = clone(est)
        assert cloned.get_params()["energy"] == 0.64
        with pytest.raises(NotFittedError):
            est.predict([0.0])


class TestTransferMatrixScatterer:
    def test_transmission_curve(self):
        xs = np.linspace(-2.0, 3.0, 500)
        vs = np.where((xs >= 0.0) & (xs <= 1.0), 1.0, 0.0)
        est = TransferMatrixScatterer(n_steps=2048).fit(xs, vs)
        t = est.predict(np.array([0.3, 0.5, 0.8]))
        assert t.shape == (3,)
        assert np.all(np.diff(t) > 0)  # higher energy tunnels more

    def test_scalar_energy(self):
        xs = np.linspace(0.0, 10.0, 50)
        est = TransferMatrixScatterer(n_steps=64).fit(xs, np.zeros(50))
        assert est.predict(0.64) == pytest.approx(1.0, abs=1e-12)

    def test_converged_mode(self):
        # barrier cases refine at O(1/N): ask for a realistic tolerance
        xs = np.linspace(-15.0, 15.0, 400)
        vs = 1.0 - 0.01 * xs**2
        est = TransferMatrixScatterer(tol=1e-5).fit(xs, vs)
        t = est.predict(0.9)
        assert t == pytest.approx(0.04253, abs=5e-4)

    def test_sklearn_protocol(self):
        est = TransferMatrixScatterer(n_steps=128, tol=1e-6)
        assert clone(est).get_params() == est.get_params()
        with pytest.raises(NotFittedError):
            est.predict(1.0)


class TestPackageSurface:
    def test_version(self):
        assert iwkb.__version__ == "0.1.0"

    def test_main_exports(self):
        for name in (
            "kerr_dirac_model", "solve_boundary_constants", "coefficient_profile",
            "transfer_matrix_scatter", "fit_piecewise", "PiecewiseFitter",
            "IWKBProfiler", "TransferMatrixScatterer",
        ):
            assert hasattr(iwkb, name)

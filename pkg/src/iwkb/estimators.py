"""scikit-learn style estimators wrapping the functional core.

These make the solvers composable with pipelines and parameter search:
constructor arguments are stored verbatim, ``fit`` learns trailing-
underscore attributes and returns ``self``, and get_params/set_params
come from ``sklearn.base.BaseEstimator``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .core import coefficient_profile, solve_boundary_constants
from .errors import DomainError
from .fitting import fit_piecewise
from .piecewise import PiecewiseModel
from .potentials import TabulatedPotential
from .steps import converge_scatter, discretize_to_steps, transfer_matrix_scatter

__all__ = ["PiecewiseFitter", "IWKBProfiler", "TransferMatrixScatterer"]


def _as_1d(X, name="X"):
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DomainError(f"{name} must be 1-D coordinates (or a column vector)")
    return arr


class PiecewiseFitter(BaseEstimator, RegressorMixin):
    """Regressor fitting a piecewise segment model to potential samples.

    fit(X, y) takes sample coordinates and potential values; predict(X)
    evaluates the fitted model.  The fitted PiecewiseModel is available
    as ``model_`` and the fit diagnostics as ``report_``.
    """

    def __init__(self, form="exponential", knots="auto", tol_fit=1e-3,
                 continuity_weight=None, max_knots=24, energy=0.0):
        self.form = form
        self.knots = knots
        self.tol_fit = tol_fit
        self.continuity_weight = continuity_weight
        self.max_knots = max_knots
        self.energy = energy

    def fit(self, X, y):
        result = fit_piecewise(
            _as_1d(X), np.asarray(y, dtype=float).reshape(-1),
            knots=self.knots, form=self.form, energy=self.energy,
            tol_fit=self.tol_fit, continuity_weight=self.continuity_weight,
            max_knots=self.max_knots,
        )
        self.model_ = result.model
        self.report_ = result.report
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")
        return np.asarray(self.model_.potential(_as_1d(X)), dtype=float)


class IWKBProfiler(BaseEstimator):
    """Pointwise transmission/reflection estimator.

    fit(X, y) accepts either a PiecewiseModel directly (as X, with y
    ignored) or raw (coordinate, potential) samples, which are first
    replaced by a segment model.  Fitting solves the three boundary
    constants; predict(X) returns the transmission fraction at each
    coordinate (NaN where undefined) and transform(X) stacks
    [T, R, validity] columns.
    """

    def __init__(self, energy=None, far_field="oracle", x_min=None, x_far=None,
                 form="exponential", knots="auto", tol_fit=1e-3,
                 continuity_weight=None, oracle_tol=1e-8):
        self.energy = energy
        self.far_field = far_field
        self.x_min = x_min
        self.x_far = x_far
        self.form = form
        self.knots = knots
        self.tol_fit = tol_fit
        self.continuity_weight = continuity_weight
        self.oracle_tol = oracle_tol

    def fit(self, X, y=None):
        if isinstance(X, PiecewiseModel):
            model = X
            if self.energy is not None and self.energy != model.energy:
                from dataclasses import replace

                model = replace(model, energy=float(self.energy), u_offsets=None)
        else:
            if y is None:
                raise DomainError("y (potential samples) required unless X is a model")
            if self.energy is None:
                raise DomainError("energy is required when fitting from samples")
            model = fit_piecewise(
                _as_1d(X), np.asarray(y, dtype=float).reshape(-1),
                knots=self.knots, form=self.form, energy=float(self.energy),
                tol_fit=self.tol_fit, continuity_weight=self.continuity_weight,
            ).model

        if self.far_field == "oracle":
            scat = converge_scatter(
                model, model.energy, model.x_min, model.x_max, tol=self.oracle_tol
            )
            t_far, r_far = scat.T, scat.R
            prov = {"far_field": f"oracle (n={scat.n_cells})"}
        else:
            t_far, r_far = (float(v) for v in self.far_field)
            prov = {"far_field": "given values"}
        self.model_ = model
        self.constants_ = solve_boundary_constants(
            model, t_far, r_far, x_min=self.x_min, x_far=self.x_far,
            provenance=prov,
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "constants_"):
            raise NotFittedError("call fit before predict/transform")

    def profile(self, X):
        self._check_fitted()
        return coefficient_profile(self.model_, self.constants_, _as_1d(X))

    def predict(self, X):
        return self.profile(X).T

    def transform(self, X):
        prof = self.profile(X)
        return np.column_stack([prof.T, prof.R, prof.validity])


class TransferMatrixScatterer(BaseEstimator):
    """Transmission-versus-energy estimator backed by the step solver.

    fit(X, y) tabulates the potential from samples (monotone cubic
    between them); predict(E) returns the transmission coefficient for
    each energy, either at a fixed cell count (n_steps) or converged by
    cell doubling (n_steps=None).
    """

    def __init__(self, n_steps=None, tol=1e-8, x_min=None, x_max=None):
        self.n_steps = n_steps
        self.tol = tol
        self.x_min = x_min
        self.x_max = x_max

    def fit(self, X, y):
        x = _as_1d(X)
        order = np.argsort(x, kind="stable")
        self.potential_ = TabulatedPotential(x[order],
                                             np.asarray(y, dtype=float).reshape(-1)[order])
        lo, hi = self.potential_.domain
        self.x_min_ = lo if self.x_min is None else float(self.x_min)
        self.x_max_ = hi if self.x_max is None else float(self.x_max)
        return self

    def predict(self, E):
        if not hasattr(self, "potential_"):
            raise NotFittedError("call fit before predict")
        energies = np.atleast_1d(np.asarray(E, dtype=float))
        out = np.empty_like(energies)
        for i, energy in enumerate(energies):
            if self.n_steps is not None:
                steps = discretize_to_steps(
                    self.potential_, int(self.n_steps), self.x_min_, self.x_max_
                )
                out[i] = transfer_matrix_scatter(steps, energy).T
            else:
                out[i] = converge_scatter(
                    self.potential_, energy, self.x_min_, self.x_max_, tol=self.tol
                ).T
        return out if np.ndim(E) else float(out[0])

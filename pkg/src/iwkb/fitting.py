"""Least-squares replacement of sampled potentials by segment models.

Fits quadratic or exponential segments between knots, with an optional
soft value-continuity constraint at interior knots.  Knots can be given
or inserted greedily until the worst residual drops below tolerance.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError
from .piecewise import PiecewiseModel, Segment
from .validation import as_float_array

__all__ = ["FitReport", "FitResult", "fit_piecewise"]

_MIN_SAMPLES = 3
_EXP_CLIP = 600.0


@dataclass(frozen=True)
class FitReport:
    """Fit quality summary: per-knot mismatches and residual sizes."""

    knots: tuple
    knot_value_mismatch: tuple
    knot_slope_mismatch: tuple
    max_residual: float
    rms_residual: float
    continuity_weight: float


@dataclass(frozen=True)
class FitResult:
    model: PiecewiseModel
    report: FitReport


def _segment_masks(x, bounds):
    masks = []
    for i, (lo, hi) in enumerate(zip(bounds, bounds[1:])):
        if i == len(bounds) - 2:
            masks.append((x >= lo) & (x <= hi))
        else:
            masks.append((x >= lo) & (x < hi))
    return masks


def _exp_basis(x, c):
    return np.exp(np.clip(-x / c, -_EXP_CLIP, _EXP_CLIP))


def _fit_exponential_segment(xs, vs):
    """Independent (a, b, c) fit of V = a + b exp(-x/c) on one segment."""
    spread = float(vs.max() - vs.min())
    scale = max(float(np.abs(vs).max()), 1.0)
    if spread <= 1e-13 * scale:
        return float(vs.mean()), 0.0, 1.0
    span = xs[-1] - xs[0]
    best = None
    for mag in np.geomspace(span / 200.0, span * 50.0, 24):
        for c in (mag, -mag):
            basis = np.column_stack([np.ones_like(xs), _exp_basis(xs, c)])
            coef, *_ = np.linalg.lstsq(basis, vs, rcond=None)
            resid = basis @ coef - vs
            sse = float(resid @ resid)
            if best is None or sse < best[0]:
                best = (sse, float(coef[0]), float(coef[1]), float(c))

    def fun(p):
        return p[0] + p[1] * _exp_basis(xs, p[2]) - vs

    with np.errstate(over="ignore", invalid="ignore"):
        sol = least_squares(
            fun, np.array(best[1:]), method="trf",
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000,
        )
    if not np.all(np.isfinite(sol.x)):
        raise FitError("exponential segment fit diverged")
    return tuple(float(v) for v in sol.x)


def _fit_quadratic_independent(xs, vs):
    basis = np.column_stack([np.ones_like(xs), xs, xs * xs])
    coef, *_ = np.linalg.lstsq(basis, vs, rcond=None)
    return tuple(float(v) for v in coef)


def _fit_quadratic_global(x, v, masks, knots, weight):
    """One linear solve for all segments plus weighted continuity rows."""
    nseg = len(masks)
    rows = []
    rhs = []
    for i, mask in enumerate(masks):
        xs = x[mask]
        block = np.zeros((xs.size, 3 * nseg))
        block[:, 3 * i] = 1.0
        block[:, 3 * i + 1] = xs
        block[:, 3 * i + 2] = xs * xs
        rows.append(block)
        rhs.append(v[mask])
    for i, xk in enumerate(knots):
        row = np.zeros((1, 3 * nseg))
        row[0, 3 * i: 3 * i + 3] = weight * np.array([1.0, xk, xk * xk])
        row[0, 3 * (i + 1): 3 * (i + 1) + 3] = -weight * np.array([1.0, xk, xk * xk])
        rows.append(row)
        rhs.append(np.zeros(1))
    design = np.vstack(rows)
    target = np.concatenate(rhs)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return [tuple(float(c) for c in coef[3 * i: 3 * i + 3]) for i in range(nseg)]


def _fit_exponential_global(x, v, masks, knots, weight, init):
    """Joint nonlinear solve with weighted continuity residual rows."""
    nseg = len(masks)
    p0 = np.concatenate([np.asarray(p, dtype=float) for p in init])

    def fun(p):
        out = []
        for i, mask in enumerate(masks):
            a, b, c = p[3 * i: 3 * i + 3]
            out.append(a + b * _exp_basis(x[mask], c) - v[mask])
        for i, xk in enumerate(knots):
            a0, b0, c0 = p[3 * i: 3 * i + 3]
            a1, b1, c1 = p[3 * (i + 1): 3 * (i + 1) + 3]
            left = a0 + b0 * _exp_basis(np.array([xk]), c0)[0]
            right = a1 + b1 * _exp_basis(np.array([xk]), c1)[0]
            out.append(np.array([weight * (left - right)]))
        return np.concatenate(out)

    with np.errstate(over="ignore", invalid="ignore"):
        sol = least_squares(fun, p0, method="trf", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=8000)
    if not np.all(np.isfinite(sol.x)):
        raise FitError("joint exponential fit diverged")
    return [tuple(float(c) for c in sol.x[3 * i: 3 * i + 3]) for i in range(nseg)]


def _build_model(form, coeffs, bounds, energy):
    segments = []
    for (a, b, c), lo, hi in zip(coeffs, bounds, bounds[1:]):
        if form == "exponential" and c == 0.0:
            c = 1.0
        segments.append(Segment(form, a, b, c, float(lo), float(hi)))
    return PiecewiseModel(tuple(segments), energy=energy)


def _fit_once(x, v, knots, form, energy, weight):
    bounds = [float(x[0])] + [float(k) for k in knots] + [float(x[-1])]
    masks = _segment_masks(x, bounds)
    for i, mask in enumerate(masks):
        if mask.sum() < _MIN_SAMPLES:
            raise FitError(
                f"segment {i} on [{bounds[i]:.6g}, {bounds[i + 1]:.6g}] has "
                f"{int(mask.sum())} samples; need at least {_MIN_SAMPLES}"
            )
    if form == "quadratic":
        if weight > 0.0 and knots:
            coeffs = _fit_quadratic_global(x, v, masks, knots, weight)
        else:
            coeffs = [_fit_quadratic_independent(x[m], v[m]) for m in masks]
    elif form == "exponential":
        coeffs = [_fit_exponential_segment(x[m], v[m]) for m in masks]
        if weight > 0.0 and knots:
            coeffs = _fit_exponential_global(x, v, masks, knots, weight, coeffs)
    else:
        raise FitError(f"unknown segment form {form!r}")
    model = _build_model(form, coeffs, bounds, energy)
    resid = np.abs(model.potential(x) - v)
    return model, float(resid.max()), float(np.sqrt(np.mean(resid**2)))


def _report(model, max_resid, rms_resid, weight):
    mismatches = model.knot_mismatches()
    return FitReport(
        knots=tuple(m[0] for m in mismatches),
        knot_value_mismatch=tuple(m[1] for m in mismatches),
        knot_slope_mismatch=tuple(m[2] for m in mismatches),
        max_residual=max_resid,
        rms_residual=rms_resid,
        continuity_weight=weight,
    )


def fit_piecewise(x, v, knots=None, form="exponential", energy=0.0,
                  tol_fit=1e-3, continuity_weight=None, max_knots=24):
    """Fit a segment model to (x, V) samples.

    Parameters
    ----------
    x, v : array-like
        Samples; x need not be sorted (they are sorted together).
    knots : array-like, "auto", or None
        Interior knot coordinates.  "auto"/None inserts knots greedily
        at the worst-residual sample until max residual <= tol_fit.
    form : "exponential" or "quadratic"
    energy : float
        Total energy stored on the resulting model.
    tol_fit : float
        Target max residual (auto mode) and the continuity target for
        the default adaptive weight.
    continuity_weight : float or None
        Weight of the soft value-continuity rows at interior knots.
        0 fits segments independently (reproduces discontinuous
        tables); None escalates the weight until every knot mismatch
        is <= tol_fit.
    max_knots : int
        Cap for auto insertion.
    """
    x = as_float_array(x, "x")
    v = as_float_array(v, "V")
    if x.size != v.size:
        raise FitError("x and V lengths differ")
    order = np.argsort(x, kind="stable")
    x = x[order]
    v = v[order]
    if np.any(np.diff(x) <= 0):
        raise FitError("sample x values must be distinct")

    auto = knots is None or (isinstance(knots, str) and knots == "auto")
    if not auto:
        knot_list = sorted(float(k) for k in np.atleast_1d(knots))
        if knot_list and (knot_list[0] <= x[0] or knot_list[-1] >= x[-1]):
            raise FitError("knots must lie strictly inside the sample range")
        if len(set(knot_list)) != len(knot_list):
            raise FitError("duplicate knots")
    else:
        knot_list = []

    def solve(klist):
        if continuity_weight is not None:
            model, mx, rms = _fit_once(x, v, klist, form, energy, continuity_weight)
            return model, mx, rms, continuity_weight
        weight = 1.0
        best = None
        for _ in range(8):
            model, mx, rms = _fit_once(x, v, klist, form, energy, weight)
            jumps = [abs(j) for _, j, _ in model.knot_mismatches()]
            best = (model, mx, rms, weight)
            if not jumps or max(jumps) <= tol_fit:
                return best
            weight *= 10.0
        return best

    if not auto:
        model, mx, rms, weight = solve(knot_list)
        return FitResult(model, _report(model, mx, rms, weight))

    while True:
        model, mx, rms, weight = solve(knot_list)
        if mx <= tol_fit:
            return FitResult(model, _report(model, mx, rms, weight))
        if len(knot_list) >= max_knots:
            raise FitError(
                f"auto knot insertion hit max_knots={max_knots} with "
                f"max residual {mx:.3g} > tol_fit={tol_fit:.3g}"
            )
        resid = np.abs(model.potential(x) - v)
        cand = _next_knot(x, resid, knot_list)
        if cand is None:
            raise FitError(
                "cannot insert another knot without starving a segment "
                f"(max residual {mx:.3g} > tol_fit={tol_fit:.3g})"
            )
        knot_list = sorted(knot_list + [cand])


def _next_knot(x, resid, knot_list):
    """Greedy knot choice: split the worst segment at its residual-mass median.

    Splitting at the median of |residual| mass (clamped so both halves
    keep _MIN_SAMPLES samples) adapts to boundary-peaked residuals where
    splitting at the worst sample itself would starve a side.  Segments
    are tried worst-first; None when no segment can be split.
    """
    bounds = [float(x[0])] + list(knot_list) + [float(x[-1])]
    masks = _segment_masks(x, bounds)
    order = sorted(
        range(len(masks)),
        key=lambda i: float(resid[masks[i]].max()) if masks[i].any() else -1.0,
        reverse=True,
    )
    for i in order:
        idx = np.nonzero(masks[i])[0]
        if idx.size < 2 * _MIN_SAMPLES:
            continue
        weights = resid[idx]
        total = float(weights.sum())
        if total == 0.0:
            split = idx.size // 2
        else:
            split = int(np.searchsorted(np.cumsum(weights), 0.5 * total))
        split = min(max(split, _MIN_SAMPLES), idx.size - _MIN_SAMPLES)
        cand = float(x[idx[split]])
        if cand in knot_list or cand <= x[0] or cand >= x[-1]:
            continue
        return cand
    return None

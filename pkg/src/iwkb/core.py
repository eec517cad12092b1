"""Position-dependent reflection/transmission coefficients.

Applies the WKB amplitude split at every point of a piecewise model:
the forward/backward amplitudes become slowly varying functions of
position, normalized so the transmission and reflection fractions sum
to one everywhere they are defined.

Three scalar constants tie the profile to its boundary data:

- ``c``    splits the far-field amplitudes (A - B = c, A^2 + B^2 = k),
- ``c2``   cancels the reflected amplitude at the inner anchor,
- ``c1``   matches the far-field reflection coefficient back to its
           input value after the inner correction.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import (
    AmplitudeDomainError,
    DomainError,
    MatchingError,
    NormalizationError,
)
from .piecewise import ChainedEiconal
from .validation import check_grid, check_positive, check_probability_pair

__all__ = [
    "far_field_amplitudes",
    "solve_split_constant",
    "solve_inner_constant",
    "solve_far_matching_constant",
    "normalization_h",
    "modulated_amplitudes",
    "instantaneous_coefficients",
    "coefficients_expanded",
    "BoundaryConstants",
    "matching_residual",
    "solve_boundary_constants",
    "CoefficientProfile",
    "coefficient_profile",
    "wavefunction",
    "wavefunction_residual",
    "ValidityReport",
    "validity_report",
    "wkb_far_field",
]


def far_field_amplitudes(c, k):
    """Split amplitudes (A, B) with A - B = c and A^2 + B^2 = k.

    A = c/2 + sqrt(2k - c^2)/2,  B = -c/2 + sqrt(2k - c^2)/2.
    Requires 2k - c^2 >= 0.
    """
    c = np.asarray(c, dtype=float)
    k = np.asarray(k, dtype=float)
    arg = 2.0 * k - c * c
    if np.any(arg < 0.0):
        raise AmplitudeDomainError(
            f"2k - c^2 < 0 (k={k}, c={c}): amplitudes undefined"
        )
    half = 0.5 * np.sqrt(arg)
    a = 0.5 * c + half
    b = -0.5 * c + half
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


def solve_split_constant(t_far, r_far, k_far):
    """Far-field splitting constant c = sqrt(T k) - sqrt(R k)."""
    t_far, r_far = check_probability_pair(t_far, r_far)
    k_far = check_positive(k_far, "k_far")
    return math.sqrt(t_far * k_far) - math.sqrt(r_far * k_far)


def solve_inner_constant(c, k_inner):
    """Inner correction c2 = c/2 - sqrt(2 k_inner - c^2)/2.

    Chosen so the corrected reflected amplitude D vanishes exactly at
    the inner anchor, i.e. full transmission there.
    """
    arg = 2.0 * float(k_inner) - float(c) ** 2
    # rounding guard for the degenerate boundary c^2 == 2 k_inner
    if -4e-16 * max(1.0, 2.0 * float(k_inner)) <= arg < 0.0:
        arg = 0.0
    if arg < 0.0:
        raise AmplitudeDomainError(
            f"2 k_inner - c^2 = {arg} < 0: inner constant undefined"
        )
    return 0.5 * float(c) - 0.5 * math.sqrt(arg)


@dataclass(frozen=True)
class MatchingSolution:
    """Root of the far-field matching quadratic, with the road not taken."""

    c1: float
    c1_alt: float
    note: str


def solve_far_matching_constant(c, c2, k_far):
    """Far correction c1 from matching the reflection coefficient.

    Equates the corrected reflection coefficient b^2/k at the far anchor
    with its uncorrected value B^2/k, which makes the normalization
    satisfy h = k D^2 / B^2 there -- a quadratic in c1.  The root is
    chosen so h > 0 and the corrected forward amplitude keeps the sign
    of A at the far anchor; if both roots qualify, the smaller |c1|
    wins.  The choice is recorded in the returned note.
    """
    c = float(c)
    c2 = float(c2)
    k = float(k_far)
    arg = 2.0 * k - c * c
    if arg <= 0.0:
        raise AmplitudeDomainError(f"2 k_far - c^2 = {arg} <= 0")
    s = math.sqrt(arg)
    b_amp = -0.5 * c + 0.5 * s
    if abs(b_amp) <= 1e-9 * math.sqrt(k):
        # reflection-free far field: b = B = 0 holds for any c1; take the
        # uncorrected limit
        return MatchingSolution(
            0.0, float("nan"), "far reflection is zero; no correction applied"
        )
    d_amp = c2 + b_amp
    target = k * d_amp * d_amp / (b_amp * b_amp)

    lin = c + s
    const = 0.25 * c * c + (c2 - 0.5 * c) ** 2 + c2 * s + 0.5 * arg - target
    disc = lin * lin - 4.0 * const
    if disc < 0.0:
        raise MatchingError(
            f"matching quadratic has no real root (discriminant {disc})",
            discriminant=disc,
        )
    sq = math.sqrt(disc)
    # stable root pairing
    if lin >= 0.0:
        r1 = 0.5 * (-lin - sq)
    else:
        r1 = 0.5 * (-lin + sq)
    r2 = const / r1 if r1 != 0.0 else 0.5 * (-lin + sq)
    roots = sorted({r1, r2}, key=abs)

    a_amp = 0.5 * c + 0.5 * s
    viable = []
    for root in roots:
        h = normalization_h(c, root, c2, k)
        if h <= 0.0:
            continue
        fwd = root + a_amp
        if a_amp >= 0.0 and fwd < 0.0:
            continue
        if a_amp < 0.0 and fwd > 0.0:
            continue
        viable.append(root)
    if not viable:
        raise MatchingError(
            "no matching root with positive normalization and consistent "
            f"forward-amplitude sign (candidates {roots})",
            discriminant=disc,
        )
    chosen = viable[0]
    others = [r for r in roots if r != chosen]
    alt = others[0] if others else float("nan")
    note = (
        f"root {chosen:.6g} chosen out of {roots} "
        "(positive normalization, forward sign preserved, smallest |c1|)"
    )
    return MatchingSolution(float(chosen), float(alt), note)


def normalization_h(c, c1, c2, k):
    """Normalization h = C^2 + D^2 of the corrected amplitudes.

    h = (c1 + c/2)^2 + (c2 - c/2)^2 + (c1 + c2) sqrt(2k - c^2) + (2k - c^2)/2.
    """
    c = np.asarray(c, dtype=float)
    k = np.asarray(k, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    arg = 2.0 * k - c * c
    if np.any(arg < 0.0):
        raise AmplitudeDomainError(f"2k - c^2 < 0 (k={k}, c={c})")
    h = (
        (c1 + 0.5 * c) ** 2
        + (c2 - 0.5 * c) ** 2
        + (c1 + c2) * np.sqrt(arg)
        + 0.5 * arg
    )
    return float(h) if h.ndim == 0 else h


def modulated_amplitudes(c, c1, c2, k):
    """Corrected, renormalized amplitudes (a, b) with a^2 + b^2 = k."""
    h = np.asarray(normalization_h(c, c1, c2, k), dtype=float)
    if np.any(h <= 0.0):
        raise NormalizationError(f"normalization h = {h} is not positive")
    a_ff, b_ff = far_field_amplitudes(c, k)
    scale = np.sqrt(np.asarray(k, dtype=float) / h)
    a = (np.asarray(c1, dtype=float) + a_ff) * scale
    b = (np.asarray(c2, dtype=float) + b_ff) * scale
    if np.ndim(a) == 0:
        return float(a), float(b)
    return a, b


def instantaneous_coefficients(c, c1, c2, k):
    """Pointwise transmission/reflection (T, R) = (a^2/k, b^2/k)."""
    a, b = modulated_amplitudes(c, c1, c2, k)
    k = np.asarray(k, dtype=float)
    t = np.asarray(a) ** 2 / k
    r = np.asarray(b) ** 2 / k
    if t.ndim == 0:
        return float(t), float(r)
    return t, r


def coefficients_expanded(c, c1, c2, k):
    """(T, R) from the fully expanded closed forms.

    Independent code path from instantaneous_coefficients (no amplitude
    intermediates); the two agree to rounding.
    """
    c = np.asarray(c, dtype=float)
    k = np.asarray(k, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    arg = 2.0 * k - c * c
    if np.any(arg < 0.0):
        raise AmplitudeDomainError(f"2k - c^2 < 0 (k={k}, c={c})")
    h = normalization_h(c, c1, c2, k)
    root = np.sqrt(arg)
    t = (c1 + 0.5 * c) / h * (c1 + 0.5 * c + root) + arg / (4.0 * h)
    r = (c2 - 0.5 * c) / h * (c2 - 0.5 * c + root) + arg / (4.0 * h)
    if t.ndim == 0:
        return float(t), float(r)
    return t, r


# ---------------------------------------------------------------------------
# Boundary constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryConstants:
    """The three solved constants plus the anchors that determined them."""

    c: float
    c1: float
    c2: float
    k_inner: float
    k_far: float
    x_min: float
    x_far: float
    t_far: float
    r_far: float
    c1_alt: float = float("nan")
    c1_note: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        check_probability_pair(self.t_far, self.r_far, tol=1e-10)
        for name, k in (("k_inner", self.k_inner), ("k_far", self.k_far)):
            if 2.0 * k - self.c**2 < 0.0:
                raise AmplitudeDomainError(
                    f"2 {name} - c^2 < 0 for the solved constants"
                )

    def to_record(self):
        """Flat key/value record (stable key order) for emission."""
        rec = {
            "format": 1,
            "c": self.c,
            "c1": self.c1,
            "c2": self.c2,
            "k_inner": self.k_inner,
            "k_far": self.k_far,
            "x_min": self.x_min,
            "x_far": self.x_far,
            "T_far": self.t_far,
            "R_far": self.r_far,
            "c1_alt": self.c1_alt,
            "c1_note": self.c1_note,
        }
        for key, val in sorted(self.provenance.items()):
            rec[f"source_{key}"] = val
        return rec


def matching_residual(constants):
    """|  |b| - |B|  | at the far anchor.

    The inner condition fixes the sign of the corrected reflected
    amplitude, which is opposite to B's for barrier-type inputs, so the
    matching equates reflection coefficients (amplitude magnitudes),
    not signed amplitudes.
    """
    _, b_ff = far_field_amplitudes(constants.c, constants.k_far)
    _, b_mod = modulated_amplitudes(
        constants.c, constants.c1, constants.c2, constants.k_far
    )
    return abs(abs(b_mod) - abs(b_ff))


def solve_boundary_constants(
    model,
    t_far,
    r_far,
    x_min=None,
    x_far=None,
    k_inner=None,
    k_far=None,
    provenance=None,
):
    """Solve c, then c2, then c1 for a piecewise model.

    Anchor wavenumbers default to the model's values at x_min / x_far;
    both anchors must be classically allowed.  Explicit k_inner / k_far
    values override the model (useful when the far wavenumber comes
    from an external calculation).
    """
    prov = dict(provenance or {})
    x_min = model.x_min if x_min is None else float(x_min)
    x_far = model.x_max if x_far is None else float(x_far)
    if not x_min < x_far:
        raise DomainError(f"need x_min < x_far, got {x_min}, {x_far}")

    if k_inner is None:
        val, evan = model.wavenumber(x_min)
        if evan:
            raise DomainError(f"inner anchor x={x_min} is classically forbidden")
        k_inner = val
        prov.setdefault("k_inner", f"model at x={x_min:g}")
    else:
        prov.setdefault("k_inner", "explicit override")
    if k_far is None:
        val, evan = model.wavenumber(x_far)
        if evan:
            raise DomainError(f"far anchor x={x_far} is classically forbidden")
        k_far = val
        prov.setdefault("k_far", f"model at x={x_far:g}")
    else:
        prov.setdefault("k_far", "explicit override")

    c = solve_split_constant(t_far, r_far, k_far)
    c2 = solve_inner_constant(c, k_inner)
    match = solve_far_matching_constant(c, c2, k_far)
    constants = BoundaryConstants(
        c=c,
        c1=match.c1,
        c2=c2,
        k_inner=float(k_inner),
        k_far=float(k_far),
        x_min=x_min,
        x_far=x_far,
        t_far=float(t_far),
        r_far=float(r_far),
        c1_alt=match.c1_alt,
        c1_note=match.note,
        provenance=prov,
    )
    resid = matching_residual(constants)
    if resid > 1e-10:
        raise MatchingError(
            f"far-field matching residual {resid} exceeds 1e-10"
        )
    return constants


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

_CSV_COLUMNS = ("x", "V", "k", "u", "A", "B", "a", "b", "T", "R", "validity", "evanescent")


@dataclass(frozen=True, eq=False)
class CoefficientProfile:
    """Per-grid-point record of the pointwise scattering quantities.

    Rows where the model is classically forbidden, or where the
    amplitude split is undefined (2k - c^2 < 0 close to a turning
    point), are flagged evanescent and carry NaN coefficients.
    """

    x: np.ndarray
    V: np.ndarray
    k: np.ndarray
    u: np.ndarray
    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    b: np.ndarray
    T: np.ndarray
    R: np.ndarray
    validity: np.ndarray
    evanescent: np.ndarray
    constants: BoundaryConstants = None

    def __len__(self):
        return self.x.size

    def columns(self):
        return {name: getattr(self, name) for name in _CSV_COLUMNS}

    def write_csv(self, fileobj):
        from .io import write_csv

        cols = self.columns()
        cols["evanescent"] = cols["evanescent"].astype(int)
        write_csv(fileobj, _CSV_COLUMNS, [cols[n] for n in _CSV_COLUMNS])


def _validity_metric(model, x):
    """|dk/dx| / k^2 with dk/dx = -V' / 2k, using |E - V| in forbidden zones."""
    x = np.asarray(x, dtype=float)
    dv = np.asarray(model.potential_derivative(x), dtype=float)
    kmag = np.abs(np.asarray(model.energy - model.potential(x), dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        metric = np.abs(dv) / (2.0 * kmag**1.5)
    metric = np.where(kmag == 0.0, np.inf, metric)
    return metric


def coefficient_profile(model, constants, grid):
    """Evaluate the full pointwise record on a grid.

    The phase u is chained over every classically allowed window and
    anchored to zero at the inner anchor; it is NaN in forbidden rows.
    """
    grid = check_grid(grid)
    x_ref = constants.x_min if model.x_min <= constants.x_min <= model.x_max else None
    chain = ChainedEiconal(model, x_ref=x_ref)

    v = np.asarray(model.potential(grid), dtype=float)
    kval, evan = model.wavenumber(grid)
    kval = np.asarray(kval, dtype=float)
    evan = np.asarray(evan, dtype=bool)

    c, c1, c2 = constants.c, constants.c1, constants.c2
    undefined = evan | (2.0 * kval - c * c < 0.0)
    ok = ~undefined

    nan = np.full(grid.shape, np.nan)
    A = nan.copy()
    B = nan.copy()
    a = nan.copy()
    b = nan.copy()
    T = nan.copy()
    R = nan.copy()
    if np.any(ok):
        kk = kval[ok]
        A[ok], B[ok] = far_field_amplitudes(c, kk)
        h = normalization_h(c, c1, c2, kk)
        if np.any(h <= 0.0):
            bad = grid[ok][np.asarray(h) <= 0.0][0]
            raise NormalizationError(f"normalization h <= 0 at x={bad}")
        a[ok], b[ok] = modulated_amplitudes(c, c1, c2, kk)
        T[ok] = a[ok] ** 2 / kk
        R[ok] = b[ok] ** 2 / kk

    u = np.asarray(chain.u(grid), dtype=float)
    u = np.where(evan, np.nan, u)

    return CoefficientProfile(
        x=grid,
        V=v,
        k=kval,
        u=u,
        A=A,
        B=B,
        a=a,
        b=b,
        T=T,
        R=R,
        validity=_validity_metric(model, grid),
        evanescent=undefined,
        constants=constants,
    )


def wavefunction(model, constants, grid):
    """Assembled solution y = a/sqrt(k) e^{iu} + b/sqrt(k) e^{-iu}.

    Complex samples per grid point; NaN wherever the coefficients are
    undefined (forbidden or near-turning-point rows).
    """
    prof = coefficient_profile(model, constants, grid)
    with np.errstate(invalid="ignore"):
        ph = np.exp(1j * prof.u)
        y = (prof.a * ph + prof.b / ph) / np.sqrt(prof.k)
    return np.where(prof.evanescent, np.nan + 0j, y)


@dataclass(frozen=True, eq=False)
class ResidualSample:
    """Second-difference defect of the assembled wave at chosen points."""

    x: np.ndarray
    residual: np.ndarray          # |y'' + k^2 y|
    relative: np.ndarray          # residual / (k^2 |y|)
    relative_envelope: np.ndarray  # residual / (k^2 (|a|+|b|)/sqrt(k))
    step: np.ndarray


def wavefunction_residual(model, constants, x, step=None):
    """Numerically differentiate the assembled wave and measure its defect.

    Uses an exact-evaluation central stencil per point (step ~ a small
    fraction of the local wavelength unless given).  Points whose
    stencil would leave the classically allowed window containing them
    come back NaN.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    x_ref = constants.x_min if model.x_min <= constants.x_min <= model.x_max else None
    chain = ChainedEiconal(model, x_ref=x_ref)
    kval, evan = model.wavenumber(xs)
    kval = np.asarray(kval, dtype=float)
    evan = np.atleast_1d(np.asarray(evan, dtype=bool))
    if step is None:
        with np.errstate(divide="ignore"):
            hs = 0.02 * (2.0 * np.pi / np.where(kval > 0, kval, np.inf))
        hs = np.minimum(hs, 1.0)
    else:
        hs = np.full(xs.shape, float(step))

    c, c1, c2 = constants.c, constants.c1, constants.c2
    res = np.full(xs.shape, np.nan)
    rel = np.full(xs.shape, np.nan)
    rel_env = np.full(xs.shape, np.nan)
    for i, (xi, hi) in enumerate(zip(xs, hs)):
        if evan[i] or not np.isfinite(hi) or hi <= 0.0:
            continue
        piece = chain.piece_of(xi)
        if piece is None:
            continue
        seg_idx, p_lo, p_hi, offset = piece
        # the stencil must not straddle a knot or turning point
        hi = min(hi, 0.45 * (p_hi - xi), 0.45 * (xi - p_lo))
        if hi <= 0.0 or hi * kval[i] < 1e-4:
            continue
        hs[i] = hi
        pts = np.array([xi - hi, xi, xi + hi])
        seg = model.segments[seg_idx]
        kv = np.sqrt(model.energy - np.asarray(seg.potential(pts), dtype=float))
        if np.any(2.0 * kv - c * c <= 0.0):
            continue
        a, b = modulated_amplitudes(c, c1, c2, kv)
        u = np.asarray(seg.antiderivative(pts, model.energy), dtype=float) + offset
        y = (a * np.exp(1j * u) + b * np.exp(-1j * u)) / np.sqrt(kv)
        ksq = kv[1] ** 2
        d2 = (y[0] - 2.0 * y[1] + y[2]) / hi**2
        res[i] = abs(d2 + ksq * y[1])
        rel[i] = res[i] / (ksq * abs(y[1]))
        env = (abs(a[1]) + abs(b[1])) / math.sqrt(kv[1])
        rel_env[i] = res[i] / (ksq * env)
    return ResidualSample(x=xs, residual=res, relative=rel, relative_envelope=rel_env, step=hs)


# ---------------------------------------------------------------------------
# Validity diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ValidityReport:
    """Pointwise WKB-validity metric plus located turning points."""

    x: np.ndarray
    metric: np.ndarray
    turning_points: tuple
    knot_crossings: tuple


def validity_report(model, grid):
    """Metric |dk/dx| / k^2 per point and all E = V crossings.

    Turning points inside segments come from the segments' closed
    forms; knots where the potential jumps across E are reported
    separately as crossings without a root.
    """
    grid = check_grid(grid)
    metric = _validity_metric(model, grid)
    tps = []
    for seg in model.segments:
        tps.extend(seg.turning_points(model.energy))
    crossings = []
    for left, right in zip(model.segments, model.segments[1:]):
        xk = left.x_hi
        lo_sign = model.energy - left.potential(xk)
        hi_sign = model.energy - right.potential(right.x_lo)
        if lo_sign == 0.0 or hi_sign == 0.0 or (lo_sign > 0) != (hi_sign > 0):
            crossings.append(float(xk))
    return ValidityReport(
        x=grid,
        metric=metric,
        turning_points=tuple(sorted(tps)),
        knot_crossings=tuple(crossings),
    )


# ---------------------------------------------------------------------------
# Leading-order WKB far field (for method comparisons)
# ---------------------------------------------------------------------------


def _forbidden_windows_generic(v_of_x, energy, x_lo, x_hi, n=4096):
    xs = np.linspace(x_lo, x_hi, n)
    ksq = energy - np.asarray(v_of_x(xs), dtype=float)
    forb = ksq <= 0.0
    windows = []
    i = 0
    while i < n:
        if not forb[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and forb[j + 1]:
            j += 1
        lo = xs[i]
        hi = xs[j]
        if i > 0:
            lo = brentq(lambda t: energy - float(v_of_x(t)), xs[i - 1], xs[i])
        if j + 1 < n:
            hi = brentq(lambda t: energy - float(v_of_x(t)), xs[j], xs[j + 1])
        windows.append((lo, hi))
        i = j + 1
    return windows


def wkb_far_field(model_or_spec, energy=None, x_lo=None, x_hi=None):
    """Leading-order WKB far-field (T, R).

    With no turning point the leading order transmits everything
    (T=1).  Through barrier windows the standard tunneling factor
    T = exp(-2 sum of integral of sqrt(V-E)) applies, R = 1 - T.
    """
    if hasattr(model_or_spec, "potential"):
        v_of_x = model_or_spec.potential
        energy = model_or_spec.energy if energy is None else energy
        x_lo = model_or_spec.x_min if x_lo is None else x_lo
        x_hi = model_or_spec.x_max if x_hi is None else x_hi
        windows = [
            (lo, hi) for lo, hi, _ in model_or_spec.forbidden_regions()
        ]
    else:
        v_of_x = model_or_spec.evaluate
        if energy is None or x_lo is None or x_hi is None:
            raise DomainError("energy, x_lo, x_hi required for a bare potential")
        windows = _forbidden_windows_generic(v_of_x, energy, x_lo, x_hi)

    action = 0.0
    for lo, hi in windows:
        if hi <= lo:
            continue
        val, _ = quad(
            lambda t: math.sqrt(max(float(v_of_x(t)) - energy, 0.0)),
            lo,
            hi,
            epsabs=1e-12,
            epsrel=1e-10,
            limit=400,
        )
        action += val
    t = math.exp(-2.0 * action)
    return t, 1.0 - t

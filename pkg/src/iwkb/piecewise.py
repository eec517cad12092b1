"""Piecewise integrable replacement of complicated potentials.

A complicated potential is replaced by ordered quadratic or exponential
segments, each with a closed-form antiderivative of the local wavenumber
k(x) = sqrt(E - V(x)).  The accumulated phase u(x) = integral of k is
chained across segment boundaries so it is continuous wherever the model
is classically allowed.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, ForbiddenRegionError, TurningPointError

__all__ = [
    "Segment",
    "PiecewiseModel",
    "Wavenumber",
    "local_wavenumber",
    "eval_segment",
    "eiconal_closed_form",
    "eiconal_quadrature",
    "chain_eiconal",
    "ChainedEiconal",
    "kerr_dirac_model",
    "model_to_text",
    "model_from_text",
]

_FORMS = ("quadratic", "exponential")

#: x span below which two coordinates are considered the same knot
_KNOT_ATOL = 1e-12


@dataclass(frozen=True)
class Segment:
    """One integrable piece of a potential.

    form "quadratic":    V(x) = a + b x + c x^2
    form "exponential":  V(x) = a + b exp(-x / c), c != 0
    """

    form: str
    a: float
    b: float
    c: float
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if self.form not in _FORMS:
            raise DomainError(f"unknown segment form {self.form!r}")
        if not self.x_lo < self.x_hi:
            raise DomainError(
                f"segment needs x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]"
            )
        if self.form == "exponential" and self.c == 0.0:
            raise DomainError("exponential segment needs c != 0")

    # -- basic evaluation ---------------------------------------------------

    def _check_inside(self, x):
        x = np.asarray(x, dtype=float)
        pad = 1e-9 * max(1.0, abs(self.x_lo), abs(self.x_hi))
        if np.any(x < self.x_lo - pad) or np.any(x > self.x_hi + pad):
            raise DomainError(
                f"x outside segment [{self.x_lo}, {self.x_hi}]"
            )
        return x

    def potential(self, x):
        """V(x) on the segment's closed interval."""
        x = self._check_inside(x)
        if self.form == "quadratic":
            v = self.a + x * (self.b + x * self.c)
        else:
            v = self.a + self.b * np.exp(-x / self.c)
        return float(v) if v.ndim == 0 else v

    def potential_derivative(self, x):
        x = self._check_inside(x)
        if self.form == "quadratic":
            d = self.b + 2.0 * self.c * x
        else:
            d = -(self.b / self.c) * np.exp(-x / self.c)
        return float(d) if d.ndim == 0 else d

    def wavenumber_sq(self, x, energy):
        return energy - self.potential(x)

    # -- turning points -----------------------------------------------------

    def turning_points(self, energy):
        """Interior solutions of V(x) = energy, in increasing order."""
        lo, hi = self.x_lo, self.x_hi
        roots = []
        if self.form == "exponential":
            # b exp(-x/c) = energy - a
            if self.b != 0.0:
                ratio = (energy - self.a) / self.b
                if ratio > 0.0:
                    roots.append(-self.c * math.log(ratio))
        else:
            # c x^2 + b x + (a - energy) = 0
            if self.c == 0.0:
                if self.b != 0.0:
                    roots.append((energy - self.a) / self.b)
            else:
                disc = self.b * self.b - 4.0 * self.c * (self.a - energy)
                if disc == 0.0:
                    roots.append(-self.b / (2.0 * self.c))
                elif disc > 0.0:
                    sq = math.sqrt(disc)
                    roots.extend(
                        sorted(
                            ((-self.b - sq) / (2.0 * self.c),
                             (-self.b + sq) / (2.0 * self.c))
                        )
                    )
        return [r for r in roots if lo < r < hi]

    # -- closed-form phase integral ------------------------------------------

    def antiderivative(self, x, energy):
        """A closed-form antiderivative F with F'(x) = k(x).

        Valid on the closure of the classically allowed set (k may be 0
        at the evaluation point but not negative under the square root).
        The integration constant is arbitrary; chaining fixes it.
        """
        x = np.asarray(x, dtype=float)
        ksq = energy - (
            self.a + x * (self.b + x * self.c)
            if self.form == "quadratic"
            else self.a + self.b * np.exp(-x / self.c)
        )
        tol = 1e-12 * max(1.0, abs(energy))
        if np.any(ksq < -tol):
            raise TurningPointError(
                f"phase integral evaluated in a forbidden region of "
                f"segment [{self.x_lo}, {self.x_hi}]"
            )
        k = np.sqrt(np.maximum(ksq, 0.0))

        if self.form == "exponential":
            ssq = energy - self.a
            if self.b == 0.0:
                if ssq <= 0.0:
                    raise TurningPointError(
                        "constant segment lies at or above the energy"
                    )
                u = math.sqrt(ssq) * x
            elif ssq > 0.0:
                s = math.sqrt(ssq)
                # log|(s+k)/(s-k)| with s^2 - k^2 = b exp(-x/c), written to
                # avoid the s-k cancellation in the flat tail
                logterm = (
                    2.0 * np.log(s + k) - math.log(abs(self.b)) + x / self.c
                )
                u = -2.0 * self.c * k + self.c * s * logterm
            elif ssq == 0.0:
                u = -2.0 * self.c * k
            else:
                t = math.sqrt(-ssq)
                u = -2.0 * self.c * k + 2.0 * self.c * t * np.arctan(k / t)
        else:
            alpha = energy - self.a
            beta = -self.b
            gamma = -self.c
            if gamma == 0.0 and beta == 0.0:
                if alpha <= 0.0:
                    raise TurningPointError(
                        "constant segment lies at or above the energy"
                    )
                u = math.sqrt(alpha) * x
            elif gamma == 0.0:
                u = 2.0 * (alpha + beta * x) ** 1.5 / (3.0 * beta)
            else:
                lead = (2.0 * gamma * x + beta) / (4.0 * gamma) * k
                coef = (4.0 * alpha * gamma - beta * beta) / (8.0 * gamma)
                if coef == 0.0:
                    u = lead
                elif gamma < 0.0:
                    disc = beta * beta - 4.0 * alpha * gamma
                    arg = np.clip(
                        (2.0 * gamma * x + beta) / math.sqrt(disc), -1.0, 1.0
                    )
                    u = lead + coef * (-1.0 / math.sqrt(-gamma)) * np.arcsin(arg)
                else:
                    inner = np.abs(
                        2.0 * gamma * x + beta + 2.0 * math.sqrt(gamma) * k
                    )
                    u = lead + coef / math.sqrt(gamma) * np.log(inner)
        u = np.asarray(u, dtype=float)
        return float(u) if u.ndim == 0 else u


def eval_segment(seg, x):
    """V(x) for a segment; x must lie inside the segment."""
    return seg.potential(x)


def eiconal_closed_form(seg, energy, x):
    """Closed-form antiderivative of k on a segment, strict interior only.

    Raises TurningPointError if any evaluation point is at or beyond a
    turning point (E <= V there).
    """
    v = seg.potential(x)
    if np.any(np.asarray(energy - v) <= 0.0):
        tps = seg.turning_points(energy)
        where = f" (turning points at {tps})" if tps else ""
        raise TurningPointError(
            f"E <= V at the evaluation point{where}"
        )
    return seg.antiderivative(x, energy)


class Wavenumber(tuple):
    """(value, evanescent) pair: k = sqrt(E-V), or sqrt(V-E) tagged evanescent."""

    __slots__ = ()

    def __new__(cls, value, evanescent):
        return tuple.__new__(cls, (value, evanescent))

    @property
    def value(self):
        return self[0]

    @property
    def evanescent(self):
        return self[1]


@dataclass(frozen=True)
class PiecewiseModel:
    """Ordered contiguous segments plus the total energy of the wave.

    u_offsets holds per-segment integration constants once the phase has
    been chained (see chain_eiconal); it is None for an unchained model.
    """

    segments: tuple
    energy: float
    x_ref: float = None
    u_offsets: tuple = None

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise DomainError("model needs at least one segment")
        for left, right in zip(segs, segs[1:]):
            scale = max(1.0, abs(left.x_hi))
            if abs(left.x_hi - right.x_lo) > _KNOT_ATOL * scale:
                raise DomainError(
                    f"segments not contiguous at x={left.x_hi} vs {right.x_lo}"
                )
        object.__setattr__(self, "segments", segs)
        if self.u_offsets is not None and len(self.u_offsets) != len(segs):
            raise DomainError("u_offsets length must match segments")

    # -- geometry -------------------------------------------------------------

    @property
    def x_min(self):
        return self.segments[0].x_lo

    @property
    def x_max(self):
        return self.segments[-1].x_hi

    @property
    def knots(self):
        """Interior segment boundaries."""
        return np.array([s.x_hi for s in self.segments[:-1]])

    def _bounds(self):
        return np.array([s.x_lo for s in self.segments] + [self.x_max])

    def segment_index(self, x):
        """Index of the segment owning x; knots belong to the right segment."""
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        bounds = self._bounds()
        pad = 1e-9 * max(1.0, abs(self.x_min), abs(self.x_max))
        if np.any(xs < bounds[0] - pad) or np.any(xs > bounds[-1] + pad):
            raise DomainError(
                f"x outside model domain [{self.x_min}, {self.x_max}]"
            )
        idx = np.clip(np.searchsorted(bounds, xs, side="right") - 1, 0,
                      len(self.segments) - 1)
        return int(idx[0]) if scalar else idx

    # -- evaluation -------------------------------------------------------------

    def _per_segment(self, x, method):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.atleast_1d(self.segment_index(xs))
        out = np.empty_like(xs)
        for i in np.unique(idx):
            sel = idx == i
            out[sel] = method(self.segments[i], xs[sel])
        return float(out[0]) if scalar else out

    def potential(self, x):
        return self._per_segment(x, lambda s, v: s.potential(v))

    def potential_derivative(self, x):
        return self._per_segment(x, lambda s, v: s.potential_derivative(v))

    def wavenumber(self, x):
        """Local wavenumber magnitude with an evanescent tag.

        Returns a Wavenumber pair: sqrt(E-V) where E > V, otherwise the
        decay constant sqrt(V-E) tagged evanescent (a turning point,
        k = 0 exactly, is tagged too).
        """
        v = self.potential(x)
        ksq = self.energy - np.asarray(v, dtype=float)
        evan = ksq <= 0.0
        val = np.sqrt(np.abs(ksq))
        if np.ndim(x) == 0:
            return Wavenumber(float(val), bool(evan))
        return Wavenumber(val, evan)

    def knot_mismatches(self):
        """Value and slope jumps at every interior knot.

        Returns a list of (x_knot, value_jump, slope_jump) with jumps
        computed as right minus left.
        """
        out = []
        for left, right in zip(self.segments, self.segments[1:]):
            xk = left.x_hi
            dv = right.potential(right.x_lo) - left.potential(xk)
            ds = right.potential_derivative(right.x_lo) - left.potential_derivative(xk)
            out.append((float(xk), float(dv), float(ds)))
        return out

    # -- allowed/forbidden structure -----------------------------------------

    def segment_pieces(self):
        """Per-segment subintervals of constant classical character.

        Yields (seg_index, lo, hi, allowed) with turning points as the
        internal cut locations.
        """
        for i, seg in enumerate(self.segments):
            cuts = [seg.x_lo] + seg.turning_points(self.energy) + [seg.x_hi]
            for lo, hi in zip(cuts, cuts[1:]):
                if hi - lo <= 0.0:
                    continue
                mid = 0.5 * (lo + hi)
                allowed = seg.wavenumber_sq(mid, self.energy) > 0.0
                yield i, lo, hi, allowed

    def forbidden_regions(self):
        """List of (lo, hi, segment_indices) where V >= E."""
        out = []
        for i, lo, hi, allowed in self.segment_pieces():
            if allowed:
                continue
            if out and abs(out[-1][1] - lo) <= _KNOT_ATOL * max(1.0, abs(lo)):
                plo, _, segs = out.pop()
                out.append((plo, hi, segs + (i,)))
            else:
                out.append((lo, hi, (i,)))
        return out

    def eiconal(self, x):
        """Chained phase u(x); requires chain_eiconal to have run."""
        if self.u_offsets is None:
            raise DomainError("model has no chained phase; call chain_eiconal first")
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.atleast_1d(self.segment_index(xs))
        out = np.empty_like(xs)
        for i in np.unique(idx):
            sel = idx == i
            seg = self.segments[i]
            out[sel] = seg.antiderivative(xs[sel], self.energy) + self.u_offsets[i]
        return float(out[0]) if scalar else out


def local_wavenumber(model, x):
    """Wavenumber pair (value, evanescent flag) at x for a model."""
    return model.wavenumber(x)


# ---------------------------------------------------------------------------
# Phase chaining
# ---------------------------------------------------------------------------


def chain_eiconal(model, x_ref=None):
    """Fix the per-segment phase constants so u is continuous with u(x_ref)=0.

    Requires the whole model domain to be classically allowed; if any
    forbidden region exists this raises ForbiddenRegionError naming the
    affected segments (use ChainedEiconal for windowed chaining).
    """
    forbidden = model.forbidden_regions()
    if forbidden:
        segs = sorted({i for _, _, ids in forbidden for i in ids})
        spans = ", ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi, _ in forbidden)
        raise ForbiddenRegionError(
            f"classically forbidden region(s) {spans} inside the model domain "
            f"(segments {segs})",
            segments=segs,
        )
    if x_ref is None:
        x_ref = model.x_min
    if not model.x_min <= x_ref <= model.x_max:
        raise DomainError(f"x_ref={x_ref} outside model domain")

    segs = model.segments
    energy = model.energy
    offsets = [0.0] * len(segs)
    j = model.segment_index(x_ref)
    offsets[j] = -float(segs[j].antiderivative(x_ref, energy))
    for i in range(j + 1, len(segs)):
        xk = segs[i].x_lo
        offsets[i] = (
            offsets[i - 1]
            + float(segs[i - 1].antiderivative(segs[i - 1].x_hi, energy))
            - float(segs[i].antiderivative(xk, energy))
        )
    for i in range(j - 1, -1, -1):
        xk = segs[i].x_hi
        offsets[i] = (
            offsets[i + 1]
            + float(segs[i + 1].antiderivative(segs[i + 1].x_lo, energy))
            - float(segs[i].antiderivative(xk, energy))
        )
    return replace(model, x_ref=float(x_ref), u_offsets=tuple(offsets))


class ChainedEiconal:
    """Phase u(x) chained over every maximal classically allowed window.

    Within each window u is continuous (including across knots) and
    anchored to zero at the window's left edge, or at x_ref for the
    window containing it.  Between windows (forbidden regions) u is
    undefined.
    """

    def __init__(self, model, x_ref=None):
        self.model = model
        self.x_ref = x_ref
        energy = model.energy
        windows = []           # list of (lo, hi, [(seg_idx, lo, hi, offset), ...])
        current = None
        for i, lo, hi, allowed in model.segment_pieces():
            if not allowed:
                if current is not None:
                    windows.append(current)
                    current = None
                continue
            if current is None:
                current = [lo, hi, [(i, lo, hi, 0.0)]]
                continue
            # contiguous with the previous allowed piece?
            if abs(current[1] - lo) <= _KNOT_ATOL * max(1.0, abs(lo)):
                current[1] = hi
                current[2].append((i, lo, hi, 0.0))
            else:
                windows.append(current)
                current = [lo, hi, [(i, lo, hi, 0.0)]]
        if current is not None:
            windows.append(current)

        chained = []
        for lo, hi, pieces in windows:
            anchored = []
            offset = 0.0
            prev_val = None
            for i, plo, phi, _ in pieces:
                seg = model.segments[i]
                f_lo = float(seg.antiderivative(plo, energy))
                if prev_val is None:
                    offset = -f_lo
                else:
                    offset = prev_val - f_lo
                prev_val = float(seg.antiderivative(phi, energy)) + offset
                anchored.append((i, plo, phi, offset))
            chained.append((lo, hi, anchored))

        if x_ref is not None:
            for w, (lo, hi, pieces) in enumerate(chained):
                if lo <= x_ref <= hi:
                    shift = self._window_u(pieces, x_ref)
                    chained[w] = (
                        lo,
                        hi,
                        [(i, a, b, off - shift) for i, a, b, off in pieces],
                    )
                    break
        self.windows = chained

    def _window_u(self, pieces, x):
        for i, lo, hi, off in pieces:
            if lo <= x <= hi:
                return float(self.model.segments[i].antiderivative(x, self.model.energy)) + off
        raise DomainError(f"x={x} not inside the window")

    def window_of(self, x):
        """Index of the allowed window containing x, or None."""
        for w, (lo, hi, _) in enumerate(self.windows):
            if lo <= x <= hi:
                return w
        return None

    def piece_of(self, x):
        """(segment_index, lo, hi, offset) of the piece containing x, or None."""
        for lo, hi, pieces in self.windows:
            if not lo <= x <= hi:
                continue
            for piece in pieces:
                if piece[1] <= x <= piece[2]:
                    return piece
        return None

    def u(self, x):
        """Chained phase at x; NaN where the model is forbidden."""
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full_like(xs, np.nan)
        for lo, hi, pieces in self.windows:
            sel = (xs >= lo) & (xs <= hi)
            if not np.any(sel):
                continue
            for i, plo, phi, off in pieces:
                psel = sel & (xs >= plo) & (xs <= phi)
                if np.any(psel):
                    seg = self.model.segments[i]
                    out[psel] = seg.antiderivative(xs[psel], self.model.energy) + off
        return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Quadrature fallback / oracle
# ---------------------------------------------------------------------------


def _turning_bracket(v_of_x, energy, x_lo, x_hi, n=512):
    """Locate a sign change of E - V on (x_lo, x_hi); None if all allowed.

    The exact endpoints are nudged inward so a knot discontinuity that
    merely touches the interval boundary does not count as a crossing.
    """
    nudge = 1e-12 * max(1.0, abs(x_lo), abs(x_hi))
    xs = np.linspace(x_lo + nudge, x_hi - nudge, n)
    ksq = energy - np.asarray(v_of_x(xs), dtype=float)
    bad = np.nonzero(ksq <= 0.0)[0]
    if bad.size == 0:
        return None
    j = bad[0]
    if j == 0:
        return (x_lo, xs[min(1, n - 1)])
    try:
        root = brentq(lambda t: energy - float(v_of_x(t)), xs[j - 1], xs[j])
        return (xs[j - 1], root)
    except ValueError:
        return (xs[j - 1], xs[j])


def eiconal_quadrature(model_or_spec, x_lo, x_hi, energy=None, tol=1e-10):
    """Phase increment integral of k over [x_lo, x_hi] by adaptive quadrature.

    Works for any potential object with .potential(x) or .evaluate(x).
    Raises TurningPointError (with a bracketed location) if E <= V
    anywhere on the interval.
    """
    if hasattr(model_or_spec, "potential"):
        v_of_x = model_or_spec.potential
        if energy is None:
            energy = model_or_spec.energy
    else:
        v_of_x = model_or_spec.evaluate
        if energy is None:
            raise DomainError("energy required for a bare potential spec")
    if not x_lo < x_hi:
        raise DomainError(f"need x_lo < x_hi, got [{x_lo}, {x_hi}]")

    bracket = _turning_bracket(v_of_x, energy, x_lo, x_hi)
    if bracket is not None:
        raise TurningPointError(
            f"turning point inside [{x_lo}, {x_hi}], bracketed near "
            f"[{bracket[0]:.9g}, {bracket[1]:.9g}]"
        )

    def integrand(x):
        return math.sqrt(max(energy - float(v_of_x(x)), 0.0))

    val, _ = quad(integrand, x_lo, x_hi, epsabs=tol, epsrel=1e-12, limit=400)
    return val


# ---------------------------------------------------------------------------
# Built-in reference model
# ---------------------------------------------------------------------------

#: Exponential-segment replacement of the Kerr-Dirac barrier for the
#: reference parameter set (a=0.5, M=1, m_p=0.8, sigma=0.8, lam=0.92,
#: m=-1/2), tabulated in the x coordinate of the separated radial
#: equation.  The first range extends to -inf and is truncated.
_KERR_DIRAC_ROWS = (
    (0.0, -0.187354, -3.75, None, 0.0),
    (0.603, 0.415646, 8.79, 0.0, 30.0),
    (0.629, 0.12690038, 26.3, 30.0, 109.0),
    (0.63543098, 0.037193439, 73.5, 109.0, 208.0),
    (0.63543098, 0.2228925, 45.0, 208.0, 310.0),
)

#: Energy (squared frequency) of the reference scattering problem.
KERR_DIRAC_ENERGY = 0.64


def kerr_dirac_model(x_min=-50.0):
    """The five-segment exponential model of the Kerr-Dirac barrier.

    x_min truncates the leftmost (half-infinite) range; at the default
    -50 the first segment has |V| ~ 3e-7, i.e. flat to working accuracy.
    The table is value-discontinuous at its interior knots (notably at
    x=0); knot_mismatches() reports the jumps.
    """
    if x_min >= 0.0:
        raise DomainError(f"x_min must be < 0, got {x_min}")
    segs = []
    for a, b, c, lo, hi in _KERR_DIRAC_ROWS:
        lo = x_min if lo is None else lo
        segs.append(Segment("exponential", a, b, c, lo, hi))
    return PiecewiseModel(tuple(segs), energy=KERR_DIRAC_ENERGY)


# ---------------------------------------------------------------------------
# Plain-text serialization
# ---------------------------------------------------------------------------


def _g17(x):
    return "%.17g" % float(x)


def model_to_text(model):
    """Serialize a model to the line-oriented text format.

    Header carries the energy and reference point; one line per segment:
    ``form a b c x_lo x_hi``, full 17-significant-digit decimals.
    """
    xref = "none" if model.x_ref is None else _g17(model.x_ref)
    lines = [f"format=1 E={_g17(model.energy)} x_ref={xref}"]
    for s in model.segments:
        lines.append(
            " ".join([s.form, _g17(s.a), _g17(s.b), _g17(s.c), _g17(s.x_lo), _g17(s.x_hi)])
        )
    return "\n".join(lines) + "\n"


def model_from_text(text):
    """Parse a model serialized by model_to_text (bit-exact round trip)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DomainError("empty model text")
    header = dict(
        item.split("=", 1) for item in lines[0].split() if "=" in item
    )
    if header.get("format") != "1":
        raise DomainError(f"unsupported model format {header.get('format')!r}")
    energy = float(header["E"])
    x_ref = None if header.get("x_ref", "none") == "none" else float(header["x_ref"])
    segs = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 6:
            raise DomainError(f"bad segment line: {ln!r}")
        form = parts[0]
        a, b, c, lo, hi = (float(p) for p in parts[1:])
        segs.append(Segment(form, a, b, c, lo, hi))
    model = PiecewiseModel(tuple(segs), energy=energy, x_ref=x_ref)
    if x_ref is not None:
        try:
            model = chain_eiconal(model, x_ref)
        except ForbiddenRegionError:
            pass
    return model

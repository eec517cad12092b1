"""Potential models consumed by the solvers.

Provides simple analytic barrier shapes, tabulated potentials with
monotone cubic interpolation, and the massive-Dirac scattering potential
of a rotating (Kerr) black hole together with its tortoise coordinate.

Geometric units throughout: hbar = c = G = 1, and the wave equation is
y'' + (E - V) y = 0, so wavenumbers are k = sqrt(E - V) with no extra
mass factors.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, ExtrapolationError, SingularityError
from .validation import as_float_array, check_grid, check_strictly_increasing

__all__ = [
    "PhysicalParams",
    "REFERENCE_PARAMS",
    "horizon_radius",
    "kerr_dirac_potential",
    "tortoise_coordinate",
    "tortoise_derivative",
    "inverse_tortoise",
    "ConstantPotential",
    "RectangularBarrier",
    "ExponentialPotential",
    "QuadraticPotential",
    "TabulatedPotential",
    "KerrDiracPotential",
    "eval_potential",
    "sample_potential",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Physical parameters of the Kerr-Dirac scattering problem.

    Attributes
    ----------
    a : float
        Black-hole spin parameter, in units of M.  Must satisfy
        0 <= a < M so an event horizon exists.
    M : float
        Black-hole mass (geometric units; conventionally 1).
    m_p : float
        Rest mass of the incident particle.
    sigma : float
        Frequency of the incident wave.  Nonzero (it appears in
        denominators a*m/sigma and lam*m_p*Delta/2sigma).
    lam : float
        Angular separation constant coupling the radial and angular
        equations; taken as an input.
    m : float
        Azimuthal quantum number (half-integer).
    l : float
        Orbital quantum number (half-integer).  Metadata only.
    """

    a: float
    M: float = 1.0
    m_p: float = 0.8
    sigma: float = 0.8
    lam: float = 0.92
    m: float = -0.5
    l: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.a < self.M:
            raise DomainError(
                f"spin must satisfy 0 <= a < M, got a={self.a}, M={self.M}"
            )
        if self.sigma == 0.0:
            raise DomainError("frequency sigma must be nonzero")
        if self.m_p < 0.0:
            raise DomainError(f"particle mass must be nonnegative, got {self.m_p}")

    def delta(self, r):
        """Horizon function Delta = r^2 - 2 M r + a^2."""
        r = np.asarray(r, dtype=float)
        return r * r - 2.0 * self.M * r + self.a * self.a

    def omega_sq(self, r):
        """The quantity r^2 + a^2 + a m / sigma (enters as omega^2)."""
        r = np.asarray(r, dtype=float)
        return r * r + self.a * self.a + self.a * self.m / self.sigma


#: The worked parameter set used by the bundled Kerr-Dirac fixtures.
REFERENCE_PARAMS = PhysicalParams(a=0.5, M=1.0, m_p=0.8, sigma=0.8, lam=0.92, m=-0.5, l=0.5)


def horizon_radius(params):
    """Outer horizon radius r+ = M + sqrt(M^2 - a^2)."""
    disc = params.M * params.M - params.a * params.a
    if disc <= 0.0:
        raise DomainError(
            f"no horizon for a >= M (a={params.a}, M={params.M})"
        )
    return params.M + np.sqrt(disc)


def _inner_horizon(params):
    return params.M - np.sqrt(params.M * params.M - params.a * params.a)


def kerr_dirac_potential(params, r, omega_squared=True):
    """Scattering potential felt by a massive Dirac wave in Kerr geometry.

    The potential vanishes at the horizon (every term carries a factor
    Delta^(1/2) or Delta^(3/2)) and tends to m_p^2 at large radius.

    Parameters
    ----------
    params : PhysicalParams
    r : float or array
        Boyer-Lindquist radius, must exceed the outer horizon r+.
    omega_squared : bool
        If True (default), the combination r^2 + a^2 + a m / sigma is
        used directly as omega^2.  If False it is squared once more
        (the alternative reading of the definition; see README).

    Raises
    ------
    DomainError
        If any r <= r+.
    SingularityError
        If the denominator omega^2 (lam^2 + m_p^2 r^2) + lam m_p Delta / 2 sigma
        vanishes, reporting the offending radius.
    """
    scalar = np.isscalar(r) or np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    r_plus = horizon_radius(params)
    if np.any(r <= r_plus):
        bad = r[r <= r_plus][0]
        raise DomainError(f"radius {bad} is not outside the horizon r+={r_plus}")

    delta = params.delta(r)
    w2 = params.omega_sq(r)
    if not omega_squared:
        w2 = w2 * w2
    lam, m_p, sigma, M = params.lam, params.m_p, params.sigma, params.M

    p = lam * lam + m_p * m_p * r * r
    den = w2 * p + lam * m_p * delta / (2.0 * sigma)
    near_zero = np.abs(den) <= 1e-12 * np.abs(w2 * p)
    if np.any(near_zero):
        bad = r[near_zero][0]
        raise SingularityError(f"potential denominator vanishes at r={bad}")

    sq = np.sqrt(delta)
    p32 = p * np.sqrt(p)
    term1 = (sq * p32 / den**2) * (
        sq * p32 + ((r - M) * p + 3.0 * m_p * m_p * r * delta)
    )
    term2 = (delta * sq * p * p * np.sqrt(p) / den**3) * (
        2.0 * r * p + 2.0 * m_p * m_p * w2 * r + lam * m_p * (r - M) / sigma
    )
    out = term1 - term2
    return float(out[0]) if scalar else out


def tortoise_derivative(params, r):
    """dr*/dr = omega^2 / Delta for the tortoise coordinate below."""
    r = np.asarray(r, dtype=float)
    r_plus = horizon_radius(params)
    if np.any(r <= r_plus):
        raise DomainError(f"radius must exceed r+={r_plus}")
    return params.omega_sq(r) / params.delta(r)


def tortoise_coordinate(params, r):
    """Tortoise-style coordinate x(r) with dx/dr = omega^2 / Delta.

    Closed form: x = r + alpha log(r - r+) + beta log(r - r-), where
    alpha = omega^2(r+) / (r+ - r-) and beta = -omega^2(r-) / (r+ - r-).
    Strictly increasing on (r+, inf) and x -> -inf as r -> r+.
    """
    scalar = np.isscalar(r) or np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    r_plus = horizon_radius(params)
    r_minus = _inner_horizon(params)
    if np.any(r <= r_plus):
        bad = r[r <= r_plus][0]
        raise DomainError(f"radius {bad} is not outside the horizon r+={r_plus}")

    spread = r_plus - r_minus
    alpha = params.omega_sq(r_plus) / spread
    beta = -params.omega_sq(r_minus) / spread
    x = r + alpha * np.log(r - r_plus)
    if beta != 0.0:
        x = x + beta * np.log(r - r_minus)
    return float(x[0]) if scalar else x


def inverse_tortoise(params, x, r_max_hint=1e8):
    """Radius r such that tortoise_coordinate(params, r) == x."""
    scalar = np.isscalar(x) or np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    r_plus = horizon_radius(params)

    out = np.empty_like(xs)
    for i, xi in enumerate(xs):
        lo = r_plus + 1e-14
        while tortoise_coordinate(params, lo) > xi:
            lo = r_plus + (lo - r_plus) / 16.0
            if lo - r_plus < 1e-300:
                raise DomainError(f"cannot bracket tortoise inverse at x={xi}")
        hi = max(2.0 * r_plus, abs(xi) + r_plus)
        while tortoise_coordinate(params, hi) < xi:
            hi *= 2.0
            if hi > r_max_hint:
                raise DomainError(f"tortoise inverse bracket exceeded {r_max_hint}")
        out[i] = brentq(
            lambda rr: tortoise_coordinate(params, rr) - xi, lo, hi, xtol=1e-14, rtol=8.9e-16
        )
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Potential variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantPotential:
    """V(x) = V0 everywhere."""

    V0: float

    domain = (-np.inf, np.inf)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.V0, dtype=float) if x.ndim else float(self.V0)


@dataclass(frozen=True)
class RectangularBarrier:
    """V = V0 on [x_lo, x_hi], zero outside."""

    V0: float
    x_lo: float
    x_hi: float

    domain = (-np.inf, np.inf)

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise DomainError("rectangular barrier needs x_lo < x_hi")

    def evaluate(self, x):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.where((x >= self.x_lo) & (x <= self.x_hi), self.V0, 0.0)
        return float(v[0]) if scalar else v


@dataclass(frozen=True)
class ExponentialPotential:
    """V(x) = a + b exp(-x / c), c != 0."""

    a: float
    b: float
    c: float

    domain = (-np.inf, np.inf)

    def __post_init__(self):
        if self.c == 0.0:
            raise DomainError("exponential potential needs c != 0")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        v = self.a + self.b * np.exp(-x / self.c)
        return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class QuadraticPotential:
    """V(x) = a + b x + c x^2."""

    a: float
    b: float
    c: float

    domain = (-np.inf, np.inf)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        v = self.a + x * (self.b + x * self.c)
        return float(v) if v.ndim == 0 else v


@dataclass(frozen=True, eq=False)
class TabulatedPotential:
    """Sampled potential, interpolated with a monotone (shape-preserving) cubic.

    The interpolant cannot invent oscillations between samples, so it
    cannot create spurious turning points.  Evaluation outside the
    sampled range raises rather than extrapolating.
    """

    x: np.ndarray
    V: np.ndarray
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        x = check_strictly_increasing(self.x, "tabulated x")
        v = as_float_array(self.V, "tabulated V")
        if x.size < 2:
            raise DomainError("tabulated potential needs at least 2 points")
        if v.size != x.size:
            raise DomainError("tabulated x and V lengths differ")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "_interp", PchipInterpolator(x, v, extrapolate=False))

    @property
    def domain(self):
        return (float(self.x[0]), float(self.x[-1]))

    def evaluate(self, x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.domain
        if np.any((xs < lo) | (xs > hi)):
            bad = xs[(xs < lo) | (xs > hi)][0]
            raise ExtrapolationError(
                f"x={bad} outside tabulated range [{lo}, {hi}]"
            )
        v = self._interp(xs)
        return float(v[0]) if scalar else v


@dataclass(frozen=True, eq=False)
class KerrDiracPotential:
    """Kerr-Dirac potential as a function of a chosen x coordinate.

    coord_map selects how x relates to the Boyer-Lindquist radius r:

    - "identity": x is r itself (domain x > r+),
    - "tortoise": x is the tortoise coordinate (domain all reals),
    - an (r, x) table: a user-supplied monotone map, inverted by
      monotone cubic interpolation.
    """

    params: PhysicalParams
    coord_map: object = "identity"
    omega_squared: bool = True
    _inv_table: PchipInterpolator = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if isinstance(self.coord_map, str):
            if self.coord_map not in ("identity", "tortoise"):
                raise DomainError(f"unknown coordinate map {self.coord_map!r}")
        else:
            r_tab, x_tab = self.coord_map
            r_tab = check_strictly_increasing(r_tab, "map r")
            x_tab = check_strictly_increasing(x_tab, "map x")
            if r_tab.size != x_tab.size or r_tab.size < 2:
                raise DomainError("coordinate map table needs matching r, x columns")
            r_plus = horizon_radius(self.params)
            if r_tab[0] <= r_plus:
                raise DomainError(f"coordinate map radii must exceed r+={r_plus}")
            object.__setattr__(self, "coord_map", (r_tab, x_tab))
            object.__setattr__(
                self, "_inv_table", PchipInterpolator(x_tab, r_tab, extrapolate=False)
            )

    @property
    def domain(self):
        if self.coord_map == "identity":
            return (horizon_radius(self.params), np.inf)
        if self.coord_map == "tortoise":
            return (-np.inf, np.inf)
        _, x_tab = self.coord_map
        return (float(x_tab[0]), float(x_tab[-1]))

    def radius(self, x):
        """Map the coordinate x back to the Boyer-Lindquist radius."""
        if self.coord_map == "identity":
            return np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        if self.coord_map == "tortoise":
            return inverse_tortoise(self.params, x)
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.domain
        if np.any((xs < lo) | (xs > hi)):
            bad = xs[(xs < lo) | (xs > hi)][0]
            raise ExtrapolationError(f"x={bad} outside mapped range [{lo}, {hi}]")
        r = self._inv_table(xs)
        return float(r[0]) if scalar else r

    def evaluate(self, x):
        return kerr_dirac_potential(
            self.params, self.radius(x), omega_squared=self.omega_squared
        )


def eval_potential(spec, x):
    """Evaluate any potential variant at x (scalar or array)."""
    return spec.evaluate(x)


def sample_potential(spec, grid):
    """Tabulate a potential on a sorted grid.

    Returns an (x, V) pair of arrays, one row per grid point.
    Evaluation errors propagate with the offending coordinate.
    """
    grid = check_grid(grid)
    return grid, np.asarray(spec.evaluate(grid), dtype=float)

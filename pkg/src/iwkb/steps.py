"""Multi-square-step transfer-matrix scattering solver.

Replaces a potential by many constant-height cells and propagates the
wave amplitudes through the continuity conditions at every cell
junction.  Serves as the independent far-field oracle for the
pointwise WKB machinery, and as the fallback where WKB validity fails.

Conventions: incidence from the left; the outermost cell heights extend
to +-infinity, so both must be classically allowed.  Amplitudes are
reported relative to plane waves anchored at the outer edges:

    psi(x <= x0) = exp(i k_in (x - x0)) + r_amp exp(-i k_in (x - x0))
    psi(x >= xN) = t_amp exp(i k_out (x - xN))

with T = (k_out / k_in) |t_amp|^2 and R = |r_amp|^2.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .validation import as_float_array, check_positive, check_strictly_increasing

__all__ = [
    "StepPotential",
    "ScatteringResult",
    "discretize_to_steps",
    "transfer_matrix_scatter",
    "converge_scatter",
]


@dataclass(frozen=True, eq=False)
class StepPotential:
    """N constant-height cells over N+1 strictly increasing edges."""

    edges: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        edges = check_strictly_increasing(self.edges, "edges")
        heights = as_float_array(self.heights, "heights")
        if heights.size < 1:
            raise DomainError("need at least one cell")
        if edges.size != heights.size + 1:
            raise DomainError(
                f"{edges.size} edges do not bound {heights.size} cells"
            )
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "heights", heights)

    @property
    def n_cells(self):
        return self.heights.size

    def write_text(self, fileobj):
        """Two-column ``edge height`` listing (last edge paired with '-')."""
        for e, h in zip(self.edges[:-1], self.heights):
            fileobj.write("%.17g %.17g\n" % (e, h))
        fileobj.write("%.17g -\n" % self.edges[-1])


@dataclass(frozen=True)
class ScatteringResult:
    """Far-field reflection/transmission with the complex amplitudes."""

    R: float
    T: float
    r_amp: complex
    t_amp: complex
    n_cells: int = 0

    def to_record(self):
        return {
            "format": 1,
            "T": self.T,
            "R": self.R,
            "t_amp_re": self.t_amp.real,
            "t_amp_im": self.t_amp.imag,
            "r_amp_re": self.r_amp.real,
            "r_amp_im": self.r_amp.imag,
            "n_cells": self.n_cells,
        }


def _potential_callable(potential):
    if hasattr(potential, "potential"):
        return potential.potential
    if hasattr(potential, "evaluate"):
        return potential.evaluate
    if callable(potential):
        return potential
    raise DomainError(f"cannot evaluate potential object {potential!r}")


def discretize_to_steps(potential, n, x_min, x_max):
    """Midpoint-sample a potential into n uniform cells on [x_min, x_max]."""
    n = int(n)
    if n < 1:
        raise DomainError(f"need at least one cell, got n={n}")
    if not x_min < x_max:
        raise DomainError(f"need x_min < x_max, got [{x_min}, {x_max}]")
    v = _potential_callable(potential)
    edges = np.linspace(x_min, x_max, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    heights = np.asarray(v(mids), dtype=float)
    return StepPotential(edges=edges, heights=heights)


def transfer_matrix_scatter(steps, energy):
    """Scatter a wave of the given energy off a step potential.

    Propagates local amplitudes right-to-left with per-step rescaling,
    so arbitrarily thick evanescent cells cannot overflow.  Evanescent
    cells use the principal branch k = i sqrt(V - E).

    Raises DomainError if either asymptotic cell is classically
    forbidden (no propagating mode) or a cell sits exactly at E = V.
    """
    energy = float(energy)
    heights = steps.heights
    if energy <= heights[0] or energy <= heights[-1]:
        raise DomainError(
            "no propagating asymptotic mode: E must exceed the outermost heights"
        )
    ks = np.sqrt(energy - heights.astype(complex))
    if np.any(ks == 0.0):
        bad = np.nonzero(ks == 0.0)[0][0]
        raise DomainError(
            f"cell {bad} sits exactly at E = V; perturb the grid or energy"
        )
    widths = np.diff(steps.edges)
    k_in = ks[0].real
    k_out = ks[-1].real

    # local amplitudes (a, b) at the right edge of the current cell,
    # relative to exp(+-i k (x - x_edge)); start in the exit cell.
    # Backward carry across a cell multiplies by exp(-+ i k d); in an
    # evanescent cell one factor grows like exp(kappa d), so the growth
    # exponent is pulled out per cell and accumulated in log_scale.
    def carry(a, b, k, d):
        grow = abs(k.imag) * d
        a = a * np.exp(-1j * k * d - grow)
        b = b * np.exp(1j * k * d - grow)
        return a, b, grow

    a, b, log_scale = carry(1.0 + 0.0j, 0.0j, ks[-1], widths[-1])
    for j in range(steps.n_cells - 2, -1, -1):
        # interface between cell j and cell j+1
        kappa = ks[j + 1] / ks[j]
        a, b = (
            0.5 * ((1.0 + kappa) * a + (1.0 - kappa) * b),
            0.5 * ((1.0 - kappa) * a + (1.0 + kappa) * b),
        )
        a, b, grow = carry(a, b, ks[j], widths[j])
        log_scale += grow
        mag = max(abs(a), abs(b))
        if mag != 0.0 and (mag > 1e100 or mag < 1e-100):
            a /= mag
            b /= mag
            log_scale += math.log(mag)

    # true incident amplitude is a * exp(log_scale); transmitted is 1
    r_amp = b / a
    t_mag = math.exp(-log_scale) / abs(a)
    t_amp = t_mag * np.exp(-1j * np.angle(a))
    T = (k_out / k_in) * t_mag**2
    R = abs(r_amp) ** 2
    return ScatteringResult(
        R=float(R), T=float(T), r_amp=complex(r_amp), t_amp=complex(t_amp),
        n_cells=steps.n_cells,
    )


def converge_scatter(potential, energy, x_min, x_max, tol=1e-8, n_start=64,
                     n_max=2**20):
    """Double the cell count until successive T values agree within tol.

    Two consecutive doublings must agree: with midpoint sampling a
    discontinuous potential can alias to the same snapped edges at n
    and 2n, so a single agreement is not trustworthy.  Returns the
    converged ScatteringResult (its n_cells field is the count actually
    used); raises ConvergenceError, carrying the T sequence, if n_max
    is exceeded.
    """
    tol = check_positive(tol, "tol")
    n = int(n_start)
    history = []
    agreements = 0
    prev = None
    while n <= n_max:
        result = transfer_matrix_scatter(
            discretize_to_steps(potential, n, x_min, x_max), energy
        )
        history.append(result.T)
        if prev is not None:
            agreements = agreements + 1 if abs(result.T - prev.T) <= tol else 0
            if agreements >= 2:
                return result
        prev = result
        n *= 2
    raise ConvergenceError(
        f"transmission did not settle within tol={tol} by n={n_max}",
        history=history,
    )

"""Command-line front end.

Subcommands: potential, fit, constants, profile, compare, oracle.
Configuration comes from a line-oriented ``key = value`` file (see
README for the key reference); --grid/--xmin/--xmax/--tol override it.
Every command is deterministic: identical config and inputs produce
byte-identical output.

Exit codes: 0 success, 1 other error, 2 config error, 3 domain error,
4 convergence error, 5 matching error.
"""

import argparse
import io as _io
import sys

import numpy as np

from . import __version__
from .core import (
    coefficient_profile,
    solve_boundary_constants,
    validity_report,
    wkb_far_field,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    IWKBError,
    MatchingError,
)
from .fitting import fit_piecewise
from .io import load_config, load_table, write_csv, write_kv
from .piecewise import PiecewiseModel, kerr_dirac_model, model_from_text, model_to_text
from .potentials import (
    ConstantPotential,
    ExponentialPotential,
    KerrDiracPotential,
    PhysicalParams,
    QuadraticPotential,
    RectangularBarrier,
    TabulatedPotential,
)
from .steps import converge_scatter, discretize_to_steps, transfer_matrix_scatter

_POTENTIAL_TYPES = (
    "constant", "rectangular", "exponential", "quadratic", "kerr_dirac", "tabulated",
)


class _Run:
    """Typed access to the merged config/flag mapping."""

    def __init__(self, mapping, args):
        self.cfg = dict(mapping)
        self.args = args

    def has(self, key):
        return key in self.cfg

    def get_str(self, key, default=None, required=False):
        if key not in self.cfg:
            if required:
                raise ConfigError(f"missing required config key {key!r}")
            return default
        return self.cfg[key]

    def _convert(self, key, conv, default, required):
        raw = self.get_str(key, None, required)
        if raw is None:
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc

    def get_float(self, key, default=None, required=False):
        return self._convert(key, float, default, required)

    def get_int(self, key, default=None, required=False):
        return self._convert(key, int, default, required)

    # -- derived objects ---------------------------------------------------

    def model(self, required=True):
        spec = self.get_str("model")
        if spec is None:
            if required:
                raise ConfigError("missing required config key 'model'")
            return None
        if spec.startswith("builtin:"):
            name = spec.split(":", 1)[1]
            if name != "kerr_dirac":
                raise ConfigError(f"unknown builtin model {name!r}")
            model = kerr_dirac_model(x_min=self.get_float("model_x_min", -50.0))
        else:
            try:
                with open(spec, "r", encoding="utf-8") as fh:
                    model = model_from_text(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read model {spec}: {exc}") from exc
        energy = self.get_float("energy")
        if energy is not None and energy != model.energy:
            from dataclasses import replace

            model = replace(model, energy=energy, u_offsets=None)
        return model

    def potential_spec(self, required=True):
        kind = self.get_str("type")
        if kind is None:
            if required:
                raise ConfigError("missing required config key 'type'")
            return None
        if kind not in _POTENTIAL_TYPES:
            raise ConfigError(
                f"unknown potential type {kind!r}; expected one of {_POTENTIAL_TYPES}"
            )
        if kind == "constant":
            return ConstantPotential(self.get_float("v0", required=True))
        if kind == "rectangular":
            return RectangularBarrier(
                self.get_float("v0", required=True),
                self.get_float("barrier_lo", required=True),
                self.get_float("barrier_hi", required=True),
            )
        if kind == "exponential":
            return ExponentialPotential(
                self.get_float("a", required=True),
                self.get_float("b", required=True),
                self.get_float("c", required=True),
            )
        if kind == "quadratic":
            return QuadraticPotential(
                self.get_float("a", required=True),
                self.get_float("b", required=True),
                self.get_float("c", required=True),
            )
        if kind == "tabulated":
            path = self.get_str("table", required=True)
            x, v = load_table(path)
            return TabulatedPotential(x, v)
        params = PhysicalParams(
            a=self.get_float("spin", required=True),
            M=self.get_float("mass", 1.0),
            m_p=self.get_float("particle_mass", required=True),
            sigma=self.get_float("frequency", required=True),
            lam=self.get_float("separation", required=True),
            m=self.get_float("azimuthal", required=True),
            l=self.get_float("orbital", 0.5),
        )
        coord_map = self.get_str("map", "identity")
        if coord_map not in ("identity", "tortoise"):
            r_tab, x_tab = load_table(coord_map)
            coord_map = (r_tab, x_tab)
        convention = self.get_str("omega_convention", "squared")
        if convention not in ("squared", "linear"):
            raise ConfigError("omega_convention must be 'squared' or 'linear'")
        return KerrDiracPotential(
            params, coord_map=coord_map, omega_squared=(convention == "squared")
        )

    def evaluation_object(self):
        """Model if configured, otherwise the analytic/tabulated potential."""
        model = self.model(required=False)
        if model is not None:
            return model
        spec = self.potential_spec(required=False)
        if spec is None:
            raise ConfigError("config needs either 'model' or 'type'")
        return spec

    def domain(self, obj):
        x_min = self.args.xmin if self.args.xmin is not None else self.get_float("x_min")
        x_max = self.args.xmax if self.args.xmax is not None else self.get_float("x_max")
        if x_min is None and isinstance(obj, PiecewiseModel):
            x_min = obj.x_min
        if x_max is None and isinstance(obj, PiecewiseModel):
            x_max = obj.x_max
        if x_min is None or x_max is None:
            raise ConfigError("x_min and x_max are required (config or flags)")
        if not x_min < x_max:
            raise ConfigError(f"need x_min < x_max, got {x_min}, {x_max}")
        return float(x_min), float(x_max)

    def grid(self, x_min, x_max):
        n = self.args.grid if self.args.grid is not None else self.get_int("grid", 721)
        if n < 2:
            raise ConfigError(f"grid size must be >= 2, got {n}")
        return np.linspace(x_min, x_max, n)

    def energy(self, obj=None):
        energy = self.get_float("energy")
        if energy is None and isinstance(obj, PiecewiseModel):
            energy = obj.energy
        if energy is None:
            raise ConfigError("missing required config key 'energy'")
        return energy

    def tol(self, key, default):
        if self.args.tol is not None:
            return self.args.tol
        return self.get_float(key, default)

    def far_field(self, model, x_min, x_max):
        source = self.get_str("far_field", required=True)
        if source == "values":
            t = self.get_float("t_far", required=True)
            r = self.get_float("r_far", required=True)
            return t, r, {"far_field": "given values"}
        if source == "oracle":
            if self.has("t_far") or self.has("r_far"):
                raise ConfigError("far_field=oracle conflicts with t_far/r_far")
            result = self._oracle(model, self.energy(model), x_min, x_max)
            return result.T, result.R, {
                "far_field": f"step oracle (n={result.n_cells})"
            }
        raise ConfigError("far_field must be 'values' or 'oracle'")

    def _oracle(self, obj, energy, x_min, x_max):
        n_fixed = self.get_int("oracle_n")
        if n_fixed is not None:
            return transfer_matrix_scatter(
                discretize_to_steps(obj, n_fixed, x_min, x_max), energy
            )
        return converge_scatter(
            obj, energy, x_min, x_max, tol=self.tol("oracle_tol", 1e-8)
        )


# ---------------------------------------------------------------------------
# Commands (each returns output text)
# ---------------------------------------------------------------------------


def _require_format(run, expected):
    fmt = run.args.format
    if fmt is not None and fmt != expected:
        raise ConfigError(f"this command emits {expected}, not {fmt}")


def cmd_potential(run):
    _require_format(run, "csv")
    obj = run.evaluation_object()
    x_min, x_max = run.domain(obj)
    grid = run.grid(x_min, x_max)
    values = obj.potential(grid) if isinstance(obj, PiecewiseModel) else obj.evaluate(grid)
    buf = _io.StringIO()
    write_csv(buf, ("x", "V"), [grid, np.asarray(values, dtype=float)])
    return buf.getvalue()


def cmd_fit(run):
    path = run.args.samples or run.get_str("samples")
    if path is None:
        raise ConfigError("fit needs a samples table (--samples or samples=)")
    x, v = load_table(path)
    knots = run.args.knots if run.args.knots is not None else run.get_str("knots", "auto")
    if isinstance(knots, str) and knots != "auto":
        try:
            knots = [float(part) for part in knots.split(",") if part.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad knots list: {exc}") from exc
    form = run.args.form or run.get_str("form", "exponential")
    weight = run.get_float("continuity_weight")
    result = fit_piecewise(
        x, v, knots=knots, form=form,
        energy=run.get_float("energy", 0.0),
        tol_fit=run.tol("tol_fit", 1e-3),
        continuity_weight=weight,
        max_knots=run.get_int("max_knots", 24),
    )
    report = result.report
    lines = [model_to_text(result.model).rstrip("\n")]
    lines.append(f"# max_residual = {report.max_residual:.17g}")
    lines.append(f"# rms_residual = {report.rms_residual:.17g}")
    lines.append(f"# continuity_weight = {report.continuity_weight:.17g}")
    for xk, dv, ds in zip(report.knots, report.knot_value_mismatch,
                          report.knot_slope_mismatch):
        lines.append(
            f"# knot {xk:.17g}: value_mismatch = {dv:.17g}, slope_mismatch = {ds:.17g}"
        )
    return "\n".join(lines) + "\n"


def _solve_constants(run):
    model = run.model(required=True)
    x_min, x_max = run.domain(model)
    x_far = run.get_float("x_far", x_max)
    if not x_min < x_far:
        raise ConfigError(f"x_far = {x_far} must exceed x_min = {x_min}")
    t_far, r_far, prov = run.far_field(model, x_min, x_max)
    return model, x_min, x_far, solve_boundary_constants(
        model, t_far, r_far,
        x_min=x_min, x_far=x_far,
        k_inner=run.get_float("k_inner"),
        k_far=run.get_float("k_far"),
        provenance=prov,
    )


def cmd_constants(run):
    _require_format(run, "kv")
    _, _, _, constants = _solve_constants(run)
    buf = _io.StringIO()
    write_kv(buf, constants.to_record())
    return buf.getvalue()


def cmd_profile(run):
    _require_format(run, "csv")
    model, x_min, _, constants = _solve_constants(run)
    _, x_max = run.domain(model)
    grid = run.grid(x_min, x_max)
    prof = coefficient_profile(model, constants, grid)
    buf = _io.StringIO()
    prof.write_csv(buf)
    return buf.getvalue()


def cmd_compare(run):
    _require_format(run, "kv")
    obj = run.evaluation_object()
    x_min, x_max = run.domain(obj)
    energy = run.energy(obj)

    if isinstance(obj, PiecewiseModel):
        t_wkb, _ = wkb_far_field(obj)
        metric = validity_report(obj, run.grid(x_min, x_max)).metric
    else:
        t_wkb, _ = wkb_far_field(obj, energy=energy, x_lo=x_min, x_hi=x_max)
        grid = run.grid(x_min, x_max)
        v = np.asarray(obj.evaluate(grid), dtype=float)
        kmag = np.sqrt(np.abs(energy - v))
        with np.errstate(divide="ignore", invalid="ignore"):
            dk = np.abs(np.gradient(kmag, grid))
            metric = np.where(kmag > 0, dk / kmag**2, np.inf)
    oracle = run._oracle(obj, energy, x_min, x_max)
    max_validity = float(np.max(metric))
    gap = abs(t_wkb - oracle.T)
    record = {
        "format": 1,
        "T_iwkb": t_wkb,
        "T_oracle": oracle.T,
        "abs_gap": gap,
        "rel_gap": gap / oracle.T if oracle.T != 0.0 else float("inf"),
        "max_validity": max_validity,
    }
    if max_validity > 0.05:
        record["warning"] = (
            "WKB validity metric exceeds 0.05; the pointwise WKB "
            "preconditions fail somewhere in this domain"
        )
    buf = _io.StringIO()
    write_kv(buf, record)
    return buf.getvalue()


def cmd_oracle(run):
    _require_format(run, "kv")
    obj = run.evaluation_object()
    x_min, x_max = run.domain(obj)
    result = run._oracle(obj, run.energy(obj), x_min, x_max)
    buf = _io.StringIO()
    write_kv(buf, result.to_record())
    return buf.getvalue()


_COMMANDS = {
    "potential": cmd_potential,
    "fit": cmd_fit,
    "constants": cmd_constants,
    "profile": cmd_profile,
    "compare": cmd_compare,
    "oracle": cmd_oracle,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="iwkb",
        description="Position-dependent reflection/transmission coefficients "
                    "for 1-D wave equations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "kv"), help="output format")
    common.add_argument("--grid", type=int, help="number of grid points")
    common.add_argument("--xmin", type=float, help="domain lower bound")
    common.add_argument("--xmax", type=float, help="domain upper bound")
    common.add_argument("--tol", type=float, help="tolerance override")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("potential", parents=[common],
                   help="emit (x, V) samples as CSV")
    fit = sub.add_parser("fit", parents=[common],
                         help="fit a piecewise model to a samples table")
    fit.add_argument("--samples", help="two-column samples file")
    fit.add_argument("--knots", help="comma-separated interior knots, or 'auto'")
    fit.add_argument("--form", choices=("exponential", "quadratic"))
    sub.add_parser("constants", parents=[common],
                   help="solve and emit the boundary constants")
    sub.add_parser("profile", parents=[common],
                   help="emit the pointwise coefficient profile as CSV")
    sub.add_parser("compare", parents=[common],
                   help="compare the WKB far field against the step oracle")
    sub.add_parser("oracle", parents=[common],
                   help="run the transfer-matrix oracle")
    return parser


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "samples"):
        args.samples = None
        args.knots = None
        args.form = None
    try:
        mapping = load_config(args.config) if args.config else {}
        run = _Run(mapping, args)
        text = _COMMANDS[args.command](run)
        _emit(text, args.out)
        return 0
    except BrokenPipeError:
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MatchingError as exc:
        print(f"matching error: {exc}", file=sys.stderr)
        return 5
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except IWKBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

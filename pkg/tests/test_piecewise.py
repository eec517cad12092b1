import math

import numpy as np
import pytest

from iwkb.errors import DomainError, ForbiddenRegionError, TurningPointError
from iwkb.piecewise import (
    ChainedEiconal,
    PiecewiseModel,
    Segment,
    chain_eiconal,
    eiconal_closed_form,
    eiconal_quadrature,
    eval_segment,
    kerr_dirac_model,
    local_wavenumber,
    model_from_text,
    model_to_text,
)

E_REF = 0.64


def allowed_interior(seg, energy, n):
    """n points strictly inside the classically allowed part of a segment."""
    lo, hi = seg.x_lo, seg.x_hi
    tps = seg.turning_points(energy)
    if tps:
        t = tps[0]
        probe = lo + 1e-9 * (hi - lo)
        if seg.wavenumber_sq(probe, energy) > 0:
            hi = t
        else:
            lo = t
    pad = 0.02 * (hi - lo)
    return np.linspace(lo + pad, hi - pad, n)


class TestSegment:
    def test_constant_quadratic(self):
        seg = Segment("quadratic", 1.0, 0.0, 0.0, 0.0, 10.0)
        assert eval_segment(seg, 7.0) == 1.0

    def test_table_row_values(self):
        first = Segment("exponential", 0.0, -0.187354, -3.75, -50.0, 0.0)
        assert first.potential(0.0) == pytest.approx(-0.187354, abs=1e-12)
        last = Segment("exponential", 0.63543098, 0.2228925, 45.0, 208.0, 310.0)
        assert last.potential(310.0) == pytest.approx(
            0.63543098 + 0.2228925 * math.exp(-310.0 / 45.0), rel=1e-14
        )
        assert last.potential(310.0) == pytest.approx(0.6356578, abs=1e-6)

    def test_outside_segment_rejected(self):
        seg = Segment("quadratic", 1.0, 0.0, 0.0, 0.0, 10.0)
        with pytest.raises(DomainError):
            seg.potential(11.0)

    def test_bad_interval_rejected(self):
        with pytest.raises(DomainError):
            Segment("quadratic", 0.0, 0.0, 0.0, 2.0, 1.0)
        with pytest.raises(DomainError):
            Segment("exponential", 0.0, 1.0, 0.0, 0.0, 1.0)

    def test_quadratic_turning_points(self):
        # V = x^2 crosses E = 1 at +-1
        seg = Segment("quadratic", 0.0, 0.0, 1.0, -3.0, 3.0)
        assert seg.turning_points(1.0) == pytest.approx([-1.0, 1.0])


class TestLocalWavenumber:
    def test_free_value(self):
        model = PiecewiseModel(
            (Segment("exponential", 0.0, 0.0, 1.0, -10.0, 10.0),), energy=0.64
        )
        k, evan = local_wavenumber(model, 0.0)
        assert k == pytest.approx(0.8, abs=1e-15)
        assert not evan

    def test_turning_point_tagged(self):
        model = PiecewiseModel(
            (Segment("quadratic", 0.64, 0.0, 0.0, -1.0, 1.0),), energy=0.64
        )
        k, evan = local_wavenumber(model, 0.5)
        assert k == 0.0
        assert evan

    def test_reference_far_value(self):
        model = kerr_dirac_model()
        k, evan = local_wavenumber(model, 310.0)
        assert not evan
        assert k == pytest.approx(0.0659, abs=1e-4)

    def test_evanescent_magnitude(self):
        model = kerr_dirac_model()
        k, evan = local_wavenumber(model, 5.0)
        assert evan
        v = model.potential(5.0)
        assert k == pytest.approx(math.sqrt(v - 0.64), rel=1e-12)


class TestEiconalClosedForm:
    @pytest.mark.parametrize("seg_idx", range(5))
    def test_derivative_identity_reference_segments(self, seg_idx):
        seg = kerr_dirac_model().segments[seg_idx]
        for x in allowed_interior(seg, E_REF, 20):
            h = 1e-6 * max(1.0, abs(x))
            du = (
                seg.antiderivative(x + h, E_REF) - seg.antiderivative(x - h, E_REF)
            ) / (2 * h)
            k = math.sqrt(E_REF - seg.potential(x))
            assert du == pytest.approx(k, rel=1e-6)

    def test_derivative_identity_quadratic_forms(self):
        rng = np.random.default_rng(3)
        segs = [
            Segment("quadratic", 0.5, 0.01, -0.0001, 0.0, 10.0),
            Segment("quadratic", 0.1, -0.02, 0.001, -5.0, 5.0),
            Segment("quadratic", 0.2, 0.03, 0.0, -4.0, 4.0),
            Segment("quadratic", 0.3, 0.0, 0.0, -4.0, 4.0),
        ]
        for seg in segs:
            for x in allowed_interior(seg, E_REF, 20):
                h = 1e-7 * max(1.0, abs(x))
                du = (
                    seg.antiderivative(x + h, E_REF)
                    - seg.antiderivative(x - h, E_REF)
                ) / (2 * h)
                k = math.sqrt(E_REF - seg.potential(x))
                assert du == pytest.approx(k, rel=1e-5), seg

    def test_constant_segment_linear_phase(self):
        seg = Segment("exponential", 0.0, 0.0, 1.0, 0.0, 20.0)
        inc = seg.antiderivative(12.0, 0.64) - seg.antiderivative(2.0, 0.64)
        assert inc == pytest.approx(0.8 * 10.0, rel=1e-14)
        qseg = Segment("quadratic", 0.0, 0.0, 0.0, 0.0, 20.0)
        inc = qseg.antiderivative(12.0, 0.64) - qseg.antiderivative(2.0, 0.64)
        assert inc == pytest.approx(8.0, rel=1e-14)

    def test_strict_interior_required(self):
        seg = Segment("exponential", 0.603, 0.415646, 8.79, 0.0, 30.0)
        with pytest.raises(TurningPointError):
            eiconal_closed_form(seg, E_REF, 5.0)  # forbidden there

    def test_exponential_below_floor_branch(self):
        # a > E with a deep negative tail: arctan branch of the phase
        seg = Segment("exponential", 1.0, -2.0, 10.0, 0.0, 30.0)
        for x in np.linspace(1.0, 5.0, 9):
            h = 1e-7
            du = (
                seg.antiderivative(x + h, E_REF) - seg.antiderivative(x - h, E_REF)
            ) / (2 * h)
            k = math.sqrt(E_REF - seg.potential(x))
            assert du == pytest.approx(k, rel=1e-5)


class TestEiconalQuadrature:
    def test_constant_value(self):
        model = PiecewiseModel(
            (Segment("quadratic", 0.0, 0.0, 0.0, 0.0, 10.0),), energy=0.64
        )
        assert eiconal_quadrature(model, 0.0, 10.0) == pytest.approx(8.0, abs=1e-10)

    @pytest.mark.parametrize("seg_idx", range(5))
    def test_matches_closed_form_reference(self, seg_idx):
        seg = kerr_dirac_model().segments[seg_idx]
        xs = allowed_interior(seg, E_REF, 2)
        lo, hi = xs[0], xs[-1]
        inc = seg.antiderivative(hi, E_REF) - seg.antiderivative(lo, E_REF)
        model = PiecewiseModel((seg,), energy=E_REF)
        assert abs(eiconal_quadrature(model, lo, hi) - inc) <= 1e-9

    def test_quadratic_closed_form_vs_quadrature(self):
        seg = Segment("quadratic", 0.5, 0.01, -0.0001, 0.0, 10.0)
        inc = seg.antiderivative(10.0, E_REF) - seg.antiderivative(0.0, E_REF)
        model = PiecewiseModel((seg,), energy=E_REF)
        assert abs(eiconal_quadrature(model, 0.0, 10.0) - inc) <= 1e-9

    def test_turning_point_inside_interval_rejected(self):
        model = kerr_dirac_model()
        with pytest.raises(TurningPointError):
            eiconal_quadrature(model, -10.0, 10.0)


class TestChaining:
    def test_single_constant_segment(self):
        model = PiecewiseModel(
            (Segment("exponential", 0.0, 0.0, 1.0, 0.0, 10.0),), energy=0.64
        )
        chained = chain_eiconal(model, x_ref=0.0)
        assert chained.eiconal(0.0) == pytest.approx(0.0, abs=1e-15)
        assert chained.eiconal(5.0) == pytest.approx(4.0, rel=1e-14)

    def test_refinement_invariance(self):
        base = Segment("exponential", 0.1, 0.3, 6.0, 0.0, 20.0)
        one = PiecewiseModel((base,), energy=1.5)
        left = Segment("exponential", 0.1, 0.3, 6.0, 0.0, 7.0)
        right = Segment("exponential", 0.1, 0.3, 6.0, 7.0, 20.0)
        two = PiecewiseModel((left, right), energy=1.5)
        c1 = chain_eiconal(one, x_ref=2.0)
        c2 = chain_eiconal(two, x_ref=2.0)
        xs = np.linspace(0.0, 20.0, 101)
        assert np.max(np.abs(c1.eiconal(xs) - c2.eiconal(xs))) <= 1e-10

    def test_monotone_where_allowed(self):
        seg = Segment("quadratic", 0.1, 0.01, 0.0, 0.0, 30.0)
        model = chain_eiconal(PiecewiseModel((seg,), energy=1.0), x_ref=0.0)
        xs = np.linspace(0.0, 30.0, 200)
        assert np.all(np.diff(model.eiconal(xs)) > 0)

    def test_forbidden_region_raises_with_segments(self):
        model = kerr_dirac_model()
        with pytest.raises(ForbiddenRegionError) as err:
            chain_eiconal(model, x_ref=-50.0)
        assert err.value.segments  # names the affected segments

    def test_windowed_chaining_reference_model(self):
        model = kerr_dirac_model()
        chain = ChainedEiconal(model, x_ref=-50.0)
        # four allowed windows separated by the barrier intervals
        spans = [(lo, hi) for lo, hi, _ in chain.windows]
        assert len(spans) == 4
        assert spans[0] == (pytest.approx(-50.0), pytest.approx(0.0))
        assert spans[-1][1] == pytest.approx(310.0)
        # continuity at the only two-sided-allowed knot (x = 208)
        u_left = chain.u(208.0 - 1e-9)
        u_right = chain.u(208.0 + 1e-9)
        assert abs(u_left - u_right) <= 1e-7
        # anchored at x_ref
        assert chain.u(-50.0) == pytest.approx(0.0, abs=1e-12)
        # strictly increasing inside a window
        xs = np.linspace(-49.9, -0.1, 50)
        assert np.all(np.diff(chain.u(xs)) > 0)
        # undefined in a forbidden window
        assert math.isnan(chain.u(10.0))

    def test_two_sided_knot_continuity_exact(self):
        model = kerr_dirac_model()
        chain = ChainedEiconal(model, x_ref=-50.0)
        seg4, seg5 = model.segments[3], model.segments[4]
        piece4 = chain.piece_of(207.999)
        piece5 = chain.piece_of(208.001)
        u4 = seg4.antiderivative(208.0, model.energy) + piece4[3]
        u5 = seg5.antiderivative(208.0, model.energy) + piece5[3]
        assert abs(u4 - u5) <= 1e-10


class TestReferenceModel:
    def test_layout(self, ref_model):
        assert len(ref_model.segments) == 5
        assert ref_model.energy == 0.64
        assert ref_model.x_min == -50.0
        assert ref_model.x_max == 310.0
        assert list(ref_model.knots) == [0.0, 30.0, 109.0, 208.0]

    def test_table_is_discontinuous_at_zero(self, ref_model):
        jumps = ref_model.knot_mismatches()
        assert jumps[0][0] == 0.0
        assert jumps[0][1] == pytest.approx(1.018646 - (-0.187354), abs=1e-9)

    def test_truncated_tail_is_flat(self, ref_model):
        assert abs(ref_model.potential(-50.0)) < 1e-6
        assert ref_model.potential(-50.0) == pytest.approx(-3.0343793742693669e-07, rel=1e-9)

    def test_forbidden_windows(self, ref_model):
        spans = [(lo, hi) for lo, hi, _ in ref_model.forbidden_regions()]
        assert len(spans) == 3
        assert spans[0][0] == pytest.approx(0.0)
        assert spans[0][1] == pytest.approx(21.2623, abs=1e-3)
        assert spans[1] == (pytest.approx(30.0), pytest.approx(64.3168, abs=1e-3))
        assert spans[2] == (pytest.approx(109.0), pytest.approx(154.1173, abs=1e-3))

    def test_knot_ownership(self, ref_model):
        # a knot belongs to the segment on its right
        assert ref_model.potential(0.0) == pytest.approx(1.018646, abs=1e-12)
        assert ref_model.segments[0].potential(0.0) == pytest.approx(
            -0.187354, abs=1e-12
        )

    def test_custom_truncation(self):
        model = kerr_dirac_model(x_min=-80.0)
        assert model.x_min == -80.0
        with pytest.raises(DomainError):
            kerr_dirac_model(x_min=10.0)


class TestSerialization:
    def test_round_trip_bit_exact(self, ref_model):
        text = model_to_text(ref_model)
        back = model_from_text(text)
        assert back.energy == ref_model.energy
        for s0, s1 in zip(ref_model.segments, back.segments):
            assert (s0.form, s0.a, s0.b, s0.c, s0.x_lo, s0.x_hi) == (
                s1.form, s1.a, s1.b, s1.c, s1.x_lo, s1.x_hi
            )

    def test_round_trip_awkward_floats(self):
        seg = Segment("quadratic", 1 / 3, -2 / 7, 1e-17, -1 / 9, 5 / 3)
        model = PiecewiseModel((seg,), energy=math.pi / 5, x_ref=-1 / 9)
        back = model_from_text(model_to_text(model))
        s = back.segments[0]
        assert (s.a, s.b, s.c, s.x_lo, s.x_hi) == (
            seg.a, seg.b, seg.c, seg.x_lo, seg.x_hi
        )
        assert back.energy == model.energy
        assert back.x_ref == model.x_ref

    def test_chained_ref_restored(self):
        seg = Segment("exponential", 0.0, 0.1, 5.0, 0.0, 10.0)
        model = chain_eiconal(PiecewiseModel((seg,), energy=0.64), x_ref=2.0)
        back = model_from_text(model_to_text(model))
        assert back.u_offsets is not None
        xs = np.linspace(0.0, 10.0, 21)
        assert np.max(np.abs(back.eiconal(xs) - model.eiconal(xs))) <= 1e-12

    def test_bad_header_rejected(self):
        with pytest.raises(DomainError):
            model_from_text("format=2 E=1 x_ref=none\n")

    def test_model_requires_contiguity(self):
        a = Segment("quadratic", 0.0, 0.0, 0.0, 0.0, 1.0)
        b = Segment("quadratic", 0.0, 0.0, 0.0, 1.5, 2.0)
        with pytest.raises(DomainError):
            PiecewiseModel((a, b), energy=1.0)

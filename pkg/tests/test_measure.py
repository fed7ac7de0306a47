import json
import math

import numpy as np
import pytest

from masspoly import (
    DuplicateLocation,
    ExponentOutOfRange,
    GenJacobiSpec,
    HermiteSpec,
    LaguerreSpec,
    MassNotPositive,
    MassPoint,
    MeasureSpec,
    NoEndpoint,
    PowerWeightSpec,
    SpecError,
    UnknownLocation,
    check_conditions,
    christoffel_modified,
    legendre,
    mean_convergence_endpoints,
    measure_from_json,
    measure_to_json,
    validate,
)


def test_validate_accepts_legal_specs():
    validate(legendre())
    validate(MeasureSpec(GenJacobiSpec(-0.5, 0.5, ((0.0, 1.0),)), (MassPoint(1.0, 2.0),)))
    validate(MeasureSpec(LaguerreSpec(1.0), (MassPoint(0.0, 0.5),)))
    validate(MeasureSpec(HermiteSpec()))


def test_validate_edge_exponent_out_of_range():
    with pytest.raises(ExponentOutOfRange):
        validate(MeasureSpec(GenJacobiSpec(-2.0, 0.0)))
    with pytest.raises(ExponentOutOfRange):
        validate(MeasureSpec(LaguerreSpec(-1.0)))


def test_validate_singularity_constraints():
    with pytest.raises(ExponentOutOfRange):
        validate(MeasureSpec(GenJacobiSpec(0.0, 0.0, ((0.3, -1.5),))))
    with pytest.raises(SpecError):
        validate(MeasureSpec(GenJacobiSpec(0.0, 0.0, ((1.0, 1.0),))))
    with pytest.raises(DuplicateLocation):
        validate(MeasureSpec(GenJacobiSpec(0.0, 0.0, ((0.3, 1.0), (0.3, 2.0)))))


def test_validate_mass_constraints():
    with pytest.raises(MassNotPositive):
        validate(legendre([MassPoint(0.3, 0.0)]))
    with pytest.raises(DuplicateLocation):
        validate(legendre([MassPoint(0.3, 1.0), MassPoint(0.3, 2.0)]))
    with pytest.raises(SpecError):
        validate(legendre([MassPoint(1.5, 1.0)]))
    with pytest.raises(SpecError):
        validate(MeasureSpec(LaguerreSpec(0.0), (MassPoint(-1.0, 1.0),)))


def test_measure_json_round_trip():
    spec = MeasureSpec(
        GenJacobiSpec(-0.5, 0.5, ((0.0, 1.0),)),
        (MassPoint(-1.0, 0.5), MassPoint(0.3, 0.25)),
    )
    again = measure_from_json(measure_to_json(spec))
    assert again == spec
    d = json.loads(measure_to_json(spec))
    assert d["base"]["kind"] == "genjacobi"
    with pytest.raises(SpecError):
        measure_from_json('{"base": {"kind": "unknown"}}')


def test_power_weight_values_and_mass_override():
    spec = legendre([MassPoint(0.3, 1.0)])
    w = PowerWeightSpec(a=0.5, b=0.0, at_mass=(2.5,))
    x = np.array([0.0, 0.3, 0.84])
    vals = w.values(x, spec)
    assert vals[0] == pytest.approx(1.0)
    assert vals[1] == pytest.approx(2.5)  # overridden at the mass point
    assert vals[2] == pytest.approx((1.0 - 0.84) ** 0.5)
    with pytest.raises(SpecError):
        PowerWeightSpec(at_mass=(0.0,)).values(x, spec)


def test_mean_convergence_endpoints_legendre():
    p0, p1 = mean_convergence_endpoints(0.0, 0.0)
    assert p0 == pytest.approx(4.0 / 3.0)
    assert p1 == pytest.approx(4.0)


def test_mean_convergence_endpoints_need_large_exponent():
    with pytest.raises(NoEndpoint):
        mean_convergence_endpoints(-0.6, -0.7)


def test_check_conditions_matches_endpoint_window():
    spec = legendre([MassPoint(1.0, 1.0)])
    u = v = PowerWeightSpec()
    # unweighted Legendre window is (4/3, 4)
    for p, expect in [(1.25, False), (1.5, True), (2.0, True), (3.0, True), (4.5, False)]:
        assert check_conditions(spec, u, v, p).verdict is expect, p


def test_check_conditions_rejects_bad_p_and_base():
    u = v = PowerWeightSpec()
    with pytest.raises(SpecError):
        check_conditions(legendre(), u, v, 1.0)
    with pytest.raises(SpecError):
        check_conditions(MeasureSpec(LaguerreSpec(0.0)), u, v, 2.0)


def test_condition_report_structure():
    rep = check_conditions(legendre(), PowerWeightSpec(), PowerWeightSpec(), 2.0)
    assert rep.line("upper.edge+1").satisfied
    d = rep.to_dict()
    assert set(d) == {"verdict", "lines"}
    assert all(ln["margin"] > 0 for ln in d["lines"] if "upper" in ln["label"])


def test_christoffel_modified_interior_and_edge():
    spec = legendre([MassPoint(0.3, 1.0), MassPoint(1.0, 0.5)])
    mod, w_A = christoffel_modified(spec, (0.3,))
    assert mod.masses == ()
    assert mod.base.singularities == ((0.3, 2.0),)
    x = np.array([0.7])
    assert w_A(x, 4.0)[0] == pytest.approx(abs(0.7 - 0.3) ** 0.5)

    mod2, _ = christoffel_modified(spec, (1.0,))
    assert mod2.base.alpha == pytest.approx(2.0)

    with pytest.raises(UnknownLocation):
        christoffel_modified(spec, (0.5,))
    with pytest.raises(DuplicateLocation):
        christoffel_modified(spec, (0.3, 0.3))


def test_christoffel_modified_laguerre_zero_only():
    spec = MeasureSpec(LaguerreSpec(1.0), (MassPoint(0.0, 1.0),))
    mod, _ = christoffel_modified(spec, (0.0,))
    assert mod.base.alpha == pytest.approx(3.0)


def test_density_genjacobi():
    base = GenJacobiSpec(0.5, -0.5, ((0.2, 1.0),))
    x = np.array([0.6])
    expect = (0.4**0.5) * (1.6**-0.5) * 0.4
    assert base.density(x)[0] == pytest.approx(expect)

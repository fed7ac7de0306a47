"""Measure and weight specifications, validation and analytic condition checkers.

The central object is a measure of the form

    nu = mu + sum_i M_i * delta_{a_i}

where mu is a generalized Jacobi weight on [-1,1] (or a Laguerre / Hermite
weight) and the a_i are finitely many mass points.  Power weights u, v enter
through the boundedness inequalities of the partial-sum operators; the
checkers evaluate those inequalities line by line with signed margins.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DuplicateLocation,
    ExponentOutOfRange,
    MassNotPositive,
    NoEndpoint,
    SpecError,
    UnknownLocation,
)


# ----------------------------------------------------------------------
# base weights


@dataclass(frozen=True)
class GenJacobiSpec:
    """Weight (1-x)^alpha (1+x)^beta prod_i |x - t_i|^gamma_i on [-1,1].

    ``singularities`` is a tuple of (t_i, gamma_i) pairs with t_i in (-1,1).
    """

    alpha: float = 0.0
    beta: float = 0.0
    singularities: tuple = ()

    kind = "genjacobi"
    support = (-1.0, 1.0)

    @property
    def is_classical(self):
        return len(self.singularities) == 0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        w = (1.0 - x) ** self.alpha * (1.0 + x) ** self.beta
        for t, g in self.singularities:
            w = w * np.abs(x - t) ** g
        return w


@dataclass(frozen=True)
class LaguerreSpec:
    """Weight e^{-x} x^alpha on [0, inf)."""

    alpha: float = 0.0

    kind = "laguerre"
    support = (0.0, math.inf)
    singularities = ()

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-x) * x ** self.alpha


@dataclass(frozen=True)
class HermiteSpec:
    """Weight e^{-x^2} on the real line."""

    kind = "hermite"
    support = (-math.inf, math.inf)
    singularities = ()

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(x**2))


@dataclass(frozen=True)
class MassPoint:
    location: float
    mass: float


@dataclass(frozen=True)
class MeasureSpec:
    base: object
    masses: tuple = ()

    @property
    def mass_locations(self):
        return tuple(m.location for m in self.masses)

    def with_masses(self, masses):
        return replace(self, masses=tuple(masses))


def legendre(masses=()):
    """Convenience constructor: Lebesgue measure on [-1,1] plus masses."""
    return MeasureSpec(GenJacobiSpec(0.0, 0.0), tuple(masses))


# ----------------------------------------------------------------------
# validation


def validate(spec: MeasureSpec) -> MeasureSpec:
    """Check all type invariants; return the spec unchanged if they hold."""
    base = spec.base
    if isinstance(base, GenJacobiSpec):
        if base.alpha <= -1 or base.beta <= -1:
            raise ExponentOutOfRange(
                f"edge exponents must be > -1, got alpha={base.alpha}, beta={base.beta}"
            )
        ts = [t for t, _ in base.singularities]
        for t, g in base.singularities:
            if g <= -1:
                raise ExponentOutOfRange(f"singularity exponent at t={t} must be > -1, got {g}")
            if not (-1.0 < t < 1.0):
                raise SpecError(f"singularity location {t} not strictly inside (-1,1)")
        if len(set(ts)) != len(ts):
            raise DuplicateLocation(f"repeated singularity locations in {ts}")
    elif isinstance(base, LaguerreSpec):
        if base.alpha <= -1:
            raise ExponentOutOfRange(f"Laguerre alpha must be > -1, got {base.alpha}")
    elif isinstance(base, HermiteSpec):
        pass
    else:
        raise SpecError(f"unknown base weight {base!r}")

    lo, hi = base.support
    locs = [m.location for m in spec.masses]
    if len(set(locs)) != len(locs):
        raise DuplicateLocation(f"repeated mass locations in {locs}")
    for m in spec.masses:
        if m.mass <= 0:
            raise MassNotPositive(f"mass at {m.location} must be positive, got {m.mass}")
        if not (lo <= m.location <= hi):
            raise SpecError(f"mass location {m.location} outside the support [{lo}, {hi}]")
    return spec


# ----------------------------------------------------------------------
# power weights


@dataclass(frozen=True)
class PowerWeightSpec:
    """u(x) = (1-x)^a (1+x)^b prod |x-t_i|^g_i, with prescribed values at mass points.

    ``g`` is aligned with the singularity list of the measure's base weight;
    ``at_mass`` is aligned with the measure's mass list and must be finite and
    strictly positive.
    """

    a: float = 0.0
    b: float = 0.0
    g: tuple = ()
    at_mass: tuple = ()

    def values(self, x, measure: MeasureSpec):
        """Evaluate on an array of points; mass-point values are overridden."""
        x = np.asarray(x, dtype=float)
        base = measure.base
        with np.errstate(divide="ignore"):
            w = (1.0 - x) ** self.a * (1.0 + x) ** self.b
            sing = getattr(base, "singularities", ())
            g = self.g if self.g else (0.0,) * len(sing)
            for (t, _), gi in zip(sing, g):
                w = w * np.abs(x - t) ** gi
        at_mass = self.at_mass if self.at_mass else (1.0,) * len(measure.masses)
        for mp, val in zip(measure.masses, at_mass):
            if not (0.0 < val < math.inf):
                raise SpecError(f"weight value at mass point {mp.location} must be in (0, inf)")
            w = np.where(x == mp.location, val, w)
        return w

    @property
    def is_trivial(self):
        return (
            self.a == 0
            and self.b == 0
            and all(gi == 0 for gi in self.g)
            and all(v == 1 for v in self.at_mass)
        )


UNIT_WEIGHT = PowerWeightSpec()


# ----------------------------------------------------------------------
# boundedness condition checkers


@dataclass(frozen=True)
class ConditionLine:
    label: str
    satisfied: bool
    margin: float  # positive iff the line holds (>= 0 for the non-strict lines)


@dataclass(frozen=True)
class ConditionReport:
    lines: tuple

    @property
    def verdict(self):
        return all(line.satisfied for line in self.lines)

    def line(self, label):
        for ln in self.lines:
            if ln.label == label:
                return ln
        raise KeyError(label)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "lines": [
                {"label": ln.label, "satisfied": ln.satisfied, "margin": ln.margin}
                for ln in self.lines
            ],
        }


def check_conditions(spec: MeasureSpec, u: PowerWeightSpec, v: PowerWeightSpec, p: float) -> ConditionReport:
    """Evaluate the three inequality blocks governing uniform L^p boundedness.

    Block I (upper, strict) constrains the v-exponents, block II (lower,
    strict) the u-exponents, block III (non-strict) couples them.  Margins are
    signed so that positive means satisfied; the strict lines use
    right-minus-left, the non-strict ones u-minus-v.
    """
    validate(spec)
    base = spec.base
    if not isinstance(base, GenJacobiSpec):
        raise SpecError("condition checker applies to generalized Jacobi bases only")
    if not (1.0 < p < math.inf):
        raise SpecError(f"p must be in (1, inf), got {p}")

    alpha, beta = base.alpha, base.beta
    gammas = [g for _, g in base.singularities]
    nsing = len(gammas)
    ug = u.g if u.g else (0.0,) * nsing
    vg = v.g if v.g else (0.0,) * nsing
    s = 1.0 / p - 0.5

    lines = []

    def strict(label, lhs, rhs):
        lines.append(ConditionLine(label, lhs < rhs, rhs - lhs))

    # upper block: v exponents
    strict("upper.edge+1", v.a + (alpha + 1) * s, min(0.25, (alpha + 1) / 2))
    strict("upper.edge-1", v.b + (beta + 1) * s, min(0.25, (beta + 1) / 2))
    for i, (gam, G) in enumerate(zip(gammas, vg)):
        strict(f"upper.t{i}", G + (gam + 1) * s, min(0.5, (gam + 1) / 2))

    # lower block: u exponents
    strict("lower.edge+1", -(u.a + (alpha + 1) * s), min(0.25, (alpha + 1) / 2))
    strict("lower.edge-1", -(u.b + (beta + 1) * s), min(0.25, (beta + 1) / 2))
    for i, (gam, g) in enumerate(zip(gammas, ug)):
        strict(f"lower.t{i}", -(g + (gam + 1) * s), min(0.5, (gam + 1) / 2))

    # coupling block: v <= u exponentwise (non-strict)
    for label, uv, vv in (
        ("couple.edge+1", u.a, v.a),
        ("couple.edge-1", u.b, v.b),
        *((f"couple.t{i}", g, G) for i, (g, G) in enumerate(zip(ug, vg))),
    ):
        lines.append(ConditionLine(label, vv <= uv, uv - vv))

    return ConditionReport(tuple(lines))


def mean_convergence_endpoints(alpha: float, beta: float):
    """Endpoints (p0, p1) of the open interval of uniform L^p boundedness.

    Defined when max(alpha, beta) > -1/2; the larger exponent drives both
    formulas.  Always p0 < 2 < p1.
    """
    m = max(alpha, beta)
    if m <= -0.5:
        raise NoEndpoint(f"max(alpha, beta) = {m} <= -1/2: no finite endpoints")
    p0 = 4 * (m + 1) / (2 * m + 3)
    p1 = 4 * (m + 1) / (2 * m + 1)
    assert p0 < 2 < p1
    return p0, p1


# ----------------------------------------------------------------------
# Christoffel modification


def christoffel_modified(spec: MeasureSpec, A):
    """Multiply the continuous part by prod_{a in A} (x-a)^2; A must be mass locations.

    Returns (modified MeasureSpec without masses, w_A evaluator); the evaluator
    maps (x, p) to prod_{a in A} |x-a|^{1-2/p}.
    """
    validate(spec)
    A = tuple(A)
    locs = spec.mass_locations
    for a in A:
        if a not in locs:
            raise UnknownLocation(f"{a} is not a mass point of the spec")
    if len(set(A)) != len(A):
        raise DuplicateLocation(f"repeated locations in subset {A}")

    base = spec.base
    if isinstance(base, GenJacobiSpec):
        alpha, beta = base.alpha, base.beta
        sing = dict(base.singularities)
        for a in A:
            if a == 1.0:
                alpha += 2
            elif a == -1.0:
                beta += 2
            else:
                sing[a] = sing.get(a, 0.0) + 2
        new_base = GenJacobiSpec(alpha, beta, tuple(sorted(sing.items())))
    elif isinstance(base, LaguerreSpec):
        if any(a != 0.0 for a in A):
            raise SpecError("Laguerre Christoffel modification supported at 0 only")
        new_base = LaguerreSpec(base.alpha + 2 * len(A))
    else:
        if A:
            raise SpecError("Hermite Christoffel modification not supported")
        new_base = base

    def w_A(x, p):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        for a in A:
            out = out * np.abs(x - a) ** (1.0 - 2.0 / p)
        return out

    return MeasureSpec(new_base, ()), w_A


# ----------------------------------------------------------------------
# JSON schema


def measure_to_dict(spec: MeasureSpec):
    base = spec.base
    d = {"kind": base.kind}
    if isinstance(base, GenJacobiSpec):
        d["alpha"] = base.alpha
        d["beta"] = base.beta
        d["singularities"] = [{"t": t, "gamma": g} for t, g in base.singularities]
    elif isinstance(base, LaguerreSpec):
        d["alpha"] = base.alpha
    return {
        "base": d,
        "masses": [{"location": m.location, "mass": m.mass} for m in spec.masses],
    }


def measure_from_dict(d) -> MeasureSpec:
    try:
        bd = d["base"]
        kind = bd["kind"]
        if kind == "genjacobi":
            base = GenJacobiSpec(
                float(bd.get("alpha", 0.0)),
                float(bd.get("beta", 0.0)),
                tuple((float(s["t"]), float(s["gamma"])) for s in bd.get("singularities", [])),
            )
        elif kind == "laguerre":
            base = LaguerreSpec(float(bd.get("alpha", 0.0)))
        elif kind == "hermite":
            base = HermiteSpec()
        else:
            raise SpecError(f"unknown base kind {kind!r}")
        masses = tuple(
            MassPoint(float(m["location"]), float(m["mass"])) for m in d.get("masses", [])
        )
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed measure spec: {exc}") from exc
    return validate(MeasureSpec(base, masses))


def weight_to_dict(w: PowerWeightSpec):
    return {"a": w.a, "b": w.b, "g": list(w.g), "atMass": list(w.at_mass)}


def weight_from_dict(d) -> PowerWeightSpec:
    if d is None:
        return PowerWeightSpec()
    try:
        return PowerWeightSpec(
            float(d.get("a", 0.0)),
            float(d.get("b", 0.0)),
            tuple(float(x) for x in d.get("g", [])),
            tuple(float(x) for x in d.get("atMass", [])),
        )
    except (TypeError, ValueError) as exc:
        raise SpecError(f"malformed weight spec: {exc}") from exc


def measure_to_json(spec: MeasureSpec) -> str:
    return json.dumps(measure_to_dict(spec), indent=2)


def measure_from_json(text: str) -> MeasureSpec:
    return measure_from_dict(json.loads(text))

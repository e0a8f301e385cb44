"""Mamdani fuzzy inference engine and the four ball-balancing controllers.

Inference is min-AND / clip-implication / max-aggregation over triangular
and trapezoidal sets, with the aggregate kept as an exact piecewise-linear
upper envelope so the centroid defuzzifier is analytic (no sampling grid).

Four controller layouts are supported, identified by name:

* ``fuzzy1``   three inputs (x, y, radial error), two outputs (roll, pitch)
* ``fuzzy2``   position + error derivative -> roll, 7 output terms
* ``fuzzy3``   narrow-range position + derivative -> roll, 5 output terms
* ``fuzzy_pd`` position + derivative -> roll with tunable input gains

The two-input controllers act on one axis; ``controller_step`` runs a
mirrored second instance on (y, dy) to produce the pitch channel.  Rule
tables are plain data so configs can replace the shipped defaults.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CONTROLLER_NAMES",
    "DivisionByZeroTime",
    "NoRulesError",
    "DegenerateOutputWarning",
    "MembershipFunction",
    "Variable",
    "Rule",
    "FuzzyControllerSpec",
    "ErrorSignal",
    "Aggregate",
    "InferenceDetail",
    "membership_degree",
    "uniform_partition",
    "error_derivative",
    "infer",
    "infer_detail",
    "defuzzify_centroid",
    "controller_step",
    "default_controller_spec",
    "validate_named_spec",
]

CONTROLLER_NAMES = ("fuzzy1", "fuzzy2", "fuzzy3", "fuzzy_pd")


class DivisionByZeroTime(ZeroDivisionError):
    """Raised when a derivative is requested over a zero time span."""


class NoRulesError(ValueError):
    """Raised when inference runs on a spec with an empty rule list."""


class DegenerateOutputWarning(UserWarning):
    """Flagged when an aggregate has zero area and the midpoint is returned."""


_SHAPES = ("triangular", "trapezoidal")


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear fuzzy set: triangular (a,b,c) or trapezoidal (a,b,c,d).

    Ties between consecutive breakpoints collapse into vertical edges, which
    is how shoulder sets at universe bounds are expressed, e.g.
    (lo, lo, lo, p) ramps down from full membership at ``lo``.
    """

    shape: str
    breakpoints: tuple[float, ...]
    label: str

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"shape must be one of {_SHAPES}, got {self.shape!r}")
        if not isinstance(self.label, str) or not self.label:
            raise ValueError("label must be a non-empty string")
        bp = tuple(float(b) for b in self.breakpoints)
        need = 3 if self.shape == "triangular" else 4
        if len(bp) != need:
            raise ValueError(f"{self.shape} set needs {need} breakpoints, got {len(bp)}")
        if not all(math.isfinite(b) for b in bp):
            raise ValueError("breakpoints must be finite")
        if any(b2 < b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be non-decreasing")
        object.__setattr__(self, "breakpoints", bp)
        mus = (0.0, 1.0, 0.0) if need == 3 else (0.0, 1.0, 1.0, 0.0)
        xs: list[float] = []
        ys: list[float] = []
        for x, mu in zip(bp, mus):
            if xs and x == xs[-1]:
                ys[-1] = max(ys[-1], mu)  # zero-width ramp -> keep the peak
            else:
                xs.append(x)
                ys.append(mu)
        kx = np.array(xs)
        ky = np.array(ys)
        kx.setflags(write=False)
        ky.setflags(write=False)
        object.__setattr__(self, "_knot_x", kx)
        object.__setattr__(self, "_knot_y", ky)

    @property
    def support(self) -> tuple[float, float]:
        return float(self._knot_x[0]), float(self._knot_x[-1])

    @property
    def peak(self) -> float:
        """Leftmost point of full membership."""
        idx = int(np.argmax(self._knot_y))
        return float(self._knot_x[idx])


def membership_degree(mf: MembershipFunction, x: float) -> float:
    """Evaluate a set at ``x``: exactly 1 at the peak, exactly 0 off-support."""
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    kx = mf._knot_x
    if x < kx[0] or x > kx[-1]:
        return 0.0
    return float(np.interp(x, kx, mf._knot_y))


@dataclass(frozen=True)
class Variable:
    """Named linguistic variable: a universe plus an ordered term partition."""

    name: str
    lo: float
    hi: float
    terms: tuple[MembershipFunction, ...]

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("variable name must be a non-empty string")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"universe must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        terms = tuple(self.terms)
        if not terms or not all(isinstance(t, MembershipFunction) for t in terms):
            raise ValueError("terms must be a non-empty sequence of membership functions")
        labels = [t.label for t in terms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate term labels in variable {self.name!r}")
        slop = 1e-9 * (self.hi - self.lo)
        for t in terms:
            if t.breakpoints[0] < self.lo - slop or t.breakpoints[-1] > self.hi + slop:
                raise ValueError(
                    f"term {t.label!r} leaves the universe of {self.name!r}"
                )
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        self._check_partition()
        object.__setattr__(
            self, "_by_label", {t.label: t for t in terms}
        )

    def _check_partition(self):
        # Coverage (total membership > 0 everywhere) and the standard
        # two-set overlap bound, checked at every knot and every midpoint.
        probes = {self.lo, self.hi}
        for t in self.terms:
            probes.update(float(x) for x in t._knot_x)
        probes = sorted(probes)
        points = list(probes) + [0.5 * (a + b) for a, b in zip(probes, probes[1:])]
        for p in points:
            if p < self.lo or p > self.hi:
                continue
            degs = [membership_degree(t, p) for t in self.terms]
            if sum(degs) <= 0.0:
                raise ValueError(
                    f"terms of {self.name!r} do not cover the universe at {p}"
                )
            if sum(1 for d in degs if d > 0.0) > 2:
                raise ValueError(
                    f"more than two terms of {self.name!r} overlap at {p}"
                )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(t.label for t in self.terms)

    def term(self, label: str) -> MembershipFunction:
        try:
            return self._by_label[label]
        except KeyError:
            raise KeyError(f"variable {self.name!r} has no term {label!r}") from None


def uniform_partition(labels, lo: float, hi: float) -> tuple[MembershipFunction, ...]:
    """Evenly spaced 50%-overlap partition with shoulder sets at the bounds.

    Peaks sit at lo + k*(hi-lo)/(n-1); interior sets are triangles between
    neighbouring peaks, the two end sets are shoulders.  The result is a
    partition of unity: memberships sum to 1 everywhere on the universe.
    """
    labels = tuple(str(l) for l in labels)
    if len(labels) < 2:
        raise ValueError("a partition needs at least two terms")
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("universe must satisfy lo < hi")
    peaks = np.linspace(lo, hi, len(labels))
    terms = []
    for k, label in enumerate(labels):
        if k == 0:
            mf = MembershipFunction("trapezoidal", (lo, lo, lo, peaks[1]), label)
        elif k == len(labels) - 1:
            mf = MembershipFunction("trapezoidal", (peaks[-2], hi, hi, hi), label)
        else:
            mf = MembershipFunction("triangular", (peaks[k - 1], peaks[k], peaks[k + 1]), label)
        terms.append(mf)
    return tuple(terms)


def _canon_pairs(value, what: str) -> tuple[tuple[str, str], ...]:
    if isinstance(value, Mapping):
        items = value.items()
    else:
        items = tuple(value)
    try:
        pairs = tuple(sorted((str(k), str(v)) for k, v in items))
    except (TypeError, ValueError):
        raise ValueError(f"{what} must map variable names to term labels") from None
    if not pairs:
        raise ValueError(f"{what} must not be empty")
    if len({k for k, _ in pairs}) != len(pairs):
        raise ValueError(f"duplicate variable in {what}")
    return pairs


@dataclass(frozen=True)
class Rule:
    """One conjunctive rule: a term for every input, a term for every output."""

    antecedent: tuple[tuple[str, str], ...]
    consequent: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "antecedent", _canon_pairs(self.antecedent, "antecedent"))
        object.__setattr__(self, "consequent", _canon_pairs(self.consequent, "consequent"))
        object.__setattr__(self, "_cons_map", dict(self.consequent))

    def consequent_term(self, output_name: str) -> str:
        return self._cons_map[output_name]


@dataclass(frozen=True)
class ErrorSignal:
    """Ball position error sample: distance in mm plus its rate in mm/s."""

    error: float
    derivative: float

    def __post_init__(self):
        if not (math.isfinite(self.error) and math.isfinite(self.derivative)):
            raise ValueError("error signal must be finite")


# Required layout per controller name: (variable name, lo, hi, term labels).
_E5 = ("ENG", "ENP", "EC", "EPP", "EPG")
_Z5 = ("ENG", "ENP", "Z", "EPP", "EPG")
_S5 = ("NG", "NP", "Z", "PP", "PG")
_OUT5 = ("NG", "NP", "Z", "PP", "PG")
_OUT5C = ("NG", "NP", "PC", "PP", "PG")
_OUT7 = ("PNG", "PNM", "PNP", "PC", "PPP", "PPM", "PPG")

_NAMED_LAYOUT = {
    "fuzzy1": (
        (("x", -200.0, 200.0, _E5), ("y", -200.0, 200.0, _E5), ("error", -300.0, 300.0, _E5)),
        (("roll", -6.0, 6.0, _OUT5), ("pitch", -6.0, 6.0, _OUT5)),
    ),
    "fuzzy2": (
        (("position", -150.0, 150.0, _Z5), ("derivative", -600.0, 600.0, _Z5)),
        (("roll", -6.0, 6.0, _OUT7),),
    ),
    "fuzzy3": (
        (("position", -150.0, 150.0, _S5), ("derivative", -150.0, 150.0, _S5)),
        (("roll", -4.0, 4.0, _OUT5C),),
    ),
    "fuzzy_pd": (
        (("position", -150.0, 150.0, _Z5), ("derivative", -600.0, 600.0, _Z5)),
        (("roll", -5.0, 5.0, _OUT7),),
    ),
}


@dataclass(frozen=True)
class FuzzyControllerSpec:
    """Immutable controller definition: variables plus the rule table."""

    name: str
    inputs: tuple[Variable, ...]
    outputs: tuple[Variable, ...]
    rules: tuple[Rule, ...]

    def __post_init__(self):
        name = str(self.name).lower()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        if not all(isinstance(v, Variable) for v in self.inputs + self.outputs):
            raise ValueError("inputs and outputs must be Variable instances")
        names = [v.name for v in self.inputs + self.outputs]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique across inputs and outputs")
        in_vars = {v.name: v for v in self.inputs}
        out_vars = {v.name: v for v in self.outputs}
        for rule in self.rules:
            if not isinstance(rule, Rule):
                raise ValueError("rules must be Rule instances")
            if {k for k, _ in rule.antecedent} != set(in_vars):
                raise ValueError(
                    f"rule antecedent must name every input exactly once: {rule.antecedent}"
                )
            if {k for k, _ in rule.consequent} != set(out_vars):
                raise ValueError(
                    f"rule consequent must name every output exactly once: {rule.consequent}"
                )
            for var, term in rule.antecedent:
                if term not in in_vars[var].labels:
                    raise ValueError(f"unknown term {term!r} for input {var!r}")
            for var, term in rule.consequent:
                if term not in out_vars[var].labels:
                    raise ValueError(f"unknown term {term!r} for output {var!r}")
        validate_named_spec(self)

    def input(self, name: str) -> Variable:
        for v in self.inputs:
            if v.name == name:
                return v
        raise KeyError(name)

    def output(self, name: str) -> Variable:
        for v in self.outputs:
            if v.name == name:
                return v
        raise KeyError(name)


def validate_named_spec(spec: FuzzyControllerSpec) -> None:
    """Enforce the per-name variable layout (names, universes, term labels)."""
    if spec.name not in _NAMED_LAYOUT:
        raise ValueError(
            f"controller name must be one of {CONTROLLER_NAMES}, got {spec.name!r}"
        )
    want_in, want_out = _NAMED_LAYOUT[spec.name]
    for side, want, got in (("input", want_in, spec.inputs), ("output", want_out, spec.outputs)):
        if len(got) != len(want):
            raise ValueError(
                f"{spec.name} needs {len(want)} {side} variables, got {len(got)}"
            )
        for (name, lo, hi, labels), var in zip(want, got):
            if var.name != name:
                raise ValueError(f"{spec.name} {side} must be named {name!r}, got {var.name!r}")
            if var.lo != lo or var.hi != hi:
                raise ValueError(
                    f"{spec.name} {side} {name!r} universe must be [{lo}, {hi}],"
                    f" got [{var.lo}, {var.hi}]"
                )
            if var.labels != labels:
                raise ValueError(
                    f"{spec.name} {side} {name!r} terms must be {labels}, got {var.labels}"
                )


def error_derivative(x1: float, t1: float, x2: float, t2: float) -> float:
    """Two-sample rate of change (x1 - x2) / (t1 - t2)."""
    if not all(math.isfinite(v) for v in (x1, t1, x2, t2)):
        raise ValueError("samples must be finite")
    if t1 == t2:
        raise DivisionByZeroTime("samples taken at the same instant")
    return (x1 - x2) / (t1 - t2)


@dataclass(frozen=True)
class Aggregate:
    """Exact piecewise-linear inference result over one output universe."""

    xs: np.ndarray
    ys: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
            raise ValueError("aggregate needs matching 1-D knot arrays")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("aggregate knots must be strictly increasing")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def value(self, x) -> float | np.ndarray:
        out = np.interp(x, self.xs, self.ys, left=0.0, right=0.0)
        return float(out) if np.isscalar(x) else out

    @property
    def area(self) -> float:
        return float(np.trapezoid(self.ys, self.xs))


def _clip_knots(term: MembershipFunction, level: float):
    """Knots of min(term, level) with crossing points inserted."""
    xs, ys = term._knot_x, term._knot_y
    nx = [float(xs[0])]
    ny = [min(float(ys[0]), level)]
    for k in range(len(xs) - 1):
        y0, y1 = float(ys[k]), float(ys[k + 1])
        if (y0 - level) * (y1 - level) < 0.0:
            xc = float(xs[k]) + (level - y0) * (float(xs[k + 1]) - float(xs[k])) / (y1 - y0)
            nx.append(xc)
            ny.append(level)
        nx.append(float(xs[k + 1]))
        ny.append(min(y1, level))
    return nx, ny


def _aggregate(var: Variable, levels: Mapping[str, float]) -> Aggregate:
    """Upper envelope of the clipped output terms, exact on every knot gap."""
    clipped = []
    candidates = [var.lo, var.hi]
    for t in var.terms:
        lvl = float(levels.get(t.label, 0.0))
        if lvl <= 0.0:
            continue
        nx, ny = _clip_knots(t, lvl)
        clipped.append((nx, ny))
        candidates.extend(nx)
    if not clipped:
        xs = np.array([var.lo, var.hi])
        return Aggregate(xs, np.zeros(2), var.lo, var.hi)
    # Pairwise crossings between linear pieces of different clipped terms:
    # with those included, the pointwise max is linear between candidates.
    for a in range(len(clipped)):
        xa, ya = clipped[a]
        for b in range(a + 1, len(clipped)):
            xb, yb = clipped[b]
            for i in range(len(xa) - 1):
                lo_a, hi_a = xa[i], xa[i + 1]
                if hi_a <= lo_a:
                    continue
                for j in range(len(xb) - 1):
                    lo_b, hi_b = xb[j], xb[j + 1]
                    lo = max(lo_a, lo_b)
                    hi = min(hi_a, hi_b)
                    if hi <= lo:
                        continue
                    sa = (ya[i + 1] - ya[i]) / (hi_a - lo_a)
                    sb = (yb[j + 1] - yb[j]) / (hi_b - lo_b)
                    d0 = (ya[i] + sa * (lo - lo_a)) - (yb[j] + sb * (lo - lo_b))
                    d1 = (ya[i] + sa * (hi - lo_a)) - (yb[j] + sb * (hi - lo_b))
                    if d0 * d1 < 0.0:
                        candidates.append(lo + (hi - lo) * d0 / (d0 - d1))
    xs = np.unique(np.clip(np.asarray(candidates, dtype=float), var.lo, var.hi))
    env = np.zeros_like(xs)
    for nx, ny in clipped:
        env = np.maximum(env, np.interp(xs, nx, ny, left=0.0, right=0.0))
    return Aggregate(xs, env, var.lo, var.hi)


@dataclass(frozen=True)
class InferenceDetail:
    """Full trace of one inference: clamped inputs, firing strengths, sets."""

    inputs: dict
    strengths: tuple[float, ...]
    aggregates: dict


def infer_detail(spec: FuzzyControllerSpec, values: Mapping[str, float]) -> InferenceDetail:
    if not spec.rules:
        raise NoRulesError(f"controller {spec.name!r} has no rules")
    names = {v.name for v in spec.inputs}
    if set(values) != names:
        raise ValueError(f"inputs must be exactly {sorted(names)}, got {sorted(values)}")
    clamped = {}
    for var in spec.inputs:
        x = float(values[var.name])
        if not math.isfinite(x):
            raise ValueError(f"input {var.name!r} must be finite")
        clamped[var.name] = min(max(x, var.lo), var.hi)
    degrees = {
        var.name: {t.label: membership_degree(t, clamped[var.name]) for t in var.terms}
        for var in spec.inputs
    }
    strengths = tuple(
        min(degrees[var][term] for var, term in rule.antecedent) for rule in spec.rules
    )
    aggregates = {}
    for out in spec.outputs:
        levels: dict[str, float] = {}
        for rule, s in zip(spec.rules, strengths):
            if s <= 0.0:
                continue
            term = rule.consequent_term(out.name)
            if s > levels.get(term, 0.0):
                levels[term] = s
        aggregates[out.name] = _aggregate(out, levels)
    return InferenceDetail(inputs=clamped, strengths=strengths, aggregates=aggregates)


def infer(spec: FuzzyControllerSpec, values: Mapping[str, float]) -> dict:
    """Mamdani inference: clamp, fuzzify, min-AND, clip, max-aggregate."""
    return infer_detail(spec, values).aggregates


def defuzzify_centroid(aggregate: Aggregate, universe=None) -> float:
    """Analytic centroid of a piecewise-linear aggregate.

    Zero-area aggregates defuzzify to the universe midpoint and raise a
    DegenerateOutputWarning instead of failing.
    """
    lo, hi = (aggregate.lo, aggregate.hi) if universe is None else map(float, universe)
    xs, ys = aggregate.xs, aggregate.ys
    dx = np.diff(xs)
    y0, y1 = ys[:-1], ys[1:]
    area = float((0.5 * (y0 + y1) * dx).sum())
    if area <= 0.0:
        warnings.warn(
            "zero-area aggregate, defuzzifying to the universe midpoint",
            DegenerateOutputWarning,
            stacklevel=2,
        )
        return 0.5 * (lo + hi)
    moment = float((dx * (y0 * (2.0 * xs[:-1] + xs[1:]) + y1 * (xs[:-1] + 2.0 * xs[1:]))).sum() / 6.0)
    return moment / area


def _crisp(spec, values) -> dict:
    detail = infer_detail(spec, values)
    return {name: defuzzify_centroid(agg) for name, agg in detail.aggregates.items()}


def controller_step(
    spec: FuzzyControllerSpec,
    ball_x: float,
    ball_y: float,
    error: float,
    d_error_x: float,
    d_error_y: float,
    gains: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """One control evaluation: crisp (roll, pitch) command in degrees.

    The three-input controller consumes (x, y, error) directly and emits
    both outputs.  The single-axis controllers run once on (x, dx) for roll
    and once, mirrored, on (y, dy) for pitch.  ``gains`` = (kp, kd) scales
    the position/derivative inputs and applies to ``fuzzy_pd`` only.
    """
    for v in (ball_x, ball_y, error, d_error_x, d_error_y):
        if not math.isfinite(v):
            raise ValueError("controller inputs must be finite")
    if gains is not None and spec.name != "fuzzy_pd":
        raise ValueError(f"gains are only supported by fuzzy_pd, not {spec.name!r}")
    if spec.name == "fuzzy1":
        out = _crisp(spec, {"x": ball_x, "y": ball_y, "error": error})
        return out["roll"], out["pitch"]
    kp, kd = (1.0, 1.0) if gains is None else (float(gains[0]), float(gains[1]))
    if not (math.isfinite(kp) and math.isfinite(kd)):
        raise ValueError("gains must be finite")
    roll = _crisp(spec, {"position": kp * ball_x, "derivative": kd * d_error_x})["roll"]
    pitch = _crisp(spec, {"position": kp * ball_y, "derivative": kd * d_error_y})["roll"]
    return roll, pitch


# Default rule tables.  All four are antisymmetric (negating the inputs
# negates the output) and written rows = first input term, columns = second
# input term, both in partition order.
#
# fuzzy1 applies the same axis table twice: rows = x (or y) term, columns =
# radial error term; the error magnitude scales aggressiveness while the
# axis position picks the direction.
_TABLE_F1_AXIS = (
    ("PG", "PG", "PG", "PG", "PG"),
    ("PG", "PP", "PP", "PP", "PG"),
    ("Z", "Z", "Z", "Z", "Z"),
    ("NG", "NP", "NP", "NP", "NG"),
    ("NG", "NG", "NG", "NG", "NG"),
)

# fuzzy2 leans on position: braking by the derivative only kicks in at the
# extreme derivative terms, so the response stays aggressive mid-flight.
_TABLE_F2 = (
    ("PPG", "PPM", "PPM", "PPM", "PC"),
    ("PPG", "PPP", "PPP", "PPP", "PNP"),
    ("PPM", "PC", "PC", "PC", "PNM"),
    ("PPP", "PNP", "PNP", "PNP", "PNG"),
    ("PC", "PNM", "PNM", "PNM", "PNG"),
)

# fuzzy3 pushes hard against large offsets but its centre row reinforces the
# current motion instead of braking it, so the ball keeps orbiting the
# centre instead of settling.
_TABLE_F3 = (
    ("PG", "PG", "PG", "PP", "PC"),
    ("PG", "PG", "PP", "PC", "NP"),
    ("NG", "NP", "PC", "PP", "PG"),
    ("PP", "PC", "NP", "NG", "NG"),
    ("PC", "NP", "NG", "NG", "NG"),
)

# fuzzy_pd is the classic diagonal base: output index = clamp(7 - i - j).
_TABLE_FPD = (
    ("PPG", "PPG", "PPM", "PPP", "PC"),
    ("PPG", "PPM", "PPP", "PC", "PNP"),
    ("PPM", "PPP", "PC", "PNP", "PNM"),
    ("PPP", "PC", "PNP", "PNM", "PNG"),
    ("PC", "PNP", "PNM", "PNG", "PNG"),
)

_DEFAULT_TABLES = {"fuzzy2": _TABLE_F2, "fuzzy3": _TABLE_F3, "fuzzy_pd": _TABLE_FPD}


def default_rule_tables(name: str) -> dict[str, tuple[tuple[str, ...], ...]]:
    """Shipped rule grids, one per output, rows/cols in partition order.

    fuzzy1 carries two grids: roll is indexed (x term, error term) and
    pitch (y term, error term).  The single-axis controllers carry one
    roll grid indexed (position term, derivative term).
    """
    key = str(name).lower()
    if key == "fuzzy1":
        return {"roll": _TABLE_F1_AXIS, "pitch": _TABLE_F1_AXIS}
    if key in _DEFAULT_TABLES:
        return {"roll": _DEFAULT_TABLES[key]}
    raise ValueError(f"controller name must be one of {CONTROLLER_NAMES}, got {name!r}")


def rule_table_axes(name: str) -> dict[str, tuple[str, str]]:
    """(row input, column input) per output grid for each controller."""
    key = str(name).lower()
    if key == "fuzzy1":
        return {"roll": ("x", "error"), "pitch": ("y", "error")}
    if key in _DEFAULT_TABLES:
        return {"roll": ("position", "derivative")}
    raise ValueError(f"controller name must be one of {CONTROLLER_NAMES}, got {name!r}")


def _check_grid(name, out, grid, rows, cols):
    if len(grid) != len(rows) or any(len(r) != len(cols) for r in grid):
        raise ValueError(
            f"{name} rule grid for {out!r} must be {len(rows)}x{len(cols)}"
        )


def rules_from_tables(name: str, tables: dict) -> tuple[Rule, ...]:
    """Expand per-output label grids into the controller's product rules."""
    key = str(name).lower()
    if key not in _NAMED_LAYOUT:
        raise ValueError(f"controller name must be one of {CONTROLLER_NAMES}, got {name!r}")
    want_in, want_out = _NAMED_LAYOUT[key]
    out_names = [o[0] for o in want_out]
    if sorted(tables) != sorted(out_names):
        raise ValueError(f"{key} needs rule grids for outputs {out_names}, got {sorted(tables)}")
    if key == "fuzzy1":
        x_labels, e_labels = want_in[0][3], want_in[2][3]
        roll, pitch = tables["roll"], tables["pitch"]
        _check_grid(key, "roll", roll, x_labels, e_labels)
        _check_grid(key, "pitch", pitch, x_labels, e_labels)
        return tuple(
            Rule(
                antecedent={"x": tx, "y": ty, "error": te},
                consequent={"roll": roll[i][k], "pitch": pitch[j][k]},
            )
            for i, tx in enumerate(x_labels)
            for j, ty in enumerate(x_labels)
            for k, te in enumerate(e_labels)
        )
    pos_labels, dv_labels = want_in[0][3], want_in[1][3]
    grid = tables["roll"]
    _check_grid(key, "roll", grid, pos_labels, dv_labels)
    return tuple(
        Rule(antecedent={"position": tp, "derivative": td}, consequent={"roll": grid[i][j]})
        for i, tp in enumerate(pos_labels)
        for j, td in enumerate(dv_labels)
    )


def named_spec_from_tables(name: str, tables: dict) -> FuzzyControllerSpec:
    """Controller with the pinned per-name layout and the given rule grids."""
    key = str(name).lower()
    if key not in _NAMED_LAYOUT:
        raise ValueError(f"controller name must be one of {CONTROLLER_NAMES}, got {name!r}")
    want_in, want_out = _NAMED_LAYOUT[key]
    inputs = tuple(
        Variable(nm, lo, hi, uniform_partition(labels, lo, hi)) for nm, lo, hi, labels in want_in
    )
    outputs = tuple(
        Variable(nm, lo, hi, uniform_partition(labels, lo, hi)) for nm, lo, hi, labels in want_out
    )
    rules = rules_from_tables(key, tables)
    return FuzzyControllerSpec(name=key, inputs=inputs, outputs=outputs, rules=rules)


def default_controller_spec(name: str) -> FuzzyControllerSpec:
    """Build one of the four shipped controllers with its default rule table."""
    return named_spec_from_tables(name, default_rule_tables(name))

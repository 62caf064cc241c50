"""The MMP loop over both backends: negative-ray extraction, nef thresholds,
step execution, LMMP with scaling, trace recording, and end-state
classification.

A run is deterministic given the strategy; candidate ordering is
lexicographic on the serialized ray representative.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

from .linalg import as_fraction, dot, format_fraction
from .surface import (
    CurveClass,
    SurfaceModel,
    castelnuovo_contract,
    is_minus_one_curve,
    model_from_json,
    model_to_json,
    nef_ample_check,
    rational_direction,
)
from .toric import (
    ExtremalRay,
    Fan,
    FanError,
    ToricDivisor,
    divisor as toric_divisor,
    divisor_to_json,
    fan_from_json,
    fan_to_json,
    picard_number,
    toric_canonical,
    toric_contract,
    toric_mori_rays,
    wall_curves,
)

TRACE_SCHEMA = "mmp-trace/1"
DEFAULT_STEP_BUDGET = 64


class MMPError(ValueError):
    pass


class StepBudgetExceeded(MMPError):
    def __init__(self, message: str, trace: "MMPTrace"):
        super().__init__(message)
        self.partial_trace = trace


@dataclass(frozen=True)
class Pair:
    """A variety model with boundary. Toric: fan plus one coefficient per
    ray. Surface: the model's stored boundary coefficients apply."""

    model: Fan | SurfaceModel
    toric_boundary: ToricDivisor | None = None

    def __post_init__(self):
        if self.is_toric:
            b = self.toric_boundary or toric_divisor(self.model, [0] * len(self.model.rays))
            object.__setattr__(self, "toric_boundary", b)
            if any(x < 0 or x > 1 for x in b):
                raise MMPError("boundary coefficients live in [0, 1]")

    @property
    def is_toric(self) -> bool:
        return isinstance(self.model, Fan)

    def picard(self) -> int | None:
        if self.is_toric:
            try:
                return picard_number(self.model)
            except FanError:
                return None
        return self.model.rank


@dataclass(frozen=True)
class RayInfo:
    """A certified extremal-ray candidate with its exact (K+B) pairing."""

    key: tuple[Fraction, ...]
    value: Fraction
    payload: ExtremalRay | CurveClass

    def key_json(self) -> list[str]:
        return [format_fraction(x) for x in self.key]


def certified_rays(p: Pair) -> list[RayInfo]:
    """All certified ray representatives with exact (K+B) values."""
    if p.is_toric:
        fan = p.model
        k = toric_canonical(fan)
        kb = tuple(a + b for a, b in zip(k, p.toric_boundary))
        rays = []
        for ray in toric_mori_rays(fan):
            value = ray.pair(kb)
            rays.append(RayInfo(tuple(Fraction(x) for x in ray.direction), value, ray))
        return sorted(rays, key=lambda r: r.key)
    model = p.model
    if not model.ne_certified:
        raise MMPError("curve list not certified as generating")
    rays = []
    seen = set()
    for curve in model.curves:
        direction = rational_direction(curve.coords)
        if direction in seen:
            continue
        seen.add(direction)
        rays.append(RayInfo(curve.coords, model.k_plus_b_dot(curve.coords), curve))
    return sorted(rays, key=lambda r: r.key)


def negative_extremal_rays(p: Pair) -> list[RayInfo]:
    """(K+B)-negative certified rays, most negative first."""
    rays = [r for r in certified_rays(p) if r.value < 0]
    return sorted(rays, key=lambda r: (r.value, r.key))


def pair_divisor_with_ray(p: Pair, c, ray: RayInfo) -> Fraction:
    if p.is_toric:
        return ray.payload.pair(tuple(as_fraction(x) for x in c))
    return p.model.dot(c, ray.payload.coords)


@dataclass(frozen=True)
class NefThreshold:
    value: Fraction
    already_nef: bool


def nef_threshold(p: Pair, c) -> NefThreshold:
    """Smallest t >= 0 with (K + B + tC) non-negative on every certified ray.

    Requires K+B+C nef against the certified rays and C positive on every
    (K+B)-negative ray.
    """
    rays = certified_rays(p)
    pairings = [(r, pair_divisor_with_ray(p, c, r)) for r in rays]
    for ray, c_value in pairings:
        if ray.value + c_value < 0:
            raise MMPError("K+B+C is not nef against the certified rays")
    negatives = [(r, cv) for r, cv in pairings if r.value < 0]
    if not negatives:
        return NefThreshold(Fraction(0), already_nef=True)
    for ray, c_value in negatives:
        if c_value <= 0:
            raise MMPError("C does not dominate the negative cone")
    lam = max((-r.value) / cv for r, cv in negatives)
    for ray, c_value in pairings:
        assert ray.value + lam * c_value >= 0
    return NefThreshold(lam, already_nef=False)


@dataclass(frozen=True)
class MMPStep:
    ray_key: tuple[Fraction, ...]
    value: Fraction
    step_type: str  # "divisorial" | "small" | "fibration"
    rho_before: int | None
    rho_after: int | None
    scaling_value: Fraction | None = None


def mmp_step(p: Pair, ray: RayInfo) -> tuple[Pair, MMPStep]:
    """Contract one (K+B)-negative certified ray.

    Toric rays go through the fan contraction; surface rays contract via
    Castelnuovo when they carry a (-1)-curve, give a ruling fibration on
    square-zero classes, and a fibration to a point at rho = 1.
    """
    if ray.value >= 0:
        raise MMPError("only (K+B)-negative rays can be contracted")
    rho_before = p.picard()
    if p.is_toric:
        result = toric_contract(p.model, ray.payload)
        if result.kind == "fibration":
            new_pair = Pair(result.fan, None)
        elif result.kind == "divisorial":
            surviving = {r: i for i, r in enumerate(result.fan.rays)}
            coeffs = [Fraction(0)] * len(result.fan.rays)
            for old_ray, coeff in zip(p.model.rays, p.toric_boundary):
                if old_ray in surviving:
                    coeffs[surviving[old_ray]] = coeff
            new_pair = Pair(result.fan, tuple(coeffs))
        else:  # small: fan returned read-only, flips are out of scope
            new_pair = Pair(result.fan, None)
        rho_after = new_pair.picard()
        step = MMPStep(ray.key, ray.value, result.kind, rho_before, rho_after)
        return new_pair, step

    model = p.model
    curve = ray.payload
    if is_minus_one_curve(model, curve):
        contracted = castelnuovo_contract(model, curve)
        step = MMPStep(
            ray.key, ray.value, "divisorial", rho_before, contracted.rank
        )
        return Pair(contracted), step
    square = model.self_intersection(curve.coords)
    if square == 0 and model.k_dot(curve.coords) == -2 and curve.pa == 0:
        step = MMPStep(ray.key, ray.value, "fibration", rho_before, 1)
        return Pair(model), step
    if model.rank == 1:
        step = MMPStep(ray.key, ray.value, "fibration", rho_before, 0)
        return Pair(model), step
    raise MMPError(
        "uncontractible with available data: the ray carries no -1-curve, "
        "no ruling class, and rho > 1"
    )


def push_forward_divisor(p: Pair, new_pair: Pair, c, step: MMPStep):
    """Transport a scaling divisor through one step."""
    if p.is_toric:
        if step.step_type != "divisorial":
            return None
        coeffs = dict(zip(p.model.rays, (as_fraction(x) for x in c)))
        return tuple(coeffs.get(r, Fraction(0)) for r in new_pair.model.rays)
    if step.step_type != "divisorial":
        return None
    curve = next(
        cur for cur in p.model.curves if cur.coords == step.ray_key
    )
    factor = p.model.dot(c, curve.coords)
    projected = tuple(
        as_fraction(x) + factor * y for x, y in zip(c, curve.coords)
    )
    from .surface import _coords_in  # reuse of the contraction basis solve

    kernel = _contraction_kernel(p.model, curve)
    return _coords_in(kernel, projected)


def _contraction_kernel(model: SurfaceModel, curve: CurveClass):
    from .linalg import integer_kernel_basis
    from .surface import _unit, _gcd

    pairing_row = [model.dot(_unit(model.rank, i), curve.coords) for i in range(model.rank)]
    denom = 1
    for value in pairing_row:
        denom = denom * value.denominator // _gcd(denom, value.denominator)
    int_row = [int(value * denom) for value in pairing_row]
    kernel = integer_kernel_basis([int_row])
    oriented = []
    for vec in kernel:
        lead = next(i for i, x in enumerate(vec) if x != 0)
        oriented.append(tuple(-x for x in vec) if vec[lead] < 0 else vec)
    return sorted(oriented, key=lambda v: next(i for i, x in enumerate(v) if x != 0))


STATE_RUNNING = "running"
STATE_MINIMAL_MODEL = "minimal-model"
STATE_MORI_FIBRE_SPACE = "mori-fibre-space"
STATE_SMALL_STOP = "small-stop"


@dataclass
class MMPTrace:
    mode: str  # "plain" | "scaling"
    strategy: str
    steps: list[MMPStep] = field(default_factory=list)
    state: str = STATE_RUNNING
    final_pair: Pair | None = None
    scaling_divisor_json: list[str] | None = None

    def to_json(self) -> dict:
        final_model: dict | None = None
        if self.final_pair is not None:
            if self.final_pair.is_toric:
                final_model = {"backend": "toric", **fan_to_json(self.final_pair.model)}
            else:
                final_model = {"backend": "surface", **model_to_json(self.final_pair.model)}
        return {
            "schema": TRACE_SCHEMA,
            "mode": self.mode,
            "strategy": self.strategy,
            "scaling_divisor": self.scaling_divisor_json,
            "steps": [
                {
                    "ray": [format_fraction(x) for x in s.ray_key],
                    "value": format_fraction(s.value),
                    "type": s.step_type,
                    "rho_before": s.rho_before,
                    "rho_after": s.rho_after,
                    "lambda": None
                    if s.scaling_value is None
                    else format_fraction(s.scaling_value),
                }
                for s in self.steps
            ],
            "state": self.state,
            "final_model": final_model,
        }

    def to_json_bytes(self) -> bytes:
        return (
            json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
        ).encode()


def _finish_state_for_step(step: MMPStep) -> str | None:
    if step.step_type == "fibration":
        return STATE_MORI_FIBRE_SPACE
    if step.step_type == "small":
        return STATE_SMALL_STOP
    return None


class PlainRun:
    """Stepwise LMMP without scaling: callers choose among the negative rays
    listed most-negative-first."""

    def __init__(self, pair: Pair, budget: int = DEFAULT_STEP_BUDGET):
        self.pair = pair
        self.budget = budget
        self.trace = MMPTrace(mode="plain", strategy="explicit", final_pair=pair)
        self._refresh()

    def _refresh(self):
        self.candidates = negative_extremal_rays(self.pair)
        if not self.candidates:
            self.trace.state = STATE_MINIMAL_MODEL
        self.trace.final_pair = self.pair

    @property
    def finished(self) -> bool:
        return self.trace.state != STATE_RUNNING

    def choose(self, index: int) -> MMPStep:
        if self.finished:
            raise MMPError("run already finished")
        if index < 0 or index >= len(self.candidates):
            raise MMPError(f"ray index {index} out of range")
        if len(self.trace.steps) >= self.budget:
            raise StepBudgetExceeded("step budget exceeded", self.trace)
        new_pair, step = mmp_step(self.pair, self.candidates[index])
        self.pair = new_pair
        self.trace.steps.append(step)
        finish = _finish_state_for_step(step)
        if finish:
            self.trace.state = finish
            self.trace.final_pair = new_pair
        else:
            self._refresh()
        return step


class ScalingRun:
    """Resumable LMMP with scaling of C: exposes the lambda-critical
    candidates and applies one choice at a time (the seam for the
    interactive service)."""

    def __init__(self, pair: Pair, c, budget: int = DEFAULT_STEP_BUDGET):
        self.pair = pair
        self.c = tuple(as_fraction(x) for x in c)
        self.budget = budget
        self.trace = MMPTrace(
            mode="scaling",
            strategy="interactive",
            final_pair=pair,
            scaling_divisor_json=[format_fraction(x) for x in self.c],
        )
        self.lam: Fraction | None = None
        self._previous_lam: Fraction | None = None
        self._refresh()

    def _refresh(self):
        threshold = nef_threshold(self.pair, self.c)
        if threshold.already_nef:
            self.lam = Fraction(0)
            self.candidates = []
            self.trace.state = STATE_MINIMAL_MODEL
            self.trace.final_pair = self.pair
            return
        lam = threshold.value
        if self._previous_lam is not None and lam > self._previous_lam:
            raise AssertionError("scaling values must be non-increasing")
        self.lam = lam
        rays = certified_rays(self.pair)
        self.candidates = sorted(
            (
                r
                for r in rays
                if r.value < 0
                and r.value + lam * pair_divisor_with_ray(self.pair, self.c, r) == 0
            ),
            key=lambda r: r.key,
        )
        self.trace.final_pair = self.pair

    @property
    def finished(self) -> bool:
        return self.trace.state != STATE_RUNNING

    def choose(self, index: int) -> MMPStep:
        if self.finished:
            raise MMPError("run already finished")
        if index < 0 or index >= len(self.candidates):
            raise MMPError(f"ray index {index} out of range")
        if len(self.trace.steps) >= self.budget:
            raise StepBudgetExceeded("step budget exceeded", self.trace)
        chosen = self.candidates[index]
        new_pair, step = mmp_step(self.pair, chosen)
        step = replace(step, scaling_value=self.lam)
        self.trace.steps.append(step)
        pushed = push_forward_divisor(self.pair, new_pair, self.c, step)
        self._previous_lam = self.lam
        finish = _finish_state_for_step(step)
        self.pair = new_pair
        if finish:
            self.trace.state = finish
            self.trace.final_pair = new_pair
        else:
            self.c = pushed
            self._refresh()
        return step


def _strategy_first(candidates: Sequence[RayInfo]) -> int:
    return 0  # candidates are sorted lexicographically by key


def _strategy_most_negative(candidates: Sequence[RayInfo]) -> int:
    best = min(range(len(candidates)), key=lambda i: (candidates[i].value, candidates[i].key))
    return best


STRATEGIES: dict[str, Callable[[Sequence[RayInfo]], int]] = {
    "first": _strategy_first,
    "most-negative": _strategy_most_negative,
}


def run_lmmp_scaling(
    p: Pair,
    c,
    strategy: str | Callable[[Sequence[RayInfo]], int] = "first",
    budget: int = DEFAULT_STEP_BUDGET,
) -> MMPTrace:
    """Run LMMP with scaling of C to completion under a choice strategy."""
    pick = STRATEGIES[strategy] if isinstance(strategy, str) else strategy
    name = strategy if isinstance(strategy, str) else "interactive-callback"
    run = ScalingRun(p, c, budget=budget)
    run.trace.strategy = name
    while not run.finished:
        run.choose(pick(run.candidates))
    lambdas = [s.scaling_value for s in run.trace.steps]
    assert all(a >= b for a, b in zip(lambdas, lambdas[1:]))
    return run.trace


def run_plain(
    p: Pair,
    choices: Sequence[int] | None = None,
    strategy: str = "first",
    budget: int = DEFAULT_STEP_BUDGET,
) -> MMPTrace:
    """Plain LMMP: follow explicit ray choices, or a strategy to the end."""
    run = PlainRun(p, budget=budget)
    if choices is not None:
        run.trace.strategy = "explicit"
        for index in choices:
            run.choose(index)
        return run.trace
    run.trace.strategy = strategy
    pick = STRATEGIES[strategy]
    while not run.finished:
        # negative_extremal_rays sorts most-negative-first; "first" here
        # means lexicographically smallest representative.
        if strategy == "first":
            index = min(
                range(len(run.candidates)), key=lambda i: run.candidates[i].key
            )
        else:
            index = pick(run.candidates)
        run.choose(index)
    return run.trace


@dataclass(frozen=True)
class RationalityReport:
    defined: bool
    value: Fraction | None
    denominator: int | None


def rationality_report(p: Pair, h) -> RationalityReport:
    """max{t : t(K+B) + H nef} for an ample H, exact, with its reduced
    denominator. Undefined when K+B is already nef."""
    _require_ample(p, h)
    rays = certified_rays(p)
    negatives = [r for r in rays if r.value < 0]
    if not negatives:
        return RationalityReport(False, None, None)
    lam = min(
        pair_divisor_with_ray(p, h, r) / (-r.value) for r in negatives
    )
    return RationalityReport(True, lam, lam.denominator)


def _require_ample(p: Pair, h) -> None:
    if p.is_toric:
        hd = tuple(as_fraction(x) for x in h)
        for curve in wall_curves(p.model):
            if dot(hd, curve.numbers) <= 0:
                raise MMPError("H is not ample: non-positive on a wall curve")
        return
    verdict = nef_ample_check(p.model, h)
    if verdict.verdict != "ample":
        raise MMPError(f"H is not ample: {verdict.verdict}")


def cone_bound_check(trace: MMPTrace, dimension: int) -> bool:
    """Every contracted ray carries a curve with -2 dim <= (K+B).C < 0."""
    bound = Fraction(-2 * dimension)
    return all(bound <= s.value < 0 for s in trace.steps)


def pair_to_json(p: Pair) -> dict:
    if p.is_toric:
        return {
            "backend": "toric",
            "model": fan_to_json(p.model),
            "boundary": divisor_to_json(p.toric_boundary),
        }
    return {"backend": "surface", "model": model_to_json(p.model)}


def pair_from_json(data: dict) -> Pair:
    backend = data.get("backend", "toric")
    if backend == "toric":
        fan = fan_from_json(data["model"])
        boundary = data.get("boundary")
        if boundary is not None:
            boundary = toric_divisor(fan, boundary)
        return Pair(fan, boundary)
    if backend == "surface":
        return Pair(model_from_json(data["model"]))
    raise MMPError(f"unknown backend {backend!r}")

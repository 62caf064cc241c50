import random
from fractions import Fraction

import pytest

from mmpkit.mmp import (
    MMPError,
    MMPStep,
    MMPTrace,
    Pair,
    PlainRun,
    ScalingRun,
    cone_bound_check,
    negative_extremal_rays,
    nef_threshold,
    mmp_step,
    pair_from_json,
    pair_to_json,
    rationality_report,
    run_lmmp_scaling,
    run_plain,
)
from mmpkit.surface import blown_up_plane, blow_up, projective_plane_model, model_to_json
from mmpkit.toric import (
    divisor,
    fan_to_json,
    fans_isomorphic,
    hirzebruch,
    projective_plane,
    toric_canonical,
)


def f1_pair():
    return Pair(hirzebruch(1))


def p2_pair():
    return Pair(projective_plane())


class TestNegativeRays:
    def test_f1_both_rays_negative(self):
        rays = negative_extremal_rays(f1_pair())
        assert [r.value for r in rays] == [Fraction(-2), Fraction(-1)]

    def test_p2_single_negative_ray(self):
        rays = negative_extremal_rays(p2_pair())
        assert len(rays) == 1
        assert rays[0].value == -3

    def test_numerically_trivial_boundary_empty(self):
        fan = projective_plane()
        pair = Pair(fan, divisor(fan, [1, 1, 1]))  # B = -K, so K+B = 0
        assert negative_extremal_rays(pair) == []

    def test_uncertified_surface_rejected(self):
        model = blow_up(projective_plane_model(), [])
        with pytest.raises(MMPError, match="certified"):
            negative_extremal_rays(Pair(model))


class TestNefThreshold:
    def test_f1_anticanonical(self):
        fan = hirzebruch(1)
        minus_k = divisor(fan, [1, 1, 1, 1])
        result = nef_threshold(f1_pair(), minus_k)
        assert result.value == 1 and not result.already_nef

    def test_f1_section_plus_two_fibers(self):
        # H = s + 2f: constraints -2t + 1 >= 0 (fiber) and -t + 1 >= 0.
        fan = hirzebruch(1)
        h = divisor(fan, [2, 1, 0, 0])
        pair = Pair(fan)
        lam = rationality_report(pair, h)
        assert lam.value == Fraction(1, 2)
        assert lam.denominator == 2

    def test_p2_triple_hyperplane(self):
        fan = projective_plane()
        c = divisor(fan, [3, 0, 0])
        assert nef_threshold(p2_pair(), c).value == 1

    def test_already_nef_flag(self):
        fan = projective_plane()
        pair = Pair(fan, divisor(fan, [1, 1, 1]))
        result = nef_threshold(pair, divisor(fan, [1, 0, 0]))
        assert result.already_nef and result.value == 0

    def test_non_dominating_divisor_rejected(self):
        fan = hirzebruch(1)
        section_only = divisor(fan, [0, 1, 0, 0])
        with pytest.raises(MMPError, match="not nef|dominate"):
            nef_threshold(f1_pair(), section_only)


class TestMmpStep:
    def test_f1_fiber_ray_gives_mori_fibre_space(self):
        pair = f1_pair()
        fiber = next(r for r in negative_extremal_rays(pair) if r.value == -2)
        new_pair, step = mmp_step(pair, fiber)
        assert step.step_type == "fibration"
        assert new_pair.model.rank == 1

    def test_f1_section_ray_gives_p2(self):
        pair = f1_pair()
        section = next(r for r in negative_extremal_rays(pair) if r.value == -1)
        new_pair, step = mmp_step(pair, section)
        assert step.step_type == "divisorial"
        assert step.rho_before == 2 and step.rho_after == 1
        assert fans_isomorphic(new_pair.model, projective_plane())

    def test_six_point_blow_up_reaches_rho_one(self):
        pair = Pair(blown_up_plane(6))
        steps = 0
        while True:
            rays = negative_extremal_rays(pair)
            minus_one = [
                r
                for r in rays
                if pair.model.self_intersection(r.payload.coords) == -1
            ]
            if not minus_one or pair.model.rank == 1:
                break
            pair, step = mmp_step(pair, minus_one[0])
            assert step.step_type == "divisorial"
            steps += 1
        assert steps == 6
        assert pair.model.rank == 1

    def test_uncontractible_negative_curve_reported(self):
        # Numerical shadow of the elliptic-curve blow-up example: a certified
        # negative class of square -3 with no -1-curve on its ray.
        import dataclasses

        model = blown_up_plane(1)
        model = dataclasses.replace(
            model, curves=(model.curve((1, -2)),), ne_certified=True
        )
        pair = Pair(model)
        ray = negative_extremal_rays(pair)[0]
        assert pair.model.self_intersection(ray.payload.coords) == -3
        with pytest.raises(MMPError, match="uncontractible"):
            mmp_step(pair, ray)


class TestScalingRuns:
    def test_f1_anticanonical_single_step(self):
        fan = hirzebruch(1)
        trace = run_lmmp_scaling(f1_pair(), divisor(fan, [1, 1, 1, 1]))
        assert len(trace.steps) == 1
        assert trace.steps[0].step_type == "fibration"
        assert trace.state == "mori-fibre-space"
        assert trace.steps[0].scaling_value == 1

    def test_f1_most_negative_also_picks_fiber(self):
        fan = hirzebruch(1)
        trace = run_lmmp_scaling(
            f1_pair(), divisor(fan, [1, 1, 1, 1]), strategy="most-negative"
        )
        assert len(trace.steps) == 1
        assert trace.state == "mori-fibre-space"

    def test_p2_three_points_scaling(self):
        model = blown_up_plane(3)
        minus_k = tuple(-x for x in model.canonical)
        trace = run_lmmp_scaling(Pair(model), minus_k)
        divisorial = [s for s in trace.steps if s.step_type == "divisorial"]
        assert len(divisorial) == 3
        assert trace.steps[-1].step_type == "fibration"
        lambdas = [s.scaling_value for s in trace.steps]
        assert lambdas == sorted(lambdas, reverse=True)

    def test_already_nef_empty_trace(self):
        fan = projective_plane()
        pair = Pair(fan, divisor(fan, [1, 1, 1]))
        trace = run_lmmp_scaling(pair, divisor(fan, [1, 0, 0]))
        assert trace.steps == []
        assert trace.state == "minimal-model"

    def test_scaling_lambda_non_increasing_on_random_runs(self):
        rng = random.Random(17)
        for _ in range(100):
            k = rng.randint(1, 6)
            model = blown_up_plane(k)
            minus_k = tuple(-x for x in model.canonical)
            strategy = rng.choice(["first", "most-negative"])
            trace = run_lmmp_scaling(Pair(model), minus_k, strategy=strategy)
            lambdas = [s.scaling_value for s in trace.steps]
            assert all(a >= b for a, b in zip(lambdas, lambdas[1:]))

    def test_interactive_callback_strategy(self):
        chosen = []

        def pick(cands):
            chosen.append(len(cands))
            return len(cands) - 1

        fan = hirzebruch(1)
        trace = run_lmmp_scaling(f1_pair(), divisor(fan, [1, 1, 1, 1]), strategy=pick)
        assert trace.strategy == "interactive-callback"
        assert chosen, "callback must be consulted"

    def test_budget_exceeded_carries_partial_trace(self):
        from mmpkit.mmp import StepBudgetExceeded

        model = blown_up_plane(4)
        minus_k = tuple(-x for x in model.canonical)
        with pytest.raises(StepBudgetExceeded) as exc:
            run_lmmp_scaling(Pair(model), minus_k, budget=2)
        assert len(exc.value.partial_trace.steps) == 2


class TestPlainRuns:
    def test_explicit_choices_match_stepwise(self):
        trace = run_plain(f1_pair(), choices=[1])
        assert trace.steps[0].step_type == "divisorial"
        assert trace.state == "running"
        trace2 = run_plain(f1_pair(), choices=[1, 0])
        assert trace2.state == "mori-fibre-space"

    def test_strategy_first_runs_to_completion(self):
        trace = run_plain(Pair(blown_up_plane(2)), strategy="first")
        assert trace.state == "mori-fibre-space"
        assert [s.step_type for s in trace.steps].count("divisorial") == 2

    def test_invalid_choice_rejected(self):
        run = PlainRun(f1_pair())
        with pytest.raises(MMPError, match="out of range"):
            run.choose(5)

    def test_finished_run_rejects_steps(self):
        run = PlainRun(f1_pair())
        run.choose(0)  # fiber, most negative first
        assert run.finished
        with pytest.raises(MMPError, match="finished"):
            run.choose(0)


class TestRationality:
    def test_p2_hyperplane(self):
        fan = projective_plane()
        report = rationality_report(p2_pair(), divisor(fan, [1, 0, 0]))
        assert report.value == Fraction(1, 3)
        assert report.denominator == 3

    def test_f2_section_plus_three_fibers(self):
        fan = hirzebruch(2)
        h = divisor(fan, [3, 1, 0, 0])
        report = rationality_report(Pair(fan), h)
        assert report.defined
        assert report.value.denominator <= 2

    def test_nef_pair_reports_undefined(self):
        fan = projective_plane()
        pair = Pair(fan, divisor(fan, [1, 1, 1]))
        report = rationality_report(pair, divisor(fan, [1, 0, 0]))
        assert not report.defined

    def test_non_ample_h_rejected(self):
        fan = hirzebruch(1)
        with pytest.raises(MMPError, match="ample"):
            rationality_report(Pair(fan), divisor(fan, [0, 1, 0, 0]))

    def test_matches_bisection_oracle_on_random_instances(self):
        rng = random.Random(29)
        checked = 0
        while checked < 50:
            a = rng.randint(0, 3)
            fan = hirzebruch(a)
            pair = Pair(fan)
            # Random ample H = alpha * (section + (a+1) fibers) + beta * fiber.
            alpha = rng.randint(1, 5)
            beta = rng.randint(1, 5)
            coeffs = [Fraction(0)] * 4
            coeffs[0] = Fraction(alpha * (a + 1) + beta)  # fiber-type ray (1,0)
            coeffs[1] = Fraction(alpha)  # section ray (0,1)
            h = divisor(fan, coeffs)
            report = rationality_report(pair, h)
            assert report.defined

            def is_nef(t: Fraction) -> bool:
                k = toric_canonical(fan)
                rays = negative_extremal_rays(pair)
                from mmpkit.mmp import certified_rays, pair_divisor_with_ray

                for ray in certified_rays(pair):
                    if t * ray.value + pair_divisor_with_ray(pair, h, ray) < 0:
                        return False
                return True

            lo, hi = Fraction(0), Fraction(10**6)
            assert is_nef(report.value)
            assert not is_nef(report.value + Fraction(1, 10**4))
            # Bisection oracle: 40 halvings brackets the threshold tightly,
            # then the exact value must sit inside the bracket.
            for _ in range(40):
                mid = (lo + hi) / 2
                if is_nef(mid):
                    lo = mid
                else:
                    hi = mid
            assert lo <= report.value <= hi
            checked += 1


class TestConeBound:
    def test_surface_trace_within_bound(self):
        model = blown_up_plane(3)
        minus_k = tuple(-x for x in model.canonical)
        trace = run_lmmp_scaling(Pair(model), minus_k)
        assert cone_bound_check(trace, 2)

    def test_f1_fiber_value(self):
        trace = run_plain(f1_pair(), choices=[0])
        assert trace.steps[0].value == -2
        assert cone_bound_check(trace, 2)

    def test_synthetic_violation(self):
        trace = MMPTrace(mode="plain", strategy="explicit")
        trace.steps.append(
            MMPStep((Fraction(1),), Fraction(-5), "divisorial", 2, 1)
        )
        assert not cone_bound_check(trace, 2)


class TestTraceSerialization:
    def test_round_trip_and_replay_byte_identical(self):
        pair = f1_pair()
        trace = run_plain(pair, choices=[1, 0])
        replay = run_plain(f1_pair(), choices=[1, 0])
        assert trace.to_json_bytes() == replay.to_json_bytes()

    def test_trace_json_uses_fraction_strings(self):
        trace = run_plain(f1_pair(), choices=[0])
        data = trace.to_json()
        assert data["schema"] == "mmp-trace/1"
        step = data["steps"][0]
        assert step["value"] == "-2"
        assert all(isinstance(x, str) for x in step["ray"])

    def test_pair_json_round_trip(self):
        pair = f1_pair()
        back = pair_from_json(pair_to_json(pair))
        assert back.model.rays == pair.model.rays
        surface_pair = Pair(blown_up_plane(2))
        back2 = pair_from_json(pair_to_json(surface_pair))
        assert back2.model.canonical == surface_pair.model.canonical


def test_final_minimal_model_is_nef_against_certified_rays():
    fan = projective_plane()
    pair = Pair(fan, divisor(fan, [1, 1, 1]))
    trace = run_lmmp_scaling(pair, divisor(fan, [1, 0, 0]))
    assert trace.state == "minimal-model"
    assert negative_extremal_rays(trace.final_pair) == []

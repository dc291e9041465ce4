import math

import numpy as np
import pytest

from lumastage.evaluation import (BTFit, EvaluationError, PairJudgment, agreement_stats,
                                  alignment, bt_win_probability, cohens_kappa,
                                  compute_actionability, fit_bradley_terry,
                                  load_judgments_csv, run_tournament,
                                  save_judgments_csv, spearman_rho)
from lumastage.exposure import CameraState
from lumastage.geometry import look_at
from lumastage.judges import HeuristicJudge
from lumastage.planner import PlanState
from lumastage.render import LightRig, RenderSettings
from lumastage.scene import Scene
from lumastage.skeleton import HumanState, load_skeleton

from conftest import make_object, make_point_light


def _pairs(method_a, method_b, wins_a, wins_b, dimension="overall", rater="r"):
    out = []
    for k in range(wins_a):
        out.append(PairJudgment(f"t{k}", dimension, method_a, method_b, method_a, rater))
    for k in range(wins_b):
        out.append(PairJudgment(f"u{k}", dimension, method_a, method_b, method_b, rater))
    return out


# ---------------------------------------------------------------- actionability

def test_floating_rest_poses_pattern(skeleton):
    """A batch of floating rest poses: all penetration-free, none balanced."""
    floor = make_object("floor", "box", {"x": 8, "y": 8, "z": 0.2}, translation=(0, 0, -0.1))
    scene = Scene(objects=[floor], emitters=[make_point_light("bulb", (0, 0, 2.5), 40.0)],
                  ambient_env=(0.05,) * 3)
    plans = []
    for k in range(4):
        human = HumanState(joint_rotations={},
                           root_translation=(k * 0.5 - 1.0, 0.0, 1.6 + 0.2 * k))
        cam = CameraState(transform=look_at((0, -3, 1.5), (0, 0, 1.5)),
                          focal_length_mm=35.0, f_number=4.0, focus_distance=3.0)
        plans.append(PlanState(human=human, camera=cam, rig=LightRig(), stage="done"))
    m = compute_actionability(plans, scene, skeleton,
                              RenderSettings(width=48, height=48, samples_per_pixel=2))
    assert m.r_coll == 1.0
    assert m.r_bal == 0.0


def test_single_grounded_plan_balanced(skeleton):
    floor = make_object("floor", "box", {"x": 8, "y": 8, "z": 0.2}, translation=(0, 0, -0.1))
    scene = Scene(objects=[floor], ambient_env=(0.1,) * 3)
    human = HumanState(joint_rotations={},
                       root_translation=(0, 0, skeleton.rest_pelvis_height()))
    cam = CameraState(transform=look_at((0, -3, 1.5), (0, 0, 1.2)), focal_length_mm=35.0,
                      f_number=4.0, focus_distance=3.0)
    m = compute_actionability([PlanState(human=human, camera=cam, rig=LightRig(),
                                         stage="done")], scene, skeleton,
                              RenderSettings(width=48, height=48, samples_per_pixel=2))
    assert m.r_bal == 1.0 and m.r_coll == 1.0


def test_mixed_set_matches_per_plan_oracle(skeleton):
    """Four hand-constructed plans; fractions equal the per-plan predicates."""
    floor = make_object("floor", "box", {"x": 8, "y": 8, "z": 0.2}, translation=(0, 0, -0.1))
    wall = make_object("wall", "box", {"x": 0.2, "y": 8, "z": 3}, translation=(0.12, 0, 1.5))
    scene = Scene(objects=[floor, wall], ambient_env=(0.05,) * 3)
    h = skeleton.rest_pelvis_height()
    cam = CameraState(transform=look_at((-2, -3, 1.5), (0, 0, 1.2)), focal_length_mm=35.0,
                      f_number=4.0, focus_distance=3.5)
    mk = lambda t, q=None: PlanState(
        human=HumanState(joint_rotations={}, root_translation=t,
                         root_rotation=q if q is not None else (1, 0, 0, 0)),
        camera=cam, rig=LightRig(), stage="done")
    plans = [
        mk((-1.5, 0, h)),          # grounded, clear of wall: free + balanced
        mk((-1.5, 0, h + 0.5)),    # floating: free, unbalanced
        mk((0.0, 0, h)),           # embedded in the wall: collision, no support
        mk((-1.5, 2, h)),          # grounded again
    ]
    m = compute_actionability(plans, scene, skeleton,
                              RenderSettings(width=32, height=32, samples_per_pixel=2))
    assert [r["collision_free"] for r in m.per_plan] == [1, 1, 0, 1]
    assert [r["balanced"] for r in m.per_plan] == [1, 0, 0, 1]
    assert m.r_coll == pytest.approx(3 / 4)
    assert m.r_bal == pytest.approx(2 / 4)


def test_empty_plan_set_errors(skeleton):
    with pytest.raises(EvaluationError):
        compute_actionability([], Scene(objects=[]), skeleton)


# ---------------------------------------------------------------- tournament

def _fake_outputs(methods, tasks, quality):
    out = {}
    for m in methods:
        out[m] = {}
        for t in tasks:
            q = quality[m]
            out[m][t] = {"visibility_face": q, "visibility_body": q,
                         "thirds_distance": (1 - q) * 0.4, "v_exp": 4 * q - 2,
                         "prompt_bonus": q, "collision_free": 1, "balanced": 1,
                         "ev_face": 1.0 + q, "ev_background": 0.0,
                         "key_fill_achieved": 4.0 * (0.5 + q), "key_fill_target": 4.0}
    return out


def test_tournament_counting():
    methods = ["a", "b"]
    outputs = _fake_outputs(methods, ["t1", "t2", "t3"], {"a": 0.9, "b": 0.2})
    j = run_tournament(outputs, HeuristicJudge(), seed=1)
    assert len(j) == 3 * 4 * 1          # tasks x dimensions x C(2,2)


def test_tournament_seven_methods_pair_count():
    methods = [f"m{k}" for k in range(7)]
    outputs = _fake_outputs(methods, ["t"], {m: 0.1 * k for k, m in enumerate(methods)})
    j = run_tournament(outputs, HeuristicJudge(), dimensions=("overall",), seed=1)
    assert len(j) == 21                  # C(7,2)


def test_tournament_deterministic_schedule():
    methods = ["a", "b", "c"]
    outputs = _fake_outputs(methods, ["t1", "t2"], {"a": 0.8, "b": 0.5, "c": 0.2})
    j1 = run_tournament(outputs, HeuristicJudge(), seed=7)
    j2 = run_tournament(outputs, HeuristicJudge(), seed=7)
    assert [x.to_row() for x in j1] == [x.to_row() for x in j2]


def test_tournament_csv_roundtrip(tmp_path):
    outputs = _fake_outputs(["a", "b"], ["t1"], {"a": 0.8, "b": 0.3})
    j = run_tournament(outputs, HeuristicJudge(), seed=2)
    p = tmp_path / "judgments.csv"
    save_judgments_csv(j, p)
    again = load_judgments_csv(p)
    assert [x.to_row() for x in again] == [x.to_row() for x in j]


# ---------------------------------------------------------------- Bradley-Terry

def test_two_player_closed_form():
    """75/100 wins: beta difference is ln 3 (regularization disabled)."""
    j = _pairs("a", "b", 75, 25)
    fit = fit_bradley_terry(j, bootstrap=0, regularize=False)
    assert fit.converged
    assert fit.beta["a"] - fit.beta["b"] == pytest.approx(math.log(3.0), abs=1e-6)
    assert abs(fit.beta["a"] + fit.beta["b"]) < 1e-9
    # saturated model: fitted probability reproduces the empirical win rate
    assert bt_win_probability(fit.beta["a"], fit.beta["b"]) == pytest.approx(0.75, abs=1e-6)


def test_uniform_three_way_all_zero():
    j = (_pairs("a", "b", 10, 10) + _pairs("b", "c", 10, 10) + _pairs("a", "c", 10, 10))
    fit = fit_bradley_terry(j, bootstrap=0, regularize=False)
    for m in "abc":
        assert fit.beta[m] == pytest.approx(0.0, abs=1e-6)


def test_translation_invariance_probabilities():
    j = _pairs("a", "b", 70, 30) + _pairs("b", "c", 60, 40) + _pairs("a", "c", 80, 20)
    fit = fit_bradley_terry(j, bootstrap=0, regularize=False)
    for (x, y) in (("a", "b"), ("b", "c"), ("a", "c")):
        p1 = bt_win_probability(fit.beta[x], fit.beta[y])
        p2 = bt_win_probability(fit.beta[x] + 5.0, fit.beta[y] + 5.0)
        assert p1 == pytest.approx(p2, abs=1e-12)


def test_synthetic_recovery_and_coverage():
    """beta = (1, 0, -1): 2000 sampled comparisons recover within 0.1; the
    bootstrap CI covers the truth in at least 90% of seeded trials."""
    true_beta = {"a": 1.0, "b": 0.0, "c": -1.0}
    methods = list(true_beta)

    def sample(seed, n):
        gen = np.random.default_rng(seed)
        out = []
        for k in range(n):
            i, j = methods[k % 3], methods[(k + 1 + k // 3) % 3]
            if i == j:
                j = methods[(methods.index(i) + 1) % 3]
            p = 1 / (1 + math.exp(true_beta[j] - true_beta[i]))
            win = i if gen.random() < p else j
            out.append(PairJudgment(f"t{k}", "overall", i, j, win))
        return out

    fit = fit_bradley_terry(sample(0, 2000), bootstrap=0, regularize=False)
    for m in methods:
        assert fit.beta[m] == pytest.approx(true_beta[m], abs=0.1)

    covered = 0
    checks = 0
    trials = 50
    for t in range(trials):
        f = fit_bradley_terry(sample(1000 + t, 400), bootstrap=200, seed=t,
                              regularize=False)
        for m in methods:
            checks += 1
            lo, hi = f.ci95[m]
            covered += int(lo <= true_beta[m] <= hi)
    assert covered / checks >= 0.90


def test_ci_contains_point_estimate():
    j = _pairs("a", "b", 12, 8) + _pairs("b", "c", 9, 11) + _pairs("a", "c", 13, 7)
    fit = fit_bradley_terry(j, bootstrap=300, seed=3)
    for m in fit.methods:
        lo, hi = fit.ci95[m]
        assert lo <= fit.beta[m] <= hi


def test_disconnected_graph_names_components():
    j = _pairs("a", "b", 5, 5) + _pairs("c", "d", 5, 5)
    with pytest.raises(EvaluationError) as exc:
        fit_bradley_terry(j, bootstrap=0)
    assert "a" in str(exc.value) and "c" in str(exc.value)


def test_degenerate_data_regularized_and_flagged():
    j = _pairs("a", "b", 10, 0)
    fit = fit_bradley_terry(j, bootstrap=0)
    assert fit.regularized
    assert fit.beta["a"] > fit.beta["b"]
    assert np.isfinite(fit.beta["a"])


def test_metric_bounds():
    j = _pairs("a", "b", 10, 0)
    fit = fit_bradley_terry(j, bootstrap=0)
    # smoothed logit bounds for exposure validity
    from lumastage.exposure import smoothed_logit
    assert -13.82 <= smoothed_logit(0.0) <= 13.82
    assert -13.82 <= smoothed_logit(1.0) <= 13.82


# ---------------------------------------------------------------- agreement

def test_kappa_identical_raters():
    j = _pairs("a", "b", 7, 3)
    assert cohens_kappa(j, list(j)) == pytest.approx(1.0)


def test_kappa_independent_raters_near_zero():
    gen = np.random.default_rng(1)
    base = []
    ra, rb = [], []
    for k in range(1000):
        ra.append(PairJudgment(f"t{k}", "overall", "a", "b",
                               "a" if gen.random() < 0.5 else "b", "r1"))
        rb.append(PairJudgment(f"t{k}", "overall", "a", "b",
                               "a" if gen.random() < 0.5 else "b", "r2"))
    assert cohens_kappa(ra, rb) == pytest.approx(0.0, abs=0.05)


def test_agreement_stats_requires_overlap():
    a = _pairs("a", "b", 3, 1)
    b = [PairJudgment("zz", "overall", "a", "b", "a", "r2")]
    with pytest.raises(EvaluationError):
        agreement_stats({"r1": a, "r2": b}, dimensions=("staging",))


def test_identical_rankings_rho_one():
    fa = BTFit(methods=["a", "b", "c"], beta={"a": 1.0, "b": 0.0, "c": -1.0},
               ci95={}, log_likelihood=0, iterations=1, converged=True)
    fb = BTFit(methods=["a", "b", "c"], beta={"a": 2.0, "b": 0.5, "c": -3.0},
               ci95={}, log_likelihood=0, iterations=1, converged=True)
    assert alignment(fa, fb) == pytest.approx(1.0)
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

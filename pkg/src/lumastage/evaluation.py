"""Actionability metrics, 2AFC tournaments, Bradley-Terry fitting, agreement.

The Bradley-Terry MLE uses minorization-maximization iterations (each is
guaranteed not to decrease the log-likelihood); abilities are reported
zero-sum in log space.  Confidence intervals come from a seeded
nonparametric bootstrap over judgments (percentile method).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .balance import collision_free, static_balance
from .exposure import exposure_validity, meter_and_solve
from .occupancy import build_occupancy
from .render import RenderSettings, render
from .skeleton import forward_kinematics

DIMENSIONS = ("staging", "composition", "light-exposure", "overall")

BT_TOL = 1e-8
BT_MAX_ITERS = 10_000
BOOTSTRAP_DEFAULT = 1000


class EvaluationError(Exception):
    pass


# ---------------------------------------------------------------- actionability

@dataclass
class PlanSetMetrics:
    r_coll: float
    r_bal: float
    v_exp_mean: float
    per_plan: list = field(default_factory=list)

    def to_dict(self):
        return {"r_coll": self.r_coll, "r_bal": self.r_bal,
                "v_exp_mean": self.v_exp_mean, "per_plan": self.per_plan}


def compute_actionability(plans: list, scene, skeleton,
                          settings: RenderSettings | None = None) -> PlanSetMetrics:
    """Fractions of penetration-free and balanced plans plus mean exposure
    logit over the plan set (each plan re-rendered at `settings`)."""
    if not plans:
        raise EvaluationError("empty plan set")
    settings = settings or RenderSettings(width=96, height=96, samples_per_pixel=4)
    grid = build_occupancy(scene)
    rows = []
    for state in plans:
        caps = forward_kinematics(skeleton, state.human) if state.human else []
        ok, pen = collision_free(grid, caps) if caps else (True, 0)
        bal = static_balance(grid, skeleton, caps, gravity=scene.gravity) if caps else 0
        hdr = render(scene, caps or None, state.rig, state.camera, settings,
                     human_albedo=skeleton.albedo)
        sol = meter_and_solve(hdr, state.camera.f_number)
        p_valid, v_exp = exposure_validity(hdr, sol, state.camera.exposure_comp)
        rows.append({"collision_free": int(ok), "penetrating_samples": pen,
                     "balanced": int(bal), "p_valid": p_valid, "v_exp": v_exp})
    return PlanSetMetrics(
        r_coll=float(np.mean([r["collision_free"] for r in rows])),
        r_bal=float(np.mean([r["balanced"] for r in rows])),
        v_exp_mean=float(np.mean([r["v_exp"] for r in rows])),
        per_plan=rows)


def observe_final(scene, skeleton, state, settings: RenderSettings | None = None,
                  prompt: str = ""):
    """Re-observe a finished plan with full instrumentation.

    Planner configurations that disable photometrics still produce a real
    light rig; the evaluator probes it regardless so tournament features are
    comparable across methods.  Returns (image, features).
    """
    import numpy as np
    from .occupancy import build_occupancy
    from .planner.observe import observe
    from .psg import EmissiveNode, build_initial_graph, probe_photometrics
    settings = settings or RenderSettings(width=96, height=96, samples_per_pixel=8)
    grid = build_occupancy(scene)
    graph = None
    target = state.staging_info.get("key_fill_target")
    if target is None and state.staging_info.get("lighting_preset"):
        from .planner.lighting import load_lighting_presets
        preset = load_lighting_presets().get(state.staging_info["lighting_preset"])
        target = preset.key_to_fill if preset else None
    if state.rig.emitters and state.human is not None:
        caps = forward_kinematics(skeleton, state.human)
        face = next(c for c in caps if c.name == "head").midpoint()
        graph = build_initial_graph(scene, caps, state.camera)
        for em in state.rig.emitters:
            graph.emissive.append(EmissiveNode(f"emi:{em.id}", em.id, "controllable"))
        toward = state.camera.position() - face
        n = np.linalg.norm(toward)
        toward = toward / n if n > 1e-9 else np.array([1.0, 0.0, 0.0])
        try:
            probe_photometrics(graph, scene, state.rig, face + toward * 0.25,
                               view_dir=toward)
        except Exception:
            graph = None
    return observe(scene, grid, skeleton, state, settings, prompt,
                   graph=graph, key_fill_target=target)


# ---------------------------------------------------------------- tournament

@dataclass
class PairJudgment:
    task: str
    dimension: str
    method_i: str
    method_j: str
    winner: str
    rater: str = "heuristic"
    seed: int = 0

    def to_row(self):
        return [self.task, self.dimension, self.method_i, self.method_j,
                self.winner, self.rater, self.seed]


def run_tournament(outputs: dict, judge, dimensions=DIMENSIONS, seed: int = 0,
                   rater: str = "heuristic") -> list:
    """Round-robin 2AFC over methods for each task and dimension.

    `outputs[method][task]` holds the feature summary (dict) of that
    method's final image for the task.  Presentation order is counterbalanced
    with a recorded seed; missing outputs skip the pair with a log entry.
    """
    import logging
    from . import rng
    log = logging.getLogger(__name__)
    methods = sorted(outputs)
    tasks = sorted({t for m in methods for t in outputs[m]})
    judgments = []
    k = 0
    for task in tasks:
        for dim in dimensions:
            for i, mi in enumerate(methods):
                for mj in methods[i + 1:]:
                    k += 1
                    if task not in outputs[mi] or task not in outputs[mj]:
                        log.warning("skipping pair (%s, %s) on %s/%s: missing output",
                                    mi, mj, task, dim)
                        continue
                    flip = rng.uniform_scalar(seed, 50, k) < 0.5
                    a, b = (mj, mi) if flip else (mi, mj)
                    pick = judge.pick_2afc(outputs[a][task], outputs[b][task], dim)
                    winner = (a, b)[pick]
                    judgments.append(PairJudgment(task=task, dimension=dim,
                                                  method_i=mi, method_j=mj,
                                                  winner=winner, rater=rater, seed=seed))
    return judgments


def save_judgments_csv(judgments: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["task", "dimension", "method_i", "method_j", "winner",
                    "rater", "seed"])
        for j in judgments:
            w.writerow(j.to_row())


def load_judgments_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(PairJudgment(task=row["task"], dimension=row["dimension"],
                                    method_i=row["method_i"], method_j=row["method_j"],
                                    winner=row["winner"], rater=row.get("rater", ""),
                                    seed=int(row.get("seed", 0) or 0)))
    return out


# ---------------------------------------------------------------- Bradley-Terry

@dataclass
class BTFit:
    methods: list
    beta: dict
    ci95: dict
    log_likelihood: float
    iterations: int
    converged: bool
    regularized: bool = False
    bootstrap_resamples: int = 0

    def to_dict(self):
        return {"methods": self.methods, "beta": self.beta, "ci95": self.ci95,
                "log_likelihood": self.log_likelihood, "iterations": self.iterations,
                "converged": self.converged, "regularized": self.regularized,
                "bootstrap_resamples": self.bootstrap_resamples}


def _win_matrix(judgments: list, methods: list) -> np.ndarray:
    idx = {m: i for i, m in enumerate(methods)}
    w = np.zeros((len(methods), len(methods)))
    for j in judgments:
        a, b = idx[j.method_i], idx[j.method_j]
        if j.winner == j.method_i:
            w[a, b] += 1
        else:
            w[b, a] += 1
    return w


def _connected(w: np.ndarray) -> list:
    n = len(w)
    seen = np.zeros(n, dtype=bool)
    comps = []
    adj = (w + w.T) > 0
    for s in range(n):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in np.nonzero(adj[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        comps.append(comp)
    return comps


def _log_likelihood(w: np.ndarray, log_p: np.ndarray) -> float:
    n = len(w)
    ll = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and w[i, j] > 0:
                ll += w[i, j] * (log_p[i] - np.logaddexp(log_p[i], log_p[j]))
    return float(ll)


def _mm_fit(w: np.ndarray):
    """Hunter's MM updates; returns (beta zero-sum, ll, iters, converged).

    Each iteration asserts the log-likelihood did not decrease.
    """
    n = len(w)
    totals = w + w.T
    wins = w.sum(axis=1)
    p = np.ones(n)
    log_p = np.log(p)
    ll = _log_likelihood(w, log_p)
    iters = 0
    converged = False
    while iters < BT_MAX_ITERS:
        iters += 1
        denom = np.zeros(n)
        for i in range(n):
            mask = totals[i] > 0
            denom[i] = np.sum(totals[i, mask] / (p[i] + p[mask]))
        new_p = np.where(denom > 0, wins / np.maximum(denom, 1e-300), p)
        new_p = np.maximum(new_p, 1e-300)
        new_p /= np.exp(np.mean(np.log(new_p)))     # geometric-mean normalization
        new_ll = _log_likelihood(w, np.log(new_p))
        if new_ll < ll - 1e-9:
            raise AssertionError(f"MM iteration decreased log-likelihood: "
                                 f"{ll} -> {new_ll}")
        delta = np.max(np.abs(np.log(new_p) - np.log(p)))
        p = new_p
        ll = new_ll
        if delta < BT_TOL:
            converged = True
            break
    beta = np.log(p)
    beta -= beta.mean()
    return beta, ll, iters, converged


def fit_bradley_terry(judgments: list, bootstrap: int = BOOTSTRAP_DEFAULT,
                      seed: int = 0, regularize: bool | None = None) -> BTFit:
    """MLE abilities with zero-sum anchor and bootstrap percentile CIs.

    Degenerate data (some method with zero wins or zero losses) is
    regularized with +0.5 pseudo-wins per ordered pair and flagged; pass
    regularize=False to forbid that (clean-data exactness tests).
    """
    if not judgments:
        raise EvaluationError("no judgments to fit")
    methods = sorted({j.method_i for j in judgments} | {j.method_j for j in judgments})
    w = _win_matrix(judgments, methods)
    comps = _connected(w)
    if len(comps) > 1:
        names = [[methods[i] for i in c] for c in comps]
        raise EvaluationError(f"comparison graph disconnected: components {names}")
    degenerate = bool(np.any(w.sum(axis=1) == 0) or np.any(w.sum(axis=0) == 0))
    if regularize is None:
        regularize = degenerate
    if degenerate and not regularize:
        raise EvaluationError("degenerate data (a method never wins or never loses); "
                              "regularization disabled")
    w_fit = w + 0.5 * (1 - np.eye(len(methods))) if regularize else w
    beta, ll, iters, converged = _mm_fit(w_fit)
    point = {m: float(b) for m, b in zip(methods, beta)}

    rng_bs = np.random.default_rng(seed)
    samples = {m: [] for m in methods}
    for _ in range(bootstrap):
        resample = [judgments[i] for i in
                    rng_bs.integers(0, len(judgments), size=len(judgments))]
        wb = _win_matrix(resample, methods)
        if len(_connected(wb)) > 1 or np.any(wb.sum(axis=1) == 0) \
                or np.any(wb.sum(axis=0) == 0):
            wb = wb + 0.5 * (1 - np.eye(len(methods)))
        bb, _, _, _ = _mm_fit(wb)
        for m, b in zip(methods, bb):
            samples[m].append(float(b))
    ci = {}
    for m in methods:
        if samples[m]:
            lo, hi = np.percentile(samples[m], [2.5, 97.5])
            # the percentile interval always reports a range containing the
            # point estimate (skewed resamples can otherwise exclude it)
            ci[m] = [float(min(lo, point[m])), float(max(hi, point[m]))]
        else:
            ci[m] = [point[m], point[m]]
    return BTFit(methods=methods, beta=point, ci95=ci, log_likelihood=ll,
                 iterations=iters, converged=converged, regularized=regularize,
                 bootstrap_resamples=bootstrap)


def bt_win_probability(beta_i: float, beta_j: float) -> float:
    return 1.0 / (1.0 + math.exp(beta_j - beta_i))


# ---------------------------------------------------------------- agreement

def _pair_key(j: PairJudgment) -> tuple:
    return (j.task, j.dimension, j.method_i, j.method_j)


def cohens_kappa(judgments_a: list, judgments_b: list) -> float:
    """Agreement between two raters on overlapping pairs (winner-is-first-
    method as the binary label)."""
    a_by = {_pair_key(j): j.winner == j.method_i for j in judgments_a}
    b_by = {_pair_key(j): j.winner == j.method_i for j in judgments_b}
    keys = sorted(set(a_by) & set(b_by))
    if not keys:
        raise EvaluationError("raters share no judged pairs")
    a = np.array([a_by[k] for k in keys], dtype=float)
    b = np.array([b_by[k] for k in keys], dtype=float)
    po = float((a == b).mean())
    pa, pb = a.mean(), b.mean()
    pe = pa * pb + (1 - pa) * (1 - pb)
    if pe >= 1.0:
        return 1.0 if po == 1.0 else 0.0
    return (po - pe) / (1 - pe)


def agreement_stats(judgments_by_rater: dict, dimensions=DIMENSIONS) -> dict:
    """Mean pairwise Cohen's kappa per dimension across raters."""
    raters = sorted(judgments_by_rater)
    if len(raters) < 2:
        raise EvaluationError("need at least two raters")
    out = {}
    for dim in dimensions:
        kappas = []
        for i, ra in enumerate(raters):
            for rb in raters[i + 1:]:
                ja = [j for j in judgments_by_rater[ra] if j.dimension == dim]
                jb = [j for j in judgments_by_rater[rb] if j.dimension == dim]
                if ja and jb:
                    try:
                        kappas.append(cohens_kappa(ja, jb))
                    except EvaluationError:
                        continue
        if kappas:
            out[dim] = float(np.mean(kappas))
    if not out:
        raise EvaluationError("no overlapping judgments in any dimension")
    return out


def spearman_rho(x: list, y: list) -> float:
    """Spearman rank correlation (average ranks on ties)."""
    from scipy import stats
    rho, _ = stats.spearmanr(x, y)
    return float(rho)


def alignment(fit_a: BTFit, fit_b: BTFit) -> float:
    """Spearman's rho between two judges' per-method abilities."""
    methods = sorted(set(fit_a.methods) & set(fit_b.methods))
    if len(methods) < 2:
        raise EvaluationError("fits share fewer than two methods")
    return spearman_rho([fit_a.beta[m] for m in methods],
                        [fit_b.beta[m] for m in methods])


def save_bt_fit(fit: BTFit, path, config_echo: dict | None = None) -> None:
    payload = fit.to_dict()
    if config_echo:
        payload["config"] = config_echo
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

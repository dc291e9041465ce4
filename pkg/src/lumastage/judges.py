"""Judge implementations: deterministic heuristic, remote HTTP, human queue.

All judges emit the same JudgeDecision schema; the planner never branches on
judge type.  The heuristic judge scores candidate summaries with a fixed
weighted mix of photographic features, giving a total order (so its pairwise
outcomes are transitive by construction).
"""

from __future__ import annotations

import base64
import json
import math
import queue
from dataclasses import dataclass, field

from .planner.state import STAGE_HINTS, JudgeDecision, PairOutcome, RefinementHint

DEFAULT_WEIGHTS = {
    "subject_visibility": 0.25,
    "thirds": 0.15,
    "key_fill": 0.20,
    "exposure": 0.15,
    "separation": 0.15,
    "prompt": 0.10,
}

DIMENSION_WEIGHTS = {
    "staging": {"subject_visibility": 0.30, "prompt": 0.30, "feasibility": 0.40},
    "composition": {"thirds": 0.50, "subject_visibility": 0.50},
    "light-exposure": {"key_fill": 0.40, "exposure": 0.30, "separation": 0.30},
    "overall": DEFAULT_WEIGHTS,
}

REFINE_BAND = 0.05


def score_components(features: dict) -> dict:
    """Normalized [0,1] component scores from an observed feature dict."""
    vis = 0.5 * features.get("visibility_face", 0.0) + 0.5 * features.get("visibility_body", 0.0)
    thirds = max(0.0, 1.0 - features.get("thirds_distance", 1.0) / 0.4)
    ratio = features.get("key_fill_achieved")
    target = features.get("key_fill_target")
    if ratio and target and ratio > 0:
        key_fill = math.exp(-abs(math.log2(ratio / target)) / 1.5)
    else:
        key_fill = 0.5
    v_exp = features.get("v_exp", 0.0)
    exposure = 1.0 / (1.0 + math.exp(-v_exp / 2.5))
    sep = features.get("ev_face")
    bg = features.get("ev_background")
    if sep is not None and bg is not None:
        # portraits read best with the face ~2 stops above the background
        separation = max(0.0, 1.0 - abs((sep - bg) - 2.0) / 3.5)
    else:
        separation = 0.3
    feasibility = 0.5 * float(features.get("collision_free", 0)) \
        + 0.5 * float(features.get("balanced", 0))
    return {"subject_visibility": vis, "thirds": thirds, "key_fill": key_fill,
            "exposure": exposure, "separation": separation,
            "prompt": float(features.get("prompt_bonus", 0.0)),
            "feasibility": feasibility}


def total_score(features: dict, weights: dict | None = None) -> float:
    comps = score_components(features)
    weights = weights or DEFAULT_WEIGHTS
    return sum(w * comps[k] for k, w in weights.items())


def dimension_score(features: dict, dimension: str) -> float:
    return total_score(features, DIMENSION_WEIGHTS[dimension])


def _worst_component_hint(features: dict, stage: str) -> RefinementHint | None:
    comps = score_components(features)
    allowed = STAGE_HINTS.get(stage, ())
    candidates: list[tuple[float, RefinementHint]] = []
    if stage == "staging":
        candidates = [
            (comps["subject_visibility"], RefinementHint("rotate-subject", "small",
                                                         "subject poorly visible")),
            (comps["prompt"], RefinementHint("change-pose", "small",
                                             "pose does not answer the prompt")),
            (comps["separation"], RefinementHint("change-anchor", "small",
                                                 "placement reads flat against background")),
        ]
    elif stage == "composition":
        uv = features.get("face_uv")
        if uv is not None and comps["thirds"] < 1.0:
            du = uv[0] - (1 / 3 if abs(uv[0] - 1 / 3) < abs(uv[0] - 2 / 3) else 2 / 3)
            dv = uv[1] - 1 / 3
            code = ("move-camera-right" if du > 0 else "move-camera-left") \
                if abs(du) >= abs(dv) else ("move-camera-up" if dv > 0 else "move-camera-down")
            candidates.append((comps["thirds"], RefinementHint(code, "small",
                                                               "face off the thirds point")))
        candidates.append((comps["subject_visibility"],
                           RefinementHint("camera-farther", "small", "subject cropped")))
    else:
        ratio = features.get("key_fill_achieved")
        target = features.get("key_fill_target")
        if ratio and target and ratio > 0:
            code = "fill-up" if ratio > target else "fill-down"
            candidates.append((comps["key_fill"], RefinementHint(
                code, "small", "lighting ratio off target")))
        over = features.get("p_over", 0.0)
        under = features.get("p_under", 0.0)
        candidates.append((comps["exposure"], RefinementHint(
            "exposure-down" if over > under else "exposure-up", "small",
            "exposure latitude clipped")))
        candidates.append((comps["separation"], RefinementHint(
            "add-negative-fill", "small", "subject merges with background")))
    candidates = [(s, h) for s, h in candidates if h.code in allowed]
    if not candidates:
        return None
    return min(candidates, key=lambda t: t[0])[1]


@dataclass
class HeuristicJudge:
    """Deterministic judge: weighted feature score, total order."""

    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def compare(self, candidate: dict, frontier: list, prompt: str,
                stage: str) -> JudgeDecision:
        cand_score = total_score(candidate["features"], self.weights)
        pairwise = []
        wins = 0
        best_entry_score = None
        for entry in frontier:
            s = total_score(entry["features"], self.weights)
            best_entry_score = s if best_entry_score is None else max(best_entry_score, s)
            win = cand_score > s
            wins += int(win)
            pairwise.append(PairOutcome(entry["entry_id"], "candidate" if win else "entry"))
        hint = _worst_component_hint(candidate["features"], stage)
        hints = [hint] if hint else []
        if not frontier or wins >= 1:
            verdict = "accept"
            rationale = f"score {cand_score:.3f} beats {wins}/{len(frontier)}"
        elif best_entry_score is not None and best_entry_score - cand_score <= REFINE_BAND:
            verdict = "refine"
            rationale = (f"score {cand_score:.3f} within {REFINE_BAND} of best "
                         f"{best_entry_score:.3f}")
        else:
            verdict = "reject"
            rationale = f"score {cand_score:.3f} below frontier"
        return JudgeDecision(verdict=verdict, pairwise=pairwise, hints=hints,
                             rationale=rationale)

    def pick_2afc(self, features_a: dict, features_b: dict, dimension: str) -> int:
        """0 if a wins the dimension, else 1 (ties go to the second image)."""
        return 0 if dimension_score(features_a, dimension) > \
            dimension_score(features_b, dimension) else 1


class JudgeError(Exception):
    pass


JUDGE_WIRE_SCHEMA = "judge-wire/1"


@dataclass
class RemoteJudge:
    """HTTP adapter: POSTs images + summaries, expects a JudgeDecision JSON."""

    url: str
    timeout_s: float = 60.0
    retries: int = 2

    def compare(self, candidate: dict, frontier: list, prompt: str,
                stage: str) -> JudgeDecision:
        import requests
        payload = {
            "schema": JUDGE_WIRE_SCHEMA,
            "prompt": prompt,
            "stage": stage,
            "candidate": {
                "summary": candidate["features"],
                "image_png_b64": base64.b64encode(candidate["image_png"]).decode(),
            },
            "frontier": [{
                "entry_id": e["entry_id"],
                "summary": e["features"],
                "image_png_b64": base64.b64encode(e["image_png"]).decode(),
            } for e in frontier],
            "response_schema": {
                "verdict": "accept|refine|reject",
                "pairwise": [{"entry_id": "string", "winner": "candidate|entry"}],
                "hints": [{"code": "string", "magnitude": "small|large",
                           "rationale": "string"}],
            },
        }
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(self.url, json=payload, timeout=self.timeout_s)
                resp.raise_for_status()
                return self._parse(resp.json(), frontier)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
                continue
            except (ValueError, KeyError, requests.HTTPError) as exc:
                raise JudgeError(f"remote judge returned bad response: {exc}") from exc
        raise JudgeError(f"remote judge unreachable: {last_error}")

    @staticmethod
    def _parse(data: dict, frontier: list) -> JudgeDecision:
        try:
            decision = JudgeDecision.from_dict(data)
        except (KeyError, ValueError, TypeError) as exc:
            raise JudgeError(f"malformed judge response: {exc}") from exc
        have = {p.entry_id for p in decision.pairwise}
        need = {e["entry_id"] for e in frontier}
        if need - have:
            raise JudgeError(f"judge response missing pairwise for {sorted(need - have)}")
        return decision


class SessionClosed(Exception):
    pass


class HumanJudge:
    """Blocks on a request/response queue pair; the session service (or a
    test fixture) feeds decisions in FIFO order."""

    def __init__(self, timeout_s: float | None = None):
        self.requests: "queue.Queue[dict]" = queue.Queue()
        self.responses: "queue.Queue[dict]" = queue.Queue()
        self.timeout_s = timeout_s
        self.closed = False

    def close(self):
        self.closed = True
        self.responses.put({"__closed__": True})

    def compare(self, candidate: dict, frontier: list, prompt: str,
                stage: str) -> JudgeDecision:
        if self.closed:
            raise SessionClosed("judging session closed")
        self.requests.put({
            "prompt": prompt, "stage": stage,
            "candidate": {k: v for k, v in candidate.items() if k != "image_png"},
            "candidate_image_hash": candidate.get("image_hash"),
            "frontier": [{k: v for k, v in e.items() if k != "image_png"}
                         for e in frontier],
            "allowed_hints": list(STAGE_HINTS.get(stage, ())),
        })
        try:
            data = self.responses.get(timeout=self.timeout_s)
        except queue.Empty:
            raise SessionClosed("human judgment timed out")
        if data.get("__closed__"):
            raise SessionClosed("judging session closed")
        decision = JudgeDecision.from_dict(data)
        have = {p.entry_id for p in decision.pairwise}
        need = {e["entry_id"] for e in frontier}
        if need - have:
            raise JudgeError(f"judgment missing pairwise for {sorted(need - have)}")
        return decision


def decision_to_json(decision: JudgeDecision) -> str:
    return json.dumps(decision.to_dict(), sort_keys=True)

"""Plan state, refinement hints, judge decisions and the aesthetic frontier."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from ..exposure import CameraState
from ..render import LightRig
from ..skeleton import HumanState

STAGES = ("staging", "composition", "lighting", "done")

HINT_CODES = (
    "move-camera-left", "move-camera-right", "move-camera-up", "move-camera-down",
    "camera-closer", "camera-farther", "lens-wider", "lens-tighter",
    "exposure-up", "exposure-down",
    "key-brighter", "key-dimmer", "key-larger", "key-smaller",
    "fill-up", "fill-down", "add-negative-fill",
    "rotate-subject", "change-pose", "change-anchor", "try-other-preset",
)

STAGE_HINTS = {
    "staging": ("rotate-subject", "change-pose", "change-anchor"),
    "composition": ("move-camera-left", "move-camera-right", "move-camera-up",
                    "move-camera-down", "camera-closer", "camera-farther",
                    "lens-wider", "lens-tighter"),
    "lighting": ("exposure-up", "exposure-down", "key-brighter", "key-dimmer",
                 "key-larger", "key-smaller", "fill-up", "fill-down",
                 "add-negative-fill", "try-other-preset"),
}


@dataclass
class RefinementHint:
    code: str
    magnitude: str = "small"          # "small" | "large"
    rationale: str = ""

    def __post_init__(self):
        if self.code not in HINT_CODES:
            raise ValueError(f"unknown hint code {self.code!r}")
        if self.magnitude not in ("small", "large"):
            raise ValueError(f"magnitude must be small|large, got {self.magnitude!r}")

    def to_dict(self):
        return {"code": self.code, "magnitude": self.magnitude, "rationale": self.rationale}

    @classmethod
    def from_dict(cls, d):
        return cls(code=d["code"], magnitude=d.get("magnitude", "small"),
                   rationale=d.get("rationale", ""))


@dataclass
class PairOutcome:
    entry_id: str
    winner: str                       # "candidate" | "entry"

    def to_dict(self):
        return {"entry_id": self.entry_id, "winner": self.winner}


@dataclass
class JudgeDecision:
    verdict: str                      # "accept" | "refine" | "reject"
    pairwise: list = field(default_factory=list)
    hints: list = field(default_factory=list)
    rationale: str = ""

    def __post_init__(self):
        if self.verdict not in ("accept", "refine", "reject"):
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def to_dict(self):
        return {"verdict": self.verdict,
                "pairwise": [p.to_dict() for p in self.pairwise],
                "hints": [h.to_dict() for h in self.hints],
                "rationale": self.rationale}

    @classmethod
    def from_dict(cls, d):
        return cls(verdict=d["verdict"],
                   pairwise=[PairOutcome(p["entry_id"], p["winner"])
                             for p in d.get("pairwise", [])],
                   hints=[RefinementHint.from_dict(h) for h in d.get("hints", [])],
                   rationale=d.get("rationale", ""))


@dataclass
class PlanState:
    human: HumanState | None
    camera: CameraState
    rig: LightRig
    stage: str = "staging"
    step_index: int = 0
    staging_info: dict = field(default_factory=dict)   # preset/anchor/lighting metadata

    def to_dict(self) -> dict:
        return {"human": self.human.to_dict() if self.human else None,
                "camera": self.camera.to_dict(),
                "rig": self.rig.to_dict(),
                "stage": self.stage, "step_index": self.step_index,
                "staging_info": self.staging_info}

    @classmethod
    def from_dict(cls, d: dict) -> "PlanState":
        return cls(human=HumanState.from_dict(d["human"]) if d.get("human") else None,
                   camera=CameraState.from_dict(d["camera"]),
                   rig=LightRig.from_dict(d.get("rig", {})),
                   stage=d.get("stage", "staging"),
                   step_index=int(d.get("step_index", 0)),
                   staging_info=d.get("staging_info", {}))

    def state_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class FrontierEntry:
    entry_id: str
    state: PlanState
    image_hash: str
    features: dict
    stage: str
    score: float = 0.0
    lineage: str = ""
    rationale: str = ""
    judgments: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"entry_id": self.entry_id, "stage": self.stage,
                "score": self.score, "features": self.features,
                "image_hash": self.image_hash, "lineage": self.lineage,
                "judgments": list(self.judgments)}


class Frontier:
    """Best-so-far accepted states, ordered by round-robin wins minus losses
    over recorded pairwise outcomes among current members."""

    def __init__(self, k_max: int = 4):
        self.k_max = k_max
        self.entries: list[FrontierEntry] = []
        self.history: list[dict] = []          # every pairwise outcome ever seen
        self._pair: dict[tuple, str] = {}      # (winner-aware) latest outcome per pair
        self._arrival: dict[str, int] = {}
        self._counter = 0

    def __len__(self):
        return len(self.entries)

    def ids(self):
        return [e.entry_id for e in self.entries]

    def record_pairwise(self, candidate_id: str, outcomes: list):
        for p in outcomes:
            winner = candidate_id if p.winner == "candidate" else p.entry_id
            self.history.append({"a": candidate_id, "b": p.entry_id, "winner": winner})
            self._pair[(candidate_id, p.entry_id)] = winner
            self._pair[(p.entry_id, candidate_id)] = winner

    def _round_robin_score(self, eid: str, member_ids: list) -> int:
        score = 0
        for other in member_ids:
            if other == eid:
                continue
            winner = self._pair.get((eid, other))
            if winner is None:
                continue
            score += 1 if winner == eid else -1
        return score

    def _reorder(self):
        ids = [e.entry_id for e in self.entries]
        self.entries.sort(key=lambda e: (-self._round_robin_score(e.entry_id, ids),
                                         self._arrival[e.entry_id]))

    def best(self) -> FrontierEntry | None:
        return self.entries[0] if self.entries else None

    def consider(self, candidate: FrontierEntry, decision: JudgeDecision) -> bool:
        """Apply the judge decision; returns True if the candidate entered."""
        covered = {p.entry_id for p in decision.pairwise}
        missing = {e.entry_id for e in self.entries} - covered
        if missing:
            raise ValueError(f"pairwise outcomes missing for {sorted(missing)}")
        self.record_pairwise(candidate.entry_id, decision.pairwise)
        candidate.judgments = [p.to_dict() for p in decision.pairwise]
        if decision.verdict != "accept":
            return False
        wins = sum(1 for p in decision.pairwise if p.winner == "candidate")
        if self.entries and wins == 0:
            return False
        self._arrival[candidate.entry_id] = self._counter
        self._counter += 1
        self.entries.append(candidate)
        self._reorder()
        if len(self.entries) > self.k_max:
            ids = [e.entry_id for e in self.entries]
            scored = [(self._round_robin_score(e.entry_id, ids),
                       self._arrival[e.entry_id], i)
                      for i, e in enumerate(self.entries)]
            # lowest score loses; ties evict the older entry
            drop_idx = min(scored, key=lambda t: (t[0], t[1]))[2]
            self.entries.pop(drop_idx)
            self._reorder()
        return True

    def snapshot(self) -> list:
        return [e.summary() for e in self.entries]

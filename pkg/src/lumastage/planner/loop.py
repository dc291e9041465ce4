"""The Photographer/Actor/Judge coordination loop over three stages.

Each step proposes a revision, realizes it (the Actor enforces physical
constraints during staging), renders the viewfinder, and asks the Judge to
compare the candidate against the frontier.  The frontier carries across
stages; every rendered candidate consumes one step of the stage budget, and
the full trace (state hashes, features, decisions) is returned for audit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..imaging import ViewfinderImage
from ..occupancy import build_occupancy
from ..psg import build_initial_graph, probe_photometrics
from ..render import LightRig, RenderSettings
from ..skeleton import forward_kinematics, load_pose_presets
from ..staging import StagingFailure, StagingPreconditionError, realize_staging
from .observe import observe
from .proposers import CameraSpec, HeuristicPhotographer
from .state import Frontier, FrontierEntry, JudgeDecision, PlanState, RefinementHint


@dataclass
class Budgets:
    staging: int = 3
    composition: int = 7
    lighting: int = 7

    def to_dict(self):
        return {"staging": self.staging, "composition": self.composition,
                "lighting": self.lighting}


@dataclass
class PlannerConfig:
    k_max: int = 4
    use_affordances: bool = True
    use_photometrics: bool = True
    reset_frontier_per_stage: bool = False

    def to_dict(self):
        return self.__dict__.copy()


@dataclass
class PlanResult:
    frontier: Frontier
    trace: list
    images: dict                      # image_hash -> ViewfinderImage
    stage_snapshots: dict = field(default_factory=dict)
    failed: bool = False
    failure_reason: str = ""

    def best_entry(self) -> FrontierEntry | None:
        return self.frontier.best()

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in self.trace)


class PlanningFailure(Exception):
    def __init__(self, reason: str, result: PlanResult):
        super().__init__(reason)
        self.result = result


def run_plan(scene, skeleton, prompt: str, judge, budgets: Budgets | None = None,
             settings: RenderSettings | None = None, seed: int = 0,
             config: PlannerConfig | None = None,
             photographer: HeuristicPhotographer | None = None,
             on_step=None, on_image=None) -> PlanResult:
    """`on_step(record)` and `on_image(hash, image)` fire as soon as each
    trace record / render exists, so an interrupted run leaves a replayable
    prefix on disk."""
    budgets = budgets or Budgets()
    config = config or PlannerConfig()
    settings = settings or RenderSettings()
    settings = settings.scaled(seed=seed)
    grid = build_occupancy(scene)
    pose_presets = load_pose_presets()
    photographer = photographer or HeuristicPhotographer(
        scene, grid, skeleton, pose_presets, prompt,
        use_affordances=config.use_affordances,
        use_photometrics=config.use_photometrics)
    frontier = Frontier(k_max=config.k_max)
    trace: list[dict] = []
    images: dict[str, ViewfinderImage] = {}
    snapshots: dict[str, list] = {}
    aspect = settings.height / settings.width
    step_no = 0
    hints: list[RefinementHint] = []

    from ..judges import JudgeError, SessionClosed

    def judge_compare(candidate_entry, candidate_image):
        cand = {"entry_id": candidate_entry.entry_id,
                "features": candidate_entry.features,
                "image_hash": candidate_entry.image_hash,
                "image_png": candidate_image.ldr_bytes()}
        frontier_payload = [{
            "entry_id": e.entry_id, "features": e.features,
            "image_hash": e.image_hash,
            "image_png": images[e.image_hash].ldr_bytes(),
        } for e in frontier.entries]
        try:
            return judge.compare(cand, frontier_payload, prompt, candidate_entry.stage)
        except SessionClosed:
            raise
        except JudgeError as exc:
            return JudgeDecision(verdict="reject", pairwise=[
                _default_pair(e.entry_id) for e in frontier.entries],
                rationale=f"judge failure treated as reject: {exc}")

    def record(stage, proposal, entry, decision, entered, failure=None):
        nonlocal step_no
        step_no += 1
        rec = {"step": step_no, "stage": stage, "proposal": proposal}
        if entry is not None:
            rec["state_hash"] = entry.state.state_hash()
            rec["image_hash"] = entry.image_hash
            rec["features"] = _jsonable(entry.features)
            rec["entry_id"] = entry.entry_id
        if failure is not None:
            rec["realization_failure"] = failure
        if decision is not None:
            rec["decision"] = decision.to_dict()
            rec["entered_frontier"] = entered
        rec["frontier"] = frontier.ids()
        best = frontier.best()
        rec["best"] = best.entry_id if best else None
        trace.append(rec)
        if on_step is not None:
            on_step(rec)

    def make_entry(state, stage, lineage, key_fill_target=None, graph=None):
        image, features = observe(scene, grid, skeleton, state, settings, prompt,
                                  graph=graph, key_fill_target=key_fill_target)
        entry = FrontierEntry(
            entry_id=f"s{step_no + 1:03d}", state=state, image_hash=image.content_hash(),
            features=features, stage=stage, lineage=lineage)
        from ..judges import total_score
        entry.score = total_score(features)
        images[entry.image_hash] = image
        if on_image is not None:
            on_image(entry.image_hash, image)
        return entry, image

    # ---------------------------------------------------------------- staging
    base_graph = build_initial_graph(scene)
    for _ in range(budgets.staging):
        proposal = photographer.propose_staging(base_graph, hints)
        hints = []
        try:
            used_preset = proposal.preset_name
            if proposal.anchor_object_id:
                anchor = scene.object_by_id(proposal.anchor_object_id)
                staged = realize_staging(scene, grid, pose_presets[proposal.preset_name],
                                         anchor, proposal.facing, skeleton)
                human = staged.state
                anchor_label = proposal.anchor_label
                anchor_affs = " ".join(sorted(anchor.affordances))
            else:
                human, used_preset = _free_floor_pose(scene, grid, skeleton,
                                                      pose_presets, proposal, prompt)
                anchor_label = proposal.anchor_label
                anchor_affs = ""
        except (StagingFailure, StagingPreconditionError) as exc:
            record("staging", _proposal_dict(proposal), None, None, False,
                   failure=str(exc))
            photographer.advance_staging()
            hints = [RefinementHint("change-anchor", "small", "realization failed")]
            continue
        camera, spec = photographer.initial_camera(human, aspect)
        state = PlanState(human=human, camera=camera, rig=LightRig(), stage="staging",
                          step_index=step_no,
                          staging_info={"preset": used_preset,
                                        "anchor": proposal.anchor_node_id,
                                        "anchor_label": anchor_label,
                                        "anchor_affordances": anchor_affs,
                                        "camera_spec": spec.to_dict()})
        entry, image = make_entry(state, "staging", lineage="staging-proposal")
        decision = judge_compare(entry, image)
        entered = frontier.consider(entry, decision)
        record("staging", _proposal_dict(proposal), entry, decision, entered)
        hints = [h for h in decision.hints]
        if decision.verdict == "reject":
            photographer.advance_staging()
    if not frontier.entries:
        result = PlanResult(frontier, trace, images, snapshots, failed=True,
                            failure_reason="no staging candidate accepted")
        raise PlanningFailure("staging never realized an accepted pose", result)
    snapshots["staging"] = frontier.snapshot()
    if config.reset_frontier_per_stage:
        frontier = _reset_keep_best(frontier, config.k_max)

    # ------------------------------------------------------------ composition
    hints = []
    for step in range(budgets.composition):
        base = frontier.entries[step % len(frontier.entries)]
        spec = CameraSpec.from_dict(base.state.staging_info["camera_spec"])
        camera, spec = photographer.refine_composition(base.state.human, spec, hints,
                                                       aspect)
        hints = []
        info = dict(base.state.staging_info)
        info["camera_spec"] = spec.to_dict()
        state = PlanState(human=base.state.human, camera=camera, rig=base.state.rig,
                          stage="composition", step_index=step_no, staging_info=info)
        entry, image = make_entry(state, "composition",
                                  lineage=f"compose<{base.entry_id}")
        decision = judge_compare(entry, image)
        entered = frontier.consider(entry, decision)
        record("composition", {"base": base.entry_id, "camera_spec": spec.to_dict()},
               entry, decision, entered)
        hints = list(decision.hints)
    snapshots["composition"] = frontier.snapshot()
    if config.reset_frontier_per_stage:
        frontier = _reset_keep_best(frontier, config.k_max)

    # ------------------------------------------------------------ lighting
    hints = []
    for step in range(budgets.lighting):
        base = frontier.entries[step % len(frontier.entries)]
        caps = forward_kinematics(skeleton, base.state.human)
        face = next(c for c in caps if c.name == "head").midpoint()
        info = dict(base.state.staging_info)
        graph = build_initial_graph(scene, caps, base.state.camera)
        preset_name = info.get("lighting_preset")
        target = info.get("key_fill_target")
        if any(h.code == "try-other-preset" for h in hints):
            photographer.next_preset(base.entry_id)
            preset_name = None
        if preset_name is None or not base.state.rig.emitters and not base.state.rig.panels:
            rig, preset_name, calib = photographer.initial_lighting(
                base.entry_id, face, base.state.camera)
            target = photographer.lighting_presets[preset_name].key_to_fill
        else:
            rig = photographer.refine_lighting(base.state.rig, face,
                                               base.state.camera, hints)
        if photographer.use_photometrics:
            from ..psg import EmissiveNode
            for em in rig.emitters:
                graph.emissive.append(EmissiveNode(f"emi:{em.id}", em.id, "controllable"))
            toward_cam = _safe_dir(base.state.camera.position() - face)
            probe_anchor = face + toward_cam * 0.25
            try:
                probe_photometrics(graph, scene, rig, probe_anchor,
                                   anchor_node_id="body:face", view_dir=toward_cam)
            except Exception:
                pass
        delta = photographer.exposure_delta(base.features)
        delta = photographer.apply_exposure_hints(delta, hints)
        hints = []
        camera = _with_delta(base.state.camera, delta)
        info["lighting_preset"] = preset_name
        info["key_fill_target"] = target
        state = PlanState(human=base.state.human, camera=camera, rig=rig,
                          stage="lighting", step_index=step_no, staging_info=info)
        entry, image = make_entry(state, "lighting", lineage=f"light<{base.entry_id}",
                                  key_fill_target=target, graph=graph)
        decision = judge_compare(entry, image)
        entered = frontier.consider(entry, decision)
        record("lighting", {"base": base.entry_id, "preset": preset_name,
                            "delta": delta}, entry, decision, entered)
        hints = list(decision.hints)
        if decision.verdict == "reject":
            hints.append(RefinementHint("try-other-preset", "small",
                                        "preset rejected outright"))
    snapshots["lighting"] = frontier.snapshot()

    return PlanResult(frontier, trace, images, snapshots)


def _default_pair(entry_id):
    from .state import PairOutcome
    return PairOutcome(entry_id, "entry")


def _proposal_dict(p) -> dict:
    return {"preset": p.preset_name, "anchor": p.anchor_node_id,
            "facing": [round(f, 6) for f in p.facing]}


def _jsonable(features: dict) -> dict:
    out = {}
    for k, v in features.items():
        if isinstance(v, (np.floating, np.integer)):
            out[k] = float(v)
        elif isinstance(v, np.ndarray):
            out[k] = [float(x) for x in v]
        else:
            out[k] = v
    return out


def _with_delta(camera, delta: float):
    from ..exposure import CameraState
    cam = CameraState.from_dict(camera.to_dict())
    cam.exposure_comp = float(np.clip(delta, -3.0, 3.0))
    return cam


def _safe_dir(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    return v / n if n > 1e-9 else np.array([1.0, 0.0, 0.0])


def _reset_keep_best(frontier: Frontier, k_max: int) -> Frontier:
    fresh = Frontier(k_max=k_max)
    best = frontier.best()
    if best is not None:
        fresh._arrival[best.entry_id] = 0
        fresh._counter = 1
        fresh.entries.append(best)
    fresh.history = list(frontier.history)
    return fresh


def _free_floor_pose(scene, grid, skeleton, pose_presets, proposal, prompt):
    """Graph-free placement: realize the preset on open floor at the proposed
    ring position (used by the image-only configuration)."""
    from ..scene import SceneObject
    from ..geometry import RigidTransform
    lo, hi = scene.aabb()
    center = 0.5 * (lo + hi)
    idx = int(proposal.anchor_node_id.split(":")[1]) if ":" in proposal.anchor_node_id else 0
    ring = np.array([[0.0, 0.0], [0.9, 0.4], [-0.8, 0.6], [0.5, -0.9], [-0.6, -0.7]])
    xy = center[:2] + ring[idx % len(ring)]
    pad = SceneObject(id="__free_floor", label="open floor", shape="box",
                      transform=RigidTransform.from_euler_deg(0, 0, 0,
                                                              t=(xy[0], xy[1], -0.05)),
                      dimensions={"x": 1.2, "y": 1.2, "z": 0.1},
                      albedo=np.array([0.5, 0.5, 0.5]),
                      affordances=frozenset({"stand-zone"}))
    preset = pose_presets[proposal.preset_name]
    if preset.anchor_requirement not in (None, "stand-zone"):
        preset = pose_presets["stand"]
    staged = realize_staging(scene, grid, preset, pad, proposal.facing, skeleton)
    return staged.state, preset.name

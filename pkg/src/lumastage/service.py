"""HTTP session service: planning sessions driven by a human judge.

Each session runs one sequential planner in a worker thread; HTTP handlers
talk to it only through the judge's single-consumer queues and immutable
snapshots.  Session state (config, trace JSONL, images) persists to a
per-session directory, append-only, flushed per step.
"""

from __future__ import annotations

import json
import threading
import uuid
from importlib import resources
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .judges import HumanJudge, SessionClosed
from .planner import Budgets, PlannerConfig, PlanningFailure, run_plan
from .planner.state import HINT_CODES, JudgeDecision
from .render import RenderSettings
from .scene import load_scene
from .skeleton import load_skeleton

API_SCHEMA = "session-api/1"


class SessionRequest(BaseModel):
    scene: str
    prompt: str = ""
    budgets: dict = Field(default_factory=lambda: {"staging": 3, "composition": 7,
                                                   "lighting": 7})
    seed: int = 0
    width: int = 128
    height: int = 128
    samples_per_pixel: int = 8


class JudgmentRequest(BaseModel):
    token: str
    verdict: str
    pairwise: list = Field(default_factory=list)
    hints: list = Field(default_factory=list)
    rationale: str = ""


def resolve_scene(name_or_path: str):
    p = Path(name_or_path)
    if p.exists():
        return load_scene(p)
    ref = resources.files("lumastage").joinpath(f"data/scenes/{name_or_path}.scene.json")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise HTTPException(status_code=400,
                            detail=f"scene {name_or_path!r} not found")
    from .scene import scene_from_dict
    return scene_from_dict(json.loads(text))


class SessionRuntime:
    def __init__(self, sid: str, req: SessionRequest, root: Path):
        self.id = sid
        self.request = req
        self.dir = root / "sessions" / sid
        self.dir.mkdir(parents=True, exist_ok=True)
        self.images_dir = root / "images"
        self.images_dir.mkdir(parents=True, exist_ok=True)
        self.judge = HumanJudge()
        self.lock = threading.Lock()
        self.pending: dict | None = None
        self.status = "planning"
        self.stage = "staging"
        self.step = 0
        self.frontier_snapshot: list = []
        self.error = ""
        (self.dir / "config.json").write_text(
            json.dumps({"schema": API_SCHEMA, **req.model_dump()}, indent=2) + "\n")
        self._trace_path = self.dir / "trace.jsonl"
        self._trace_path.touch()
        self.thread = threading.Thread(target=self._run, daemon=True)

    def start(self):
        self.thread.start()

    def _on_step(self, rec: dict):
        with self.lock:
            self.step = rec["step"]
            self.stage = rec["stage"]
        with open(self._trace_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.flush()

    def _on_image(self, image_hash: str, image):
        path = self.images_dir / f"{image_hash}.png"
        if not path.exists():
            path.write_bytes(image.ldr_bytes())

    def _run(self):
        req = self.request
        try:
            scene = resolve_scene(req.scene)
            skeleton = load_skeleton()
            result = run_plan(
                scene, skeleton, req.prompt, self.judge,
                budgets=Budgets(**req.budgets),
                settings=RenderSettings(width=req.width, height=req.height,
                                        samples_per_pixel=req.samples_per_pixel),
                seed=req.seed, config=PlannerConfig(),
                on_step=self._on_step, on_image=self._on_image)
            with self.lock:
                self.frontier_snapshot = result.frontier.snapshot()
                self.status = "done"
                self.stage = "done"
        except SessionClosed:
            with self.lock:
                self.status = "aborted"
        except PlanningFailure as exc:
            with self.lock:
                self.status = "done"
                self.error = str(exc)
        except Exception as exc:          # surfaced via GET /sessions/{id}
            with self.lock:
                self.status = "aborted"
                self.error = f"{type(exc).__name__}: {exc}"

    # ---------------------------------------------------------------- pending

    def poll_pending(self) -> dict | None:
        with self.lock:
            if self.pending is None:
                try:
                    request = self.judge.requests.get_nowait()
                except Exception:
                    request = None
                if request is not None:
                    self.pending = {"token": uuid.uuid4().hex, **request}
            return self.pending

    def submit(self, body: JudgmentRequest) -> None:
        with self.lock:
            if self.pending is None or body.token != self.pending["token"]:
                raise HTTPException(status_code=409,
                                    detail="no matching pending judgment")
            need = {e["entry_id"] for e in self.pending["frontier"]}
            have = {p.get("entry_id") for p in body.pairwise}
            if body.verdict not in ("accept", "refine", "reject"):
                raise HTTPException(status_code=400, detail="verdict: invalid value")
            if need - have:
                raise HTTPException(status_code=400,
                                    detail=f"pairwise: missing entries {sorted(need - have)}")
            for h in body.hints:
                if h.get("code") not in HINT_CODES:
                    raise HTTPException(status_code=400,
                                        detail=f"hints: unknown code {h.get('code')!r}")
            try:
                decision = JudgeDecision.from_dict(body.model_dump())
            except (KeyError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=f"judgment: {exc}")
            self.pending = None
        self.judge.responses.put(decision.to_dict())

    def snapshot(self) -> dict:
        with self.lock:
            status = self.status
            if status == "planning" and self.pending is not None:
                status = "awaiting-judgment"
            return {"schema": API_SCHEMA, "id": self.id, "status": status,
                    "stage": self.stage, "step": self.step,
                    "prompt": self.request.prompt, "scene": self.request.scene,
                    "error": self.error}

    def abort(self):
        self.judge.close()


def create_app(root: str | Path = "sessions-root") -> FastAPI:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="lumastage session service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    sessions: dict[str, SessionRuntime] = {}
    app.state.sessions = sessions
    app.state.root = root

    def get_session(sid: str) -> SessionRuntime:
        if sid not in sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return sessions[sid]

    @app.post("/sessions", status_code=201)
    def create_session(req: SessionRequest):
        sid = uuid.uuid4().hex[:12]
        runtime = SessionRuntime(sid, req, root)
        sessions[sid] = runtime
        runtime.start()
        return {"schema": API_SCHEMA, "id": sid}

    @app.get("/sessions")
    def list_sessions():
        return {"schema": API_SCHEMA,
                "sessions": [s.snapshot() for s in sessions.values()]}

    @app.get("/sessions/{sid}")
    def session_status(sid: str):
        return get_session(sid).snapshot()

    @app.get("/sessions/{sid}/pending")
    def session_pending(sid: str):
        runtime = get_session(sid)
        pending = runtime.poll_pending()
        if pending is None:
            return Response(status_code=204)
        payload = dict(pending)
        payload["schema"] = API_SCHEMA
        payload["candidate"] = dict(payload["candidate"])
        payload["candidate"]["image_url"] = \
            f"/images/{payload['candidate_image_hash']}.png"
        payload["frontier"] = [
            {**e, "image_url": f"/images/{e['image_hash']}.png"}
            for e in payload["frontier"]]
        return JSONResponse(payload)

    @app.post("/sessions/{sid}/judgments", status_code=202)
    def submit_judgment(sid: str, body: JudgmentRequest):
        get_session(sid).submit(body)
        return {"schema": API_SCHEMA, "accepted": True}

    @app.get("/sessions/{sid}/frontier")
    def session_frontier(sid: str):
        runtime = get_session(sid)
        with runtime.lock:
            snap = list(runtime.frontier_snapshot)
        if not snap:
            snap = _frontier_from_trace(runtime)
        return {"schema": API_SCHEMA, "frontier": [
            {**e, "image_url": f"/images/{e['image_hash']}.png"} for e in snap]}

    @app.get("/sessions/{sid}/trace")
    def session_trace(sid: str):
        runtime = get_session(sid)
        return PlainTextResponse(runtime._trace_path.read_text(encoding="utf-8"),
                                 media_type="application/jsonl")

    @app.delete("/sessions/{sid}")
    def abort_session(sid: str):
        runtime = get_session(sid)
        runtime.abort()
        runtime.thread.join(timeout=10.0)
        return {"schema": API_SCHEMA, "id": sid, "status": runtime.snapshot()["status"]}

    @app.get("/images/{name}")
    def get_image(name: str):
        path = root / "images" / name
        if not path.exists() or not name.endswith(".png"):
            raise HTTPException(status_code=404, detail="unknown image")
        return FileResponse(path, media_type="image/png",
                            headers={"Cache-Control": "public, max-age=31536000, immutable"})

    return app


def _frontier_from_trace(runtime: SessionRuntime) -> list:
    """Reconstruct current frontier entries from the trace (mid-run view)."""
    records = {}
    frontier_ids: list = []
    for line in runtime._trace_path.read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        if "entry_id" in rec:
            records[rec["entry_id"]] = rec
        frontier_ids = rec.get("frontier", frontier_ids)
    out = []
    for eid in frontier_ids:
        rec = records.get(eid)
        if rec:
            out.append({"entry_id": eid, "stage": rec["stage"],
                        "score": None, "features": rec.get("features", {}),
                        "image_hash": rec.get("image_hash", ""),
                        "lineage": ""})
    return out

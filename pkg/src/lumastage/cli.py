"""Command-line entry point: planning, rendering, probing, evaluation, serving.

Exit codes: 0 success, 1 validation error, 2 runtime error.  With
--json-errors, failures print a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

import click
import numpy as np

TASK_SCHEMA = "lumastage-task/1"


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code


def _fail(ctx, exc: Exception, code: int):
    if ctx.obj and ctx.obj.get("json_errors"):
        sys.stderr.write(json.dumps({"error": type(exc).__name__,
                                     "message": str(exc), "exit_code": code}) + "\n")
    else:
        sys.stderr.write(f"error: {exc}\n")
    sys.exit(code)


def _guarded(fn):
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return fn(*args, **kwargs)
        except CliError as exc:
            _fail(ctx, exc, exc.exit_code)
        except (ValueError, KeyError, FileNotFoundError) as exc:
            _fail(ctx, exc, 1)
        except Exception as exc:
            _fail(ctx, exc, 2)
    return wrapper


def _resolve_scene(name_or_path: str):
    from .scene import load_scene, scene_from_dict
    p = Path(name_or_path)
    if p.exists():
        return load_scene(p)
    ref = resources.files("lumastage").joinpath(f"data/scenes/{name_or_path}.scene.json")
    try:
        return scene_from_dict(json.loads(ref.read_text(encoding="utf-8")))
    except FileNotFoundError:
        raise CliError(f"scene {name_or_path!r} not found (no file, not packaged)")


def _load_task(task: str, config_path: str | None = None) -> dict:
    p = Path(task)
    if p.exists():
        spec = json.loads(p.read_text(encoding="utf-8"))
    else:
        ref = resources.files("lumastage").joinpath(f"data/tasks/{task}.task.json")
        try:
            spec = json.loads(ref.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise CliError(f"task {task!r} not found (no file, not packaged)")
    if spec.get("schema") != TASK_SCHEMA:
        raise CliError(f"unsupported task schema {spec.get('schema')!r}")
    if config_path:
        overrides = json.loads(Path(config_path).read_text(encoding="utf-8"))
        spec = {**spec, **overrides}
    for key in ("staging", "composition", "lighting"):
        if spec["budgets"].get(key, 1) < 1:
            raise CliError(f"budget {key} must be >= 1")
    return spec


def _make_judge(kind: str):
    from .judges import HeuristicJudge, RemoteJudge
    if kind == "heuristic":
        return HeuristicJudge()
    if kind.startswith("remote:"):
        return RemoteJudge(url=kind.split(":", 1)[1])
    if kind == "human":
        raise CliError("human judging runs through `lumastage serve`; "
                       "create a session over HTTP instead")
    raise CliError(f"unknown judge {kind!r}")


def _settings_from(spec: dict, seed: int | None):
    from .render import RenderSettings
    r = spec.get("render", {})
    return RenderSettings(width=int(r.get("width", 128)), height=int(r.get("height", 128)),
                          samples_per_pixel=int(r.get("samples_per_pixel", 16)),
                          seed=spec.get("seed", 0) if seed is None else seed)


def _write_plan_outputs(result, out_dir: Path, task_name: str, method: str,
                        scene=None, skeleton=None, settings=None,
                        prompt: str = "") -> dict:
    from .imaging import save_viewfinder
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_text = result.trace_jsonl()
    (out_dir / "trace.jsonl").write_text(trace_text, encoding="utf-8")
    images = out_dir / "images"
    images.mkdir(exist_ok=True)
    for h, img in result.images.items():
        (images / f"{h}.png").write_bytes(img.ldr_bytes())
    best = result.best_entry()
    summary = {"task": task_name, "method": method,
               "trace_sha256": hashlib.sha256(trace_text.encode()).hexdigest(),
               "steps": len(result.trace)}
    if best is not None:
        save_viewfinder(result.images[best.image_hash], out_dir, "best")
        summary.update({"best_entry": best.entry_id, "best_score": best.score,
                        "image_hash": best.image_hash, "features": best.features,
                        "stage": best.stage})
        (out_dir / "best.state.json").write_text(
            json.dumps(best.state.to_dict(), indent=2) + "\n", encoding="utf-8")
        (out_dir / "frontier.json").write_text(
            json.dumps(result.frontier.snapshot(), indent=2) + "\n", encoding="utf-8")
        if scene is not None and skeleton is not None:
            from .evaluation import observe_final
            _, final = observe_final(scene, skeleton, best.state, settings, prompt)
            summary["final_features"] = final
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True,
                                                     default=float)
                                          + "\n", encoding="utf-8")
    return summary


@click.group()
@click.option("--json-errors", is_flag=True, help="machine-readable errors on stderr")
@click.pass_context
def main(ctx, json_errors):
    """Portrait planning engine: plan, render, probe, evaluate, serve."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors


@main.command()
@click.option("--task", required=True, help="task file or packaged task name")
@click.option("--seed", type=int, default=None, help="override the task seed")
@click.option("--out", "out_dir", default="plan-out", show_default=True)
@click.option("--judge", "judge_kind", default=None,
              help="heuristic | remote:URL (default: task setting)")
@click.option("--config", "config_path", default=None,
              help="JSON config overriding task fields")
@_guarded
def plan(task, seed, out_dir, judge_kind, config_path):
    """Run the full planner on a task; writes trace, frontier and images."""
    from .planner import Budgets, run_plan
    from .skeleton import load_skeleton
    spec = _load_task(task, config_path)
    scene = _resolve_scene(spec["scene"])
    judge = _make_judge(judge_kind or spec.get("judge", "heuristic"))
    use_seed = spec.get("seed", 0) if seed is None else seed
    skeleton = load_skeleton()
    settings = _settings_from(spec, use_seed)
    result = run_plan(scene, skeleton, spec.get("prompt", ""), judge,
                      budgets=Budgets(**spec["budgets"]),
                      settings=settings, seed=use_seed)
    summary = _write_plan_outputs(result, Path(out_dir), spec.get("name", task), "full",
                                  scene, skeleton, settings, spec.get("prompt", ""))
    click.echo(json.dumps(summary, sort_keys=True, default=float))


@main.command()
@click.option("--scene", "scene_name", required=True)
@click.option("--state", "state_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default="render-out", show_default=True)
@click.option("--width", type=int, default=256)
@click.option("--height", type=int, default=256)
@click.option("--spp", type=int, default=64)
@click.option("--seed", type=int, default=0)
@_guarded
def render(scene_name, state_path, out_path, width, height, spp, seed):
    """One-off render of a serialized plan state."""
    from .imaging import save_viewfinder
    from .planner import PlanState
    from .planner.observe import observe
    from .occupancy import build_occupancy
    from .render import RenderSettings
    from .skeleton import load_skeleton
    scene = _resolve_scene(scene_name)
    state = PlanState.from_dict(json.loads(Path(state_path).read_text()))
    skeleton = load_skeleton()
    settings = RenderSettings(width=width, height=height, samples_per_pixel=spp,
                              seed=seed)
    image, features = observe(scene, build_occupancy(scene), skeleton, state, settings)
    paths = save_viewfinder(image, Path(out_path), "render")
    click.echo(json.dumps({"paths": paths, "features": features}, sort_keys=True,
                          default=float))


@main.command()
@click.option("--scene", "scene_name", required=True)
@click.option("--anchor", required=True, help="x,y,z probe position in meters")
@click.option("--out", "out_path", default=None, help="write graph JSON here")
@_guarded
def probe(scene_name, anchor, out_path):
    """Photometric probe report at a position: ambient, ratios, EV lifts."""
    from .psg import build_initial_graph, probe_photometrics
    scene = _resolve_scene(scene_name)
    pos = [float(v) for v in anchor.split(",")]
    if len(pos) != 3:
        raise CliError("--anchor expects x,y,z")
    g = build_initial_graph(scene)
    probe_photometrics(g, scene, None, pos)
    report = {"probe_raw": g.probe_raw,
              "r_to_ambient": {n.id: ("inf" if n.r_to_ambient == float("inf")
                                      else n.r_to_ambient) for n in g.emissive},
              "pairwise": [e.to_dict() for e in g.e2e]}
    if out_path:
        Path(out_path).write_text(g.to_json(), encoding="utf-8")
    click.echo(json.dumps(report, sort_keys=True))


@main.command()
@click.option("--scene", "scene_name", required=True)
@click.option("--state", "state_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None)
@_guarded
def graph(scene_name, state_path, out_path):
    """Build and dump the photographic scene graph."""
    from .psg import build_initial_graph
    from .skeleton import forward_kinematics, load_skeleton
    scene = _resolve_scene(scene_name)
    capsules = None
    camera = None
    if state_path:
        from .planner import PlanState
        state = PlanState.from_dict(json.loads(Path(state_path).read_text()))
        camera = state.camera
        if state.human:
            capsules = forward_kinematics(load_skeleton(), state.human)
    g = build_initial_graph(scene, capsules, camera)
    text = g.to_json()
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    click.echo(text.rstrip())


@main.command()
@click.option("--plans", "plans_dir", required=True, type=click.Path(exists=True),
              help="directory of *.state.json plan files")
@click.option("--scene", "scene_name", required=True)
@click.option("--width", type=int, default=96)
@click.option("--height", type=int, default=96)
@click.option("--spp", type=int, default=4)
@_guarded
def metrics(plans_dir, scene_name, width, height, spp):
    """Actionability metrics (collision-free rate, balance rate, exposure)."""
    from .evaluation import compute_actionability
    from .planner import PlanState
    from .render import RenderSettings
    from .skeleton import load_skeleton
    scene = _resolve_scene(scene_name)
    paths = sorted(Path(plans_dir).glob("*.state.json"))
    if not paths:
        raise CliError(f"no *.state.json files under {plans_dir}")
    plans = [PlanState.from_dict(json.loads(p.read_text())) for p in paths]
    m = compute_actionability(plans, scene, load_skeleton(),
                              RenderSettings(width=width, height=height,
                                             samples_per_pixel=spp))
    click.echo(json.dumps(m.to_dict(), sort_keys=True))


@main.command()
@click.option("--outputs", "outputs_dir", required=True, type=click.Path(exists=True),
              help="directory laid out as <method>/<task>/summary.json")
@click.option("--methods", required=True, help="comma-separated method names")
@click.option("--judge", "judge_kind", default="heuristic", show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", default="judgments.csv", show_default=True)
@_guarded
def tournament(outputs_dir, methods, judge_kind, seed, out_path):
    """Round-robin 2AFC judgments across methods; writes CSV + JSONL."""
    from .evaluation import run_tournament, save_judgments_csv
    judge = _make_judge(judge_kind)
    outputs = {}
    for method in methods.split(","):
        method = method.strip()
        outputs[method] = {}
        for summary in sorted(Path(outputs_dir).glob(f"{method}/*/summary.json")):
            data = json.loads(summary.read_text())
            feats = data.get("final_features") or data.get("features")
            if feats:
                outputs[method][data["task"]] = feats
        if not outputs[method]:
            raise CliError(f"no outputs found for method {method!r}")
    judgments = run_tournament(outputs, judge, seed=seed)
    save_judgments_csv(judgments, out_path)
    jsonl = Path(out_path).with_suffix(".jsonl")
    with open(jsonl, "w") as fh:
        for j in judgments:
            fh.write(json.dumps(j.__dict__, sort_keys=True) + "\n")
    click.echo(json.dumps({"judgments": len(judgments), "csv": str(out_path),
                           "jsonl": str(jsonl)}))


@main.command(name="bt-fit")
@click.option("--judgments", "judgments_path", required=True,
              type=click.Path(exists=True))
@click.option("--dimension", default=None, help="fit one dimension only")
@click.option("--bootstrap", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", default=None)
@_guarded
def bt_fit(judgments_path, dimension, bootstrap, seed, out_path):
    """Bradley-Terry abilities with bootstrap confidence intervals."""
    from .evaluation import fit_bradley_terry, load_judgments_csv, save_bt_fit
    judgments = load_judgments_csv(judgments_path)
    if dimension:
        judgments = [j for j in judgments if j.dimension == dimension]
    fit = fit_bradley_terry(judgments, bootstrap=bootstrap, seed=seed)
    payload = fit.to_dict()
    if out_path:
        save_bt_fit(fit, out_path, config_echo={"judgments": str(judgments_path),
                                                "dimension": dimension,
                                                "bootstrap": bootstrap, "seed": seed})
    click.echo(json.dumps(payload, sort_keys=True))


@main.command()
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--root", "root_dir", default="sessions-root", show_default=True)
@click.option("--ui-dir", "ui_dir", default=None,
              help="serve a judge-console bundle at /ui")
@_guarded
def serve(port, host, root_dir, ui_dir):
    """Run the HTTP session service (human-judge console backend)."""
    import uvicorn
    from .service import create_app
    app = create_app(root_dir)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--name", "baseline_name", required=True,
              type=click.Choice(["random", "template", "image-only", "spatial-graph",
                                 "one-pass", "greedy", "full"]))
@click.option("--task", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", default="baseline-out", show_default=True)
@click.option("--config", "config_path", default=None)
@_guarded
def baseline(baseline_name, task, seed, out_dir, config_path):
    """Run a baseline planner configuration on a task."""
    from .judges import HeuristicJudge
    from .planner import Budgets
    from .planner.baselines import run_baseline
    from .skeleton import load_skeleton
    spec = _load_task(task, config_path)
    scene = _resolve_scene(spec["scene"])
    use_seed = spec.get("seed", 0) if seed is None else seed
    skeleton = load_skeleton()
    settings = _settings_from(spec, use_seed)
    result = run_baseline(baseline_name, scene, skeleton, spec.get("prompt", ""),
                          HeuristicJudge(), use_seed, settings,
                          budgets=Budgets(**spec["budgets"]))
    summary = _write_plan_outputs(result, Path(out_dir), spec.get("name", task),
                                  baseline_name, scene, skeleton, settings,
                                  spec.get("prompt", ""))
    click.echo(json.dumps(summary, sort_keys=True, default=float))


if __name__ == "__main__":
    main()

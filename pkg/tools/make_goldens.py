#!/usr/bin/env python3
"""Regenerate checked-in goldens: the loft scene graph and the CLI trace hash.

Run after intentional changes to scenes, graph construction, the planner, or
the renderer; commit the updated files under tests/golden/.
"""

from __future__ import annotations

import json
import pathlib
import tempfile

from click.testing import CliRunner

from lumastage.cli import main
from lumastage.psg import build_initial_graph
from lumastage.scene import load_scene

ROOT = pathlib.Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
SCENES = ROOT / "src" / "lumastage" / "data" / "scenes"


def regen_graph():
    scene = load_scene(SCENES / "loft.scene.json")
    g = build_initial_graph(scene)
    (GOLDEN / "loft.psg.json").write_text(json.dumps(g.to_dict(), indent=2) + "\n")
    print(f"loft.psg.json: {len(g.non_emissive)} nodes, {len(g.n2n)} edges")


def regen_trace_hash():
    task = {"schema": "lumastage-task/1", "name": "loft-golden", "scene": "loft",
            "prompt": "melancholy sitting by the window", "seed": 7,
            "budgets": {"staging": 2, "composition": 3, "lighting": 3},
            "judge": "heuristic",
            "render": {"width": 72, "height": 72, "samples_per_pixel": 4}}
    with tempfile.TemporaryDirectory() as td:
        tp = pathlib.Path(td) / "task.json"
        tp.write_text(json.dumps(task))
        r = CliRunner().invoke(main, ["plan", "--task", str(tp),
                                      "--out", str(pathlib.Path(td) / "out")])
        assert r.exit_code == 0, r.output
        h = json.loads(r.output)["trace_sha256"]
    (GOLDEN / "loft_trace.json").write_text(
        json.dumps({"task": task, "trace_sha256": h}, indent=2) + "\n")
    print(f"loft_trace.json: {h}")


if __name__ == "__main__":
    GOLDEN.mkdir(parents=True, exist_ok=True)
    regen_graph()
    regen_trace_hash()

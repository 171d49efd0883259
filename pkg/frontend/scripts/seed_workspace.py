"""Prepare a workspace for the console round-trip test.

Creates the small road world, records four edge demonstrations, trains the
initial deployed model, and precomputes the four corrective polylines an
operator would draw around the zone placed during the test session.
"""

import json
import sys
from pathlib import Path

from navlearn.envfile import Zod
from navlearn.grids import STANDARD_SCHEMA
from navlearn.learning import TrainBudget, train
from navlearn.presets import mini_world
from navlearn.scenarios import collect_oracle_demos, generate_environment, oracle_path
from navlearn.workspace import Workspace

ZOD_X, ZOD_Y, ZOD_R = 14.0, 11.0, 2.5


def main(root: str) -> None:
    spec = mini_world(0)
    env = generate_environment(spec, env_id="mini")
    ws = Workspace(root)
    ws.put_environment(env)

    demos = collect_oracle_demos(spec, env, STANDARD_SCHEMA)
    demo_ids = [ws.put_demonstration(d) for d in demos]
    model = train(demos, STANDARD_SCHEMA, seed=0,
                  budget=TrainBudget(max_iterations=150, tolerance=2e-3))
    meta_ids = tuple(demo_ids)
    # rebind ids so warm retraining accumulates the stored demonstrations
    from dataclasses import replace
    model = replace(model, meta=replace(model.meta, demo_ids=meta_ids))
    ws.put_model("patrol", model)

    zodded = ws.edit_zods("mini", (Zod(center_x=ZOD_X, center_y=ZOD_Y, radius=ZOD_R),))
    strokes = []
    for span in (6.0, 4.5):
        a, b = (ZOD_X - span, ZOD_Y), (ZOD_X + span, ZOD_Y)
        for s, g in ((a, b), (b, a)):
            cells = oracle_path(zodded, "zod-avoidance", s, g)
            strokes.append([list(zodded.geometry.center_of(c)) for c in cells])
    # the test session places the zone itself; reset to the clean environment
    ws.edit_zods("mini", ())

    eval_pair = spec.waypoint_pairs[0]
    data = {
        "environment_id": "mini",
        "model_id": "patrol",
        "zod": {"center_x_m": ZOD_X, "center_y_m": ZOD_Y, "radius_m": ZOD_R},
        "strokes": strokes,
        "waypoints": {"from": list(eval_pair.start), "to": list(eval_pair.goal)},
    }
    Path(root, "seed-data.json").write_text(json.dumps(data, indent=2))
    print(f"seeded workspace at {root}")


if __name__ == "__main__":
    main(sys.argv[1])

"""HTTP service exposing the workbench to the operator console.

JSON request/response bodies throughout; layer matrices are delivered
row-major with an explicit geometry header, and training progress streams
as line-delimited JSON records. Training runs off the request path with
per-model mutual exclusion; a second submission against a busy model is
rejected rather than merged.
"""

from __future__ import annotations

import json
import time
from typing import Iterator

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .envfile import Zod
from .errors import (NavlearnError, NotFoundError, OutOfBoundsError,
                     ValidationError)
from .grids import build_stack, schema_by_name
from .learning import Demonstration, reward_map
from .metrics import mhd
from .planning import (BaselineParams, PlanRequest, Trajectory, densify,
                       plan_baseline, plan_ioc)
from .scenarios import RESAMPLE_STEP_M
from .workspace import JobManager, TERMINAL_STATES, Workspace, snap_polyline_to_cells

STATUS_BY_SLUG = {
    "not-found": 404,
    "busy": 409,
    "schema-mismatch": 409,
    "unreachable-goal": 422,
    "invalid-input": 422,
    "out-of-bounds": 422,
    "geometry-mismatch": 422,
}


def _geometry_doc(geo) -> dict:
    return {"width": geo.width, "height": geo.height, "resolution_m": geo.resolution,
            "origin_x_m": geo.origin_x, "origin_y_m": geo.origin_y}


def _trajectory_doc(traj_id: str, traj: Trajectory) -> dict:
    return {"id": traj_id, "provenance": traj.provenance,
            "points": [[float(x), float(y)] for x, y in traj.points],
            "length_m": traj.length}


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="navlearn service")
    jobs = JobManager(workspace)
    app.state.workspace = workspace
    app.state.jobs = jobs

    @app.exception_handler(NavlearnError)
    async def navlearn_error(request: Request, exc: NavlearnError):
        status = STATUS_BY_SLUG.get(exc.slug, 400)
        return JSONResponse(status_code=status,
                            content={"error": exc.slug, "detail": exc.message})

    # -- environments -------------------------------------------------------

    @app.get("/environments")
    def list_environments():
        out = []
        for env_id in workspace.list_environments():
            env = workspace.get_environment(env_id)
            out.append({"id": env_id, "geometry": _geometry_doc(env.geometry),
                        "version": workspace.environment_version(env_id),
                        "layers": sorted(env.layers),
                        "zods": [{"center_x_m": z.center_x, "center_y_m": z.center_y,
                                  "radius_m": z.radius} for z in env.zods]})
        return {"environments": out}

    @app.get("/environments/{env_id}")
    def get_environment(env_id: str):
        env = workspace.get_environment(env_id)
        return {"id": env_id, "geometry": _geometry_doc(env.geometry),
                "version": workspace.environment_version(env_id),
                "layers": sorted(env.layers),
                "zods": [{"center_x_m": z.center_x, "center_y_m": z.center_y,
                          "radius_m": z.radius} for z in env.zods]}

    @app.get("/environments/{env_id}/layers/{kind}")
    def get_layer(env_id: str, kind: str):
        env = workspace.get_environment(env_id)
        if kind == "opacity":
            return {"kind": kind, "geometry": _geometry_doc(env.geometry),
                    "cells": env.opacity.cells.tolist(),
                    "unknown": env.opacity.unknown.astype(int).tolist()}
        layer = env.layer(kind)
        if layer is None:
            raise NotFoundError(f"environment {env_id!r} has no {kind!r} layer")
        return {"kind": kind, "geometry": _geometry_doc(env.geometry),
                "cells": layer.cells.tolist()}

    @app.get("/environments/{env_id}/reward")
    def get_reward(env_id: str, model_id: str):
        env = workspace.get_environment(env_id)
        model = workspace.get_model(model_id)
        stack = build_stack(env.layers.values(), model.schema)
        rmap = reward_map(model, stack)
        return {"model_id": model_id, "geometry": _geometry_doc(env.geometry),
                "values": rmap.values.tolist()}

    @app.put("/environments/{env_id}/zods")
    async def put_zods(env_id: str, request: Request):
        body = await request.json()
        zods = tuple(Zod(center_x=float(z["center_x_m"]),
                         center_y=float(z["center_y_m"]),
                         radius=float(z["radius_m"]))
                     for z in body.get("zods", []))
        env = workspace.edit_zods(env_id, zods)
        return {"id": env_id, "version": workspace.environment_version(env_id),
                "zods": [{"center_x_m": z.center_x, "center_y_m": z.center_y,
                          "radius_m": z.radius} for z in env.zods]}

    # -- demonstrations -------------------------------------------------------

    @app.get("/demonstrations")
    def list_demonstrations():
        return {"demonstrations": workspace.list_demonstrations()}

    @app.get("/demonstrations/{demo_id}")
    def get_demonstration(demo_id: str):
        demo = workspace.get_demonstration(demo_id)
        return {"id": demo_id, "source": demo.source,
                "schema": [[k, r] for k, r in demo.schema.descriptors],
                "path": [[x, y] for x, y in demo.path],
                "points": [[float(x), float(y)] for x, y in demo.world_points()]}

    @app.post("/demonstrations", status_code=201)
    async def submit_demonstration(request: Request):
        """World-point polyline in; the server snaps it to cells, validates
        adjacency and passability, and binds the environment's current
        feature stack."""
        body = await request.json()
        env = workspace.get_environment(body["environment_id"])
        points = [(float(x), float(y)) for x, y in body.get("points", [])]
        schema = schema_by_name(body.get("schema", "standard"))
        try:
            cells = snap_polyline_to_cells(env.geometry, points)
        except OutOfBoundsError as e:
            raise ValidationError(f"polyline leaves the environment: {e.message}")
        obstacles = env.obstacle_mask()
        for x, y in cells:
            if obstacles[y, x]:
                raise ValidationError(
                    f"demonstration passes through an obstacle cell ({x}, {y})")
        stack = build_stack(env.layers.values(), schema)
        demo = Demonstration(id="pending", path=tuple(cells), stack=stack,
                             source="human-ui")
        demo_id = workspace.put_demonstration(demo)
        traj = Trajectory(points=np.asarray(points), provenance="demonstration")
        traj_id = workspace.put_trajectory(traj, "demonstration")
        return {"id": demo_id, "trajectory_id": traj_id,
                "cells": [[x, y] for x, y in cells],
                "environment_version": workspace.environment_version(env.id)}

    # -- models and training jobs ---------------------------------------------

    @app.get("/models")
    def list_models():
        return {"models": workspace.list_models()}

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        model = workspace.get_model(model_id)
        return {"id": model_id,
                "schema": [[k, r] for k, r in model.schema.descriptors],
                "theta": [float(v) for v in model.theta],
                "training": {"demo_ids": list(model.meta.demo_ids),
                             "iterations": model.meta.iterations,
                             "final_grad_norm": model.meta.final_grad_norm,
                             "init_mode": model.meta.init_mode,
                             "stop_reason": model.meta.stop_reason}}

    @app.post("/training-jobs", status_code=202)
    async def submit_job(request: Request):
        body = await request.json()
        job = jobs.submit(
            model_id=body["model_id"],
            demo_ids=list(body.get("demo_ids", [])),
            schema_name=body.get("schema", "standard"),
            init=body.get("init", "auto"),
            budget_s=body.get("budget_s", 30.0),
            max_iterations=int(body.get("max_iterations", 500)),
            tolerance=float(body.get("tolerance", 1e-4)),
            seed=int(body.get("seed", 0)))
        return job.snapshot()

    @app.get("/training-jobs")
    def list_jobs():
        return {"jobs": jobs.list_jobs()}

    @app.get("/training-jobs/{job_id}")
    def get_job(job_id: str):
        return jobs.get(job_id).snapshot()

    @app.post("/training-jobs/{job_id}/cancel")
    def cancel_job(job_id: str):
        job = jobs.cancel(job_id)
        deadline = time.time() + 5.0
        while time.time() < deadline:
            if job.snapshot()["status"] in TERMINAL_STATES:
                break
            time.sleep(0.02)
        return job.snapshot()

    @app.get("/training-jobs/{job_id}/events")
    def stream_events(job_id: str):
        job = jobs.get(job_id)

        def generate() -> Iterator[str]:
            index = 0
            while True:
                events, status = job.events_since(index)
                for ev in events:
                    yield json.dumps({"iteration": ev.iteration,
                                      "grad_norm": ev.grad_norm,
                                      "elapsed_s": ev.elapsed_s,
                                      "loglik": ev.loglik}) + "\n"
                index += len(events)
                if status in TERMINAL_STATES:
                    yield json.dumps({"status": status}) + "\n"
                    return
                time.sleep(0.05)

        return StreamingResponse(generate(), media_type="application/x-ndjson")

    # -- planning and metrics ---------------------------------------------------

    @app.post("/plans", status_code=201)
    async def plan(request: Request):
        body = await request.json()
        env = workspace.get_environment(body["environment_id"])
        req = PlanRequest(
            start=env.geometry.cell_of(tuple(body["from"])),
            goal=env.geometry.cell_of(tuple(body["to"])),
            environment_id=body["environment_id"],
            model_id=None if body.get("baseline", False) else body["model_id"],
            baseline=BaselineParams() if body.get("baseline", False) else None)
        req.validate_bounds(env.geometry)
        if req.baseline is not None:
            traj = plan_baseline(env.opacity, req.start, req.goal, req.baseline)
        else:
            model = workspace.get_model(req.model_id)
            stack = build_stack(env.layers.values(), model.schema)
            traj = plan_ioc(reward_map(model, stack), req.start, req.goal,
                            impassable=env.obstacle_mask())
        traj_id = workspace.put_trajectory(traj, traj.provenance)
        return _trajectory_doc(traj_id, traj)

    @app.get("/trajectories")
    def list_trajectories():
        return {"trajectories": workspace.list_trajectories()}

    @app.get("/trajectories/{traj_id}")
    def get_trajectory(traj_id: str):
        return _trajectory_doc(traj_id, workspace.get_trajectory(traj_id))

    @app.get("/mhd")
    def get_mhd(a: str, b: str, symmetric: bool = False):
        """MHD between two stored trajectories, both resampled at the
        standard step first (b is the reference)."""
        ta = densify(workspace.get_trajectory(a), RESAMPLE_STEP_M)
        tb = densify(workspace.get_trajectory(b), RESAMPLE_STEP_M)
        return {"a": a, "b": b, "mhd_m": mhd(ta, tb, symmetric=symmetric),
                "resample_step_m": RESAMPLE_STEP_M}

    return app


def serve(workspace_root, port: int = 8765, host: str = "127.0.0.1") -> None:
    import uvicorn

    app = create_app(Workspace(workspace_root))
    uvicorn.run(app, host=host, port=port, log_level="warning")

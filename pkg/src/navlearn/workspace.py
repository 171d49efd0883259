"""Workspace persistence and the training-job lifecycle.

A workspace is a directory of flat registries (environments, demonstrations,
models, trajectories, reports) keyed by stable ids, plus an append-only
event log of training runs. Demonstration files snapshot the binary layers
they were driven over, so later environment edits or deletions never change
what a model was trained on; blurred planes are always recomputed on load.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envfile import (Environment, Zod, load_environment, rle_decode, rle_encode,
                      save_environment)
from .errors import BusyError, NotFoundError, ValidationError
from .grids import (BinaryLayer, FeatureSchema, GridGeometry, build_stack,
                    schema_by_name)
from .learning import (BehaviorModel, Demonstration, TrainBudget, load_model,
                       model_to_json, save_model, train)
from .planning import Trajectory, densify, load_trajectory, save_trajectory

DEMO_FORMAT = "navlearn-demonstration/1"


def demonstration_to_json(demo: Demonstration) -> str:
    geo = demo.stack.geometry
    raw_kinds = sorted({k for k, _ in demo.schema.descriptors[:-1]})
    layers = {}
    for kind in raw_kinds:
        try:
            idx = demo.schema.index_of(kind, 0)
        except ValueError:
            continue
        layers[kind] = rle_encode(demo.stack.planes[idx].astype(np.uint8))
    doc = {
        "format": DEMO_FORMAT,
        "id": demo.id,
        "source": demo.source,
        "schema": [[k, r] for k, r in demo.schema.descriptors],
        "path": [[x, y] for x, y in demo.path],
        "geometry": {"width": geo.width, "height": geo.height,
                     "resolution_m": geo.resolution,
                     "origin_x_m": geo.origin_x, "origin_y_m": geo.origin_y},
        "layers": layers,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def demonstration_from_json(text: str) -> Demonstration:
    doc = json.loads(text)
    if doc.get("format") != DEMO_FORMAT:
        raise ValidationError(f"not a demonstration file (format={doc.get('format')!r})")
    g = doc["geometry"]
    geometry = GridGeometry(width=int(g["width"]), height=int(g["height"]),
                            resolution=float(g["resolution_m"]),
                            origin_x=float(g["origin_x_m"]),
                            origin_y=float(g["origin_y_m"]))
    schema = FeatureSchema(tuple((k, int(r)) for k, r in doc["schema"]))
    layers = [BinaryLayer(kind=kind,
                          cells=rle_decode(rle, geometry.n_cells).reshape(geometry.shape),
                          geometry=geometry)
              for kind, rle in doc["layers"].items()]
    stack = build_stack(layers, schema)
    return Demonstration(id=doc["id"], path=tuple((int(x), int(y)) for x, y in doc["path"]),
                         stack=stack, source=doc["source"])


@dataclass
class JobProgress:
    iteration: int
    grad_norm: float
    elapsed_s: float
    loglik: float


TERMINAL_STATES = ("done", "cancelled", "failed")


@dataclass
class TrainingJob:
    """One training run against a model id; terminal states are immutable."""

    id: str
    model_id: str
    init_mode: str
    demo_ids: tuple[str, ...]
    budget: TrainBudget
    status: str = "queued"
    error: str | None = None
    progress: list[JobProgress] = field(default_factory=list)
    cancel_event: threading.Event = field(default_factory=threading.Event)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def snapshot(self) -> dict:
        with self._lock:
            latest = self.progress[-1] if self.progress else None
            return {
                "id": self.id,
                "model_id": self.model_id,
                "status": self.status,
                "init_mode": self.init_mode,
                "demo_ids": list(self.demo_ids),
                "error": self.error,
                "iterations": latest.iteration if latest else 0,
                "grad_norm": latest.grad_norm if latest else None,
                "elapsed_s": latest.elapsed_s if latest else 0.0,
            }

    def events_since(self, index: int) -> tuple[list[JobProgress], str]:
        with self._lock:
            return list(self.progress[index:]), self.status


class Workspace:
    """Directory-backed registries with in-memory caches.

    Reads are cheap (cached); writes go to disk first, then swap the cache
    entry, so concurrent readers always observe a complete object.
    """

    def __init__(self, root):
        self.root = Path(root)
        for sub in ("environments", "demonstrations", "models", "trajectories",
                    "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._environments: dict[str, Environment] = {}
        self._env_versions: dict[str, int] = {}
        self._demos: dict[str, Demonstration] = {}
        self._models: dict[str, BehaviorModel] = {}
        self._trajectories: dict[str, Trajectory] = {}
        self._load_all()

    # -- loading ------------------------------------------------------------

    def _load_all(self):
        for f in sorted((self.root / "environments").glob("*.json")):
            self._environments[f.stem] = load_environment(f, env_id=f.stem)
            self._env_versions[f.stem] = 0
        for f in sorted((self.root / "demonstrations").glob("*.json")):
            self._demos[f.stem] = demonstration_from_json(f.read_text())
        for f in sorted((self.root / "models").glob("*.json")):
            self._models[f.stem] = load_model(f)
        for f in sorted((self.root / "trajectories").glob("*.csv")):
            # ids look like traj-<kind>-0001, with <kind> possibly hyphenated
            head, _, _ = f.stem.rpartition("-")
            provenance = head.removeprefix("traj-") or "oracle"
            self._trajectories[f.stem] = load_trajectory(f, provenance)

    def _next_id(self, prefix: str, existing) -> str:
        numbers = [0]
        for key in existing:
            head, _, tail = key.rpartition("-")
            if head == prefix and tail.isdigit():
                numbers.append(int(tail))
        return f"{prefix}-{max(numbers) + 1:04d}"

    # -- environments ---------------------------------------------------------

    def list_environments(self) -> list[str]:
        with self._lock:
            return sorted(self._environments)

    def get_environment(self, env_id: str) -> Environment:
        with self._lock:
            env = self._environments.get(env_id)
        if env is None:
            raise NotFoundError(f"environment {env_id!r} not found")
        return env

    def environment_version(self, env_id: str) -> int:
        with self._lock:
            return self._env_versions.get(env_id, 0)

    def put_environment(self, env: Environment) -> str:
        path = self.root / "environments" / f"{env.id}.json"
        save_environment(env, path)
        with self._lock:
            self._environments[env.id] = env
            self._env_versions[env.id] = self._env_versions.get(env.id, -1) + 1
        return env.id

    def edit_zods(self, env_id: str, zods: tuple[Zod, ...]) -> Environment:
        """Copy-on-write: a new environment snapshot with a re-rasterized
        avoidance layer; in-flight readers keep the previous snapshot."""
        env = self.get_environment(env_id)
        geo = env.geometry
        cx, cy = geo.cell_centers()
        avoidance = np.zeros(geo.shape, dtype=bool)
        for z in zods:
            avoidance |= np.hypot(cx - z.center_x, cy - z.center_y) <= z.radius
        layers = dict(env.layers)
        layers["avoidance"] = BinaryLayer(kind="avoidance",
                                          cells=avoidance.astype(np.uint8), geometry=geo)
        updated = Environment(id=env.id, geometry=geo, layers=layers,
                              opacity=env.opacity, zods=tuple(zods), seed=env.seed)
        self.put_environment(updated)
        return updated

    # -- demonstrations -------------------------------------------------------

    def list_demonstrations(self) -> list[str]:
        with self._lock:
            return sorted(self._demos)

    def get_demonstration(self, demo_id: str) -> Demonstration:
        with self._lock:
            demo = self._demos.get(demo_id)
        if demo is None:
            raise NotFoundError(f"demonstration {demo_id!r} not found")
        return demo

    def put_demonstration(self, demo: Demonstration, demo_id: str | None = None) -> str:
        # id allocation and registration stay under one lock so concurrent
        # submissions cannot claim the same id
        with self._lock:
            demo_id = demo_id or self._next_id("demo", self._demos)
            if demo.id != demo_id:
                demo = Demonstration(id=demo_id, path=demo.path, stack=demo.stack,
                                     source=demo.source)
            path = self.root / "demonstrations" / f"{demo_id}.json"
            path.write_text(demonstration_to_json(demo))
            self._demos[demo_id] = demo
        return demo_id

    def delete_demonstration(self, demo_id: str) -> None:
        self.get_demonstration(demo_id)
        (self.root / "demonstrations" / f"{demo_id}.json").unlink(missing_ok=True)
        with self._lock:
            self._demos.pop(demo_id, None)

    # -- models ---------------------------------------------------------------

    def list_models(self) -> list[str]:
        with self._lock:
            return sorted(self._models)

    def get_model(self, model_id: str) -> BehaviorModel:
        with self._lock:
            model = self._models.get(model_id)
        if model is None:
            raise NotFoundError(f"model {model_id!r} not found")
        return model

    def put_model(self, model_id: str, model: BehaviorModel) -> str:
        path = self.root / "models" / f"{model_id}.json"
        save_model(model, path)
        with self._lock:
            self._models[model_id] = model
        return model_id

    # -- trajectories -----------------------------------------------------------

    def list_trajectories(self) -> list[str]:
        with self._lock:
            return sorted(self._trajectories)

    def get_trajectory(self, traj_id: str) -> Trajectory:
        with self._lock:
            traj = self._trajectories.get(traj_id)
        if traj is None:
            raise NotFoundError(f"trajectory {traj_id!r} not found")
        return traj

    def put_trajectory(self, traj: Trajectory, kind: str) -> str:
        if kind not in ("ground-truth", "ioc", "baseline", "oracle", "demonstration"):
            raise ValidationError(f"unknown trajectory kind {kind!r}")
        with self._lock:
            traj_id = self._next_id(f"traj-{kind}", self._trajectories)
            save_trajectory(traj, self.root / "trajectories" / f"{traj_id}.csv")
            self._trajectories[traj_id] = traj
        return traj_id

    # -- event log --------------------------------------------------------------

    def log_event(self, event: dict) -> None:
        line = json.dumps({**event, "ts": time.time()}, sort_keys=True)
        with self._lock:
            with open(self.root / "events.log", "a") as fh:
                fh.write(line + "\n")


class JobManager:
    """Runs training off the request path with one writer per model id."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace
        self._lock = threading.Lock()
        self._jobs: dict[str, TrainingJob] = {}
        self._running_models: dict[str, str] = {}
        self._counter = 0

    def get(self, job_id: str) -> TrainingJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"training job {job_id!r} not found")
        return job

    def list_jobs(self) -> list[dict]:
        with self._lock:
            jobs = list(self._jobs.values())
        return [j.snapshot() for j in jobs]

    def cancel(self, job_id: str) -> TrainingJob:
        job = self.get(job_id)
        job.cancel_event.set()
        return job

    def submit(self, model_id: str, demo_ids: list[str], schema_name: str = "standard",
               init: str = "auto", budget_s: float | None = 30.0,
               max_iterations: int = 500, tolerance: float = 1e-4,
               seed: int = 0) -> TrainingJob:
        """Queue a training run for a model.

        init "auto" warm-starts from the model's current weights when the
        model exists, otherwise falls back to seeded random. An existing
        model also contributes its full previous demo set: on-line
        retraining always uses all prior training examples plus the new
        ones.
        """
        ws = self.workspace
        demos = [ws.get_demonstration(d) for d in demo_ids]

        existing = None
        try:
            existing = ws.get_model(model_id)
        except NotFoundError:
            pass

        if existing is not None:
            schema = existing.schema
            full_ids = list(dict.fromkeys([*existing.meta.demo_ids, *demo_ids]))
            demos = [ws.get_demonstration(d) for d in full_ids]
        else:
            schema = schema_by_name(schema_name)
            full_ids = list(dict.fromkeys(demo_ids))
            demos = [ws.get_demonstration(d) for d in full_ids]
        if not demos:
            raise ValidationError("a training job needs at least one demonstration")
        for d in demos:
            if d.schema != schema:
                raise ValidationError(
                    f"demonstration {d.id!r} was captured with a different schema")

        if init == "auto":
            init_mode = "warm" if existing is not None else "random"
        elif init in ("warm", "random"):
            init_mode = init
            if init == "warm" and existing is None:
                raise ValidationError(f"cannot warm-start: model {model_id!r} not found")
        else:
            raise ValidationError(f"unknown init mode {init!r}")

        budget = TrainBudget(max_iterations=max_iterations, wall_clock_s=budget_s,
                             tolerance=tolerance)
        with self._lock:
            if model_id in self._running_models:
                raise BusyError(f"model {model_id!r} already has a running job")
            self._counter += 1
            job = TrainingJob(id=f"job-{self._counter:04d}", model_id=model_id,
                              init_mode=init_mode, demo_ids=tuple(full_ids),
                              budget=budget)
            self._jobs[job.id] = job
            self._running_models[model_id] = job.id

        init_arg = existing.theta if init_mode == "warm" else "random"
        thread = threading.Thread(
            target=self._run, args=(job, demos, schema, init_arg, seed), daemon=True)
        with job._lock:
            job.status = "running"
        self.workspace.log_event({"event": "training-started", "job": job.id,
                                  "model": model_id, "demos": list(full_ids),
                                  "init": init_mode})
        thread.start()
        return job

    def _run(self, job: TrainingJob, demos, schema, init_arg, seed):
        def progress(iteration, grad_norm, elapsed, loglik):
            with job._lock:
                job.progress.append(JobProgress(iteration, grad_norm, elapsed, loglik))

        try:
            model = train(demos, schema, init=init_arg, budget=job.budget,
                          seed=seed, progress=progress, cancel=job.cancel_event)
            cancelled = model.meta.stop_reason == "cancelled"
            if not cancelled:
                # atomic publication: file write then cache swap; the prior
                # model stays visible until the swap
                self.workspace.put_model(job.model_id, model)
            with job._lock:
                job.status = "cancelled" if cancelled else "done"
            self.workspace.log_event({
                "event": "training-finished", "job": job.id, "model": job.model_id,
                "status": job.status, "iterations": model.meta.iterations,
                "stop_reason": model.meta.stop_reason,
                "wall_clock_s": model.meta.wall_clock_s})
        except Exception as e:  # surfaced through job status
            with job._lock:
                job.status = "failed"
                job.error = str(e)
            self.workspace.log_event({"event": "training-failed", "job": job.id,
                                      "model": job.model_id, "error": str(e)})
        finally:
            with self._lock:
                self._running_models.pop(job.model_id, None)


def snap_polyline_to_cells(geometry: GridGeometry,
                           points: list[tuple[float, float]]) -> list[tuple[int, int]]:
    """Rasterize a world polyline into an 8-connected cell path.

    The polyline is densified well below the cell size first, so consecutive
    rasterized cells are always 8-adjacent; consecutive duplicates collapse.
    """
    if len(points) < 2:
        raise ValidationError("a demonstration polyline needs at least 2 points")
    traj = Trajectory(points=np.asarray(points, dtype=np.float64),
                      provenance="demonstration")
    dense = densify(traj, geometry.resolution / 3.0)
    cells: list[tuple[int, int]] = []
    for p in dense.points:
        cell = geometry.cell_of(tuple(p))
        if not cells or cell != cells[-1]:
            cells.append(cell)
    if len(cells) < 2:
        raise ValidationError("polyline collapses to a single cell")
    return cells

"""Radar point-cloud enhancement with visual-inertial supervision.

Geometry, reconstruction, filtering, CFAR and metric primitives live in the
compiled ``_core`` module; this package re-exports them and wraps the
end-to-end commands so they return parsed JSON.
"""

from __future__ import annotations

import json as _json
from pathlib import Path as _Path
from typing import Any as _Any

from ._core import (  # noqa: F401
    CameraIntrinsics,
    RadarviError,
    ReconstructionSolution,
    RigidTransform,
    SolverOptions,
    ca_cfar,
    ca_cfar_alpha,
    chamfer,
    evaluate_cloud,
    kabsch,
    mark_spurious,
    modified_hausdorff,
    os_cfar,
    os_cfar_alpha,
    project,
    rpcdl,
    solve_reconstruction,
    transform_consistency_loss,
    triangulate_midpoint,
)
from . import _core

__version__ = "0.1.0"


def simulate(config: str | _Path, out: str | _Path) -> dict[str, _Any]:
    """Generate the scene described by the JSON config file into ``out``."""
    return _json.loads(_core.simulate(str(config), str(out)))


def run(config: dict[str, _Any], out: str | _Path, *, base_dir: str | _Path = ".",
        threads: int = 0) -> dict[str, _Any]:
    """Run the enhancement pipeline; returns the aggregate metrics."""
    return _json.loads(_core.run(_json.dumps(config), str(base_dir), str(out), threads))


def cfar(config: dict[str, _Any], out: str | _Path, *, base_dir: str | _Path = ".",
         threads: int = 0) -> dict[str, _Any]:
    """Run a CFAR baseline over a scene's range-Doppler frames."""
    return _json.loads(_core.cfar(_json.dumps(config), str(base_dir), str(out), threads))


def report(runs: list[str | _Path], out: str | _Path) -> dict[str, _Any]:
    """Compare finished runs; returns the comparison table."""
    return _json.loads(_core.report([str(r) for r in runs], str(out)))


__all__ = [
    "CameraIntrinsics",
    "RadarviError",
    "ReconstructionSolution",
    "RigidTransform",
    "SolverOptions",
    "ca_cfar",
    "ca_cfar_alpha",
    "cfar",
    "chamfer",
    "evaluate_cloud",
    "kabsch",
    "mark_spurious",
    "modified_hausdorff",
    "os_cfar",
    "os_cfar_alpha",
    "project",
    "report",
    "rpcdl",
    "run",
    "simulate",
    "solve_reconstruction",
    "transform_consistency_loss",
    "triangulate_midpoint",
]

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class RunConfig:
    """Tolerances and sizes shared by the whole pipeline.

    Every routine that takes ``cfg`` accepts ``None`` and falls back to the
    defaults below.
    """

    n_theta: int = 720
    grid_n: int = 400
    rank_tol: float = 1e-9
    ric_tol: float = 1e-10
    eps_circle: float = 1e-9
    stab_margin: float = 1e-9
    cluster_tol: float = 1e-7
    jordan_tol: float = 1e-7
    max_iter: int = 500
    n_restarts: int = 8
    dilate: int = 1
    view_radius: float | None = None
    seed: int = 0
    out_dir: str = "."

    def __post_init__(self):
        for name in ("rank_tol", "ric_tol", "eps_circle", "stab_margin",
                     "cluster_tol", "jordan_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_theta < 8:
            raise ValueError("n_theta must be at least 8")
        if self.grid_n < 8:
            raise ValueError("grid_n must be at least 8")
        if self.dilate < 0:
            raise ValueError("dilate must be nonnegative")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


DEFAULT = RunConfig()


def resolve(cfg: RunConfig | None) -> RunConfig:
    return DEFAULT if cfg is None else cfg

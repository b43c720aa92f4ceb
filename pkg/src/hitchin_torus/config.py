"""Experiment configuration: TOML files with nested tables, validated into
module-level inputs.  Every output carries the fully materialized echo of
its config so any run can be reproduced exactly."""

from __future__ import annotations

from dataclasses import dataclass, field

import tomli

from .degeneration import DEFAULT_T_VALUES
from .fields import BandLimitError, GridSpec, sample_fourier
from .geodesics import DEFAULT_CLASSES, GeodesicOptions, HomotopyClass
from .higgs import HiggsData
from .solver import SolverOptions


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


_KNOWN = {
    "grid": {"n", "laplacian"},
    "data": {"mu", "nu"},
    "solver": {"tolerance", "max_newton_steps", "max_cg_iter"},
    "ray": {"t_values", "scale_factor", "wiggle", "final_ratio_tol",
            "exclusion_radius_factor"},
    "classes": {"list"},
    "geodesic": {"points", "rel_tol", "margin_periods"},
    "output": {"dir", "heatmaps"},
}


@dataclass
class RayConfig:
    t_values: tuple[float, ...] = DEFAULT_T_VALUES
    scale_factor: str = "nu"
    wiggle: float = 0.01
    final_ratio_tol: float = 0.05
    exclusion_radius_factor: float = 3.0


@dataclass
class ExperimentConfig:
    grid: GridSpec
    data: HiggsData
    solver: SolverOptions
    ray: RayConfig
    classes: list[HomotopyClass]
    geodesic: GeodesicOptions
    output_dir: str = "out"
    heatmaps: bool = False
    mu_coeffs: list = field(default_factory=list)
    nu_coeffs: list = field(default_factory=list)

    def echo(self) -> dict:
        """Fully materialized config, sufficient to re-run identically."""
        return {
            "grid": {"n": self.grid.n, "laplacian": self.solver.laplacian_method},
            "data": {"mu": self.mu_coeffs, "nu": self.nu_coeffs},
            "solver": {
                "tolerance": self.solver.tolerance,
                "max_newton_steps": self.solver.max_newton_steps,
                "max_cg_iter": self.solver.max_cg_iter,
            },
            "ray": {
                "t_values": list(self.ray.t_values),
                "scale_factor": self.ray.scale_factor,
                "wiggle": self.ray.wiggle,
                "final_ratio_tol": self.ray.final_ratio_tol,
                "exclusion_radius_factor": self.ray.exclusion_radius_factor,
            },
            "classes": {"list": [[c.p, c.q_w] for c in self.classes]},
            "geodesic": {
                "points": self.geodesic.points,
                "rel_tol": self.geodesic.rel_tol,
                "margin_periods": self.geodesic.margin_periods,
            },
            "output": {"dir": self.output_dir, "heatmaps": self.heatmaps},
        }


def _coeff_list(raw, path):
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a list of [k1, k2, re, im] rows")
    out = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) not in (3, 4):
            raise ConfigError(f"{path}[{i}]: expected [k1, k2, re] or [k1, k2, re, im]")
        k1, k2 = row[0], row[1]
        if not isinstance(k1, int) or not isinstance(k2, int):
            raise ConfigError(f"{path}[{i}]: modes k1, k2 must be integers")
        re = float(row[2])
        im = float(row[3]) if len(row) == 4 else 0.0
        out.append(((k1, k2), complex(re, im)))
    return out


def parse_config(raw: dict, source: str = "<config>") -> ExperimentConfig:
    for section, keys in raw.items():
        if section not in _KNOWN:
            raise ConfigError(f"{source}: unknown section [{section}]")
        if not isinstance(keys, dict):
            raise ConfigError(f"{source}: [{section}] must be a table")
        for key in keys:
            if key not in _KNOWN[section]:
                raise ConfigError(f"{source}: unknown key {section}.{key}")

    grid_tab = raw.get("grid", {})
    try:
        grid = GridSpec(int(grid_tab.get("n", 128)))
    except ValueError as err:
        raise ConfigError(f"grid.n: {err}") from err
    method = grid_tab.get("laplacian", "spectral")
    if method not in ("spectral", "fd5"):
        raise ConfigError(f"grid.laplacian: unknown method {method!r}")

    data_tab = raw.get("data")
    if not data_tab or "mu" not in data_tab or "nu" not in data_tab:
        raise ConfigError("data: both data.mu and data.nu are required")
    mu_coeffs = _coeff_list(data_tab["mu"], "data.mu")
    nu_coeffs = _coeff_list(data_tab["nu"], "data.nu")
    try:
        mu = sample_fourier(mu_coeffs, grid)
    except BandLimitError as err:
        raise ConfigError(f"data.mu: {err}") from err
    try:
        nu = sample_fourier(nu_coeffs, grid)
    except BandLimitError as err:
        raise ConfigError(f"data.nu: {err}") from err
    if mu.max_abs() <= 1e-12:
        raise ConfigError("data.mu: mu == 0 unsolvable on periodic domain")
    if nu.max_abs() <= 1e-12:
        raise ConfigError("data.nu: nu == 0 unsolvable on periodic domain")
    data = HiggsData(mu, nu, grid)

    sol_tab = raw.get("solver", {})
    try:
        solver = SolverOptions(
            tolerance=float(sol_tab.get("tolerance", 1e-9)),
            max_newton_steps=int(sol_tab.get("max_newton_steps", 50)),
            laplacian_method=method,
            max_cg_iter=int(sol_tab.get("max_cg_iter", 2000)),
        )
    except ValueError as err:
        raise ConfigError(f"solver: {err}") from err

    ray_tab = raw.get("ray", {})
    ray = RayConfig(
        t_values=tuple(float(t) for t in ray_tab.get("t_values", DEFAULT_T_VALUES)),
        scale_factor=ray_tab.get("scale_factor", "nu"),
        wiggle=float(ray_tab.get("wiggle", 0.01)),
        final_ratio_tol=float(ray_tab.get("final_ratio_tol", 0.05)),
        exclusion_radius_factor=float(ray_tab.get("exclusion_radius_factor", 3.0)),
    )
    if ray.scale_factor not in ("nu", "mu", "both"):
        raise ConfigError(f"ray.scale_factor: unknown value {ray.scale_factor!r}")
    ts = ray.t_values
    if any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ConfigError("ray.t_values: must be strictly increasing and positive")

    cls_tab = raw.get("classes", {})
    cls_raw = cls_tab.get("list")
    if cls_raw is None:
        classes = list(DEFAULT_CLASSES)
    else:
        classes = []
        for i, pair in enumerate(cls_raw):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(f"classes.list[{i}]: expected [p, q_w]")
            try:
                classes.append(HomotopyClass(int(pair[0]), int(pair[1])))
            except ValueError as err:
                raise ConfigError(f"classes.list[{i}]: {err}") from err

    geo_tab = raw.get("geodesic", {})
    geodesic = GeodesicOptions(
        points=int(geo_tab.get("points", 512)),
        rel_tol=float(geo_tab.get("rel_tol", 1e-12)),
        margin_periods=float(geo_tab.get("margin_periods", 1.0)),
    )

    out_tab = raw.get("output", {})
    return ExperimentConfig(
        grid=grid,
        data=data,
        solver=solver,
        ray=ray,
        classes=classes,
        geodesic=geodesic,
        output_dir=str(out_tab.get("dir", "out")),
        heatmaps=bool(out_tab.get("heatmaps", False)),
        mu_coeffs=[[k1, k2, c.real, c.imag] for (k1, k2), c in mu_coeffs],
        nu_coeffs=[[k1, k2, c.real, c.imag] for (k1, k2), c in nu_coeffs],
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"{path}: TOML parse error: {err}") from err
    return parse_config(raw, source=str(path))

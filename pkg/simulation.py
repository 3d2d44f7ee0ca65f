"""
Contains the experiment running logic: configuration and run orchestration.
"""
import os
from dataclasses import asdict, dataclass, field, fields

import config
import sweeps
from errors import ConfigError, DomainError, PolymartError
from polyeval import WeightSpec
from reports import emit_plot_data, reports, write_csv, write_json

MODES = ("constants", "bound", "verify", "tail", "decompose", "poisson-demo")
MC_MODES = ("verify", "decompose", "tail")

EXIT_OK, EXIT_ASSERTION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

# grids each mode starts from when the config leaves them out
MODE_DEFAULTS = {
    "verify": {"families": config.SUITE_FAMILIES, "d_grid": config.SUITE_D,
               "n_grid": config.SUITE_N, "p_grid": config.SUITE_P},
    "decompose": {"families": config.DECOMPOSE_FAMILIES, "d_grid": [1],
                  "n_grid": config.DECOMPOSE_N, "p_grid": config.DECOMPOSE_P},
    "bound": {"families": ["rademacher"], "d_grid": [1], "n_grid": [10], "p_grid": config.SUITE_P},
    "poisson-demo": {"p_grid": config.POISSON_DEMO_P},
}


@dataclass
class ExperimentConfig:
    mode: str = "verify"
    families: list = None
    d_grid: list = None
    n_grid: list = None
    p_grid: list = None
    weights: list = field(default_factory=list)
    paths: int = config.QUICK_PATHS
    seed: int = config.RANDOM_SEED
    directions: int = config.NUM_DIRECTIONS
    normed: bool = False
    tail_cases: list = None
    x_grid: object = None
    domination_d: list = None
    domination_n: int = config.TAIL_DOMINATION_N
    max_d: int = config.CONSTANTS_MAX_D
    out: str = None
    timestamp: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        for key, value in MODE_DEFAULTS.get(self.mode, {}).items():
            if getattr(self, key) is None:
                setattr(self, key, list(value))
        if self.tail_cases is None:
            self.tail_cases = list(config.TAIL_CASES)
        self.tail_cases = [tuple(case) for case in self.tail_cases]
        if self.domination_d is None:
            self.domination_d = list(config.TAIL_DOMINATION_D)
        if isinstance(self.x_grid, dict):
            try:
                self.x_grid = (float(self.x_grid["min"]), float(self.x_grid["max"]),
                               int(self.x_grid["points"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"x_grid needs min, max and points: {exc}") from exc
        self.validate()

    # --- validation ---
    def _nonempty(self, name, minimum, integer):
        values = getattr(self, name)
        if not values:
            raise ConfigError(f"{name} must be a nonempty list")
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{name} entries must be numbers, got {v!r}")
            if integer and int(v) != v:
                raise ConfigError(f"{name} entries must be integers, got {v!r}")
            if v < minimum:
                raise ConfigError(f"{name} entries must be >= {minimum}, got {v!r}")

    def validate(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.mode in MC_MODES and (not isinstance(self.paths, int) or self.paths < 1000):
            raise ConfigError(f"paths must be an integer >= 1000, got {self.paths!r}")
        if self.directions < 1:
            raise ConfigError("directions must be >= 1")
        if self.families is not None and not self.families:
            raise ConfigError("families must be a nonempty list")
        if self.d_grid is not None:
            self._nonempty("d_grid", 1, True)
        if self.n_grid is not None:
            self._nonempty("n_grid", 1, True)
        if self.p_grid is not None:
            self._nonempty("p_grid", 8.0 if self.mode == "poisson-demo" else config.P_FLOOR, False)
            if self.mode in MC_MODES and max(self.p_grid) > config.MC_P_CAP:
                raise ConfigError(f"Monte Carlo modes cap p at {config.MC_P_CAP:g}")
        if self.mode == "decompose" and self.d_grid != [1]:
            raise ConfigError("decompose runs on d = 1 families only")
        if self.families:
            for entry in self.families:
                try:
                    sweeps.build_family(entry, self.n_grid[0], self.d_grid[0])
                except DomainError as exc:
                    raise ConfigError(f"invalid family {entry!r}: {exc}") from exc
        for raw in self.weights:
            for n in self.n_grid or []:
                for d in self.d_grid or []:
                    w = self.weight_spec(raw, n, d)
                    if (w.n, w.d) != (n, d):
                        raise ConfigError(f"weight spec {raw} has shape (n={w.n}, d={w.d}), "
                                          f"the grid needs (n={n}, d={d})")
        if self.mode == "tail":
            if not self.tail_cases or any(len(c) != 3 for c in self.tail_cases):
                raise ConfigError("tail_cases must be a nonempty list of (d, q, r)")
        if self.out is not None:
            folder = os.path.dirname(os.path.abspath(self.out))
            if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
                raise ConfigError(f"output directory {folder} is not writable")
        return self

    def weight_spec(self, raw, n, d):
        return WeightSpec.from_dict(raw, n, d)

    # --- JSON ---
    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("the experiment config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return asdict(self)


# --------------------------------------------------------------------
# Orchestration
# --------------------------------------------------------------------
def _artifact(cfg, suffix):
    stem, ext = os.path.splitext(cfg.out)
    return f"{stem}{suffix}{ext or '.csv'}"


def _run_mode(cfg):
    """(rows, columns, passed, total, plot args or None) for the configured mode."""
    mode = cfg.mode
    if mode == "constants":
        rows, held = sweeps.constants_sweep(cfg.max_d)
        return rows, sweeps.CONSTANT_COLUMNS, held, len(rows), None
    if mode == "bound":
        rows, _ = sweeps.bound_sweep(cfg.families, cfg.d_grid, cfg.n_grid, cfg.p_grid)
        return rows, sweeps.BOUND_COLUMNS, None, None, None
    if mode == "verify":
        rows, held = sweeps.verify_sweep(cfg)
        plot = ("p", ["empirical", "bound_thm21", "bound_thm31", "ratio"],
                ["family", "d", "n", "direction_id"])
        return rows, sweeps.VERIFY_COLUMNS, held, len(rows), plot
    if mode == "decompose":
        rows, held = sweeps.decompose_sweep(cfg)
        plot = ("p", ["lhs", "rhs", "sum_bound"], ["family", "n"])
        return rows, sweeps.DECOMPOSE_COLUMNS, held, len(rows), plot
    if mode == "tail":
        rows, held, runs = sweeps.tail_sweep(cfg)
        dom_rows, dom_held, dom_runs = sweeps.domination_sweep(cfg)
        if cfg.out is not None and dom_rows:
            write_csv(dom_rows, sweeps.DOMINATION_COLUMNS, _artifact(cfg, "_domination"), cfg.timestamp)
        plot = ("x", ["log_bound"], ["d", "q", "r"])
        return rows, sweeps.TAIL_COLUMNS, held + dom_held, runs + dom_runs, plot
    rows, ok = sweeps.poisson_sweep(cfg.p_grid)
    plot = ("p", ["exact_norm", "reference", "ratio"], [])
    return rows, sweeps.POISSON_COLUMNS, None if ok is None else int(ok), 1, plot


def run(cfg):
    """Run one configured mode, write its artifacts, and return the exit code."""
    reports.reset()
    reports.banner(f"RUNNING: {cfg.mode.upper()} (seed={cfg.seed}, paths={cfg.paths:,}, "
                   f"threads={config.worker_count()})")

    rows, columns, passed, total, plot = _run_mode(cfg)
    if rows:
        write_csv(rows, columns, cfg.out, cfg.timestamp)
        if cfg.out is not None and plot is not None:
            x_key, curves, keys = plot
            emit_plot_data(rows, x_key, curves, _artifact(cfg, "_plot"), cfg.timestamp, keys)

    summary = reports.report(cfg.mode, passed, total)
    if cfg.out is not None:
        stem, _ = os.path.splitext(cfg.out)
        write_json({"config": cfg.to_dict(), "summary": summary}, stem + ".json")

    if reports.failures.get(cfg.mode):
        return EXIT_NUMERICAL
    return EXIT_OK if summary["ok"] else EXIT_ASSERTION


def run_safely(cfg):
    """run() with library errors mapped to exit codes."""
    try:
        return run(cfg)
    except ConfigError as exc:
        reports.log("error", f"config: {exc}")
        return EXIT_CONFIG
    except PolymartError as exc:
        reports.log("error", str(exc))
        return EXIT_NUMERICAL

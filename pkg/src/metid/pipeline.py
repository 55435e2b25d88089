"""Configuration, file formats and end-to-end orchestration.

Configuration files are flat ``key = value`` lines with dotted section keys;
``#`` starts a comment.  Recognised keys (defaults in brackets)::

    domain.a, domain.b            escape interval                [-1, 1]
    grid.J                        half node count                [120]
    met.K, met.lambda             exit time dictionary, threshold [16, 0.01]
    noise.epsilon                 jump coefficient               [0]
    true.sigma, true.alpha        synthetic model noise
    true.drift.poly               drift coefficients r_0, r_1, ...
    true.drift.hill               kf, Kd, kd, Rbas of kf x^2/(x^2+Kd) - kd x + Rbas
    search.sigma                  low, high, step                [0.01, 2, 0.01]
    search.alpha                  low, high, step                [0.05, 1.95, 0.05]
    search.drift_order            highest drift power            [6]
    search.drift_lambda           drift threshold                [0.01]
    search.theta                  L'Hopital switch               [1e-4]
    search.trim                   boundary fraction dropped      [auto]
    search.workers                candidate threads              [1]
    observations                  observation CSV path           [<output>/observations.csv]
    output.dir                    output directory               [.]
    mc.x0, mc.dt, mc.n_paths, mc.t_max   Monte Carlo settings    [0, 1e-4, 10000, auto]
    seed                          random seed                    [0]

CSV files start with ``#`` comment lines echoing the configuration, followed
by a header row, LF line endings and shortest round-trip float formatting.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, MetidError, ParseError
from .forward import Domain, NoiseParams, build_grid, solve_met
from .identify import SearchConfig, grid_search
from .inverse import drift_field
from .montecarlo import SimConfig, estimate_met
from .sparse import Observations, PolyExpansion, fit_met

__all__ = [
    "PipelineConfig",
    "PipelineError",
    "parse_config",
    "load_config",
    "load_observations",
    "write_observations",
    "simulate_observations",
    "fit_met_stage",
    "run_identify",
    "run_error_surface",
    "run_mc_met",
]

DEFAULTS = {
    "domain.a": "-1",
    "domain.b": "1",
    "grid.J": "120",
    "met.K": "16",
    "met.lambda": "0.01",
    "noise.epsilon": "0",
    "search.sigma": "0.01, 2, 0.01",
    "search.alpha": "0.05, 1.95, 0.05",
    "search.drift_order": "6",
    "search.drift_lambda": "0.01",
    "search.theta": "1e-4",
    "search.workers": "1",
    "output.dir": ".",
    "mc.x0": "0",
    "mc.dt": "1e-4",
    "mc.n_paths": "10000",
    "seed": "0",
}

KNOWN_KEYS = set(DEFAULTS) | {
    "true.sigma",
    "true.alpha",
    "true.drift.poly",
    "true.drift.hill",
    "search.trim",
    "observations",
    "mc.t_max",
}


class PipelineError(MetidError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.error = exc


# -- formatting ---------------------------------------------------------------


def fmt(v):
    """Shortest round-trip text for a float (``repr``), integers verbatim."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _comment_lines(comments):
    return "".join(f"# {c}\n" for c in comments)


def write_rows_csv(path, header, rows, comments=()):
    buf = io.StringIO()
    buf.write(_comment_lines(comments))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_xy_csv(path, header, columns, comments=()):
    write_rows_csv(path, header, zip(*(np.asarray(c).tolist() for c in columns)), comments)


def write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True)
        fh.write("\n")


# -- configuration ------------------------------------------------------------


def parse_config(text, source="<config>"):
    """Parse ``key = value`` lines into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}: expected 'key = value', got {raw!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ParseError(f"{source}: unknown key {key!r}", line=lineno)
        out[key] = value
    return out


def _floats(text, n=None, key=""):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigurationError(f"{key}: expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigurationError(f"{key}: expected {n} numbers, got {len(vals)}")
    return vals


def hill_drift(kf, Kd, kd, Rbas):
    """``kf x^2 / (x^2 + Kd) - kd x + Rbas``."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return kf * x**2 / (x**2 + Kd) - kd * x + Rbas

    return f


@dataclass
class PipelineConfig:
    """Every setting of a pipeline run, plus the raw key/value echo."""

    domain: Domain
    J: int
    met_K: int
    met_lambda: float
    epsilon: float
    search: SearchConfig
    output_dir: Path
    seed: int
    true_sigma: Optional[float] = None
    true_alpha: Optional[float] = None
    true_drift: Optional[Callable] = None
    observations: Optional[Path] = None
    workers: int = 1
    mc_x0: float = 0.0
    mc_dt: float = 1e-4
    mc_n_paths: int = 10_000
    mc_t_max: Optional[float] = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, values):
        merged = dict(DEFAULTS)
        merged.update(values)
        unknown = set(merged) - KNOWN_KEYS
        if unknown:
            raise ConfigurationError(f"unknown configuration keys {sorted(unknown)}")
        get = merged.get
        try:
            domain = Domain(float(get("domain.a")), float(get("domain.b")))
            trim = get("search.trim")
            search = SearchConfig(
                sigma_range=tuple(_floats(get("search.sigma"), 3, "search.sigma")),
                alpha_range=tuple(_floats(get("search.alpha"), 3, "search.alpha")),
                drift_order=int(get("search.drift_order")),
                drift_lambda=float(get("search.drift_lambda")),
                theta=float(get("search.theta")),
                trim=None if trim in (None, "", "auto") else float(trim),
            )
            true_drift = None
            if "true.drift.poly" in merged and "true.drift.hill" in merged:
                raise ConfigurationError("give only one of true.drift.poly and true.drift.hill")
            if "true.drift.poly" in merged:
                true_drift = PolyExpansion(_floats(get("true.drift.poly"), key="true.drift.poly"), domain)
            elif "true.drift.hill" in merged:
                true_drift = hill_drift(*_floats(get("true.drift.hill"), 4, "true.drift.hill"))
            out_dir = Path(get("output.dir"))
            t_max = get("mc.t_max")
            return cls(
                domain=domain,
                J=int(get("grid.J")),
                met_K=int(get("met.K")),
                met_lambda=float(get("met.lambda")),
                epsilon=float(get("noise.epsilon")),
                search=search,
                output_dir=out_dir,
                seed=int(get("seed")),
                true_sigma=float(get("true.sigma")) if "true.sigma" in merged else None,
                true_alpha=float(get("true.alpha")) if "true.alpha" in merged else None,
                true_drift=true_drift,
                observations=Path(get("observations")) if "observations" in merged else None,
                workers=int(get("search.workers")),
                mc_x0=float(get("mc.x0")),
                mc_dt=float(get("mc.dt")),
                mc_n_paths=int(get("mc.n_paths")),
                mc_t_max=None if t_max in (None, "", "auto") else float(t_max),
                raw={k: merged[k] for k in sorted(merged)},
            )
        except ValueError as exc:
            if isinstance(exc, MetidError):
                raise
            raise ConfigurationError(str(exc)) from exc

    @property
    def grid(self):
        return build_grid(self.domain, self.J)

    @property
    def observations_path(self):
        return self.observations if self.observations is not None else self.output_dir / "observations.csv"

    @property
    def true_noise(self):
        if self.true_sigma is None:
            raise ConfigurationError("true.sigma is required for synthetic runs")
        alpha = self.true_alpha if self.epsilon > 0 else None
        return NoiseParams(self.true_sigma, self.epsilon, alpha)

    def echo(self):
        """Configuration as ``key=value`` strings, sorted by key."""
        return [f"{k}={v}" for k, v in self.raw.items()]


def load_config(path, overrides=None):
    """Read a configuration file; ``overrides`` (``key=value`` strings) win."""
    text = Path(path).read_text(encoding="utf-8") if path is not None else ""
    values = parse_config(text, source=str(path))
    for item in overrides or ():
        if "=" not in item:
            raise ParseError(f"override {item!r} is not key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ParseError(f"unknown override key {key!r}")
        values[key] = value
    return PipelineConfig.from_mapping(values)


# -- observations -------------------------------------------------------------


def load_observations(path, domain):
    """Read and validate an observations CSV with header ``x,u``.

    Lines starting with ``#`` are comments.  Errors name the physical line.
    """
    if not isinstance(domain, Domain):
        domain = Domain(*domain)
    xs, us = [], []
    header_seen = False
    seen = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if not header_seen:
                if cells != ["x", "u"]:
                    raise ParseError(f"header must be 'x,u', got {line!r}", line=lineno)
                header_seen = True
                continue
            if len(cells) != 2:
                raise ParseError(f"expected 2 columns, got {len(cells)}", line=lineno)
            try:
                x, u = float(cells[0]), float(cells[1])
            except ValueError:
                raise ParseError(f"non-numeric value in {line!r}", line=lineno) from None
            if not (math.isfinite(x) and math.isfinite(u)):
                raise ParseError("non-finite value", line=lineno)
            if not domain.a < x < domain.b:
                raise ParseError(f"x = {x!r} is not strictly inside ({domain.a}, {domain.b})", line=lineno)
            if u < 0:
                raise ParseError(f"negative exit time u = {u!r}", line=lineno)
            if x in seen:
                raise ParseError(f"duplicate x = {x!r} (first on line {seen[x]})", line=lineno)
            seen[x] = lineno
            xs.append(x)
            us.append(u)
    if not header_seen:
        raise ParseError("missing header 'x,u'", line=1)
    if not xs:
        raise ParseError("no observations", line=None)
    return Observations(np.array(xs), np.array(us), domain)


def write_observations(path, obs, comments=()):
    header = [f"{len(obs)} interior points"] + list(comments)
    write_xy_csv(path, ("x", "u"), (obs.x, obs.u), comments=header)


# -- stages -------------------------------------------------------------------


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except MetidError as exc:
        if isinstance(exc, PipelineError):
            raise
        raise PipelineError(name, exc) from exc


def simulate_observations(config, path=None):
    """Forward-solve the configured true model and write the observations CSV."""
    if config.true_drift is None:
        raise ConfigurationError("a true drift (true.drift.poly or true.drift.hill) is required")
    grid = config.grid
    field = _stage("simulate", solve_met, grid, config.true_drift, config.true_noise)
    obs = Observations(grid.interior, field.values, config.domain)
    path = Path(path) if path is not None else config.observations_path
    write_observations(path, obs, comments=config.echo())
    return obs, path


def _obtain_observations(config):
    if config.observations is not None:
        return _stage("load", load_observations, config.observations, config.domain)
    if config.true_drift is not None:
        return simulate_observations(config)[0]
    path = config.observations_path
    return _stage("load", load_observations, path, config.domain)


def fit_met_stage(config, obs=None):
    """Sparse fit of the exit time curve; writes ``met_fit.json``."""
    obs = obs if obs is not None else _obtain_observations(config)
    fit = _stage("fit-met", fit_met, obs, config.met_K, config.met_lambda)
    payload = {
        "K": config.met_K,
        "lambda": config.met_lambda,
        "coefficients": [float(c) for c in fit.coefficients.values],
        "support": [i + 1 for i in fit.coefficients.support],
        "monomial": [{"power": j, "coefficient": c} for j, c in fit.polynomial.nonzero_terms()],
        "residual_norm": fit.coefficients.residual_norm,
        "config": config.raw,
    }
    write_json(config.output_dir / "met_fit.json", payload)
    return fit


def run_error_surface(config, obs=None, fit=None):
    """Fit, sweep the candidate grid and write ``error_surface.csv``."""
    obs = obs if obs is not None else _obtain_observations(config)
    fit = fit if fit is not None else fit_met_stage(config, obs)
    model, surface = _stage(
        "search",
        grid_search,
        obs,
        config.search,
        config.epsilon,
        u_f=fit.polynomial,
        grid=config.grid,
        workers=config.workers,
    )
    surface.to_csv(config.output_dir / "error_surface.csv", comments=config.echo())
    return model, surface


def run_identify(config, obs=None):
    """Full identification run.

    Writes ``learned_model.json``, ``error_surface.csv``,
    ``met_comparison.csv`` and ``drift_comparison.csv`` to the output
    directory and returns a dict with the in-memory results.
    """
    obs = obs if obs is not None else _obtain_observations(config)
    fit = fit_met_stage(config, obs)
    model, surface = run_error_surface(config, obs, fit)
    write_json(config.output_dir / "learned_model.json", model.to_dict(config=config.raw))

    grid = config.grid
    learned = _stage("compare", solve_met, grid, model.drift, model.noise)
    from .identify import observations_on_grid

    u_obs = observations_on_grid(obs, grid)
    write_xy_csv(
        config.output_dir / "met_comparison.csv",
        ("x", "u_observed", "u_learned"),
        (grid.interior, u_obs, learned.values),
        comments=config.echo(),
    )
    samples = _stage(
        "compare",
        drift_field,
        fit.polynomial,
        model.noise,
        grid,
        theta=config.search.theta,
        trim=config.search.trim,
    )
    x = samples.x
    f_true = config.true_drift(x) if config.true_drift is not None else [""] * len(x)
    write_xy_csv(
        config.output_dir / "drift_comparison.csv",
        ("x", "f_true", "f_learned"),
        (x, np.asarray(f_true, dtype=object), model.drift(x)),
        comments=config.echo(),
    )
    return {"observations": obs, "fit": fit, "model": model, "surface": surface, "learned_met": learned}


def run_mc_met(config):
    """Monte Carlo exit time of the true model from ``mc.x0``; writes ``mc_met.json``."""
    if config.true_drift is None and config.true_sigma is None:
        raise ConfigurationError("mc-met needs a true model (true.sigma and a true drift)")
    noise = config.true_noise
    t_max = config.mc_t_max
    reference = None
    if config.domain.a < config.mc_x0 < config.domain.b:
        grid = config.grid
        try:
            field = solve_met(grid, config.true_drift, noise)
            reference = float(np.interp(config.mc_x0, grid.nodes, field.extended()))
        except MetidError:
            reference = None
    if t_max is None and reference is not None:
        t_max = 100.0 * reference
    cfg = SimConfig(dt=config.mc_dt, n_paths=config.mc_n_paths, t_max=t_max, seed=config.seed)
    est = _stage("mc-met", estimate_met, config.true_drift, noise, config.mc_x0, config.domain, cfg)
    payload = est.to_dict()
    payload["x0"] = config.mc_x0
    payload["solver_met"] = reference
    payload["config"] = config.raw
    write_json(config.output_dir / "mc_met.json", payload)
    return est

"""Monte-Carlo comparison of the l2, l1-l2 and truncated-l2 designs.

A configuration describes the plant, the signal space, the reference and the
solver settings.  Every trial draws a random sampling plan (and, optionally,
a random initial state) from its own seed ``seed + trial_index``, so results
depend only on the configuration and never on how trials are scheduled.
"""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DomainError
from .lti import OutputOperator, Plant, output_operator
from .sensing import build_gram, draw_plan
from .signals import CoefVector, ReferenceSpec, SignalSpace, cardinality, sample_reference
from .solvers import SolverConfig, solve_l1l2_fista_batch, solve_l2, truncate_top_s

WORKERS_ENV = "CSREMOTE_WORKERS"
CARD_TOL = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; ``x0`` may be a vector or ``"random-x0"``.

    ``weight_convention`` fixes how ``mu1``/``mu2`` reach the solvers:

    * ``"paper"``: the reported weights of the numerical study.  The l2
      weight is used as is; the l1 weight becomes ``4 * mu1 / h``, the
      weight that the printed shrinkage iteration (threshold 2 mu1 / c,
      step 1 / c) minimizes when mu1 is read on the sampled functional
      h ||.||^2.
    * ``"direct"``: both weights enter J1 and J2 unchanged.
    """

    A: tuple
    b: tuple
    c: tuple
    x0: object = None
    T: float = 2 * np.pi
    M: int = 100
    reference: tuple = ()
    K: int | None = None
    mu1: float = 1e-4
    mu2: float = 1e-4
    trials: int = 1
    seed: int = 0
    weight_convention: str = "paper"
    max_iters: int = 20000
    rel_tol: float = 1e-10
    lipschitz_margin: float = 1.01
    power_iters: int = 10000
    output_points: int = 1000
    batch_size: int = 50
    name: str = "experiment"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weight_convention not in ("paper", "direct"):
            raise DomainError(f"unknown weight_convention {self.weight_convention!r}")
        space = self.space()
        self.reference_spec().validate_for(space)
        K = space.N if self.K is None else self.K
        if not 1 <= K <= space.N:
            raise DomainError(f"K must satisfy 1 <= K <= N = {space.N}, got {K}")
        if self.trials < 0:
            raise DomainError("trials must be non-negative")
        if self.output_points < 2 or self.batch_size < 1:
            raise DomainError("output_points must be >= 2 and batch_size >= 1")
        self.plant()
        self.solver_config()

    @property
    def random_x0(self) -> bool:
        return isinstance(self.x0, str)

    def space(self) -> SignalSpace:
        return SignalSpace(self.T, self.M)

    def plant(self, x0=None) -> Plant:
        if x0 is None:
            x0 = None if self.random_x0 else self.x0
        return Plant(np.array(self.A, dtype=float), self.b, self.c, x0)

    def reference_spec(self) -> ReferenceSpec:
        return ReferenceSpec.from_terms(self.reference)

    @property
    def sample_count(self) -> int:
        return self.space().N if self.K is None else int(self.K)

    def effective_weights(self):
        """(mu1, mu2) as they enter J1 and J2."""
        if self.weight_convention == "direct":
            return self.mu1, self.mu2
        return 4.0 * self.mu1 / self.space().h, self.mu2

    def solver_config(self) -> SolverConfig:
        mu1, mu2 = self.effective_weights()
        return SolverConfig(mu1=mu1, mu2=mu2, max_iters=self.max_iters,
                            rel_tol=self.rel_tol, lipschitz_margin=self.lipschitz_margin,
                            power_iters=self.power_iters)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["A"] = [list(map(float, row)) for row in np.array(self.A, dtype=float)]
        d["reference"] = [list(t) for t in self.reference_spec().terms]
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        d = asdict(self)
        d.update(changes)
        return ExperimentConfig(**d)


_CONFIG_KEYS = set(ExperimentConfig.__dataclass_fields__)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    plant = data.pop("plant", None)
    if plant is not None:
        for key in ("A", "b", "c", "x0"):
            if key in plant:
                data[key] = plant[key]
    space = data.pop("space", None)
    if space is not None:
        data.update({k: space[k] for k in ("T", "M") if k in space})
    if isinstance(data.get("T"), str):
        data["T"] = _parse_horizon(data["T"])
    extra = {k: data.pop(k) for k in list(data) if k not in _CONFIG_KEYS}
    data.setdefault("extra", {}).update(extra)
    for key in ("A", "b", "c"):
        if key not in data:
            raise DomainError(f"configuration is missing plant field {key!r}")
    data["A"] = tuple(tuple(float(v) for v in row) for row in data["A"])
    data["b"] = tuple(float(v) for v in data["b"])
    data["c"] = tuple(float(v) for v in data["c"])
    if data.get("x0") is not None and not isinstance(data["x0"], str):
        data["x0"] = tuple(float(v) for v in data["x0"])
    elif isinstance(data.get("x0"), str) and data["x0"] != "random-x0":
        raise DomainError(f"x0 must be a vector or 'random-x0', got {data['x0']!r}")
    data["reference"] = tuple(tuple(t) for t in data.get("reference", ()))
    return ExperimentConfig(**data)


def _parse_horizon(text: str) -> float:
    # accepts "2pi", "2*pi", "pi", or a plain number
    s = text.replace(" ", "").replace("*", "")
    if s.endswith("pi"):
        head = s[:-2]
        return (float(head) if head else 1.0) * np.pi
    return float(s)


def load_config(path, section: str | None = None) -> ExperimentConfig:
    """Read a JSON configuration, optionally picking one named section.

    A file may hold a single configuration or a mapping of section names to
    configurations; a top-level ``"defaults"`` mapping is merged under each
    section.
    """
    with open(path) as fh:
        data = json.load(fh)
    if section is not None:
        if section not in data:
            raise DomainError(f"section {section!r} not found in {path}")
        merged = dict(data.get("defaults", {}))
        for key, value in data[section].items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                value = {**merged[key], **value}
            merged[key] = value
        merged.setdefault("name", section)
        data = merged
    return config_from_dict(data)


@dataclass
class TrialRecord:
    trial_id: int
    plan_indices: np.ndarray
    x0: np.ndarray
    failed: bool = False
    reason: str = ""
    card_l2: int = 0
    card_l1l2: int = 0
    residual_l2: float = float("nan")       # ||G theta_2 - beta||
    residual_l1l2: float = float("nan")     # ||Phi theta_1 - alpha||
    iterations: int = 0
    converged: bool = False
    asymmetry_l1l2: float = 0.0             # ||theta - J theta|| / (2 ||theta||)
    theta_l2: np.ndarray | None = None
    theta_l1l2: np.ndarray | None = None
    y: dict = field(default_factory=dict)     # design -> output trace
    err: dict = field(default_factory=dict)   # design -> |r - y| trace

    def stats(self) -> dict:
        return {
            "trial_id": self.trial_id, "failed": self.failed, "reason": self.reason,
            "card_l2": self.card_l2, "card_l1l2": self.card_l1l2,
            "residual_l2": self.residual_l2, "residual_l1l2": self.residual_l1l2,
            "iterations": self.iterations, "converged": self.converged,
            "asymmetry_l1l2": self.asymmetry_l1l2,
        }


DESIGNS = ("l2", "l1l2", "trunc")


def _asymmetry(theta) -> float:
    """Relative size of the part of theta that would make u imaginary."""
    norm = np.linalg.norm(theta)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(theta - np.conj(theta[::-1])) / (2 * norm))


class ExperimentContext:
    """Quantities shared by every trial of a configuration."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.space = config.space()
        self.plant = config.plant()
        self.reference = config.reference_spec()
        self.G, self.H = build_gram(self.plant, self.space)
        self.r = sample_reference(self.reference, self.space)
        self.t_out = np.linspace(0.0, self.space.T, config.output_points)
        self.output: OutputOperator = output_operator(self.plant, self.space, self.t_out)
        self.r_out = self.reference(self.t_out, self.space)
        self.solver = config.solver_config()

    def x0_for(self, trial_id: int) -> np.ndarray:
        if self.config.random_x0:
            return np.random.default_rng([trial_id, 1]).standard_normal(self.plant.nu)
        return np.array(self.plant.x0)


def _run_batch(ctx: ExperimentContext, trial_ids) -> list[TrialRecord]:
    cfg = ctx.config
    K = cfg.sample_count
    records, betas, rows = [], [], []
    for tid in trial_ids:
        plan = draw_plan(ctx.space, K, tid)
        x0 = ctx.x0_for(tid)
        records.append(TrialRecord(tid, plan.indices, x0))
        betas.append(ctx.r - ctx.H @ x0)
        rows.append(plan.indices)
    betas = np.column_stack(betas)
    theta2 = solve_l2(ctx.G, betas, ctx.solver.mu2)
    results = solve_l1l2_fista_batch(ctx.G, betas, rows, ctx.solver)
    for b, (rec, res) in enumerate(zip(records, results)):
        try:
            th2, th1 = theta2[:, b], res.theta
            rec.theta_l2, rec.theta_l1l2 = th2, th1
            rec.card_l2 = cardinality(th2, CARD_TOL)
            rec.card_l1l2 = cardinality(th1, CARD_TOL)
            rec.residual_l2 = float(np.linalg.norm(ctx.G @ th2 - betas[:, b]))
            rec.residual_l1l2 = res.residual
            rec.iterations, rec.converged = res.iterations, res.converged
            rec.asymmetry_l1l2 = _asymmetry(th1)
            thetas = {"l2": th2, "l1l2": th1, "trunc": truncate_top_s(th2, rec.card_l1l2)}
            for name, th in thetas.items():
                # The plant is driven by Re u.  A truncation may split a
                # conjugate pair, and an unconverged FISTA iterate carries a
                # small antisymmetric part; both are dropped here.  The l2
                # design is exact and must pass the realness check.
                y = ctx.output.apply(th, rec.x0, realize=(name != "l2"))
                rec.y[name] = y
                rec.err[name] = np.abs(ctx.r_out - y)
        except (DomainError, np.linalg.LinAlgError) as exc:
            rec.failed, rec.reason = True, f"{type(exc).__name__}: {exc}"
    return records


def run_single(config: ExperimentConfig, seed: int, context: ExperimentContext | None = None) -> TrialRecord:
    """One trial with seed ``seed``: l2 on full data, l1-l2 on a random plan, truncation."""
    ctx = context or ExperimentContext(config)
    return _run_batch(ctx, [seed])[0]


_worker_ctx = None


def _worker_init(config):
    global _worker_ctx
    _worker_ctx = ExperimentContext(config)


def _worker_batch(trial_ids):
    return _run_batch(_worker_ctx, trial_ids)


def _worker_count() -> int:
    value = os.environ.get(WORKERS_ENV, "").strip()
    if not value:
        return 1
    n = int(value)
    if n < 1:
        raise DomainError(f"{WORKERS_ENV} must be a positive integer")
    return n


def run_trials(config: ExperimentConfig, context: ExperimentContext | None = None,
               workers: int | None = None) -> list[TrialRecord]:
    """All trials in index order; batches are fixed by ``batch_size`` alone."""
    if config.trials < 1:
        raise DomainError("at least one trial is required")
    ids = [config.seed + i for i in range(config.trials)]
    batches = [ids[i:i + config.batch_size] for i in range(0, len(ids), config.batch_size)]
    workers = _worker_count() if workers is None else workers
    if workers <= 1 or len(batches) == 1:
        ctx = context or ExperimentContext(config)
        out = []
        for batch in batches:
            out.extend(_run_batch(ctx, batch))
        return out
    with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                             initargs=(config,)) as pool:
        return [rec for chunk in pool.map(_worker_batch, batches) for rec in chunk]


@dataclass
class Summary:
    config: ExperimentConfig
    records: list
    t: np.ndarray
    r: np.ndarray
    mean_y: dict
    mean_err: dict
    stats: dict
    bounds: list = field(default_factory=list)

    @property
    def first(self) -> TrialRecord | None:
        return next((rec for rec in self.records if not rec.failed), None)


def summarize(config: ExperimentConfig, records: list, ctx: ExperimentContext) -> Summary:
    ok = [rec for rec in records if not rec.failed]
    if not ok:
        raise DomainError("every trial failed; nothing to summarize")
    N = ctx.space.N
    cards = np.array([rec.card_l1l2 for rec in ok])
    mean_y = {d: np.mean([rec.y[d] for rec in ok], axis=0) for d in DESIGNS}
    mean_err = {d: np.mean([rec.err[d] for rec in ok], axis=0) for d in DESIGNS}
    values, counts = np.unique(cards, return_counts=True)
    mu1, mu2 = config.effective_weights()
    stats = {
        "trials": len(records),
        "failed": len(records) - len(ok),
        "failures": [{"trial_id": rec.trial_id, "reason": rec.reason}
                     for rec in records if rec.failed],
        "converged": int(sum(rec.converged for rec in ok)),
        "effective_mu1": mu1,
        "effective_mu2": mu2,
        "N": N,
        "K": config.sample_count,
        "card_l2_mean": float(np.mean([rec.card_l2 for rec in ok])),
        "card_l1l2_mean": float(cards.mean()),
        "card_l1l2_std": float(cards.std()),
        "card_l1l2_min": int(cards.min()),
        "card_l1l2_max": int(cards.max()),
        "card_l1l2_histogram": {str(int(v)): int(c) for v, c in zip(values, counts)},
        "compression_ratio_mean": float(cards.mean() / N),
        "residual_l2_mean": float(np.mean([rec.residual_l2 for rec in ok])),
        "residual_l1l2_mean": float(np.mean([rec.residual_l1l2 for rec in ok])),
        "iterations_mean": float(np.mean([rec.iterations for rec in ok])),
        "asymmetry_l1l2_max": float(max(rec.asymmetry_l1l2 for rec in ok)),
        "time_avg_error": {d: float(np.mean(mean_err[d])) for d in DESIGNS},
    }
    return Summary(config, records, ctx.t_out, ctx.r_out, mean_y, mean_err, stats)


def run_monte_carlo(config: ExperimentConfig, context: ExperimentContext | None = None,
                    workers: int | None = None) -> Summary:
    """Run every trial and average the traces of the successful ones."""
    if config.trials < 1:
        raise DomainError("at least one trial is required")
    ctx = context or ExperimentContext(config)
    records = run_trials(config, ctx, workers)
    return summarize(config, records, ctx)


def format_number(x: float) -> str:
    """Decimal notation with 12 significant digits."""
    return np.format_float_positional(float(x) + 0.0, precision=12, unique=False,
                                      fractional=False, trim="-")


TIMESERIES_HEADER = ("t", "r", "y_l2", "y_l1l2", "y_trunc", "err_l2", "err_l1l2", "err_trunc")
COEF_HEADER = ("m", "abs_theta_l2", "abs_theta_l1l2")


def _timeseries_rows(summary: Summary):
    cols = [summary.t, summary.r,
            *(summary.mean_y[d] for d in DESIGNS), *(summary.mean_err[d] for d in DESIGNS)]
    for row in zip(*cols):
        yield ",".join(format_number(v) for v in row)


def _coef_rows(summary: Summary):
    rec = summary.first
    space = summary.config.space()
    for m, a2, a1 in zip(space.ms, np.abs(rec.theta_l2), np.abs(rec.theta_l1l2)):
        yield f"{int(m)},{format_number(a2)},{format_number(a1)}"


def summary_document(summary: Summary) -> dict:
    rec = summary.first
    return {
        "config": summary.config.to_dict(),
        "seed": summary.config.seed,
        "statistics": summary.stats,
        "first_trial": None if rec is None else {
            **rec.stats(),
            "plan_indices": [int(i) for i in rec.plan_indices],
            "x0": [float(v) for v in rec.x0],
        },
        "trials": [rec.stats() for rec in summary.records],
        "bounds": summary.bounds,
    }


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_outputs(summary: Summary, out_dir) -> dict:
    """Write timeseries.csv, coefficients.csv and summary.json into ``out_dir``.

    All documents are rendered in memory and the directory is checked for
    writability before any file is touched.
    """
    if summary is None or not summary.records or summary.first is None:
        raise DomainError("no successful trials to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    docs = {
        "timeseries.csv": "\n".join([",".join(TIMESERIES_HEADER), *_timeseries_rows(summary)]) + "\n",
        "coefficients.csv": "\n".join([",".join(COEF_HEADER), *_coef_rows(summary)]) + "\n",
        "summary.json": json.dumps(summary_document(summary), indent=2, sort_keys=True,
                                   default=_json_default) + "\n",
    }
    paths = {}
    for name, text in docs.items():
        paths[name] = out / name
        _write_atomic(paths[name], text)
    return paths


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, CoefVector):
        return [[v.real, v.imag] for v in obj.values]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_timeseries(path) -> dict:
    """Parse a timeseries CSV back into float arrays keyed by column."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}

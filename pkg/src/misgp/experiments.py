"""Seeded Monte Carlo experiments over misspecified environments.

A run is fully determined by its JSON config: replication ``r`` uses seed
``seed + r`` for every random stream it owns (noise, environment synthesis,
contexts), so replications are independent of each other and of their order.
"""

from __future__ import annotations

import copy
import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .algorithms import (
    BalancingMaster,
    EcGpUcb,
    GpUcb,
    MasterConfig,
    PhasedUncertaintySampling,
    make_master_config,
)
from .confidence import ConfidenceParams
from .environments import (
    BoundedSinusoid,
    ContextDistribution,
    MisspecifiedObjective,
    NoiseModel,
    NoMisspec,
    OptimumPenalty,
    RegretTrace,
    SignPattern,
    make_objective,
    observe_paired,
    spike_objective,
    synthesize_rkhs,
)
from .errors import ConfigError
from .infogain import gamma_exact, gamma_greedy, gamma_upper_estimate, EXACT_MAX_DOMAIN, EXACT_MAX_T
from .kernels import ActionDomain, KernelSpec
from .rng import CONTEXT_STREAM, ENVIRONMENT_STREAM, NOISE_STREAM, RNG_VERSION, Stream

TRACE_COLUMNS = (
    "round",
    "replication",
    "algorithm",
    "action_index",
    "reward",
    "inst_regret_star",
    "cum_regret_star",
    "cum_regret_tilde",
)
ALGORITHMS = ("gp_ucb", "ec_gp_ucb", "phased_us", "master")
MISSPEC_FAMILIES = ("none", "sinusoid", "sign", "spike", "optimum_penalty")
GAMMA_ROUND_CAP = 512


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError("missing required key", f"{where}.{key}" if where else key)
    return d[key]


def _number(value, field_name: str, *, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field_name)
    if integer and int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", field_name)
    if positive and not value > 0:
        raise ConfigError(f"must be positive, got {value!r}", field_name)
    if nonneg and value < 0:
        raise ConfigError(f"must be nonnegative, got {value!r}", field_name)
    return int(value) if integer else float(value)


@dataclass
class ExperimentConfig:
    """Validated experiment description.  ``raw`` keeps the parsed JSON."""

    name: str
    kernel: KernelSpec
    domain: dict
    objective: dict
    norm_bound: float
    noise: float
    lam: float
    delta: float
    horizon: int
    algorithm: dict
    replications: int = 1
    seed: int = 0
    contexts: dict | None = None
    output: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        try:
            kernel = KernelSpec.from_dict(_require(data, "kernel", ""))
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc), "kernel") from None

        domain = _require(data, "domain", "")
        if not isinstance(domain, dict) or not ({"grid", "csv"} & domain.keys()):
            raise ConfigError("needs either 'grid' or 'csv'", "domain")
        if "grid" in domain:
            g = domain["grid"]
            _number(_require(g, "dimension", "domain.grid"), "domain.grid.dimension", positive=True, integer=True)
            _number(_require(g, "resolution", "domain.grid"), "domain.grid.resolution", positive=True, integer=True)

        objective = data.get("objective", {})
        misspec = objective.get("misspec", {"family": "none"})
        fam = misspec.get("family", "none")
        if fam not in MISSPEC_FAMILIES:
            raise ConfigError(f"unknown family {fam!r}; expected one of {MISSPEC_FAMILIES}", "objective.misspec.family")
        if fam != "none":
            _number(_require(misspec, "eps", "objective.misspec"), "objective.misspec.eps", nonneg=True)

        algorithm = _require(data, "algorithm", "")
        if algorithm.get("name") not in ALGORITHMS:
            raise ConfigError(f"expected one of {ALGORITHMS}", "algorithm.name")
        if algorithm["name"] == "ec_gp_ucb":
            _number(algorithm.get("eps", 0.0), "algorithm.eps", nonneg=True)

        delta = _number(data.get("delta", 0.1), "delta", positive=True)
        if delta >= 1:
            raise ConfigError("must lie in (0, 1)", "delta")
        horizon = _number(_require(data, "horizon", ""), "horizon", positive=True, integer=True)
        if algorithm["name"] == "master" and horizon < 2:
            raise ConfigError("master needs horizon >= 2", "horizon")
        return cls(
            name=str(data.get("name", "experiment")),
            kernel=kernel,
            domain=domain,
            objective=objective,
            norm_bound=_number(_require(data, "norm_bound", ""), "norm_bound", positive=True),
            noise=_number(data.get("noise", 0.1), "noise", nonneg=True),
            lam=_number(data.get("lambda", 1.0), "lambda", positive=True),
            delta=delta,
            horizon=horizon,
            algorithm=algorithm,
            replications=_number(data.get("replications", 1), "replications", positive=True, integer=True),
            seed=_number(data.get("seed", 0), "seed", nonneg=True, integer=True),
            contexts=data.get("contexts"),
            output=data.get("output"),
            base_dir=base_dir or Path.cwd(),
            raw=copy.deepcopy(data),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {p}: {exc}") from None
        return cls.from_dict(data, base_dir=p.parent)

    def with_overrides(self, seed=None, replications=None, output=None) -> "ExperimentConfig":
        data = copy.deepcopy(self.raw)
        if seed is not None:
            data["seed"] = seed
        if replications is not None:
            data["replications"] = replications
        if output is not None:
            data["output"] = output
        return ExperimentConfig.from_dict(data, base_dir=self.base_dir)

    @property
    def confidence(self) -> ConfidenceParams:
        # Noise scale 0 still needs a positive sigma in the radius.
        return ConfidenceParams(self.norm_bound, max(self.noise, 1e-12), self.lam, self.delta)


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


def build_domain(config: ExperimentConfig) -> ActionDomain:
    d = config.domain
    if "csv" in d:
        path = Path(d["csv"])
        if not path.is_absolute():
            path = config.base_dir / path
        if not path.is_file():
            raise ConfigError(f"domain file not found: {path}", "domain.csv")
        domain = ActionDomain.from_csv(path)
    else:
        g = d["grid"]
        domain = ActionDomain.grid(
            int(g["dimension"]), int(g["resolution"]), float(g.get("low", 0.0)), float(g.get("high", 1.0))
        )
    domain.validate_for(config.kernel)
    return domain


def _default_spike_location(domain: ActionDomain) -> np.ndarray:
    """Midpoint between the grid point nearest the domain centre and its
    nearest neighbour: off the grid by construction."""
    centre = domain.points.mean(axis=0)
    i = int(np.argmin(np.linalg.norm(domain.points - centre, axis=1)))
    dist = np.linalg.norm(domain.points - domain.points[i], axis=1)
    dist[i] = np.inf
    j = int(np.argmin(dist))
    return 0.5 * (domain.points[i] + domain.points[j])


def build_objective(config: ExperimentConfig, domain: ActionDomain, replication: int) -> MisspecifiedObjective:
    spec = config.objective
    misspec = spec.get("misspec", {"family": "none"})
    fam = misspec.get("family", "none")
    eps = float(misspec.get("eps", 0.0))
    if fam == "spike":
        loc = misspec.get("location")
        loc = _default_spike_location(domain) if loc is None else np.asarray(loc, dtype=float)
        obj = spike_objective(domain, config.kernel, eps, loc)
        if obj.best_in_class.cached_norm > config.norm_bound + 1e-12:
            raise ConfigError("spike height exceeds the norm bound B", "objective.misspec.eps")
        return obj

    seed = spec.get("seed")
    stream = Stream(config.seed + replication if seed is None else int(seed), ENVIRONMENT_STREAM)
    n_centers = int(spec.get("n_centers", min(10, len(domain))))
    target = float(spec.get("norm", config.norm_bound))
    f_tilde = synthesize_rkhs(config.kernel, domain, n_centers, target, stream)
    if fam == "none":
        m = NoMisspec()
    elif fam == "sinusoid":
        freq = misspec.get("frequency", [3.0] * domain.dimension)
        m = BoundedSinusoid(eps, tuple(float(w) for w in freq), float(misspec.get("phase", 0.0)))
    elif fam == "sign":
        m = SignPattern(eps, int(misspec.get("seed", stream.integer(2**31))))
    else:
        m = OptimumPenalty(eps, float(misspec.get("band", 0.0)))
    return make_objective(domain, f_tilde, m, unit_interval=bool(spec.get("unit_interval", False)))


def build_contexts(config: ExperimentConfig, domain: ActionDomain, stream: Stream) -> ContextDistribution | None:
    """Context pool drawn from ``stream``; the caller keeps drawing per-round
    contexts from the same stream."""
    c = config.contexts
    if not c:
        return None
    size = int(c.get("subset_size", max(1, len(domain) // 4)))
    return ContextDistribution.uniform_random_subsets(len(domain), int(c.get("pool_size", 8)), size, stream)


def master_gamma(config: ExperimentConfig, domain: ActionDomain) -> float:
    alg = config.algorithm
    t = int(alg.get("gamma_t", min(config.horizon, GAMMA_ROUND_CAP)))
    lam = float(alg.get("gamma_lambda", config.lam))
    return gamma_upper_estimate(config.kernel, domain, t, lam)


def build_algorithm(config: ExperimentConfig, domain: ActionDomain, master_setup: MasterConfig | None = None):
    alg = config.algorithm
    name = alg["name"]
    params = config.confidence
    cap = min(config.horizon, 4096)
    if name == "gp_ucb":
        return GpUcb(domain, config.kernel, params, capacity=cap)
    if name == "ec_gp_ucb":
        return EcGpUcb(domain, config.kernel, params, eps=float(alg.get("eps", 0.0)), capacity=cap)
    if name == "phased_us":
        return PhasedUncertaintySampling(
            domain, config.kernel, params, config.horizon, split_delta=bool(alg.get("split_delta", True))
        )
    setup = master_setup or make_master_config(
        config.horizon, master_gamma(config, domain), config.norm_bound, params.noise_scale, config.lam, config.delta
    )
    bases = [EcGpUcb(domain, config.kernel, params, eps=e, capacity=64) for e in setup.eps_hats]
    return BalancingMaster(bases, setup.bounds, config.delta, c=float(alg.get("c", 2.0)))


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


@dataclass
class ReplicationResult:
    replication: int
    seed: int
    trace: RegretTrace
    algorithm: Any
    objective: MisspecifiedObjective


def run_replication(
    config: ExperimentConfig,
    replication: int,
    master_setup: MasterConfig | None = None,
    domain: ActionDomain | None = None,
) -> ReplicationResult:
    """select -> observe -> update -> record, for ``horizon`` rounds."""
    domain = domain or build_domain(config)
    obj = build_objective(config, domain, replication)
    seed = config.seed + replication
    context_rng = Stream(seed, CONTEXT_STREAM)
    contexts = build_contexts(config, domain, context_rng)
    algo = build_algorithm(config, domain, master_setup)
    noise = NoiseModel(config.noise)
    noise_rng = Stream(seed, NOISE_STREAM)
    trace = RegretTrace()
    for _ in range(config.horizon):
        action_set = contexts.sample(context_rng) if contexts else None
        i = algo.select(action_set)
        y, _ = observe_paired(obj, noise, i, noise_rng)
        algo.update(i, y)
        trace.record_round(obj, i, y, action_set)
    return ReplicationResult(replication, seed, trace, algo, obj)


@dataclass
class SummaryRecord:
    algorithm: str
    scenario: str
    horizon: int
    replications: int
    mean_regret_star: float
    std_regret_star: float
    mean_regret_tilde: float
    std_regret_tilde: float
    checkpoints: dict[int, float]
    final_regret_star: list[float]
    final_regret_tilde: list[float]
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "scenario": self.scenario,
            "horizon": self.horizon,
            "replications": self.replications,
            "mean_regret_star": self.mean_regret_star,
            "std_regret_star": self.std_regret_star,
            "mean_regret_tilde": self.mean_regret_tilde,
            "std_regret_tilde": self.std_regret_tilde,
            "mean_avg_regret_star_at": {str(k): v for k, v in self.checkpoints.items()},
            "final_regret_star": self.final_regret_star,
            "final_regret_tilde": self.final_regret_tilde,
            "rng": RNG_VERSION,
            **self.extras,
        }


def checkpoints_for(horizon: int) -> list[int]:
    return sorted({max(1, horizon // 10), max(1, horizon // 4), max(1, horizon // 2), horizon})


def summarize(config: ExperimentConfig, traces: list[RegretTrace], extras: dict | None = None) -> SummaryRecord:
    star = np.array([t.regret_star for t in traces])
    tilde = np.array([t.regret_tilde for t in traces])
    cps = {c: float(np.mean([t.cum_star[c - 1] / c for t in traces])) for c in checkpoints_for(config.horizon)}
    return SummaryRecord(
        algorithm=config.algorithm["name"],
        scenario=config.name,
        horizon=config.horizon,
        replications=len(traces),
        mean_regret_star=float(star.mean()),
        std_regret_star=float(star.std()),
        mean_regret_tilde=float(tilde.mean()),
        std_regret_tilde=float(tilde.std()),
        checkpoints=cps,
        final_regret_star=star.tolist(),
        final_regret_tilde=tilde.tolist(),
        extras=extras or {},
    )


def run_experiment(config: ExperimentConfig) -> tuple[list[RegretTrace], SummaryRecord]:
    domain = build_domain(config)
    extras: dict = {}
    setup = None
    if config.algorithm["name"] == "master":
        gamma = master_gamma(config, domain)
        setup = make_master_config(
            config.horizon, gamma, config.norm_bound, config.confidence.noise_scale, config.lam, config.delta
        )
        extras = {"gamma_T": gamma, "n_bases": setup.n_bases, "eps_hats": list(setup.eps_hats)}
    results = [run_replication(config, r, setup, domain) for r in range(config.replications)]
    traces = [res.trace for res in results]
    if config.objective.get("unit_interval"):
        extras["affine_maps"] = [list(tr.affine) for tr in traces]
    if setup is not None:
        extras["active_at_end"] = [list(res.algorithm.active) for res in results]
    return traces, summarize(config, traces, extras)


def traces_to_csv(traces: list[RegretTrace], algorithm: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r, tr in enumerate(traces):
        for t in range(len(tr)):
            w.writerow(
                (
                    t + 1,
                    r,
                    algorithm,
                    tr.actions[t],
                    repr(tr.rewards[t]),
                    repr(tr.inst_star[t]),
                    repr(tr.cum_star[t]),
                    repr(tr.cum_tilde[t]),
                )
            )
    return buf.getvalue()


def write_outputs(out_dir, traces: list[RegretTrace], summary: SummaryRecord) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "traces.csv"
    summary_path = out / "summary.json"
    trace_path.write_text(traces_to_csv(traces, summary.algorithm))
    summary_path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    return trace_path, summary_path


# ---------------------------------------------------------------------------
# Confidence coverage
# ---------------------------------------------------------------------------


def coverage_replication(config: ExperimentConfig, replication: int, domain: ActionDomain | None = None) -> bool:
    """Run the configured optimistic algorithm and report whether the
    well-specified confidence band ``|f_tilde - mu_{t-1}| <= beta_t
    sigma_{t-1}`` failed at any round and any domain point.

    The band is checked for the mean fitted to ``f_tilde + noise`` (paired
    draws), which coincides with the algorithm's own mean when ``eps = 0``.
    """
    domain = domain or build_domain(config)
    if config.algorithm["name"] not in ("gp_ucb", "ec_gp_ucb"):
        raise ConfigError("coverage needs gp_ucb or ec_gp_ucb", "algorithm.name")
    obj = build_objective(config, domain, replication)
    algo = build_algorithm(config, domain)
    noise = NoiseModel(config.noise)
    rng = Stream(config.seed + replication, NOISE_STREAM)
    realizable = not np.any(obj.m)
    tilde_obs: list[float] = []
    for _ in range(config.horizon):
        post = algo.posterior
        mu = post.probe_mean() if realizable else post.probe_mean_for(tilde_obs)
        sd = post.probe_std()
        beta = algo.beta_acc.beta()
        if np.any(np.abs(obj.f_tilde - mu) > beta * sd):
            return True
        i = algo.select()
        y_star, y_tilde = observe_paired(obj, noise, i, rng)
        algo.update(i, y_star)
        tilde_obs.append(y_tilde)
    return False


def run_coverage(config: ExperimentConfig) -> dict:
    domain = build_domain(config)
    violations = [coverage_replication(config, r, domain) for r in range(config.replications)]
    return {
        "runs": len(violations),
        "violations": int(sum(violations)),
        "violation_rate": float(np.mean(violations)),
        "delta": config.delta,
    }


# ---------------------------------------------------------------------------
# Information gain report
# ---------------------------------------------------------------------------


def gamma_rows(config: ExperimentConfig) -> list[tuple[str, int, float, float]]:
    """``(method, t, lambda, value)`` rows; exact only within its guards."""
    domain = build_domain(config)
    g = config.raw.get("gamma", {})
    t = int(g.get("t", min(config.horizon, GAMMA_ROUND_CAP)))
    lam = float(g.get("lambda", config.lam))
    rows = []
    if len(domain) <= EXACT_MAX_DOMAIN and t <= EXACT_MAX_T:
        rows.append(("ExactBruteForce", t, lam, gamma_exact(config.kernel, domain, t, lam).value))
    rows.append(("Greedy", t, lam, gamma_greedy(config.kernel, domain, t, lam).value))
    rows.append(("UpperEstimate", t, lam, gamma_upper_estimate(config.kernel, domain, t, lam)))
    return rows


# ---------------------------------------------------------------------------
# Built-in scenarios
# ---------------------------------------------------------------------------


def _base(name: str, horizon: int, algorithm: dict, misspec: dict, **over) -> dict:
    cfg = {
        "name": name,
        "kernel": {"family": "se", "lengthscale": 0.1},
        "domain": {"grid": {"dimension": 1, "resolution": 64, "low": 0.0, "high": 1.0}},
        "objective": {"n_centers": 10, "norm": 1.0, "misspec": misspec},
        "norm_bound": 1.0,
        "noise": 0.1,
        "lambda": 1.0,
        "delta": 0.1,
        "horizon": horizon,
        "algorithm": algorithm,
        "replications": 10,
        "seed": 0,
    }
    cfg.update(over)
    return cfg


SCENARIOS: dict[str, dict] = {
    "realizable": _base("realizable", 2000, {"name": "ec_gp_ucb", "eps": 0.0}, {"family": "none"}),
    "misspec_sin": _base(
        "misspec_sin", 4096, {"name": "phased_us"}, {"family": "sinusoid", "eps": 0.2, "frequency": [3.0]}
    ),
    "misspec_sign": _base(
        "misspec_sign", 2048, {"name": "phased_us"}, {"family": "sign", "eps": 0.1, "seed": 7}
    ),
    "spike": _base(
        "spike", 100, {"name": "gp_ucb"}, {"family": "spike", "eps": 0.2}, noise=0.0, replications=3
    ),
    "contextual_master": _base(
        "contextual_master",
        4096,
        {"name": "master", "c": 2.0},
        {"family": "sign", "eps": 0.1, "seed": 11},
        contexts={"pool_size": 8, "subset_size": 16},
    ),
    "gpucb_failure": _base(
        "gpucb_failure", 1000, {"name": "gp_ucb"}, {"family": "optimum_penalty", "eps": 0.3, "band": 0.05}
    ),
}


SCENARIOS["contextual_master"]["objective"]["unit_interval"] = True


def scenario_config(name: str) -> dict:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; expected one of {tuple(SCENARIOS)}")
    return copy.deepcopy(SCENARIOS[name])

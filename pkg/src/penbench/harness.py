"""Experiment runner: strategy and instance spec strings, seeded Monte Carlo
trials, and competitive-ratio reports.

Trial ``i`` of a run draws its instance from substream ``2i`` and its strategy
decisions from substream ``2i+1`` of the master seed (see :mod:`penbench.rng`),
so runs are reproducible bit for bit, chunked across worker threads or not.
Known strategy/instance pairs execute through the compiled kernels; anything
else falls back to the object engine, which is slower but identical.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, engine, instances, prophet_algs, secretary_algs
from .distributions import Distribution, parse_distribution
from .rng import Stream, trial_seed

CHUNK_TRIALS = 1 << 14


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# instance specs


@dataclass
class InstanceSpec:
    kind: str  # iid | product | fixed | geometric | genorder | truncsec
    n: int
    dists: Optional[List[Distribution]] = None  # per option (iid: one shared)
    values: Optional[np.ndarray] = None
    order: str = instances.ORDER_FIXED
    params: Dict = field(default_factory=dict)
    text: str = ""

    @property
    def is_prophet(self) -> bool:
        return self.kind in ("iid", "product")

    def build(self, rng: Stream) -> instances.Instance:
        if self.kind == "iid":
            return instances.iid_from(self.dists[0], self.n, rng, order=self.order)
        if self.kind == "product":
            return instances.independent_from(self.dists, rng)
        if self.kind in ("fixed", "geometric"):
            return instances.Instance(self.values, order=self.order)
        if self.kind == "genorder":
            return instances.nonuniform_geometric_order(self.params["k"], rng)
        if self.kind == "truncsec":
            return instances.truncated_exponential_secretary(self.n, rng)
        raise ConfigError(f"cannot build instance kind {self.kind!r}")


def _split_args(text: str) -> List[str]:
    """Split on top-level commas (commas inside parens stay put)."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur).strip())
    return [p for p in parts if p]


def _kv(parts: List[str]) -> Tuple[List[str], Dict[str, str]]:
    pos, kv = [], {}
    for p in parts:
        if "=" in p and not p.split("=", 1)[0].strip().count("("):
            k, v = p.split("=", 1)
            kv[k.strip()] = v.strip()
        else:
            pos.append(p)
    return pos, kv


def parse_instance_spec(text: str, order: Optional[str] = None) -> InstanceSpec:
    """Grammar (documented in the README):

    - ``iid(<dist>,n=N)``   N i.i.d. draws from one law
    - ``product(<dist>*C,<dist>*C,...)``  independent, one option per factor
    - ``fixed(v1,v2,...)``  explicit values, as-given order
    - ``geometric(k=K[,base=B])``  value j repeated B**(K-j) times, shuffled
    - ``genorder(k=K)``     the generated-order construction (base 4)
    - ``truncsec(n=N)``     i.i.d. min(Exp(1), ln(N)/2), shuffled
    - ``file:<path>``       instance JSON dumped by this tool
    """
    text = text.strip()
    if text.startswith("file:"):
        inst = instances.Instance.from_json(open(text[5:]).read())
        spec = InstanceSpec(
            kind="fixed", n=inst.n, values=inst.values, order=inst.order, text=text
        )
        if order:
            spec.order = order
        return spec
    m = text.split("(", 1)
    if len(m) != 2 or not text.endswith(")"):
        raise ConfigError(f"bad instance spec: {text!r}")
    name, inner = m[0].strip(), m[1][:-1]
    pos, kv = _kv(_split_args(inner))
    try:
        if name == "iid":
            n = int(kv["n"])
            dist = parse_distribution(pos[0])
            spec = InstanceSpec(
                kind="iid", n=n, dists=[dist], order=order or instances.ORDER_FIXED, text=text
            )
        elif name == "product":
            dists: List[Distribution] = []
            for p in pos:
                if "*" in p.rsplit(")", 1)[-1]:
                    dspec, cnt = p.rsplit("*", 1)
                    dists.extend([parse_distribution(dspec)] * int(cnt))
                else:
                    dists.append(parse_distribution(p))
            spec = InstanceSpec(
                kind="product", n=len(dists), dists=dists,
                order=order or instances.ORDER_FIXED, text=text,
            )
        elif name == "fixed":
            values = np.array([float(p) for p in pos], dtype=np.float64)
            spec = InstanceSpec(
                kind="fixed", n=len(values), values=values,
                order=order or instances.ORDER_FIXED, text=text,
            )
        elif name == "geometric":
            k = int(kv["k"])
            base = int(kv.get("base", "2"))
            values = instances.power_counts_values(k, base)
            spec = InstanceSpec(
                kind="geometric", n=len(values), values=values,
                order=order or instances.ORDER_UNIFORM,
                params={"k": k, "base": base}, text=text,
            )
        elif name == "genorder":
            k = int(kv["k"])
            n = (4 ** (k + 1) - 1) // 3
            spec = InstanceSpec(
                kind="genorder", n=n, order=instances.ORDER_GENERATED,
                params={"k": k}, text=text,
            )
            if order and order != instances.ORDER_GENERATED:
                raise ConfigError("genorder instances fix their own order")
        elif name == "truncsec":
            n = int(kv["n"])
            spec = InstanceSpec(
                kind="truncsec", n=n, order=instances.ORDER_UNIFORM,
                params={"cap": math.log(n) / 2.0}, text=text,
            )
        else:
            raise ConfigError(f"unknown instance kind {name!r}")
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad instance spec {text!r}: {exc}") from exc
    return spec


_DIST_CODES = {"exp": 0, "uniform": 1, "truncexp": 2, "degenerate": 3}


def _dist_code(d: Distribution) -> Optional[Tuple[int, float, float]]:
    """Kernel encoding of a law, or None when only the engine can sample it."""
    from . import distributions as dm

    if isinstance(d, dm.Exponential):
        return 0, d.rate, 0.0
    if isinstance(d, dm.UniformInterval):
        return 1, d.a, d.b
    if isinstance(d, dm.TruncatedExponential):
        return 2, d.cap, 0.0
    if isinstance(d, dm.Degenerate):
        return 3, d.values[0], 0.0
    return None


# ---------------------------------------------------------------------------
# strategy specs

_INFO_RANK = {"none": 1, "optimum": 2, "full": 3}


@dataclass
class StrategySpec:
    name: str
    requires: str  # none | optimum | full | dists | samples
    hint: Optional[float] = None
    theta: Optional[float] = None
    text: str = ""


def parse_strategy_spec(text: str) -> StrategySpec:
    """Strategy strings: threshold:<x>, iid-first, iid-second, iid-mix,
    iid-refined, general, single-sample, sec-full, sec-opt, sec-hint:<x>,
    sec-noinfo, sec-arb[:<x>], sec-gap, baseline-uniform."""
    text = text.strip()
    name, _, arg = text.partition(":")
    try:
        if name == "threshold":
            return StrategySpec("threshold", "none", theta=float(arg), text=text)
        if name in ("iid-first", "iid-second", "iid-mix", "iid-refined", "general"):
            return StrategySpec(name, "dists", text=text)
        if name == "single-sample":
            return StrategySpec(name, "samples", text=text)
        if name == "sec-full":
            return StrategySpec(name, "full", text=text)
        if name == "sec-opt":
            return StrategySpec(name, "optimum", text=text)
        if name == "sec-hint":
            return StrategySpec(name, "none", hint=float(arg), text=text)
        if name == "sec-noinfo":
            return StrategySpec(name, "none", text=text)
        if name == "sec-arb":
            hint = float(arg) if arg else None
            return StrategySpec(
                name, "none" if arg else "optimum", hint=hint, text=text
            )
        if name == "sec-gap":
            return StrategySpec(name, "full", text=text)
        if name == "baseline-uniform":
            return StrategySpec(name, "none", text=text)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad strategy spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown strategy {text!r}")


def check_regime(strategy: StrategySpec, inst: InstanceSpec, info: Optional[str]) -> None:
    """Reject strategy/instance/regime mismatches before running anything."""
    if strategy.requires in ("dists", "samples"):
        if not inst.is_prophet:
            raise ConfigError(
                f"{strategy.text!r} needs distribution information; "
                f"instance {inst.text!r} provides none"
            )
        return
    if info is not None:
        if info not in _INFO_RANK:
            raise ConfigError(f"unknown information regime {info!r}")
        need = _INFO_RANK.get(strategy.requires, 1)
        if _INFO_RANK[info] < need:
            raise ConfigError(
                f"{strategy.text!r} requires {strategy.requires} information "
                f"but the run provides only {info!r}"
            )


def build_strategy(
    spec: StrategySpec, inst: instances.Instance, inst_spec: InstanceSpec, srng: Stream,
    samples: Optional[Sequence[float]] = None,
) -> engine.Strategy:
    """Instantiate a fresh strategy for one trial."""
    n = inst.n
    if spec.name == "threshold":
        return prophet_algs.SingleThreshold(spec.theta)
    if spec.name == "iid-first":
        return prophet_algs.iid_first_algorithm(inst_spec.dists[0], n)
    if spec.name == "iid-second":
        return prophet_algs.iid_second_algorithm(inst_spec.dists[0], n, srng)
    if spec.name == "iid-mix":
        return prophet_algs.iid_mixture(inst_spec.dists[0], n, srng)
    if spec.name == "iid-refined":
        return prophet_algs.iid_refined(inst_spec.dists[0], n, srng)
    if spec.name == "general":
        dists = inst_spec.dists if inst_spec.kind == "product" else inst_spec.dists * n
        if len(dists) != n:
            dists = list(inst_spec.dists[0] for _ in range(n))
        return prophet_algs.general_prophet(dists, srng)
    if spec.name == "single-sample":
        return prophet_algs.single_sample_prophet(samples, n, srng)
    if spec.name == "sec-full":
        return secretary_algs.warmup_full_info(inst.values.tolist())
    if spec.name == "sec-opt":
        return secretary_algs.optimum_info_random_order(inst.benchmark, n, srng)
    if spec.name == "sec-hint":
        return secretary_algs.hinted_random_order(spec.hint, n, srng)
    if spec.name == "sec-noinfo":
        return secretary_algs.no_info_random_order(n, srng)
    if spec.name == "sec-arb":
        hint = spec.hint if spec.hint is not None else inst.benchmark
        return secretary_algs.arbitrary_order_hinted(hint, n, srng)
    if spec.name == "sec-gap":
        return secretary_algs.gap_algorithm(inst.values.tolist(), n)
    if spec.name == "baseline-uniform":
        return secretary_algs.baseline_uniform(n, srng)
    raise ConfigError(f"unknown strategy {spec.name!r}")


def engine_payload(spec: StrategySpec, inst: instances.Instance):
    if spec.requires == "full":
        return tuple(sorted(inst.values.tolist()))
    if spec.requires == "optimum":
        return inst.benchmark
    return None


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass
class ExperimentConfig:
    strategy: str
    instance: str
    order: Optional[str] = None
    info: Optional[str] = None
    trials: int = 10_000
    master_seed: int = 1
    workers: int = 1
    fast: bool = False

    @staticmethod
    def from_file(path: str) -> "ExperimentConfig":
        text = open(path, "rb").read()
        if path.endswith(".toml"):
            try:
                import tomllib  # py311+
            except ImportError:
                import tomli as tomllib
            obj = tomllib.loads(text.decode())
        else:
            obj = json.loads(text)
        return ExperimentConfig(**obj)


@dataclass
class Report:
    strategy: str
    instance: str
    order: str
    n: int
    trials: int
    master_seed: int
    mean_score: float
    std_error: float
    benchmark: float
    ratio: Optional[float]
    extra: Dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self, deterministic: bool = True) -> Dict:
        d = {
            "strategy": self.strategy,
            "instance": self.instance,
            "order": self.order,
            "n": self.n,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "mean_score": self.mean_score,
            "std_error": self.std_error,
            "benchmark": self.benchmark,
            "ratio": self.ratio,
            "extra": self.extra,
        }
        if not deterministic:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, deterministic: bool = True) -> str:
        return json.dumps(self.to_dict(deterministic), sort_keys=True)


def _summarize(
    cfg: ExperimentConfig, inst_spec: InstanceSpec,
    scores: np.ndarray, maxes: np.ndarray, extra: Dict, elapsed: float,
) -> Report:
    mean = float(scores.mean())
    se = float(scores.std(ddof=1) / math.sqrt(len(scores))) if len(scores) > 1 else 0.0
    benchmark = float(maxes.mean())
    ratio = benchmark / mean if mean > 0 else None
    return Report(
        strategy=cfg.strategy,
        instance=cfg.instance,
        order=inst_spec.order,
        n=inst_spec.n,
        trials=cfg.trials,
        master_seed=cfg.master_seed,
        mean_score=mean,
        std_error=se,
        benchmark=benchmark,
        ratio=ratio,
        extra=extra,
        wall_time=elapsed,
    )


# ---------------------------------------------------------------------------
# kernel dispatch


def _chunked(total: int, workers: int, fn: Callable[[int, int], Tuple]):
    """Run fn(t0, count) over fixed chunks, threaded; splice outputs in order."""
    bounds = [(t0, min(CHUNK_TRIALS, total - t0)) for t0 in range(0, total, CHUNK_TRIALS)]
    if workers <= 1 or len(bounds) == 1:
        parts = [fn(t0, c) for t0, c in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: fn(b[0], b[1]), bounds))
    arrays = zip(*parts)
    return tuple(np.concatenate(a) for a in arrays)


def _run_kernel(cfg: ExperimentConfig, strat: StrategySpec, inst: InstanceSpec):
    """Dispatch to a compiled kernel; None when no kernel covers the combo."""
    master = np.uint64(cfg.master_seed & ((1 << 64) - 1))
    trials = cfg.trials
    workers = max(1, cfg.workers)
    empty = np.empty(0, dtype=np.float64)

    if inst.kind == "iid" and strat.name in (
        "iid-first", "iid-second", "iid-mix", "iid-refined", "threshold",
    ):
        code = _dist_code(inst.dists[0])
        if code is None:
            return None
        c, p1, p2 = code
        dist, n = inst.dists[0], inst.n
        if strat.name == "iid-first":
            thetas = np.array([dist.upper_quantile(1.0 / n)])
            cum = np.array([1.0])
            mix_first, theta_first = False, 0.0
        elif strat.name == "threshold":
            thetas = np.array([strat.theta])
            cum = np.array([1.0])
            mix_first, theta_first = False, 0.0
        elif strat.name == "iid-second":
            _, th = prophet_algs.quantile_grid(dist, n)
            thetas = np.array(th)
            cum = np.array(prophet_algs._uniform_cum_weights(len(th)))
            mix_first, theta_first = False, 0.0
        elif strat.name == "iid-mix":
            _, th = prophet_algs.quantile_grid(dist, n)
            thetas = np.array(th)
            cum = np.array(prophet_algs._uniform_cum_weights(len(th)))
            mix_first, theta_first = True, dist.upper_quantile(1.0 / n)
        else:  # iid-refined
            alphas, weights, _ = prophet_algs.refined_weights(n)
            thetas = np.array([dist.upper_quantile(a) for a in alphas])
            cum = np.cumsum(weights)
            cum[-1] = 1.0
            mix_first, theta_first = False, 0.0

        def fn(t0, count):
            return _kernels.iid_table_trials(
                c, p1, p2, n, thetas, cum, mix_first, theta_first, count, t0, master
            )

        scores, maxes, accepted = _chunked(trials, workers, fn)
        acc = accepted.astype(bool)
        extra = {"accept_rate": float(acc.mean())}
        if acc.any():
            cond = scores[acc] + 0.0
            extra["cond_score_mean"] = float(cond.mean())
            extra["cond_score_se"] = float(
                cond.std(ddof=1) / math.sqrt(len(cond))
            ) if len(cond) > 1 else 0.0
        return scores, maxes, extra

    if inst.kind == "genorder" and strat.name == "threshold":
        k = inst.params["k"]

        def fn(t0, count):
            out = _kernels.genorder_threshold_trials(
                k, strat.theta, count, t0, master, 10**9
            )
            return (out,)

        (scores,) = _chunked(trials, workers, fn)
        if np.any(scores < 0):
            raise ArithmeticError("generator draw cap exceeded")
        maxes = np.full(trials, float(k))
        return scores, maxes, {}

    if inst.kind == "product" and strat.name == "single-sample":
        codes = []
        for d in inst.dists:
            cd = _dist_code(d)
            if cd is None:
                return None
            codes.append(cd)
        carr = np.array([c for c, _, _ in codes], dtype=np.int64)
        p1 = np.array([a for _, a, _ in codes])
        p2 = np.array([b for _, _, b in codes])
        lo, hi = -math.inf, math.inf  # range counting handled by verify

        def fn(t0, count):
            return _kernels.single_sample_trials(
                carr, p1, p2, inst.n, lo, hi, count, t0, master
            )

        scores, maxes, in_range, accepted = _chunked(trials, workers, fn)
        return scores, maxes, {"accept_rate": float(accepted.mean())}

    # secretary kernels: fixed-multiset or per-trial i.i.d. values
    if inst.kind in ("fixed", "geometric"):
        fixed = inst.values
        gen_code, p1, p2 = -1, 0.0, 0.0
    elif inst.kind == "truncsec":
        fixed = empty
        gen_code, p1, p2 = 2, inst.params["cap"], 0.0
    elif inst.kind == "iid":
        cd = _dist_code(inst.dists[0])
        if cd is None:
            return None
        fixed = empty
        gen_code, p1, p2 = cd
    else:
        return None
    n = inst.n
    shuffle = inst.order == instances.ORDER_UNIFORM

    if strat.name in ("threshold", "sec-opt", "sec-hint"):
        if strat.name == "threshold":
            thetas, cum = np.array([strat.theta]), np.array([1.0])
        else:
            ref = float(fixed.max()) if strat.name == "sec-opt" else strat.hint
            if strat.name == "sec-opt" and inst.kind not in ("fixed", "geometric"):
                return None  # per-trial maximum needs the engine path
            k = secretary_algs.bucket_count_random_order(n)
            thetas = np.array([(j - 1) / k * ref for j in range(1, k)])
            cum = np.array(prophet_algs._uniform_cum_weights(k - 1))

        def fn(t0, count):
            return _kernels.secretary_table_trials(
                fixed, gen_code, p1, p2, n, shuffle, thetas, cum, count, t0, master
            )

        scores, maxes = _chunked(trials, workers, fn)
        return scores, maxes, {}

    if strat.name == "sec-full":
        def fn(t0, count):
            return _kernels.warmup_full_trials(
                fixed, gen_code, p1, p2, n, shuffle, count, t0, master
            )

        scores, maxes = _chunked(trials, workers, fn)
        return scores, maxes, {}

    if strat.name == "sec-noinfo":
        def fn(t0, count):
            return _kernels.noinfo_trials(
                fixed, gen_code, p1, p2, n, shuffle, count, t0, master
            )

        scores, maxes = _chunked(trials, workers, fn)
        return scores, maxes, {}

    if strat.name == "sec-gap":
        k_alg = secretary_algs.gap_algorithm_k(n)

        def fn(t0, count):
            return _kernels.gap_trials(
                fixed, gen_code, p1, p2, n, shuffle, k_alg, count, t0, master
            )

        scores, maxes = _chunked(trials, workers, fn)
        return scores, maxes, {"k_alg": k_alg}

    if strat.name == "sec-arb":
        hint_mode = 0 if strat.hint is not None else 1
        hint_value = strat.hint if strat.hint is not None else 0.0

        def fn(t0, count):
            return _kernels.arb_hint_trials(
                fixed, gen_code, p1, p2, n, shuffle, hint_mode, hint_value,
                count, t0, master,
            )

        scores, maxes = _chunked(trials, workers, fn)
        return scores, maxes, {}

    if strat.name == "baseline-uniform":
        def fn(t0, count):
            return _kernels.uniform_pick_trials(
                fixed, gen_code, p1, p2, n, shuffle, count, t0, master
            )

        scores, maxes = _chunked(trials, workers, fn)
        return scores, maxes, {}

    return None


def _run_engine(cfg: ExperimentConfig, strat: StrategySpec, inst_spec: InstanceSpec):
    """Reference path: one object-engine game per trial."""
    scores = np.empty(cfg.trials)
    maxes = np.empty(cfg.trials)
    accepted = np.zeros(cfg.trials, dtype=bool)
    for t in range(cfg.trials):
        vrng = Stream(trial_seed(cfg.master_seed, t, 0))
        srng = Stream(trial_seed(cfg.master_seed, t, 1))
        inst = inst_spec.build(vrng)
        samples = None
        if strat.requires == "samples":
            samples = [d.sample(vrng) for d in _option_dists(inst_spec)]
        strategy = build_strategy(strat, inst, inst_spec, srng, samples=samples)
        res = engine.play(inst, strategy, vrng, payload=engine_payload(strat, inst))
        scores[t] = res.score
        maxes[t] = inst.benchmark
        accepted[t] = res.accepted_index is not None
    extra = {"accept_rate": float(accepted.mean()), "path": "engine"}
    if accepted.any():
        cond = scores[accepted]
        extra["cond_score_mean"] = float(cond.mean())
    return scores, maxes, extra


def _option_dists(inst_spec: InstanceSpec) -> List[Distribution]:
    if inst_spec.kind == "iid":
        return [inst_spec.dists[0]] * inst_spec.n
    if inst_spec.kind == "product":
        return list(inst_spec.dists)
    raise ConfigError("instance has no per-option distributions")


def run(cfg: ExperimentConfig, force_engine: bool = False) -> Report:
    """Execute one experiment and aggregate into a Report."""
    strat = parse_strategy_spec(cfg.strategy)
    inst_spec = parse_instance_spec(cfg.instance, order=cfg.order)
    check_regime(strat, inst_spec, cfg.info)
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    start = time.perf_counter()
    out = None if force_engine else _run_kernel(cfg, strat, inst_spec)
    if out is None:
        out = _run_engine(cfg, strat, inst_spec)
    scores, maxes, extra = out
    elapsed = time.perf_counter() - start
    return _summarize(cfg, inst_spec, scores, maxes, extra, elapsed)


def sweep(cfg: ExperimentConfig, n_list: Sequence[int]) -> List[Report]:
    """One report per n; the instance spec must contain an ``{n}`` slot."""
    if not n_list:
        raise ConfigError("n_list must be nonempty")
    if list(n_list) != sorted(n_list):
        raise ConfigError("n_list must be ascending")
    if "{n}" not in cfg.instance:
        raise ConfigError("sweep instance spec needs an {n} placeholder")
    reports = []
    for n in n_list:
        sub = ExperimentConfig(
            strategy=cfg.strategy,
            instance=cfg.instance.replace("{n}", str(n)),
            order=cfg.order,
            info=cfg.info,
            trials=cfg.trials,
            master_seed=cfg.master_seed,
            workers=cfg.workers,
            fast=cfg.fast,
        )
        try:
            reports.append(run(sub))
        except Exception as exc:  # record the failure, keep sweeping
            reports.append(
                Report(
                    strategy=cfg.strategy, instance=sub.instance, order="",
                    n=n, trials=cfg.trials, master_seed=cfg.master_seed,
                    mean_score=float("nan"), std_error=float("nan"),
                    benchmark=float("nan"), ratio=None,
                    extra={"error": str(exc)},
                )
            )
    return reports


def sweep_csv(reports: Sequence[Report]) -> str:
    lines = ["n,mean,se,benchmark,ratio"]
    for r in reports:
        ratio = "" if r.ratio is None else repr(r.ratio)
        lines.append(f"{r.n},{r.mean_score!r},{r.std_error!r},{r.benchmark!r},{ratio}")
    return "\n".join(lines) + "\n"

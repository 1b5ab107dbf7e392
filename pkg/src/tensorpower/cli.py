"""Command-line harness: instance generation, decomposition, sweeps, planning.

Every subcommand is deterministic for a fixed config and seed; outputs carry
no timestamps, so identical invocations produce byte-identical files.  Exit
codes: 0 success, 1 invariant failure, 2 extraction failure, 3 planning
infeasible, 4 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import decompose, geometry, landscape, tensor_core
from .errors import ExtractionFailureError, NoFeasibleRestartError, StalledDescentError

COMPONENT_MODELS = ("orthonormal", "gaussian-unit", "explicit-file")
DEFAULT_ETA = 0.1
# The restart-count side conditions never hold below about e^239 draws, so a
# useful planning cap has to sit far beyond any executable count.
DEFAULT_L_MAX = 2**4096
# Largest restart count cmd_decompose will actually execute.
RUNNABLE_L_CAP = 10**6
# Measured incoherence feeds the iteration-count formula, which blows up as
# tau -> 0; exactly orthogonal inputs are planned as if tau were this value.
TAU_PLANNING_FLOOR = 1e-3

SWEEP_COLUMNS = (
    "seed",
    "d",
    "k",
    "tau",
    "delta",
    "kappa",
    "point_kind",
    "gradient_norm",
    "min_eig",
    "nearest_index",
    "error",
    "bound",
    "within",
)


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _bool_str(flag: bool) -> str:
    return "true" if flag else "false"


@dataclass(frozen=True)
class ExperimentConfig:
    """Run parameters shared by the generation and decomposition commands."""

    d: int
    k: int
    seed: int
    weight_range: tuple = (1.0, 1.25)
    component_model: str = "gaussian-unit"
    L: int | None = None
    iters: int | None = None
    eta: float = DEFAULT_ETA
    l_max: int = DEFAULT_L_MAX

    def __post_init__(self):
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be positive integers")
        lo, hi = self.weight_range
        if not (0.0 < lo <= hi):
            raise ValueError("weight_range must satisfy 0 < lo <= hi")
        if self.component_model not in COMPONENT_MODELS:
            raise ValueError(
                f"component_model must be one of {COMPONENT_MODELS}, "
                f"got {self.component_model!r}"
            )
        if self.L is not None and self.L < 1:
            raise ValueError("L must be positive when given")
        if self.iters is not None and self.iters < 1:
            raise ValueError("iters must be positive when given")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if self.l_max < 2:
            raise ValueError("l_max must be at least 2")

    @property
    def kappa_target(self) -> float:
        lo, hi = self.weight_range
        return hi / lo

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {
            "d",
            "k",
            "seed",
            "weight_range",
            "component_model",
            "L",
            "iters",
            "eta",
            "l_max",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        for field in ("d", "k", "seed"):
            if field not in raw:
                raise ValueError(f"config is missing required field {field!r}")
        kwargs = dict(raw)
        if "weight_range" in kwargs:
            wr = kwargs["weight_range"]
            if not (isinstance(wr, (list, tuple)) and len(wr) == 2):
                raise ValueError("weight_range must be a pair [lo, hi]")
            kwargs["weight_range"] = (float(wr[0]), float(wr[1]))
        return cls(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config file must hold a JSON object")
    return ExperimentConfig.from_dict(raw)


def _config_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _start_vector(d: int, seed: int, index: int) -> np.ndarray:
    seq = np.random.SeedSequence(seed, spawn_key=(index,))
    rng = np.random.Generator(np.random.Philox(seq))
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def generate_components(config: ExperimentConfig) -> tensor_core.ComponentSet:
    """Draw a component set per the config's model (not explicit-file)."""
    if config.component_model == "explicit-file":
        raise ValueError("explicit-file model needs a --components path")
    rng = _config_rng(config.seed)
    if config.component_model == "orthonormal":
        a = rng.standard_normal((config.d, config.k))
        q, r = np.linalg.qr(a)
        diag = np.diag(r)
        signs = np.where(diag < 0.0, -1.0, 1.0)
        vectors = (q * signs).T
    else:
        raw = rng.standard_normal((config.k, config.d))
        vectors = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    lo, hi = config.weight_range
    weights = rng.uniform(lo, hi, size=config.k)
    return tensor_core.ComponentSet(vectors=vectors, weights=weights)


def _canonicalized(components: tensor_core.ComponentSet) -> tensor_core.ComponentSet:
    vectors = components.vectors / np.linalg.norm(components.vectors, axis=1, keepdims=True)
    return tensor_core.ComponentSet(vectors=vectors, weights=components.weights)


def load_components(path: str) -> tensor_core.ComponentSet:
    with open(path, "r", encoding="utf-8") as fh:
        return tensor_core.ComponentSet.loads(fh.read())


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def cmd_gen(args) -> int:
    config = _load_config_with_seed(args)
    if config.component_model == "explicit-file":
        if args.components is None:
            raise ValueError("explicit-file model needs --components <path>")
        components = _canonicalized(load_components(args.components))
        if components.d != config.d or components.k != config.k:
            raise ValueError(
                f"components file is d={components.d}, k={components.k} but the "
                f"config asks for d={config.d}, k={config.k}"
            )
    else:
        components = generate_components(config)
    _write_text(args.out, components.dumps())
    print(geometry.conditioning_report(components).dumps())
    return 0


def _plan_count(config: ExperimentConfig, tau: float, d: int, k: int) -> int:
    if config.L is not None:
        return config.L
    plan = decompose.plan_restarts(config.eta / k, tau, d, k, config.l_max)
    if plan.L > RUNNABLE_L_CAP:
        raise ValueError(
            f"planned restart count (~2**{plan.L.bit_length() - 1}) is far past "
            f"what can run; set L explicitly in the config"
        )
    return plan.L


def _iteration_budget(config: ExperimentConfig, tau: float, k: int) -> int:
    if config.iters is not None:
        return config.iters
    return decompose.default_iteration_count(k, max(tau, TAU_PLANNING_FLOOR))


def cmd_decompose(args) -> int:
    config = _load_config_with_seed(args)
    truth = load_components(args.components)
    t = tensor_core.build_tensor(truth)
    tau = geometry.measure_incoherence(truth)
    iters = _iteration_budget(config, tau, truth.k)
    L = _plan_count(config, tau, truth.d, truth.k)
    trace_rows: list | None = [] if args.trace else None
    extracted = decompose.tpmr(
        t,
        iters,
        L,
        truth.k,
        config.seed,
        truth=truth if args.trace else None,
        trace=trace_rows,
    )
    report = decompose.match_components(extracted, truth)
    _write_text(args.out, report.dumps())
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("round", "restart", "iteration", "lambda", "ratio"))
            for round_index, restart, iteration, lam, ratio in trace_rows:
                writer.writerow(
                    (round_index, restart, iteration, _g17(lam), _g17(ratio))
                )
    return 0 if report.all_within_bound else 1


def cmd_landscape(args) -> int:
    config = _load_config_with_seed(args)
    truth = load_components(args.components)
    t = tensor_core.build_tensor(truth)
    conditioning = geometry.conditioning_report(truth)
    rows = []
    for start in range(args.n_starts):
        w0 = _start_vector(truth.d, config.seed, start)
        try:
            point, _trace = landscape.manifold_gradient_descent(
                t, w0, step=args.step, max_iters=args.max_iters
            )
        except StalledDescentError:
            rows.append(
                (
                    config.seed,
                    truth.d,
                    truth.k,
                    _g17(conditioning.tau),
                    _g17(conditioning.delta),
                    _g17(conditioning.kappa),
                    "stalled",
                    _g17(math.nan),
                    _g17(math.nan),
                    -1,
                    _g17(math.nan),
                    _g17(geometry.noise_floor(truth.k, conditioning.tau, conditioning.kappa)),
                    _bool_str(False),
                )
            )
            continue
        cert = landscape.certify(t, point)
        near = landscape.proximity_check(point, truth)
        rows.append(
            (
                config.seed,
                truth.d,
                truth.k,
                _g17(conditioning.tau),
                _g17(conditioning.delta),
                _g17(conditioning.kappa),
                cert.classification,
                _g17(cert.gradient_norm),
                _g17(cert.min_tangent_eigenvalue),
                near.index,
                _g17(near.error),
                _g17(near.bound),
                _bool_str(near.within),
            )
        )
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows(rows)
    return 0


def cmd_plan(args) -> int:
    if args.components is not None:
        truth = load_components(args.components)
        tau = geometry.measure_incoherence(truth)
        d, k = truth.d, truth.k
    else:
        if args.tau is None or args.d is None or args.k is None:
            raise ValueError("plan needs either --components or all of --tau/--d/--k")
        tau, d, k = args.tau, args.d, args.k
    digits_needed = args.l_max.bit_length() // 3 + 10
    if digits_needed > sys.get_int_max_str_digits():
        sys.set_int_max_str_digits(digits_needed)
    plan = decompose.plan_restarts(args.eta, tau, d, k, args.l_max)
    text = plan.dumps()
    if args.out is not None:
        _write_text(args.out, text)
    else:
        print(text)
    return 0


def _selftest_oracles() -> bool:
    rng = _config_rng(20260819)
    worst = 0.0
    for _ in range(5):
        d = int(rng.integers(2, 7))
        k = int(rng.integers(1, d + 1))
        raw = rng.standard_normal((k, d))
        vectors = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        weights = rng.uniform(0.5, 2.0, size=k)
        comps = tensor_core.ComponentSet(vectors=vectors, weights=weights)
        t = tensor_core.build_tensor(comps)
        dense = tensor_core.to_dense(t)
        for _ in range(20):
            w = rng.standard_normal(d)
            w /= np.linalg.norm(w)
            full_a = tensor_core.contract_full(t, w)
            full_b = dense.contract_full(w)
            scale = max(abs(full_b), 1e-12)
            worst = max(worst, abs(full_a - full_b) / scale)
            vec_a = tensor_core.contract_vector(t, w)
            vec_b = dense.contract_vector(w)
            vscale = max(float(np.linalg.norm(vec_b)), 1e-12)
            worst = max(worst, float(np.linalg.norm(vec_a - vec_b)) / vscale)
    return worst <= 1e-10


def _selftest_derivatives() -> bool:
    rng = _config_rng(715517)
    for _ in range(5):
        d = 6
        k = 3
        raw = rng.standard_normal((k, d))
        vectors = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        comps = tensor_core.ComponentSet(
            vectors=vectors, weights=rng.uniform(0.8, 1.2, size=k)
        )
        t = tensor_core.build_tensor(comps)
        w = rng.standard_normal(d)
        w /= np.linalg.norm(w)
        g = geometry.riemannian_gradient(t, w)
        g_fd = landscape.finite_difference_gradient(t, w, 1e-5)
        scale = max(float(np.linalg.norm(g)), 1e-8)
        if float(np.linalg.norm(g - g_fd)) / scale > 1e-6:
            return False
    return True


def _selftest_certificates() -> bool:
    d = 6
    comps = tensor_core.ComponentSet(vectors=np.eye(d)[:4], weights=np.ones(4))
    t = tensor_core.build_tensor(comps)
    at_basis = landscape.certify(t, np.eye(d)[0])
    if at_basis.classification != "minimum":
        return False
    if abs(at_basis.min_tangent_eigenvalue - 1.0) > 1e-8:
        return False
    mid = (np.eye(d)[0] + np.eye(d)[1]) / math.sqrt(2.0)
    at_mid = landscape.certify(t, mid)
    if at_mid.classification != "saddle":
        return False
    return abs(at_mid.min_tangent_eigenvalue + 1.0) <= 1e-8


def cmd_selftest(args) -> int:
    checks = (
        ("oracle-equivalence", _selftest_oracles),
        ("derivative-agreement", _selftest_derivatives),
        ("certificate-fixtures", _selftest_certificates),
    )
    failures = 0
    for name, check in checks:
        ok = check()
        print(f"selftest {name}: {'pass' if ok else 'FAIL'}")
        if not ok:
            failures += 1
    print(f"selftest: {len(checks) - failures}/{len(checks)} passed")
    return 0 if failures == 0 else 1


def _load_config_with_seed(args) -> ExperimentConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        return replace(config, seed=args.seed)
    return config


class _Parser(argparse.ArgumentParser):
    """Argument errors are bad input, so exit 4 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(4, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tensorpower",
        description=(
            "Decompose fourth-order rank-one-sum tensors by power iteration "
            "with deflation and restarts, and survey their optimization "
            "landscape."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="draw a component set and report conditioning")
    gen.add_argument("--config", required=True, help="experiment config JSON")
    gen.add_argument("--out", required=True, help="component-set JSON destination")
    gen.add_argument("--seed", type=int, default=None, help="override config seed")
    gen.add_argument(
        "--components",
        default=None,
        help="input component-set JSON (explicit-file model only)",
    )
    gen.set_defaults(func=cmd_gen)

    dec = sub.add_parser("decompose", help="run deflation with restarts, score recovery")
    dec.add_argument("--config", required=True, help="experiment config JSON")
    dec.add_argument("--components", required=True, help="reference component-set JSON")
    dec.add_argument("--out", required=True, help="recovery-report JSON destination")
    dec.add_argument("--seed", type=int, default=None, help="override config seed")
    dec.add_argument("--trace", default=None, help="per-iteration trace CSV destination")
    dec.set_defaults(func=cmd_decompose)

    lsc = sub.add_parser("landscape", help="descend from random starts and certify")
    lsc.add_argument("--config", required=True, help="experiment config JSON")
    lsc.add_argument("--components", required=True, help="reference component-set JSON")
    lsc.add_argument("--out", required=True, help="sweep CSV destination")
    lsc.add_argument("--seed", type=int, default=None, help="override config seed")
    lsc.add_argument("--n-starts", type=int, required=True, help="number of starts")
    lsc.add_argument("--step", type=float, default=0.1, help="initial step size")
    lsc.add_argument(
        "--max-iters", type=int, default=1000, help="descent iteration cap per start"
    )
    lsc.set_defaults(func=cmd_landscape)

    plan = sub.add_parser("plan", help="smallest restart count meeting the conditions")
    plan.add_argument("--eta", type=float, default=DEFAULT_ETA, help="failure budget")
    plan.add_argument("--tau", type=float, default=None, help="incoherence bound")
    plan.add_argument("--d", type=int, default=None, help="ambient dimension")
    plan.add_argument("--k", type=int, default=None, help="component count")
    plan.add_argument(
        "--components", default=None, help="measure tau, d, k from this file instead"
    )
    plan.add_argument(
        "--l-max", type=int, default=DEFAULT_L_MAX, help="largest count to consider"
    )
    plan.add_argument("--out", default=None, help="plan JSON destination (else stdout)")
    plan.set_defaults(func=cmd_plan)

    st = sub.add_parser("selftest", help="run built-in oracle and fixture checks")
    st.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExtractionFailureError as exc:
        print(f"tensorpower: extraction failed: {exc}", file=sys.stderr)
        return 2
    except NoFeasibleRestartError as exc:
        print(f"tensorpower: planning infeasible: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"tensorpower: bad input: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: one subcommand per module, JSON or CSV on stdout."""

import argparse
import logging
import sys
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from src.config import LabConfig, RunConfig
from src.errors import LabError, VerificationError
from src.services.dyadic import VSeqVariant, constants_report, lemma_mod_check, v_seq
from src.services.groups import SurfaceGroup, enumerate_reduced_words
from src.services.series import (
    cocycle_residual,
    eval_g,
    eval_h,
    eval_h_plus,
    eval_H_trunc,
    eval_R_trunc,
    holomorphy_gaps,
    holomorphy_summary,
)
from src.tools.covertower import open_all, verify_tower
from src.tools.dynamics import (
    DensityCertificate,
    FurstenbergMap,
    TorusPoint,
    density_certificate,
    r_recursion,
    steer_block,
    torus_distance,
    verify_certificate,
)
from src.tools.measures import (
    FiberMap,
    GraphMeasure,
    TruncatedInvariant,
    birkhoff,
    graph_integrate,
    graph_uniformity,
    krylov_bogolyubov,
    level_set_point,
    log_grid,
    mu_s0_delta,
)
from src.utils.emit import build_header, load_json, parse_dyadic, render_csv, render_json, write_output

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# (result, budgets, csv rows, csv columns)
Outcome = Tuple[Dict[str, Any], Dict[str, Any], List[Dict[str, Any]], List[str]]


class UsageError(LabError, ValueError):
    """Bad command-line usage."""


class LabArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override it")
    common.add_argument("--K", type=int, default=None, help="series cutoff")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--precision-bits", dest="precision_bits", type=int, default=None)
    common.add_argument("--emit", choices=RunConfig.EMIT_FORMATS, default=None)
    common.add_argument("--output", default=None, help="output file (default stdout)")
    common.add_argument("--log-level", dest="log_level", default="WARNING")
    common.add_argument("--workers", type=int, default=None)

    parser = LabArgumentParser(prog="furstenberg-lab", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=LabArgumentParser)

    p = sub.add_parser("constants", parents=[common], help="v_k, alpha and n_k alpha mod 1")
    p.add_argument("--variant", choices=[v.value for v in VSeqVariant], default=None)
    p.add_argument("--lemma-mod", dest="lemma_mod", default=None,
                   help="check y = p/q * alpha over j in [0, --lemma-j]")
    p.add_argument("--lemma-j", dest="lemma_j", type=int, default=None)

    p = sub.add_parser("series", parents=[common], help="evaluate h, h+, h-, g, H or R")
    p.add_argument("--theta", default=None)
    p.add_argument("--kind", choices=["h", "h+", "h-", "g", "H", "R"], default=None)
    p.add_argument("--residual", action="store_true", help="per-term cocycle residual")
    p.add_argument("--alpha-cutoff", dest="alpha_cutoff", type=int, default=None)
    p.add_argument("--holomorphy", action="store_true", help="Cauchy gaps on |z| = 1/2, 1, 2")
    p.add_argument("--variant", choices=[v.value for v in VSeqVariant], default=None)

    p = sub.add_parser("orbit", parents=[common], help="iterates of T in closed form")
    p.add_argument("--start", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--check", action="store_true", help="compare with step composition")

    p = sub.add_parser("steer", parents=[common], help="one steering block T^{m_s}")
    p.add_argument("--start", default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--recursion-j", dest="recursion_j", type=int, default=None)

    p = sub.add_parser("density", parents=[common], help="density certificate")
    p.add_argument("--start", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--verify", default=None, help="re-check a certificate JSON file")

    p = sub.add_parser("measure", parents=[common], help="invariant-measure experiments")
    p.add_argument("mode", choices=["cut", "graph", "birkhoff", "kb"])
    p.add_argument("--s0", default=None, help="turns (0.25) or a unit complex (1j)")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--testfn", default=None)
    p.add_argument("--maps", default=None, help="comma list: rotation, furstenberg, attractor")

    p = sub.add_parser("tower", parents=[common], help="tower of double covers")
    p.add_argument("action", nargs="?", choices=["build", "verify"], default="build")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("--genus", type=int, default=None)
    p.add_argument("--max-word-len", dest="max_word_len", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    return parser


_CORE = ("K", "seed", "precision_bits", "emit", "output")
_NON_OPTIONS = set(_CORE) | {"config", "log_level", "subcommand"}


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then flags."""
    values: Dict[str, Any] = {}
    if args.config:
        values.update(RunConfig.read_file(args.config))
    for key, value in vars(args).items():
        if key in ("config", "log_level", "subcommand"):
            continue
        if value is not None and value is not False:
            values[key] = value
    try:
        config = RunConfig(
            args.subcommand,
            K=int(values.get("K", LabConfig.SERIES_CUTOFF)),
            seed=int(values.get("seed", LabConfig.DEFAULT_SEED)),
            precision_bits=int(values.get("precision_bits", LabConfig.THETA2_PRECISION_BITS)),
            emit=str(values.get("emit", "json")),
            output=values.get("output"),
            options={k: v for k, v in values.items() if k not in _NON_OPTIONS},
        )
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from e
    try:
        config.validate()
    except ValueError as e:
        raise UsageError(str(e)) from e
    return config


def _opt(config: RunConfig, key: str, default: Any, cast: Callable[[Any], Any] = lambda v: v) -> Any:
    value = config.options.get(key)
    if value is None:
        return default
    try:
        return cast(value)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad value for {key}: {value!r}") from e


def _flag(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _parse_s0(value: Any) -> Any:
    text = str(value).strip().replace("i", "j")
    if "j" in text:
        return complex(text)
    return float(text)


def _start(config: RunConfig, key: str = "start") -> TorusPoint:
    text = config.options.get(key)
    if text is None:
        return TorusPoint.origin()
    try:
        return TorusPoint.parse(str(text), config.precision_bits)
    except ValueError as e:
        raise UsageError(str(e)) from e


def run_constants(config: RunConfig) -> Outcome:
    variant = VSeqVariant(_opt(config, "variant", VSeqVariant.STRENGTHENED.value))
    report = constants_report(config.K, variant)
    lemma = _opt(config, "lemma_mod", None)
    if lemma is not None:
        j_max = _opt(config, "lemma_j", 40, int)
        check = lemma_mod_check(Fraction(str(lemma)), range(0, j_max + 1), variant=variant)
        report["lemma_mod"] = {
            "multiplier": str(lemma),
            "dyadic_order": check.dyadic_order,
            "min_distance": str(check.min_distance),
            "zero_from_order": check.zero_from_order,
            "stays_above_threshold": check.stays_above_threshold,
        }
    rows = [{"k": int(k), **item} for k, item in sorted(report["frac_n_alpha"].items(), key=lambda kv: int(kv[0]))]
    columns = ["k", "hex", "float", "tail_bound", "decay_bound_log2", "meets_decay_bound"]
    return report, {"alpha_tail_bound": report["alpha_tail_bound"]}, rows, columns


def run_series(config: RunConfig) -> Outcome:
    theta = parse_dyadic(_opt(config, "theta", "0"), config.precision_bits)
    if _flag(config.options.get("holomorphy", False)):
        variant = VSeqVariant(_opt(config, "variant", VSeqVariant.STRENGTHENED.value))
        gaps = holomorphy_gaps(config.K, variant=variant)
        rows = [
            {"radius": r, "k": g.K, "gap_log2": g.gap_log2, "bound_log2": g.bound_log2, "bound_holds": g.bound_holds}
            for r, entries in gaps.items() for g in entries
        ]
        result = {"variant": variant.value, "gaps": rows, "summary": holomorphy_summary(gaps)}
        return result, {}, rows, ["radius", "k", "gap_log2", "bound_log2", "bound_holds"]
    if _flag(config.options.get("residual", False)):
        residual = cocycle_residual(theta, config.K, _opt(config, "alpha_cutoff", None, int))
        result = residual.to_dict()
        rows = [{"k": k, "residual": v, "predicted": result["predicted"][k]} for k, v in result["per_term"].items()]
        return result, {"alpha_cutoff": residual.alpha_cutoff}, rows, ["k", "residual", "predicted"]

    kind = _opt(config, "kind", "h")
    evaluators = {
        "h": lambda: eval_h(theta, config.K),
        "h+": lambda: eval_h_plus(theta, config.K),
        "h-": lambda: eval_h_plus(theta, config.K, minus=True),
        "g": lambda: eval_g(theta, config.K),
        "H": lambda: eval_H_trunc(theta, config.K),
        "R": lambda: eval_R_trunc(theta, config.K),
    }
    value = evaluators[kind]()
    result = {"kind": kind, "theta_hex": theta.hex(), **value.to_dict()}
    budgets = {"tail_bound": result["tail_bound"], "dropped_terms": result["dropped_terms"]}
    columns = ["kind", "theta_hex", "value_re", "value_im", "tail_bound", "formal_truncation"]
    return result, budgets, [result], columns


def run_orbit(config: RunConfig) -> Outcome:
    fmap = FurstenbergMap(config.K, config.precision_bits)
    p = _start(config)
    n = _opt(config, "n", 1000, int)
    if n < 0:
        raise UsageError("n must be non-negative")
    rows = []
    for m in [0] + (log_grid(n) if n else []):
        q = fmap.iterate_closed(p, m)
        rows.append({"n": str(m), **q.to_dict()})
    result: Dict[str, Any] = {"start": p.to_dict(), "alpha_hex": fmap.alpha.hex(), "points": rows}
    if _flag(config.options.get("check", False)):
        steps = fmap.orbit(p, min(n, 10**4))
        result["max_closed_vs_steps"] = max(
            torus_distance(q, fmap.iterate_closed(p, j)) for j, q in enumerate(steps)
        )
    budgets = {"theta2_rounding": fmap.rounding_budget(max(n, 1))}
    return result, budgets, rows, ["n", "theta1_hex", "theta2_hex", "theta1_f64", "theta2_f64"]


def run_steer(config: RunConfig) -> Outcome:
    fmap = FurstenbergMap(config.K, config.precision_bits)
    s = _opt(config, "s", 2, int)
    result = steer_block(_start(config), s, fmap=fmap).to_dict()
    j = _opt(config, "recursion_j", None, int)
    if j is not None:
        p = _start(config)
        r = p.theta1.mul_pow2(v_seq(s)[s]).to_fraction()
        result["recursion"] = r_recursion(r, s, j, config.K).to_dict()
    return result, {"window": result["window"]}, [result], ["s", "u", "block_steps", "drift", "r", "in_window"]


def run_density(config: RunConfig) -> Outcome:
    fmap = FurstenbergMap(config.K, config.precision_bits)
    path = config.options.get("verify")
    if path:
        cert = DensityCertificate.from_dict(load_json(str(path)))
        ok, distance = verify_certificate(cert, fmap=fmap)
        if not ok:
            raise VerificationError(f"certificate misses target: distance {distance:.6g} > {cert.epsilon}", cert.to_dict())
        result = {"verified": True, "distance": distance, "total_steps": str(cert.total_steps)}
        return result, {}, [result], ["verified", "distance", "total_steps"]
    if config.options.get("target") is None:
        raise UsageError("density needs --target")
    target = _start(config, "target")
    eps = _opt(config, "eps", 0.05, float)
    cert = density_certificate(_start(config), target, eps, fmap=fmap)
    result = cert.to_dict()
    row = {k: result[k] for k in ("strategy", "total_steps", "achieved_distance", "epsilon")}
    return result, {"theta2_rounding": fmap.rounding_budget(2)}, [row], list(row)


def run_measure(config: RunConfig) -> Outcome:
    mode = config.options["mode"]
    workers = _opt(config, "workers", None, int)
    budgets = {"defect_budget": TruncatedInvariant(config.K).defect_budget()}
    if mode == "cut":
        cut = mu_s0_delta(
            _opt(config, "s0", 1.0, _parse_s0), _opt(config, "delta", 0.05, float),
            config.K, _opt(config, "N", 10**6, int), config.seed, workers,
        )
        result = cut.to_dict()
        result["f_range"] = list(cut.f_range())
        return result, budgets, [result], ["s0_turns", "delta", "sampled", "accepted", "acceptance_fraction", "sigma"]
    if mode == "graph":
        gm = GraphMeasure(_opt(config, "s0", 1.0, _parse_s0), config.K)
        testfn = _opt(config, "testfn", "ZETA2")
        value = graph_integrate(gm, testfn)
        result = {"s0_turns": gm.s0, "testfn": testfn, "re": value.real, "im": value.imag,
                  "uniformity_pvalue": graph_uniformity(gm)}
        return result, budgets, [result], ["s0_turns", "testfn", "re", "im", "uniformity_pvalue"]
    if mode == "birkhoff":
        s0 = _opt(config, "s0", 1.0, _parse_s0)
        p = level_set_point(s0, config.K, precision_bits=config.precision_bits)
        res = birkhoff(p, _opt(config, "testfn", "F"), _opt(config, "n", 10**5, int), config.K)
        result = {"start": p.to_dict(), **res.to_dict()}
        rows = [{"n": n, "re": a, "im": b} for n, a, b in zip(result["n"], result["re"], result["im"])]
        return result, budgets, rows, ["n", "re", "im"]

    names = [name.strip() for name in str(_opt(config, "maps", "rotation")).split(",") if name.strip()]
    builders = {"rotation": FiberMap.rotation, "furstenberg": lambda: FiberMap.furstenberg(config.K),
                "attractor": FiberMap.attractor}
    unknown = [name for name in names if name not in builders]
    if unknown:
        raise UsageError(f"unknown maps: {', '.join(unknown)}")
    kb = krylov_bogolyubov([builders[name]() for name in names], _opt(config, "n", 10**5, int), config.seed)
    result = {"maps": names, **kb.to_dict()}
    rows = [{"map": name, "defect": d, "candidate_defect": kb.candidate_defects.get(name)} for name, d in kb.defects.items()]
    return result, {"tolerance": LabConfig.DEFECT_TOLERANCE}, rows, ["map", "defect", "candidate_defect"]


def run_tower(config: RunConfig) -> Outcome:
    action = config.options.get("action", "build")
    if action == "verify":
        path = config.options.get("file")
        if not path:
            raise UsageError("tower verify needs a file")
        report = verify_tower(load_json(str(path)))
        result = report.to_dict()
        return result, {}, result["entries"], ["text", "claimed", "recomputed", "confirmed"]

    genus = _opt(config, "genus", 2, int)
    length = _opt(config, "max_word_len", 2, int)
    depth = _opt(config, "depth", LabConfig.TOWER_MAX_DEPTH, int)
    group = SurfaceGroup(genus)
    words = [w for w in enumerate_reduced_words(group.n_gens, length) if not group.is_trivial(w)]
    tower = open_all(group, words, depth, config.seed)
    verify_tower(tower, workers=_opt(config, "workers", None, int))
    result = tower.to_dict()
    budgets = {"max_depth": depth, "survivors": len(tower.survivors)}
    return result, budgets, result["words"], ["text", "open_level", "closed_lifts"]


HANDLERS: Dict[str, Callable[[RunConfig], Outcome]] = {
    "constants": run_constants,
    "series": run_series,
    "orbit": run_orbit,
    "steer": run_steer,
    "density": run_density,
    "measure": run_measure,
    "tower": run_tower,
}


def run(config: RunConfig) -> int:
    """
    Dispatch a validated configuration and write its output.

    Returns:
        0 on success, 2 when an independent verification fails, 1 on usage errors
    """
    try:
        result, budgets, rows, columns = HANDLERS[config.subcommand](config)
    except VerificationError as e:
        logger.error("verification failed: %s", e)
        return 2
    except (LabError, ValueError) as e:
        logger.error("%s", e)
        return 1
    header = build_header(config, budgets)
    text = render_json(header, result) if config.emit == "json" else render_csv(header, rows, columns)
    write_output(text, config.output)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.getLevelName(str(args.log_level).upper())
    if not isinstance(level, int):
        parser.error(f"unknown log level {args.log_level!r}")
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        config = build_config(args)
    except (LabError, ValueError) as e:
        logger.error("%s", e)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

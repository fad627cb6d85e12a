"""Command line front end.

Exit codes: 0 verified success, 1 verified negative (hypothesis or parameter
failure, failed verification), 2 search budget exhausted, 3 input error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

from .action_graph import image_order, to_dot, validate, word_images
from .base_quotient import BudgetExceeded, search_base_quotient
from .config import ConfigDocument, ConfigError, build_product, group_from_dict, load_config, parse_int_list
from .groups import perm_order
from .omnipotence import (HypothesisError, ProductHom, VerificationError, check_inputs, cyclic_forms,
                          run_pipeline)
from .report import ReportDocument
from .surgery import (SurgeryError, build_delta, cycle_census, plan_surgery, region_adjacency_violations,
                      verify_confinement)

EXIT_OK, EXIT_NEGATIVE, EXIT_BUDGET, EXIT_INPUT = 0, 1, 2, 3
STATUS = {EXIT_OK: "success", EXIT_NEGATIVE: "negative", EXIT_BUDGET: "budget-exceeded", EXIT_INPUT: "input-error"}

logger = logging.getLogger("omniperm")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="omniperm", description="Finite quotients of free products with prescribed element orders.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_dot=False):
        p.add_argument("config", help="flat key = value configuration file")
        p.add_argument("--report", help="write the JSON report here (default: standard output)")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-vertices", type=int)
        p.add_argument("--k-prime", type=int)
        p.add_argument("--girth", type=int, help="girth target")
        p.add_argument("--near-margin", type=int)
        p.add_argument("--paper-constants", action="store_true", default=None,
                       help="large-constant mode: girth 10k, margin k+4, focus order above 10k")
        p.add_argument("--m-range", help="measured m values, e.g. 1-3 or 1,2,4")
        p.add_argument("--parallel", action="store_true", default=None,
                       help="search families concurrently (results still verified; cross-run "
                            "determinism of the chosen families is not guaranteed)")
        if with_dot:
            p.add_argument("--export-dot", metavar="PATH", help="write the graph in DOT format")
        return p

    common(sub.add_parser("check", help="independence hypothesis only"))
    common(sub.add_parser("base", help="search and certify one base quotient"), True)
    s = common(sub.add_parser("surgery", help="build and check one spliced graph"), True)
    s.add_argument("--focus", help="word to splice along (default: the first)")
    s.add_argument("--copies", type=int, default=3, help="number of copies (default 3)")
    o = common(sub.add_parser("omnipotence", help="full pipeline with final verification"))
    o.add_argument("--hom", help="where to store the product permutations (.npz); default next to the report")
    v = sub.add_parser("verify", help="recheck a report and its stored permutations")
    v.add_argument("report_file")
    v.add_argument("--hom", help="permutation file (default: the one named in the report)")
    v.add_argument("--report", help="write the verification report here (default: standard output)")
    e = common(sub.add_parser("export", help="DOT export of a base or spliced graph"))
    e.add_argument("--stage", choices=("base", "surgery"), default="surgery")
    e.add_argument("--focus")
    e.add_argument("--copies", type=int, default=3)
    e.add_argument("--export-dot", metavar="PATH", required=True)
    return ap


def overrides_from(args) -> dict:
    out = {}
    for flag, name in (("seed", "seed"), ("max_vertices", "max_vertices"), ("k_prime", "k_prime"),
                       ("girth", "girth_target"), ("near_margin", "near_margin"),
                       ("paper_constants", "paper_constants"), ("parallel", "parallel")):
        val = getattr(args, flag, None)
        if val is not None:
            out[name] = val
    if getattr(args, "m_range", None):
        try:
            out["m_range"] = parse_int_list(args.m_range)
        except ValueError as e:
            raise ConfigError(f"--m-range: {e}") from None
    return out


# -- subcommands ----------------------------------------------------------------

def cmd_check(cfg: ConfigDocument, args) -> tuple[int, dict]:
    product = cfg.product()
    words = cfg.parsed_words()
    rep = check_inputs(product, list(words.values()), list(words), cfg.params.proposition)
    return (EXIT_OK if rep.passed else EXIT_NEGATIVE), {"hypothesis": rep.to_dict()}


def _base_for(cfg: ConfigDocument, focus: str | None, k_prime: int):
    product = cfg.product()
    words = cfg.parsed_words()
    names = list(words)
    if focus is not None and focus not in words:
        raise ConfigError(f"unknown word {focus!r}", key="--focus")
    focus = focus or names[0]
    cyc = dict(zip(names, cyclic_forms(product, list(words.values()))))
    q = [cyc[focus]] + [cyc[n] for n in names if n != focus and cyc[n]]
    spec = cfg.params.quotient_spec(q, k_prime)
    g, cert = search_base_quotient(product, spec)
    return product, cyc, focus, spec, g, cert


def cmd_base(cfg: ConfigDocument, args) -> tuple[int, dict]:
    k = cfg.params.k_prime or 1
    product, cyc, focus, spec, g, cert = _base_for(cfg, None, k)
    if args.export_dot:
        Path(args.export_dot).write_text(to_dot(g, "base"))
    return EXIT_OK, {"spec": spec.to_dict(product), "certificate": cert.to_dict(),
                     "orders": {n: image_order(g, w) for n, w in cyc.items() if w}}


def _delta(cfg: ConfigDocument, args):
    k = cfg.params.k_prime or 1
    product, cyc, focus, spec, g, cert = _base_for(cfg, args.focus, k)
    if len(cyc[focus]) < 2:
        raise ConfigError(f"word {focus!r} has cyclic length < 2 and cannot be spliced along", key="--focus")
    plan = plan_surgery(g, cyc[focus], k, args.copies, cert)
    return product, cyc, focus, g, cert, plan, build_delta(plan)


def cmd_surgery(cfg: ConfigDocument, args) -> tuple[int, dict]:
    product, cyc, focus, g, cert, plan, d = _delta(cfg, args)
    if args.export_dot:
        Path(args.export_dot).write_text(to_dot(d.graph, "delta"))
    words = {n: (plan.u if n == focus else w) for n, w in cyc.items()}
    confinement, census = {}, {}
    for n, w in words.items():
        if len(w) >= 2:
            confinement[n] = verify_confinement(d, w).to_dict(product)
            census[n] = cycle_census(d, w).to_dict()
    adjacency = region_adjacency_violations(d)
    structure = {"valid": validate(d.graph).ok, "vertices": d.graph.n_vertices,
                 "expected_vertices": plan.m * (g.n_vertices + 1),
                 "spliced_length": d.spliced_length(), "expected_spliced_length": plan.spliced_period * plan.m,
                 "region_adjacency_violations": adjacency}
    ok = (structure["valid"] and structure["vertices"] == structure["expected_vertices"]
          and structure["spliced_length"] == structure["expected_spliced_length"] and not adjacency)
    return (EXIT_OK if ok else EXIT_NEGATIVE), {
        "focus": focus, "rotated_focus": product.format(plan.u), "k_prime": plan.k_prime, "copies": plan.m,
        "base": {"certificate": cert.to_dict(), "order": plan.base_order},
        "markers": plan.markers, "structure": structure,
        "orders": {n: image_order(d.graph, w) for n, w in words.items() if w},
        "confinement": confinement, "census": census}


def cmd_export(cfg: ConfigDocument, args) -> tuple[int, dict]:
    if args.stage == "base":
        k = cfg.params.k_prime or 1
        _, _, _, _, g, cert = _base_for(cfg, args.focus, k)
        Path(args.export_dot).write_text(to_dot(g, "base"))
        return EXIT_OK, {"stage": "base", "vertices": g.n_vertices, "dot": args.export_dot}
    *_, d = _delta(cfg, args)
    Path(args.export_dot).write_text(to_dot(d.graph, "delta"))
    return EXIT_OK, {"stage": "surgery", "vertices": d.graph.n_vertices, "dot": args.export_dot}


def _hom_path(args) -> Path | None:
    if args.hom:
        return Path(args.hom)
    if args.report:
        p = Path(args.report)
        return p.with_name(p.stem + ".hom.npz")
    return None


def cmd_omnipotence(cfg: ConfigDocument, args) -> tuple[int, dict]:
    product = cfg.product()
    words = cfg.parsed_words()
    names = list(words)
    res = run_pipeline(product, list(words.values()), [cfg.targets[n] for n in names], cfg.params, names)
    out = dict(res.report)
    out["mode"] = "proposition" if cfg.params.proposition else "all-elements"
    path = _hom_path(args)
    if path is not None:
        res.hom.save(path, words)
        out["hom"] = {"file": path.name, "words": names}
    return EXIT_OK, out


def verify_report(doc: ReportDocument, hom_path: Path) -> tuple[int, dict]:
    """Recompute every order in the report from the stored permutations alone."""
    cfg = doc.config
    product = build_product({t: group_from_dict(cfg["groups"][t]) for t in ("A", "B")})
    words = {n: product.parse(t) for n, t in cfg["words"].items()}
    res = doc.result
    hom, stored = ProductHom.load(product, hom_path, res.get("components"))
    mismatches = []
    for c, (g, _) in enumerate(hom.components):
        check = validate(g)
        if not check.ok:
            mismatches.append({"component": c, "field": "graph", "witness": check.first().to_dict()})
    for n, w in words.items():
        imgs = stored.get(n)
        if imgs is None or len(imgs) != len(hom.components):
            mismatches.append({"element": n, "field": "images", "reason": "missing stored images"})
            continue
        for c, (g, _) in enumerate(hom.components):
            if not (imgs[c] == word_images(g, w)).all():
                mismatches.append({"element": n, "component": c, "field": "images",
                                   "reason": "stored image differs from the recomputed one"})
    union = hom.union()
    K = res.get("K")
    proposition = res.get("mode") == "proposition"
    rows = res.get("orders", [])
    if [r.get("element") for r in rows] != list(words):
        mismatches.append({"field": "orders", "reason": "orders table does not list the configured elements"})
    recomputed = []
    for i, row in enumerate(rows):
        n = row.get("element")
        if n not in words:
            continue
        w = words[n]
        from_parts = math.lcm(*(perm_order(word_images(g, w)) for g, _ in hom.components))
        explicit = image_order(union, w)
        target = cfg["targets"].get(n)
        recomputed.append({"element": n, "target": target, "order": explicit})
        if row.get("target") != target:
            mismatches.append({"element": n, "field": "target", "reported": row.get("target"), "config": target})
        if explicit != row.get("order") or from_parts != explicit:
            mismatches.append({"element": n, "field": "order", "reported": row.get("order"),
                               "recomputed": explicit, "component_lcm": from_parts})
        if row.get("claimed") != row.get("order"):
            mismatches.append({"element": n, "field": "claimed", "reported": row.get("claimed"),
                               "order": row.get("order")})
        if (not proposition or i == 0) and K is not None and explicit != K * target:
            mismatches.append({"element": n, "field": "K*l", "expected": K * target, "recomputed": explicit})
    return (EXIT_NEGATIVE if mismatches else EXIT_OK), {"K": K, "orders": recomputed, "mismatches": mismatches,
                                                       "checked_components": len(hom.components)}


def cmd_verify(args) -> tuple[int, dict, dict]:
    path = Path(args.report_file)
    try:
        doc = ReportDocument.from_json(path.read_text())
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"cannot read report {path}: {e}") from None
    if doc.command != "omnipotence" or doc.exit_code != EXIT_OK:
        raise ConfigError(f"{path} is not a successful omnipotence report")
    if args.hom:
        hom = Path(args.hom)
    elif "hom" in doc.result:
        hom = path.parent / doc.result["hom"]["file"]
    else:
        raise ConfigError("report names no permutation file; pass --hom")
    if not hom.exists():
        raise ConfigError(f"permutation file {hom} not found")
    try:
        code, result = verify_report(doc, hom)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"malformed report or permutation file: {e}") from None
    result["report"] = str(path.name)
    return code, result, doc.config


COMMANDS = {"check": cmd_check, "base": cmd_base, "surgery": cmd_surgery, "omnipotence": cmd_omnipotence,
            "export": cmd_export}


def run(argv=None) -> tuple[int, ReportDocument]:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    config: dict = {}
    try:
        if args.command == "verify":
            code, result, config = cmd_verify(args)
        else:
            cfg = load_config(args.config, overrides_from(args))
            config = cfg.to_dict()
            code, result = COMMANDS[args.command](cfg, args)
    except (ConfigError, OSError) as e:
        code, result = EXIT_INPUT, {"error": str(e)}
    except HypothesisError as e:
        code, result = EXIT_NEGATIVE, {"error": str(e), "hypothesis": e.report.to_dict()}
    except SurgeryError as e:
        code, result = EXIT_NEGATIVE, {"error": str(e), "diagnostic": e.diagnostic}
    except VerificationError as e:
        code, result = EXIT_NEGATIVE, {"error": str(e), "mismatches": e.mismatches}
    except BudgetExceeded as e:
        code, result = EXIT_BUDGET, {"error": str(e), "best": e.best.to_dict() if e.best else None,
                                     "trace": e.trace}
    doc = ReportDocument(args.command, STATUS[code], code, config, result,
                         {"seconds": round(time.perf_counter() - t0, 3)})
    text = doc.to_json()
    if getattr(args, "report", None):
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    print(doc.render(), file=sys.stderr)
    return code, doc


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""``malign`` command line.

Exit codes: 0 success, 1 regenerated report differs from the original,
2 invalid input or usage, 3 computation budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path
from typing import Sequence

from . import mc, stein
from .aligner import Band, BudgetExceeded, Instance, align_banded, align_exact
from .blocks import DiagonalConfig, check_D_event, check_E_event, decompose_cells
from .experiments import BmConfig, PermConfig, bm_study, perm_study
from .report import RunManifest, dumps, emit_report, make_report, to_jsonable, write_manifest
from .rng import salt, stream
from .scoring import ScoreModel, _parse_params, lcs_indicator, load_distribution, load_model


class UsageError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _resolve_model(spec: str, instance: Instance | None = None) -> ScoreModel:
    name, params = _parse_params(spec)
    if name == "lcs-indicator" and instance is not None:
        # alphabet and arity default to what the instance needs
        k = int(params.get("k", max(2, max(int(s.max()) + 1 for s in instance.sequences if s.size))))
        m = int(params.get("m", instance.m))
        return lcs_indicator(k, m)
    return load_model(spec)


def _load_instance(path: str) -> Instance:
    return Instance.from_json(json.loads(Path(path).read_text()))


def _model_config(args) -> tuple[ScoreModel, mc.SequenceDistribution, dict]:
    model = load_model(args.model)
    dist = load_distribution(args.dist, model)
    return model, dist, {"model": model.describe(), "model_spec": args.model, "probs": dist.probs.tolist()}


def _mc_cfg(args, n_grid=()) -> mc.McConfig:
    return mc.McConfig(seed=args.seed, replicates=args.reps, n_grid=tuple(n_grid), workers=args.workers)


# --- commands: each returns (report document or payload, config, seed) ----------


def cmd_score(args):
    inst = _load_instance(args.instance)
    model = _resolve_model(args.model, inst)
    out: dict = {}
    if args.band:
        vals = _floats(args.band)
        if len(vals) not in (3, 4):
            raise UsageError("--band takes p_lo,p_hi,eps[,v]")
        p_lo, p_hi, eps = vals[:3]
        v = vals[3] if len(vals) == 4 else 0.0
        band = Band.diagonal([p_lo] * (inst.m - 1), [p_hi] * (inst.m - 1), inst.lengths[0], eps, v)
        res, cert = align_banded(inst, model, band)
        out["L"] = res.value
        out["certified"] = cert
    else:
        res = align_exact(inst, model, want_path=args.path)
        out["L"] = res.value
        if args.path:
            out["path"] = [list(t) for t in res.path]
    config = {"command": "score", "model": model.describe(), "instance": inst.to_json(), "band": args.band}
    return out, config, None


def cmd_diag(args):
    inst = _load_instance(args.instance)
    model = _resolve_model(args.model, inst)
    p1 = _floats(args.p1)
    p2 = _floats(args.p2)
    r = inst.m - 1
    p1 = p1 * r if len(p1) == 1 else p1
    p2 = p2 * r if len(p2) == 1 else p2
    cfg = DiagonalConfig(tuple(p1), tuple(p2), args.eps)
    res = align_exact(inst, model, want_path=True)
    decomp = decompose_cells(res.path, inst.lengths, args.v)
    holds_e, frac = check_E_event(decomp, cfg)
    out = {
        "L": res.value,
        "holds_E": holds_e,
        "good_fraction": frac,
        "holds_D": check_D_event(res.path, inst.lengths[0], cfg, args.v),
        "widths": decomp.widths().tolist(),
        "breakpoints": decomp.breakpoints.tolist(),
    }
    config = {"command": "diag", "model": model.describe(), "instance": inst.to_json(), "v": args.v,
              "p1": p1, "p2": p2, "eps": args.eps}
    return out, config, None


def cmd_gamma(args):
    model, dist, base = _model_config(args)
    curve = mc.estimate_gamma_curve(model, dist, _mc_cfg(args, args.n))
    config = {"command": "gamma", **base, "n": args.n, "reps": args.reps, "seed": args.seed}
    doc = make_report("gamma", config, curve.estimates, superadditivity=curve.superadditivity, fit=curve.fit)
    return doc, config, args.seed


def cmd_surface(args):
    model, dist, base = _model_config(args)
    grid = [tuple(_floats(q)) for q in args.q] if args.q else mc.default_q_grid(model.m, args.points)
    rep = mc.estimate_gamma_surface(model, dist, args.n, grid, _mc_cfg(args))
    config = {"command": "surface", **base, "n": args.n, "q": grid, "reps": args.reps, "seed": args.seed}
    doc = make_report(
        "surface", config, rep.estimates, center=rep.center, max_at_center=rep.max_at_center,
        concave=rep.concave, concavity=rep.concavity, symmetric=rep.symmetric, symmetry=rep.symmetry,
    )
    return doc, config, args.seed


def cmd_hoeffding(args):
    model, dist, base = _model_config(args)
    rep = mc.hoeffding_audit(model, dist, args.n, args.t, _mc_cfg(args), args.confidence)
    config = {"command": "hoeffding", **base, "n": args.n, "t": args.t, "reps": args.reps, "seed": args.seed,
              "confidence": args.confidence}
    doc = make_report("hoeffding", config, rep.rows, mean_L=rep.mean_L, violations=rep.violations)
    return doc, config, args.seed


def cmd_clt(args):
    model, dist, base = _model_config(args)
    study = mc.clt_report(model, dist, args.n, _mc_cfg(args), c_star=args.c_star)
    rows = [
        {
            "n": r.n, "var_hat": r.var_hat, "var_per_n": r.var_per_n, "dk": r.dk_hat, "dk_band": r.dk_band,
            "skew": r.skewness, "kurt": r.excess_kurtosis, "mean_L": r.mean_L, "replicates": r.replicates,
            "c_star_check": r.c_star_check, "error": r.error,
        }
        for r in study.rows
    ]
    config = {"command": "clt", **base, "n": args.n, "reps": args.reps, "seed": args.seed, "c_star": args.c_star}
    doc = make_report("clt", config, rows, dk_nonincreasing=study.dk_nonincreasing,
                      var_per_n_changes=study.var_per_n_changes, var_per_n_stable=study.var_per_n_stable)
    return doc, config, args.seed


def cmd_stein(args):
    model, dist, base = _model_config(args)
    config = {"command": "stein", **base, "n": args.n, "mode": args.mode, "samples": args.samples,
              "seed": args.seed}
    if args.bound:
        config.update(outer=args.outer, inner=args.mode)
        rep = stein.bound_report(model, dist, args.n, args.outer, args.samples, seed=args.seed, inner=args.mode,
                                 sigma_reps=args.reps, workers=args.workers)
        return make_report("stein-bound", config, [rep]), config, args.seed
    paired = stein.PairedSample.draw(dist, args.n, stream(args.seed, 0, salt("stein-pair", args.n)))
    if args.mode == "exact":
        est = stein.stein_exact(model, paired)
    else:
        est = stein.stein_sampled(model, paired, args.samples, stream(args.seed, 1, salt("stein-pair", args.n)))
    doc = make_report("stein", config, [est], W=paired.W, W_prime=paired.W_prime)
    return doc, config, args.seed


def cmd_bm(args):
    cfg = BmConfig(args.n, args.mode, args.p, args.seed)
    study = bm_study(cfg, args.reps, args.workers)
    config = {"command": "bm", "n": args.n, "mode": args.mode, "p": args.p, "reps": args.reps, "seed": args.seed}
    return make_report("bm", config, [study]), config, args.seed


def cmd_perm(args):
    cfg = PermConfig(args.n, args.c, args.seed, literal=args.literal)
    study = perm_study(cfg, args.reps, args.workers)
    config = {"command": "perm", "n": args.n, "c": args.c, "reps": args.reps, "seed": args.seed,
              "literal": args.literal}
    return make_report("perm", config, [study]), config, args.seed


def cmd_report(args) -> int:
    """Re-run the command recorded in a manifest and compare the report bytes."""
    man_path = Path(args.manifest)
    man = RunManifest.load(man_path)
    original = man_path.parent / man.report
    argv = _strip_options(man.argv, {"--out": 1, "--csv": 0, "--svg": 0, "--workers": 1})
    if args.workers:
        argv += ["--workers", str(args.workers)]
    with tempfile.TemporaryDirectory() as tmp:
        fresh = Path(tmp) / man.report
        code = main(argv + ["--out", str(fresh)], _manifest=False)
        if code:
            return code
        same = original.exists() and fresh.read_bytes() == original.read_bytes()
    print(json.dumps({"report": str(original), "identical": same}, sort_keys=True))
    return 0 if same or not args.check else 1


def _strip_options(argv: Sequence[str], options: dict[str, int]) -> list[str]:
    out: list[str] = []
    skip = 0
    for tok in argv:
        if skip:
            skip -= 1
            continue
        key = tok.split("=", 1)[0]
        if key in options:
            skip = options[key] if "=" not in tok else 0
            continue
        out.append(tok)
    return out


COMMANDS = {
    "score": cmd_score,
    "diag": cmd_diag,
    "gamma": cmd_gamma,
    "surface": cmd_surface,
    "hoeffding": cmd_hoeffding,
    "clt": cmd_clt,
    "stein": cmd_stein,
    "bm": cmd_bm,
    "perm": cmd_perm,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="malign", description="Optimal alignment scores of random words.")
    sub = p.add_subparsers(dest="command", required=True, metavar="{" + ",".join([*COMMANDS, "report"]) + "}")

    def outputs(sp):
        sp.add_argument("--out", help="write the report here (a manifest is written next to it)")
        sp.add_argument("--csv", action="store_true", help="also write a flat CSV table")
        sp.add_argument("--svg", action="store_true", help="also write a line chart")
        sp.add_argument("--workers", type=int, default=None, help="threads (capped by MALIGN_THREADS)")

    def sampling(sp, reps=1000):
        sp.add_argument("--model", default="lcs-indicator")
        sp.add_argument("--dist", default=None, help='JSON {"probs": [...]}; uniform letters when omitted')
        sp.add_argument("--reps", type=int, default=reps)
        sp.add_argument("--seed", type=int, default=0)
        outputs(sp)

    sp = sub.add_parser("score", help="optimal score of one instance")
    sp.add_argument("--model", default="lcs-indicator")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--path", action="store_true")
    sp.add_argument("--band", help="p_lo,p_hi,eps[,v]: banded solve with exactness certificate")
    outputs(sp)

    sp = sub.add_parser("diag", help="cell widths and diagonal-closeness events of one instance")
    sp.add_argument("--model", default="lcs-indicator")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--v", type=int, required=True)
    sp.add_argument("--p1", required=True, help="lower slope(s), comma separated")
    sp.add_argument("--p2", required=True, help="upper slope(s), comma separated")
    sp.add_argument("--eps", type=float, required=True)
    outputs(sp)

    sp = sub.add_parser("gamma", help="mean score per length over a grid of n")
    sp.add_argument("--n", type=int, nargs="+", required=True)
    sampling(sp)

    sp = sub.add_parser("surface", help="mean score over relative lengths q")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", nargs="*", help="points such as 0.6,1.4 (default: evenly spaced m = 2 grid)")
    sp.add_argument("--points", type=int, default=9)
    sampling(sp)

    sp = sub.add_parser("hoeffding", help="tail frequencies against the concentration bound")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--t", type=float, nargs="+", required=True)
    sp.add_argument("--confidence", type=float, default=0.99)
    sampling(sp)

    sp = sub.add_parser("clt", help="variance growth and Kolmogorov distance to the normal law")
    sp.add_argument("--n", type=int, nargs="+", required=True)
    sp.add_argument("--c-star", type=float, default=None)
    sampling(sp)

    sp = sub.add_parser("stein", help="recombination statistics T, T' or the bound terms")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--mode", choices=["exact", "sampled"], default="sampled")
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--bound", action="store_true", help="estimate the four bound terms instead")
    sp.add_argument("--outer", type=int, default=100)
    # --reps sets the replicate count used for Var(L) in bound mode
    sampling(sp, reps=2000)

    sp = sub.add_parser("bm", help="Bernoulli matching study")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--mode", choices=["dependent", "independent"], default="dependent")
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    outputs(sp)

    sp = sub.add_parser("perm", help="permutation window-score study")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--literal", action="store_true", help="use the constant-at-c=0 formula reading")
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    outputs(sp)

    sp = sub.add_parser("report", help="regenerate a report from its manifest and compare bytes")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--check", action="store_true", help="exit 1 when the bytes differ")
    sp.add_argument("--workers", type=int, default=None)
    return p


def main(argv: Sequence[str] | None = None, _manifest: bool = True) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "report":
            return cmd_report(args)
        t0 = time.perf_counter()
        doc, config, seed = COMMANDS[args.command](args)
        if args.out:
            formats = ["json"] + (["csv"] if args.csv else []) + (["svg"] if args.svg else [])
            if "schema" not in doc:
                doc = make_report(args.command, config, [doc])
            emit_report(doc, args.out, formats)
            if _manifest:
                write_manifest(argv, config, seed, time.perf_counter() - t0, args.out)
        else:
            sys.stdout.write(dumps(doc) if "schema" in doc else json.dumps(to_jsonable(doc), sort_keys=True) + "\n")
        return 0
    except BudgetExceeded as exc:
        print(f"malign: budget exceeded: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, FileNotFoundError, IndexError) as exc:
        print(f"malign: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

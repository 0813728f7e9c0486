"""Command-line entry point.

Subcommands: simulate, exact, gibbs, quench, verify.  Output is
JSON-lines: the first line is a run manifest (full option echo plus
library versions and the seed), the rest are result records.  Reruns
with identical options are byte-identical; FSEP_SEED overrides --seed.
Exit codes: 0 success, 1 usage or spec error, 2 numerical test failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import metadata

import numpy as np

from . import gibbs, stats
from .backend import backend_name, kernels
from .dynamics import (
    Observer,
    cylinder_observer,
    evolve,
    frozen_observer,
    parity_observer,
    region_observer,
)
from .exact import (
    cylinder_prob,
    density,
    enumerate_even_ring,
    ring_cylinder_prob,
    site_marginal,
    stationary_and_detailed_balance,
    transfer_spec,
    transition_matrix,
)
from .lattice import as_exclusion, as_stack, bernoulli_ring, fixed_count_ring
from .rng import RngContext, child_key_array

__all__ = ["main"]

SIGNIFICANCE = 0.01
TV_THRESHOLD = 0.01
DB_TOLERANCE = 1e-10
RATIO_RELTOL = 0.10


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for
    # numerical failures, so remap to 1
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _jsonify(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON-serializable: {type(o)!r}")


def _versions() -> dict[str, str]:
    import platform

    import scipy

    try:
        own = metadata.version("fsep")
    except metadata.PackageNotFoundError:
        own = "0.0.0"
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "fsep": own,
    }


def _emit(args: argparse.Namespace, records: list[dict]) -> None:
    opts = {k: v for k, v in vars(args).items() if k not in ("func", "spec")}
    manifest = {
        "command": args.command,
        "options": opts,
        "versions": _versions(),
        "backend": backend_name(),
    }
    lines = [json.dumps({"manifest": manifest}, sort_keys=True, default=_jsonify)]
    lines.extend(json.dumps(r, sort_keys=True, default=_jsonify) for r in records)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check(test: str, statistic: float, p_value, threshold: float, ok: bool) -> dict:
    return {
        "test": test,
        "statistic": statistic,
        "p_value": p_value,
        "threshold": threshold,
        "pass": bool(ok),
    }


# ---------------------------------------------------------------------------
# initial state / sampler parsing


def _parse_kv(spec: str) -> tuple[str, dict[str, str]]:
    head, _, rest = spec.partition(":")
    kv: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            k, _, v = item.partition("=")
            kv[k.strip()] = v.strip()
    return head, kv


def _initial_config(args, rng: RngContext) -> np.ndarray:
    init = args.init
    if init.startswith("bernoulli:"):
        if args.model != "exclusion":
            raise ValueError("bernoulli: init is for the exclusion model")
        rho = float(init.split(":", 1)[1])
        return bernoulli_ring(args.sites, rho, rng)
    if init.startswith("fixed:"):
        if args.model != "exclusion":
            raise ValueError("fixed: init is for the exclusion model")
        n = int(init.split(":", 1)[1])
        return fixed_count_ring(args.sites, n, rng)
    if init.startswith("gibbs:"):
        if args.model != "stack":
            raise ValueError("gibbs: init is for the stack model")
        _, kv = _parse_kv(init)
        return gibbs.sample_even_gibbs(float(kv["zeta"]), args.sites, rng)
    if args.model == "exclusion":
        return as_exclusion(init)
    return as_stack(init)


def _batch_sampler(state: str, sites: int):
    """State spec -> ((rng, count) -> (count, sites) stack batch)."""
    head, kv = _parse_kv(state)
    if head == "gibbs":
        zeta = float(kv["zeta"])

        def sampler(rng: RngContext, count: int) -> np.ndarray:
            return gibbs.sample_even_gibbs_batch(zeta, sites, rng, count)

        return sampler
    if head == "etis":
        rho_e = 1.0 / (1.0 - float(kv["zeta"])) if "zeta" in kv else float(kv["rho_e"])
        kappa = float(kv.get("kappa", 0.0))
        sigma = gibbs.ParitySource.bernoulli(kappa)

        def sampler(rng: RngContext, count: int) -> np.ndarray:
            return gibbs.sample_etis_batch(rho_e, sigma, sites, rng, count)

        return sampler
    raise ValueError(f"unknown state spec {state!r} (use gibbs:zeta=... or etis:...)")


def _step_stack_batch(batch: np.ndarray, rng: RngContext) -> np.ndarray:
    keys = child_key_array(rng.key, np.arange(batch.shape[0], dtype=np.uint64))
    return kernels.ssm_step_batch(np.ascontiguousarray(batch), keys, 0)


# ---------------------------------------------------------------------------
# subcommand handlers (return exit code)


_OBSERVER_BUILDERS = {
    "frozen": lambda arg, model: frozen_observer(model),
    "regions": lambda arg, model: region_observer(),
    "parity": lambda arg, model: parity_observer(),
    "cylinder": lambda arg, model: cylinder_observer(int(arg)),
}


_MODEL_NAMES = {"exclusion": "fssep", "stack": "ssm"}


def _cmd_simulate(args) -> int:
    rng = RngContext(args.seed)
    model = _MODEL_NAMES[args.model]
    cfg = _initial_config(args, rng.child(0))
    observers: list[Observer] = []
    for spec in args.observer or []:
        name, _, arg = spec.partition(":")
        if name not in _OBSERVER_BUILDERS:
            raise ValueError(f"unknown observer {name!r}")
        observers.append(_OBSERVER_BUILDERS[name](arg, model))
    summary = evolve(model, cfg, args.steps, rng.child(1), observers, every=args.every)
    records = list(summary.records)
    records.append({"final": summary.final.tolist(), "steps": summary.steps})
    _emit(args, records)
    return 0


def _cmd_exact(args) -> int:
    records: list[dict] = []
    code = 0
    if args.what == "ring":
        model = transition_matrix(enumerate_even_ring(args.sites, args.particles))
        res = stationary_and_detailed_balance(model)
        records.append(
            {
                "states": model.nstates,
                "residual_detailed_balance": res.residual_db,
                "residual_stationary": res.residual_stationary,
                "residual_closed_form": res.residual_closed,
                "irreducible": res.irreducible,
            }
        )
        for s, p, pc in zip(model.states, res.pi, res.pi_closed):
            records.append({"state": list(map(int, s)), "pi": float(p), "pi_closed": float(pc)})
    else:
        spec = transfer_spec(args.zeta, args.max_height)
        marg = site_marginal(spec)
        rec = {
            "zeta": args.zeta,
            "lambda1": spec.lambda1,
            "lambda2": spec.lambda2,
            "density": density(args.zeta),
            "site_marginal": {str(2 * i): float(p) for i, p in enumerate(marg[:8])},
        }
        records.append(rec)
        if args.word:
            word = tuple(int(x) for x in args.word.split(","))
            out = {"word": list(word), "prob": cylinder_prob(spec, word)}
            if args.sites:
                out["ring_prob"] = ring_cylinder_prob(spec, word, args.sites)
            records.append(out)
    _emit(args, records)
    return code


def _cmd_gibbs(args) -> int:
    rng = RngContext(args.seed)
    if args.count * args.sites > 200_000_000:
        raise ValueError("count*sites too large; reduce the request")
    if args.sigma:
        head, _, rest = args.sigma.partition(":")
        if head == "periodic":
            sigma = gibbs.ParitySource.periodic([int(c) for c in rest])
        elif head == "point":
            sigma = gibbs.ParitySource.point()
        elif head == "bernoulli":
            sigma = gibbs.ParitySource.bernoulli(float(rest))
        else:
            raise ValueError(f"unknown sigma spec {args.sigma!r}")
    elif args.kappa > 0.0:
        sigma = gibbs.ParitySource.bernoulli(args.kappa)
    else:
        sigma = None

    if sigma is None:
        batch = gibbs.sample_even_gibbs_batch(args.zeta, args.sites, rng, args.count)
    else:
        rho_e = 1.0 / (1.0 - args.zeta)
        batch = gibbs.sample_etis_batch(rho_e, sigma, args.sites, rng, args.count)

    records: list[dict] = []
    if args.table:
        table = stats.cylinder_table(batch, args.table)
        probs = table.probabilities()
        for w in sorted(table.counts):
            records.append({"word": w, "count": table.counts[w], "prob": probs[w]})
        records.append({"total_windows": table.total})
    else:
        records.extend({"sample": row.tolist()} for row in batch)
    _emit(args, records)
    return 0


def _cmd_quench(args) -> int:
    rng = RngContext(args.seed)
    records: list[dict] = []
    q_hats = []
    all_frozen = True
    for r in range(args.runs):
        res = stats.quench_lowdensity(args.rho, args.sites, rng.child(r), args.max_steps)
        gaps = res.record.gaps
        rec = {
            "run": r,
            "frozen": res.frozen,
            "steps": res.steps,
            "markers": int(res.record.markers.size),
            "q_hat": res.q_hat,
            "gap_one_fraction": float((gaps == 1).mean()) if gaps.size else None,
        }
        records.append(rec)
        all_frozen = all_frozen and res.frozen
        q_hats.append(res.q_hat)
    bound = (1.0 - 2.0 * args.rho) / (1.0 - args.rho)
    records.append(
        {
            "q_hat_mean": float(np.mean(q_hats)),
            "q_lower_bound": bound,
            "runs": args.runs,
        }
    )
    _emit(args, records)
    return 0 if all_frozen else 2


def _cmd_verify(args) -> int:
    rng = RngContext(args.seed)
    records: list[dict] = []
    if args.what == "stationarity":
        sampler = _batch_sampler(args.state, args.sites)
        rep = stats.stationarity_test(sampler, _step_stack_batch, args.k, args.samples, rng)
        # the 0.01 gate is calibrated at 1e6 samples; sampling noise in
        # TV scales like 1/sqrt(n), so rescale for other sample counts
        tv_gate = TV_THRESHOLD * math.sqrt(1_000_000 / max(args.samples, 1))
        records.append(
            _check("stationarity_tv", rep.tv, None, tv_gate, rep.tv < tv_gate)
        )
        records.append(
            _check(
                "stationarity_chisq",
                rep.chisq.statistic,
                rep.p_value,
                SIGNIFICANCE,
                rep.p_value > SIGNIFICANCE,
            )
        )
    elif args.what == "detailed-balance":
        model = transition_matrix(enumerate_even_ring(args.sites, args.particles))
        res = stationary_and_detailed_balance(model)
        records.append(
            _check(
                "detailed_balance",
                res.residual_db,
                None,
                DB_TOLERANCE,
                res.residual_db < DB_TOLERANCE and res.irreducible,
            )
        )
        records.append(
            _check(
                "closed_form_stationary",
                res.residual_closed,
                None,
                DB_TOLERANCE,
                res.residual_closed < DB_TOLERANCE,
            )
        )
    elif args.what == "correlation":
        batch = gibbs.sample_even_gibbs_batch(args.zeta, args.sites, rng.child(0), args.samples)
        rep = stats.two_point_correlation(batch, args.max_distance)
        target = (1.0 - args.zeta) / (1.0 + args.zeta)
        ok = rep.status == "ok" and abs(rep.ratio - target) <= RATIO_RELTOL * target
        rec = _check("correlation_ratio", rep.ratio, None, RATIO_RELTOL, ok)
        # the statistic is the per-site geometric ratio, not a rate constant
        rec["exponent_form"] = (
            "per-site ratio |lambda2|/lambda1 = (1-zeta)/(1+zeta); the "
            "covariance at distance n scales like this ratio to the n"
        )
        records.append(rec)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.what)
    _emit(args, records)
    return 0 if all(r["pass"] for r in records) else 2


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fsep", description=__doc__)
    p.add_argument("--spec", help="JSON file with {subcommand, options...}; overrides argv")
    p.add_argument("--threads", type=int, default=1, help="worker threads (results invariant)")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output path (default stdout)")

    sp = sub.add_parser("simulate", help="run a trajectory with observers")
    sp.add_argument("--model", choices=["exclusion", "stack"], required=True)
    sp.add_argument("--init", required=True, help="literal, ring:M:payload, bernoulli:RHO, fixed:N, gibbs:zeta=Z")
    sp.add_argument("--sites", type=int, default=0, help="ring size for random inits")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--every", type=int, default=1, help="snapshot stride")
    sp.add_argument("--observer", action="append", help="cylinder:k | frozen | regions | parity")
    common(sp)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("exact", help="finite-ring chain and infinite-volume transfer data")
    sp.add_argument("what", choices=["ring", "transfer"])
    sp.add_argument("--sites", type=int, default=0)
    sp.add_argument("--particles", type=int, default=0)
    sp.add_argument("--zeta", type=float, default=0.5)
    sp.add_argument("--max-height", type=int, default=None)
    sp.add_argument("--word", help="comma-separated heights for a cylinder probability")
    common(sp)
    sp.set_defaults(func=_cmd_exact)

    sp = sub.add_parser("gibbs", help="draw stationary samples / cylinder tables")
    sp.add_argument("--zeta", type=float, required=True)
    sp.add_argument("--sites", type=int, required=True)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--kappa", type=float, default=0.0, help="odd-layer density (Bernoulli)")
    sp.add_argument("--sigma", help="periodic:BITS | point:I | bernoulli:K")
    sp.add_argument("--table", type=int, default=0, help="emit the k-window table instead of samples")
    common(sp)
    sp.set_defaults(func=_cmd_gibbs)

    sp = sub.add_parser("quench", help="freeze low-density rings; marker statistics")
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--sites", type=int, required=True)
    sp.add_argument("--runs", type=int, default=1)
    sp.add_argument("--max-steps", type=int, default=10_000_000)
    common(sp)
    sp.set_defaults(func=_cmd_quench)

    sp = sub.add_parser("verify", help="named numerical checks; exit 2 on failure")
    sp.add_argument("what", choices=["stationarity", "detailed-balance", "correlation"])
    sp.add_argument("--state", default="gibbs:zeta=0.5")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--sites", type=int, default=32)
    sp.add_argument("--particles", type=int, default=0)
    sp.add_argument("--zeta", type=float, default=0.5)
    sp.add_argument("--max-distance", type=int, default=6)
    common(sp)
    sp.set_defaults(func=_cmd_verify)

    return p


def _spec_to_argv(path: str) -> list[str]:
    with open(path) as fh:
        spec = json.load(fh)
    argv = [str(spec.pop("subcommand"))]
    if "what" in spec:
        argv.append(str(spec.pop("what")))
    for k, v in spec.items():
        flag = "--" + k.replace("_", "-")
        if isinstance(v, bool):
            if v:
                argv.append(flag)
        elif isinstance(v, list):
            for item in v:
                argv.extend([flag, str(item)])
        else:
            argv.extend([flag, str(v)])
    return argv


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.spec:
        args = parser.parse_args(_spec_to_argv(args.spec))
    if args.command is None:
        parser.print_help()
        return 1
    if hasattr(args, "seed") and "FSEP_SEED" in os.environ:
        args.seed = int(os.environ["FSEP_SEED"])
    if args.threads > 1:
        try:
            import numba

            numba.set_num_threads(args.threads)
        except Exception:
            pass
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"fsep: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

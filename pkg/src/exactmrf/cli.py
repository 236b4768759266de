"""Command-line interface.

Subcommands: ``partition``, ``marginals``, ``oracle-check``, ``evaluate``.
Exit codes: 0 success, 1 schema error, 2 enumeration/resource cap,
3 invalid pair indices, 4 oracle-check tolerance exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import approx, exact_bipartite, exact_complete, model, oracle
from .model import BIPARTITE, COMPLETE, LOG, RATIONAL, ModelSpec, SchemaError
from .numerics import LOG_ZERO, rat_num_den
from .oracle import TooLargeError

# dense count-vector grids above this many cells are refused (resource cap)
MAX_TABLE_CELLS = 200_000_000

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_CAP = 2
EXIT_BAD_PAIR = 3
EXIT_TOLERANCE = 4


class ResourceCapError(RuntimeError):
    pass


class PairIndexError(ValueError):
    pass


def _sig(x: float, digits: int) -> float:
    """Round a float to the given significant digits (value-level)."""
    if not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def _load_spec(path: str, mode_override: str | None) -> ModelSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read model file: {exc}") from None
    if mode_override is None:
        return model.parse(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc.msg}", line=exc.lineno) from None
    if isinstance(doc, dict):
        doc["mode"] = mode_override
    return model.parse_doc(doc)


def _check_resources(spec: ModelSpec) -> None:
    side = max(spec.n1, spec.n2 or 0)
    if (side + 1) ** (spec.K - 1) > MAX_TABLE_CELLS:
        raise ResourceCapError(
            f"count-vector grid would need {(side + 1) ** (spec.K - 1)} cells "
            f"(cap {MAX_TABLE_CELLS})")


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=1, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _parse_pairs(arg: str | None, n: int):
    if not arg:
        return None
    pairs = []
    for part in arg.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(",")
        if len(bits) != 2:
            raise PairIndexError(f"malformed pair {part!r} (expected 'i,j')")
        try:
            i, j = int(bits[0]), int(bits[1])
        except ValueError:
            raise PairIndexError(f"malformed pair {part!r}") from None
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise PairIndexError(f"pair ({i}, {j}) is out of range for n={n}")
        pairs.append((i, j))
    return pairs


# ---------------------------------------------------------------------------
# subcommands


def cmd_partition(args) -> int:
    spec = _load_spec(args.model, args.mode)
    _check_resources(spec)
    t0 = time.perf_counter()
    if spec.family == BIPARTITE:
        res = exact_bipartite.partition_bipartite(spec)
    else:
        res = exact_complete.partition(spec)
    wall = (time.perf_counter() - t0) * 1e3
    doc = {
        "log_Z": _sig(res.log_Z, 17),
        "is_zero": res.is_zero,
        "timings": {"compute_ms": wall},
        "diagnostics": {"fallback_vertices": [], "note": "partition uses no inverse map"},
    }
    if res.Z_rational is not None:
        num, den = rat_num_den(res.Z_rational)
        doc["Z_rational"] = f"{num}/{den}"
    _emit(doc, args.out)
    return EXIT_OK


def _marginal_doc(spec: ModelSpec, report) -> dict:
    doc = {
        "log_Z": _sig(report.log_Z, 17),
        "unary": [[_sig(float(p), 15) for p in row] for row in report.unary],
        "fallback": [bool(f) for f in report.fallback],
        "digits_lost": [_sig(float(d), 6) for d in report.digits_lost],
    }
    if report.Z_rational is not None:
        num, den = rat_num_den(report.Z_rational)
        doc["Z_rational"] = f"{num}/{den}"
    if report.pairwise is not None:
        doc["pairwise"] = {
            f"{i},{j}": [[_sig(float(p), 15) for p in row] for row in tab]
            for (i, j), tab in sorted(report.pairwise.items())
        }
        doc["pair_fallback"] = {f"{i},{j}": bool(v) for (i, j), v
                                in sorted(report.pair_fallback.items())}
    return doc


def cmd_marginals(args) -> int:
    spec = _load_spec(args.model, args.mode)
    _check_resources(spec)
    pairs = _parse_pairs(args.pairs, spec.n_vertices)
    if spec.family == BIPARTITE:
        if pairs:
            raise PairIndexError("pairwise marginals are not offered on "
                                 "bipartite models")
        report = exact_bipartite.unary_marginals_bipartite(spec)
    elif pairs:
        report = exact_complete.pairwise_marginals(spec, pairs)
    else:
        report = exact_complete.unary_marginals(spec)
    _emit(_marginal_doc(spec, report), args.out)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    spec = _load_spec(args.model, args.mode)
    _check_resources(spec)
    if spec.family == BIPARTITE:
        dp_part = exact_bipartite.partition_bipartite(spec)
        dp_marg = exact_bipartite.unary_marginals_bipartite(spec)
    else:
        dp_part = exact_complete.partition(spec)
        dp_marg = exact_complete.unary_marginals(spec)
    br_part = oracle.brute_partition(spec)
    br_marg = oracle.brute_marginals(spec)

    if spec.mode == RATIONAL:
        exact_equal = (dp_part.Z_rational == br_part.Z_rational and
                       dp_marg.unary_exact == br_marg.unary_exact)
        print(f"Z equal: {dp_part.Z_rational == br_part.Z_rational}")
        print(f"marginals equal: {dp_marg.unary_exact == br_marg.unary_exact}")
        return EXIT_OK if exact_equal else EXIT_TOLERANCE

    dz = abs(dp_part.log_Z - br_part.log_Z)
    dm = float(np.max(np.abs(dp_marg.unary - br_marg.unary)))
    print(f"max |log Z| discrepancy: {dz:.3e}")
    print(f"max unary-marginal discrepancy: {dm:.3e}")
    return EXIT_OK if max(dz, dm) <= args.tol else EXIT_TOLERANCE


def _alpha_summary(spec: ModelSpec) -> float:
    lg = spec.log_g_arr
    k = spec.K
    off = [lg[i, j] for i in range(k) for j in range(k) if i != j]
    diag = [lg[i, i] for i in range(k)]
    off_m, diag_m = float(np.mean(off)), float(np.mean(diag))
    if off_m == LOG_ZERO:
        return 0.0
    if diag_m == LOG_ZERO:
        return math.inf
    return math.exp(off_m - diag_m)


def _parse_generate(arg: str):
    bits = [b.strip() for b in arg.split(",")]
    if len(bits) != 5:
        raise SchemaError("--generate expects family,K,n,seed,count")
    family = bits[0]
    if family not in (COMPLETE, BIPARTITE):
        raise SchemaError(f"unknown family {family!r} in --generate")
    k = int(bits[1])
    if family == BIPARTITE:
        if "x" not in bits[2]:
            raise SchemaError("bipartite --generate needs sizes as N1xN2")
        n1, n2 = (int(v) for v in bits[2].split("x", 1))
        sizes = (n1, n2)
    else:
        sizes = int(bits[2])
    return family, k, sizes, int(bits[3]), int(bits[4])


def _instance_id(family, k, sizes, seed) -> str:
    size_txt = f"{sizes[0]}x{sizes[1]}" if isinstance(sizes, tuple) else str(sizes)
    return f"{family}-K{k}-n{size_txt}-s{seed}"


def _evaluate_one(item, methods, gibbs_params):
    instance_id, spec, seed = item
    params = {"gibbs": dict(gibbs_params)}
    report = approx.evaluate(spec, methods, seed=seed, method_params=params)
    return instance_id, spec, report


def cmd_evaluate(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    gibbs_params = {"burn_in": args.gibbs_burnin, "samples": args.gibbs_samples}

    jobs = []
    if args.generate:
        family, k, sizes, seed0, count = _parse_generate(args.generate)
        for off in range(count):
            seed = seed0 + off
            spec = model.random_model(family, k, sizes, seed=seed)
            jobs.append((_instance_id(family, k, sizes, seed), spec, seed))
    elif args.model:
        spec = _load_spec(args.model, args.mode)
        jobs.append((os.path.basename(args.model), spec, args.seed))
    else:
        raise SchemaError("evaluate needs a model file or --generate")
    for _id, spec, _seed in jobs:
        _check_resources(spec)

    workers = os.environ.get("EXACTMRF_THREADS")
    workers = int(workers) if workers else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(jobs)))
    results = []
    failures = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_evaluate_one, job, methods, gibbs_params)
                    for job in jobs]
            for job, fut in zip(jobs, futs):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    failures.append((job[0], str(exc)))
    else:
        for job in jobs:
            try:
                results.append(_evaluate_one(job, methods, gibbs_params))
            except Exception as exc:
                failures.append((job[0], str(exc)))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance_id", "method", "n", "K", "alpha_summary",
                     "l1_mean", "linf_max", "logZ_err", "wall_ms"])
    detail = {"instances": [], "failures": [{"instance_id": i, "error": e}
                                            for i, e in failures]}
    for instance_id, spec, report in results:
        summary = _alpha_summary(spec)
        inst_doc = {
            "instance_id": instance_id,
            "n": spec.n_vertices,
            "K": spec.K,
            "alpha_summary": _sig(summary, 6),
            "exact_log_Z": _sig(report.exact.log_Z, 17),
            "methods": [],
        }
        for entry in report.entries:
            if entry.failure is not None:
                writer.writerow([instance_id, entry.method, spec.n_vertices,
                                 spec.K, f"{summary:.6g}", "", "", "", ""])
                inst_doc["methods"].append({"method": entry.method,
                                            "failure": entry.failure})
                continue
            writer.writerow([
                instance_id, entry.method, spec.n_vertices, spec.K,
                f"{summary:.6g}", f"{entry.l1_mean:.12g}",
                f"{entry.linf_max:.12g}",
                "" if entry.log_z_err is None else f"{entry.log_z_err:.12g}",
                f"{entry.wall_ms:.3f}",
            ])
            inst_doc["methods"].append({
                "method": entry.method,
                "l1_mean": _sig(entry.l1_mean, 12),
                "linf_max": _sig(entry.linf_max, 12),
                "logZ_err": None if entry.log_z_err is None
                            else _sig(entry.log_z_err, 12),
                "wall_ms": entry.wall_ms,
                "estimates": [[_sig(float(p), 15) for p in row]
                              for row in entry.result.unary],
            })
        detail["instances"].append(inst_doc)

    csv_text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            json.dump(detail, fh, indent=1, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(csv_text)
    if results:
        return EXIT_OK
    for instance_id, err in failures:
        print(f"instance {instance_id} failed: {err}", file=sys.stderr)
    return EXIT_SCHEMA


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exactmrf",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("partition", help="exact partition sum of a model file")
    sp.add_argument("model")
    sp.add_argument("--mode", choices=[LOG, RATIONAL], default=None,
                    help="override the model file's numeric mode")
    sp.add_argument("--out", default=None, help="write the JSON result here")
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("marginals", help="exact unary (and pairwise) marginals")
    sp.add_argument("model")
    sp.add_argument("--pairs", default=None,
                    help="semicolon-separated vertex pairs, e.g. '0,1;2,3'")
    sp.add_argument("--mode", choices=[LOG, RATIONAL], default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_marginals)

    sp = sub.add_parser("oracle-check",
                        help="compare the engine against brute-force enumeration")
    sp.add_argument("model")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--mode", choices=[LOG, RATIONAL], default=None)
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("evaluate",
                        help="score approximate-inference baselines exactly")
    sp.add_argument("model", nargs="?", default=None)
    sp.add_argument("--generate", default=None,
                    help="family,K,n,seed,count (bipartite sizes as N1xN2)")
    sp.add_argument("--methods", default="mean_field",
                    help="comma-separated: mean_field,gibbs")
    sp.add_argument("--gibbs-samples", type=int, default=20000)
    sp.add_argument("--gibbs-burnin", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0,
                    help="method seed when evaluating a model file")
    sp.add_argument("--mode", choices=[LOG, RATIONAL], default=None)
    sp.add_argument("--out", default=None,
                    help="CSV path; a JSON detail document lands beside it")
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except TooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except PairIndexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PAIR


if __name__ == "__main__":
    sys.exit(main())

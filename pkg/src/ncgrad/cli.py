"""Command-line front end.

Commands wrap the module operations one to one and emit JSON reports
with deterministic content (volatile fields are limited to runtime
measurements). Exit codes: 0 pass, 1 fail (a witness is in the report),
2 usage or runtime error.

Model specs are either ``zoo:<name>`` (optionally ``zoo:<name>?k=v,..``)
or a path to a generator JSON file produced by ``zoo build``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import acceptance, entfun, gradest, linalg, transport, zoo
from .gradest import GESampler, OptimalKSearch
from .qms import LindbladGenerator, verify_qms

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    model: str = None
    mean: str = "logarithmic"
    K: float = None
    mode: str = "auto"
    num_rho: int = 50
    t_grid: str = "40:1e-3:10"
    seed: int = None
    ancilla: tuple = (2,)
    threads: int = None
    out: str = None

    def to_json(self):
        d = asdict(self)
        d["ancilla"] = list(self.ancilla)
        return d

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        if "ancilla" in obj:
            obj["ancilla"] = tuple(obj["ancilla"])
        return cls(**obj)


def _git_blob_sha1(data: bytes) -> str:
    h = hashlib.sha1()
    h.update(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def load_model(spec: str) -> LindbladGenerator:
    if spec.startswith("zoo:"):
        rest = spec[4:]
        params = {}
        if "?" in rest:
            rest, raw = rest.split("?", 1)
            for kv in raw.split(","):
                k, v = kv.split("=")
                try:
                    params[k] = int(v)
                except ValueError:
                    params[k] = float(v)
        return zoo.build(rest, **params)
    with open(spec) as fh:
        return LindbladGenerator.from_json(json.load(fh))


def _parse_t_grid(s: str):
    count, lo, hi = s.split(":")
    return (int(count), float(lo), float(hi))


def _model_hash(gen) -> str:
    blob = json.dumps(gen.to_json(), sort_keys=True).encode()
    return _git_blob_sha1(blob)


def _emit(report: dict, out=None) -> None:
    text = json.dumps(report, sort_keys=True, indent=1, default=float)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _require_seed(args, mode, gns_dim):
    resolved = mode
    if mode == "auto":
        resolved = "exact" if gns_dim <= gradest.EXACT_AUTO_DIM else "sampled"
    if resolved == "sampled" and args.seed is None:
        raise SystemExit("--seed is mandatory for sampled mode")
    return args.seed if args.seed is not None else 0


def _add_common(p, with_mean=True):
    p.add_argument("--model", required=True)
    if with_mean:
        p.add_argument("--mean", default="logarithmic")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("NCGRAD_THREADS", "0")) or None)
    p.add_argument("--config", default=None,
                   help="JSON file with RunConfig fields; flags win")


def _merge_config(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = RunConfig.from_json(json.load(fh))
        for key, val in cfg.to_json().items():
            if hasattr(args, key) and getattr(args, key) in (None, ()):
                setattr(args, key, val)
    return args


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ncgrad",
        description="gradient estimates, entropy decay and transport bounds "
                    "for trace-symmetric Markov semigroups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zoo", help="model catalog")
    zsub = p.add_subparsers(dest="zoo_command", required=True)
    zsub.add_parser("list")
    pb = zsub.add_parser("build")
    pb.add_argument("name")
    pb.add_argument("--param", action="append", default=[])
    pb.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="Markov property checks")
    _add_common(p, with_mean=False)

    for cmd in ("ge-check", "cge-check"):
        p = sub.add_parser(cmd)
        _add_common(p)
        p.add_argument("--K", type=float, required=True)
        p.add_argument("--num-rho", type=int, default=50)
        p.add_argument("--t-grid", default="40:1e-3:10")
        p.add_argument("--mode", default="auto",
                       choices=["auto", "exact", "sampled"])
        p.add_argument("--tol", type=float, default=1e-8)
        if cmd == "cge-check":
            p.add_argument("--ancilla", type=int, action="append", default=[])

    p = sub.add_parser("optimal-k")
    _add_common(p)
    p.add_argument("--t", type=float, default=None,
                   help="pointwise constant at this time (global otherwise)")
    p.add_argument("--rho", default=None, help="density JSON for pointwise mode")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--t-grid", default="40:1e-3:10")

    p = sub.add_parser("intertwine-check")
    _add_common(p, with_mean=False)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--num-t", type=int, default=10)
    p.add_argument("--num-rho", type=int, default=5)

    p = sub.add_parser("tensor-check")
    p.add_argument("--model1", required=True)
    p.add_argument("--model2", required=True)
    p.add_argument("--mean", default="logarithmic")
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--num-rho", type=int, default=20)
    p.add_argument("--t-grid", default="12:1e-3:10")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("mlsi")
    _add_common(p, with_mean=False)
    p.add_argument("--num-rho", type=int, default=40)

    p = sub.add_parser("fisher-decay")
    _add_common(p, with_mean=False)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--num-rho", type=int, default=10)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--csv", default=None)

    p = sub.add_parser("transport")
    _add_common(p)
    p.add_argument("--segments", type=int, default=8)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--rho0", default=None)
    p.add_argument("--rho1", default=None)

    p = sub.add_parser("reproduce", help="run the acceptance suite")
    p.add_argument("--criteria", default=None,
                   help="comma-separated ids, e.g. 1,2,9")
    p.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _dispatch(args) -> int:
    if args.command == "zoo":
        if args.zoo_command == "list":
            for row in zoo.catalog_rows():
                bound = row["curvature_bound"]
                bound = "-" if bound is None else f"{bound:g}"
                print(
                    f"{row['name']:<15} gns_dim={row['gns_dim']:<5} "
                    f"jumps={row['jumps']:<3} bound={bound:<4} "
                    f"[{row['bound_origin']}] {row['description']}"
                )
            return EXIT_PASS
        params = {}
        for kv in args.param:
            k, v = kv.split("=")
            params[k] = int(v) if v.lstrip("-").isdigit() else float(v)
        gen = zoo.build(args.name, **params)
        _emit(gen.to_json(), args.out)
        return EXIT_PASS

    args = _merge_config(args)

    if args.command == "verify":
        gen = load_model(args.model)
        rep = verify_qms(gen, raise_on_failure=False)
        _emit({"model": gen.label, "model_hash": _model_hash(gen),
               "pass": rep.ok, "checks": rep.checks}, args.out)
        return EXIT_PASS if rep.ok else EXIT_FAIL

    if args.command in ("ge-check", "cge-check"):
        gen = load_model(args.model)
        seed = _require_seed(args, args.mode, gen.algebra.gns_dim)
        sampler = GESampler(num_rho=args.num_rho,
                            t_grid=_parse_t_grid(args.t_grid), seed=seed)
        if args.command == "ge-check":
            rep = gradest.ge_check(gen, args.mean, args.K, sampler,
                                   mode=args.mode, tol=args.tol)
        else:
            ancilla = tuple(args.ancilla) or (2,)
            rep = gradest.cge_check(gen, args.mean, args.K, ancilla, sampler,
                                    mode=args.mode, tol=args.tol)
        obj = rep.to_json()
        obj["model_hash"] = _model_hash(gen)
        _emit(obj, args.out)
        return EXIT_PASS if rep.passed else EXIT_FAIL

    if args.command == "optimal-k":
        gen = load_model(args.model)
        seed = args.seed if args.seed is not None else 0
        if args.t is not None:
            rho = gen.algebra.identity()
            if args.rho:
                with open(args.rho) as fh:
                    rho = linalg.matrix_from_json(json.load(fh))
            value = gradest.optimal_k(gen, args.mean, args.t, rho)
            _emit({"model": gen.label, "model_hash": _model_hash(gen),
                   "mean": args.mean, "t": args.t, "optimal_k": value},
                  args.out)
            return EXIT_PASS
        res = gradest.optimal_k_global(
            gen, args.mean,
            OptimalKSearch(t_grid=_parse_t_grid(args.t_grid),
                           num_restarts=args.restarts,
                           descent_steps=args.steps, seed=seed),
        )
        obj = res.to_json()
        obj.update({"model": gen.label, "model_hash": _model_hash(gen),
                    "mean": args.mean})
        _emit(obj, args.out)
        return EXIT_PASS

    if args.command == "intertwine-check":
        gen = load_model(args.model)
        rep = gradest.intertwine_check(
            gen, K=args.K, num_t=args.num_t, num_rho=args.num_rho,
            seed=args.seed if args.seed is not None else 0,
        )
        obj = rep.to_json()
        obj["model_hash"] = _model_hash(gen)
        _emit(obj, args.out)
        return EXIT_PASS if rep.passed else EXIT_FAIL

    if args.command == "tensor-check":
        g1 = load_model(args.model1)
        g2 = load_model(args.model2)
        sampler = GESampler(num_rho=args.num_rho,
                            t_grid=_parse_t_grid(args.t_grid),
                            seed=args.seed if args.seed is not None else 0)
        rep = gradest.tensor_ge_harness(g1, g2, args.mean, args.K, sampler)
        _emit(rep.to_json(), args.out)
        return EXIT_PASS if rep.passed else EXIT_FAIL

    if args.command == "mlsi":
        gen = load_model(args.model)
        est = entfun.mlsi_estimate(
            gen, num_rho=args.num_rho,
            seed=args.seed if args.seed is not None else 0,
        )
        obj = est.to_json()
        obj.update({"model": gen.label, "model_hash": _model_hash(gen)})
        _emit(obj, args.out)
        return EXIT_PASS

    if args.command == "fisher-decay":
        gen = load_model(args.model)
        t_grid = np.linspace(0.0, args.t_max, args.points)
        rep = entfun.fisher_decay_check(
            gen, args.K, num_rho=args.num_rho, t_grid=t_grid,
            seed=args.seed if args.seed is not None else 0,
        )
        obj = rep.to_json()
        obj["model_hash"] = _model_hash(gen)
        _emit(obj, args.out)
        if args.csv:
            rng = np.random.default_rng(args.seed or 0)
            rho = gen.algebra.random_density(rng)
            rows = entfun.entropy_trajectory(gen, rho, t_grid)
            with open(args.csv, "w") as fh:
                fh.write("t,entropy,fisher\n")
                for t, ent, fisher in rows:
                    fh.write(f"{t},{ent},{fisher}\n")
        return EXIT_PASS if rep.passed else EXIT_FAIL

    if args.command == "transport":
        gen = load_model(args.model)
        seed = args.seed if args.seed is not None else 0
        rng = np.random.default_rng(seed)
        if args.rho0:
            with open(args.rho0) as fh:
                rho0 = linalg.matrix_from_json(json.load(fh))
        else:
            rho0 = gen.algebra.random_density(rng)
        if args.rho1:
            with open(args.rho1) as fh:
                rho1 = linalg.matrix_from_json(json.load(fh))
        else:
            rho1 = gen.algebra.random_density(rng)
        try:
            bound = transport.w_upper_bound(
                gen, args.mean, rho0, rho1,
                n_segments=args.segments, iters=args.iters, seed=seed,
            )
        except transport.NotConnectableError as exc:
            print(f"not connectable: {exc}", file=sys.stderr)
            return EXIT_FAIL
        obj = bound.to_json()
        obj.update({"model": gen.label, "mean": args.mean,
                    "model_hash": _model_hash(gen),
                    "note": "discretized upper bound"})
        _emit(obj, args.out)
        return EXIT_PASS

    if args.command == "reproduce":
        selection = None
        if args.criteria:
            selection = {int(x) for x in args.criteria.split(",")}
        results = acceptance.run_all(selection)
        all_ok = all(r.passed for r in results)
        width = max(len(r.title) for r in results)
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            print(f"[{status}] criterion {r.cid:>2}  {r.title:<{width}}  "
                  f"({r.seconds:6.1f} s)")
            print(f"        {r.details}")
        if args.out:
            _emit({"results": [asdict(r) for r in results], "pass": all_ok},
                  args.out)
        print("all criteria pass" if all_ok else "FAILURES present")
        return EXIT_PASS if all_ok else EXIT_FAIL

    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

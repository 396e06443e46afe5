"""Command-line entry point.

Subcommands: frameflow | commutant | states | decay | egorov | weyl |
variance | suite.  Every subcommand accepts --config FILE (JSON), --seed INT
and --out PATH; flags override config values.  The FRAMELAB_THREADS
environment variable caps the linear-algebra thread pool (it must be applied
before numpy loads, which is why the heavy imports happen inside main).

Exit codes: 0 ok / pass, 1 declared threshold failed, 2 unknown experiment,
3 invalid config schema, 4 geometry/domain error, 5 capability error,
6 truncation/model error, 7 argument error, 8 configuration error.
"""

import argparse
import json
import os
import sys


def _apply_thread_env():
    threads = os.environ.get("FRAMELAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, threads)


def build_parser():
    p = argparse.ArgumentParser(prog="framelab",
                                description="frame flows, fiber algebras, and "
                                            "torus-bundle quantization experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output path (CSV or JSON)")

    sp = sub.add_parser("frameflow", help="frame-flow ergodicity report")
    common(sp)
    sp.add_argument("--model", choices=["flat-torus", "round-sphere",
                                        "genus2-hyperbolic", "kaehler-torus"])
    sp.add_argument("--k", type=int)
    sp.add_argument("--T", type=float)
    sp.add_argument("--h", type=float)
    sp.add_argument("--ensemble", type=int)

    sp = sub.add_parser("commutant", help="stabilizer commutant dimensions")
    common(sp)
    sp.add_argument("--algebra", choices=["spinor", "forms"])
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--restrict", choices=["plus", "minus", "P", "Pplus", "Pminus"])

    sp = sub.add_parser("states", help="state values and invariance residuals")
    common(sp)
    sp.add_argument("--connection", choices=["genus2-spinor", "torus-bundle"])

    sp = sub.add_parser("decay", help="Cesaro-average decay tables")
    common(sp)
    sp.add_argument("--connection", choices=["genus2-spinor", "flat-torus-control"])

    for name in ("egorov", "weyl", "variance"):
        sp = sub.add_parser(name, help=f"{name} experiment on the torus bundle")
        common(sp)
        sp.add_argument("--n", type=int)
        sp.add_argument("--r", type=int)
        sp.add_argument("--K", type=int)
        if name == "egorov":
            sp.add_argument("--t", type=float)
            sp.add_argument("--shells", type=float, nargs="+")
        if name == "weyl":
            sp.add_argument("--N", type=int)

    sp = sub.add_parser("suite", help="run an acceptance battery")
    common(sp)
    sp.add_argument("name", choices=["algebra", "dynamics", "egorov", "all"])
    return p


def _assemble_config(args):
    config = {}
    if args.config:
        with open(args.config) as f:
            config = json.load(f)
    config["experiment"] = args.command
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out:
        config["out"] = args.out
    if args.command == "frameflow":
        if args.model:
            config.setdefault("model", {})["tag"] = args.model
        for key in ("k", "T", "h", "ensemble"):
            v = getattr(args, key)
            if v is not None:
                config[key] = v
        config.setdefault("k", 2)
        config.setdefault("T", 200.0)
    elif args.command == "commutant":
        for key in ("algebra", "n", "p", "restrict"):
            v = getattr(args, key)
            if v is not None:
                config[key] = v
    elif args.command in ("states", "decay"):
        if args.connection:
            config["connection"] = args.connection
        config.setdefault("connection", "genus2-spinor")
    elif args.command in ("egorov", "weyl", "variance"):
        bundle = config.setdefault("bundle", {})
        for key in ("n", "r", "K"):
            v = getattr(args, key)
            if v is not None:
                bundle[key] = v
        if args.command == "egorov":
            if args.t is not None:
                config["t"] = args.t
            if args.shells is not None:
                config["shells"] = args.shells
            config.setdefault("t", 1.0)
            config.setdefault("shells", [bundle.get("K", 8) / 4, bundle.get("K", 8) / 2])
        if args.command == "weyl" and args.N is not None:
            config["N"] = args.N
    elif args.command == "suite":
        config["name"] = args.name
    return config


def main(argv=None):
    _apply_thread_env()
    args = build_parser().parse_args(argv)
    config = _assemble_config(args)

    from .errors import (ArgumentError, CapabilityError, ConfigurationError,
                         DomainError, GeometryError, ModelError, SchemaError,
                         TruncationError)
    from .harness import run

    try:
        record = run(config)
    except SchemaError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except (DomainError, GeometryError) as e:
        print(f"geometry error: {e}", file=sys.stderr)
        return 4
    except CapabilityError as e:
        print(f"capability error: {e}", file=sys.stderr)
        return 5
    except (TruncationError, ModelError) as e:
        print(f"model error: {e}", file=sys.stderr)
        return 6
    except ArgumentError as e:
        print(f"argument error: {e}", file=sys.stderr)
        return 7
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 8
    print(record.to_json())
    if record.passed is False:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

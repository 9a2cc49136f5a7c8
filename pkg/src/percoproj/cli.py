"""Command-line front end: a thin client over the HTTP service.

By default requests run against an in-process instance of the app (no
network, no server process); `--server URL` points the same client at a
remote instance.  Exit codes: 0 success / gates pass, 1 experiment gate
failure, 2 usage errors or infeasible requests.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx


def _make_client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # test-client import warns on some stacks
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _post(client, path: str, payload: dict):
    resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = resp.text
        print(f"error: {detail}", file=sys.stderr)
        return None
    return resp.json()


def _print_warnings(regime: dict) -> None:
    for w in regime.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)


def _tree_payload(args) -> dict | None:
    """Either {'tree_text': ...} from --tree or {'generate': {...}} from flags."""
    if args.tree:
        try:
            with open(args.tree) as fh:
                return {"tree_text": fh.read()}
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return None
    if args.k is None or args.p is None or args.depth is None:
        print("error: pass --tree FILE or all of --k/--p/--depth (with --seed)", file=sys.stderr)
        return None
    return {
        "generate": {
            "k": args.k,
            "p": args.p,
            "depth": args.depth,
            "seed": args.seed,
        }
    }


def cmd_generate(args, client) -> int:
    body = _post(
        client,
        "/generate",
        {
            "k": args.k,
            "p": args.p,
            "depth": args.depth,
            "seed": args.seed,
            "cell_budget": args.cell_budget,
        },
    )
    if body is None:
        return 2
    _print_warnings(body["regime"])
    for m, (c, z) in enumerate(zip(body["counts"], body["z_estimates"])):
        print(f"level {m}: cells {c}  z_estimate {z!r}")
    if body["extinct_at"] is not None:
        print(f"extinct at level {body['extinct_at']}")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(body["tree_text"])
        print(f"wrote {args.output}")
    return 0


def cmd_density(args, client) -> int:
    src = _tree_payload(args)
    if src is None:
        return 2
    payload = {
        **src,
        "level": args.level,
        "direction": args.axis if args.axis else args.theta,
        "strict": not args.non_strict,
        "samples": args.samples,
    }
    if args.window:
        payload["window"] = args.window
    if args.x is not None:
        payload["x"] = args.x
    body = _post(client, "/density", payload)
    if body is None:
        return 2
    print(f"mass: {body['mass']!r}")
    if body["mass_identity_expected"] is not None:
        print(f"mass identity p^-n k^-2n #cells: {body['mass_identity_expected']!r}")
    if body["point_value"] is not None:
        print(f"value at x={args.x!r}: {body['point_value']!r}")
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(body["density"], fh, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.output}")
    if body.get("csv") and args.csv:
        with open(args.csv, "w") as fh:
            fh.write(body["csv"])
        print(f"wrote {args.csv}")
    return 0


def cmd_constants(args, client) -> int:
    body = _post(
        client,
        "/constants",
        {
            "k": args.k,
            "p": args.p,
            "delta": args.delta,
            "level": args.level,
            "big_n": args.big_n,
        },
    )
    if body is None:
        return 2
    text = json.dumps(body["report"], sort_keys=True, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.output}")
    else:
        print(text)
    return 0


def cmd_verify(args, client) -> int:
    src = _tree_payload(args)
    if src is None:
        return 2
    body = _post(client, "/verify", {**src, "samples": args.samples})
    if body is None:
        return 2
    for check in body["checks"]:
        mark = "PASS" if check["passed"] else "FAIL"
        print(f"[{mark}] {check['name']}: {check['detail']}")
    return 0 if body["passed"] else 1


def cmd_experiment(args, client) -> int:
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    body = _post(
        client,
        "/experiment",
        {"config": config, "workers": args.workers, "dry_run": args.dry_run},
    )
    if body is None:
        return 2
    if args.dry_run:
        print(json.dumps(body["feasibility"], sort_keys=True, indent=2))
        return 0
    import os

    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        fh.write(body["report_text"])
    for name, content in body["csv"].items():
        with open(os.path.join(outdir, name), "w") as fh:
            fh.write(content)
    with open(os.path.join(outdir, "timing.json"), "w") as fh:
        json.dump(body["timing"], fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"status: {body['status']}")
    for name, section in body["report"]["sections"].items():
        mark = "PASS" if section["passed"] else "FAIL"
        print(f"[{mark}] {name}")
    print(f"wrote {outdir}/report.json")
    return body["exit_code"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percoproj",
        description="Fractal-percolation simulation and projected-density verification",
    )
    parser.add_argument("--server", default=None, help="URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate and serialize a realization")
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--cell-budget", type=int, default=50_000_000)
    g.add_argument("--output", default=None, help="tree file to write")
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("density", help="compute a projected density")
    d.add_argument("--tree", default=None, help="serialized tree file")
    d.add_argument("--k", type=int, default=None)
    d.add_argument("--p", type=float, default=None)
    d.add_argument("--depth", type=int, default=None)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--level", type=int, required=True)
    dir_group = d.add_mutually_exclusive_group(required=True)
    dir_group.add_argument("--theta", default=None, help="radians or 'pi/4' style")
    dir_group.add_argument("--axis", choices=["horizontal", "vertical"], default=None)
    d.add_argument("--window", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    d.add_argument("--x", type=float, default=None, help="evaluate at one point")
    d.add_argument("--non-strict", action="store_true", help="allow k-adic x (left-closed)")
    d.add_argument("--samples", type=int, default=0, help="CSV sample rows")
    d.add_argument("--output", default=None, help="density JSON file")
    d.add_argument("--csv", default=None, help="CSV samples file")
    d.set_defaults(func=cmd_density)

    c = sub.add_parser("constants", help="closed-form constants as JSON")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--delta", type=float, default=0.1)
    c.add_argument("--level", type=int, default=6)
    c.add_argument("--big-n", type=int, default=20)
    c.add_argument("--output", default=None)
    c.set_defaults(func=cmd_constants)

    v = sub.add_parser("verify", help="structural and oracle checks on a realization")
    v.add_argument("--tree", default=None)
    v.add_argument("--k", type=int, default=None)
    v.add_argument("--p", type=float, default=None)
    v.add_argument("--depth", type=int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=200, help="0 = structural checks only")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="run the verification suite from a config file")
    e.add_argument("config", help="JSON config path")
    e.add_argument("--output-dir", default="out")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--dry-run", action="store_true", help="print the feasibility estimate only")
    e.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code) if exc.code else 0
    client = _make_client(args.server)
    try:
        return args.func(args, client)
    except httpx.HTTPError as exc:
        print(f"error: service unreachable: {exc}", file=sys.stderr)
        return 2
    finally:
        client.close()


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

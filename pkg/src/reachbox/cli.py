"""Command-line front end.

The CLI is a thin client of the HTTP service: it loads a problem document,
posts it to a server (an in-process application by default, or a remote one
via --server), and writes the response artifacts.  Artifacts are written
atomically; for a fixed seed and inputs the result JSON and CSV files are
byte-identical across runs, while wall-clock timings go to a separate
timings file that carries no determinism promise.

Exit codes: 0 on success, 1 when a method fails or a containment violation
is detected, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import httpx

__all__ = ["main"]

OUT_DIR_ENV = "REACHBOX_OUT"

EXIT_OK = 0
EXIT_METHOD_FAILURE = 1
EXIT_INPUT_ERROR = 2


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # in-process service: same API surface without a running server
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from starlette.testclient import TestClient

    from .service.app import create_app
    return TestClient(create_app())


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".reachbox-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _boxes_csv(results: list[dict]) -> str:
    lines = ["method,dim,lower,upper"]
    for r in results:
        box = r["box"]
        for dim, (lo, hi) in enumerate(zip(box["lower"], box["upper"])):
            lines.append(f"{r['method']},{dim},{lo!r},{hi!r}")
    return "\n".join(lines) + "\n"


def _cloud_csv(cloud: list[list[float]]) -> str:
    if not cloud:
        return "\n"
    n = len(cloud[0])
    lines = [",".join(f"x{i + 1}" for i in range(n))]
    for row in cloud:
        lines.append(",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def _out_dir(args) -> str:
    return args.out or os.environ.get(OUT_DIR_ENV) or "."


def _load_document(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise SystemExit(_fail(f"cannot read {path}: {exc}", EXIT_INPUT_ERROR))
    except json.JSONDecodeError as exc:
        raise SystemExit(_fail(f"malformed JSON in {path}: {exc}", EXIT_INPUT_ERROR))


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _post(client, path: str, payload: dict):
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise SystemExit(_fail(f"request failed: {exc}", EXIT_INPUT_ERROR))
    if response.status_code in (400, 422):
        raise SystemExit(_fail(_detail(response), EXIT_INPUT_ERROR))
    if response.status_code == 409:
        raise SystemExit(_fail(_detail(response), EXIT_METHOD_FAILURE))
    if response.status_code != 200:
        raise SystemExit(_fail(f"unexpected server response {response.status_code}: "
                               f"{response.text[:500]}", EXIT_METHOD_FAILURE))
    return response.json()


def _detail(response) -> str:
    try:
        return str(response.json()["detail"])
    except Exception:
        return response.text[:500]


def _overrides(args) -> dict:
    payload = {}
    if getattr(args, "method", None):
        payload["method"] = args.method
    if getattr(args, "all", False):
        payload["run_all"] = True
    if getattr(args, "steps", None) is not None:
        payload["steps"] = args.steps
    if getattr(args, "seed", None) is not None:
        payload["seed"] = args.seed
    return payload


def _write_reach_artifacts(reach: dict, out_dir: str):
    deterministic = {key: reach[key] for key in
                     ("schema_version", "system", "seed", "results", "skipped")}
    _write_atomic(os.path.join(out_dir, "result.json"), _dump_json(deterministic))
    _write_atomic(os.path.join(out_dir, "boxes.csv"), _boxes_csv(reach["results"]))
    _write_atomic(os.path.join(out_dir, "timings.json"),
                  _dump_json({"timings": reach["timings"]}))


def _print_reach_summary(reach: dict):
    for r in reach["results"]:
        box = r["box"]
        dims = len(box["lower"])
        print(f"{r['method']}: {r['trajectory_evals']} successor evaluation(s), "
              f"{dims}-dimensional box")
    for s in reach["skipped"]:
        print(f"skipped {s['method']}: {s['reason']}")


def _cmd_reach(args) -> int:
    document = _load_document(args.file)
    with _client(args.server) as client:
        reach = _post(client, "/reach", {"document": document,
                                         "overrides": _overrides(args)})
    out_dir = _out_dir(args)
    _write_reach_artifacts(reach, out_dir)
    _print_reach_summary(reach)
    print(f"artifacts written to {out_dir}")
    if not reach["results"]:
        return _fail("no method produced a result", EXIT_METHOD_FAILURE)
    return EXIT_OK


def _cmd_validate(args) -> int:
    document = _load_document(args.file)
    with _client(args.server) as client:
        report = _post(client, "/validate", {
            "document": document,
            "samples": args.samples,
            "seed": args.seed,
            "include_cloud": args.cloud,
        })
    out_dir = _out_dir(args)
    cloud = report.pop("cloud", None)
    _write_atomic(os.path.join(out_dir, "report.json"), _dump_json(report))
    if args.cloud and cloud is not None:
        _write_atomic(os.path.join(out_dir, "cloud.csv"), _cloud_csv(cloud))
    for rep in report["reports"]:
        status = "sound" if rep["sound"] else "CONTAINMENT VIOLATION"
        print(f"{rep['method']}: containment {rep['containment_fraction']:.4f}, "
              f"worst slack {rep['worst_slack']:.3e} ({status})")
    for s in report["skipped"]:
        print(f"skipped {s['method']}: {s['reason']}")
    print(f"report written to {out_dir}")
    if not report["reports"]:
        return _fail("no method produced a result to validate", EXIT_METHOD_FAILURE)
    if not report["all_sound"]:
        return _fail("containment violation detected; capability data is unsound",
                     EXIT_METHOD_FAILURE)
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.name != "traffic":
        return _fail(f"unknown benchmark {args.name!r}", EXIT_INPUT_ERROR)
    with _client(args.server) as client:
        bench = _post(client, "/bench/traffic", {
            "n": args.n,
            "overrides": _overrides(args),
        })
    out_dir = _out_dir(args)
    _write_atomic(os.path.join(out_dir, "problem.json"), _dump_json(bench["document"]))
    _write_reach_artifacts(bench["reach"], out_dir)
    _print_reach_summary(bench["reach"])
    print(f"artifacts written to {out_dir}")
    if not bench["reach"]["results"]:
        return _fail("no method produced a result", EXIT_METHOD_FAILURE)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("reachbox.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachbox",
        description="Interval over-approximation of reachable sets")
    parser.add_argument("--server", default=None,
                        help="URL of a running reachbox server "
                             "(default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    reach = sub.add_parser("reach", help="solve a reachability problem file")
    reach.add_argument("file", help="problem document (JSON)")
    group = reach.add_mutually_exclusive_group()
    group.add_argument("--method", help="request a specific method")
    group.add_argument("--all", action="store_true",
                       help="run every applicable method")
    reach.add_argument("--out", default=None,
                       help=f"output directory (default ${OUT_DIR_ENV} or .)")
    reach.add_argument("--steps", type=int, default=None, help="RK4 steps")
    reach.add_argument("--seed", type=int, default=None, help="random seed")
    reach.set_defaults(handler=_cmd_reach)

    validate = sub.add_parser("validate",
                              help="check boxes against a Monte-Carlo successor cloud")
    validate.add_argument("file", help="problem document (JSON)")
    validate.add_argument("--samples", type=int, default=1000)
    validate.add_argument("--seed", type=int, default=0)
    validate.add_argument("--cloud", action="store_true",
                          help="also write the sampled successors as CSV")
    validate.add_argument("--out", default=None)
    validate.set_defaults(handler=_cmd_validate)

    bench = sub.add_parser("bench", help="run a built-in benchmark")
    bench.add_argument("name", choices=["traffic"])
    bench.add_argument("--n", type=int, default=3, help="number of links")
    group = bench.add_mutually_exclusive_group()
    group.add_argument("--method", help="request a specific method")
    group.add_argument("--all", action="store_true", default=False,
                       help="run every applicable method (default)")
    bench.add_argument("--out", default=None)
    bench.add_argument("--steps", type=int, default=None)
    bench.add_argument("--seed", type=int, default=None)
    bench.set_defaults(handler=_cmd_bench)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(handler=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())

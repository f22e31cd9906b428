"""Command-line client of the solver service.

The CLI is a thin HTTP client: by default it mounts the FastAPI app
in-process (no server needed); with ``--server URL`` it talks to a running
instance instead.  Artifacts returned by the service are written under the
output directory as CSV (17 significant digits) and JSON.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 invariant-suite failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .config import load_config, parse_set_value
from .errors import ConfigError

_EXIT = {"config": 2, "numerical": 3, "invariant": 4, "internal": 3}

STAGES = ["dispersion", "potential-certify", "exact", "wavetrain", "family", "solve", "verify", "evolve"]


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    # mount the service in-process; TestClient drives the ASGI app synchronously
    import warnings

    from .service.app import create_app

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    return TestClient(create_app(), base_url="http://fkwave.local")


def _write_artifacts(artifacts: list[dict], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for art in artifacts:
        if art["kind"] == "csv":
            cols = art["columns"]
            names = list(cols)
            rows = zip(*(cols[n] for n in names))
            path = out_dir / f"{art['name']}.csv"
            with path.open("w") as fh:
                fh.write(",".join(names) + "\n")
                for row in rows:
                    fh.write(",".join("%.17g" % v for v in row) + "\n")
        else:
            path = out_dir / f"{art['name']}.json"
            path.write_text(json.dumps(art["data"], indent=2, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fkwave", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run the {stage} stage")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted path, e.g. grid.inv_h=128)")
        sp.add_argument("--server", help="base URL of a running service (default: in-process)")
        sp.add_argument("--output-dir", help="artifact directory (default: config output_dir)")
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8711)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    overrides = {}
    for item in args.set:
        if "=" not in item:
            print(f"error: malformed --set {item!r} (need KEY=VALUE)", file=sys.stderr)
            return 2
        key, raw = item.split("=", 1)
        overrides[key] = parse_set_value(raw)

    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    payload = {"config": json.loads(cfg.model_dump_json())}
    out_dir = Path(args.output_dir or cfg.output_dir)

    with _client(args.server) as client:
        resp = client.post(f"/{args.command}", json=payload)
    body = resp.json()

    if resp.status_code != 200:
        kind = body.get("kind", "internal")
        print(f"error ({kind}): {body.get('message', resp.text)}", file=sys.stderr)
        if body.get("payload"):
            _write_artifacts(body["payload"].get("artifacts", []), out_dir)
        return _EXIT.get(kind, 3)

    _write_artifacts(body.get("artifacts", []), out_dir)
    print(body["summary"])
    return 0


if __name__ == "__main__":
    sys.exit(main())

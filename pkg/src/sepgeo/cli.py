"""Command-line front end; a thin client of the service layer.

By default each subcommand calls the shared request handlers in-process; with
``--server URL`` the same request is POSTed to a running service instead.
Exit codes: 0 success, 2 invalid input, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import httpx
from pydantic import ValidationError

from . import service as svc
from .errors import NonConvergence
from .states import FAMILIES


def _parse_dims(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"dims must look like '2,3', got {text!r}")
    return int(parts[0]), int(parts[1])


def _load_matrix(path: str) -> svc.MatrixPayload:
    with open(path) as fh:
        return svc.MatrixPayload(**json.load(fh))


def _parse_vector(text: str) -> list[list[float]]:
    data = json.loads(text)
    out = []
    for item in data:
        if isinstance(item, (int, float)):
            out.append([float(item), 0.0])
        else:
            out.append([float(item[0]), float(item[1])])
    return out


_ENDPOINTS = {
    "peres": ("/peres", svc.run_peres, svc.PeresResponse),
    "standard-form": ("/standard-form", svc.run_standard_form, svc.StandardFormResponse),
    "schmidt": ("/schmidt", svc.run_schmidt, svc.SchmidtResponse),
    "distance": ("/distance", svc.run_distance, svc.DistanceResponse),
    "make-state": ("/make-state", svc.run_make_state, svc.MakeStateResponse),
    "map-section": ("/map-section", svc.run_map_section, svc.MapSectionResponse),
}


def _client_factory(server: str) -> httpx.Client:
    return httpx.Client(base_url=server, timeout=None)


def _execute(command: str, request, server: str | None):
    path, handler, response_model = _ENDPOINTS[command]
    if server is None:
        return handler(request)
    with _client_factory(server) as client:
        reply = client.post(path, json=json.loads(request.model_dump_json()))
        if reply.status_code == 400:
            raise ValueError(reply.json().get("detail", reply.text))
        if reply.status_code == 409:
            raise NonConvergence(reply.json().get("detail", reply.text))
        reply.raise_for_status()
        return response_model(**reply.json())


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


_CSV_COLUMNS = [
    "format_version", "ray", "angle", "boundary", "u", "v",
    "residual", "initial_distance", "status",
]


def _section_csv(response: svc.MapSectionResponse) -> str:
    lines = []

    class _Sink:
        def write(self, chunk):
            lines.append(chunk)

    writer = csv.writer(_Sink())
    writer.writerow(_CSV_COLUMNS)
    for row in response.rows:
        writer.writerow([
            response.format_version,
            row.ray,
            repr(row.angle),
            row.boundary,
            "" if row.u is None else repr(row.u),
            "" if row.v is None else repr(row.v),
            "" if row.residual is None else repr(row.residual),
            "" if row.initial_distance is None else repr(row.initial_distance),
            row.status,
        ])
    return "".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepgeo", description="Separability geometry toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dims=False):
        p.add_argument("--server", default=None, help="base URL of a running service")
        p.add_argument("--out", default=None, help="write the result to this path")
        if dims:
            p.add_argument("--dims", required=True, type=_parse_dims,
                           help="subsystem dimensions, e.g. 2,2")

    p = sub.add_parser("peres", help="partial-transpose positivity test")
    p.add_argument("matrix", help="path to a matrix JSON file")
    p.add_argument("--tol", type=float, default=1e-10)
    common(p, dims=True)

    p = sub.add_parser("standard-form", help="two-qubit diagonal standard form")
    p.add_argument("matrix")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="strict-positivity margin on the input")
    common(p)

    p = sub.add_parser("schmidt", help="general product-transformation Schmidt decomposition")
    p.add_argument("matrix")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    common(p, dims=True)

    p = sub.add_parser("distance", help="distance to the closest separable state")
    p.add_argument("matrix")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    common(p, dims=True)

    p = sub.add_parser("make-state", help="generate a canonical state family member")
    p.add_argument("family", choices=list(FAMILIES))
    p.add_argument("--param", type=float, default=None, help="family parameter (p or a)")
    p.add_argument("--n", type=int, default=None, help="local dimension for bell")
    p.add_argument("--dims", type=_parse_dims, default=None)
    p.add_argument("--phi", type=str, default=None,
                   help="JSON list of components, e.g. '[1,0]' or '[[1,0],[0,1]]'")
    p.add_argument("--chi", type=str, default=None)
    p.add_argument("--no-verify", action="store_true",
                   help="skip generation-time property checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--server", default=None)
    p.add_argument("--out", default=None, help="write the matrix JSON here")

    p = sub.add_parser("map-section", help="boundary curves on a 2D section")
    p.add_argument("--plane", default="horodecki3x3", help="'horodecki3x3' or 'corners2x2'")
    p.add_argument("--param", type=float, default=0.5, help="anchor parameter a")
    p.add_argument("--rays", type=int, default=72)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coords", choices=["hs", "fig5"], default="hs",
                   help="coordinate convention (fig5 = hs times sqrt(2))")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--anchor1", default=None, help="matrix JSON path for a custom plane")
    p.add_argument("--anchor2", default=None)
    p.add_argument("--dims", type=_parse_dims, default=None)
    p.add_argument("--server", default=None)
    p.add_argument("--out", default=None, help="write the CSV dataset here")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run(svc.app, host=args.host, port=args.port)
        return 0

    try:
        if args.command == "peres":
            req = svc.PeresRequest(matrix=_load_matrix(args.matrix), dims=args.dims, tol=args.tol)
        elif args.command == "standard-form":
            req = svc.StandardFormRequest(
                matrix=_load_matrix(args.matrix), strictness_tol=args.tol
            )
        elif args.command == "schmidt":
            req = svc.SchmidtRequest(
                matrix=_load_matrix(args.matrix), dims=args.dims, tol=args.tol, seed=args.seed
            )
        elif args.command == "distance":
            req = svc.DistanceRequest(
                matrix=_load_matrix(args.matrix), dims=args.dims, tol=args.tol,
                max_iter=args.max_iter, seed=args.seed, restarts=args.restarts,
            )
        elif args.command == "make-state":
            req = svc.MakeStateRequest(
                family=args.family, param=args.param, n=args.n, dims=args.dims,
                phi=_parse_vector(args.phi) if args.phi else None,
                chi=_parse_vector(args.chi) if args.chi else None,
                verify=not args.no_verify, seed=args.seed,
            )
        elif args.command == "map-section":
            req = svc.MapSectionRequest(
                plane=args.plane, param=args.param, rays=args.rays, tol=args.tol,
                seed=args.seed, coords=args.coords, max_iter=args.max_iter,
                restarts=args.restarts,
                anchor1=_load_matrix(args.anchor1) if args.anchor1 else None,
                anchor2=_load_matrix(args.anchor2) if args.anchor2 else None,
                dims=args.dims,
            )
        else:  # pragma: no cover - argparse enforces the choices
            raise ValueError(f"unknown command {args.command!r}")

        response = _execute(args.command, req, args.server)

        if args.command == "map-section":
            _emit(_section_csv(response), args.out)
            print(json.dumps({"format_version": response.format_version, "meta": response.meta}))
        elif args.command == "make-state" and args.out:
            _emit(response.matrix.model_dump_json(indent=2), args.out)
            print(response.model_dump_json(exclude={"matrix"}, indent=2))
        else:
            _emit(response.model_dump_json(indent=2, by_alias=True), args.out)
        return 0
    except (ValueError, ValidationError, OSError, KeyError, httpx.HTTPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonConvergence as exc:
        print(f"error: did not converge: {exc}", file=sys.stderr)
        return 3


def entrypoint():  # pragma: no cover - console script shim
    raise SystemExit(main())


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())

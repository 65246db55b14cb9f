"""Thin command-line client for the ringsim service.

Every subcommand builds a request from the configuration file, sends it to
the HTTP API (an in-process instance by default, or a remote server via
``--server``) and writes the response to files/stdout.  Exit codes:
0 success, 1 configuration or transport error, 2 a run finished with
insufficient statistics.

Subcommands: pgr, simulate, franson, g2h, compare, replay, serve.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from dataclasses import replace
from pathlib import Path

import httpx

from ringsim.config import ConfigError, default_config, load_config
from ringsim.service import ConfigModel, create_app

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INSUFFICIENT = 2


class _Client:
    """One request path for local (in-process ASGI) and remote servers."""

    def __init__(self, server: str | None):
        self.server = server

    def request(self, method: str, path: str, payload=None, params=None):
        if self.server:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                resp = client.request(method, path, json=payload, params=params)
            return resp.status_code, resp.json()

        async def _go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport, base_url="http://ringsim.local", timeout=None) as client:
                resp = await client.request(method, path, json=payload, params=params)
                return resp.status_code, resp.json()

        return asyncio.run(_go())


def _load(args) -> tuple:
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = replace(cfg, run=replace(cfg.run, seed=args.seed))
    if args.out is not None:
        cfg = replace(cfg, output=replace(cfg.output, directory=args.out))
    if args.format is not None:
        cfg = replace(cfg, output=replace(cfg.output, format=args.format))
    return cfg, ConfigModel.from_config(cfg).model_dump()


def _outdir(cfg) -> Path:
    path = Path(cfg.output.directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _kv_lines(pairs) -> str:
    return "".join(f"{k}={_kv_val(v)}\n" for k, v in pairs)


def _kv_val(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _fail(status: int, body) -> int:
    detail = body.get("detail", body) if isinstance(body, dict) else body
    print(f"error ({status}): {detail}", file=sys.stderr)
    return EXIT_CONFIG


def _cmd_pgr(args) -> int:
    cfg, model = _load(args)
    client = _Client(args.server)
    status, body = client.request("POST", "/pgr", {"config": model})
    if status != 200:
        return _fail(status, body)
    print(f"pgr_per_mw2 = {body['pgr_per_mw2']:.6g} pairs/s/mW^2")
    print(f"fwhm = {body['fwhm_pm']:.6g} pm ({body['fwhm_ghz']:.6g} GHz)")
    print(f"fsr = {body['fsr_nm']:.6g} nm")
    print(f"brightness = {body['brightness_pairs_per_s_per_ghz']:.6g} pairs/s/GHz at 1 mW")
    for row in body["rows"]:
        print(f"  P = {row['power_mw']:g} mW -> PGR = {row['pgr_pairs_per_s']:.6g} pairs/s")
    out = _outdir(cfg)
    scalars = [
        ("pgr_per_mw2", body["pgr_per_mw2"]),
        ("fwhm_pm", body["fwhm_pm"]),
        ("fwhm_ghz", body["fwhm_ghz"]),
        ("fsr_nm", body["fsr_nm"]),
        ("brightness_pairs_per_s_per_ghz", body["brightness_pairs_per_s_per_ghz"]),
        ("cavity_lifetime_ns", body["cavity_lifetime_ns"]),
    ]
    if cfg.output.format == "kv":
        (out / "pgr.kv").write_text(_kv_lines(scalars))
    else:
        rows = "\n".join(f"{r['power_mw']:.10g},{r['pgr_pairs_per_s']:.10g}" for r in body["rows"])
        (out / "pgr.csv").write_text("power_mw,pgr_pairs_per_s\n" + rows + "\n")
        (out / "pgr_report.csv").write_text(
            "key,value\n" + "".join(f"{k},{_kv_val(v)}\n" for k, v in scalars)
        )
    return EXIT_OK


_SUMMARY_COLUMNS = (
    "power_mw",
    "singles_signal_hz",
    "singles_idler_hz",
    "coincidences",
    "accidentals",
    "car",
    "pgr_onchip",
)


def _cmd_simulate(args) -> int:
    cfg, model = _load(args)
    client = _Client(args.server)
    status, body = client.request("POST", "/simulate", {"config": model, "include_timetags": not args.no_timetags})
    if status != 200:
        return _fail(status, body)
    out = _outdir(cfg)
    for name, text in body["files"].items():
        (out / name).write_text(text)
    lines = [",".join(_SUMMARY_COLUMNS)]
    for row in body["rows"]:
        lines.append(",".join(_kv_val(row[c]) for c in _SUMMARY_COLUMNS))
    table = "\n".join(lines) + "\n"
    (out / "summary.csv").write_text(table)
    if cfg.output.format == "kv":
        for i, row in enumerate(body["rows"]):
            (out / f"summary_{i:02d}.kv").write_text(_kv_lines([(c, row[c]) for c in _SUMMARY_COLUMNS]))
    print(table, end="")
    if any(row["insufficient_statistics"] for row in body["rows"]):
        print("insufficient statistics: some powers had no accidental counts; extend duration_s", file=sys.stderr)
        return EXIT_INSUFFICIENT
    return EXIT_OK


def _cmd_franson(args) -> int:
    cfg, model = _load(args)
    client = _Client(args.server)
    status, body = client.request("POST", "/franson", {"config": model})
    if status != 200:
        return _fail(status, body)
    out = _outdir(cfg)
    (out / "franson_sweep.csv").write_text(body["sweep_csv"])
    report = [
        ("v_raw", body["v_raw"]),
        ("v_fit", body["v_fit"]),
        ("sigma_v", body["sigma_v"]),
        ("bell_sigmas", body["bell_sigmas"]),
    ]
    if cfg.output.format == "csv":
        (out / "visibility.csv").write_text("key,value\n" + "".join(f"{k},{_kv_val(v)}\n" for k, v in report))
    else:
        (out / "visibility.kv").write_text(_kv_lines(report))
    for k, v in report:
        print(f"{k} = {_kv_val(v)}")
    return EXIT_OK


def _cmd_g2h(args) -> int:
    cfg, model = _load(args)
    client = _Client(args.server)
    status, body = client.request("POST", "/g2h", {"config": model})
    if status != 200:
        return _fail(status, body)
    out = _outdir(cfg)
    report = [(k, body[k]) for k in ("n_herald", "n_ab", "n_ac", "n_abc", "window_ps", "g2_heralded")]
    if cfg.output.format == "csv":
        (out / "g2h.csv").write_text("key,value\n" + "".join(f"{k},{_kv_val(v)}\n" for k, v in report))
    else:
        (out / "g2h.kv").write_text(_kv_lines(report))
    for k, v in report:
        print(f"{k} = {_kv_val(v)}")
    if body["insufficient_statistics"]:
        print("insufficient statistics: no two-fold coincidences to normalize g2", file=sys.stderr)
        return EXIT_INSUFFICIENT
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg, _ = _load(args)
    client = _Client(args.server)
    status, body = client.request("GET", "/compare", params={"isolines": True})
    if status != 200:
        return _fail(status, body)
    out = _outdir(cfg)
    (out / "platforms.csv").write_text(body["platforms_csv"])
    if body.get("isolines_csv"):
        (out / "brightness_vs_nonlinearity.csv").write_text(body["isolines_csv"])
    print(body["platforms_csv"], end="")
    print("brightness ratios vs AlGaAsOI:")
    for name, ratio in body["brightness_ratios"].items():
        print(f"  {name}: {ratio:.6g}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    cfg, model = _load(args)
    client = _Client(args.server)
    out = _outdir(cfg)
    worst = EXIT_OK
    for path in args.files:
        text = Path(path).read_text()
        status, body = client.request("POST", "/replay", {"config": model, "file_text": text})
        if status != 200:
            return _fail(status, body)
        stem = Path(path).stem
        if cfg.output.format == "kv":
            (out / f"replay_{stem}.kv").write_text(_kv_lines(_flatten(body)))
        else:
            (out / f"replay_{stem}.csv").write_text(
                "key,value\n" + "".join(f"{k},{_kv_val(v)}\n" for k, v in _flatten(body))
            )
        print(f"{path}:")
        for k, v in _flatten(body):
            print(f"  {k} = {_kv_val(v)}")
        if body.get("insufficient_statistics"):
            worst = EXIT_INSUFFICIENT
    return worst


def _flatten(obj, prefix=""):
    items = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            items.extend(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        items.append((prefix.rstrip("."), json.dumps(obj)))
    else:
        items.append((prefix.rstrip("."), obj))
    return items


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringsim", description=__doc__)
    parser.add_argument("--config", help="experiment configuration file")
    parser.add_argument("--seed", type=int, help="override run.seed")
    parser.add_argument("--out", help="override output.directory")
    parser.add_argument("--format", choices=("csv", "kv"), help="override output.format")
    parser.add_argument("--server", help="remote service URL (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("pgr", help="resonator figures of merit").set_defaults(fn=_cmd_pgr)
    p_sim = sub.add_parser("simulate", help="two-detector power sweep")
    p_sim.add_argument("--no-timetags", action="store_true", help="skip writing time-tag files")
    p_sim.set_defaults(fn=_cmd_simulate)
    sub.add_parser("franson", help="interferometer phase sweep and visibility").set_defaults(fn=_cmd_franson)
    sub.add_parser("g2h", help="three-detector heralded autocorrelation").set_defaults(fn=_cmd_g2h)
    sub.add_parser("compare", help="platform benchmark table").set_defaults(fn=_cmd_compare)
    p_rep = sub.add_parser("replay", help="analyze existing time-tag files")
    p_rep.add_argument("files", nargs="+", help="time-tag files (v1 format)")
    p_rep.set_defaults(fn=_cmd_replay)
    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``eband <subcommand> [flags]``.

Physical inputs are taken in engineering units (GHz, m, dBm, mm/h) and
converted to SI here.  Tables go to CSV, documents to JSON; every JSON
document carries ``schema_version``.

Exit codes
==========

====  ==========================================================
code  meaning
====  ==========================================================
0     success
2     usage error: bad flag, value outside a model's domain,
      invalid scenario configuration
3     schema error: malformed scenario document, or a custom
      numerology that breaks an integer sample identity
4     policy error: transmit power over the 3 W ceiling,
      too many aggregated channels
5     numerical error: eigensolve residual, infeasible or
      unbracketed multiplexing-distance search
6     aggregation error: channels not contiguous / not in one band
====  ==========================================================

Output files default to the current directory, or to ``$EBAND_OUTPUT_DIR``
when that is set and a bare file name is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from eband import airframe, losmimo
from eband.airframe import numerology as nmod
from eband.coopsim import (
    SCENARIO_SCHEMA,
    Scenario,
    example_scenario_dict,
    run_round,
    simulate,
)
from eband.errors import (
    AggregationError,
    ConfigurationError,
    DomainError,
    EbandError,
    InconsistentNumerologyError,
    NumericalError,
    PolicyError,
    SchemaError,
)
from eband.propagation import AntennaGains, WeatherState, link_budget
from eband.quantities import GHZ, kmh_to_ms, wavelength_of

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_POLICY = 4
EXIT_NUMERICAL = 5
EXIT_AGGREGATION = 6

OUTPUT_DIR_ENV = "EBAND_OUTPUT_DIR"


class UsageError(EbandError):
    pass


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the documented exit code."""
    if isinstance(exc, (SchemaError, InconsistentNumerologyError)):
        return EXIT_SCHEMA
    if isinstance(exc, PolicyError):
        return EXIT_POLICY
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, AggregationError):
        return EXIT_AGGREGATION
    if isinstance(exc, (UsageError, DomainError, ConfigurationError)):
        return EXIT_USAGE
    raise exc


def output_path(name: str) -> Path:
    p = Path(name)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute() and p.parent == Path("."):
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write(name: str, text: str) -> Path:
    p = output_path(name)
    p.write_text(text)
    return p


# linkbudget ---------------------------------------------------------------

def cmd_linkbudget(args) -> int:
    if not args.dist_m > 0:
        raise UsageError("--dist-m must be positive")
    if not args.freq_ghz > 0:
        raise UsageError("--freq-ghz must be positive")
    weather = WeatherState(args.rain_mmh, args.fog_gm3, args.foliage_m)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = link_budget(
            args.txpower_dbm, AntennaGains.from_dbi(args.gain_tx_dbi, args.gain_rx_dbi),
            args.freq_ghz * GHZ, args.dist_m, weather, los=not args.nlos,
            noise_power=args.noise_dbm, shadowing_db=args.shadow_db,
            allow_over_ceiling=args.force)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.format == "json":
        doc = {"schema_version": 1, "inputs": {
            "freq_ghz": args.freq_ghz, "dist_m": args.dist_m, "txpower_dbm": args.txpower_dbm,
            "gain_tx_dbi": args.gain_tx_dbi, "gain_rx_dbi": args.gain_rx_dbi,
            "rain_mmh": args.rain_mmh, "fog_gm3": args.fog_gm3, "foliage_m": args.foliage_m,
            "nlos": args.nlos, "noise_dbm": args.noise_dbm}, "report": rep.as_dict()}
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    path = "NLoS path gain" if args.nlos else "free-space gain"
    lines = [
        (f"{path} (incl. antennas)", rep.free_space_gain, "dB"),
        ("atmospheric loss", rep.atmospheric_loss, "dB"),
        ("rain loss", rep.rain_loss, "dB"),
        ("fog loss", rep.fog_loss, "dB"),
        ("foliage loss", rep.foliage_loss, "dB"),
        ("total path gain", rep.total_path_gain, "dB"),
        ("transmit power", args.txpower_dbm, "dBm"),
        ("received power", rep.received_power, "dBm"),
        ("noise power", args.noise_dbm, "dBm"),
        ("SNR", rep.snr, "dB"),
    ]
    print(f"link {args.dist_m:g} m at {args.freq_ghz:g} GHz ({'NLoS' if args.nlos else 'LoS'})")
    for label, value, unit in lines:
        print(f"  {label:<32s} {value:9.2f} {unit}")
    return EXIT_OK


# eigencurves --------------------------------------------------------------

def cmd_eigencurves(args) -> int:
    lam = wavelength_of(args.freq_ghz * GHZ)
    d_ray = losmimo.rayleigh_distance(args.nt, args.nr, args.dt_m, args.dr_m, lam)
    d_min = args.dmin_m if args.dmin_m is not None else 0.2 * d_ray
    d_max = args.dmax_m if args.dmax_m is not None else 20.0 * d_ray
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if not 0 < d_min <= d_max:
        raise UsageError("need 0 < --dmin-m <= --dmax-m")
    snap = d_ray if (d_min <= d_ray <= d_max or args.points == 1) else None
    grid = losmimo.distance_grid(d_min, d_max, args.points, args.spacing, snap_to=snap)
    template = losmimo.aligned_link(args.nt, args.nr, args.dt_m, args.dr_m, lam, grid[0],
                                    args.phase_model)
    table = losmimo.eigen_curve_sweep(template, grid, args.gamma)
    text = table.to_csv()
    summary = [
        f"Rayleigh distance: {d_ray:.6g} m",
        f"rows: {len(grid)}  gamma: {args.gamma:g}  phase model: {args.phase_model}",
        f"EDOF: {int(table.edof[0])} at {grid[0]:.4g} m, {int(table.edof[-1])} at {grid[-1]:.4g} m",
    ]
    i_ray = [i for i, d in enumerate(grid) if d == d_ray]
    if i_ray:
        summary.append(f"EDOF at Rayleigh distance: {int(table.edof[i_ray[0]])}")
    if args.out:
        p = _write(args.out, text)
        summary.append(f"wrote {p}")
        print("\n".join(summary))
    else:
        sys.stdout.write(text)
        print("\n".join(summary), file=sys.stderr)
    return EXIT_OK


# numerology ---------------------------------------------------------------

def _load_custom(spec: str) -> airframe.Numerology:
    text = spec if spec.lstrip().startswith("{") else Path(spec).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError([("", f"not valid JSON: {exc}")]) from None
    if not isinstance(doc, dict):
        raise SchemaError([("", "numerology must be a JSON object")])
    doc = {k: v for k, v in doc.items() if k != "schema_version"}
    try:
        return airframe.Numerology.from_dict(doc)
    except DomainError as exc:
        raise SchemaError([("", str(exc))]) from None


def cmd_numerology(args) -> int:
    n = _load_custom(args.custom) if args.custom else airframe.emb_default_numerology()
    n.check()
    report = airframe.validate_numerology(
        n, kmh_to_ms(args.max_speed_kmh), args.fmax_ghz * GHZ, args.clock_ppm,
        args.delay_spread_ns * 1e-9)
    if args.export_layout or args.export_summary:
        layout = airframe.build_frame_layout(n, args.frames)
        if args.export_layout:
            p = _write(args.export_layout, layout.to_csv())
            print(f"wrote {p}", file=sys.stderr)
        if args.export_summary:
            p = _write(args.export_summary, layout.summary_json())
            print(f"wrote {p}", file=sys.stderr)
    if args.format == "json":
        print(json.dumps(report.as_dict(), indent=2))
    else:
        print(f"{'constraint':<18s} {'result':<6s} {'value':>14s} {'limit':>14s} "
              f"{'margin':>14s}  unit")
        for c in report.constraints:
            print(f"{c.key:<18s} {'PASS' if c.passed else 'FAIL':<6s} {c.value:14.6g} "
                  f"{c.limit:14.6g} {c.margin:14.6g}  {c.unit}")
        print(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK


# chanplan -----------------------------------------------------------------

def cmd_chanplan(args) -> int:
    plan = airframe.channel_plan(args.region)
    doc = plan.as_dict()
    if args.aggregate:
        span = airframe.aggregate_channels(plan, airframe.parse_index_range(args.aggregate))
        doc["aggregate"] = span.as_dict()
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        print(f"wrote {_write(args.out, text)}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# coopsim ------------------------------------------------------------------

def _parse_override(item: str) -> tuple[list[str], object]:
    if "=" not in item:
        raise UsageError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    path = key.strip().split(".")
    props = SCENARIO_SCHEMA["properties"]
    node = props
    for i, part in enumerate(path):
        if part not in node:
            raise UsageError(f"unknown scenario key {key!r}")
        sub = node[part]
        if i < len(path) - 1:
            if "properties" not in sub:
                raise UsageError(f"scenario key {'.'.join(path[:i + 1])!r} has no sub-keys")
            node = sub["properties"]
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(doc: dict, items) -> dict:
    doc = json.loads(json.dumps(doc))
    for item in items or ():
        path, value = _parse_override(item)
        node = doc
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = value
    return doc


def cmd_coopsim(args) -> int:
    if args.drops < 1:
        raise UsageError("--drops must be >= 1")
    if args.scenario:
        try:
            doc = json.loads(Path(args.scenario).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError([("", f"not valid JSON: {exc}")]) from None
    else:
        doc = example_scenario_dict()
    doc = apply_overrides(doc, args.set)
    s = Scenario.from_dict(doc)
    print(f"seed: {s.seed}", file=sys.stderr)
    result = run_round(s) if args.as_placed else simulate(s, args.drops)
    text = result.to_json()
    if args.out:
        print(f"wrote {_write(args.out, text)}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    if args.outcomes_csv:
        print(f"wrote {_write(args.outcomes_csv, result.to_csv())}", file=sys.stderr)
    return EXIT_OK


# parser -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eband", description="E-band link, LoS-MIMO, numerology and coverage tools")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    lb = sub.add_parser("linkbudget", help="itemised link budget of one link")
    lb.add_argument("--freq-ghz", type=float, default=73.5)
    lb.add_argument("--dist-m", type=float, required=True)
    lb.add_argument("--txpower-dbm", type=float, default=30.0)
    lb.add_argument("--gain-tx-dbi", type=float, default=25.0)
    lb.add_argument("--gain-rx-dbi", type=float, default=25.0)
    lb.add_argument("--rain-mmh", type=float, default=0.0)
    lb.add_argument("--fog-gm3", type=float, default=0.0)
    lb.add_argument("--foliage-m", type=float, default=0.0)
    lb.add_argument("--nlos", action="store_true", help="use the NLoS close-in model")
    lb.add_argument("--shadow-db", type=float, default=0.0, help="NLoS shadowing sample")
    lb.add_argument("--noise-dbm", type=float, default=-83.0)
    lb.add_argument("--force", action="store_true", help="allow power above the 3 W ceiling")
    lb.add_argument("--format", choices=("text", "json"), default="text")
    lb.set_defaults(func=cmd_linkbudget)

    ec = sub.add_parser("eigencurves", help="LoS-MIMO eigenvalues against range (CSV)")
    ec.add_argument("--nt", type=int, default=20)
    ec.add_argument("--nr", type=int, default=20)
    ec.add_argument("--dt-m", type=float, default=0.05)
    ec.add_argument("--dr-m", type=float, default=0.05)
    ec.add_argument("--freq-ghz", type=float, default=75.0)
    ec.add_argument("--dmin-m", type=float, default=None, help="default 0.2 x Rayleigh distance")
    ec.add_argument("--dmax-m", type=float, default=None, help="default 20 x Rayleigh distance")
    ec.add_argument("--points", type=int, default=200)
    ec.add_argument("--spacing", choices=("log", "linear"), default="log")
    ec.add_argument("--gamma", type=float, default=losmimo.DEFAULT_GAMMA)
    ec.add_argument("--phase-model", choices=losmimo.PHASE_MODELS, default="paraxial")
    ec.add_argument("--out", help="CSV path (default: stdout)")
    ec.set_defaults(func=cmd_eigencurves)

    nu = sub.add_parser("numerology", help="validate an OFDM numerology")
    src = nu.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=("emb",), default="emb")
    src.add_argument("--custom", help="numerology JSON file or inline JSON object")
    nu.add_argument("--max-speed-kmh", type=float, default=nmod.DEFAULT_MAX_SPEED_KMH)
    nu.add_argument("--fmax-ghz", type=float, default=nmod.DEFAULT_F_MAX_HZ / GHZ)
    nu.add_argument("--clock-ppm", type=float, default=nmod.DEFAULT_CLOCK_PPM)
    nu.add_argument("--delay-spread-ns", type=float,
                    default=nmod.DEFAULT_MAX_DELAY_SPREAD_S * 1e9)
    nu.add_argument("--frames", type=int, default=1)
    nu.add_argument("--export-layout", help="per-symbol frame layout CSV")
    nu.add_argument("--export-summary", help="frame layout summary JSON")
    nu.add_argument("--format", choices=("text", "json"), default="text")
    nu.set_defaults(func=cmd_numerology)

    cp = sub.add_parser("chanplan", help="regional E-band channel plan (JSON)")
    cp.add_argument("--region", required=True, help="us, uk or eu")
    cp.add_argument("--aggregate", help="channel selection, e.g. 1..19 or 4,5")
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_chanplan)

    cs = sub.add_parser("coopsim", help="coverage simulation with user cooperation")
    cs.add_argument("--scenario", help="scenario JSON (default: bundled example)")
    cs.add_argument("--drops", type=int, default=1)
    cs.add_argument("--as-placed", action="store_true",
                    help="one round on the scenario's own user positions")
    cs.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a scenario field (dotted keys for weather.*)")
    cs.add_argument("--out", help="aggregate JSON path (default: stdout)")
    cs.add_argument("--outcomes-csv", help="per-user outcomes CSV path")
    cs.set_defaults(func=cmd_coopsim)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except EbandError as exc:
        code = exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, NumericalError) and exc.diagnostics:
            print(f"diagnostics: {json.dumps(exc.diagnostics, default=str)}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())

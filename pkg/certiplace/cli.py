"""
Command-line interface for certiplace
"""
import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from . import __version__
from .bookshelf_io import (
    BenchmarkBundle,
    parse_bundle,
    parse_placement,
    read_certificate,
    write_bundle,
    write_certificate,
)
from .config import (
    McConfig,
    MsConfig,
    default_output_dir,
    load_mc_config,
    load_ms_config,
)
from .errors import (
    BookshelfParseError,
    CertiplaceError,
    CertificationError,
    ConfigError,
    ModuleSetMismatch,
    NotGridIntegralError,
    OracleLimitError,
    UnplacedPinError,
    WhiteSpaceShortfall,
)
from .evaluation import evaluate, report_rows, write_eval_report, EVAL_COLUMNS
from .mc_gen import generate_mc, snap_placement_to_grid
from .ms_gen import generate_ms
from .ogp_gen import SnapMode, ogp_sweep, parse_bins


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_WHITE_SPACE = 3
EXIT_CERTIFICATION = 4
EXIT_ORACLE = 5
EXIT_OTHER = 6

EXIT_CODES = """exit codes:
  0  success
  1  usage error
  2  input, parse or config error
  3  white-space target missed
  4  certification failure
  5  oracle limit exceeded
  6  any other generator error
"""


@dataclass
class RunManifest:
    """Everything needed to rerun a subcommand"""
    subcommand: str
    config: Dict[str, Any]
    seed: int
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    version: str = __version__
    wall_time: float = 0.0

    def write(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        path = Path(path)
        try:
            with open(path) as f:
                data = json.load(f)
            return cls(**data)
        except OSError:
            raise ConfigError(f"manifest not found: {path}")
        except (json.JSONDecodeError, TypeError) as e:
            raise ConfigError(f"malformed manifest {path}: {e}")


def exit_code(error: CertiplaceError) -> int:
    if isinstance(error, WhiteSpaceShortfall):
        return EXIT_WHITE_SPACE
    if isinstance(error, CertificationError):
        return EXIT_CERTIFICATION
    if isinstance(error, OracleLimitError):
        return EXIT_ORACLE
    if isinstance(error, (ConfigError, BookshelfParseError, NotGridIntegralError,
                          UnplacedPinError, ModuleSetMismatch)):
        return EXIT_INPUT
    return EXIT_OTHER


def run_ms(mapping: Dict[str, Any], out_dir: str) -> Dict[str, Any]:
    """Generate and write one mixed-size benchmark; module level so pool workers can run it"""
    started = time.time()
    config = MsConfig.from_mapping(mapping)
    result = generate_ms(config)
    target = Path(out_dir) / config.name
    paths = write_bundle(result.bundle(), target)
    json_path, csv_path = write_certificate(result.certificate, target)
    manifest = RunManifest(
        "gen-ms",
        config.to_mapping(),
        config.seed,
        outputs={**{k: str(v) for k, v in paths.items()},
                 "certificate": str(json_path), "certificate_table": str(csv_path)},
        wall_time=round(time.time() - started, 3),
    )
    manifest.write(target / f"{config.name}.manifest.json")
    return {"name": config.name, "rho": result.certificate.ratio,
            "nets": len(result.netlist.nets), "aux": str(paths["aux"])}


def _ms_overrides(args) -> Dict[str, Any]:
    return {
        "name": args.name,
        "seed": args.seed,
        "std_cells": args.std_cells,
        "utilization": args.utilization,
        "bin_rows": args.bin_rows,
        "nonlocal_chains": args.nonlocal_chains,
        "pads": args.pads,
        "slack": args.slack,
        "source": args.source,
        "pack": True if args.pack else None,
    }


def gen_ms_command(args) -> int:
    """Handle 'gen-ms' command"""
    out_dir = args.output_dir or default_output_dir()
    if args.from_manifest:
        items = [RunManifest.read(args.from_manifest).config]
    else:
        overrides = _ms_overrides(args)
        values = [v.strip() for v in args.white_space.split(",")] if args.white_space else [None]
        items = []
        for value in values:
            config = load_ms_config(args.config, {**overrides, "white_space": value})
            if len(values) > 1:
                config.name = f"{config.name}_ws{value}"
            items.append(config.to_mapping())

    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_ms, items, [out_dir] * len(items)))
    else:
        results = [run_ms(item, out_dir) for item in items]
    for r in results:
        print(f"{r['name']}: rho={r['rho']:.4f} nets={r['nets']} -> {r['aux']}")
    return EXIT_OK


def gen_mc_command(args) -> int:
    """Handle 'gen-mc' command"""
    started = time.time()
    out_dir = Path(args.output_dir or default_output_dir())
    if args.from_manifest:
        manifest = RunManifest.read(args.from_manifest)
        config = McConfig.from_mapping(manifest.config)
        config.validate()
        aux, pl = manifest.inputs.get("aux"), manifest.inputs.get("placement")
    else:
        config = load_mc_config(args.config, {
            "name": args.name,
            "seed": args.seed,
            "snap": True if args.snap else None,
            "max_chains_per_terminal": args.max_chains_per_terminal,
        })
        aux, pl = args.aux, args.placement
    if not aux:
        raise ConfigError("gen-mc needs an input .aux file")

    bundle = parse_bundle(aux)
    netlist, placement = bundle.netlist, bundle.placement
    if pl:
        placement = parse_placement(pl, netlist, bundle.row_height)
    if config.snap:
        netlist, placement = snap_placement_to_grid(netlist, placement)

    result = generate_mc(netlist, placement, config=config)
    target = out_dir / config.name
    paths = write_bundle(
        BenchmarkBundle(config.name, result.netlist, result.placement, bundle.rows), target
    )
    json_path, csv_path = write_certificate(result.certificate, target)
    stats_path = result.stats.write_csv(target / f"{config.name}.stats.csv")
    inputs = {"aux": str(aux)}
    if pl:
        inputs["placement"] = str(pl)
    RunManifest(
        "gen-mc",
        config.to_mapping(),
        config.seed,
        inputs=inputs,
        outputs={**{k: str(v) for k, v in paths.items()}, "certificate": str(json_path),
                 "certificate_table": str(csv_path), "stats": str(stats_path)},
        wall_time=round(time.time() - started, 3),
    ).write(target / f"{config.name}.manifest.json")

    stats = result.stats
    print(f"{config.name}: rho={result.certificate.ratio:.4f} nets={len(result.netlist.nets)} "
          f"chains={stats.chains} retained={stats.retention:.3f} "
          f"nonlocal={stats.nonlocal_fraction:.3f} -> {paths['aux']}")
    return EXIT_OK


def _certificate_for(aux, explicit: Optional[str]):
    if explicit:
        return Path(explicit)
    aux = Path(aux)
    return aux.with_name(f"{aux.stem}.cert.json")


def ogp_command(args) -> int:
    """Handle 'ogp' command"""
    bundle = parse_bundle(args.aux)
    cert_path = _certificate_for(args.aux, args.certificate)
    certificate = read_certificate(cert_path)
    mode = SnapMode.MOVE_ALL if args.move_all else SnapMode.FIX_MACROS
    out_dir = args.output_dir or default_output_dir()
    manifest = ogp_sweep(bundle, certificate, parse_bins(args.bins), mode, out_dir,
                         str(cert_path))
    for item in manifest["benchmarks"]:
        print(f"{item['bins']}: max displacement {item['max_displacement']} -> {item['aux']}")
    return EXIT_OK


def eval_command(args) -> int:
    """Handle 'eval' command"""
    out_dir = Path(args.output_dir or default_output_dir())
    reference = parse_bundle(args.reference).placement if args.reference else None
    reports = []
    for aux in args.aux:
        bundle = parse_bundle(aux)
        if args.placement:
            bundle.placement = parse_placement(args.placement, bundle.netlist, bundle.row_height)
        certificate = read_certificate(_certificate_for(aux, args.certificate))
        report = evaluate(bundle, certificate, args.utilization, args.bin_rows, reference)
        if report.displacement is not None:
            report.displacement.write_csv(out_dir / f"{bundle.name}.displacement.csv")
        reports.append(report)

    path = write_eval_report(out_dir / f"{args.report}.eval.csv", reports, args.median)
    print("\t".join(EVAL_COLUMNS[:1] + EVAL_COLUMNS[-3:]))
    for row in report_rows(reports, args.median):
        print("\t".join([str(row[0])] + row[-3:]))
    print(f"report -> {path}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        description="certiplace - placement benchmarks with certified optimal wirelength",
        prog="certiplace",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")
    parser.add_argument(
        "--json-errors",
        action="store_true",
        help="Report failures as a JSON object on stderr"
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # gen-ms command
    ms_parser = subparsers.add_parser("gen-ms", help="Generate mixed-size benchmarks")
    ms_parser.add_argument("--config", help="Key/value config file")
    ms_parser.add_argument(
        "--white-space",
        help="White-space fraction, or a comma-separated sweep (e.g. 0.05,0.10,0.20,max)"
    )
    ms_parser.add_argument("--pack", action="store_true",
                           help="Pack the left half, put all white space in the right half")
    ms_parser.add_argument("--seed", type=int, help="RNG seed")
    ms_parser.add_argument("--name", help="Benchmark name")
    ms_parser.add_argument("--std-cells", type=int, help="Number of standard cells")
    ms_parser.add_argument("--source", help="Bookshelf .aux supplying region, macros, degrees")
    ms_parser.add_argument("--utilization", type=float,
                           help="Per-bin utilization target for white-space insertion")
    ms_parser.add_argument("--bin-rows", type=int, help="Bin side in standard-cell rows")
    ms_parser.add_argument("--nonlocal-chains", type=int, help="Number of nonlocal chains")
    ms_parser.add_argument("--pads", type=int, help="Boundary pads for nonlocal chains")
    ms_parser.add_argument("--slack", type=int, help="Allowed HPWL excess of local nets")
    ms_parser.add_argument("--jobs", type=int, default=1, help="Parallel sweep items")
    ms_parser.add_argument("--from-manifest", help="Rerun from a run manifest")
    ms_parser.add_argument("--output-dir", help="Output directory (default $CERTIPLACE_OUTPUT_DIR)")
    ms_parser.set_defaults(func=gen_ms_command)

    # gen-mc command
    mc_parser = subparsers.add_parser(
        "gen-mc", help="Rewrite a netlist so its placement becomes optimal"
    )
    mc_parser.add_argument("aux", nargs="?", help="Input .aux file")
    mc_parser.add_argument("--placement", help="Seed placement .pl (default: the bundle's)")
    mc_parser.add_argument("--config", help="Key/value config file")
    mc_parser.add_argument("--seed", type=int, help="RNG seed")
    mc_parser.add_argument("--name", help="Output benchmark name")
    mc_parser.add_argument("--snap", action="store_true",
                           help="Snap module centers and pin offsets to the grid first")
    mc_parser.add_argument("--max-chains-per-terminal", type=int,
                           help="Chains each fixed terminal may anchor")
    mc_parser.add_argument("--from-manifest", help="Rerun from a run manifest")
    mc_parser.add_argument("--output-dir", help="Output directory (default $CERTIPLACE_OUTPUT_DIR)")
    mc_parser.set_defaults(func=gen_mc_command)

    # ogp command
    ogp_parser = subparsers.add_parser("ogp", help="Derive bin-snapped OGP benchmarks")
    ogp_parser.add_argument("aux", help="Certified benchmark .aux file")
    ogp_parser.add_argument("--certificate", help="Certificate .cert.json (default: next to aux)")
    ogp_parser.add_argument("--bins", default="1x1,2x2,4x4,8x8", help="Bin sizes, WxH list")
    mode = ogp_parser.add_mutually_exclusive_group()
    mode.add_argument("--fix-macros", action="store_true", help="Keep macros in place (default)")
    mode.add_argument("--move-all", action="store_true", help="Snap movable macros too")
    ogp_parser.add_argument("--output-dir", help="Output directory (default $CERTIPLACE_OUTPUT_DIR)")
    ogp_parser.set_defaults(func=ogp_command)

    # eval command
    eval_parser = subparsers.add_parser("eval", help="Score placements against a certificate")
    eval_parser.add_argument("aux", nargs="+", help="Placed .aux file(s) to score")
    eval_parser.add_argument("--placement", help="Placement .pl overriding the bundle's")
    eval_parser.add_argument("--certificate", help="Certificate .cert.json (default: next to aux)")
    eval_parser.add_argument("--reference", help="Certified .aux for the displacement report")
    eval_parser.add_argument("--utilization", type=float, help="Target utilization for SOV/bin")
    eval_parser.add_argument("--bin-rows", type=int, default=10, help="Bin side in rows")
    eval_parser.add_argument("--median", action="store_true", help="Append a median row")
    eval_parser.add_argument("--report", default="report", help="Report file stem")
    eval_parser.add_argument("--output-dir", help="Output directory (default $CERTIPLACE_OUTPUT_DIR)")
    eval_parser.set_defaults(func=eval_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return args.func(args)
    except CertiplaceError as e:
        code = exit_code(e)
        if args.json_errors:
            print(json.dumps({"error": type(e).__name__, "message": str(e), "exit_code": code}),
                  file=sys.stderr)
        else:
            print(f"certiplace: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())

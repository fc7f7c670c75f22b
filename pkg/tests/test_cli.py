"""
Tests for the certiplace command line
"""
import csv
import json

import pytest

from certiplace.bookshelf_io import (
    BenchmarkBundle,
    parse_bundle,
    read_certificate,
    uniform_rows,
    write_bundle,
)
from certiplace.cli import RunManifest, build_parser, exit_code, main
from certiplace.errors import (
    BookshelfParseError,
    CertificationError,
    CertiplaceError,
    ConfigError,
    GridPlanError,
    ModuleSetMismatch,
    NetBudgetExhausted,
    NotGridIntegralError,
    OracleLimitError,
    WhiteSpaceShortfall,
)


CONFIG = (
    "name = tiny\n"
    "seed = 3\n"
    "std_cells = 60\n"
    "region = 0,0,10,10\n"
    "degrees = 2:40,3:15,4:8\n"
    "white_space = 0.1\n"
)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(CONFIG)
    return path


@pytest.fixture
def tiny_benchmark(tmp_path, config_file):
    """A generated benchmark under tmp_path/bench/tiny"""
    out = tmp_path / "bench"
    assert main(["gen-ms", "--config", str(config_file), "--output-dir", str(out)]) == 0
    return out / "tiny"


def test_no_command(capsys):
    """Test that a bare invocation prints help and fails"""
    assert main([]) == 1
    assert "gen-ms" in capsys.readouterr().out


def test_version(capsys):
    """Test the version flag"""
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "certiplace" in capsys.readouterr().out


def test_usage_error_exit_code(capsys):
    """Test that bad arguments exit with the usage code"""
    with pytest.raises(SystemExit) as info:
        main(["gen-ms", "--std-cells", "many"])
    assert info.value.code == 1
    assert "invalid int value" in capsys.readouterr().err


def test_parser_subcommands():
    """Test the argument defaults of each subcommand"""
    parser = build_parser()
    args = parser.parse_args(["ogp", "b.aux"])
    assert args.bins == "1x1,2x2,4x4,8x8"
    assert not args.move_all
    args = parser.parse_args(["eval", "a.aux", "b.aux", "--median"])
    assert args.aux == ["a.aux", "b.aux"]
    assert args.bin_rows == 10 and args.report == "report"


@pytest.mark.parametrize("error, code", [
    (ConfigError("x"), 2),
    (BookshelfParseError("f.nets", "bad", 3), 2),
    (NotGridIntegralError("x"), 2),
    (ModuleSetMismatch(["a"]), 2),
    (WhiteSpaceShortfall(4), 3),
    (CertificationError("x", "n1"), 4),
    (OracleLimitError("x"), 5),
    (GridPlanError("x"), 6),
    (NetBudgetExhausted("x"), 6),
    (CertiplaceError("x"), 6),
])
def test_exit_code(error, code):
    """Test the error to exit code mapping"""
    assert exit_code(error) == code


def test_gen_ms(capsys, tiny_benchmark):
    """Test that gen-ms writes the bundle, certificate and run manifest"""
    assert "tiny: rho=" in capsys.readouterr().out
    for suffix in ("aux", "nodes", "nets", "pl", "scl", "cert.json", "cert.csv", "manifest.json"):
        assert (tiny_benchmark / f"tiny.{suffix}").exists(), suffix

    bundle = parse_bundle(tiny_benchmark / "tiny.aux")
    certificate = read_certificate(tiny_benchmark / "tiny.cert.json")
    certificate.verify(bundle.netlist, bundle.placement)

    manifest = RunManifest.read(tiny_benchmark / "tiny.manifest.json")
    assert manifest.subcommand == "gen-ms"
    assert manifest.seed == 3
    assert manifest.config["std_cells"] == 60
    assert manifest.outputs["aux"].endswith("tiny.aux")


def test_gen_ms_from_manifest(tiny_benchmark, tmp_path):
    """Test that a rerun from the manifest reproduces the netlist"""
    again = tmp_path / "again"
    assert main(["gen-ms", "--from-manifest", str(tiny_benchmark / "tiny.manifest.json"),
                 "--output-dir", str(again)]) == 0
    assert (again / "tiny" / "tiny.nets").read_text() == (tiny_benchmark / "tiny.nets").read_text()
    assert (again / "tiny" / "tiny.pl").read_text() == (tiny_benchmark / "tiny.pl").read_text()


def test_gen_ms_white_space_sweep(config_file, tmp_path):
    """Test one benchmark per white-space value"""
    out = tmp_path / "sweep"
    assert main(["gen-ms", "--config", str(config_file), "--white-space", "0.1,0.2",
                 "--output-dir", str(out)]) == 0
    for name in ("tiny_ws0.1", "tiny_ws0.2"):
        assert (out / name / f"{name}.aux").exists()
    header = json.loads((out / "tiny_ws0.2" / "tiny_ws0.2.cert.json").read_text())
    assert header["parameters"]["white_space"] == pytest.approx(0.2)


def test_gen_ms_output_dir_from_environment(config_file, tmp_path, monkeypatch):
    """Test that CERTIPLACE_OUTPUT_DIR is the default output directory"""
    monkeypatch.setenv("CERTIPLACE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["gen-ms", "--config", str(config_file), "--name", "envbench"]) == 0
    assert (tmp_path / "env" / "envbench" / "envbench.aux").exists()


def test_ogp(tiny_benchmark, tmp_path, capsys):
    """Test deriving bin-snapped benchmarks from a generated one"""
    out = tmp_path / "ogp"
    assert main(["ogp", str(tiny_benchmark / "tiny.aux"), "--bins", "1x1,2x2",
                 "--output-dir", str(out)]) == 0
    manifest = json.loads((out / "tiny.ogp.json").read_text())
    assert [b["bins"] for b in manifest["benchmarks"]] == ["1x1", "2x2"]
    assert manifest["certificate"].endswith("tiny.cert.json")
    assert (out / "tiny_ogp_2x2" / "tiny_ogp_2x2.aux").exists()
    assert "2x2: max displacement" in capsys.readouterr().out


def test_eval(tiny_benchmark, tmp_path):
    """Test scoring the certified placement itself"""
    aux = str(tiny_benchmark / "tiny.aux")
    out = tmp_path / "eval"
    assert main(["eval", aux, "--reference", aux, "--utilization", "0.9", "--bin-rows", "3",
                 "--median", "--report", "r", "--output-dir", str(out)]) == 0

    with open(out / "r.eval.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [r["name"] for r in rows] == ["tiny", "median"]
    rho = read_certificate(tiny_benchmark / "tiny.cert.json").ratio
    assert float(rows[0]["Hratio"]) == pytest.approx(rho)
    assert float(rows[0]["SOV/bin"]) > 0

    with open(out / "tiny.displacement.csv", newline="") as f:
        moves = list(csv.DictReader(f))
    assert moves and all(float(m["dx"]) == 0 and float(m["dy"]) == 0 for m in moves)


def test_eval_ogp_against_source_certificate(tiny_benchmark, tmp_path):
    """Test scoring an OGP benchmark against its source certificate"""
    out = tmp_path / "ogp"
    main(["ogp", str(tiny_benchmark / "tiny.aux"), "--bins", "2x2", "--output-dir", str(out)])
    assert main(["eval", str(out / "tiny_ogp_2x2" / "tiny_ogp_2x2.aux"),
                 "--certificate", str(tiny_benchmark / "tiny.cert.json"),
                 "--output-dir", str(tmp_path / "eval")]) == 0
    with open(tmp_path / "eval" / "report.eval.csv", newline="") as f:
        row = next(csv.DictReader(f))
    assert float(row["hpwl"]) >= 0
    assert float(row["Hratio"]) == pytest.approx(float(row["hpwl"]) / float(row["bound"]))


def test_gen_mc(roomy_chain_netlist, tmp_path, capsys):
    """Test rewriting a written design into a certified one"""
    netlist, placement = roomy_chain_netlist
    source = write_bundle(
        BenchmarkBundle("stair", netlist, placement, uniform_rows(netlist.region, 1.0)),
        tmp_path / "src",
    )
    out = tmp_path / "mc"
    assert main(["gen-mc", str(source["aux"]), "--name", "stair_mc", "--seed", "1",
                 "--output-dir", str(out)]) == 0
    assert "chains=1" in capsys.readouterr().out

    target = out / "stair_mc"
    certificate = read_certificate(target / "stair_mc.cert.json")
    assert certificate.ratio == pytest.approx(1.0)
    assert certificate.generator == "mc"
    rewritten = parse_bundle(target / "stair_mc.aux")
    certificate.verify(rewritten.netlist, rewritten.placement)
    assert (target / "stair_mc.stats.csv").exists()

    manifest = RunManifest.read(target / "stair_mc.manifest.json")
    assert manifest.inputs == {"aux": str(source["aux"])}
    assert main(["gen-mc", "--from-manifest", str(target / "stair_mc.manifest.json"),
                 "--output-dir", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "stair_mc" / "stair_mc.nets").read_text() == \
        (target / "stair_mc.nets").read_text()


def test_gen_mc_needs_input(capsys):
    """Test that gen-mc without a design is an input error"""
    assert main(["gen-mc"]) == 2
    assert "needs an input .aux" in capsys.readouterr().err


def test_json_errors(tmp_path, capsys):
    """Test the machine-readable failure report"""
    code = main(["--json-errors", "eval", str(tmp_path / "missing.aux")])
    assert code == 2
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "BookshelfParseError"
    assert error["exit_code"] == 2
    assert "missing.aux" in error["message"]


def test_bad_manifest(tmp_path):
    """Test that an unreadable manifest is a config error"""
    path = tmp_path / "bad.manifest.json"
    path.write_text("{not json")
    assert main(["gen-ms", "--from-manifest", str(path)]) == 2
    path.write_text(json.dumps({"subcommand": "gen-ms"}))
    with pytest.raises(ConfigError):
        RunManifest.read(path)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lpsda import cli, datagen
from lpsda.errors import DivergenceError

SMALL = ["--nx", "64", "--nt", "11", "--T", "2"]


def run(argv, capsys):
    try:
        code = cli.main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr().out.strip()
    return code, (json.loads(out.splitlines()[-1]) if out else None)


@pytest.fixture
def kdv_file(tmp_path, capsys):
    path = tmp_path / "d.lpsd"
    code, report = run(["generate", "--equation", "kdv", "--n", 4, "--seed", 7, "--out", path, *SMALL], capsys)
    assert code == 0 and report["count"] == 4
    return path


class TestGenerate:
    def test_deterministic(self, kdv_file, tmp_path, capsys):
        again = tmp_path / "e.lpsd"
        run(["generate", "--equation", "kdv", "--n", 4, "--seed", 7, "--out", again, *SMALL], capsys)
        assert again.read_bytes() == kdv_file.read_bytes()

    def test_summary(self, tmp_path, capsys):
        code, rep = run(["generate", "--equation", "kdv", "--n", 2, "--out", tmp_path / "a.lpsd", *SMALL], capsys)
        assert code == 0
        assert rep["residual_max"] < 1e-2 and rep["wall_seconds"] > 0
        assert rep["config"]["nx"] == 64 and rep["config"]["L"] == 128.0

    def test_burgers_default_viscosity(self, tmp_path, capsys):
        path = tmp_path / "b.lpsd"
        code, rep = run(["generate", "--equation", "burgers", "--n", 1, "--amplitude", "-0.05,0.05", "--out", path, *SMALL], capsys)
        assert code == 0 and rep["config"]["nu"] == 0.01
        assert datagen.read_header(path)[0]["nu"] == 0.01

    def test_ks_desk_scale(self, tmp_path, capsys):
        path = tmp_path / "ks.lpsd"
        code, rep = run(["generate", "--equation", "ks", "--n", 2, "--nx", 128, "--nt", 50, "--T", 10, "--out", path], capsys)
        assert code == 0 and rep["residual_max"] < 1e-2

    def test_seed_from_environment(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("LPSDA_SEED", "7")
        code, rep = run(["generate", "--equation", "kdv", "--n", 1, "--out", tmp_path / "s.lpsd", *SMALL], capsys)
        assert code == 0 and rep["seed"] == 7
        monkeypatch.setenv("LPSDA_SEED", "seven")
        code, _ = run(["generate", "--equation", "kdv", "--n", 1, "--out", tmp_path / "s.lpsd", *SMALL], capsys)
        assert code == 1

    def test_explicit_seed_wins(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("LPSDA_SEED", "7")
        _, rep = run(["generate", "--equation", "kdv", "--n", 1, "--seed", 3, "--out", tmp_path / "s.lpsd", *SMALL], capsys)
        assert rep["seed"] == 3

    def test_emit_meta(self, tmp_path, capsys):
        meta = tmp_path / "m.jsonl"
        run(["generate", "--equation", "kdv", "--n", 3, "--out", tmp_path / "d.lpsd", "--emit-meta", meta, *SMALL], capsys)
        lines = [json.loads(s) for s in meta.read_text().splitlines()]
        assert [m["id"] for m in lines] == [0, 1, 2]
        assert all({"L", "T", "seed", "lineage"} <= set(m) for m in lines)

    def test_workers_match(self, kdv_file, tmp_path, capsys):
        par = tmp_path / "p.lpsd"
        run(["generate", "--equation", "kdv", "--n", 4, "--seed", 7, "--workers", 4, "--out", par, *SMALL], capsys)
        assert par.read_bytes() == kdv_file.read_bytes()

    def test_float32(self, tmp_path, capsys):
        path = tmp_path / "f.lpsd"
        run(["generate", "--equation", "kdv", "--n", 1, "--float32", "--out", path, *SMALL], capsys)
        assert datagen.read_header(path)[0]["records"][0]["dtype"] == "<f4"

    @pytest.mark.parametrize(
        "extra",
        [["--nu", "0"], ["--nt", "3"], ["--amplitude", "1"], ["--n", "0"], ["--wavenumbers", "0,1"], ["--rel-tol", "0.5"]],
    )
    def test_config_errors(self, extra, tmp_path, capsys):
        eq = "burgers" if extra[0] == "--nu" else "kdv"
        code, _ = run(["generate", "--equation", eq, "--out", tmp_path / "x.lpsd", *SMALL, *extra], capsys)
        assert code == 1

    def test_solver_failure(self, tmp_path, capsys, monkeypatch):
        def diverge(*args, **kwargs):
            raise DivergenceError("state became non-finite", 0.5)

        monkeypatch.setattr(datagen, "solve", diverge)
        code, _ = run(["generate", "--equation", "kdv", "--n", 1, "--out", tmp_path / "x.lpsd", *SMALL], capsys)
        assert code == 2


class TestAugment:
    def test_count_and_histograms(self, kdv_file, tmp_path, capsys):
        out = tmp_path / "a.lpsd"
        code, rep = run(["augment", "--in", kdv_file, "--gens", "g1,g2,g3,g4", "--copies", 4, "--seed", 3, "--out", out], capsys)
        assert code == 0 and rep["count"] == 4 + 16 and rep["sources"] == 4
        for g in ("g1", "g2", "g3", "g4"):
            assert sum(rep["epsilon_histograms"][g]["counts"]) == 16
        code, _ = run(["validate", "residual", "--in", out, "--bound", "1e-2"], capsys)
        assert code == 0

    def test_drop_sources_and_range(self, kdv_file, tmp_path, capsys):
        out = tmp_path / "a.lpsd"
        code, rep = run(
            ["augment", "--in", kdv_file, "--gens", "g3", "--range", "g3=0.1:0.1", "--drop-sources", "--out", out], capsys
        )
        assert code == 0 and rep["count"] == 4
        steps = [r.lineage.steps for r in datagen.read_dataset(out).records]
        assert all(s == (("g3", 0.1),) for s in steps)

    def test_deterministic(self, kdv_file, tmp_path, capsys):
        paths = [tmp_path / "a.lpsd", tmp_path / "b.lpsd", tmp_path / "c.lpsd"]
        for p, w in zip(paths, (1, 1, 4)):
            run(["augment", "--in", kdv_file, "--copies", 2, "--seed", 3, "--workers", w, "--out", p], capsys)
        assert paths[0].read_bytes() == paths[1].read_bytes() == paths[2].read_bytes()

    def test_ks_has_no_scaling(self, tmp_path, capsys):
        ks = tmp_path / "ks.lpsd"
        run(["generate", "--equation", "ks", "--n", 1, "--out", ks, *SMALL], capsys)
        code, _ = run(["augment", "--in", ks, "--gens", "g4", "--out", tmp_path / "o.lpsd"], capsys)
        assert code == 1

    def test_mix_needs_pair(self, tmp_path, capsys):
        b = tmp_path / "b.lpsd"
        run(["generate", "--equation", "burgers", "--n", 1, "--amplitude", "-0.05,0.05", "--out", b, *SMALL], capsys)
        code, _ = run(["augment", "--in", b, "--gens", "galpha", "--out", tmp_path / "o.lpsd"], capsys)
        assert code == 1

    def test_range_for_missing_generator(self, kdv_file, tmp_path, capsys):
        code, _ = run(["augment", "--in", kdv_file, "--gens", "g2", "--range", "g3=0:1", "--out", tmp_path / "o"], capsys)
        assert code == 1

    def test_missing_input(self, tmp_path, capsys):
        code, _ = run(["augment", "--in", tmp_path / "nope.lpsd", "--out", tmp_path / "o.lpsd"], capsys)
        assert code == 1


class TestValidate:
    def test_residual_failure_exit(self, kdv_file, capsys):
        code, rep = run(["validate", "residual", "--in", kdv_file, "--bound", "1e-30"], capsys)
        assert code == 3 and rep["failing_ids"] == [0, 1, 2, 3]

    def test_equivariance_grid(self, tmp_path, capsys):
        out = tmp_path / "eq.csv"
        args = ["validate", "equivariance", "--equation", "kdv", "--gen", "g3", "--eps", "-0.4:0.4:9", "--tols", "1e-6,1e-8,1e-10"]
        code, rep = run([*args, "--nx", 64, "--nt", 6, "--T", 1, "--L", 32, "--out", out], capsys)
        assert code == 0 and rep["rows"] == 27
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 27 and set(rows[0]) == {"rel_tol", "epsilon", "error", "seconds"}
        assert sorted({float(r["epsilon"]) for r in rows}) == pytest.approx(np.linspace(-0.4, 0.4, 9))

    def test_crosscheck(self, capsys):
        code, rep = run(["validate", "crosscheck", "--equation", "ks", "--n", 1, "--nx", 64, "--nt", 6, "--T", 1], capsys)
        assert code == 0 and rep["value"] <= 1e-4

    def test_crosscheck_bound(self, capsys):
        code, _ = run(["validate", "crosscheck", "--equation", "ks", "--n", 1, "--nx", 64, "--nt", 6, "--T", 1, "--bound", 0], capsys)
        assert code == 3

    def test_negative_values_after_flags(self):
        glued = cli._attach_negative_values(["--eps", "-0.4:0.4:9", "--amplitude", "-1,1", "--bound", "1e-2", "-h"])
        assert glued == ["--eps=-0.4:0.4:9", "--amplitude=-1,1", "--bound", "1e-2", "-h"]

    def test_bad_sweep(self, capsys):
        code, _ = run(["validate", "equivariance", "--equation", "kdv", "--gen", "g3", "--eps", "a:b"], capsys)
        assert code == 1


class TestBenchExport:
    def test_bench(self, capsys):
        code, rep = run(["bench", "--repeats", 10, "--nx", 64, "--nt", 11, "--T", 2], capsys)
        assert code == 0
        assert rep["augment_median_seconds"] > 0 and rep["solve_over_augment"] > 1

    def test_bench_repeats(self, capsys):
        code, _ = run(["bench", "--repeats", 1], capsys)
        assert code == 1

    @pytest.mark.parametrize("layout", ["triples", "matrix"])
    def test_export_roundtrip(self, kdv_file, tmp_path, capsys, layout):
        out = tmp_path / "r.csv"
        meta = tmp_path / "r.json"
        code, _ = run(["export", "--in", kdv_file, "--record", 1, "--csv", out, "--layout", layout, "--meta", meta], capsys)
        assert code == 0
        ref = datagen.read_dataset(kdv_file).records[1].output().values
        rows = list(csv.reader(out.open()))
        if layout == "triples":
            assert rows[0] == ["t", "x", "u"] and len(rows) == 1 + ref.size
            values = np.array([float(r[2]) for r in rows[1:]]).reshape(ref.shape)
        else:
            assert len(rows) == 1 + ref.shape[0] and len(rows[0]) == 1 + ref.shape[1]
            values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        np.testing.assert_array_equal(values, ref)
        assert json.loads(meta.read_text())["id"] == 1

    def test_export_out_of_range(self, kdv_file, capsys):
        code, _ = run(["export", "--in", kdv_file, "--record", 99], capsys)
        assert code == 1


class TestUsage:
    def test_unknown_flag(self, capsys):
        code, _ = run(["generate", "--equation", "kdv", "--bogus"], capsys)
        assert code == 1

    def test_missing_subcommand(self, capsys):
        code, _ = run([], capsys)
        assert code == 1

    @pytest.mark.parametrize(
        "argv",
        [["generate"], ["augment"], ["validate", "residual"], ["validate", "crosscheck"], ["validate", "equivariance"], ["bench"], ["export"]],
    )
    def test_help(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([*argv, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        parser_flags = [a for a in text.split() if a.startswith("--")]
        assert "--help" in text and len(parser_flags) >= 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "lpsda", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0 and "generate" in proc.stdout

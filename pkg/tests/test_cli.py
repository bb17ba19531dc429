import pytest

from histotex.cli import main
from histotex.features_io import read_feature_file


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "corpus"
    assert run(["synth", "--classes", 3, "--per-class", 5, "--size", 32,
                "--seed", 7, "--out", out]) == 0
    return out


class TestSynth:
    def test_writes_expected_files(self, synth_dir):
        files = sorted(p.name for p in synth_dir.iterdir())
        assert len(files) == 15
        assert files[0] == "A_000.png"

    def test_deterministic_bytes(self, synth_dir, tmp_path):
        again = tmp_path / "again"
        run(["synth", "--classes", 3, "--per-class", 5, "--size", 32,
             "--seed", 7, "--out", again])
        for p in sorted(synth_dir.iterdir()):
            assert p.read_bytes() == (again / p.name).read_bytes()

    def test_requires_out(self):
        assert run(["synth", "--classes", 2, "--per-class", 2]) == 1


class TestValidateDataset:
    def test_reports_counts(self, synth_dir, capsys):
        assert run(["validate-dataset", "--root", synth_dir]) == 0
        out = capsys.readouterr().out
        assert "images: 15" in out
        assert "classes: 3" in out

    def test_missing_root_fails(self, tmp_path):
        assert run(["validate-dataset", "--root", tmp_path / "nope"]) == 1

    def test_strict_fails_on_synth(self, synth_dir):
        assert run(["validate-dataset", "--root", synth_dir,
                    "--strict-path960"]) == 1


class TestLbpSweep:
    def test_csv_to_stdout(self, synth_dir, capsys):
        assert run(["lbp-sweep", "--root", synth_dir, "--radii", "1",
                    "--neighbors", "8", "--metrics", "l2"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0].startswith("protocol,")
        assert len(lines) == 2
        assert lines[1].startswith("LOO_NN,l2,nn,8,1,")

    def test_csv_file_identical_across_threads(self, synth_dir, tmp_path):
        outs = []
        for threads in (1, 4):
            out = tmp_path / f"report_{threads}.csv"
            assert run(["lbp-sweep", "--root", synth_dir, "--radii", "1,2",
                        "--neighbors", "4,8", "--metrics", "chi2,l1",
                        "--threads", threads, "--out", out]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_raw_mode_rejects_large_p(self, synth_dir):
        assert run(["lbp-sweep", "--root", synth_dir, "--radii", "1",
                    "--neighbors", "20", "--metrics", "l2",
                    "--histogram", "raw"]) == 1

    def test_unknown_metric_is_usage_error(self, synth_dir):
        with pytest.raises(SystemExit) as err:
            run(["lbp-sweep", "--root", synth_dir, "--metrics", "hamming"])
        assert err.value.code == 2


class TestBovwEval:
    def test_small_run(self, synth_dir, capsys):
        assert run(["bovw-eval", "--root", synth_dir, "--grid", "8x8",
                    "--dim", 32, "--k", 3, "--classifier", "chi2",
                    "--folds", 2, "--seed", 3]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 4  # header + 2 folds + mean
        assert lines[-1].split(",")[9] == "mean"

    def test_identical_across_threads(self, synth_dir, tmp_path):
        outs = []
        for threads in (1, 3):
            out = tmp_path / f"bovw_{threads}.csv"
            assert run(["bovw-eval", "--root", synth_dir, "--grid", "8x8",
                        "--dim", 32, "--k", 3, "--classifier", "l1",
                        "--folds", 2, "--seed", 3, "--threads", threads,
                        "--out", out]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestExportAndEvalFeatures:
    def test_roundtrip(self, synth_dir, tmp_path, capsys):
        feat = tmp_path / "lbp.kpft"
        assert run(["export-lbp", "--root", synth_dir, "--neighbors", 8,
                    "--radius", 1, "--out", feat]) == 0
        fs = read_feature_file(feat)
        assert fs.count == 15 and fs.dim == 59
        assert fs.ids[0] == "A_000.png"

        assert run(["eval-features", "--file", feat, "--metric", "chi2"]) == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[1].startswith("LOO_NN,chi2,nn,")

    def test_missing_file(self, tmp_path):
        assert run(["eval-features", "--file", tmp_path / "none.kpft",
                    "--metric", "l2"]) == 1


class TestUsageErrors:
    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as err:
            run(["frobnicate"])
        assert err.value.code == 2

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as err:
            run(["synth", "--classes", 2, "--per-class", 2, "--frob", 1])
        assert err.value.code == 2

    def test_missing_required(self):
        with pytest.raises(SystemExit) as err:
            run(["lbp-sweep"])
        assert err.value.code == 2

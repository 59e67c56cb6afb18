"""End-to-end tests for the CLI: stages, exit codes, and artifact handling.

Everything runs in-process through main() against throwaway work
directories, with a corpus small enough to keep the whole file fast.
"""

import csv
import re
import shutil
from pathlib import Path

import pytest

from skipcast.cli import main
from skipcast.config import (
    RunConfig,
    build_config,
    load_config,
    parse_kv_text,
    parse_solutions,
)
from skipcast.errors import ConfigError

SMALL_CONF = """\
# small corpus so the whole pipeline stays fast
n_tracks = 30
n_sessions = 25
num_boost_round = 3
max_depth = 3
tune_rounds = 1
solutions = 1,9
"""


def write_conf(tmp_path, body=SMALL_CONF):
    path = tmp_path / "run.conf"
    path.write_text(body, encoding="utf-8")
    return str(path)


def run_all(tmp_path, workdir_name="work", seed=None):
    conf = write_conf(tmp_path)
    workdir = tmp_path / workdir_name
    args = ["run-all", "--config", conf, "--workdir", str(workdir)]
    if seed is not None:
        args += ["--seed", str(seed)]
    assert main(args) == 0
    return workdir


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("pipeline")
    return run_all(tmp_path)


ARTIFACTS = [
    "tracks.csv",
    "sessions.csv",
    "features.csv",
    "grid_report.csv",
    "bank/manifest.json",
    "submission_solution_01.txt",
    "submission_solution_09.txt",
    "scores_solution_01.csv",
    "scores_solution_09.csv",
    "report.csv",
    "report.txt",
]


class TestRunAll:
    def test_writes_every_artifact(self, pipeline):
        for name in ARTIFACTS:
            assert (pipeline / name).exists(), name
        for j in range(1, 11):
            assert (pipeline / "bank" / f"model_{j:02d}.json").exists()

    def test_grid_report_covers_full_grid(self, pipeline):
        lines = (pipeline / "grid_report.csv").read_text().splitlines()
        assert lines[0] == "eta,max_depth,colsample,subsample,val_auc,best"
        assert len(lines) == 55
        assert sum(1 for line in lines[1:] if line.endswith(",1")) == 1

    def test_report_rows_match_requested_solutions(self, pipeline):
        lines = (pipeline / "report.csv").read_text().splitlines()
        assert lines[0] == "solution,maa,first_prediction_accuracy"
        ids = sorted(int(line.split(",")[0]) for line in lines[1:])
        assert ids == [1, 9]
        maas = [float(line.split(",")[1]) for line in lines[1:]]
        assert maas == sorted(maas)  # ascending

    def test_submissions_cover_every_session(self, pipeline):
        with open(pipeline / "sessions.csv", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            session_ids = {row["session_id"] for row in reader}
        lines = (pipeline / "submission_solution_01.txt").read_text().splitlines()
        submitted = {line.split(" ")[0] for line in lines}
        assert submitted == session_ids
        assert all(set(line.split(" ")[1]) <= {"0", "1"} for line in lines)

    def test_decision_count_matches_target_half(self, pipeline):
        per_session = {}
        with open(pipeline / "sessions.csv", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                per_session[row["session_id"]] = int(row["session_length"])
        for line in (pipeline / "submission_solution_01.txt").read_text().splitlines():
            sid, bits = line.split(" ")
            assert len(bits) == per_session[sid] // 2

    def test_same_seed_is_byte_identical(self, pipeline, tmp_path):
        other = run_all(tmp_path, "replay")
        for name in ARTIFACTS + [f"bank/model_{j:02d}.json" for j in range(1, 11)]:
            assert (pipeline / name).read_bytes() == (other / name).read_bytes(), name

    def test_different_seed_changes_the_corpus(self, pipeline, tmp_path):
        other = run_all(tmp_path, "other", seed=99)
        assert (pipeline / "tracks.csv").read_bytes() != (
            other / "tracks.csv"
        ).read_bytes()


class TestStages:
    def test_synth_reports_corpus_summary(self, tmp_path, capsys):
        conf = write_conf(tmp_path)
        workdir = tmp_path / "w"
        assert main(["synth", "--config", conf, "--workdir", str(workdir)]) == 0
        out = capsys.readouterr().out
        assert re.search(r"synth: sessions=25 rows=\d+ skip2_prevalence=0\.\d+", out)
        assert (workdir / "tracks.csv").exists()
        assert (workdir / "sessions.csv").exists()

    def test_extract_counts_match_the_feature_file(self, tmp_path, capsys):
        conf = write_conf(tmp_path)
        workdir = tmp_path / "w"
        main(["synth", "--config", conf, "--workdir", str(workdir)])
        capsys.readouterr()
        assert main(["extract", "--config", conf, "--workdir", str(workdir)]) == 0
        match = re.search(
            r"extract: (\d+) examples from (\d+) sessions", capsys.readouterr().out
        )
        assert match and int(match.group(2)) == 25
        n_rows = len((workdir / "features.csv").read_text().splitlines()) - 1
        assert int(match.group(1)) == n_rows
        lengths = {}
        with open(workdir / "sessions.csv", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                lengths[row["session_id"]] = int(row["session_length"])
        assert n_rows == sum(n // 2 for n in lengths.values())

    def test_evaluate_prints_the_ranking_table(self, pipeline, capsys):
        conf_dir = pipeline.parent
        assert (
            main(
                [
                    "evaluate",
                    "--config",
                    str(conf_dir / "run.conf"),
                    "--workdir",
                    str(pipeline),
                ]
            )
            == 0
        )
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("Solution")
        assert len(lines) == 3  # header + solutions 1 and 9

    def test_train_applies_tuned_parameters(self, pipeline, tmp_path, capsys):
        workdir = tmp_path / "w"
        shutil.copytree(pipeline, workdir)
        conf = write_conf(tmp_path)
        assert main(["train", "--config", conf, "--workdir", str(workdir)]) == 0
        assert "applying tuned parameters" in capsys.readouterr().out


class TestUsageErrors:
    def test_unknown_flag(self, tmp_path, capsys):
        assert main(["synth", "--bogus"]) == 1

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_command(self, capsys):
        assert main([]) == 1

    def test_bad_solution_id(self, tmp_path, capsys):
        workdir = str(tmp_path / "w")
        assert main(["synth", "--workdir", workdir, "--solutions", "0"]) == 1
        assert "solution ids" in capsys.readouterr().err

    def test_bad_sample(self, tmp_path, capsys):
        workdir = str(tmp_path / "w")
        assert main(["synth", "--workdir", workdir, "--sample", "2.0"]) == 1

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["synth", "--config", str(tmp_path / "nope.conf")]) == 1
        assert "config file not found" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path, capsys):
        conf = write_conf(tmp_path, "frobnication = 3\n")
        assert main(["synth", "--config", conf]) == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_malformed_config_line(self, tmp_path, capsys):
        conf = write_conf(tmp_path, "just a line\n")
        assert main(["synth", "--config", conf]) == 1
        assert "key=value" in capsys.readouterr().err


class TestDataErrors:
    def test_extract_before_synth(self, tmp_path, capsys):
        assert main(["extract", "--workdir", str(tmp_path / "w")]) == 2
        assert "run the synth stage first" in capsys.readouterr().err

    def test_tune_before_extract(self, tmp_path, capsys):
        assert main(["tune", "--workdir", str(tmp_path / "w")]) == 2
        assert "run the extract stage first" in capsys.readouterr().err

    def test_train_before_extract(self, tmp_path, capsys):
        assert main(["train", "--workdir", str(tmp_path / "w")]) == 2
        assert "run the extract stage first" in capsys.readouterr().err

    def test_predict_before_train(self, pipeline, tmp_path, capsys):
        workdir = tmp_path / "w"
        shutil.copytree(pipeline, workdir)
        shutil.rmtree(workdir / "bank")
        conf = write_conf(tmp_path)
        assert main(["predict", "--config", conf, "--workdir", str(workdir)]) == 2
        assert "run the train stage first" in capsys.readouterr().err

    def test_evaluate_before_predict(self, pipeline, tmp_path, capsys):
        workdir = tmp_path / "w"
        shutil.copytree(pipeline, workdir)
        for sub in workdir.glob("submission_solution_*.txt"):
            sub.unlink()
        conf = write_conf(tmp_path)
        assert main(["evaluate", "--config", conf, "--workdir", str(workdir)]) == 2
        assert "run the predict stage first" in capsys.readouterr().err

    def test_evaluate_with_corrupt_submission(self, pipeline, tmp_path, capsys):
        workdir = tmp_path / "w"
        shutil.copytree(pipeline, workdir)
        (workdir / "submission_solution_01.txt").write_text("s000000 01x\n")
        conf = write_conf(tmp_path)
        assert main(["evaluate", "--config", conf, "--workdir", str(workdir)]) == 2
        assert "malformed decision" in capsys.readouterr().err

    def test_evaluate_with_missing_session(self, pipeline, tmp_path, capsys):
        workdir = tmp_path / "w"
        shutil.copytree(pipeline, workdir)
        path = workdir / "submission_solution_01.txt"
        first_line = path.read_text().splitlines()[0]
        path.write_text(first_line + "\n")
        conf = write_conf(tmp_path)
        assert main(["evaluate", "--config", conf, "--workdir", str(workdir)]) == 2
        assert "no stored decisions" in capsys.readouterr().err


class TestFlagPrecedence:
    def test_flag_seed_beats_config_seed(self, tmp_path):
        conf = write_conf(tmp_path, SMALL_CONF + "seed = 3\n")
        a = tmp_path / "a"
        assert main(["synth", "--config", conf, "--workdir", str(a), "--seed", "5"]) == 0
        b = tmp_path / "b"
        conf_no_seed = str(tmp_path / "noseed.conf")
        Path(conf_no_seed).write_text(SMALL_CONF, encoding="utf-8")
        assert main(["synth", "--config", conf_no_seed, "--workdir", str(b), "--seed", "5"]) == 0
        assert (a / "tracks.csv").read_bytes() == (b / "tracks.csv").read_bytes()

    def test_config_workdir_yields_to_flag(self, tmp_path):
        conf = write_conf(
            tmp_path, SMALL_CONF + f"workdir = {tmp_path / 'from_config'}\n"
        )
        flagged = tmp_path / "from_flag"
        assert main(["synth", "--config", conf, "--workdir", str(flagged)]) == 0
        assert (flagged / "tracks.csv").exists()
        assert not (tmp_path / "from_config").exists()


class TestConfigParsing:
    def test_parse_solutions_all(self):
        assert parse_solutions("all") == tuple(range(1, 13))

    def test_parse_solutions_list_with_spaces(self):
        assert parse_solutions("1, 9 ,12") == (1, 9, 12)

    @pytest.mark.parametrize("raw", ["0", "13", "1,1", "x", ""])
    def test_parse_solutions_rejects(self, raw):
        with pytest.raises(ConfigError):
            parse_solutions(raw)

    def test_kv_text_skips_comments_and_blanks(self):
        values = parse_kv_text("# hi\n\n a = 1 \nb= two\n")
        assert values == {"a": "1", "b": "two"}

    def test_kv_text_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_kv_text("a = 1\na = 2\n")

    def test_kv_value_may_contain_equals(self):
        assert parse_kv_text("a = b=c\n") == {"a": "b=c"}

    def test_build_config_routes_keys(self):
        cfg = build_config(
            {
                "n_sessions": "77",
                "eta": "0.25",
                "lambda": "2.5",
                "fixed_prior": "0.3",
                "seed": "11",
                "workdir": "elsewhere",
            }
        )
        assert cfg.synth.n_sessions == 77
        assert cfg.params.eta == 0.25
        assert cfg.params.lambda_ == 2.5
        assert cfg.weights.fixed_prior == 0.3
        assert cfg.seed == 11
        assert cfg.workdir == Path("elsewhere")

    def test_build_config_type_errors(self):
        with pytest.raises(ConfigError, match="integer"):
            build_config({"n_sessions": "many"})
        with pytest.raises(ConfigError, match="number"):
            build_config({"eta": "fast"})

    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.workdir == Path("work")
        assert cfg.seed == 7
        assert cfg.solutions == tuple(range(1, 13))
        assert cfg.params.num_boost_round == 60
        assert cfg.tracks_path() == Path("work") / "tracks.csv"

    def test_explicit_corpus_paths(self):
        cfg = build_config({"tracks_csv": "/x/t.csv", "sessions_csv": "/x/s.csv"})
        assert cfg.tracks_path() == Path("/x/t.csv")
        assert cfg.sessions_path() == Path("/x/s.csv")

    def test_load_config_flags_override_file(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("seed = 3\nsample = 0.5\n", encoding="utf-8")
        cfg = load_config(conf, {"seed": "5", "workdir": None})
        assert cfg.seed == 5
        assert cfg.sample == 0.5  # untouched file value survives

    def test_tune_rounds_must_be_positive(self):
        with pytest.raises(ConfigError, match="tune_rounds"):
            build_config({"tune_rounds": "0"})

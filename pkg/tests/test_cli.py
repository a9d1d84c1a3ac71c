"""命令行入口测试"""

import json

import pytest
from sqlalchemy.orm import sessionmaker

from conelyap.__main__ import main
from conelyap.data import models
from conelyap.data.database import ArchiveRepository

FAST = ["--samples", "60", "--seed", "0"]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def fx(fixtures_dir):
    return lambda name: str(fixtures_dir / name)


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


class TestAnalyze:
    def test_condition_panel(self, workdir, fx, capsys):
        assert main(["analyze", fx("ex3.json"), "--format", "json"]) == 0
        payload = _json_out(capsys)
        result = payload["result"]
        assert result["conditions"]["domain_condition"] is False
        assert result["conditions"]["transversality.pos"] is False
        assert result["conditions"]["necessary"] is True
        assert result["conditions"]["rint"] is False
        assert result["feasible_set"]["fixed_point_index"] == 2
        assert "A" in payload["inputs"]["process"]
        assert (workdir / "logs" / "conelyap.log").exists()

    def test_text_output(self, workdir, fx, capsys):
        assert main(["analyze", fx("ex2.json")]) == 0
        assert "domain_condition" in capsys.readouterr().out


class TestLyapunov:
    def test_strong_holds(self, workdir, fx, capsys):
        code = main(["lyapunov", fx("ex3.json"), fx("V_half_identity.json"), "--mode", "strong", "--gamma", "0.25", "--format", "json", *FAST])
        assert code == 0
        assert _json_out(capsys)["result"]["gamma_margin"] == pytest.approx(0.25, abs=1e-9)

    def test_strong_fails_below_margin(self, workdir, fx):
        code = main(["lyapunov", fx("ex3.json"), fx("V_half_identity.json"), "--mode", "strong", "--gamma", "0.2", *FAST])
        assert code == 1

    def test_gamma_out_of_range(self, workdir, fx):
        assert main(["lyapunov", fx("ex3.json"), fx("V_half_identity.json"), "--gamma", "1.5"]) == 64

    def test_gamma_search(self, workdir, fx, capsys):
        code = main(["lyapunov", fx("ex3.json"), fx("V_half_identity.json"), "--mode", "strong", "--gamma-search", "--format", "json", *FAST])
        assert code == 0
        search = _json_out(capsys)["result"]["gamma_search"]
        assert 0.25 - 1e-6 <= search["gamma"] <= 0.25 + 1e-3

    def test_explicit_points(self, workdir, fx):
        code = main(
            ["lyapunov", fx("ex3.json"), fx("V_half_identity.json"), "--mode", "goebel_strong", "--points", "0,1", *FAST]
        )
        assert code == 1


class TestDuality:
    def test_theorem2_strict(self, workdir, fx):
        assert main(["duality", fx("strict_diag.json"), fx("V_half_identity.json"), "--gamma", "0.25", *FAST]) == 0

    def test_theorem2_hypothesis_not_met(self, workdir, fx):
        assert main(["duality", fx("ex3.json"), fx("V_half_identity.json"), "--gamma", "0.25", *FAST]) == 2

    def test_theorem3_with_negative_dual(self, workdir, fx):
        args = ["duality", fx("diag_linear.json"), fx("V_half_identity.json"), "--theorem", "3", "--g", "dual_neg", "--gamma", "0.25"]
        assert main([*args, *FAST]) == 0

    def test_deterministic_json(self, workdir, fx):
        args = ["duality", fx("strict_diag.json"), fx("V_half_identity.json"), "--gamma", "0.25", "--format", "json", *FAST]
        assert main([*args, "--output", "a.json"]) == 0
        assert main([*args, "--output", "b.json", "--threads", "1"]) == 0
        assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()


class TestSimulateAndOracle:
    def test_simulate(self, workdir, fx, capsys):
        assert main(["simulate", fx("ex3.json"), "--x0", "1,0", "--steps", "3", "--format", "json"]) == 0
        norms = _json_out(capsys)["result"]["norms"]
        assert norms == pytest.approx([1.0, 0.5, 0.25, 0.125])

    def test_simulate_dimension(self, workdir, fx):
        assert main(["simulate", fx("ex3.json"), "--x0", "1,0,0"]) == 64

    def test_depth(self, workdir, fx, capsys):
        assert main(["oracle", "depth", fx("ex3.json"), "--x0", "0,1", "--depth", "3", "--format", "json"]) == 0
        assert _json_out(capsys)["result"]["depths"] == [True, False, False]

    def test_stabilizable_needs_x0(self, workdir, fx):
        assert main(["oracle", "stabilizable", fx("ex2.json")]) == 64

    def test_polar(self, workdir, fx):
        assert main(["oracle", "polar", fx("orthant.json"), "--samples", "200"]) == 0

    def test_conjugate(self, workdir, fx, capsys):
        assert main(["oracle", "conjugate", fx("V_half_identity.json"), "--y", "3,4", "--format", "json"]) == 0
        result = _json_out(capsys)["result"]
        assert result["value"] <= 12.5 + 1e-9
        assert result["value"] >= 12.5 - result["error_bound"] - 1e-9


class TestErrors:
    def test_missing_file(self, workdir):
        assert main(["analyze", str(workdir / "nope.json")]) == 66

    def test_bad_json(self, workdir):
        bad = workdir / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["analyze", str(bad)]) == 64

    def test_unknown_subcommand(self, workdir):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 64

    def test_unwritable_output(self, workdir, fx):
        (workdir / "blocker").write_text("x", encoding="utf-8")
        assert main(["analyze", fx("ex3.json"), "--output", str(workdir / "blocker" / "out.json")]) == 66


class TestArchive:
    def test_archive_saves_counterexample(self, workdir, fx, monkeypatch):
        engine = models.make_engine(f"sqlite:///{workdir / 'archive.db'}")
        original_init = models.init_db
        monkeypatch.setattr(models, "SessionLocal", sessionmaker(bind=engine))
        monkeypatch.setattr(models, "init_db", lambda bind=None: original_init(engine))

        code = main(
            ["lyapunov", fx("ex3.json"), fx("V_half_identity.json"), "--mode", "strong", "--gamma", "0.2", "--archive", *FAST]
        )
        assert code == 1

        session = sessionmaker(bind=engine)()
        try:
            runs = ArchiveRepository(session).get_runs(command="lyapunov")
            assert len(runs) == 1
            assert runs[0].verdict == "fails"
            assert runs[0].seed == 0
            assert [ce.stage for ce in runs[0].counterexamples] == ["verify:strong"]
        finally:
            session.close()

"""End-to-end tests of the command line (driven through ``main(argv)``)."""

import json

import pytest

from zalm_islands import MetricBundle
from zalm_islands.cli import (
    EXIT_BAD_PARAMS,
    EXIT_IO,
    EXIT_OK,
    EXIT_TOLERANCE,
    EXIT_UNACHIEVABLE,
    main,
)


def run_json(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    assert code == EXIT_OK, captured.err
    return json.loads(captured.out)


class TestMetrics:
    def test_json_output(self, capsys):
        payload = run_json(
            capsys,
            ["metrics", "--gain-minus-one", "0.0173", "--eta-t", "0.9", "--eta-r", "0.01"],
        )
        assert payload["params"]["gain_minus_one"] == 0.0173
        assert payload["params"]["herald_mode"] == "spci-paper"
        metrics = payload["metrics"]
        assert set(metrics) == set(MetricBundle.FIELDS)
        assert metrics["fidelity"] == pytest.approx(0.9900162420282165, rel=1e-12)
        assert metrics["purity"] == pytest.approx(0.9801653846207516, rel=1e-12)

    def test_csv_output(self, capsys):
        code = main(["metrics", "--gain-minus-one", "0.01", "--format", "csv"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == ",".join(MetricBundle.FIELDS)
        values = lines[1].split(",")
        assert len(values) == len(MetricBundle.FIELDS)
        float(values[0])  # parses

    def test_zero_gain_fidelity_serializes_as_null(self, capsys):
        payload = run_json(capsys, ["metrics", "--gain-minus-one", "0"])
        assert payload["metrics"]["fidelity"] is None
        assert payload["metrics"]["rate"] == 0.0

    def test_missing_gain_is_a_parameter_error(self, capsys):
        code = main(["metrics", "--eta-t", "0.9"])
        captured = capsys.readouterr()
        assert code == EXIT_BAD_PARAMS
        assert "gain_minus_one" in captured.err

    def test_all_violations_reported_together(self, capsys):
        code = main(
            ["metrics", "--gain-minus-one", "-1", "--eta-t", "2", "--islands", "0"]
        )
        captured = capsys.readouterr()
        assert code == EXIT_BAD_PARAMS
        for field in ("gain_minus_one", "eta_t", "n_islands"):
            assert field in captured.err

    def test_unknown_herald_mode_rejected(self, capsys):
        code = main(["metrics", "--gain-minus-one", "0.01", "--herald-mode", "psychic"])
        assert code == EXIT_BAD_PARAMS


class TestConfigFile:
    def test_config_supplies_params_and_flags_win(self, capsys, tmp_path):
        cfg = tmp_path / "source.cfg"
        cfg.write_text(
            "# reference configuration\n"
            "gain-minus-one = 0.5\n"
            "eta_t = 0.9\n"
            "n_islands = 4\n"
        )
        payload = run_json(
            capsys,
            ["metrics", "--config", str(cfg), "--gain-minus-one", "0.0129"],
        )
        assert payload["params"]["gain_minus_one"] == 0.0129  # flag beats file
        assert payload["params"]["eta_t"] == 0.9
        assert payload["params"]["n_islands"] == 4

    def test_unknown_config_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("sparkle = 1\n")
        code = main(["metrics", "--config", str(cfg), "--gain-minus-one", "0.01"])
        captured = capsys.readouterr()
        assert code == EXIT_BAD_PARAMS
        assert "sparkle" in captured.err

    def test_malformed_config_line_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("eta_t 0.9\n")
        assert main(["metrics", "--config", str(cfg)]) == EXIT_BAD_PARAMS
        capsys.readouterr()

    def test_missing_config_file_is_io_error(self, capsys, tmp_path):
        code = main(["metrics", "--config", str(tmp_path / "nope.cfg")])
        capsys.readouterr()
        assert code == EXIT_IO


class TestSolve:
    def test_gain_for_fraction_target(self, capsys):
        payload = run_json(
            capsys,
            ["solve", "gain", "--metric", "fraction", "--value", "0.99",
             "--eta-t", "0.9", "--eta-r", "1"],
        )
        assert payload["solved"]["gain_minus_one"] == pytest.approx(
            0.012722736784079109, rel=1e-5
        )
        assert payload["achieved"]["fraction"] == pytest.approx(0.99, abs=1e-4)

    def test_gain_for_fidelity_target(self, capsys):
        payload = run_json(
            capsys,
            ["solve", "gain", "--metric", "fidelity", "--value", "0.99",
             "--eta-t", "0.9", "--eta-r", "0.01"],
        )
        assert payload["solved"]["gain_minus_one"] == pytest.approx(
            0.017328965059807525, rel=1e-5
        )
        assert payload["achieved"]["fidelity"] == pytest.approx(0.99, abs=1e-4)

    def test_islands_for_probability_target(self, capsys):
        payload = run_json(
            capsys,
            ["solve", "islands", "--gain-minus-one", "0.0129", "--eta-t", "0.9",
             "--target-p-true", "0.25", "--herald-mode", "spci-paper"],
        )
        assert payload["solved"]["n_islands"] == 38
        assert payload["achieved"]["p_true"] >= 0.25

    def test_unachievable_target_exit_code(self, capsys):
        code = main(
            ["solve", "gain", "--metric", "fraction", "--value", "0.3", "--eta-t", "0.9"]
        )
        capsys.readouterr()
        assert code == EXIT_UNACHIEVABLE

    def test_gain_requires_value(self, capsys):
        assert main(["solve", "gain", "--eta-t", "0.9"]) == EXIT_BAD_PARAMS
        capsys.readouterr()

    def test_islands_requires_target(self, capsys):
        code = main(["solve", "islands", "--gain-minus-one", "0.0129"])
        capsys.readouterr()
        assert code == EXIT_BAD_PARAMS


class TestSweep:
    def test_canonical_figure_written(self, capsys, tmp_path):
        out = tmp_path / "herald.csv"
        code = main(["sweep", "--figure", "4", "--out", str(out)])
        captured = capsys.readouterr()
        assert code == EXIT_OK
        assert captured.out.strip() == str(out)
        header = out.read_text().splitlines()[0]
        assert header == "g_minus_1,n_islands,p_true"
        assert (tmp_path / "herald.csv.meta.json").exists()

    def test_custom_sweep_over_gain_needs_no_base_gain(self, capsys, tmp_path):
        out = tmp_path / "gain.csv"
        code = main(
            ["sweep", "--variable", "gain-minus-one", "--min", "0", "--max", "0.02",
             "--steps", "3", "--eta-t", "0.9", "--out", str(out)]
        )
        capsys.readouterr()
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert len(lines) == 4
        assert lines[0].split(",")[0] == "gain_minus_one"

    def test_custom_sweep_of_eta_requires_gain(self, capsys, tmp_path):
        code = main(
            ["sweep", "--variable", "eta-t", "--min", "0.5", "--max", "1",
             "--out", str(tmp_path / "x.csv")]
        )
        capsys.readouterr()
        assert code == EXIT_BAD_PARAMS

    def test_figure_and_variable_are_mutually_exclusive(self, capsys, tmp_path):
        out = str(tmp_path / "x.csv")
        assert main(["sweep", "--out", out]) == EXIT_BAD_PARAMS
        capsys.readouterr()
        code = main(
            ["sweep", "--figure", "4", "--variable", "eta-t", "--min", "0.5",
             "--max", "1", "--gain-minus-one", "0.01", "--out", out]
        )
        capsys.readouterr()
        assert code == EXIT_BAD_PARAMS

    def test_custom_sweep_needs_min_and_max(self, capsys, tmp_path):
        code = main(
            ["sweep", "--variable", "eta-t", "--max", "1", "--gain-minus-one", "0.01",
             "--out", str(tmp_path / "x.csv")]
        )
        capsys.readouterr()
        assert code == EXIT_BAD_PARAMS

    def test_unwritable_output_is_io_error(self, capsys):
        # /etc/hostname is a file, so it cannot serve as a parent directory.
        code = main(["sweep", "--figure", "4", "--out", "/etc/hostname/fig.csv"])
        capsys.readouterr()
        assert code == EXIT_IO


class TestMonteCarlo:
    ARGS = [
        "mc", "--gain-minus-one", "0.1", "--eta-t", "0.8", "--islands", "2",
        "--pulses", "2000", "--seed", "7",
    ]

    def test_report_structure(self, capsys):
        payload = run_json(capsys, self.ARGS)
        assert payload["pulses"] == 2000
        assert payload["seed"] == 7
        est = payload["true_herald"]
        assert set(est["closed_form"]) == {"same_island", "spci_paper", "spci_exact"}
        assert est["estimate"] >= 0.0
        assert payload["sub_counts"]["pulses"] == 2000
        assert "estimate" in payload["pair_rate"]

    def test_reruns_are_identical(self, capsys):
        first = json.dumps(run_json(capsys, self.ARGS), sort_keys=True)
        second = json.dumps(run_json(capsys, self.ARGS), sort_keys=True)
        assert first == second

    def test_policy_flag_parsed(self, capsys):
        payload = run_json(capsys, self.ARGS + ["--policy", "lowest-index"])
        assert payload["policy"] == "lowest-index"


class TestOracle:
    def test_within_tolerance_exits_zero(self, capsys):
        payload = run_json(
            capsys,
            ["oracle", "--gain-minus-one", "0.005", "--eta-t", "0.5", "--eta-r", "0.01",
             "--pattern", "pm", "--cutoff", "4", "--tolerance", "1e-8"],
        )
        assert payload["within_tolerance"] is True
        assert payload["pattern"] == "+H-V"
        assert payload["max_abs_delta"] < 1e-8
        assert set(payload["comparison"]) == {
            "herald_prob", "matched_bell", "mismatched_bell_max_delta",
            "loadable", "off_diagonal_max",
        }

    def test_truncation_dominated_point_exits_five(self, capsys):
        # High gain with lossy detectors and full retention leaves a
        # first-order truncation residue above the tight tolerance.
        code = main(
            ["oracle", "--gain-minus-one", "0.05", "--eta-t", "0.7", "--eta-r", "1",
             "--cutoff", "4", "--tolerance", "1e-8", "--tail-budget", "1e-4"]
        )
        captured = capsys.readouterr()
        assert code == EXIT_TOLERANCE
        payload = json.loads(captured.out)
        assert payload["within_tolerance"] is False
        assert "exceeds tolerance" in captured.err

    def test_cutoff_budget_violation_is_parameter_error(self, capsys):
        code = main(
            ["oracle", "--gain-minus-one", "0.05", "--eta-t", "0.7",
             "--cutoff", "4", "--tail-budget", "1e-9"]
        )
        capsys.readouterr()
        assert code == EXIT_BAD_PARAMS

    def test_bad_pattern_rejected(self, capsys):
        code = main(["oracle", "--gain-minus-one", "0.01", "--pattern", "xy"])
        capsys.readouterr()
        assert code == EXIT_BAD_PARAMS


class TestFigures:
    def test_writes_all_seven(self, capsys, tmp_path):
        outdir = tmp_path / "figs"
        code = main(["figures", "--outdir", str(outdir)])
        captured = capsys.readouterr()
        assert code == EXIT_OK
        listed = captured.out.strip().splitlines()
        assert len(listed) == 7
        for line in listed:
            assert (outdir / line.split("/")[-1]).exists()


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert "zalm-islands" in capsys.readouterr().out

    def test_subcommand_required(self, capsys):
        with pytest.raises(SystemExit):
            main([])
        capsys.readouterr()

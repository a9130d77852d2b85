"""CLI tests: flag resolution, config files, subcommand wiring."""

import json

from tdexplore.cli import _resolve_config, build_parser, main


def parse(argv):
    return build_parser().parse_args(argv)


class TestConfigResolution:
    def test_defaults_applied_per_algo(self):
        cfg = _resolve_config(parse(["run", "--algo", "ddpg"]))
        assert cfg.algo == "ddpg" and cfg.batch_size == 64

    def test_desk_profile_flag(self):
        cfg = _resolve_config(parse(["run", "--algo", "td3", "--desk"]))
        assert cfg.hidden_sizes == (64, 64) and cfg.batch_size == 64

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"algo": "td3", "lambda": 0.6, "seed": 5,
                                    "total_steps": 777}))
        cfg = _resolve_config(parse(["run", "--config", str(path),
                                     "--lambda", "0.1", "--seed", "9"]))
        assert cfg.lam == 0.1        # flag wins
        assert cfg.seed == 9         # flag wins
        assert cfg.total_steps == 777  # file survives where no flag given

    def test_sparse_file_gets_algo_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"algo": "ddpg"}))
        cfg = _resolve_config(parse(["run", "--config", str(path)]))
        assert cfg.critic_weight_decay == 1e-2

    def test_ablation_flags_accumulate(self):
        cfg = _resolve_config(parse([
            "run", "--algo", "td3", "--exploration", "discover",
            "--ablation", "no_tn", "--ablation", "no_tsr"]))
        assert cfg.ablation == ("no_tn", "no_tsr")


class TestMain:
    def test_run_command_end_to_end(self, tmp_path, capsys):
        code = main(["run", "--algo", "td3", "--env", "pointmass_dense",
                     "--exploration", "greedy", "--desk", "--steps", "120",
                     "--warmup", "40", "--eval-interval", "60",
                     "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "last10_mean=" in out
        assert (tmp_path / "results.csv").exists()

    def test_sweep_command(self, tmp_path, capsys):
        code = main(["sweep", "--mode", "baselines", "--algo", "a2c",
                     "--env", "pointmass_dense", "--desk", "--steps", "96",
                     "--eval-interval", "96", "--seeds", "0,1",
                     "--out", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "summary.csv").read_text().splitlines()
        assert rows[0] == "setting,seed,last10_mean"
        assert len(rows) == 5  # (discover, greedy) x 2 seeds

    def test_diag_command(self, tmp_path, capsys):
        run_dir = tmp_path / "r"
        assert main(["run", "--algo", "td3", "--env", "pointmass_dense",
                     "--exploration", "discover", "--lambda", "0.3", "--desk",
                     "--steps", "150", "--warmup", "50", "--eval-interval", "150",
                     "--log-transitions", "--out", str(run_dir)]) == 0
        code = main(["diag", "--run", str(run_dir), "--grid", "12"])
        assert code == 0
        assert (run_dir / "visitation.csv").exists()
        assert (run_dir / "density_late.csv").exists()

    def test_invalid_combination_returns_error_code(self, capsys):
        code = main(["run", "--algo", "a2c", "--exploration", "gaussian"])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_diag_input_returns_error_code(self, tmp_path, capsys):
        code = main(["diag", "--run", str(tmp_path)])
        assert code == 2

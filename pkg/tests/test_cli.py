"""End-to-end tests of the command line front end.

Everything goes through cli.main(argv) in process, so exit codes and
output files are checked without subprocess overhead.
"""

import json

import numpy as np
import pytest

from hybridtherm import cli
from hybridtherm.state import HybridState, save_state


def write_scenario(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def tls_scenario(**overrides):
    data = {
        "type": "tls",
        "beta": 1.0,
        "tls": {
            "omega_a": 1.0,
            "omega_b": 1.3,
            "mechanisms": ["a", "b"],
            "rates": {"a": 2.0, "b": 1.5},
        },
        "integrator": {"t_max": 120.0, "sample_dt": 0.5},
        "initial_state": {"kind": "coherent"},
    }
    data.update(overrides)
    return data


def fp_scenario(**overrides):
    data = {
        "type": "fokker_planck",
        "beta": 1.0,
        "fokker_planck": {
            "omega_0": 0.0,
            "delta_omega": 0.2,
            "delta_e": 0.01,
            "delta_x": 1.0,
            "gamma": 1.0,
            "x_max": 15.0,
            "points": 121,
        },
        "integrator": {
            "t_max": 5.0,
            "sample_dt": 1.0,
            "rel_tol": 1e-8,
            "abs_tol": 1e-10,
        },
        "initial_state": {"kind": "thermal"},
    }
    data.update(overrides)
    return data


def custom_scenario():
    sz = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
    return {
        "type": "custom",
        "beta": 0.8,
        "custom": {
            "energies": [0.0, 1.5],
            "h_system": [[[0.2, 0.0], [0.1, 0.0]], [[0.1, 0.0], [-0.2, 0.0]]],
            "coupling": 0.6,
            "h_bar": [sz, [[[0.5, 0.0], [0.2, 0.0]], [[0.2, 0.0], [-0.5, 0.0]]]],
            "transitions": [
                {"label_a": 0, "index_a": 0, "label_b": 0, "index_b": 1, "rate": 1.0},
                {"label_a": 0, "index_a": 1, "label_b": 1, "index_b": 0, "rate": 0.8},
                {"label_a": 1, "index_a": 0, "label_b": 1, "index_b": 1, "rate": 1.0},
            ],
        },
    }


class TestScenarioValidation:
    def test_missing_file(self, tmp_path, capsys):
        code = cli.main(
            ["thermal", "--scenario", str(tmp_path / "none.json"), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "cannot read scenario" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        code = cli.main(["thermal", "--scenario", str(path), "--out", str(tmp_path)])
        assert code == 2
        assert "not valid JSON" in capsys.readouterr().err

    def test_unknown_top_level_key(self, tmp_path, capsys):
        data = tls_scenario()
        data["extra_knob"] = 1
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "scenario invalid" in capsys.readouterr().err

    def test_unknown_nested_key(self, tmp_path, capsys):
        data = tls_scenario()
        data["tls"]["omega_c"] = 2.0
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_wrong_value_type(self, tmp_path):
        data = tls_scenario(beta="hot")
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_negative_beta(self, tmp_path):
        data = tls_scenario(beta=-1.0)
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_lattice_type_without_block(self, tmp_path, capsys):
        data = {"type": "lattice", "beta": 1.0}
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "needs a 'lattice' block" in capsys.readouterr().err

    def test_bad_initial_state_kind(self, tmp_path):
        data = tls_scenario(initial_state={"kind": "sideways"})
        code = cli.main(
            ["evolve", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_file_kind_without_path(self, tmp_path, capsys):
        data = tls_scenario(initial_state={"kind": "file"})
        code = cli.main(
            ["evolve", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "needs a path" in capsys.readouterr().err

    def test_evolve_without_integrator_block(self, tmp_path, capsys):
        data = tls_scenario()
        del data["integrator"]
        code = cli.main(
            ["evolve", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "integrator" in capsys.readouterr().err

    def test_ragged_custom_matrix(self, tmp_path):
        data = custom_scenario()
        data["custom"]["h_system"] = [
            [[0.0, 0.0], [0.1, 0.0]],
            [[0.1, 0.0], [0.0, 0.0], [1.0, 0.0]],
        ]
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_rectangular_custom_matrix(self, tmp_path, capsys):
        data = custom_scenario()
        data["custom"]["h_system"] = [
            [[0.0, 0.0], [0.1, 0.0], [0.0, 0.0]],
            [[0.1, 0.0], [0.0, 0.0], [0.0, 0.0]],
        ]
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "square" in capsys.readouterr().err

    def test_non_hermitian_custom_matrix(self, tmp_path):
        data = custom_scenario()
        data["custom"]["h_system"][0][1] = [0.1, 0.5]
        code = cli.main(
            ["thermal", "--scenario", write_scenario(tmp_path, data), "--out", str(tmp_path)]
        )
        assert code == 2


class TestThermal:
    def test_writes_decomposition(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(
            [
                "thermal",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        payload = json.loads((out / "thermal.json").read_text())
        assert payload["beta"] == 1.0
        weights = payload["weights"]
        assert len(weights) == 2
        assert abs(sum(weights) - 1.0) < 1e-12
        assert payload["z"] > 0 and payload["z_th"] > 0
        lines = (out / "conditionals.csv").read_text().strip().splitlines()
        assert lines[0] == "label,i,j,re,im"
        assert len(lines) == 1 + 2 * 4

    def test_custom_scenario(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(
            [
                "thermal",
                "--scenario",
                write_scenario(tmp_path, custom_scenario()),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        payload = json.loads((out / "thermal.json").read_text())
        assert abs(sum(payload["weights"]) - 1.0) < 1e-12

    def test_rejects_fokker_planck(self, tmp_path, capsys):
        code = cli.main(
            [
                "thermal",
                "--scenario",
                write_scenario(tmp_path, fp_scenario()),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert "discrete" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path):
        scenario = write_scenario(tmp_path, tls_scenario())
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert cli.main(["thermal", "--scenario", scenario, "--out", str(out_a)]) == 0
        assert cli.main(["thermal", "--scenario", scenario, "--out", str(out_b)]) == 0
        for name in ("thermal.json", "conditionals.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


class TestEvolve:
    def test_tls_run(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(
            [
                "evolve",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        lines = (out / "trajectory.csv").read_text().strip().splitlines()
        assert lines[0].startswith("t,total_trace,entropy,dist_to_thermal")
        final = json.loads((out / "final_state.json").read_text())
        assert final["converged"] is True
        assert final["converged_time"] is not None
        assert final["dim_s"] == 2
        assert final["labels"] == [0, 1]
        assert len(final["conditionals"]) == 2

    def test_nonconvergence_exits_3(self, tmp_path, capsys):
        data = tls_scenario(integrator={"t_max": 2.0, "sample_dt": 0.25})
        out = tmp_path / "out"
        code = cli.main(
            [
                "evolve",
                "--scenario",
                write_scenario(tmp_path, data),
                "--out",
                str(out),
            ]
        )
        assert code == 3
        err = capsys.readouterr().err
        assert "not converged" in err
        assert "distance to thermal" in err
        # outputs are still written so the partial run can be inspected
        assert (out / "trajectory.csv").exists()
        final = json.loads((out / "final_state.json").read_text())
        assert final["converged"] is False

    def test_initial_state_from_file(self, tmp_path):
        blocks = np.zeros((2, 2, 2), dtype=complex)
        blocks[0] = np.diag([0.7, 0.2])
        blocks[1] = np.diag([0.05, 0.05])
        state_path = tmp_path / "start.json"
        save_state(HybridState(blocks), str(state_path))
        data = tls_scenario(initial_state={"kind": "file", "path": str(state_path)})
        out = tmp_path / "out"
        code = cli.main(
            ["evolve", "--scenario", write_scenario(tmp_path, data), "--out", str(out)]
        )
        assert code == 0
        final = json.loads((out / "final_state.json").read_text())
        assert final["converged"] is True

    def test_fokker_planck_short_run_exits_3(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = cli.main(
            [
                "evolve",
                "--scenario",
                write_scenario(tmp_path, fp_scenario()),
                "--out",
                str(out),
            ]
        )
        assert code == 3
        assert "not converged" in capsys.readouterr().err
        lines = (out / "trajectory.csv").read_text().strip().splitlines()
        assert lines[0] == "t,total_mass,min_conditional_eig"
        final = json.loads((out / "final.json").read_text())
        assert set(final) == {
            "converged",
            "total_mass",
            "min_conditional_eig",
            "last_population_change",
        }
        assert final["converged"] is False
        assert abs(final["total_mass"] - 1.0) < 1e-8
        rows = (out / "final_fields.csv").read_text().strip().splitlines()
        assert rows[0] == "x,p_plus,p_minus,c_plus_re,c_plus_im,c_minus_re,c_minus_im"
        assert len(rows) == 1 + 121

    def test_fokker_planck_converged_run(self, tmp_path):
        # single well with strong confinement settles well before t_max
        data = fp_scenario(
            integrator={"t_max": 250.0, "sample_dt": 2.0},
            initial_state={"kind": "polarized"},
        )
        data["fokker_planck"]["delta_omega"] = 0.0
        data["fokker_planck"]["delta_e"] = 0.1
        out = tmp_path / "out"
        code = cli.main(
            [
                "evolve",
                "--scenario",
                write_scenario(tmp_path, data),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        final = json.loads((out / "final.json").read_text())
        assert final["converged"] is True
        assert final["last_population_change"] < 1e-9
        assert abs(final["total_mass"] - 1.0) < 1e-8

    def test_fokker_planck_rejects_random_start(self, tmp_path, capsys):
        data = fp_scenario(initial_state={"kind": "random"})
        code = cli.main(
            [
                "evolve",
                "--scenario",
                write_scenario(tmp_path, data),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert "initial states" in capsys.readouterr().err


class TestVerify:
    def test_invariants_hold(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = cli.main(
            [
                "verify",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(out),
                "--states",
                "5",
            ]
        )
        assert code == 0
        report = json.loads((out / "verify.json").read_text())
        assert report["all_passed"] is True
        assert any(c["name"] == "detailed_balance" for c in report["checks"])
        captured = capsys.readouterr().out
        assert "all invariants hold" in captured

    def test_failure_exit_code(self, tmp_path, capsys, monkeypatch):
        def broken_report(gen, rng, num_states=20):
            return {
                "all_passed": False,
                "checks": [
                    {
                        "name": "detailed_balance",
                        "passed": False,
                        "skipped": False,
                        "residual": 1.0,
                        "tolerance": 1e-15,
                        "detail": "",
                    }
                ],
            }

        monkeypatch.setattr(cli, "verification_report", broken_report)
        code = cli.main(
            [
                "verify",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 1
        assert "FAIL" in capsys.readouterr().out

    def test_rejects_fokker_planck(self, tmp_path):
        code = cli.main(
            [
                "verify",
                "--scenario",
                write_scenario(tmp_path, fp_scenario()),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 2


class TestFig2:
    def test_profiles_and_summary(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(
            [
                "fig2",
                "--out",
                str(out),
                "--ratios",
                "20,40",
                "--points",
                "801",
            ]
        )
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["beta_delta_e"] == 0.01
        profiles = summary["profiles"]
        assert [p["ratio"] for p in profiles] == [20.0, 40.0]
        assert profiles[0]["modality"] == "unimodal"
        assert profiles[1]["modality"] == "bimodal"
        offset = profiles[1]["expected_peak_offset"]
        assert offset == pytest.approx(10.0)
        peaks = profiles[1]["peaks"]
        assert len(peaks) == 2
        assert peaks[0] == pytest.approx(-offset, rel=0.05)
        assert peaks[1] == pytest.approx(offset, rel=0.05)
        lines = (out / "profile_01.csv").read_text().strip().splitlines()
        assert lines[0] == "x,weight,gaussian"
        assert len(lines) == 1 + 801

    def test_byte_identical_reruns(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        argv = ["fig2", "--ratios", "0.5,40", "--points", "401"]
        assert cli.main(argv + ["--out", str(out_a)]) == 0
        assert cli.main(argv + ["--out", str(out_b)]) == 0
        for name in ("summary.json", "profile_00.csv", "profile_01.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_bad_ratio(self, tmp_path, capsys):
        code = cli.main(["fig2", "--out", str(tmp_path), "--ratios", "abc"])
        assert code == 2
        assert "bad ratio" in capsys.readouterr().err

    def test_empty_ratios(self, tmp_path):
        code = cli.main(["fig2", "--out", str(tmp_path), "--ratios", ","])
        assert code == 2


class TestSweep:
    def test_sweep_rates(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(
            [
                "sweep",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(out),
                "--param",
                "tls.rates.a",
                "--values",
                "1.0,2.0",
                "--threads",
                "2",
            ]
        )
        assert code == 0
        payload = json.loads((out / "sweep.json").read_text())
        assert payload["param"] == "tls.rates.a"
        assert [p["value"] for p in payload["points"]] == [1.0, 2.0]
        assert all(p["ok"] for p in payload["points"])
        for i in range(2):
            assert (out / f"point_{i:02d}" / "trajectory.csv").exists()
            assert (out / f"point_{i:02d}" / "final_state.json").exists()

    def test_bad_intermediate_path(self, tmp_path, capsys):
        code = cli.main(
            [
                "sweep",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(tmp_path / "out"),
                "--param",
                "nope.some.key",
                "--values",
                "1.0",
            ]
        )
        assert code == 2
        assert "not found" in capsys.readouterr().err

    def test_typo_leaf_key(self, tmp_path):
        code = cli.main(
            [
                "sweep",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(tmp_path / "out"),
                "--param",
                "tls.ratez",
                "--values",
                "1.0",
            ]
        )
        assert code == 2

    def test_bad_values(self, tmp_path):
        code = cli.main(
            [
                "sweep",
                "--scenario",
                write_scenario(tmp_path, tls_scenario()),
                "--out",
                str(tmp_path / "out"),
                "--param",
                "tls.rates.a",
                "--values",
                "1.0,zap",
            ]
        )
        assert code == 2

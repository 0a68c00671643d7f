import json

import pytest

import mixtv as mx
from mixtv import cli
from conftest import uniform_bits


def run_cli(capsys, args):
    code = cli.run(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_instance(path, p, q):
    path.write_text(json.dumps(mx.instance_document(p, q)))
    return str(path)


@pytest.fixture
def identical_instance(tmp_path):
    p = uniform_bits(2)
    return write_instance(tmp_path / "ident.json", p, p)


@pytest.fixture
def small_instance(tmp_path):
    p, q = mx.random_instance(2, 2, 2, 2, seed=5)
    return write_instance(tmp_path / "small.json", p, q)


class TestApprox:
    def test_early_exit_on_identical(self, capsys, identical_instance):
        code, out, err = run_cli(
            capsys, ["approx", "--input", identical_instance, "--epsilon", "0.1"]
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["estimate"] == 0
        assert report["result"]["samples"] == 0
        assert report["warnings"] == []
        assert "approx" in err

    def test_override_warns(self, capsys, small_instance):
        code, out, _ = run_cli(
            capsys,
            ["approx", "--input", small_instance, "--epsilon", "0.3", "--samples", "100"],
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["samples"] == 100
        assert any("override" in w for w in report["warnings"])

    def test_missing_file(self, capsys):
        code, _, err = run_cli(capsys, ["approx", "--input", "/nope.json", "--epsilon", "0.1"])
        assert code == 3
        assert json.loads(err)["error"] == "validation"

    def test_bad_epsilon_is_validation_error(self, capsys, small_instance):
        code, _, _ = run_cli(
            capsys, ["approx", "--input", small_instance, "--epsilon", "-1"]
        )
        assert code == 3


class TestExactAndBrute:
    def test_exact_subcube_agrees_with_brute(self, capsys, tmp_path):
        p, q = mx.random_instance(6, 2, 2, 2, seed=9, family="subcube")
        path = write_instance(tmp_path / "s.json", p, q)
        code, out, _ = run_cli(capsys, ["exact-subcube", "--input", path])
        assert code == 0
        exact = json.loads(out)["result"]["tv"]
        code, out, _ = run_cli(capsys, ["brute", "--input", path])
        assert code == 0
        brute = json.loads(out)["result"]["tv"]
        assert exact == pytest.approx(brute, abs=1e-12)

    def test_exact_subcube_rejects_general(self, capsys, small_instance):
        code, _, err = run_cli(capsys, ["exact-subcube", "--input", small_instance])
        assert code == 3
        assert json.loads(err)["error"] == "validation"

    def test_brute_size_guard(self, capsys, tmp_path):
        p, q = mx.random_instance(30, 2, 1, 1, seed=0)
        path = write_instance(tmp_path / "big.json", p, q)
        code, _, err = run_cli(capsys, ["brute", "--input", path])
        assert code == 4
        assert json.loads(err)["error"] == "size-guard"


class TestCouplingStats:
    def test_state_count_within_bound(self, capsys, small_instance):
        code, out, _ = run_cli(capsys, ["coupling-stats", "--input", small_instance])
        assert code == 0
        stats = json.loads(out)["result"]
        assert stats["state_bound"] == (2 * 2 + 1) ** 3 + 1 == 126
        assert stats["num_states"] <= 126
        assert len(stats["layer_sizes"]) == 3

    def test_dump_file(self, capsys, small_instance, tmp_path):
        dump = tmp_path / "dag.json"
        code, out, _ = run_cli(
            capsys, ["coupling-stats", "--input", small_instance, "--dump", str(dump)]
        )
        assert code == 0
        doc = json.loads(dump.read_text())
        stats = json.loads(out)["result"]
        assert len(doc["transitions"]) == stats["num_transitions"]
        assert doc["states"][0]["layer"] == 1

    def test_max_states_guard(self, capsys, small_instance):
        code, _, err = run_cli(
            capsys, ["coupling-stats", "--input", small_instance, "--max-states", "2"]
        )
        assert code == 4

    def test_handles_wide_instances(self, capsys, tmp_path):
        p, q = mx.random_instance(50, 4, 2, 2, seed=12)
        path = write_instance(tmp_path / "wide.json", p, q)
        code, out, _ = run_cli(capsys, ["coupling-stats", "--input", path])
        assert code == 0
        stats = json.loads(out)["result"]
        assert stats["num_states"] <= (50 * 4 + 1) ** 3 + 1
        assert len(stats["layer_sizes"]) == 51


class TestGen:
    def test_random_round_trip(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys,
            ["gen", "random", "--n", "3", "--q", "2", "--k1", "2", "--k2", "1",
             "--seed", "7", "--subcube"],
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["family"] == "subcube"
        p, q = mx.parse_instance(report["result"]["instance"])
        mx.classify_subcube(p)

    def test_random_output_file(self, capsys, tmp_path):
        target = tmp_path / "inst.json"
        code, out, _ = run_cli(
            capsys,
            ["gen", "random", "--n", "2", "--q", "3", "--k1", "1", "--k2", "1",
             "--seed", "1", "--output", str(target)],
        )
        assert code == 0
        doc = json.loads(target.read_text())
        assert json.loads(out)["result"]["instance"] == doc

    def test_subcube_needs_binary(self, capsys):
        code, _, _ = run_cli(
            capsys,
            ["gen", "random", "--n", "2", "--q", "3", "--k1", "1", "--k2", "1",
             "--seed", "1", "--subcube"],
        )
        assert code == 3

    def test_from_cnf_single_clause(self, capsys, tmp_path):
        cnf = tmp_path / "f.cnf"
        cnf.write_text("c single clause\np cnf 3 1\n1 2 3 0\n")
        code, out, _ = run_cli(capsys, ["gen", "from-cnf", "--dimacs", str(cnf)])
        assert code == 0
        result = json.loads(out)["result"]
        assert result["predicted_tv"] == 0.9375
        instance = result["instance"]
        assert instance["n"] == 4
        assert len(instance["p"]["weights"]) == 1
        assert len(instance["q_dist"]["weights"]) == 2

    def test_from_cnf_bad_formula(self, capsys, tmp_path):
        cnf = tmp_path / "bad.cnf"
        cnf.write_text("p cnf 3 1\n1 2 0\n")
        code, _, _ = run_cli(capsys, ["gen", "from-cnf", "--dimacs", str(cnf)])
        assert code == 3


class TestShippedSmokeInstances:
    """The seeded instances under instances/ keep approx and brute in agreement."""

    @pytest.mark.parametrize(
        "name",
        ["smoke-general-n2q2.json", "smoke-general-n3q3.json", "smoke-subcube-n4.json"],
    )
    def test_approx_agrees_with_brute_within_epsilon(self, capsys, name):
        path = f"instances/{name}"
        epsilon = 0.2
        _, out, _ = run_cli(capsys, ["brute", "--input", path])
        brute = json.loads(out)["result"]["tv"]
        for seed in (0, 1, 2):
            code, out, _ = run_cli(
                capsys,
                ["approx", "--input", path, "--epsilon", str(epsilon),
                 "--seed", str(seed), "--samples", "20000"],
            )
            assert code == 0
            estimate = json.loads(out)["result"]["estimate"]
            assert abs(estimate - brute) <= epsilon * brute


class TestReports:
    def test_usage_errors(self, capsys):
        assert run_cli(capsys, ["approx", "--input"])[0] == 2
        assert run_cli(capsys, ["frobnicate"])[0] == 2
        assert run_cli(capsys, [])[0] == 2

    def test_usage_error_detail_is_json(self, capsys):
        code, out, err = run_cli(capsys, ["frobnicate"])
        assert code == 2
        assert out == ""
        assert json.loads(err)["error"] == "usage"

    def test_stdout_bytes_deterministic(self, capsys, small_instance):
        args = ["approx", "--input", small_instance, "--epsilon", "0.3",
                "--samples", "64", "--seed", "11"]
        _, out1, _ = run_cli(capsys, args)
        _, out2, _ = run_cli(capsys, args)
        assert out1.encode() == out2.encode()

    def test_digest_ignores_whitespace(self, capsys, tmp_path):
        p, q = mx.random_instance(2, 2, 1, 1, seed=3)
        doc = mx.instance_document(p, q)
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        a.write_text(json.dumps(doc))
        b.write_text(json.dumps(doc, indent=4))
        _, out_a, _ = run_cli(capsys, ["brute", "--input", str(a)])
        _, out_b, _ = run_cli(capsys, ["brute", "--input", str(b)])
        assert json.loads(out_a)["digest"] == json.loads(out_b)["digest"]

    def test_report_echoes_command(self, capsys, small_instance):
        args = ["brute", "--input", small_instance]
        _, out, _ = run_cli(capsys, args)
        assert json.loads(out)["command"] == args

    def test_malformed_json_is_validation_error(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code, _, err = run_cli(capsys, ["brute", "--input", str(path)])
        assert code == 3

    def test_workers_env_default(self, capsys, monkeypatch, identical_instance):
        monkeypatch.setenv("MIXTV_WORKERS", "3")
        code, out, _ = run_cli(
            capsys, ["approx", "--input", identical_instance, "--epsilon", "0.1"]
        )
        assert code == 0
        assert json.loads(out)["result"]["workers"] == 3
        monkeypatch.setenv("MIXTV_WORKERS", "junk")
        code, out, _ = run_cli(
            capsys, ["approx", "--input", identical_instance, "--epsilon", "0.1"]
        )
        assert code == 0
        assert json.loads(out)["result"]["workers"] == 1

"""배치 CLI: 종료 코드, 바이트 안정 JSON, 파라미터 파일, 캐시 관리, 보고서 모델"""

import json
import os
import sys

import pytest

from mcp_server_serre.cli import build_parser, check_all, run
from mcp_server_serre.errors import CancelledError, CancelToken, ParameterError
from mcp_server_serre.reports import (CheckResult, ErrorInfo, Parameters, ReportEnvelope, load_parameters,
                                      parse_mu)
from mcp_server_serre.server import _dispatch
from mcp_server_serre.service import SerreService, check_all_tasks

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'config'))
from precision_constants import PRECISION  # noqa: E402


def invoke(capsys, *argv):
    code = run(list(argv))
    return code, capsys.readouterr().out


class TestExitCodes:

    def test_weights_pass(self, capsys, cache_dir):
        code, out = invoke(capsys, "weights", "--p", "7", "--f", "1", "--mu", "4,1", "--cache-dir", str(cache_dir))
        report = json.loads(out)
        assert code == 0
        assert report["passed"] and report["subcommand"] == "weights"
        assert report["checks"]

    def test_oracle_pass(self, capsys, cache_dir):
        code, out = invoke(capsys, "oracle", "--p", "7", "--f", "2", "--cache-dir", str(cache_dir))
        assert code == 0
        assert json.loads(out)["data"]["table"]["dimension_sums"] == [50, 48, 48, 50]

    @pytest.mark.parametrize("argv", [
        ["weights", "--p", "8", "--f", "1"],
        ["weights", "--p", "17", "--f", "1"],
        ["weights", "--f", "1"],
        ["weights", "--p", "7", "--f", "1", "--mu", "4,1,5"],
        ["weights", "--p", "7", "--f", "1", "--mu", "3,1"],
        ["weights", "--p", "7", "--f", "1", "--irhomu", "w0,-w0"],
    ])
    def test_parameter_errors(self, capsys, argv):
        code, out = invoke(capsys, *argv)
        assert code == 2
        assert json.loads(out)["error"]["type"] == "ParameterError"

    def test_unknown_subcommand_is_argparse_error(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["nonsense"])


class TestOutput:

    def test_byte_stable(self, capsys, cache_dir):
        argv = ["skeleton", "--p", "7", "--f", "1", "--mu", "4,1", "--cache-dir", str(cache_dir)]
        _, first = invoke(capsys, *argv)
        _, second = invoke(capsys, *argv)
        assert first == second
        assert "seconds" not in first

    def test_timings_are_opt_in(self, capsys, cache_dir):
        _, out = invoke(capsys, "weights", "--p", "7", "--f", "1", "--timings", "--cache-dir", str(cache_dir))
        assert all("seconds" in c for c in json.loads(out)["checks"])

    def test_out_file_matches_stdout(self, capsys, cache_dir, tmp_path):
        target = tmp_path / "report.json"
        _, out = invoke(capsys, "weights", "--p", "7", "--f", "1", "--out", str(target),
                        "--cache-dir", str(cache_dir))
        assert target.read_text(encoding="utf-8") == out
        assert not (tmp_path / "report.json.tmp").exists()

    def test_text_format(self, capsys, cache_dir):
        code, out = invoke(capsys, "weights", "--p", "7", "--f", "1", "--format", "text",
                           "--cache-dir", str(cache_dir))
        assert code == 0
        assert out.splitlines()[0].endswith("weights: PASS")

    def test_parameter_file_with_flag_override(self, capsys, cache_dir, tmp_path):
        path = tmp_path / "params.json"
        path.write_text(json.dumps({"p": 7, "f": 1, "mu": [[4, 1]], "irhomu": ""}), encoding="utf-8")
        code, out = invoke(capsys, "weights", "--params", str(path), "--irhomu", "w0",
                           "--cache-dir", str(cache_dir))
        assert code == 0
        assert json.loads(out)["parameters"]["irhomu"] == "w0"


class TestCacheCommands:

    def test_list_verify_purge(self, capsys, cache_dir):
        invoke(capsys, "oracle", "--p", "7", "--f", "1", "--cache-dir", str(cache_dir))
        code, out = invoke(capsys, "cache", "list", "--cache-dir", str(cache_dir))
        entries = json.loads(out)["data"]["entries"]
        assert code == 0 and entries
        code, out = invoke(capsys, "cache", "verify", "--seed", "2", "--cache-dir", str(cache_dir))
        assert code == 0
        assert json.loads(out)["data"]["corrupt"] == []
        code, out = invoke(capsys, "cache", "purge", "--cache-dir", str(cache_dir))
        assert code == 0
        assert json.loads(out)["data"]["removed"] == len(entries)

    def test_corrupt_entry_fails_verify(self, capsys, cache_dir):
        invoke(capsys, "oracle", "--p", "7", "--f", "1", "--cache-dir", str(cache_dir))
        victim = sorted(cache_dir.rglob("*.json"))[0]
        victim.write_text(victim.read_text(encoding="utf-8").replace('"d": ', '"d": 1', 1), encoding="utf-8")
        code, out = invoke(capsys, "cache", "verify", "--cache-dir", str(cache_dir))
        assert code == 1
        assert json.loads(out)["data"]["corrupt"] == [victim.stem]


class TestCancellation:

    @pytest.fixture
    def cancelled(self):
        token = CancelToken()
        token.cancel()
        return token

    @pytest.mark.parametrize("subcommand", ["weights", "tangent"])
    def test_service_run_raises(self, cache_dir, cancelled, subcommand):
        service = SerreService(PRECISION, str(cache_dir), token=cancelled)
        with pytest.raises(CancelledError):
            service.run(subcommand, Parameters(p=7, f=1))

    def test_check_all_raises(self, cache_dir, cancelled):
        with pytest.raises(CancelledError):
            check_all(Parameters(p=7, f=1), PRECISION, str(cache_dir), token=cancelled)

    def test_tool_dispatch_uses_call_token(self, cache_dir, cancelled):
        service = SerreService(PRECISION, str(cache_dir))
        with pytest.raises(CancelledError):
            _dispatch(service, "skeleton", {"p": 7, "f": 1}, cancelled)
        assert _dispatch(service, "weights", {"p": 7, "f": 1, "mu": [[4, 1]]}, CancelToken())["passed"]


class TestReports:

    @pytest.mark.parametrize("text, pairs", [
        ("4,1", [(4, 1)]),
        ("4,1;5,1", [(4, 1), (5, 1)]),
        ("4,1,5,1", [(4, 1), (5, 1)]),
        (" 4, 1 ; 5, 1 ", [(4, 1), (5, 1)]),
    ])
    def test_parse_mu(self, text, pairs):
        assert parse_mu(text) == pairs

    @pytest.mark.parametrize("text", ["4,1,5", "a,b", "4,1,2;5,1"])
    def test_parse_mu_rejects(self, text):
        with pytest.raises(ParameterError):
            parse_mu(text)

    def test_default_mu(self):
        assert Parameters(p=7, f=2).mu == [(4, 1), (5, 1)]

    @pytest.mark.parametrize("data", [
        {"p": 7, "f": 1, "colour": "blue"},
        {"p": 9, "f": 1},
        {"p": 7, "f": 2, "mu": [[4, 1]]},
    ])
    def test_schema_violations(self, data):
        with pytest.raises(ParameterError):
            load_parameters(data)

    def test_envelope(self):
        env = ReportEnvelope(subcommand="weights", checks=[
            CheckResult(name="a", passed=True), CheckResult(name="b", passed=False)])
        assert not env.passed and env.failed_checks() == ["b"]
        payload = json.loads(env.to_json())
        assert list(payload) == sorted(payload)
        assert "error" not in payload
        env.checks = []
        env.error = ErrorInfo(type="OracleError", message="boom")
        assert not env.passed

    def test_check_all_tasks(self):
        tasks = check_all_tasks(Parameters(p=7, f=1))
        assert len(tasks) == 16
        assert tasks == sorted(tasks, key=lambda t: (t["irhomu"], t["subcommand"]))
        assert {"subcommand": "oracle", "irhomu": ""} in tasks

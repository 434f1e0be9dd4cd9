import pytest

from balancedn.cli import main, parse_args
from balancedn.core import assign_resolver, parse_name
from balancedn.metrics import CSV_COLUMNS, parse_csv

NSFNET_SNIPPET = """\
node 0 r0 router
node 1 c0 consumer
node 2 p0 producer
link 0 1 1 1000
link 0 2 1 1000
"""


class TestParseArgs:
    def test_run_command_defaults(self):
        args = parse_args(["run", "--scenario", "s2", "--topology", "nsfnet",
                           "--out", "r.csv"])
        assert args.command == "run"
        assert args.resolvers == 8 and args.seed == 42
        assert args.schemes == ("flooding", "balancedn")
        assert args.out == "r.csv"

    def test_hash_command(self):
        args = parse_args(["hash", "--name", "/a/b", "--resolvers", "8"])
        assert args.command == "hash" and args.name == "/a/b"

    def test_s4_without_skew_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            parse_args(["run", "--scenario", "s4", "--out", "r.csv"])
        assert err.value.code == 2

    def test_skew_outside_s4_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            parse_args(["run", "--scenario", "s2", "--skew", "0:5",
                        "--out", "r.csv"])
        assert err.value.code == 2

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            parse_args(["run", "--scenario", "s2", "--out", "r.csv", "--what"])
        assert err.value.code == 2

    def test_bad_scheme_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            parse_args(["run", "--scenario", "s2", "--schemes", "gossip",
                        "--out", "r.csv"])
        assert err.value.code == 2

    def test_skew_parsing(self):
        args = parse_args(["run", "--scenario", "s4",
                           "--skew", "0:650000,1:50000", "--out", "r.csv"])
        assert args.skew == {0: 650_000, 1: 50_000}


class TestHashCommand:
    def test_prints_assign_resolver_result(self, capsys):
        assert main(["hash", "--name", "/a/b", "--resolvers", "8"]) == 0
        printed = int(capsys.readouterr().out.strip())
        assert printed == assign_resolver(parse_name("/a/b"), 8)

    def test_bad_name_is_runtime_error(self, capsys):
        assert main(["hash", "--name", "no-slash"]) == 1
        assert "error" in capsys.readouterr().err


class TestValidateCommand:
    def test_valid_file(self, tmp_path, capsys):
        path = tmp_path / "t.topo"
        path.write_text(NSFNET_SNIPPET)
        assert main(["validate", "--topology", str(path)]) == 0
        out = capsys.readouterr().out
        assert "3 nodes" in out and "router=1" in out

    def test_invalid_file_exits_one(self, tmp_path, capsys):
        path = tmp_path / "bad.topo"
        path.write_text("node 0 a router\nnode 0 b router\n")
        assert main(["validate", "--topology", str(path)]) == 1
        assert "duplicate" in capsys.readouterr().err

    def test_missing_file_exits_one(self):
        assert main(["validate", "--topology", "/no/such/file.topo"]) == 1


class TestRunCommand:
    def test_s1_run_writes_parseable_csv(self, tmp_path):
        out = tmp_path / "report.csv"
        assert main(["run", "--scenario", "s1_near", "--topology", "nsfnet",
                     "--out", str(out)]) == 0
        rows = parse_csv(out.read_text())
        assert len(rows) == 2
        assert {r["scheme"] for r in rows} == {"flooding", "balancedn"}
        for row in rows:
            assert list(row) == list(CSV_COLUMNS)

    def test_same_argv_same_bytes(self, tmp_path):
        payloads = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert main(["run", "--scenario", "s2", "--content", "3000",
                         "--seed", "42", "--out", str(out)]) == 0
            payloads.append(out.read_bytes())
        assert payloads[0] == payloads[1]

    def test_runtime_error_exits_one(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = main(["run", "--scenario", "s2", "--content", "10",
                     "--out", str(out)])
        assert code == 1
        assert "too small" in capsys.readouterr().err

    def test_scheme_subset_run(self, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["run", "--scenario", "s1_mid", "--schemes", "balancedn",
                     "--out", str(out)]) == 0
        rows = parse_csv(out.read_text())
        assert {r["scheme"] for r in rows} == {"balancedn"}

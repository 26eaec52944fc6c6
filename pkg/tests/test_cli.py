"""CLI commands, exit codes, and output determinism."""

import os

import pytest

from schematrans.cli import main

from conftest import fixture_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_ok(capsys):
    code, out, _ = run(capsys, "check", "--schema", fixture_path("worked.schema"))
    assert code == 0 and "ok:" in out


def test_check_bad_fd(tmp_path, capsys):
    p = tmp_path / "bad.schema"
    p.write_text("relation p(a VALUE NOT NULL);\nfd p: a -> nope;\n")
    code, out, _ = run(capsys, "check", "--schema", str(p))
    assert code == 1 and "nope" in out


def test_check_empty_file(tmp_path, capsys):
    p = tmp_path / "empty.schema"
    p.write_text("")
    code, out, _ = run(capsys, "check", "--schema", str(p))
    assert code == 1 and "no relations" in out


def test_parse_error_exit_2(tmp_path, capsys):
    p = tmp_path / "broken.schema"
    p.write_text("relation p(a VALUE")
    code, _, err = run(capsys, "check", "--schema", str(p))
    assert code == 2 and "error" in err


def test_missing_file_exit_2(capsys):
    code, _, _ = run(capsys, "check", "--schema", "/nonexistent/x.schema")
    assert code == 2


def test_usage_error_exit_2(capsys):
    assert main(["bogus-command"]) == 2


def test_plan_prints_t_and_maps(capsys):
    code, out, _ = run(
        capsys,
        "plan",
        "--schema", fixture_path("vertical_s.schema"),
        "--plan", fixture_path("vertical.plan"),
    )
    assert code == 0
    assert "q = pi[a, b](p);" in out
    assert "p = join(q, r);" in out
    assert "inclusion2 q.b <=> r.b;" in out


def test_verify_ok_and_counterexample(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "verify",
        "--schema", fixture_path("vertical_s.schema"),
        "--plan", fixture_path("vertical.plan"),
        "--bounds", "k=2",
    )
    assert code == 0 and "VERIFIED" in out and "98" in out

    # a plan that drops information: project p to (a,b) via vertical on a bad split
    bad_plan = tmp_path / "bad.plan"
    bad_plan.write_text("vertical p -> q(a, b) r(b, c) on (b);\n")
    bad_schema = tmp_path / "bad.schema"
    # no FD at all: split is not justified -> step error -> exit 1
    bad_schema.write_text("relation p(a VALUE NOT NULL, b VALUE NOT NULL, c VALUE NOT NULL);\n")
    code, _, err = run(capsys, "verify", "--schema", str(bad_schema), "--plan", str(bad_plan))
    assert code == 1


def test_verify_domain_override(capsys):
    code, out, _ = run(
        capsys,
        "verify",
        "--schema", fixture_path("horizontal_t.schema"),
        "--plan", fixture_path("horizontal.plan"),
        "--bounds", "k=2,tuples=3",
        "--domain", "c=k,j",
    )
    assert code == 0 and "VERIFIED" in out and "90" in out


def test_emit_sql_to_dir(tmp_path, capsys):
    code, _, _ = run(
        capsys,
        "emit",
        "--schema", fixture_path("worked.schema"),
        "--plan", fixture_path("worked.plan"),
        "--format", "sql",
        "--out", str(tmp_path),
    )
    assert code == 0
    assert sorted(os.listdir(tmp_path)) == [
        "README", "materialize.sql", "schema_s.sql", "schema_t.sql", "triggers.sql",
    ]


def test_emit_dot_stdout(capsys):
    code, out, _ = run(
        capsys,
        "emit",
        "--schema", fixture_path("worked.schema"),
        "--plan", fixture_path("worked.plan"),
        "--format", "dot",
    )
    assert code == 0 and "digraph carm" in out


def test_emit_dot_requires_carm(capsys):
    code, _, err = run(
        capsys,
        "emit",
        "--schema", fixture_path("vertical_s.schema"),
        "--plan", fixture_path("vertical.plan"),
        "--format", "dot",
    )
    assert code == 1


def test_simulate_logs_and_exit(capsys):
    code, out, _ = run(
        capsys,
        "simulate",
        "--schema", fixture_path("worked.schema"),
        "--plan", fixture_path("worked.plan"),
        "--instance", fixture_path("worked_source.inst"),
        "--script", fixture_path("worked_updates.script"),
    )
    # the fixture script includes intentional rejections -> semantic exit 1
    assert code == 1
    assert out.count("ACCEPT") == 9
    assert out.count("REJECT") == 7
    assert "final source instance" in out


def test_simulate_empty_script(tmp_path, capsys):
    p = tmp_path / "empty.script"
    p.write_text("")
    code, out, _ = run(
        capsys,
        "simulate",
        "--schema", fixture_path("worked.schema"),
        "--plan", fixture_path("worked.plan"),
        "--instance", fixture_path("worked_source.inst"),
        "--script", str(p),
    )
    assert code == 0 and "0 transactions" in out

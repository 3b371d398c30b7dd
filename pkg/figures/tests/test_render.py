"""Rendering behavior on synthetic tables."""

import hashlib
from pathlib import Path

import pytest

from conftest import write_table
from rlqite_figures.cli import main
from rlqite_figures.render import KINDS, PlotJob, render
from rlqite_figures.schema import COLUMNS, SchemaError, load_table

TRACE = COLUMNS["qite-trace"]
SUMMARY = COLUMNS["run-summary"]


def summary_csv(tmp_path, name="summary.csv", schemes=("standard", "replay")):
    rows = []
    for i, scheme in enumerate(schemes):
        for beta in (0.3, 0.6, 0.9):
            rows.append([beta, scheme, -4.0 - 0.1 * i - beta, 0.9 + 0.01 * i,
                         0.4 + 0.1 * i, 0.05 - 0.01 * i])
    return write_table(tmp_path / name, "run-summary", SUMMARY, rows,
                       extras=" model=tfim e_gs=-4.7587")


def kind_inputs(tmp_path, kind):
    """Minimal valid input files for one figure kind."""
    if kind in ("beta-curves", "sk-beta"):
        return [summary_csv(tmp_path)]
    if kind == "alg-error":
        rows = [[k, "X1", -3.0 - 0.1 * k, 0.01 * k, 0.9] for k in range(1, 7)]
        return [write_table(tmp_path / "trace.csv", "qite-trace", TRACE, rows,
                            extras=" scheme=standard")]
    if kind == "scaling":
        rows = [[n, 0.5 * n, -n, -n - 0.1, 1.05, 0.9, 0.95] for n in (2, 3, 4)]
        return [write_table(tmp_path / "sc.csv", "scaling",
                            COLUMNS["scaling"], rows)]
    if kind == "learning-curve":
        rows = [[i, -0.5 + 0.1 * i, -4.0 - 0.05 * i, 0.1 * i] for i in range(5)]
        return [write_table(tmp_path / "lc.csv", "learning-curve",
                            COLUMNS["learning-curve"], rows,
                            extras=" e_std=-4.4 e_gs=-4.76")]
    if kind == "hamming":
        return [write_table(tmp_path / "hm.csv", "hamming-matrix",
                            ["protocol", "p0", "p1", "p2"],
                            [["p0", 0, 3, 5], ["p1", 3, 0, 2],
                             ["p2", 5, 2, 0]])]
    raise AssertionError(kind)


@pytest.mark.parametrize("kind", sorted(KINDS))
@pytest.mark.parametrize("ext", ["svg", "png"])
def test_kind_renders(tmp_path, kind, ext):
    inputs = kind_inputs(tmp_path, kind)
    out = tmp_path / f"fig.{ext}"
    render(PlotJob(kind=kind, inputs=tuple(inputs), out=str(out)))
    assert out.stat().st_size > 0


@pytest.mark.parametrize("kind", sorted(KINDS))
@pytest.mark.parametrize("style", ["default", "paper"])
def test_svg_rerender_is_byte_stable(tmp_path, kind, style):
    inputs = kind_inputs(tmp_path, kind)
    first, second = tmp_path / "a.svg", tmp_path / "b.svg"
    render(PlotJob(kind=kind, inputs=tuple(inputs), out=str(first), style=style))
    render(PlotJob(kind=kind, inputs=tuple(inputs), out=str(second), style=style))
    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize("kind", sorted(KINDS))
def test_render_does_not_mutate_inputs(tmp_path, kind):
    inputs = kind_inputs(tmp_path, kind)
    before = [hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in inputs]
    render(PlotJob(kind=kind, inputs=tuple(inputs), out=str(tmp_path / "f.svg")))
    after = [hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in inputs]
    assert before == after


@pytest.mark.parametrize("kind", sorted(KINDS))
def test_empty_table_renders_axes_only(tmp_path, kind):
    schema, _ = KINDS[kind]
    header = COLUMNS[schema] or ["protocol", "p0"]
    path = write_table(tmp_path / "empty.csv", schema, header, [])
    out = tmp_path / "f.svg"
    assert main([kind, "--in", path, "--out", str(out)]) == 0
    assert out.stat().st_size > 0


def test_beta_curves_three_labeled_series(tmp_path):
    path = summary_csv(tmp_path, schemes=("standard", "randomized", "replay"))
    _, renderer = KINDS["beta-curves"]
    fig = renderer([load_table(path, "run-summary")])
    labels = [line.get_label() for line in fig.axes[0].get_lines()
              if not line.get_label().startswith("_")]
    assert labels == ["standard", "randomized", "replay", "ground state"]
    fidelity_lines = fig.axes[1].get_lines()
    assert len(fidelity_lines) == 3


def test_unknown_scheme_sorts_after_known(tmp_path):
    path = summary_csv(tmp_path, schemes=("zeta", "standard", "alpha"))
    _, renderer = KINDS["beta-curves"]
    fig = renderer([load_table(path, "run-summary")])
    labels = [line.get_label() for line in fig.axes[0].get_lines()
              if not line.get_label().startswith("_")]
    assert labels == ["standard", "alpha", "zeta", "ground state"]


def test_points_sorted_by_beta_within_scheme(tmp_path):
    rows = [[0.9, "standard", -4.9, 0.9, 0.4, 0.05],
            [0.3, "standard", -4.3, 0.9, 0.4, 0.05],
            [0.6, "standard", -4.6, 0.9, 0.4, 0.05]]
    path = write_table(tmp_path / "s.csv", "run-summary", SUMMARY, rows)
    _, renderer = KINDS["beta-curves"]
    fig = renderer([load_table(path, "run-summary")])
    xdata = fig.axes[0].get_lines()[0].get_xdata()
    assert list(xdata) == [0.3, 0.6, 0.9]


def test_render_rejects_unknown_kind(tmp_path):
    with pytest.raises(SchemaError, match="unknown figure kind"):
        render(PlotJob(kind="pie", inputs=("x.csv",), out="f.svg"))


def test_render_rejects_unknown_style(tmp_path):
    with pytest.raises(SchemaError, match="unknown style"):
        render(PlotJob(kind="beta-curves", inputs=("x.csv",), out="f.svg",
                       style="neon"))


def test_render_requires_inputs():
    with pytest.raises(SchemaError, match="no input"):
        render(PlotJob(kind="beta-curves", inputs=(), out="f.svg"))


def test_cli_missing_file_exits_2(tmp_path, capsys):
    out = tmp_path / "f.svg"
    code = main(["beta-curves", "--in", str(tmp_path / "gone.csv"),
                 "--out", str(out)])
    assert code == 2
    assert "error:" in capsys.readouterr().err
    assert not out.exists()


def test_cli_wrong_schema_exits_2(tmp_path, capsys):
    path = kind_inputs(tmp_path, "scaling")[0]
    code = main(["beta-curves", "--in", path, "--out", str(tmp_path / "f.svg")])
    assert code == 2
    err = capsys.readouterr().err
    assert "schema 'scaling', expected 'run-summary'" in err


def test_cli_version_mismatch_exits_2(tmp_path, capsys):
    path = tmp_path / "s.csv"
    path.write_text(
        "# manifest schema=run-summary/v9 config_sha=0123456789ab"
        " seed=0 deterministic=true\n" + ",".join(SUMMARY) + "\n"
    )
    code = main(["beta-curves", "--in", str(path),
                 "--out", str(tmp_path / "f.svg")])
    assert code == 2
    assert "version 'v9'" in capsys.readouterr().err


def test_cli_invalid_kind_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["pie", "--in", "x.csv", "--out", "f.svg"])
    assert exc.value.code == 2


def test_cli_success_reports_output(tmp_path, capsys):
    path = summary_csv(tmp_path)
    out = tmp_path / "fig.svg"
    assert main(["beta-curves", "--in", path, "--out", str(out)]) == 0
    assert f"wrote {out}" in capsys.readouterr().out


def test_alg_error_series_labeled_from_manifest(tmp_path):
    rows = [[k, "X1", -3.0, 0.01 * k, 0.9] for k in range(1, 4)]
    a = write_table(tmp_path / "a.csv", "qite-trace", TRACE, rows,
                    extras=" scheme=standard")
    b = write_table(tmp_path / "b.csv", "qite-trace", TRACE, rows,
                    extras=" scheme=replay")
    _, renderer = KINDS["alg-error"]
    fig = renderer([load_table(a, "qite-trace"), load_table(b, "qite-trace")])
    labels = [line.get_label() for line in fig.axes[0].get_lines()]
    assert labels == ["standard", "replay"]


def test_hamming_renders_empty_matrix(tmp_path):
    path = write_table(tmp_path / "hm.csv", "hamming-matrix",
                       ["protocol", "p0"], [])
    out = tmp_path / "f.svg"
    render(PlotJob(kind="hamming", inputs=(path,), out=str(out)))
    assert out.stat().st_size > 0

"""Renderer tests against small synthetic artifacts."""

import json
import math

import numpy as np
import pytest

pytest.importorskip("matplotlib")
pytest.importorskip("figures")

from figures.render import (ArtifactError, FigureSpec, PANELS, load_surface,
                            render, run)


def write_surface(path, nan_hole=False):
    bands = [1.0, 1.5, 2.0]
    thetas = [0.0, 0.4, 0.8, 1.2]
    lines = ["bandwidth,theta,phi_opt,P_S,err"]
    for band in bands:
        for theta in thetas:
            p = 0.5 + 0.2 * math.sin(theta) - 0.05 * (band - 1.5) ** 2
            if nan_hole and band == 1.5 and theta == 0.8:
                p = float("nan")
            lines.append(f"{band!r},{theta!r},0.0,{p!r},1e-09")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_peak(path):
    path.write_text(json.dumps({"bandwidth": 1.5, "theta": 0.647,
                                "phi": 0.0, "P_S": 0.72, "P_limit": 0.72}))
    return path


def write_shape(path, with_profile=True):
    payload = {"sigma": 0.5, "L": 20.0, "theta": 0.55, "phi": 0.0,
               "n_modes": 4, "eigenvalue": 0.92,
               "alpha": [0.996, 0.08, 0.03, 0.01],
               "r": np.eye(4).tolist(),
               "convergence": [[0, 0.915], [2, 0.918], [4, 0.9195],
                               [6, 0.92]]}
    path.write_text(json.dumps(payload))
    if with_profile:
        rows = ["s,profile"] + [f"{0.1 * k!r},{math.exp(-0.01 * k * k)!r}"
                                for k in range(30)]
        (path.parent / (path.stem + "-profile.csv")).write_text(
            "\n".join(rows) + "\n")
    return path


@pytest.fixture
def artifacts(tmp_path):
    return {"surface": write_surface(tmp_path / "sweep.csv"),
            "peak": write_peak(tmp_path / "peak.json"),
            "shape": write_shape(tmp_path / "shape.json"),
            "dir": tmp_path}


def test_all_panels_render(artifacts):
    for panel in PANELS:
        data = artifacts["shape"] if panel.startswith("4") \
            else artifacts["surface"]
        out = artifacts["dir"] / f"panel_{panel}.png"
        got = render(FigureSpec(panel, str(data), str(out),
                                peak=str(artifacts["peak"])))
        assert got == str(out)
        assert out.stat().st_size > 0


def test_default_contour_levels(tmp_path):
    assert FigureSpec("2a", "x", "y").contour == 0.67
    assert FigureSpec("2c", "x", "y").contour == 0.64
    assert FigureSpec("3a", "x", "y").contour == 0.79
    assert FigureSpec("4c", "x", "y").contour is None
    assert FigureSpec("2a", "x", "y", contour=0.5).contour == 0.5


def test_unknown_panel_rejected():
    with pytest.raises(ValueError):
        FigureSpec("5z", "x", "y")


def test_load_surface_grid(artifacts):
    bands, thetas, grid = load_surface(artifacts["surface"])
    assert bands.tolist() == [1.0, 1.5, 2.0]
    assert thetas.tolist() == [0.0, 0.4, 0.8, 1.2]
    assert grid.shape == (4, 3)
    assert not np.any(np.isnan(grid))


def test_nan_rows_render_as_holes(tmp_path, artifacts):
    surface = write_surface(tmp_path / "holes.csv", nan_hole=True)
    out = tmp_path / "holes.png"
    render(FigureSpec("3a", str(surface), str(out),
                      peak=str(artifacts["peak"])))
    assert out.stat().st_size > 0


def test_heatmap_requires_peak(artifacts, tmp_path):
    with pytest.raises(ArtifactError):
        render(FigureSpec("2a", str(artifacts["surface"]),
                          str(tmp_path / "nope.png")))
    assert not (tmp_path / "nope.png").exists()


def test_missing_artifact_fails_cleanly(tmp_path, capsys):
    out = tmp_path / "img.png"
    code = run(["--panel", "2a", "--data", str(tmp_path / "absent.csv"),
                "--peak", str(tmp_path / "absent.json"), "--out", str(out)])
    assert code == 1
    assert "error:" in capsys.readouterr().err
    assert not out.exists()


def test_empty_csv_fails_cleanly(tmp_path, artifacts, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("bandwidth,theta,phi_opt,P_S,err\n")
    out = tmp_path / "img.png"
    code = run(["--panel", "2b", "--data", str(empty), "--out", str(out)])
    assert code == 1
    assert "no data rows" in capsys.readouterr().err
    assert not out.exists()


def test_wrong_header_fails(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    code = run(["--panel", "2d", "--data", str(bad),
                "--out", str(tmp_path / "img.png")])
    assert code == 1
    assert "header" in capsys.readouterr().err


def test_partial_grid_fails(tmp_path, artifacts):
    lines = artifacts["surface"].read_text().splitlines()
    (tmp_path / "ragged.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ArtifactError):
        load_surface(tmp_path / "ragged.csv")


def test_malformed_json_fails(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = run(["--panel", "4d", "--data", str(bad),
                "--out", str(tmp_path / "img.png")])
    assert code == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_shape_json_without_alpha_fails(tmp_path, capsys):
    bad = tmp_path / "shape.json"
    bad.write_text(json.dumps({"eigenvalue": 0.9}))
    code = run(["--panel", "4c", "--data", str(bad),
                "--out", str(tmp_path / "img.png")])
    assert code == 1
    assert "missing keys" in capsys.readouterr().err


def test_usage_error_exit_two(capsys):
    assert run(["--panel", "9x", "--data", "d", "--out", "o"]) == 2
    assert run([]) == 2
    capsys.readouterr()


def test_rerun_is_idempotent_and_read_only(artifacts, capsys):
    before = artifacts["surface"].read_bytes()
    out = artifacts["dir"] / "again.png"
    args = ["--panel", "3c", "--data", str(artifacts["surface"]),
            "--peak", str(artifacts["peak"]), "--out", str(out)]
    assert run(args) == 0
    assert run(args) == 0
    assert artifacts["surface"].read_bytes() == before
    assert str(out) in capsys.readouterr().out


def test_curve_renders_without_profile(tmp_path):
    shape = write_shape(tmp_path / "noprof.json", with_profile=False)
    out = tmp_path / "curve.png"
    render(FigureSpec("4a", str(shape), str(out)))
    assert out.stat().st_size > 0

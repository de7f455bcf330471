import json

import numpy as np
import pytest

from apps import __version__
from apps.collisionlab.artifacts import ArtifactWriter, module_versions, read_csv, read_json


def test_commit_moves_staged_files_into_place(tmp_path):
    target = tmp_path / "out" / "profile"

    with ArtifactWriter(target, "abc123") as writer:
        writer.write_json("profile.json", {"mass": 6.0})
        writer.write_csv("profile.csv", ["x", "Q"], [[0.0, 1.5], [np.float64(1.0), 1.2]])
        assert not target.exists()

    assert sorted(p.name for p in target.iterdir()) == ["profile.csv", "profile.json"]
    assert not list(target.parent.glob(".profile.partial-*"))


def test_json_carries_provenance(tmp_path):
    target = tmp_path / "run"

    with ArtifactWriter(target, "abc123") as writer:
        writer.write_json("report.json", {"values": np.arange(3), "scale": np.float64(2.0)})

    document = read_json(target / "report.json")
    assert document["config_hash"] == "abc123"
    assert document["values"] == [0, 1, 2]
    assert document["scale"] == 2.0
    assert document["module_versions"]["shared.solitons"] == __version__


def test_csv_provenance_lines_are_skipped_on_read(tmp_path):
    target = tmp_path / "run"

    with ArtifactWriter(target, "abc123") as writer:
        writer.write_csv("track.csv", ["t", "c1"], [[0.0, 1.0], [1.0, 1.0]])

    text = (target / "track.csv").read_text(encoding="utf-8")
    assert text.startswith("# config_hash: abc123\n# module_versions: ")
    header, rows = read_csv(target / "track.csv")
    assert header == ["t", "c1"]
    assert rows == [["0.0", "1.0"], ["1.0", "1.0"]]


def test_failure_leaves_nothing_behind(tmp_path):
    target = tmp_path / "run"

    with pytest.raises(RuntimeError):
        with ArtifactWriter(target, "abc123") as writer:
            writer.write_json("partial.json", {"a": 1})
            raise RuntimeError("integration failed")

    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_commit_replaces_previous_output(tmp_path):
    target = tmp_path / "run"
    target.mkdir()
    (target / "stale.json").write_text("{}", encoding="utf-8")

    with ArtifactWriter(target, "abc123") as writer:
        writer.write_json("fresh.json", {})

    assert [p.name for p in target.iterdir()] == ["fresh.json"]


def test_writer_cannot_be_reused_after_commit(tmp_path):
    writer = ArtifactWriter(tmp_path / "run", "abc123")
    writer.commit()

    with pytest.raises(RuntimeError):
        writer.write_json("late.json", {})


def test_snapshots_round_trip(tmp_path):
    target = tmp_path / "run"
    frames = [(0.0, np.zeros(8)), (0.5, np.ones(8))]

    with ArtifactWriter(target, "abc123") as writer:
        writer.write_snapshots("snapshots.npz", frames)

    with np.load(target / "snapshots.npz") as data:
        assert data["t"].tolist() == [0.0, 0.5]
        assert data["u"].shape == (2, 8)
        assert str(data["config_hash"]) == "abc123"
        assert json.loads(str(data["module_versions"]))["apps.collisionlab"] == __version__


def test_module_versions_lists_numerical_stack():
    versions = module_versions()
    assert {"numpy", "scipy", "shared.spectral"} <= set(versions)

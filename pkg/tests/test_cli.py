import json

import numpy as np
import pytest

from srzoo.cli import main
from srzoo.pixels import Frame, save_frame_dir, save_pgm
from srzoo.sim import calibration_corpus, generate_trace
from srzoo.sim.trace import save_trace_spec
from srzoo.zoo import load_table


def three_scene_spec(seed=777):
    return {
        "seed": seed,
        "frame_width": 64,
        "frame_height": 64,
        "patch_size": 32,
        "frames_per_segment": 6,
        "segment_seconds": 10.0,
        "streams": [
            {"name": "one", "segments": ["x", "x"]},
            {"name": "two", "segments": ["y", "z"]},
        ],
    }


@pytest.fixture()
def scene_frame(tmp_path):
    frame = calibration_corpus(frames_per_class=1)[0]
    path = tmp_path / "scene.pgm"
    save_pgm(frame, path)
    return path


def test_psnr_identical_prints_inf(tmp_path, capsys):
    frame = Frame(width=4, height=4, luma=np.arange(16, dtype=np.uint8))
    save_pgm(frame, tmp_path / "a.pgm")
    save_pgm(frame, tmp_path / "b.pgm")
    assert main(["psnr", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")]) == 0
    assert capsys.readouterr().out.strip() == "inf"


def test_psnr_differing_prints_value(tmp_path, capsys):
    a = Frame(width=2, height=1, luma=np.array([0, 0], dtype=np.uint8))
    b = Frame(width=2, height=1, luma=np.array([3, 4], dtype=np.uint8))
    save_pgm(a, tmp_path / "a.pgm")
    save_pgm(b, tmp_path / "b.pgm")
    assert main(["psnr", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")]) == 0
    value = float(capsys.readouterr().out.strip())
    assert abs(value - (10 * np.log10(255 * 255 / 12.5))) < 1e-3


def test_psnr_missing_file_exit_two(tmp_path, capsys):
    assert main(["psnr", str(tmp_path / "no.pgm"), str(tmp_path / "no.pgm")]) == 2


def test_psnr_corrupt_file_exit_three(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n2 2\n65535\n\x00\x00\x00\x00")
    good = tmp_path / "good.pgm"
    save_pgm(Frame(width=1, height=1, luma=np.array([0], dtype=np.uint8)), good)
    assert main(["psnr", str(bad), str(good)]) == 3


def test_edges_reports_scores_and_fraction(scene_frame, capsys):
    assert main(["edges", str(scene_frame)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    *rows, summary = lines
    assert len(rows) == 9  # 96x96 frame at 32-pixel patches
    for row in rows:
        r, c, score, kept = row.split()
        assert float(score) >= 0.0 and kept in {"0", "1"}
    assert summary.startswith("retained ")


def test_build_zoo_from_trace_three_scenes(tmp_path, capsys):
    spec = three_scene_spec()
    spec_path = tmp_path / "trace.json"
    save_trace_spec(spec, spec_path)
    out = tmp_path / "table.zoo"
    assert main(["build-zoo", "--trace", str(spec_path), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    table = load_table(out)
    assert len(table) == 3  # one model per distinct scene
    assert "entries=3" in stdout
    for entry in table.entries:
        assert 1 <= entry.k_effective <= 5


def test_build_zoo_same_seed_byte_identical(tmp_path):
    spec_path = tmp_path / "trace.json"
    save_trace_spec(three_scene_spec(), spec_path)
    out1, out2 = tmp_path / "t1.zoo", tmp_path / "t2.zoo"
    assert main(["build-zoo", "--trace", str(spec_path), "--out", str(out1)]) == 0
    assert main(["build-zoo", "--trace", str(spec_path), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_build_zoo_empty_dir_exit_two(tmp_path, capsys):
    empty = tmp_path / "frames"
    empty.mkdir()
    out = tmp_path / "t.zoo"
    assert main(["build-zoo", "--frames", str(empty), "--out", str(out)]) == 2
    assert "no frames found" in capsys.readouterr().err


def test_build_zoo_from_frames_dir(tmp_path, capsys):
    trace = generate_trace(three_scene_spec())
    segs = [s for s in trace.arrival_order() if s.stream == "one"]
    frames = []
    for seg in segs:
        frames.extend(trace.synthesize(seg))
    frames_dir = tmp_path / "frames"
    save_frame_dir(frames, frames_dir)
    out = tmp_path / "t.zoo"
    assert main(["build-zoo", "--frames", str(frames_dir), "--segment-frames", "6",
                 "--out", str(out)]) == 0
    table = load_table(out)
    assert len(table) == 1  # both segments show the same scene


def test_schedule_writes_decision_log(tmp_path):
    trace = generate_trace(three_scene_spec())
    segs = [s for s in trace.arrival_order() if s.stream == "one"]
    frames = []
    for seg in segs:
        frames.extend(trace.synthesize(seg))
    frames_dir = tmp_path / "frames"
    save_frame_dir(frames, frames_dir)
    table_path = tmp_path / "t.zoo"
    assert main(["build-zoo", "--frames", str(frames_dir), "--segment-frames", "6",
                 "--out", str(table_path)]) == 0
    log_path = tmp_path / "decisions.jsonl"
    assert main(["schedule", "--frames", str(frames_dir), "--table", str(table_path),
                 "--segment-frames", "6", "--out", str(log_path)]) == 0
    lines = log_path.read_text().strip().splitlines()
    header = json.loads(lines[0])
    assert "seed" in header and "config" in header
    records = [json.loads(line) for line in lines[1:]]
    assert len(records) == len(frames)
    for rec in records:
        assert set(rec) == {"stream", "segment", "frame", "chosen", "count_p",
                            "max_vote", "needs_fine_tune"}
    # The table was built from these very frames, so scheduling matches it.
    assert all(rec["chosen"] == 0 for rec in records)


def test_simulate_writes_reports_and_summary_line(tmp_path, capsys):
    spec_path = tmp_path / "trace.json"
    save_trace_spec(three_scene_spec(), spec_path)
    out_dir = tmp_path / "out"
    assert main(["simulate", "--trace", str(spec_path), "--out-dir", str(out_dir)]) == 0
    stdout = capsys.readouterr().out
    assert "fine_tuned=3/4" in stdout
    for name in ("report.csv", "summary.json", "decisions.jsonl",
                 "transmissions.jsonl", "timeline.csv"):
        assert (out_dir / name).exists()
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["fine_tuned_segments"] == 3
    assert summary["total_segments"] == 4


def test_transfer_matrix_prints_rows(tmp_path, capsys):
    spec_path = tmp_path / "trace.json"
    save_trace_spec(three_scene_spec(), spec_path)
    table_path = tmp_path / "t.zoo"
    assert main(["build-zoo", "--trace", str(spec_path), "--out", str(table_path)]) == 0
    capsys.readouterr()
    assert main(["transfer-matrix", str(table_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",m0,m1,m2"
    for line in lines[1:]:
        probs = [float(x) for x in line.split(",")[1:]]
        assert abs(sum(probs) - 1.0) < 1e-6


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["psnr", "--bogus"])
    assert exc.value.code == 2


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for sub in ("build-zoo", "schedule", "simulate", "psnr", "edges", "transfer-matrix"):
        assert sub in out


def test_subcommand_help_lists_flags(capsys):
    for sub, flag in (
        ("build-zoo", "--out"),
        ("schedule", "--table"),
        ("simulate", "--out-dir"),
        ("edges", "--edge-threshold"),
    ):
        with pytest.raises(SystemExit) as exc:
            main([sub, "--help"])
        assert exc.value.code == 0
        assert flag in capsys.readouterr().out

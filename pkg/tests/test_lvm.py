import math
from datetime import datetime

import pytest

from meshmon.lvm import DEFAULT_CHANNELS, LvmWriter, header_block, read_lvm

START = datetime(2012, 6, 1, 0, 0, 0)

EXPECTED_HEADER = (
    "LabVIEW Measurement\n"
    "Writer_Version\t2\n"
    "Reader_Version\t2\n"
    "Separator\tTab\n"
    "Multi_Headings\tNo\n"
    "X_Columns\tOne\n"
    "Time_Pref\tAbsolute\n"
    "Date\t2012/06/01\n"
    "Time\t00:00:00.000000\n"
    "***End_of_Header***\n"
)


def test_header_block_bytes():
    assert header_block(START) == EXPECTED_HEADER


def test_file_starts_with_header(tmp_path):
    path = tmp_path / "run.lvm"
    with LvmWriter(path, start_time=START) as w:
        w.append(0.0, [20.0] * 9)
    text = path.read_text()
    assert text.startswith(EXPECTED_HEADER)
    assert "***End_of_Header***" in text
    channel_row = text.splitlines()[10]
    assert channel_row == "X_Value\t" + "\t".join(DEFAULT_CHANNELS) + "\tComment"


def test_round_trip_bit_identical(tmp_path):
    path = tmp_path / "run.lvm"
    rows = [
        (0.0, [21.37, 47.3, 312.5, 20.0, 50.0, 5.0, 22.123456789, 33.7, 200.0]),
        (10.0, [21.4, 47.1, 310.0, 20.1, 49.9, 5.0, 22.2, 33.8, 202.5]),
    ]
    with LvmWriter(path, start_time=START) as w:
        for x, values in rows:
            w.append(x, values)
    doc = read_lvm(path)
    assert doc.channels == ("X_Value",) + DEFAULT_CHANNELS
    for parsed, (x, values) in zip(doc.rows, rows):
        assert parsed[0] == float(f"{x:.6f}")
        assert parsed[1:] == values  # exact equality, not approx


def test_x_column_progression(tmp_path):
    path = tmp_path / "run.lvm"
    with LvmWriter(path, start_time=START) as w:
        for k in range(100):
            w.append(10.0 * k, [float(k)] * 9)
    doc = read_lvm(path)
    assert doc.x_values == [10.0 * k for k in range(100)]


def test_nan_round_trip(tmp_path):
    path = tmp_path / "run.lvm"
    with LvmWriter(path, start_time=START) as w:
        w.append(0.0, [float("nan")] * 9)
    doc = read_lvm(path)
    assert all(math.isnan(v) for v in doc.rows[0][1:])


def test_comment_column(tmp_path):
    path = tmp_path / "run.lvm"
    with LvmWriter(path, start_time=START) as w:
        w.append(0.0, [1.0] * 9, comment="boot")
        w.append(10.0, [2.0] * 9)
    doc = read_lvm(path)
    assert doc.comments == ["boot", ""]


def test_value_count_checked(tmp_path):
    with LvmWriter(tmp_path / "run.lvm", start_time=START) as w:
        with pytest.raises(ValueError):
            w.append(0.0, [1.0, 2.0])


def test_rotation(tmp_path):
    path = tmp_path / "run.lvm"
    with LvmWriter(path, start_time=START, max_bytes=600) as w:
        for k in range(40):
            w.append(float(k), [float(k)] * 9)
    rotated = sorted(tmp_path.glob("run.*.lvm"))
    assert rotated, "expected at least one rotated segment"
    # every segment including the active one begins with a full header
    for segment in list(rotated) + [path]:
        doc = read_lvm(segment)
        assert doc.header["Writer_Version"] == "2"
    total = sum(len(read_lvm(p).rows) for p in list(rotated) + [path])
    assert total == 40


def test_column_accessor(tmp_path):
    path = tmp_path / "run.lvm"
    with LvmWriter(path, start_time=START) as w:
        w.append(0.0, [21.0, 47.0, 300.0, 20.0, 50.0, 5.0, 22.0, 33.0, 200.0])
    doc = read_lvm(path)
    assert doc.column("Room1_Temp") == [21.0]
    assert doc.column("Room3_Lux") == [200.0]

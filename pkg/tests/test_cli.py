import argparse
import json
import socket
import threading

import pytest

from meshmon.cli import gateway_summary, main, parse_duration, parse_endpoint
from meshmon.config import app_config_from_dict, default_config_dict, load_config
from meshmon.gateway import Gateway
from meshmon.loop import ClosedLoop
from meshmon.lvm import read_lvm


class TestParsers:
    @pytest.mark.parametrize("text,expected", [
        ("24h", 86400.0),
        ("90m", 5400.0),
        ("30s", 30.0),
        ("3600", 3600.0),
        ("1.5h", 5400.0),
    ])
    def test_duration(self, text, expected):
        assert parse_duration(text) == expected

    @pytest.mark.parametrize("text", ["0s", "-5m", "soon", ""])
    def test_bad_duration(self, text):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_duration(text)

    def test_endpoint(self):
        assert parse_endpoint("127.0.0.1:8000") == ("127.0.0.1", 8000)
        with pytest.raises(argparse.ArgumentTypeError):
            parse_endpoint("8000")

    def test_usage_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sim", "--duration", "0s"])
        assert exc.value.code == 2
        capsys.readouterr()


class TestConfig:
    def test_defaults_load(self):
        config = load_config(None)
        assert [n.id for n in config.sim.topology.nodes] == [101, 102, 103]
        assert config.gateway.rooms == {1: 101, 2: 102, 3: 103}

    def test_default_json_file_matches_builtin(self):
        from pathlib import Path
        path = Path(__file__).resolve().parents[1] / "configs" / "default.json"
        assert json.loads(path.read_text()) == default_config_dict()

    def test_missing_config_is_an_error(self):
        assert main(["sim", "--config", "/no/such/file.json",
                     "--duration", "10s"]) == 1

    def test_invalid_node_rejected(self, tmp_path):
        doc = default_config_dict()
        doc["network"]["nodes"][0]["sample_period_s"] = 5.0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert main(["sim", "--config", str(bad), "--duration", "10s"]) == 1


class TestSimCommand:
    def test_short_run_artifacts(self, tmp_path):
        lvm = tmp_path / "run.lvm"
        summary_path = tmp_path / "summary.json"
        stream = tmp_path / "stream.bin"
        code = main(["sim", "--duration", "120s", "--seed", "3",
                     "--lvm", str(lvm), "--summary", str(summary_path),
                     "--stream-out", str(stream)])
        assert code == 0
        summary = json.loads(summary_path.read_text())
        assert summary["coactivations"] == 0
        assert summary["frames"]["generated"] == summary["frames"]["delivered"]
        assert summary["lvm_rows"] == 12
        doc = read_lvm(lvm)
        assert doc.x_values == [10.0 * k for k in range(12)]
        assert stream.stat().st_size > 0

    def test_same_seed_byte_identical(self, tmp_path):
        paths = {}
        for tag in ("x", "y"):
            paths[tag] = (tmp_path / f"{tag}.bin", tmp_path / f"{tag}.json")
            assert main(["sim", "--duration", "600s", "--seed", "11",
                         "--stream-out", str(paths[tag][0]),
                         "--summary", str(paths[tag][1])]) == 0
        assert paths["x"][0].read_bytes() == paths["y"][0].read_bytes()
        assert paths["x"][1].read_text() == paths["y"][1].read_text()

    def test_different_seed_differs(self, tmp_path):
        streams = []
        for seed in ("1", "2"):
            out = tmp_path / f"s{seed}.bin"
            doc = default_config_dict()
            doc["network"]["link_loss"] = 0.2
            cfg = tmp_path / "cfg.json"
            cfg.write_text(json.dumps(doc))
            assert main(["sim", "--config", str(cfg), "--duration", "600s",
                         "--seed", seed, "--stream-out", str(out),
                         "--summary", str(tmp_path / f"s{seed}.json")]) == 0
            streams.append(out.read_bytes())
        assert streams[0] != streams[1]


def stable_room_fields(snapshot):
    return {
        room_id: (state.node_id,
                  state.reading,
                  state.last_seq,
                  state.parent,
                  state.packets_received,
                  state.packets_dropped)
        for room_id, state in snapshot.items()
    }


class TestReplay:
    def test_replay_matches_original_room_state(self, tmp_path):
        config = app_config_from_dict(default_config_dict())
        stream_path = tmp_path / "stream.bin"
        loop = ClosedLoop(config, seed=5, stream_path=stream_path)
        loop.run(600.0)
        loop.close()
        original = stable_room_fields(loop.gateway.snapshot())

        replayed = Gateway(config.gateway)
        replayed.ingest(stream_path.read_bytes())
        assert stable_room_fields(replayed.snapshot()) == original

        # and through the CLI
        summary_path = tmp_path / "replay.json"
        assert main(["replay", "--in", str(stream_path),
                     "--summary", str(summary_path)]) == 0
        summary = json.loads(summary_path.read_text())
        room1 = loop.gateway.snapshot()[1]
        assert summary["rooms"]["1"]["last_seq"] == room1.last_seq
        assert summary["rooms"]["1"]["reading"]["temperature_c"] == \
            room1.reading.temperature_c

    def test_empty_file(self, tmp_path):
        empty = tmp_path / "empty.bin"
        empty.write_bytes(b"")
        summary_path = tmp_path / "summary.json"
        assert main(["replay", "--in", str(empty),
                     "--summary", str(summary_path)]) == 0
        summary = json.loads(summary_path.read_text())
        assert summary["frames_rejected"] == 0
        assert all(r["reading"] is None for r in summary["rooms"].values())

    def test_corrupted_tail_counted(self, tmp_path):
        config = app_config_from_dict(default_config_dict())
        loop = ClosedLoop(config, seed=5, stream_path=tmp_path / "s.bin")
        loop.run(60.0)
        loop.close()
        data = (tmp_path / "s.bin").read_bytes()
        corrupted = bytearray(data)
        corrupted[-10] ^= 0xFF  # clobber inside the last frame
        (tmp_path / "bad.bin").write_bytes(bytes(corrupted))
        summary_path = tmp_path / "summary.json"
        assert main(["replay", "--in", str(tmp_path / "bad.bin"),
                     "--summary", str(summary_path)]) == 0
        summary = json.loads(summary_path.read_text())
        assert summary["frames_rejected"] >= 1

    def test_missing_file(self):
        assert main(["replay", "--in", "/no/such/stream.bin"]) == 1


class TestGatewayCommand:
    def test_file_source(self, tmp_path):
        config = app_config_from_dict(default_config_dict())
        loop = ClosedLoop(config, seed=9, stream_path=tmp_path / "s.bin")
        loop.run(120.0)
        loop.close()
        summary_path = tmp_path / "summary.json"
        assert main(["gateway", "--in", str(tmp_path / "s.bin"),
                     "--summary", str(summary_path)]) == 0
        summary = json.loads(summary_path.read_text())
        assert summary["rooms"]["1"]["packets_received"] > 0

    def test_tcp_source(self, tmp_path):
        config = app_config_from_dict(default_config_dict())
        loop = ClosedLoop(config, seed=9, stream_path=tmp_path / "s.bin")
        loop.run(120.0)
        loop.close()
        data = (tmp_path / "s.bin").read_bytes()

        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.bind(("127.0.0.1", 0))
        listener.listen(1)
        port = listener.getsockname()[1]

        def serve():
            conn, _ = listener.accept()
            conn.sendall(data)
            conn.close()

        thread = threading.Thread(target=serve)
        thread.start()
        summary_path = tmp_path / "summary.json"
        assert main(["gateway", "--tcp", f"127.0.0.1:{port}",
                     "--summary", str(summary_path)]) == 0
        thread.join()
        listener.close()
        summary = json.loads(summary_path.read_text())
        assert summary["rooms"]["1"]["packets_received"] > 0


def test_gateway_summary_shape():
    gw = Gateway()
    summary = gateway_summary(gw)
    assert set(summary["rooms"]) == {"1", "2", "3"}
    assert summary["frames_rejected"] == 0

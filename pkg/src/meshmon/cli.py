"""Command-line entry points.

    meshmon sim      closed-loop simulation (mesh + gateway + control)
    meshmon gateway  attach the gateway to a recorded stream, stdin or TCP
    meshmon engine   standalone shared-variable engine (UDP + HTTP bridge)
    meshmon replay   feed a recorded stream through the gateway at a pace
"""

from __future__ import annotations

import argparse
import socket
import sys
import threading
import time
from pathlib import Path

from .bridge import create_bridge_app
from .config import ConfigError, load_config
from .gateway import Gateway
from .loop import ClosedLoop, summary_json
from .lvm import DEFAULT_CHANNELS, LvmWriter
from .sharedvar import DEFAULT_PORT, SharedVarEngine, UdpSharedVarServer

# nominal serial byte rate used to pace replays (speed 1.0)
REPLAY_BYTES_PER_S = 1000.0
REPLAY_CHUNK = 256


def parse_duration(text: str) -> float:
    """Accepts plain seconds or h/m/s suffixed values: 24h, 90m, 30s."""
    text = text.strip().lower()
    multiplier = 1.0
    if text.endswith(("h", "m", "s")):
        multiplier = {"h": 3600.0, "m": 60.0, "s": 1.0}[text[-1]]
        text = text[:-1]
    try:
        seconds = float(text) * multiplier
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse duration {text!r}")
    if seconds <= 0:
        raise argparse.ArgumentTypeError("duration must be positive")
    return seconds


def parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meshmon")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="JSON run configuration (defaults are built in)")
        p.add_argument("--lvm", type=Path, default=None,
                       help="write measurement rows to this LVM file")
        p.add_argument("--summary", type=Path, default=None,
                       help="write the run summary JSON here (default: stdout)")

    p_sim = sub.add_parser("sim", help="run the closed-loop simulation")
    common(p_sim)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--duration", type=parse_duration, default=86400.0,
                       help="simulated time, e.g. 24h, 90m, 600s")
    p_sim.add_argument("--speed", type=float, default=0.0,
                       help="real-time multiplier; 0 = as fast as possible")
    p_sim.add_argument("--stream-out", type=str, default=None,
                       help="record the serial byte stream to this file, "
                            "or - to pipe it to stdout")
    p_sim.add_argument("--engine-port", type=int, default=None,
                       help="also serve the shared-variable engine over UDP")
    p_sim.add_argument("--bridge-port", type=int, default=None,
                       help="also serve the HTTP/WebSocket bridge")

    p_gw = sub.add_parser("gateway", help="attach the gateway to a byte stream")
    common(p_gw)
    group = p_gw.add_mutually_exclusive_group(required=True)
    group.add_argument("--in", dest="infile", type=str, default=None,
                       help="raw stream file, or - for stdin")
    group.add_argument("--tcp", type=parse_endpoint, default=None,
                       help="connect to HOST:PORT and ingest until EOF")

    p_engine = sub.add_parser("engine", help="standalone shared-variable engine")
    p_engine.add_argument("--engine-port", type=int, default=DEFAULT_PORT)
    p_engine.add_argument("--bridge-port", type=int, default=None)
    p_engine.add_argument("--static", type=Path, default=None,
                          help="serve this directory at / on the bridge")

    p_replay = sub.add_parser("replay", help="replay a recorded stream")
    common(p_replay)
    p_replay.add_argument("--in", dest="infile", type=str, required=True)
    p_replay.add_argument("--speed", type=float, default=0.0,
                          help="pacing multiplier; 0 = as fast as possible")
    return parser


def gateway_summary(gw: Gateway) -> dict:
    rooms = {}
    for room_id, state in gw.snapshot().items():
        reading = None
        if state.reading is not None:
            reading = {
                "temperature_c": state.reading.temperature_c,
                "humidity_pct": state.reading.humidity_pct,
                "light_lux": state.reading.light_lux,
                "battery_v": state.reading.battery_v,
                "pressure_mbar": state.reading.pressure_mbar,
            }
        rooms[str(room_id)] = {
            "node": state.node_id,
            "reading": reading,
            "last_seq": state.last_seq,
            "parent": state.parent,
            "movement": state.movement,
            "packets_received": state.packets_received,
            "packets_dropped": state.packets_dropped,
        }
    return {"rooms": rooms, "frames_rejected": gw.frames_rejected}


def _write_summary(summary: dict, path: Path | None) -> None:
    text = summary_json(summary)
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _start_bridge(engine: SharedVarEngine, port: int, static_dir=None):
    import uvicorn

    app = create_bridge_app(engine, static_dir=static_dir)
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                           log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True, name="bridge")
    thread.start()
    deadline = time.monotonic() + 5.0
    while not server.started and time.monotonic() < deadline:
        time.sleep(0.01)
    return server, thread


def cmd_sim(args) -> int:
    config = load_config(args.config)
    loop = ClosedLoop(config, seed=args.seed, lvm_path=args.lvm,
                      stream_path=args.stream_out)
    udp_server = None
    bridge = None
    try:
        if args.engine_port is not None:
            udp_server = UdpSharedVarServer(loop.engine, port=args.engine_port).start()
        if args.bridge_port is not None:
            bridge = _start_bridge(loop.engine, args.bridge_port)
        try:
            summary = loop.run(args.duration, speed=args.speed)
        except KeyboardInterrupt:
            summary = loop.summary(loop.sim.time)
        if args.stream_out == "-" and args.summary is None:
            pass  # stdout belongs to the piped byte stream
        else:
            _write_summary(summary, args.summary)
    except OSError as exc:
        print(f"meshmon: {exc}", file=sys.stderr)
        return 1
    finally:
        loop.close()
        if udp_server is not None:
            udp_server.stop()
        if bridge is not None:
            server, thread = bridge
            server.should_exit = True
            thread.join(timeout=5.0)
    return 0


def _ingest_stream(gw: Gateway, reader, speed: float = 0.0,
                   lvm_path: Path | None = None) -> None:
    writer = None
    if lvm_path is not None:
        writer = LvmWriter(lvm_path, channels=DEFAULT_CHANNELS)
    start = time.monotonic()
    log_start = None
    try:
        while True:
            chunk = reader(REPLAY_CHUNK)
            if not chunk:
                break
            events = gw.ingest(chunk)
            gw.detect_stale()
            if writer is not None and any(e.__class__.__name__ == "ReadingUpdated"
                                          for e in events):
                now = time.monotonic()
                if log_start is None:
                    log_start = now
                values = []
                for room_id, state in sorted(gw.snapshot().items()):
                    r = state.reading
                    values += ([r.temperature_c, r.humidity_pct, r.light_lux]
                               if r else [float("nan")] * 3)
                writer.append(now - log_start, values)
            if speed > 0:
                target = start + (REPLAY_CHUNK / (REPLAY_BYTES_PER_S * speed))
                delay = target - time.monotonic()
                start = target
                if delay > 0:
                    time.sleep(delay)
    finally:
        if writer is not None:
            writer.close()


def cmd_gateway(args) -> int:
    config = load_config(args.config)
    gw = Gateway(config.gateway)
    try:
        if args.tcp is not None:
            with socket.create_connection(args.tcp) as conn:
                _ingest_stream(gw, lambda n: conn.recv(n), lvm_path=args.lvm)
        elif args.infile == "-":
            # read1 returns whatever the pipe has, keeping live latency low
            _ingest_stream(gw, sys.stdin.buffer.read1, lvm_path=args.lvm)
        else:
            with open(args.infile, "rb") as fh:
                _ingest_stream(gw, fh.read, lvm_path=args.lvm)
    except OSError as exc:
        print(f"meshmon: {exc}", file=sys.stderr)
        return 1
    _write_summary(gateway_summary(gw), args.summary)
    return 0


def cmd_replay(args) -> int:
    config = load_config(args.config)
    gw = Gateway(config.gateway)
    try:
        with open(args.infile, "rb") as fh:
            _ingest_stream(gw, fh.read, speed=args.speed, lvm_path=args.lvm)
    except OSError as exc:
        print(f"meshmon: {exc}", file=sys.stderr)
        return 1
    _write_summary(gateway_summary(gw), args.summary)
    return 0


def cmd_engine(args) -> int:
    engine = SharedVarEngine()
    bridge = None
    try:
        server = UdpSharedVarServer(engine, port=args.engine_port).start()
    except OSError as exc:
        print(f"meshmon: cannot bind UDP port {args.engine_port}: {exc}",
              file=sys.stderr)
        return 1
    print(f"shared-variable engine on udp/{server.port}", flush=True)
    try:
        if args.bridge_port is not None:
            bridge = _start_bridge(engine, args.bridge_port, static_dir=args.static)
            print(f"bridge on http://127.0.0.1:{args.bridge_port}", flush=True)
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    except OSError as exc:
        print(f"meshmon: {exc}", file=sys.stderr)
        return 1
    finally:
        server.stop()
        if bridge is not None:
            srv, thread = bridge
            srv.should_exit = True
            thread.join(timeout=5.0)
    return 0


COMMANDS = {
    "sim": cmd_sim,
    "gateway": cmd_gateway,
    "engine": cmd_engine,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"meshmon: config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

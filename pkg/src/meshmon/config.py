"""JSON run configuration: network, environment, control and gateway.

See configs/default.json for a complete document; every key is optional
and falls back to the defaults below, which describe the three-room,
three-node deployment (nodes 101-103, base 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .control import ControlConfig
from .gateway import GatewayConfig
from .sim import (
    NodeSpec,
    OutdoorConfig,
    RoomEnvConfig,
    SimConfig,
    ThermalConfig,
    Topology,
)


class ConfigError(Exception):
    pass


@dataclass
class AppConfig:
    sim: SimConfig
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    seed: int = 7


def default_config_dict() -> dict:
    return {
        "seed": 7,
        "start_time": "2012-06-01T00:00:00",
        "network": {
            "base": {"position": [0.0, 0.0], "radio_range_m": 30.0},
            "nodes": [
                {"id": 101, "room": 1, "position": [5.0, 0.0]},
                {"id": 102, "room": 2, "position": [0.0, 5.0]},
                {"id": 103, "room": 3, "position": [-5.0, 0.0]},
            ],
            "link_loss": 0.0,
            "tx_time_s": 0.004,
            "lp_startup_delay_s": 30.0,
            "channel": 26,
        },
        "environment": {
            "outdoor": {"mean_c": 16.0, "amplitude_c": 4.0},
            "thermal": {"k_loss_per_h": 0.3, "heat_rate_c_per_h": 3.0,
                        "cool_rate_c_per_h": 3.0},
            "rooms": {
                "1": {"initial_temp_c": 21.0},
                "2": {"initial_temp_c": 21.5},
                "3": {"initial_temp_c": 20.5},
            },
        },
        "control": {"setpoint_c": 22.0, "deadband_c": 1.0,
                    "light_threshold_lux": 200.0},
        "gateway": {"rooms": {"1": 101, "2": 102, "3": 103},
                    "sample_period_s": 10.0},
    }


def _node_spec(entry: dict) -> NodeSpec:
    try:
        return NodeSpec(
            id=int(entry["id"]),
            room=int(entry["room"]),
            position=tuple(entry["position"]),
            power_mode=entry.get("power_mode", "HP"),
            sample_period_s=float(entry.get("sample_period_s", 10.0)),
            battery_mah=float(entry.get("battery_mah", 2000.0)),
            radio_range_m=float(entry.get("radio_range_m", 30.0)),
            duty_cycle=float(entry.get("duty_cycle", 0.01)),
        )
    except KeyError as exc:
        raise ConfigError(f"node entry missing required key {exc}") from exc


def _room_env(entry: dict) -> RoomEnvConfig:
    kwargs = dict(entry)
    if "occupancy" in kwargs:
        kwargs["occupancy"] = [tuple(map(float, window)) for window in kwargs["occupancy"]]
    return RoomEnvConfig(**kwargs)


def app_config_from_dict(doc: dict) -> AppConfig:
    base = dict(default_config_dict())
    network = {**base["network"], **doc.get("network", {})}
    environment = doc.get("environment", base["environment"])
    try:
        nodes = [_node_spec(entry) for entry in network["nodes"]]
        topology = Topology(
            nodes=nodes,
            base_position=tuple(network.get("base", {}).get("position", (0.0, 0.0))),
            base_range_m=float(network.get("base", {}).get("radio_range_m", 30.0)),
        )
        rooms = {int(room): _room_env(entry)
                 for room, entry in environment.get("rooms", {}).items()}
        if not rooms:
            rooms = {n.room: RoomEnvConfig() for n in nodes}
        sim = SimConfig(
            topology=topology,
            rooms=rooms,
            outdoor=OutdoorConfig(**environment.get("outdoor", {})),
            thermal=ThermalConfig(**environment.get("thermal", {})),
            link_loss=float(network.get("link_loss", 0.0)),
            tx_time_s=float(network.get("tx_time_s", 0.004)),
            lp_startup_delay_s=float(network.get("lp_startup_delay_s", 30.0)),
            channel=int(network.get("channel", 26)),
            start_time=datetime.fromisoformat(
                doc.get("start_time", base["start_time"])),
        )
        gateway_doc = doc.get("gateway", base["gateway"])
        gateway = GatewayConfig(
            rooms={int(room): int(node)
                   for room, node in gateway_doc.get("rooms", {}).items()},
            sample_period_s=float(gateway_doc.get("sample_period_s", 10.0)),
        )
        control = ControlConfig(**doc.get("control", base["control"]))
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return AppConfig(sim=sim, gateway=gateway, control=control,
                     seed=int(doc.get("seed", base["seed"])))


def load_config(path: str | Path | None = None) -> AppConfig:
    if path is None:
        return app_config_from_dict(default_config_dict())
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return app_config_from_dict(doc)

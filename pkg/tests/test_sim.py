import random

import networkx as nx
import pytest

from meshmon import wire
from meshmon.control import ControlOutputs
from meshmon.sim import (
    HP,
    LP,
    IRIS_CURRENTS_MA,
    NodeSpec,
    OutdoorConfig,
    PartitionedNetwork,
    RoomEnvConfig,
    SimConfig,
    Simulation,
    ThermalConfig,
    Topology,
    build_routes,
    env_step,
    estimate_lifetime,
)


def node(nid, room, pos, **kw):
    return NodeSpec(id=nid, room=room, position=pos, **kw)


def star_topology(range_m=30.0):
    return Topology(nodes=[
        node(101, 1, (5.0, 0.0), radio_range_m=range_m),
        node(102, 2, (0.0, 5.0), radio_range_m=range_m),
        node(103, 3, (-5.0, 0.0), radio_range_m=range_m),
    ], base_range_m=range_m)


def chain_topology():
    # base -- 102 -- 103; 103 cannot hear the base directly
    return Topology(nodes=[
        node(102, 2, (20.0, 0.0), radio_range_m=25.0),
        node(103, 3, (40.0, 0.0), radio_range_m=25.0),
    ], base_range_m=25.0)


def sim_config(topology, rooms=None, **kw):
    if rooms is None:
        rooms = {n.room: RoomEnvConfig() for n in topology.nodes}
    return SimConfig(topology=topology, rooms=rooms, **kw)


class TestRouting:
    def test_star_all_parents_base(self):
        assert build_routes(star_topology()) == {101: 0, 102: 0, 103: 0}

    def test_chain_parents(self):
        assert build_routes(chain_topology()) == {102: 0, 103: 102}

    def test_matches_shortest_path_oracle(self):
        rng = random.Random(11)
        for _ in range(20):
            nodes = [node(100 + i, 1, (rng.uniform(0, 60), rng.uniform(0, 60)),
                          radio_range_m=28.0) for i in range(1, 8)]
            topo = Topology(nodes=nodes, base_range_m=28.0)
            graph = nx.Graph()
            graph.add_nodes_from(adj := topo.adjacency())
            for a, neighbors in adj.items():
                graph.add_edges_from((a, b) for b in neighbors)
            try:
                parents = build_routes(topo)
            except PartitionedNetwork as exc:
                for nid in exc.unreachable:
                    assert not nx.has_path(graph, 0, nid)
                continue
            lengths = nx.single_source_shortest_path_length(graph, 0)
            for n in nodes:
                assert lengths[parents[n.id]] == lengths[n.id] - 1
                # lowest-address tie break among equally-close neighbors
                candidates = [m for m in adj[n.id] if lengths[m] == lengths[n.id] - 1]
                assert parents[n.id] == min(candidates)

    def test_partitioned_network(self):
        topo = Topology(nodes=[
            node(101, 1, (5.0, 0.0)),
            node(103, 3, (500.0, 0.0)),
        ])
        with pytest.raises(PartitionedNetwork) as exc:
            build_routes(topo)
        assert exc.value.unreachable == [103]


class TestEnvStep:
    THERMAL = ThermalConfig()

    def test_equilibrium(self):
        t = 20.0
        for _ in range(3600):
            t = env_step(t, 20.0, False, False, 1.0, self.THERMAL)
        assert t == pytest.approx(20.0)

    def test_one_hour_heating_matches_euler_oracle(self):
        # independent explicit-Euler loop written out longhand
        expected = 20.0
        for _ in range(3600):
            expected = expected + 1.0 * (0.3 * (20.0 - expected) + 3.0) / 3600.0
        got = 20.0
        for _ in range(3600):
            got = env_step(got, 20.0, True, False, 1.0, self.THERMAL)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got < 23.0  # decay keeps it under the lossless +3 degC

    def test_cooling_toward_outdoor(self):
        t = 20.0
        for _ in range(3600):
            t = env_step(t, 10.0, False, False, 1.0, self.THERMAL)
        assert 10.0 < t < 20.0

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            env_step(20.0, 20.0, False, False, 0.0, self.THERMAL)


class TestLifetime:
    def test_hp_reference_value(self):
        hours = estimate_lifetime(HP, 2000.0)
        assert hours == pytest.approx(2000.0 / 24.0, abs=1e-9)
        assert 1.0 < hours / 24.0 < 14.0  # days-to-weeks band

    def test_lp_one_percent(self):
        hours = estimate_lifetime(LP, 2000.0, duty_cycle=0.01)
        assert hours == pytest.approx(2000.0 / 0.249, rel=1e-9)
        assert 90.0 < hours / 24.0 < 730.0  # months-to-years band

    def test_full_duty_lp_approaches_hp(self):
        lp = estimate_lifetime(LP, 2000.0, duty_cycle=1.0)
        hp = estimate_lifetime(HP, 2000.0)
        assert lp == pytest.approx(hp, rel=1e-3)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            estimate_lifetime(HP, 0.0)
        with pytest.raises(ValueError):
            estimate_lifetime(LP, 2000.0, duty_cycle=0.0)
        with pytest.raises(ValueError):
            estimate_lifetime("asleep", 2000.0)


def decode_stream(stream: bytes):
    frames, diags = wire.Deframer().feed(stream)
    assert not diags
    return frames


class TestSimulation:
    def test_lossless_star_counting(self):
        simulation = Simulation(sim_config(star_topology()), seed=1)
        stream = simulation.run(60.0)
        frames = decode_stream(stream)
        assert len(frames) == 18
        per_origin = {}
        for f in frames:
            per_origin.setdefault(f.mesh.origin_addr, []).append(f)
        assert set(per_origin) == {101, 102, 103}
        assert all(len(v) == 6 for v in per_origin.values())

    def test_chain_source_rewritten(self):
        simulation = Simulation(sim_config(chain_topology()), seed=2)
        frames = decode_stream(simulation.run(120.0))
        from_103 = [f for f in frames if f.mesh.origin_addr == 103]
        assert from_103
        assert all(f.mesh.source_addr == 102 for f in from_103)
        assert all(f.tos.dest_addr == 0 for f in from_103)
        from_102 = [f for f in frames if f.mesh.origin_addr == 102]
        assert all(f.mesh.source_addr == 102 for f in from_102)

    def test_total_loss_delivers_nothing(self):
        simulation = Simulation(sim_config(star_topology(), link_loss=1.0), seed=3)
        assert simulation.run(60.0) == b""
        assert simulation.frames_generated == 18
        assert simulation.frames_delivered == 0

    def test_conservation(self):
        simulation = Simulation(sim_config(chain_topology(), link_loss=0.3), seed=4)
        stream = simulation.run(600.0)
        frames = decode_stream(stream)
        assert len(frames) == simulation.frames_delivered
        assert simulation.frames_delivered <= simulation.frames_generated

    def test_determinism(self):
        a = Simulation(sim_config(star_topology(), link_loss=0.2), seed=7).run(300.0)
        b = Simulation(sim_config(star_topology(), link_loss=0.2), seed=7).run(300.0)
        assert a == b
        c = Simulation(sim_config(star_topology(), link_loss=0.2), seed=8).run(300.0)
        assert a != c

    def test_sequence_strictly_increasing_per_origin(self):
        simulation = Simulation(sim_config(star_topology(), link_loss=0.3), seed=5)
        frames = decode_stream(simulation.run(2000.0))
        seqs: dict[int, list[int]] = {}
        for f in frames:
            seqs.setdefault(f.mesh.origin_addr, []).append(f.mesh.seq)
        for origin, values in seqs.items():
            assert all(b > a for a, b in zip(values, values[1:])), origin

    def test_health_cadence(self):
        simulation = Simulation(sim_config(star_topology()), seed=6)
        frames = decode_stream(simulation.run(1100.0))
        data = [f for f in frames if not f.is_health and f.mesh.origin_addr == 101]
        health = [f for f in frames if f.is_health and f.mesh.origin_addr == 101]
        assert len(data) == 110
        assert len(health) == 11
        report = health[0].body
        assert report.node_id == 101
        assert report.parent == 0
        assert report.packets_sent == 10

    def test_lp_startup_delay(self):
        topo = Topology(nodes=[node(101, 1, (5.0, 0.0), power_mode=LP)])
        simulation = Simulation(sim_config(topo, lp_startup_delay_s=30.0), seed=1)
        assert simulation.step(30.0) == b""
        chunk = simulation.step(1.0)  # covers t = 30
        assert decode_stream(chunk)[0].mesh.origin_addr == 101

    def test_energy_ledger_monotone_and_positive(self):
        simulation = Simulation(sim_config(star_topology()), seed=1)
        totals = []
        for _ in range(5):
            simulation.step(60.0)
            totals.append(simulation.ledger.total_mah(101))
        assert all(b > a for a, b in zip(totals, totals[1:]))
        states = simulation.ledger.charge_mah[101]
        assert all(v >= 0 for v in states.values())

    def test_hp_energy_rate_matches_currents(self):
        simulation = Simulation(sim_config(star_topology()), seed=1)
        simulation.run(3600.0)
        states = simulation.ledger.charge_mah[101]
        assert states["mcu_full"] == pytest.approx(IRIS_CURRENTS_MA["mcu_full"], rel=1e-6)
        assert states["radio_rx"] == pytest.approx(IRIS_CURRENTS_MA["radio_rx"], rel=1e-6)
        # 360 data + 36 health transmissions at 4 ms each
        assert states["radio_tx"] == pytest.approx(17.0 * 396 * 0.004 / 3600.0, rel=1e-6)

    def test_actuated_light_visible_in_payload(self):
        config = sim_config(star_topology())
        simulation = Simulation(config, seed=1)
        simulation.apply_actuation(1, ControlOutputs(light_on=True))
        frames = decode_stream(simulation.step(1.0))
        by_origin = {f.mesh.origin_addr: f for f in frames}
        lux_on = by_origin[101].body.payload.light_raw
        lux_off = by_origin[102].body.payload.light_raw
        assert lux_on > lux_off

    def test_truth_lux_clamped_to_representable(self):
        rooms = {1: RoomEnvConfig(daylight_peak_lux=4000.0)}
        topo = Topology(nodes=[node(101, 1, (5.0, 0.0))])
        simulation = Simulation(sim_config(topo, rooms=rooms), seed=1)
        simulation.time = 43200.0  # noon
        assert simulation.room_light(1) == pytest.approx(1023 * 2.5)
        simulation._next_sample[101] = simulation.time
        assert decode_stream(simulation.step(1.0))  # inversion must not raise

    def test_step_rejects_fractional_dt(self):
        simulation = Simulation(sim_config(star_topology()), seed=1)
        with pytest.raises(ValueError):
            simulation.step(0.5)


class TestValidation:
    def test_node_spec(self):
        with pytest.raises(ValueError):
            node(0, 1, (0.0, 0.0))
        with pytest.raises(ValueError):
            node(101, 1, (0.0, 0.0), sample_period_s=5.0)
        with pytest.raises(ValueError):
            node(101, 1, (0.0, 0.0), power_mode="MP")
        with pytest.raises(ValueError):
            node(101, 1, (0.0, 0.0), duty_cycle=0.0)

    def test_duplicate_ids(self):
        with pytest.raises(ValueError):
            Topology(nodes=[node(101, 1, (0.0, 0.0)), node(101, 2, (1.0, 0.0))])

    def test_room_reference(self):
        with pytest.raises(ValueError):
            SimConfig(topology=star_topology(), rooms={1: RoomEnvConfig()})

    def test_env_bounds(self):
        with pytest.raises(ValueError):
            RoomEnvConfig(initial_temp_c=60.0)


class TestEnvironmentProfiles:
    def test_outdoor_coldest_at_midnight(self):
        outdoor = OutdoorConfig(mean_c=16.0, amplitude_c=4.0)
        assert outdoor.temperature(0.0) == pytest.approx(12.0)
        assert outdoor.temperature(43200.0) == pytest.approx(20.0)

    def test_daylight_profile(self):
        cfg = RoomEnvConfig()
        assert cfg.daylight(0.0) == cfg.night_lux
        noon = (cfg.sunrise_s + cfg.sunset_s) / 2
        assert cfg.daylight(noon) == pytest.approx(cfg.daylight_peak_lux)
        assert cfg.daylight(noon + 86400.0) == pytest.approx(cfg.daylight_peak_lux)

    def test_occupancy_windows(self):
        cfg = RoomEnvConfig(occupancy=[(64800.0, 82800.0)])
        assert not cfg.occupied(0.0)
        assert cfg.occupied(70000.0)
        assert cfg.occupied(70000.0 + 86400.0)
        assert not cfg.occupied(82800.0)

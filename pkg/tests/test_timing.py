import json
import math

import pytest

from spikesoc.config import network_from_topology
from spikesoc.events import core_port
from spikesoc.timing import (
    TimingModel,
    account_throughput,
    estimate_latency,
    load_timing_profile,
    longest_path,
)


def chain_path(n_layers):
    return ["preproc"] + [core_port(i) for i in range(n_layers)] + ["readout"]


class TestLatency:
    def test_one_layer_calibration_point(self):
        ns = estimate_latency(None, TimingModel(), chain_path(1))
        assert ns == pytest.approx(1580.0, rel=0.005)

    def test_nine_layer_calibration_point(self):
        ns = estimate_latency(None, TimingModel(), chain_path(9))
        assert ns == pytest.approx(3360.0, rel=0.005)

    def test_degenerate_path_overhead_only(self):
        ns = estimate_latency(None, TimingModel(), ["preproc", "readout"])
        assert ns == pytest.approx(1357.5)

    def test_affine_in_layer_count(self):
        tm = TimingModel()
        deltas = [estimate_latency(None, tm, chain_path(n + 1))
                  - estimate_latency(None, tm, chain_path(n))
                  for n in range(1, 8)]
        assert all(d == pytest.approx(222.5) for d in deltas)

    def test_pooling_adds_nothing(self):
        with_pool = network_from_topology("16x16x1-4C3-P2-4C3-F4")
        without = network_from_topology("16x16x1-4C3-4C3-F4")
        tm = TimingModel()
        assert (estimate_latency(with_pool, tm, longest_path(with_pool))
                == estimate_latency(without, tm, longest_path(without)))

    def test_path_must_follow_routes(self):
        net = network_from_topology("16x16x1-4C3-F4")
        with pytest.raises(ValueError, match="not a configured route"):
            estimate_latency(net, TimingModel(), ["preproc", "core1"])

    def test_longest_path_reaches_readout(self):
        net = network_from_topology("34x34x2-16C5-16C3-P2-8C3-F10")
        assert longest_path(net) == chain_path(4)


class TestThroughput:
    def test_service_rate_is_about_30m_per_second(self):
        tm = TimingModel()
        assert 1e9 / tm.neuron_unit_service_ns == pytest.approx(30e6, rel=0.01)

    def test_full_load_utilization_one(self):
        report = account_throughput({"core0": 30_000_000}, 1_000_000, TimingModel())
        load = report.loads[0]
        assert load.utilization == pytest.approx(1.0, abs=0.01)
        assert not load.saturated

    def test_overload_flags_saturation(self):
        report = account_throughput({"core0": 31_500_000}, 1_000_000, TimingModel())
        load = report.loads[0]
        assert load.utilization > 1.0
        assert load.saturated
        assert math.isinf(load.queue_wait_ns)

    def test_half_load(self):
        report = account_throughput({"core0": 15_000_000}, 1_000_000, TimingModel())
        assert report.loads[0].utilization == pytest.approx(0.5, abs=0.01)
        assert not report.loads[0].saturated

    def test_zero_updates(self):
        report = account_throughput({"core0": 0}, 1_000_000, TimingModel())
        assert report.loads[0].utilization == 0.0
        assert report.loads[0].queue_wait_ns == 0.0

    def test_parallel_units_share_load(self):
        tm = TimingModel(units_per_core=2)
        report = account_throughput({"core0": 30_000_000}, 1_000_000, tm)
        assert report.loads[0].utilization == pytest.approx(0.5, abs=0.01)

    def test_queue_wait_grows_with_load(self):
        tm = TimingModel()
        waits = [account_throughput({"c": n}, 1_000_000, tm).loads[0].queue_wait_ns
                 for n in (5_000_000, 15_000_000, 25_000_000)]
        assert waits[0] < waits[1] < waits[2]


class TestProfileDocument:
    def test_load_overrides(self):
        tm = load_timing_profile(json.dumps(
            {"fixed_pipeline_overhead_ns": 1000.0, "per_layer_latency_ns": 100.0}))
        assert estimate_latency(None, tm, chain_path(2)) == pytest.approx(1200.0)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown field"):
            load_timing_profile(json.dumps({"per_layer_ns": 1.0}))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            TimingModel(per_layer_latency_ns=-1.0)


class TestLatencyDistribution:
    def test_fanout_paths_enumerated(self):
        from spikesoc.config import Destination, LayerConfig, NetworkConfig, PreprocConfig, ReadoutConfig
        from spikesoc.timing import all_paths, latency_distribution

        short = LayerConfig(core_id=0, in_channels=1, out_features=1,
                            in_width=8, in_height=8, threshold=1,
                            destinations=(Destination("readout", 0),))
        long_a = LayerConfig(core_id=1, in_channels=1, out_features=1,
                             in_width=8, in_height=8, threshold=1,
                             destinations=(Destination("core2", 0),))
        long_b = LayerConfig(core_id=2, in_channels=1, out_features=1,
                             in_width=8, in_height=8, threshold=1, pool_x=1,
                             destinations=(Destination("readout", 1),))
        pre = PreprocConfig(sensor_width=8, sensor_height=8, roi=(0, 0, 8, 8),
                            polarity_mode="merged",
                            destinations=(Destination("core0", 0),
                                          Destination("core1", 0)))
        net = NetworkConfig(preproc=pre, layers=(short, long_a, long_b),
                            readout=ReadoutConfig(n_classes=2),
                            sensor_width=8, sensor_height=8)
        paths = all_paths(net)
        assert len(paths) == 2
        dist = latency_distribution(net, TimingModel())
        values = sorted(dist.values())
        assert values[0] == pytest.approx(1580.0)
        assert values[1] == pytest.approx(1802.5)

    def test_queueing_surcharge_with_trace(self):
        from spikesoc.config import network_from_topology
        from spikesoc.engine import run
        from spikesoc.events import PixelEvent
        from spikesoc.timing import latency_distribution

        net = network_from_topology("16x16x1-4C3-F4", threshold=10)
        events = [PixelEvent(t, t % 16, t % 16, 1) for t in range(200)]
        res = run(net, events)
        tm = TimingModel()
        pure = latency_distribution(net, tm)
        loaded = latency_distribution(net, tm, res.trace)
        for key in pure:
            assert loaded[key] >= pure[key]

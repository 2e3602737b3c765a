import pytest

from spikesoc.config import (
    Destination,
    LayerConfig,
    NetworkConfig,
    PreprocConfig,
    ReadoutConfig,
    network_from_topology,
)
from spikesoc.validate import validate_network


def make_layer(core=0, c=1, f=1, in_w=8, in_h=8, k=1, dests=(), **kw):
    params = dict(core_id=core, in_channels=c, out_features=f,
                  in_width=in_w, in_height=in_h, kernel_w=k, kernel_h=k,
                  threshold=1, destinations=tuple(dests))
    params.update(kw)
    return LayerConfig(**params)


def make_net(layers, pre_dests=(Destination("core0", 0),), classes=1,
             sensor=8, polarity="merged", pre_pool=1):
    pooled = (sensor - 1) // pre_pool + 1
    pre = PreprocConfig(sensor_width=sensor, sensor_height=sensor,
                        pool_x=pre_pool, pool_y=pre_pool,
                        roi=(0, 0, pooled, pooled), polarity_mode=polarity,
                        destinations=tuple(pre_dests))
    return NetworkConfig(preproc=pre, layers=tuple(layers),
                         readout=ReadoutConfig(n_classes=classes),
                         sensor_width=sensor, sensor_height=sensor)


def names(report):
    return [v.constraint for v in report.violations]


class TestSingleViolations:
    def test_clean_config_is_empty(self):
        net = make_net([make_layer(dests=[Destination("readout", 0)])])
        assert validate_network(net).ok

    def test_kernel_17_yields_exactly_max_kernel_size(self):
        net = make_net([make_layer(in_w=32, in_h=32, k=17,
                                   dests=[Destination("readout", 0)])],
                       sensor=32)
        report = validate_network(net)
        assert names(report) == ["max kernel size"]
        v = report.violations[0]
        assert v.required == 17 and v.limit == 16

    def test_features_1025_yields_exactly_one(self):
        net = make_net([make_layer(f=1025, in_w=8, in_h=8)])
        report = validate_network(net)
        assert names(report) == ["features per layer"]

    def test_fc_cap_violation_named_once(self):
        # 7000 inputs x 10 outputs = 70000 synapses on a 65536-cap core
        fc = make_layer(core=0, c=70, f=10, in_w=10, in_h=10, fc_mode=True)
        net = make_net([fc], pre_dests=[Destination("core0", 0)], sensor=10)
        report = validate_network(net)
        assert names(report) == ["fc synapse cap"]
        v = report.violations[0]
        assert v.required == 70000 and v.limit == 65536

    def test_fanout_3_yields_exactly_fan_out(self):
        dests = [Destination("core1", 0), Destination("core2", 0),
                 Destination("core3", 0)]
        layers = [make_layer(core=0, dests=dests)]
        layers += [make_layer(core=i) for i in (1, 2, 3)]
        net = make_net(layers)
        report = validate_network(net)
        assert names(report) == ["fan-out"]

    def test_cycle_yields_exactly_cycle(self):
        l1 = make_layer(core=1, c=2, dests=[Destination("core2", 0)])
        l2 = make_layer(core=2, dests=[Destination("core1", 1)])
        net = make_net([l1, l2], pre_dests=[Destination("core1", 0)])
        report = validate_network(net)
        assert names(report) == ["cycle"]
        assert "core1" in str(report.violations[0].required)

    def test_kernel_memory_violation(self):
        # 1024 features x 16x16 kernel x 2 channels = 524288 words > 65536
        lay = make_layer(c=2, f=1024, in_w=16, in_h=16, k=16)
        net = make_net([lay])
        report = validate_network(net)
        assert "kernel memory" in names(report)

    def test_neuron_memory_violation(self):
        # 1024 features over 8x8 output = 65536 words > 36400
        lay = make_layer(f=1024, in_w=8, in_h=8, k=1)
        net = make_net([lay])
        report = validate_network(net)
        assert "neuron memory" in names(report)

    def test_unknown_destination(self):
        lay = make_layer(dests=[Destination("core7", 0)])
        net = make_net([lay])
        report = validate_network(net)
        assert "unknown destination" in names(report)

    def test_duplicate_destination(self):
        l0 = make_layer(core=0, dests=[Destination("core1", 0), Destination("core1", 1)])
        l1 = make_layer(core=1, c=2)
        net = make_net([l0, l1])
        report = validate_network(net)
        assert "duplicate destination" in names(report)

    def test_dimension_underflow_reported(self):
        lay = make_layer(in_w=8, in_h=8, k=12)
        net = make_net([lay])
        report = validate_network(net)
        assert "dimension underflow" in names(report)

    def test_input_dims_mismatch(self):
        l0 = make_layer(core=0, in_w=8, in_h=8, dests=[Destination("core1", 0)])
        l1 = make_layer(core=1, in_w=4, in_h=4)
        net = make_net([l0, l1])
        report = validate_network(net)
        assert "input dims mismatch" in names(report)


class TestChannelMapping:
    def two_source_net(self, shift_b):
        # preproc feeds core0 and core1; both feed core2
        l0 = make_layer(core=0, f=4, dests=[Destination("core2", 0)])
        l1 = make_layer(core=1, f=4, dests=[Destination("core2", shift_b)])
        l2 = make_layer(core=2, c=8)
        return make_net([l0, l1, l2],
                        pre_dests=[Destination("core0", 0), Destination("core1", 0)])

    def test_disjoint_shifts_pass(self):
        # shift equal to source A's feature count keeps the ranges disjoint
        report = validate_network(self.two_source_net(shift_b=4))
        assert report.ok

    def test_overlapping_shifts_collide(self):
        report = validate_network(self.two_source_net(shift_b=3))
        assert "channel collision" in names(report)

    def test_range_overflow_flagged(self):
        report = validate_network(self.two_source_net(shift_b=5))
        assert "channel range" in names(report)

    def test_injectivity_oracle_after_validation(self):
        # Enumerate every (source, channel) pair and check the shifted
        # channels are all distinct at the shared destination.
        net = self.two_source_net(shift_b=4)
        assert validate_network(net).ok
        seen = set()
        for layer in net.layers:
            for d in layer.destinations:
                if d.target != "core2":
                    continue
                for ch in range(layer.out_features):
                    shifted = ch + d.channel_shift
                    assert shifted not in seen
                    seen.add(shifted)


class TestInflationProperty:
    """Starting from an in-bounds config, pushing one quantity past its
    bound produces exactly one violation naming that constraint."""

    def base_net(self):
        # No destinations: inflating a quantity must trip only its own bound.
        lay = make_layer(c=2, f=8, in_w=8, in_h=8, k=3)
        return make_net([lay], classes=8)

    @pytest.mark.parametrize("mutate,expected", [
        (lambda l: setattr(l, "kernel_w", 17), "max kernel size"),
        (lambda l: setattr(l, "out_features", 1025), "features per layer"),
        (lambda l: setattr(l, "in_channels", 1025), "input channels"),
    ])
    def test_each_bound(self, mutate, expected):
        net = self.base_net()
        assert validate_network(net).ok
        mutate(net.layers[0])
        report = validate_network(net)
        assert names(report) == [expected]


def test_nmnist_topology_validates_cleanly():
    net = network_from_topology("34x34x2-16C5-16C3-P2-8C3-F10")
    report = validate_network(net)
    assert report.ok, str(report)


def test_preproc_without_destinations_rejected():
    net = make_net([make_layer()], pre_dests=())
    report = validate_network(net)
    assert "no destinations" in names(report)

import json

import pytest
from hypothesis import given, strategies as st

from spikesoc.config import (
    ConfigError,
    DimensionError,
    LayerConfig,
    compute_output_dims,
    default_profile,
    network_from_topology,
    parse_network_description,
    serialize_network,
)

MINIMAL_DOC = json.dumps({
    "preproc": {"roi": [0, 0, 8, 8], "polarity": "merged",
                "destinations": [{"target": 0}]},
    "layers": [{"core": 0, "in_channels": 1, "out_features": 1,
                "in_size": [8, 8], "kernel": [1, 1], "threshold": 1,
                "destinations": [{"target": "readout"}]}],
    "readout": {"classes": 1},
    "sensor": [8, 8],
})


def layer(in_w=8, in_h=8, k=1, s=1, p=0, **kw):
    defaults = dict(core_id=0, in_channels=1, out_features=1,
                    in_width=in_w, in_height=in_h, kernel_w=k, kernel_h=k,
                    stride_x=s, stride_y=s, pad_x=p, pad_y=p, threshold=1)
    defaults.update(kw)
    return LayerConfig(**defaults)


class TestParse:
    def test_minimal_document_defaults(self):
        net = parse_network_description(MINIMAL_DOC)
        assert len(net.layers) == 1
        lay = net.layers[0]
        assert (lay.stride_x, lay.stride_y) == (1, 1)
        assert (lay.pad_x, lay.pad_y) == (0, 0)
        assert (lay.pool_x, lay.pool_y) == (1, 1)
        assert lay.reset_mode == "subtract"
        assert lay.lower_bound == -32768
        assert lay.threshold == 1

    def test_nmnist_topology_expands_to_four_layers(self):
        net = parse_network_description(json.dumps(
            {"topology": "34x34x2-16C5-16C3-P2-8C3-F10"}))
        assert len(net.layers) == 4
        l0, l1, l2, l3 = net.layers
        assert (l0.out_features, l0.kernel_w, l0.kernel_h) == (16, 5, 5)
        assert (l0.in_width, l0.in_height, l0.in_channels) == (34, 34, 2)
        assert (l1.out_features, l1.kernel_w, l1.pool_x) == (16, 3, 2)
        assert (l2.out_features, l2.kernel_w) == (8, 3)
        assert compute_output_dims(l0) == (30, 30)
        assert compute_output_dims(l1) == (28, 28)
        assert (l2.in_width, l2.in_height) == (14, 14)
        assert l3.fc_mode and l3.out_features == 10
        assert l3.fc_inputs == 8 * 12 * 12
        assert net.readout.n_classes == 10
        assert net.preproc.polarity_mode == "both_channels"

    def test_kernel_zero_rejected_naming_bound(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0]["kernel"] = [0, 1]
        with pytest.raises(ConfigError, match=r"kernel_w=0 out of range 1\.\.16"):
            parse_network_description(json.dumps(doc))

    def test_kernel_17_parses(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0]["kernel"] = [17, 17]
        doc["layers"][0]["in_size"] = [32, 32]
        doc["preproc"]["roi"] = [0, 0, 32, 32]
        doc["sensor"] = [32, 32]
        net = parse_network_description(json.dumps(doc))
        assert net.layers[0].kernel_w == 17

    def test_syntax_error_reports_position(self):
        with pytest.raises(ConfigError, match=r"syntax error at line 1"):
            parse_network_description("{not json")

    def test_unknown_field_rejected(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0]["kernel_size"] = [3, 3]
        with pytest.raises(ConfigError, match="unknown field 'kernel_size'"):
            parse_network_description(json.dumps(doc))

    def test_out_of_range_scalar_names_field_and_bound(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0]["threshold"] = 0
        with pytest.raises(ConfigError, match=r"threshold=0 out of range 1\.\.32767"):
            parse_network_description(json.dumps(doc))

    def test_strict_strides_reject_non_power_of_two(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0]["stride"] = [3, 1]
        with pytest.raises(ConfigError, match="stride=3 not in allowed set"):
            parse_network_description(json.dumps(doc))
        doc["strict_strides"] = False
        net = parse_network_description(json.dumps(doc))
        assert net.layers[0].stride_x == 3

    def test_duplicate_core_rejected(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"].append(dict(doc["layers"][0]))
        with pytest.raises(ConfigError, match="core 0 configured twice"):
            parse_network_description(json.dumps(doc))

    def test_roi_outside_pooled_space_rejected(self):
        doc = json.loads(MINIMAL_DOC)
        doc["preproc"]["pool"] = [2, 2]
        with pytest.raises(ConfigError, match="exceeds the pooled sensor space"):
            parse_network_description(json.dumps(doc))

    def test_explicit_weights_and_bias(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0]["weights"] = [[[[5]]]]
        doc["layers"][0]["bias"] = [-3]
        net = parse_network_description(json.dumps(doc))
        assert net.layers[0].weights[0, 0, 0, 0] == 5
        assert net.layers[0].bias[0] == -3

    def test_weight_out_of_range_rejected(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0]["weights"] = [[[[300]]]]
        with pytest.raises(ConfigError, match=r"weight out of range -128\.\.127"):
            parse_network_description(json.dumps(doc))


class TestOutputDims:
    def test_nmnist_first_layer(self):
        assert compute_output_dims(layer(in_w=34, in_h=34, k=5)) == (30, 30)

    def test_identity(self):
        assert compute_output_dims(layer(in_w=128, in_h=128, k=1)) == (128, 128)

    def test_stride_floor(self):
        assert compute_output_dims(layer(in_w=4, in_h=4, k=3, s=2, p=1)) == (2, 2)

    def test_underflow_raises(self):
        with pytest.raises(DimensionError):
            compute_output_dims(layer(in_w=4, in_h=4, k=5))

    @given(st.integers(1, 32), st.integers(1, 8), st.integers(0, 3))
    def test_monotonicity(self, in_w, k, p):
        if in_w + 2 * p < k:
            return
        base = layer(in_w=in_w, in_h=in_w, k=k, p=p)
        out_w, _ = compute_output_dims(base)
        if in_w + 2 * p >= k + 1 and k + 1 <= 16:
            bigger_k, _ = compute_output_dims(layer(in_w=in_w, in_h=in_w, k=k + 1, p=p))
            assert bigger_k <= out_w
        wider_stride, _ = compute_output_dims(layer(in_w=in_w, in_h=in_w, k=k, s=2, p=p))
        assert wider_stride <= out_w
        more_pad, _ = compute_output_dims(layer(in_w=in_w, in_h=in_w, k=k, p=p + 1))
        assert more_pad >= out_w


class TestSerialization:
    def test_round_trip_minimal(self):
        net = parse_network_description(MINIMAL_DOC)
        text = serialize_network(net)
        assert parse_network_description(text) == net
        assert serialize_network(parse_network_description(text)) == text

    def test_round_trip_topology(self):
        net = network_from_topology("34x34x2-16C5-16C3-P2-8C3-F10")
        text = serialize_network(net)
        assert parse_network_description(text) == net

    def test_round_trip_with_weights_and_kills(self):
        doc = json.loads(MINIMAL_DOC)
        doc["layers"][0].update({
            "weights": [[[[5]]]],
            "bias": [-3],
            "kernel_kill": [[0, 0, 0, 0]],
            "neuron_kill": [[0, 2, 3]],
            "leak_enabled": True,
        })
        net = parse_network_description(json.dumps(doc))
        assert parse_network_description(serialize_network(net)) == net

    @given(st.integers(1, 4), st.integers(1, 6), st.sampled_from([1, 2, 4]),
           st.booleans(), st.booleans())
    def test_round_trip_generated(self, channels, features, pool, mirror, swap):
        doc = {
            "sensor": [16, 16],
            "preproc": {"pool": [pool, pool],
                        "roi": [0, 0, (16 - 1) // pool + 1, (16 - 1) // pool + 1],
                        "mirror_x": mirror, "swap_xy": swap,
                        "polarity": "merged",
                        "destinations": [{"target": 0, "channel_shift": 0}]},
            "layers": [{"core": 0, "in_channels": channels, "out_features": features,
                        "in_size": [(16 - 1) // pool + 1, (16 - 1) // pool + 1],
                        "threshold": 5,
                        "destinations": [{"target": "readout"}]}],
            "readout": {"classes": min(features, 16), "mode": "moving_average",
                        "window": 3},
        }
        net = parse_network_description(json.dumps(doc))
        assert parse_network_description(serialize_network(net)) == net


class TestProfile:
    def test_default_profile_sums(self):
        profile = default_profile()
        assert profile.n_cores == 9
        assert sum(c.kernel_words for c in profile.cores) == 272 * 1024
        assert sum(c.neuron_words for c in profile.cores) == 327_600
        profile.check()

    def test_oversubscribed_profile_rejected(self):
        doc = json.loads(MINIMAL_DOC)
        doc["profile"] = {"cores": [{"kernel_words": 300000, "neuron_words": 10,
                                     "bias_words": 10, "fc_synapses": 10}]}
        with pytest.raises(ConfigError, match="total synaptic memory"):
            parse_network_description(json.dumps(doc))

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spikesoc.checks import brute_force_targets
from spikesoc.config import Destination, LayerConfig
from spikesoc.convcore import (
    CoreState,
    compress_kernel_address,
    compress_neuron_address,
    decompress_neuron_address,
    fanout_bound,
    lookup_weight,
    neuron_update,
    pool_and_route,
    process_event_composed,
    sweep_targets,
)
from spikesoc.events import FeatureEvent, MalformedEventError


def layer(c=1, f=1, in_w=8, in_h=8, k=1, s=1, p=0, theta=100, **kw):
    params = dict(core_id=0, in_channels=c, out_features=f,
                  in_width=in_w, in_height=in_h, kernel_w=k, kernel_h=k,
                  stride_x=s, stride_y=s, pad_x=p, pad_y=p, threshold=theta,
                  destinations=(Destination("core1", 0),))
    params.update(kw)
    return LayerConfig(**params)


class TestSweep:
    def test_1x1_passthrough(self):
        targets = sweep_targets(FeatureEvent(0, 3, 5), layer())
        assert [tuple(t) for t in targets] == [(0, 3, 5, 0, 0)]

    def test_3x3_pad1_corner(self):
        lay = layer(k=3, p=1, in_w=4, in_h=4)
        targets = sweep_targets(FeatureEvent(0, 0, 0), lay)
        assert len(targets) == 4
        for t in targets:
            assert (t.xk, t.yk) == (1 - t.xo, 1 - t.yo)
            assert t.xo in (0, 1) and t.yo in (0, 1)

    def test_stride_2_skips_every_other_position(self):
        # 1-D: in_w = 9, K = 3, stride 2 -> out_w = 4; event at x = 4
        lay = layer(in_w=9, in_h=1, k=3, s=1)
        lay.kernel_h = 1
        lay.stride_x = 2
        targets = sweep_targets(FeatureEvent(0, 4, 0), lay)
        assert [(t.xk, t.xo) for t in targets] == [(0, 2), (2, 1)]  # xk=1 skipped

    def test_order_is_f_then_yk_then_xk(self):
        lay = layer(c=1, f=2, k=2, in_w=4, in_h=4)
        targets = sweep_targets(FeatureEvent(0, 1, 1), lay)
        keys = [(t.f, t.yk, t.xk) for t in targets]
        assert keys == sorted(keys)

    def test_out_of_bounds_event_raises(self):
        with pytest.raises(MalformedEventError):
            sweep_targets(FeatureEvent(0, 8, 0), layer())
        with pytest.raises(MalformedEventError):
            sweep_targets(FeatureEvent(1, 0, 0), layer())

    @given(st.integers(1, 16), st.sampled_from([1, 2]), st.integers(0, 2),
           st.integers(1, 4), st.data())
    def test_congruence_and_bound_against_brute_force(self, k, s, p, f, data):
        in_w = data.draw(st.integers(max(1, k - 2 * p), 16))
        in_h = data.draw(st.integers(max(1, k - 2 * p), 16))
        lay = layer(c=2, f=f, in_w=in_w, in_h=in_h, k=k, s=s, p=p)
        x = data.draw(st.integers(0, in_w - 1))
        y = data.draw(st.integers(0, in_h - 1))
        e = FeatureEvent(1, x, y)
        targets = sweep_targets(e, lay)
        xp, yp = x + p, y + p
        for t in targets:
            assert xp == t.xo * s + t.xk
            assert yp == t.yo * s + t.yk
        assert len(targets) <= fanout_bound(lay)
        assert set(tuple(t) for t in targets) == brute_force_targets(e, lay)


class TestAddressCompression:
    def test_zero(self):
        assert compress_neuron_address(0, 0, 0, (1, 4, 4)) == 0

    def test_formula(self):
        assert compress_neuron_address(1, 3, 2, (2, 4, 4)) == 27

    def test_round_trip_exhaustive(self):
        dims = (3, 5, 7)
        seen = []
        for f in range(3):
            for yo in range(7):
                for xo in range(5):
                    n = compress_neuron_address(f, xo, yo, dims)
                    assert decompress_neuron_address(n, dims) == (f, xo, yo)
                    seen.append(n)
        assert sorted(seen) == list(range(3 * 5 * 7))

    def test_out_of_range_raises(self):
        with pytest.raises(ValueError):
            compress_neuron_address(0, 4, 0, (1, 4, 4))
        with pytest.raises(ValueError):
            decompress_neuron_address(16, (1, 4, 4))

    def test_kernel_address(self):
        assert compress_kernel_address(0, 0, 0, 0, (1, 1, 1, 1)) == 0
        # (c, f, xk, yk) with dims (c_max, f_max, kw, kh)
        assert compress_kernel_address(1, 0, 2, 1, (2, 3, 4, 4)) == ((1 * 3 + 0) * 4 + 1) * 4 + 2


class TestLookup:
    def setup_method(self):
        self.w = np.zeros((1, 1, 2, 2), dtype=np.int8)
        self.kill = np.zeros_like(self.w, dtype=np.uint8)

    def test_zero_weight_skipped(self):
        assert lookup_weight(self.w, self.kill, 0, 0, 0, 0) is None

    def test_min_weight_passes(self):
        self.w[0, 0, 1, 0] = -128
        assert lookup_weight(self.w, self.kill, 0, 0, 0, 1) == -128

    def test_kill_bit_blocks_nonzero(self):
        self.w[0, 0, 0, 0] = 7
        self.kill[0, 0, 0, 0] = 1
        assert lookup_weight(self.w, self.kill, 0, 0, 0, 0) is None


class TestNeuronUpdate:
    def run_update(self, v0, w, lay):
        v = np.array([v0], dtype=np.int16)
        kill = np.zeros(1, dtype=np.uint8)
        spiked = neuron_update(v, kill, 0, w, lay)
        return spiked, int(v[0])

    def test_zero_input_no_spike(self):
        spiked, v = self.run_update(0, 0, layer(theta=100))
        assert (spiked, v) == (False, 0)

    def test_threshold_subtract(self):
        spiked, v = self.run_update(90, 20, layer(theta=100))
        assert (spiked, v) == (True, 10)

    def test_lower_bound_clamp(self):
        spiked, v = self.run_update(5, -10, layer(theta=100, lower_bound=0))
        assert (spiked, v) == (False, 0)

    def test_saturation_before_threshold(self):
        # wide sum 32860 would cross a 32767 threshold; the saturated value
        # does not under strict comparison
        lay = layer(theta=32767, strict_threshold=True)
        spiked, v = self.run_update(32760, 100, lay)
        assert (spiked, v) == (False, 32767)

    def test_saturated_value_spikes_at_inclusive_threshold(self):
        lay = layer(theta=32767)
        spiked, v = self.run_update(32760, 100, lay)
        assert (spiked, v) == (True, 0)

    def test_reset_mode(self):
        lay = layer(theta=100, reset_mode="reset", reset_value=-5)
        spiked, v = self.run_update(90, 20, lay)
        assert (spiked, v) == (True, -5)

    def test_single_spike_for_double_crossing(self):
        spiked, v = self.run_update(90, 120, layer(theta=100))
        assert (spiked, v) == (True, 110)  # residual above theta persists

    def test_killed_word_dropped(self):
        v = np.array([90], dtype=np.int16)
        kill = np.ones(1, dtype=np.uint8)
        assert neuron_update(v, kill, 0, 20, layer(theta=100)) is False
        assert v[0] == 90


class TestPoolAndRoute:
    def test_identity_pooling(self):
        lay = layer(f=2, in_w=4, in_h=4)
        n = compress_neuron_address(1, 2, 3, (2, 4, 4))
        out = pool_and_route(n, lay, 4, 4)
        assert out == [FeatureEvent(1, 2, 3, "core1")]

    def test_sum_pooling_merges_addresses(self):
        lay = layer(in_w=4, in_h=4, pool_x=2, pool_y=2)
        outs = []
        for yo in (0, 1):
            for xo in (0, 1):
                n = compress_neuron_address(0, xo, yo, (1, 4, 4))
                outs.extend(pool_and_route(n, lay, 4, 4))
        assert len(outs) == 4
        assert all(o == FeatureEvent(0, 0, 0, "core1") for o in outs)

    def test_two_destinations_with_shifts(self):
        lay = layer(f=4, in_w=4, in_h=4,
                    destinations=(Destination("core1", 0), Destination("core2", 16)))
        n = compress_neuron_address(3, 1, 1, (4, 4, 4))
        out = pool_and_route(n, lay, 4, 4)
        assert [o.c for o in out] == [3, 19]
        assert [o.dest for o in out] == ["core1", "core2"]


class TestProcessEvent:
    def test_identity_layer_passthrough(self, backend):
        lay = layer(theta=10)
        lay.weights = np.full((1, 1, 1, 1), 10, dtype=np.int8)
        core = CoreState.from_layer(lay, backend=backend)
        out = core.process_event(FeatureEvent(0, 3, 5))
        assert out == [FeatureEvent(0, 3, 5, "core1")]
        assert core.v[compress_neuron_address(0, 3, 5, core.neuron_dims)] == 0

    def test_zero_kernel_no_output(self, backend):
        core = CoreState.from_layer(layer(), backend=backend)
        assert core.process_event(FeatureEvent(0, 1, 1)) == []
        assert core.updates == 0

    def test_malformed_event_raises(self, backend):
        core = CoreState.from_layer(layer(), backend=backend)
        with pytest.raises(MalformedEventError):
            core.process_event(FeatureEvent(0, 99, 0))

    def test_matches_composed_reference(self, backend):
        rng = np.random.default_rng(5)
        for trial in range(40):
            k = int(rng.choice((1, 2, 3, 5)))
            p = int(rng.integers(0, 3))
            lay = layer(c=int(rng.integers(1, 4)), f=int(rng.integers(1, 5)),
                        in_w=int(rng.integers(max(1, k - 2 * p), 10)),
                        in_h=int(rng.integers(max(1, k - 2 * p), 10)),
                        k=k, s=int(rng.choice((1, 2))), p=p,
                        theta=int(rng.integers(1, 40)),
                        pool_x=int(rng.choice((1, 2))),
                        lower_bound=int(rng.choice((0, -32768))))
            shape = (lay.in_channels, lay.out_features, lay.kernel_h, lay.kernel_w)
            lay.weights = rng.integers(-30, 30, size=shape, endpoint=True).astype(np.int8)
            fused = CoreState.from_layer(lay, backend=backend)
            composed = CoreState.from_layer(lay, backend=backend)
            for _ in range(30):
                e = FeatureEvent(int(rng.integers(0, lay.in_channels)),
                                 int(rng.integers(0, lay.in_width)),
                                 int(rng.integers(0, lay.in_height)))
                assert fused.process_event(e) == process_event_composed(composed, e)
            assert np.array_equal(fused.v, composed.v)
            assert fused.updates == composed.updates

    def test_membrane_bounds_invariant(self, backend):
        lay = layer(theta=50, lower_bound=-40)
        lay.weights = np.array([[[[-128]]]], dtype=np.int8)
        core = CoreState.from_layer(lay, backend=backend)
        for _ in range(10):
            core.process_event(FeatureEvent(0, 2, 2))
        assert core.v.min() >= -40

    def test_permutation_invariance_linear_regime(self, backend):
        lay = layer(c=2, f=3, in_w=6, in_h=6, k=3, p=1, theta=32767)
        shape = (2, 3, 3, 3)
        rng = np.random.default_rng(8)
        lay.weights = rng.integers(-20, 20, size=shape, endpoint=True).astype(np.int8)
        events = [FeatureEvent(int(rng.integers(0, 2)), int(rng.integers(0, 6)),
                               int(rng.integers(0, 6))) for _ in range(50)]
        a = CoreState.from_layer(lay, backend=backend)
        b = CoreState.from_layer(lay, backend=backend)
        for e in events:
            a.process_event(e)
        for e in reversed(events):
            b.process_event(e)
        assert np.array_equal(a.v, b.v)

    def test_zero_weight_skip_preserves_semantics(self, backend):
        # With the threshold above the largest weight a zero add can never
        # re-trigger a spike, so delivering zero words to the neuron must
        # give identical results to skipping them at the memory read.
        lay = layer(c=1, f=2, in_w=6, in_h=6, k=3, theta=200)
        rng = np.random.default_rng(3)
        weights = rng.integers(-90, 90, size=(1, 2, 3, 3), endpoint=True).astype(np.int8)
        weights[0, 0, 1, 1] = 0
        weights[0, 1, 0, 2] = 0
        lay.weights = weights
        core = CoreState.from_layer(lay, backend=backend)
        noskip = CoreState.from_layer(lay, backend=backend)

        def process_without_skip(state, e):
            spikes = []
            for t in sweep_targets(e, state.layer):
                w = int(state.weights[e.c, t.f, t.yk, t.xk])  # zeros included
                n = compress_neuron_address(t.f, t.xo, t.yo, state.neuron_dims)
                if neuron_update(state.v, state.neuron_kill, n, w, state.layer):
                    spikes.append(n)
            out = []
            for n in spikes:
                out.extend(pool_and_route(n, state.layer, state.out_w, state.out_h))
            return out

        events = [FeatureEvent(0, int(rng.integers(0, 6)), int(rng.integers(0, 6)))
                  for _ in range(60)]
        got = [core.process_event(e) for e in events]
        want = [process_without_skip(noskip, e) for e in events]
        assert got == want
        assert np.array_equal(core.v, noskip.v)


class TestLeak:
    def test_zero_bias_no_change(self, backend):
        lay = layer(f=2, in_w=3, in_h=3, leak_enabled=True)
        core = CoreState.from_layer(lay, backend=backend)
        core.v[:] = 7
        assert core.leak_tick() == []
        assert (core.v == 7).all()

    def test_negative_bias_clamped_at_lower_bound(self, backend):
        lay = layer(f=2, in_w=3, in_h=3, theta=100, lower_bound=0,
                    leak_enabled=True)
        lay.bias = np.array([-1, -1], dtype=np.int16)
        core = CoreState.from_layer(lay, backend=backend)
        core.v[:] = 1
        assert core.leak_tick() == []
        assert (core.v == 0).all()
        assert core.leak_tick() == []
        assert (core.v == 0).all()

    def test_bias_at_threshold_spikes_whole_feature(self, backend):
        lay = layer(f=2, in_w=3, in_h=3, theta=10, leak_enabled=True)
        lay.bias = np.array([10, 0], dtype=np.int16)
        core = CoreState.from_layer(lay, backend=backend)
        out = core.leak_tick()
        assert len(out) == 9  # every neuron of feature 0, none of feature 1
        assert all(o.c == 0 for o in out)

    def test_ascending_address_order(self, backend):
        lay = layer(f=2, in_w=2, in_h=2, theta=1, leak_enabled=True)
        lay.bias = np.array([1, 1], dtype=np.int16)
        core = CoreState.from_layer(lay, backend=backend)
        out = core.leak_tick()
        # spikes for every word; pooled coordinates follow ascending n_comp
        coords = [(o.c, o.x, o.y) for o in out]
        assert coords == [(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1),
                          (1, 0, 0), (1, 1, 0), (1, 0, 1), (1, 1, 1)]


class TestFullyConnected:
    def fc_layer(self, i_max_side=2, f=1, theta=10, **kw):
        params = dict(core_id=0, in_channels=1, out_features=f,
                      in_width=i_max_side, in_height=i_max_side,
                      fc_mode=True, threshold=theta,
                      destinations=(Destination("readout", 0),))
        params.update(kw)
        return LayerConfig(**params)

    def test_one_in_one_out(self, backend):
        lay = self.fc_layer(i_max_side=1)
        lay.weights = np.full((1, 1, 1, 1), 10, dtype=np.int8)
        core = CoreState.from_layer(lay, backend=backend)
        out = core.process_event(FeatureEvent(0, 0, 0))
        assert out == [FeatureEvent(0, 0, 0, "readout")]

    def test_zero_row_no_updates(self, backend):
        lay = self.fc_layer()
        lay.weights = np.zeros((4, 1, 1, 1), dtype=np.int8)
        core = CoreState.from_layer(lay, backend=backend)
        assert core.process_event(FeatureEvent(0, 1, 1)) == []
        assert core.updates == 0

    def test_flattened_index_layout(self, backend):
        # input (c, x, y) -> row (c * in_h + y) * in_w + x
        lay = self.fc_layer(i_max_side=2, f=1, in_channels=2)
        weights = np.zeros((8, 1, 1, 1), dtype=np.int8)
        weights[(1 * 2 + 1) * 2 + 0] = 10  # c=1, x=0, y=1
        lay.weights = weights
        core = CoreState.from_layer(lay, backend=backend)
        assert core.process_event(FeatureEvent(1, 0, 1)) != []
        assert core.process_event(FeatureEvent(1, 1, 1)) == []

    def test_spike_routed_with_shift(self, backend):
        lay = self.fc_layer(f=3, theta=5,
                            destinations=(Destination("readout", 4),))
        weights = np.zeros((4, 3, 1, 1), dtype=np.int8)
        weights[0, 2] = 5
        lay.weights = weights
        core = CoreState.from_layer(lay, backend=backend)
        out = core.process_event(FeatureEvent(0, 0, 0))
        assert out == [FeatureEvent(6, 0, 0, "readout")]


class TestMemoryLoading:
    def test_bias_from_blob(self, tmp_path, backend):
        from spikesoc.events_io import write_weight_blob

        blob = tmp_path / "b.spkw"
        write_weight_blob(blob, "bias", np.array([3, -4], dtype=np.int16))
        lay = layer(f=2, in_w=2, in_h=2)
        lay.bias_spec = {"file": str(blob)}
        core = CoreState.from_layer(lay, backend=backend)
        assert core.bias.tolist() == [3, -4]

    def test_neuron_init_from_blob(self, tmp_path, backend):
        from spikesoc.events_io import write_weight_blob

        blob = tmp_path / "n.spkw"
        write_weight_blob(blob, "neuron", np.arange(8, dtype=np.int16))
        lay = layer(f=2, in_w=2, in_h=2)
        lay.neuron_init_spec = {"file": str(blob)}
        core = CoreState.from_layer(lay, backend=backend)
        assert core.v.tolist() == list(range(8))

    def test_neuron_init_inline_list(self, backend):
        lay = layer(f=1, in_w=2, in_h=2)
        lay.neuron_init = np.array([1, 2, 3, 4], dtype=np.int16)
        core = CoreState.from_layer(lay, backend=backend)
        assert core.v.tolist() == [1, 2, 3, 4]

    def test_neuron_init_below_lower_bound_rejected(self, backend):
        from spikesoc.config import ConfigError

        lay = layer(f=1, in_w=2, in_h=2, lower_bound=0)
        lay.neuron_init = np.array([0, -1, 0, 0], dtype=np.int16)
        with pytest.raises(ConfigError, match="below the lower bound"):
            CoreState.from_layer(lay, backend=backend)

    def test_kernel_from_blob_via_document(self, tmp_path, backend):
        import json

        from spikesoc.config import load_network
        from spikesoc.events_io import write_weight_blob

        blob = tmp_path / "k.spkw"
        write_weight_blob(blob, "kernel",
                          np.full((1, 1, 1, 1), 9, dtype=np.int8))
        doc = {
            "sensor": [4, 4],
            "preproc": {"roi": [0, 0, 4, 4], "polarity": "merged",
                        "destinations": [{"target": 0}]},
            "layers": [{"core": 0, "in_channels": 1, "out_features": 1,
                        "in_size": [4, 4], "threshold": 9,
                        "weights": {"file": "k.spkw"},
                        "destinations": [{"target": "readout"}]}],
            "readout": {"classes": 1},
        }
        cfg_path = tmp_path / "net.json"
        cfg_path.write_text(json.dumps(doc))
        net = load_network(cfg_path)  # relative blob path resolves here
        core = CoreState.from_layer(net.layers[0], backend=backend)
        out = core.process_event(FeatureEvent(0, 1, 1))
        assert out == [FeatureEvent(0, 1, 1, "readout")]


def test_sweep_stride_wider_than_kernel_can_miss():
    # K=1, stride 2: events at odd coordinates reach no kernel offset
    lay = layer(in_w=8, in_h=8, k=1, s=2)
    assert sweep_targets(FeatureEvent(0, 3, 0), lay) == []
    assert sweep_targets(FeatureEvent(0, 2, 2), lay) != []

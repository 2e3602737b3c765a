#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Streams synthetic events through a representative convolution core and a
fully connected core with each available backend and reports throughput.

    python benchmarks/bench_kernels.py --events 20000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from spikesoc.config import Destination, LayerConfig
from spikesoc.convcore import CoreState
from spikesoc.events import FeatureEvent
from spikesoc.kernels import BACKEND_NAMES, get_backend


def conv_layer() -> LayerConfig:
    rng = np.random.default_rng(11)
    return LayerConfig(
        core_id=0, in_channels=2, out_features=16,
        in_width=64, in_height=64, kernel_w=5, kernel_h=5,
        pad_x=2, pad_y=2, threshold=300, pool_x=2, pool_y=2,
        destinations=(Destination("core1", 0),),
        weights=rng.integers(-8, 8, size=(2, 16, 5, 5), endpoint=True).astype(np.int8),
    )


def fc_layer() -> LayerConfig:
    rng = np.random.default_rng(12)
    return LayerConfig(
        core_id=0, in_channels=8, in_width=10, in_height=10,
        out_features=16, fc_mode=True, threshold=200,
        destinations=(Destination("readout", 0),),
        weights=rng.integers(-8, 8, size=(800, 16), endpoint=True)
                   .astype(np.int8).reshape(800, 16, 1, 1),
    )


def bench(layer: LayerConfig, events: list[FeatureEvent], backend_name: str) -> tuple[float, int]:
    core = CoreState.from_layer(layer, backend=get_backend(backend_name))
    start = time.perf_counter()
    spikes = 0
    for e in events:
        spikes += len(core.process_event(e))
    elapsed = time.perf_counter() - start
    return elapsed, spikes


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events", type=int, default=20000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = {
        "conv 2ch->16f 5x5 on 64x64": (
            conv_layer(),
            [FeatureEvent(int(rng.integers(0, 2)), int(rng.integers(0, 64)),
                          int(rng.integers(0, 64))) for _ in range(args.events)],
        ),
        "fc 800 -> 16": (
            fc_layer(),
            [FeatureEvent(int(rng.integers(0, 8)), int(rng.integers(0, 10)),
                          int(rng.integers(0, 10))) for _ in range(args.events)],
        ),
    }

    print(f"backends: {', '.join(BACKEND_NAMES)}; {args.events} events per case\n")
    for name, (layer, events) in cases.items():
        results = {}
        for backend_name in BACKEND_NAMES:
            elapsed, spikes = bench(layer, events, backend_name)
            results[backend_name] = elapsed
            rate = args.events / elapsed
            print(f"{name:30} {backend_name:>9}: {elapsed:7.3f} s "
                  f"({rate:>12,.0f} events/s, {spikes} spikes out)")
        if len(results) == 2:
            speedup = results["python"] / results["compiled"]
            print(f"{name:30} {'speedup':>9}: {speedup:6.1f}x\n")
        else:
            print()


if __name__ == "__main__":
    main()

"""Smoke test for the evdeg Python bindings.

Build and install the extension first:

    cd crates/python && maturin develop --release

then run `python python/smoke_test.py`.
"""

import math
import os
import tempfile

import evdeg


def moving_edge(frames=13, side=32):
    images = []
    for i in range(frames):
        edge = 8.0 + i
        data = [
            0.2 + 0.6 / (1.0 + math.exp(-(edge - x) / 0.5))
            for y in range(side)
            for x in range(side)
        ]
        images.append(evdeg.Image(side, side, data))
    return images, [i * 0.01 for i in range(frames)]


def main():
    assert evdeg.log_map(1.0) == 0.0
    assert abs(evdeg.log_map(0.0) - math.log(1e-4)) < 1e-12

    # One-pixel log ramp: three ON events at 2/7, 4/7, 6/7 s.
    ramp = [evdeg.Image(1, 1, [math.exp(-1.0)]), evdeg.Image(1, 1, [math.exp(-0.65)])]
    events = evdeg.simulate_events(ramp, [0.0, 1.0], 0.1).to_list()
    assert [p for _, _, _, p in events] == [1, 1, 1]
    for (t, _, _, _), k in zip(events, (2, 4, 6)):
        assert abs(t - k / 7) < 1e-9

    frames, times = moving_edge()
    blurry = evdeg.synthesize_blur(frames, 0, len(frames))
    stream = evdeg.simulate_events(frames, times, 0.2)
    assert len(stream) > 0 and stream.stats()["off_count"] == 0

    grid = evdeg.voxelize(stream, 0.0, times[-1], 12)
    assert grid.shape == (32, 32, 12)
    assert sum(grid.net_polarity()) == len(stream)

    latent = evdeg.edi_reconstruct(blurry, grid, 0.2, 6)
    gain = evdeg.psnr(latent, frames[6]) - evdeg.psnr(blurry, frames[6])
    assert gain > 5.0, gain
    assert len(evdeg.edi_sequence(blurry, grid, 0.2)) == 13
    assert evdeg.psnr(evdeg.Image.filled(8, 8, 0.5), evdeg.Image.filled(8, 8, 0.6)) == 20.0
    assert evdeg.ssim(blurry, blurry) == 1.0

    clean, degraded = evdeg.make_pair(
        frames, times, 0.2, sigma=0.01, sampling_period=0.005,
        shot_rate=5.0, leak_rate=2.0, seed=1,
    )
    again = evdeg.make_pair(
        frames, times, 0.2, sigma=0.01, sampling_period=0.005,
        shot_rate=5.0, leak_rate=2.0, seed=1,
    )
    assert clean == stream and degraded == again[1]
    assert len(evdeg.scf_filter(degraded, 1, 0.0025, 2)) < len(degraded)

    try:
        evdeg.Image(2, 2, [0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("bad image size accepted")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "events.bin")
        evdeg.write_events(path, degraded)
        back = evdeg.read_events(path)
        assert len(back) == len(degraded)
        vox = os.path.join(tmp, "grid.vox")
        evdeg.write_voxel(vox, grid)
        assert evdeg.read_voxel(vox).to_list() == grid.to_list()
        try:
            evdeg.read_events(os.path.join(tmp, "missing.bin"))
        except FileNotFoundError:
            pass
        else:
            raise AssertionError("missing file accepted")

    print(f"ok: {len(stream)} events, EDI gain {gain:.1f} dB")


if __name__ == "__main__":
    main()

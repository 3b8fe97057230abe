"""Smoke test for the evgaze Python module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/evgaze-*.whl
"""

import math
import os
import tempfile

import evgaze


def main():
    r, g, b = evgaze.eta_color(0.0)
    assert math.isclose(r, 1.0) and math.isclose(b, math.exp(-5.0))
    assert math.isclose(g, r + b - math.exp(-5.0))

    rec = evgaze.simulate(width=32, height=32, duration_ms=1000, fps=2.0, seed=3)
    print(rec)
    assert rec.num_events > 0
    assert len(rec.truth()) == 30
    assert len(rec.gray_frame_times()) == 3
    x, y, t, p = rec.events()[0]
    assert 0 <= x < 32 and 0 <= y < 32 and p in (0, 1)

    seq = rec.encode(bin_ms=33, alpha=5.0)
    print(seq)
    assert len(seq) == 30 and seq.num_pairs == 29
    assert len(seq.frame(0)) == 6 * 32 * 32
    assert sum(seq.bin_event_counts) <= rec.num_events

    model = evgaze.train(seq, epochs=3, batch_size=8, seed=1, input_size=32, blocks=[4, 8], hidden=16)
    print(model, model.losses[-1])
    assert len(model.losses) == 3

    targets = [seq.target(i) for i in range(seq.num_pairs)]
    preds = [model.predict(seq, i) for i in range(seq.num_pairs)]
    table = evgaze.accuracy_table(targets, preds, radii=[100.0, 25.0, 5.0])
    for radius, s1, s2 in table:
        print(f"radius {radius:5.1f}: strategy 1 {s1:6.2f}%  strategy 2 {s2:6.2f}%")
        assert s1 <= s2
    assert evgaze.accuracy_table(targets, targets)[-1][1:] == (100.0, 100.0)
    assert evgaze.strat1_success(((0, 0), (10, 0)), ((3, 4), (10, 5)), 5.0)
    assert not evgaze.strat1_success(((0, 0), (10, 0)), ((3, 4), (10, 5.01)), 5.0)

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.evgm")
        model.save(path)
        loaded = evgaze.Model.load(path)
        assert loaded.predict(seq, 0) == model.predict(seq, 0)

    try:
        evgaze.simulate(fps=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("fps 0 accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()

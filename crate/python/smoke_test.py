"""Smoke test for the thermoscan Python bindings.

Build and install first:
    pip install --no-build-isolation ./crates/py
"""

import tempfile
from pathlib import Path

import thermoscan


def main():
    fragment = [
        [1, 3, 0, 43, 226, 12, 209],
        [3, 4, 1, 90, 223, 13, 215],
        [2, 0, 1, 223, 168, 223, 31],
        [0, 2, 3, 113, 208, 82, 123],
        [1, 0, 4, 12, 59, 17, 13],
        [0, 2, 3, 1, 232, 35, 0],
        [2, 1, 1, 20, 19, 223, 31],
    ]
    img = thermoscan.GrayImage([[float(v) for v in row] for row in fragment])
    assert thermoscan.median_filter(img).get(1, 1) == 1.0

    big = thermoscan.bicubic_resize(thermoscan.GrayImage.filled(80, 60, 5.0), 184, 168)
    assert (big.width, big.height) == (184, 168)

    half = thermoscan.GrayImage([[0.0] * 8] * 4 + [[255.0] * 8] * 4)
    assert {v for row in thermoscan.equalize(half).to_rows() for v in row} == {128.0, 255.0}

    basis = thermoscan.klt_basis([[1.0, 2.0], [2.0, 4.1], [3.0, 5.9]])
    lam = basis["eigenvalues"]
    assert lam[0] >= lam[1]

    labels, basins = thermoscan.segment(thermoscan.GrayImage([[0.0, 1.0, 0.0]]))
    assert labels == [[1, 0, 2]] and basins == 2

    cm = thermoscan.score_run([True] * 44 + [False] * 56, [True] * 50 + [False] * 50)
    assert (cm.tp, cm.fn, cm.tn, cm.fp) == (44, 6, 50, 0)
    assert abs(cm.accuracy - 0.94) < 1e-12 and abs(cm.tp_rate - 0.88) < 1e-12

    config = thermoscan.PipelineConfig()
    assert thermoscan.PipelineConfig.from_toml(config.to_toml()).config_hash() == config.config_hash()

    frames, truth = thermoscan.render_series("smoke", mine_present=True, seed=3)
    assert len(frames) == 44 and truth["mine_present"]
    with tempfile.TemporaryDirectory() as tmp:
        for stamp, frame in frames:
            name = "smoke_t" + stamp.replace("-", "").replace(":", "") + ".pgm"
            thermoscan.write_frame(frame, str(Path(tmp) / name))
        report = thermoscan.process_series(tmp, config)
    assert report["frame_count"] == 44
    print("verdict:", report["verdict"], "score: %.3f" % report["score"])
    print("python smoke test passed")


if __name__ == "__main__":
    main()

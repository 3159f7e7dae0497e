import numpy as np

GRID_COMMENT = (
    "aoaloc-grid x_min=-4000.0 x_max=4000.0 y_min=-4000.0 y_max=4000.0 "
    "resolution=250.0 row_order=north-up"
)


def write_pgm8(path, samples, comments=(GRID_COMMENT,)):
    header = "P5\n" + "".join(f"# {c}\n" for c in comments)
    header += f"{samples.shape[1]} {samples.shape[0]}\n255\n"
    path.write_bytes(header.encode("ascii") + samples.astype("u1").tobytes())


def make_cross_dataset(root, count, size=32, seed=0):
    """Synthetic stand-in for the ray rasters: each input is a noisy
    cross whose intersection is the labeled source disc."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    for m in range(count):
        cy, cx = rng.integers(6, size - 6, size=2)
        image = rng.integers(0, 40, size=(size, size)).astype(np.uint8)
        image[cy, :] = 170
        image[:, cx] = 170
        label = np.zeros((size, size), dtype=np.uint8)
        yy, xx = np.mgrid[:size, :size]
        label[(yy - cy) ** 2 + (xx - cx) ** 2 <= 4] = 255
        stem = root / f"sample_000_{m:05d}"
        write_pgm8(stem.with_name(stem.name + "_input.pgm"), image)
        write_pgm8(stem.with_name(stem.name + "_label.pgm"), label)

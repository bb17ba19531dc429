import numpy as np
import pytest
from PIL import Image

from histotex import Dataset, LabeledImage, generate_synthetic, load_dataset, to_grayscale
from histotex.dataset import class_name_for


class TestToGrayscale:
    def test_gray_input_is_fixed_point(self):
        ch = np.full((4, 4), 128.0)
        assert np.array_equal(to_grayscale(ch, ch, ch), ch)

    def test_pure_white(self):
        ch = np.full((2, 2), 255.0)
        assert np.array_equal(to_grayscale(ch, ch, ch), ch)

    def test_pure_red_rounds_to_76(self):
        # 0.299 * 255 = 76.245 -> 76
        r = np.full((1, 1), 255.0)
        z = np.zeros((1, 1))
        assert to_grayscale(r, z, z)[0, 0] == 76.0

    def test_rounding_half_up(self):
        # green among known half cases: 0.587 * 50 = 29.35 -> 29
        z = np.zeros((1, 1))
        g = np.full((1, 1), 50.0)
        assert to_grayscale(z, g, z)[0, 0] == 29.0

    def test_equal_channels_permutation_invariant(self, rng):
        a = np.floor(rng.uniform(0, 256, (5, 7)))
        b = a.copy()
        c = np.floor(rng.uniform(0, 256, (5, 7)))
        # r and g hold equal values: swapping them leaves the output unchanged
        assert np.array_equal(to_grayscale(a, b, c), to_grayscale(b, a, c))
        # swapping unequal channels generally does change it
        assert not np.array_equal(to_grayscale(a, c, a), to_grayscale(c, a, a))

    def test_shape_mismatch_errors(self):
        with pytest.raises(ValueError, match="channel shapes"):
            to_grayscale(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))


class TestSyntheticCorpus:
    def test_shape_and_labels(self):
        ds = generate_synthetic(2, 4, size=(64, 64), seed=7)
        assert len(ds) == 8
        assert len(ds.class_names) == 2
        assert np.array_equal(ds.class_counts(), [4, 4])
        assert all(im.pixels.shape == (64, 64) for im in ds.images)

    def test_path960_like_shape(self):
        ds = generate_synthetic(20, 48, size=(168, 168), seed=1)
        assert len(ds) == 960
        assert len(ds.class_names) == 20
        assert np.all(ds.class_counts() == 48)
        assert ds.images[0].pixels.shape == (168, 168)

    def test_deterministic_rerun(self):
        a = generate_synthetic(2, 4, size=(64, 64), seed=7)
        b = generate_synthetic(2, 4, size=(64, 64), seed=7)
        for im_a, im_b in zip(a.images, b.images):
            assert im_a.id == im_b.id
            assert np.array_equal(im_a.pixels, im_b.pixels)

    def test_seed_changes_pixels_not_structure(self):
        a = generate_synthetic(2, 4, size=(32, 32), seed=7)
        b = generate_synthetic(2, 4, size=(32, 32), seed=8)
        assert [im.id for im in a.images] == [im.id for im in b.images]
        assert np.array_equal(a.labels, b.labels)
        assert any(
            not np.array_equal(x.pixels, y.pixels)
            for x, y in zip(a.images, b.images)
        )

    def test_value_range(self):
        ds = generate_synthetic(3, 3, size=(16, 16), seed=0)
        for im in ds.images:
            assert im.pixels.min() >= 0.0
            assert im.pixels.max() <= 255.0

    @pytest.mark.parametrize("bad", [(1, 4), (3, 1)])
    def test_preconditions(self, bad):
        with pytest.raises(ValueError):
            generate_synthetic(bad[0], bad[1], size=(16, 16), seed=0)

    def test_class_names(self):
        assert class_name_for(0) == "A"
        assert class_name_for(19) == "T"
        assert class_name_for(26) == "AA"


def _write_rgb(path, width, height, seed=0):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)
    return arr


class TestLoadDataset:
    def test_single_tif(self, tmp_path):
        arr = _write_rgb(tmp_path / "A_01.tif", 308, 168)
        ds = load_dataset(tmp_path)
        assert len(ds) == 1
        assert ds.class_names == ("A",)
        im = ds.images[0]
        assert (im.width, im.height) == (308, 168)
        expected = to_grayscale(
            arr[..., 0].astype(float), arr[..., 1].astype(float),
            arr[..., 2].astype(float),
        )
        assert np.array_equal(im.pixels, expected)

    def test_empty_directory(self, tmp_path):
        with pytest.raises(ValueError, match="no images found"):
            load_dataset(tmp_path)

    def test_flat_layout_and_ordering(self, tmp_path):
        for name in ["B_02.png", "A_01.png", "B_01.png", "A_02.png"]:
            _write_rgb(tmp_path / name, 16, 16, seed=hash(name) % 100)
        ds = load_dataset(tmp_path)
        assert [im.id for im in ds.images] == \
            ["A_01.png", "A_02.png", "B_01.png", "B_02.png"]
        assert ds.class_names == ("A", "B")
        assert np.array_equal(ds.labels, [0, 0, 1, 1])

    def test_subdirectory_fallback(self, tmp_path):
        for cls in ["epith", "muscle"]:
            (tmp_path / cls).mkdir()
            for i in range(2):
                _write_rgb(tmp_path / cls / f"img_{i}.png", 12, 12, seed=i)
        ds = load_dataset(tmp_path)
        assert ds.class_names == ("epith", "muscle")
        assert len(ds) == 4

    def test_repeated_load_identical(self, tmp_path):
        for name in ["A_01.png", "A_02.png", "B_01.png"]:
            _write_rgb(tmp_path / name, 10, 10, seed=len(name))
        a = load_dataset(tmp_path)
        b = load_dataset(tmp_path, threads=4)
        assert [im.id for im in a.images] == [im.id for im in b.images]
        for im_a, im_b in zip(a.images, b.images):
            assert np.array_equal(im_a.pixels, im_b.pixels)

    def test_strict_rejects_wrong_counts(self, tmp_path):
        for name in ["A_01.tif", "A_02.tif", "B_01.tif"]:
            _write_rgb(tmp_path / name, 8, 8)
        with pytest.raises(ValueError, match="strict"):
            load_dataset(tmp_path, strict_path960=True)

    def test_strict_ignores_png(self, tmp_path):
        _write_rgb(tmp_path / "A_01.png", 8, 8)
        with pytest.raises(ValueError, match="no images found"):
            load_dataset(tmp_path, strict_path960=True)

    def test_unreadable_file_names_it(self, tmp_path):
        (tmp_path / "A_01.tif").write_bytes(b"not really a tif")
        with pytest.raises(ValueError, match="A_01.tif"):
            load_dataset(tmp_path)

    def test_grayscale_file_loads_unchanged(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, size=(9, 11), dtype=np.uint8)
        Image.fromarray(arr, mode="L").save(tmp_path / "A_01.png")
        ds = load_dataset(tmp_path)
        assert np.array_equal(ds.images[0].pixels, arr.astype(float))


class TestInvariants:
    def test_images_are_immutable(self):
        ds = generate_synthetic(2, 2, size=(8, 8), seed=0)
        with pytest.raises(ValueError):
            ds.images[0].pixels[0, 0] = 1.0

    def test_rejects_tiny_images(self):
        with pytest.raises(ValueError, match="3x3"):
            LabeledImage(id="x", class_label=0, pixels=np.zeros((2, 5)))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="255"):
            LabeledImage(id="x", class_label=0, pixels=np.full((4, 4), 300.0))

    def test_dataset_labels(self, tiny_dataset):
        assert isinstance(tiny_dataset, Dataset)
        counts = tiny_dataset.class_counts()
        assert counts.sum() == len(tiny_dataset)

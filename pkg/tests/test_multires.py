import numpy as np
import numpy.testing as npt
import pytest

from mrlearn.errors import DimensionError
from mrlearn.multires import (
    build_curriculum_dataset,
    build_resolution_1d,
    build_resolution_2d,
)
from mrlearn.wavelet import SubbandTriple, WaveletPyramid2D, dwt2d, idwt2d

from test_wavelet import block_means_1d, block_means_2d


class TestBuildResolution1d:
    def test_index_one_is_identity(self):
        x = np.array([1.0, 3.0, 5.0, 7.0])
        v = build_resolution_1d(x, 1)
        npt.assert_array_equal(v.data, x)
        assert v.kind == "original" and v.depth == 0

    def test_index_two_is_pairwise_mean(self):
        v = build_resolution_1d([1.0, 3.0, 5.0, 7.0], 2)
        npt.assert_allclose(v.data, [2.0, 2.0, 6.0, 6.0], atol=1e-12)

    def test_index_three_is_four_sample_mean(self):
        v = build_resolution_1d([1.0, 3.0, 5.0, 7.0], 3)
        npt.assert_allclose(v.data, [4.0, 4.0, 4.0, 4.0], atol=1e-12)

    def test_block_mean_oracle_random(self):
        rng = np.random.default_rng(2)
        for index in range(2, 6):
            x = rng.normal(size=256)
            npt.assert_allclose(
                build_resolution_1d(x, index).data,
                block_means_1d(x, 2 ** (index - 1)),
                atol=1e-10,
            )

    def test_divisibility_error(self):
        with pytest.raises(DimensionError):
            build_resolution_1d(np.arange(6.0), 3)

    def test_channel_axis_transforms_each_column(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(16, 3))
        v = build_resolution_1d(x, 3)
        for c in range(3):
            npt.assert_allclose(v.data[:, c], build_resolution_1d(x[:, c], 3).data, atol=1e-12)


class TestBuildResolution2d:
    def test_index_one_is_identity(self):
        x = np.random.default_rng(0).normal(size=(8, 8))
        npt.assert_array_equal(build_resolution_2d(x, 1).data, x)

    def test_index_three_is_block_mean(self):
        v = build_resolution_2d([[1.0, 2.0], [3.0, 4.0]], 3)
        npt.assert_allclose(v.data, np.full((2, 2), 2.5), atol=1e-12)

    def test_index_two_keeps_oriented_details(self):
        # the diagonal band of this image is zero, so removing only it
        # reconstructs the image exactly
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        v = build_resolution_2d(x, 2)
        npt.assert_allclose(v.data, x, atol=1e-12)
        assert v.kind == "hh-only-zeroed" and v.depth == 1

    def test_even_index_oracle_via_band_zeroing(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(16, 16))
        for index, depth in [(2, 1), (4, 2), (6, 3)]:
            pyr = dwt2d(x, depth)
            bands = []
            for j, t in enumerate(pyr.details):
                if j == depth - 1:
                    bands.append(SubbandTriple(t.lh, t.hl, np.zeros_like(t.hh)))
                else:
                    bands.append(
                        SubbandTriple(np.zeros_like(t.lh), np.zeros_like(t.hl), np.zeros_like(t.hh))
                    )
            expected = idwt2d(WaveletPyramid2D(pyr.approx, tuple(bands), pyr.original_shape, depth))
            npt.assert_allclose(build_resolution_2d(x, index).data, expected, atol=1e-12)

    def test_odd_index_block_mean_oracle(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(16, 16))
        for index, depth in [(3, 1), (5, 2)]:
            npt.assert_allclose(
                build_resolution_2d(x, index).data, block_means_2d(x, 2**depth), atol=1e-10
            )

    def test_channels_transform_independently(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(8, 8, 3))
        v = build_resolution_2d(x, 3)
        for c in range(3):
            npt.assert_allclose(v.data[..., c], build_resolution_2d(x[..., c], 3).data, atol=1e-12)


class TestCurriculumDataset:
    def test_shapes_and_finest_identity(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(10, 16))
        versions = build_curriculum_dataset(x, 3, "1D")
        assert [v.index for v in versions] == [3, 2, 1]
        for v in versions:
            assert v.data.shape == x.shape
        npt.assert_array_equal(versions[-1].data, x)

    def test_2d_version_order(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(4, 32, 32))
        versions = build_curriculum_dataset(x, 3, "2D")
        assert [v.index for v in versions] == [3, 2, 1]
        npt.assert_array_equal(versions[-1].data, x)
        npt.assert_allclose(versions[0].data[0], block_means_2d(x[0], 2), atol=1e-10)

    def test_constant_sample_identical_versions(self):
        x = np.full((1, 16), 2.5)
        versions = build_curriculum_dataset(x, 4, "1D")
        for v in versions:
            npt.assert_allclose(v.data, x, atol=1e-12)

    def test_heterogeneous_shapes_rejected(self):
        with pytest.raises(DimensionError):
            build_curriculum_dataset([np.zeros(8), np.zeros(16)], 2, "1D")


class TestProperties:
    def test_total_variation_monotone_1d(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            x = rng.normal(size=64)
            tv = [
                np.abs(np.diff(build_resolution_1d(x, i).data)).sum()
                for i in range(1, 6)
            ]
            for a, b in zip(tv, tv[1:]):
                assert b <= a + 1e-12

    def test_nesting_idempotence_1d(self):
        rng = np.random.default_rng(35)
        x = rng.normal(size=64)
        for i in range(1, 5):
            ri = build_resolution_1d(x, i).data
            for j in range(i, 6):
                npt.assert_allclose(
                    build_resolution_1d(ri, j).data,
                    build_resolution_1d(x, j).data,
                    atol=1e-9,
                )

    def test_2d_chain_even_plus_oriented_zero_equals_odd(self):
        rng = np.random.default_rng(39)
        x = rng.normal(size=(16, 16))
        for k in (1, 2):
            even = build_resolution_2d(x, 2 * k).data
            odd = build_resolution_2d(x, 2 * k + 1).data
            # zeroing the remaining oriented bands of the even version at
            # depth k reproduces the odd version
            pyr = dwt2d(even, k)
            bands = list(pyr.details)
            t = bands[k - 1]
            bands[k - 1] = SubbandTriple(np.zeros_like(t.lh), np.zeros_like(t.hl), np.zeros_like(t.hh))
            rebuilt = idwt2d(WaveletPyramid2D(pyr.approx, tuple(bands), pyr.original_shape, k))
            npt.assert_allclose(rebuilt, odd, atol=1e-9)

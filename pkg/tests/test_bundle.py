import struct

import numpy as np
import pytest

from agc.bundle import (
    ManifestEntry,
    check_manifest_bundles,
    make_bundle,
    read_bundle,
    read_manifest,
    write_bundle,
    write_manifest,
)
from agc.errors import (
    BadMagic,
    BundleFormatError,
    LabelOutOfRange,
    ManifestError,
    Truncated,
    UnsupportedVersion,
    ZeroNormFeature,
)


def sample_bundle(rng=None, c=3, d=4, m=5, n=2, condition="clean", names=None):
    rng = rng or np.random.default_rng(0)
    bank = rng.standard_normal((c, d))
    bank /= np.linalg.norm(bank, axis=1, keepdims=True)
    labels = np.arange(m) % c
    originals = rng.standard_normal((m, d))
    originals /= np.linalg.norm(originals, axis=1, keepdims=True)
    views = rng.standard_normal((m, n, d))
    if n:
        views /= np.linalg.norm(views, axis=2, keepdims=True)
    return make_bundle(condition, names or [f"class {i}" for i in range(c)], bank, labels, originals, views)


class TestRoundTrip:
    def test_bitwise_round_trip(self, tmp_path):
        bundle = sample_bundle()
        p1, p2 = tmp_path / "a.agcb", tmp_path / "b.agcb"
        write_bundle(bundle, p1)
        reread = read_bundle(p1)
        write_bundle(reread, p2)
        assert p1.read_bytes() == p2.read_bytes()
        np.testing.assert_array_equal(bundle.bank_raw, reread.bank_raw)
        np.testing.assert_array_equal(bundle.originals_raw, reread.originals_raw)
        np.testing.assert_array_equal(bundle.views_raw, reread.views_raw)
        np.testing.assert_array_equal(bundle.labels, reread.labels)
        assert reread.names == bundle.names
        assert reread.condition == "clean"

    def test_zero_view_bundle(self, tmp_path):
        bundle = sample_bundle(n=0)
        path = tmp_path / "noviews.agcb"
        write_bundle(bundle, path)
        reread = read_bundle(path)
        assert reread.n_views == 0
        assert reread.views_raw.shape == (5, 0, 4)

    def test_single_sample_bundle(self, tmp_path):
        bundle = sample_bundle(m=1)
        path = tmp_path / "one.agcb"
        write_bundle(bundle, path)
        assert read_bundle(path).n_samples == 1

    def test_unicode_names(self, tmp_path):
        bundle = sample_bundle(names=["ailes", "église", "飞机"])
        path = tmp_path / "names.agcb"
        write_bundle(bundle, path)
        assert read_bundle(path).names == ("ailes", "église", "飞机")

    def test_conditions_round_trip(self, tmp_path):
        for cond in ("clean", "adversarial", "unspecified"):
            path = tmp_path / f"{cond}.agcb"
            write_bundle(sample_bundle(condition=cond), path)
            assert read_bundle(path).condition == cond


class TestMalformedFiles:
    def write_valid(self, tmp_path):
        path = tmp_path / "valid.agcb"
        write_bundle(sample_bundle(), path)
        return path

    def test_bad_magic(self, tmp_path):
        path = self.write_valid(tmp_path)
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(BadMagic):
            read_bundle(path)

    def test_unsupported_version(self, tmp_path):
        path = self.write_valid(tmp_path)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 2)
        path.write_bytes(bytes(data))
        with pytest.raises(UnsupportedVersion):
            read_bundle(path)

    def test_nonzero_padding_rejected(self, tmp_path):
        path = self.write_valid(tmp_path)
        data = bytearray(path.read_bytes())
        data[25] = 7
        path.write_bytes(bytes(data))
        with pytest.raises(BundleFormatError):
            read_bundle(path)

    def test_bad_condition_byte(self, tmp_path):
        path = self.write_valid(tmp_path)
        data = bytearray(path.read_bytes())
        data[24] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(BundleFormatError):
            read_bundle(path)

    @pytest.mark.parametrize("cut", [2, 20, 27])
    def test_truncated_header(self, tmp_path, cut):
        path = self.write_valid(tmp_path)
        data = path.read_bytes()
        path.write_bytes(data[:cut])
        with pytest.raises(Truncated) as exc:
            read_bundle(path)
        assert exc.value.offset == cut

    def test_truncated_mid_record_reports_offset(self, tmp_path):
        path = self.write_valid(tmp_path)
        data = path.read_bytes()
        cut = len(data) - 13  # inside the last record's view block
        path.write_bytes(data[:cut])
        with pytest.raises(Truncated) as exc:
            read_bundle(path)
        assert exc.value.offset == cut

    def test_trailing_bytes_rejected(self, tmp_path):
        path = self.write_valid(tmp_path)
        path.write_bytes(path.read_bytes() + b"\x00\x01")
        with pytest.raises(BundleFormatError):
            read_bundle(path)

    def test_label_out_of_range(self, tmp_path):
        path = self.write_valid(tmp_path)
        data = bytearray(path.read_bytes())
        # Record block starts after header + names + bank; corrupt sample 1's label.
        bundle = sample_bundle()
        names_size = sum(2 + len(n.encode("utf-8")) for n in bundle.names)
        record = 4 + 4 * 4 + 2 * 4 * 4
        off = 28 + names_size + 3 * 4 * 4 + record
        data[off : off + 4] = struct.pack("<I", 99)
        path.write_bytes(bytes(data))
        with pytest.raises(LabelOutOfRange) as exc:
            read_bundle(path)
        assert exc.value.sample == 1

    def test_zero_norm_feature(self, tmp_path):
        path = self.write_valid(tmp_path)
        data = bytearray(path.read_bytes())
        bundle = sample_bundle()
        names_size = sum(2 + len(n.encode("utf-8")) for n in bundle.names)
        record = 4 + 4 * 4 + 2 * 4 * 4
        off = 28 + names_size + 3 * 4 * 4 + 2 * record + 4  # sample 2's original
        data[off : off + 16] = b"\x00" * 16
        path.write_bytes(bytes(data))
        with pytest.raises(ZeroNormFeature) as exc:
            read_bundle(path)
        assert exc.value.sample == 2
        assert exc.value.which == "original"


class TestLoaderNormalization:
    def test_norm_deviation_recorded(self):
        bundle = sample_bundle()
        assert bundle.bank_norm_dev < 1e-6
        assert bundle.feature_norm_dev < 1e-6

    def test_bank_norm_warning(self, tmp_path):
        rng = np.random.default_rng(1)
        bank = rng.standard_normal((3, 4))
        bank /= np.linalg.norm(bank, axis=1, keepdims=True)
        bank[0] *= 1.01  # one percent off unit norm
        originals = np.eye(4)[:2]
        views = np.zeros((2, 0, 4))
        bundle = make_bundle("clean", list("abc"), bank, [0, 1], originals, views)
        path = tmp_path / "warn.agcb"
        write_bundle(bundle, path)
        with pytest.warns(UserWarning, match="unit norm"):
            read_bundle(path)

    def test_accessors_return_unit_rows(self):
        bundle = sample_bundle()
        for i in range(bundle.n_samples):
            assert abs(np.linalg.norm(bundle.original_unit(i)) - 1.0) < 1e-12
            norms = np.linalg.norm(bundle.views_unit(i), axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-12)


class TestManifest:
    def test_round_trip(self, tmp_path):
        entries = [
            ManifestEntry("persp", "weak", tmp_path / "a.agcb"),
            ManifestEntry("persp", "strong", tmp_path / "b.agcb"),
        ]
        path = tmp_path / "m.tsv"
        write_manifest(entries, path)
        got = read_manifest(path)
        assert [(e.name, e.intensity) for e in got] == [("persp", "weak"), ("persp", "strong")]

    def test_relative_paths_resolve_against_manifest_dir(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("persp\tweak\tbundles/a.agcb\n", encoding="utf-8")
        (entry,) = read_manifest(path)
        assert entry.path == tmp_path / "bundles" / "a.agcb"

    def test_duplicate_entries_rejected(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("p\tweak\ta\np\tweak\tb\n", encoding="utf-8")
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_bad_intensity_rejected(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("p\textreme\ta\n", encoding="utf-8")
        with pytest.raises(ManifestError):
            read_manifest(path)

    def test_bundle_consistency_check(self):
        b1 = sample_bundle()
        b2 = sample_bundle(m=7)
        with pytest.raises(ManifestError):
            check_manifest_bundles([b1, b2])
        mismatched = make_bundle(
            b1.condition,
            b1.names,
            b1.bank_raw,
            (b1.labels + 1) % 3,
            b1.originals_raw,
            b1.views_raw,
        )
        with pytest.raises(ManifestError):
            check_manifest_bundles([b1, mismatched])
        check_manifest_bundles([b1, b1])

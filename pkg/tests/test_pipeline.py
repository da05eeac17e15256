import json

import numpy as np
import pytest

from viewforge.errors import ConfigError
from viewforge.pfm import read_pfm
from viewforge.pipeline import (
    RUN_MANIFEST_NAME,
    ManifestEntry,
    config_from_dict,
    generate_run,
    iter_views,
    load_config,
    load_image_rgb,
    load_manifest,
    load_mask,
    meta_dict,
    render_from_meta,
    save_image_rgb,
)


def run_from_paths(manifest_path, config_path, out_dir, threads=None):
    config = load_config(config_path)
    entries = load_manifest(manifest_path)
    return generate_run(config, entries, out_dir, threads=threads)


def tree_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


class TestConfigLoading:
    def test_defaults_from_empty_object(self):
        cfg = config_from_dict({})
        assert cfg.views_per_image == 1
        assert cfg.seed == 0
        assert cfg.threads == 1
        assert cfg.sampler.prob_combined == 0.35

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError):
            config_from_dict({"view_count": 3})

    def test_unknown_sampler_key(self):
        with pytest.raises(ConfigError):
            config_from_dict({"sampler": {"probability_identity": 1.0}})

    def test_bad_probabilities(self):
        with pytest.raises(ConfigError):
            config_from_dict({"sampler": {"prob_identity": 0.5}})

    def test_bad_views_count(self):
        with pytest.raises(ConfigError):
            config_from_dict({"views_per_image": 0})

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_round_trip_through_dict(self):
        cfg = config_from_dict({"views_per_image": 3, "seed": 7,
                                "sampler": {"tau": 0.4}})
        again = config_from_dict(cfg.to_dict())
        assert again == cfg


class TestManifestLoading:
    GOOD = {"id": "a", "image_path": "a.png", "depth_path": "a.pfm",
            "normal_path": "n.pfm", "hfov_deg": 60.0}

    def test_good_entry(self):
        entry = ManifestEntry.from_dict(dict(self.GOOD))
        assert entry.id == "a"
        assert entry.hfov_deg == 60.0

    def test_unknown_field(self):
        bad = dict(self.GOOD, extra=1)
        with pytest.raises(ConfigError):
            ManifestEntry.from_dict(bad)

    def test_missing_field(self):
        bad = dict(self.GOOD)
        del bad["depth_path"]
        with pytest.raises(ConfigError):
            ManifestEntry.from_dict(bad)

    def test_empty_id(self):
        with pytest.raises(ConfigError):
            ManifestEntry.from_dict(dict(self.GOOD, id=""))

    @pytest.mark.parametrize("hfov", [0.0, -10.0, 180.0, 200.0])
    def test_hfov_out_of_range(self, hfov):
        with pytest.raises(ConfigError):
            ManifestEntry.from_dict(dict(self.GOOD, hfov_deg=hfov))

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "m.jsonl"
        other = dict(self.GOOD, id="b")
        path.write_text(json.dumps(self.GOOD) + "\n\n" + json.dumps(other) + "\n\n")
        entries = load_manifest(path)
        assert [e.id for e in entries] == ["a", "b"]

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps(self.GOOD) + "\n" + json.dumps(self.GOOD) + "\n")
        with pytest.raises(ConfigError):
            load_manifest(path)

    def test_bad_json_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("{oops\n")
        with pytest.raises(ConfigError):
            load_manifest(path)


class TestGenerateRun:
    def test_output_counts(self, frame_factory, tmp_path):
        manifest_path, config_path, _ = frame_factory(3, views=2)
        out = tmp_path / "out"
        result = run_from_paths(manifest_path, config_path, out)
        assert result.ok
        assert len(result.outputs) == 6
        names = sorted(p.name for p in out.iterdir())
        assert len(names) == 6 * 3 + 1
        assert RUN_MANIFEST_NAME in names
        for i in range(3):
            for k in range(2):
                for suffix in ("target.png", "mask.png", "meta.json"):
                    assert f"frame{i:03d}_{k}.{suffix}" in names

    def test_rerun_is_byte_identical(self, frame_factory, tmp_path):
        manifest_path, config_path, _ = frame_factory(2, views=2)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_from_paths(manifest_path, config_path, out_a)
        run_from_paths(manifest_path, config_path, out_b)
        assert tree_bytes(out_a) == tree_bytes(out_b)

    def test_thread_count_does_not_change_bytes(self, frame_factory, tmp_path):
        manifest_path, config_path, _ = frame_factory(4, views=2)
        out_a, out_b = tmp_path / "t1", tmp_path / "t2"
        run_from_paths(manifest_path, config_path, out_a, threads=1)
        run_from_paths(manifest_path, config_path, out_b, threads=3)
        assert tree_bytes(out_a) == tree_bytes(out_b)

    def test_failed_entry_is_skipped_not_fatal(self, frame_factory, tmp_path):
        manifest_path, config_path, root = frame_factory(3, views=1)
        (root / "frame001.depth.pfm").unlink()
        out = tmp_path / "out"
        result = run_from_paths(manifest_path, config_path, out)
        assert not result.ok
        assert [f[0] for f in result.failures] == ["frame001"]
        assert sorted({r["image_id"] for r in result.outputs}) == ["frame000", "frame002"]
        manifest = json.loads((out / RUN_MANIFEST_NAME).read_text())
        assert manifest["failed_entries"] == ["frame001"]
        assert (out / "frame000_0.target.png").exists()
        assert not (out / "frame001_0.target.png").exists()

    def test_run_manifest_paths_are_relative(self, frame_factory, tmp_path):
        manifest_path, config_path, _ = frame_factory(1, views=1)
        out = tmp_path / "out"
        run_from_paths(manifest_path, config_path, out)
        manifest = json.loads((out / RUN_MANIFEST_NAME).read_text())
        for record in manifest["outputs"]:
            assert "/" not in record["target"]
            assert (out / record["target"]).exists()
            assert (out / record["mask"]).exists()
            assert (out / record["meta"]).exists()


class TestMetaRoundTrip:
    def test_meta_re_render_is_byte_identical(self, frame_factory, tmp_path):
        manifest_path, config_path, _ = frame_factory(2, views=2)
        out = tmp_path / "out"
        run_from_paths(manifest_path, config_path, out)
        entries = {e.id: e for e in load_manifest(manifest_path)}
        for meta_path in sorted(out.glob("*.meta.json")):
            meta = json.loads(meta_path.read_text())
            entry = entries[meta["image_id"]]
            image = load_image_rgb(entry.image_path)
            depth = read_pfm(entry.depth_path)
            normals = read_pfm(entry.normal_path)
            view = render_from_meta(meta, image, depth, normals)
            again = tmp_path / "again.png"
            save_image_rgb(again, view.image)
            stem = f"{meta['image_id']}_{meta['view_index']}"
            assert again.read_bytes() == (out / f"{stem}.target.png").read_bytes()

    def test_masked_off_pixels_are_black(self, frame_factory, tmp_path):
        manifest_path, config_path, _ = frame_factory(3, views=2)
        out = tmp_path / "out"
        run_from_paths(manifest_path, config_path, out)
        saw_hole = False
        for mask_path in sorted(out.glob("*.mask.png")):
            mask = load_mask(mask_path)
            target = load_image_rgb(str(mask_path).replace(".mask.png", ".target.png"))
            if not mask.all():
                saw_hole = True
            assert np.all(target[~mask] == 0.0)
        assert saw_hole


class TestIterViews:
    def test_streaming_matches_batch_outputs(self, frame_factory, tmp_path):
        manifest_path, config_path, _ = frame_factory(2, views=3)
        out = tmp_path / "out"
        run_from_paths(manifest_path, config_path, out)
        config = load_config(config_path)
        for entry in load_manifest(manifest_path):
            image = load_image_rgb(entry.image_path)
            depth = read_pfm(entry.depth_path)
            normals = read_pfm(entry.normal_path)
            views = list(iter_views(image, depth, normals, entry.hfov_deg, entry.id,
                                    config.sampler, config.seed, config.views_per_image))
            assert len(views) == 3
            for rv in views:
                meta_path = out / f"{entry.id}_{rv.view_index}.meta.json"
                assert meta_dict(rv) == json.loads(meta_path.read_text())
                mask_path = out / f"{entry.id}_{rv.view_index}.mask.png"
                np.testing.assert_array_equal(rv.view.mask, load_mask(mask_path))

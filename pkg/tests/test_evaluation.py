import numpy as np
import pytest

from qtab.dataset import Dataset, SyntheticCorpusSpec, synthetic_dataset
from qtab.evaluation import (
    DatasetEvaluator,
    EvalCache,
    EvalPoint,
    EvaluatorSpec,
    compression_rate,
    evaluate,
)
from qtab.jpeg import encode, decode, psnr
from qtab.proxy import ProxyClassifier
from qtab.qtable import QTable, scale_by_quality, standard_table

from conftest import random_test_image


def _all(v):
    return QTable(np.full((8, 8), v))


class TestEvalPoint:
    def test_validation(self):
        t = _all(16)
        with pytest.raises(ValueError):
            EvalPoint(qtable=t, compression_rate=0.0, accuracy=0.5)
        with pytest.raises(ValueError):
            EvalPoint(qtable=t, compression_rate=2.0, accuracy=1.5)

    def test_json_round_trip(self):
        p = EvalPoint(qtable=_all(7), compression_rate=12.5, accuracy=0.25,
                      mean_psnr=31.0, trial_index=3, strategy_tag="x")
        q = EvalPoint.from_json_dict(p.to_json_dict())
        assert q == p


class TestEvaluatorSpec:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            EvaluatorSpec("magic")

    def test_psnr_requires_threshold(self):
        with pytest.raises(ValueError):
            EvaluatorSpec("psnr_threshold")
        EvaluatorSpec("psnr_threshold", {"threshold_db": 30.0})

    def test_external_requires_endpoint(self):
        with pytest.raises(ValueError):
            EvaluatorSpec("external_classifier")
        EvaluatorSpec("external_classifier", {"cmd": ["prog"]})
        EvaluatorSpec("external_classifier", {"host": "h", "port": 1})

    def test_evaluator_id_stable(self):
        a = EvaluatorSpec("proxy_classifier", {"classes": 5})
        b = EvaluatorSpec("proxy_classifier", {"classes": 5})
        assert a.evaluator_id() == b.evaluator_id()


class TestCompressionRate:
    def test_byte_count_arithmetic_single_image(self, rng):
        img = random_test_image(rng, 64, 64, smooth=True)
        ds = Dataset(images=[img], labels=np.array([0]), class_count=1)
        q = _all(16)
        got = compression_rate(ds, q)
        stream = encode(img, q, q, subsampling="4:2:0")
        assert ds.raw_bytes == 64 * 64 * 3 == 12288
        assert got == 12288 / stream.size_bytes

    def test_coarser_table_higher_rate(self, small_dataset):
        assert compression_rate(small_dataset, _all(255)) > compression_rate(
            small_dataset, _all(1)
        )

    def test_invariant_under_replication_and_permutation(self, rng):
        imgs = [random_test_image(rng, 64, 64, smooth=True) for _ in range(3)]
        ds = Dataset(images=imgs, labels=np.zeros(3, dtype=int), class_count=1)
        doubled = Dataset(images=imgs + imgs, labels=np.zeros(6, dtype=int),
                          class_count=1)
        permuted = Dataset(images=imgs[::-1], labels=np.zeros(3, dtype=int),
                           class_count=1)
        q = _all(40)
        assert compression_rate(ds, q) == compression_rate(doubled, q)
        assert compression_rate(ds, q) == compression_rate(permuted, q)


class TestEvaluate:
    def test_oracle_evaluator_gives_accuracy_one(self, small_dataset):
        p = evaluate(small_dataset, _all(100), EvaluatorSpec("oracle"))
        assert p.accuracy == 1.0

    def test_near_lossless_proxy_matches_uncompressed(self, small_dataset):
        proxy = ProxyClassifier(small_dataset.class_count)
        base = (proxy.classify_batch(small_dataset.images)
                == small_dataset.labels).mean()
        p = evaluate(small_dataset, _all(1), EvaluatorSpec("proxy_classifier"))
        assert p.accuracy == base

    def test_psnr_threshold_evaluator(self, small_dataset):
        # Accuracy is the fraction of images meeting the PSNR floor; a
        # near-lossless table passes a modest floor everywhere.
        p = evaluate(small_dataset, _all(1),
                     EvaluatorSpec("psnr_threshold", {"threshold_db": 35.0}))
        assert p.accuracy == 1.0
        p2 = evaluate(small_dataset, _all(255),
                      EvaluatorSpec("psnr_threshold", {"threshold_db": 60.0}))
        assert p2.accuracy < 1.0

    def test_mean_psnr_recorded_when_enabled(self, small_dataset):
        ev = DatasetEvaluator(small_dataset, EvaluatorSpec("oracle"), with_psnr=True)
        p = ev.evaluate(_all(30))
        ref = np.mean([
            psnr(img, decode(encode(img, _all(30), _all(30))))
            for img in small_dataset.images
        ])
        assert p.mean_psnr == pytest.approx(ref, abs=1e-12)

    def test_golden_regression_quality50_on_shipped_corpus(self):
        # Pinned from the first verified build of the 500-image corpus.
        ds = synthetic_dataset(
            SyntheticCorpusSpec(n_classes=20, images_per_class=25, seed=7)
        )
        assert ds.content_hash == (
            "238fbd82e3d5f52fb58fa7cbf88274a4a483a2401efef19fa3a49822384eddb6"
        )
        ev = DatasetEvaluator(ds, EvaluatorSpec("proxy_classifier"),
                              chroma_policy="standard")
        p = ev.evaluate(scale_by_quality(standard_table("luma"), 50))
        assert p.compression_rate == 9.09224096214378
        assert p.accuracy == 0.972


class TestFastPathEquivalence:
    @pytest.mark.parametrize("subsampling", ["4:2:0", "4:4:4"])
    @pytest.mark.parametrize("policy", ["tuned", "standard"])
    def test_sizes_and_decodes_match_streaming_codec(self, rng, subsampling, policy):
        # Mixed odd sizes force padding, cropping, and geometry grouping.
        imgs = [
            random_test_image(rng, 24, 24, smooth=True),
            random_test_image(rng, 17, 29),
            random_test_image(rng, 24, 24),
            random_test_image(rng, 40, 9, smooth=True),
        ]
        ds = Dataset(images=imgs, labels=np.zeros(4, dtype=int), class_count=1)
        ev = DatasetEvaluator(ds, EvaluatorSpec("oracle"),
                              chroma_policy=policy, subsampling=subsampling,
                              with_psnr=True)
        for _ in range(3):
            q = QTable(rng.integers(1, 256, (8, 8)))
            cq = q if policy == "tuned" else standard_table("chroma")
            sizes, _, mean_psnr = ev.evaluate_detailed(q)
            ref_sizes = []
            ref_psnr = []
            for img in imgs:
                stream = encode(img, q, cq, subsampling=subsampling)
                ref_sizes.append(stream.size_bytes)
                ref_psnr.append(psnr(img, decode(stream)))
            assert sizes.tolist() == ref_sizes
            assert mean_psnr == pytest.approx(np.mean(ref_psnr), abs=1e-12)


class TestCache:
    def test_hit_skips_computation(self, small_dataset, tmp_path):
        ev = DatasetEvaluator(small_dataset, EvaluatorSpec("proxy_classifier"),
                              cache_dir=tmp_path / "cache")
        q = _all(33)
        first = ev.evaluate(q)
        ev._evaluate_uncached = None  # any recomputation would now crash
        second = ev.evaluate(q)
        assert second == first

    def test_cache_shared_across_instances(self, small_dataset, tmp_path):
        spec = EvaluatorSpec("proxy_classifier")
        a = DatasetEvaluator(small_dataset, spec, cache_dir=tmp_path / "c")
        p1 = a.evaluate(_all(44))
        b = DatasetEvaluator(small_dataset, spec, cache_dir=tmp_path / "c")
        b._evaluate_uncached = None
        assert b.evaluate(_all(44)) == p1

    def test_corrupt_entry_recomputed(self, small_dataset, tmp_path):
        cache_dir = tmp_path / "c"
        ev = DatasetEvaluator(small_dataset, EvaluatorSpec("proxy_classifier"),
                              cache_dir=cache_dir)
        q = _all(55)
        p1 = ev.evaluate(q)
        for f in cache_dir.glob("*.json"):
            f.write_text("{broken")
        assert ev.evaluate(q) == p1

    def test_different_policies_have_distinct_keys(self, small_dataset, tmp_path):
        q = _all(12)
        a = DatasetEvaluator(small_dataset, EvaluatorSpec("proxy_classifier"),
                             chroma_policy="tuned", cache_dir=tmp_path / "c")
        b = DatasetEvaluator(small_dataset, EvaluatorSpec("proxy_classifier"),
                             chroma_policy="standard", cache_dir=tmp_path / "c")
        a.evaluate(q)
        b.evaluate(q)
        assert len(list((tmp_path / "c").glob("*.json"))) == 2

"""
Tests for the stage registry, orchestrator and default rectification stages.

Run with: pytest test_pipeline.py -v
"""

from typing import List

import numpy as np
import pytest

from rectifier import SegConfig
from rectifier.errors import ConfigError, PipelineError
from rectifier.geotr import GeoModel, unwarp
from rectifier.illtr import IllModel, correct_illumination
from rectifier.pipeline import PipelineBuilder, Stage, StageRegistry, create_default_registry
from rectifier.segmenter import SegModel


class EchoStage(Stage):
    def __init__(self, name: str, deps: List[str] = ()):
        self._name = name
        self._deps = list(deps)

    @property
    def name(self) -> str:
        return self._name

    @property
    def dependencies(self) -> List[str]:
        return self._deps

    def process(self, images, context):
        seen = [dep for dep in self._deps if context.get_all_stage_results(dep)]
        return {name: seen for name in images}


@pytest.fixture
def seg16():
    return SegModel(SegConfig(image_size=16, channels=(2, 2, 2), min_area=0.0))


class TestStageRegistry:
    """Registration and ordering."""

    def test_dependencies_run_first(self):
        registry = StageRegistry().register(EchoStage("c", ["b"])).register(EchoStage("b", ["a"]))
        registry.register(EchoStage("a"))
        assert registry.resolve_order() == ["a", "b", "c"]

    def test_requested_stage_pulls_dependencies(self):
        registry = StageRegistry().register(EchoStage("a")).register(EchoStage("b", ["a"]))
        registry.register(EchoStage("x"))
        assert registry.resolve_order(["b"]) == ["a", "b"]

    def test_ties_follow_registration_order(self):
        registry = StageRegistry().register(EchoStage("z")).register(EchoStage("y"))
        assert registry.resolve_order() == ["z", "y"]

    def test_duplicate_name(self):
        registry = StageRegistry().register(EchoStage("a"))
        with pytest.raises(ConfigError, match="already registered"):
            registry.register(EchoStage("a"))

    def test_unknown_stage(self):
        with pytest.raises(ConfigError, match="Unknown stage"):
            StageRegistry().register(EchoStage("a")).resolve_order(["b"])

    def test_missing_dependency(self):
        with pytest.raises(ConfigError, match="not registered"):
            StageRegistry().register(EchoStage("a", ["ghost"])).resolve_order()

    def test_cycle(self):
        registry = StageRegistry().register(EchoStage("a", ["b"])).register(EchoStage("b", ["a"]))
        with pytest.raises(ConfigError, match="Circular"):
            registry.resolve_order()


class TestOrchestrator:
    """Running stages through the builder."""

    def test_results_are_merged_per_image(self):
        registry = StageRegistry().register(EchoStage("a")).register(EchoStage("b", ["a"]))
        results = PipelineBuilder().with_stages(registry).build().run({"p": np.zeros((2, 2, 3))})
        assert results["p"] == {"a": [], "b": ["a"]}

    def test_context_metadata(self):
        registry = StageRegistry().register(EchoStage("a")).register(EchoStage("b", ["a"]))
        context = PipelineBuilder().with_stages(registry).build().run_with_context({"p": np.zeros(1)}, ["a"])
        assert context.get_metadata("stages_executed") == ["a"]
        assert context.get_all_stage_results("b") == {}

    def test_geometric_model_required(self):
        with pytest.raises(ConfigError, match="with_geo"):
            PipelineBuilder().build()

    def test_unwarping_stage_matches_unwarp(self, tiny_geo_config, rng):
        geo = GeoModel(tiny_geo_config)
        image = rng.uniform(size=(24, 20, 3)).astype(np.float32)
        results = PipelineBuilder().with_geo(geo).build().run({"page": image})
        expected, bmap = unwarp(image, geo)
        np.testing.assert_array_equal(results["page"]["unwarping"].image, expected)
        np.testing.assert_array_equal(results["page"]["unwarping"].bmap.coords, bmap.coords)

    def test_full_pipeline(self, tiny_geo_config, tiny_ill_config, seg16, rng):
        geo, ill = GeoModel(tiny_geo_config), IllModel(tiny_ill_config)
        image = rng.uniform(size=(24, 20, 3)).astype(np.float32)
        pipeline = PipelineBuilder().with_geo(geo).with_segmenter(seg16, 0.01).with_illumination(ill).build()
        assert pipeline.registry.resolve_order() == ["segmentation", "unwarping", "illumination"]
        assert pipeline.final_stage() == "illumination"

        stages = pipeline.run({"page": image})["page"]
        unwarped, _ = unwarp(image, geo, seg16, tau=0.01)
        np.testing.assert_array_equal(stages["unwarping"].image, unwarped)
        np.testing.assert_allclose(stages["illumination"], correct_illumination(unwarped, ill))

    def test_segmenter_at_other_resolution(self, tiny_geo_config, rng):
        geo = GeoModel(tiny_geo_config)
        seg = SegModel(SegConfig(image_size=8, channels=(2, 2, 2), min_area=0.0))
        image = rng.uniform(size=(24, 20, 3)).astype(np.float32)
        stages = PipelineBuilder().with_geo(geo).with_segmenter(seg, 0.01).build().run({"page": image})["page"]
        assert stages["segmentation"].shape == (16, 16)
        unwarped, _ = unwarp(image, geo, seg, tau=0.01)
        np.testing.assert_array_equal(stages["unwarping"].image, unwarped)

    def test_segmenter_skipped_without_preprocessing(self, tiny_geo_config, seg16):
        geo = GeoModel(tiny_geo_config.model_copy(update={"use_preprocessing": False}))
        assert create_default_registry(geo, seg16).list_stages() == ["unwarping"]

    def test_blank_frame_fails_segmentation(self, tiny_geo_config):
        seg = SegModel(SegConfig(image_size=16, channels=(2, 2, 2), min_area=0.5))
        pipeline = PipelineBuilder().with_geo(GeoModel(tiny_geo_config)).with_segmenter(seg, 0.9999).build()
        with pytest.raises(PipelineError):
            pipeline.run({"page": np.zeros((16, 16, 3), dtype=np.float32)})

"""
Pipeline Orchestrator

The thin coordination layer that runs stages in order.

Design Philosophy:
- This file never contains rectification logic
- It resolves stage order and runs stages
- All image processing lives in stages and the model packages
"""

from datetime import datetime
import time
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import ConfigError
from .interfaces import PipelineContext
from .registry import StageRegistry, create_default_registry


class PipelineOrchestrator:
    """
    Runs stages in dependency order.

    Usage:
        orchestrator = PipelineOrchestrator(registry)

        results = orchestrator.run({"page": image})
        rectified = results["page"]["unwarping"].image

        # Stop after unwarping (dependencies auto-included)
        results = orchestrator.run(images, stages=["unwarping"])
    """

    def __init__(self, registry: StageRegistry, verbose: bool = False):
        self.registry = registry
        self.verbose = verbose

    def run(
        self,
        images: Dict[str, np.ndarray],
        stages: Optional[List[str]] = None,
    ) -> Dict[str, Dict[str, Any]]:
        """
        Run the pipeline on named images.

        Returns:
            Dict mapping image name -> {stage_name -> stage_output}
        """
        return self.run_with_context(images, stages).get_merged_results()

    def run_with_context(
        self,
        images: Dict[str, np.ndarray],
        stages: Optional[List[str]] = None,
    ) -> PipelineContext:
        """Run the pipeline and return the full context, metadata included."""
        execution_order = self.registry.resolve_order(stages)

        if self.verbose:
            self._log(f"Pipeline: {' → '.join(execution_order)}")
            self._log(f"Processing {len(images)} images")

        context = PipelineContext()
        context.set_metadata("start_time", datetime.now().isoformat())
        context.set_metadata("stages_requested", stages)
        context.set_metadata("stages_executed", execution_order)

        for stage_name in execution_order:
            stage = self.registry.get(stage_name)
            if self.verbose:
                self._log(f"Running: {stage_name}")
            started = time.perf_counter()

            context.set_stage_results(stage_name, stage.process(images, context))

            if self.verbose:
                self._log(f"✓ {stage_name} complete ({time.perf_counter() - started:.2f}s)")

        context.set_metadata("end_time", datetime.now().isoformat())
        return context

    def final_stage(self, stages: Optional[List[str]] = None) -> str:
        return self.registry.resolve_order(stages)[-1]

    def _log(self, message: str) -> None:
        print(f"[Pipeline] {message}")


class PipelineBuilder:
    """
    Fluent builder for pipeline configuration.

    Usage:
        pipeline = (
            PipelineBuilder()
            .with_geo(geo_model)
            .with_segmenter(seg_model)      # optional
            .with_illumination(ill_model)   # optional
            .threads(4)
            .build()
        )
    """

    def __init__(self):
        self._geo = None
        self._seg = None
        self._ill = None
        self._tau: Optional[float] = None
        self._threads = 1
        self._registry: Optional[StageRegistry] = None
        self._verbose = False

    def with_geo(self, geo) -> "PipelineBuilder":
        self._geo = geo
        return self

    def with_segmenter(self, seg, tau: Optional[float] = None) -> "PipelineBuilder":
        self._seg = seg
        self._tau = tau
        return self

    def with_illumination(self, ill) -> "PipelineBuilder":
        self._ill = ill
        return self

    def with_stages(self, registry: StageRegistry) -> "PipelineBuilder":
        """Use a prepared registry instead of the default stages."""
        self._registry = registry
        return self

    def threads(self, count: int) -> "PipelineBuilder":
        self._threads = count
        return self

    def verbose(self, enabled: bool = True) -> "PipelineBuilder":
        self._verbose = enabled
        return self

    def build(self) -> PipelineOrchestrator:
        if self._registry is not None:
            registry = self._registry
        else:
            if self._geo is None:
                raise ConfigError("A geometric model is required. Use .with_geo()")
            registry = create_default_registry(self._geo, self._seg, self._ill, self._tau, self._threads)
        return PipelineOrchestrator(registry=registry, verbose=self._verbose)

"""
Stage Registry

Registers rectification stages and orders them by their dependencies.
Stages are registered explicitly; ties in the topological order keep
registration order, so the execution plan is deterministic.
"""

from typing import Dict, List, Optional, Set

from ..errors import ConfigError
from .interfaces import Stage


class StageRegistry:
    """
    Registry for pipeline stages.

    Usage:
        registry = StageRegistry()
        registry.register(SegmentationStage(seg)).register(UnwarpingStage(geo))

        order = registry.resolve_order()               # ["segmentation", "unwarping"]
        order = registry.resolve_order(["unwarping"])  # dependencies included
    """

    def __init__(self):
        self._stages: Dict[str, Stage] = {}

    def register(self, stage: Stage) -> "StageRegistry":
        """Register a stage. Returns self for chaining."""
        if stage.name in self._stages:
            raise ConfigError(f"Stage '{stage.name}' is already registered")
        self._stages[stage.name] = stage
        return self

    def get(self, name: str) -> Stage:
        if name not in self._stages:
            raise ConfigError(f"Unknown stage: '{name}'. Available stages: {list(self._stages)}")
        return self._stages[name]

    def list_stages(self) -> List[str]:
        return list(self._stages)

    def __contains__(self, name: str) -> bool:
        return name in self._stages

    def resolve_order(
        self,
        stage_names: Optional[List[str]] = None,
        include_dependencies: bool = True,
    ) -> List[str]:
        """
        Resolve execution order via topological sort.

        Args:
            stage_names: Stages to run (None = all registered stages)
            include_dependencies: Pull in the dependencies of requested stages

        Raises:
            ConfigError: Unknown stage, unregistered dependency, or cycle
        """
        if stage_names is None:
            stage_names = list(self._stages)

        for name in stage_names:
            if name not in self._stages:
                raise ConfigError(f"Unknown stage: '{name}'. Available stages: {list(self._stages)}")

        to_include = set(stage_names)
        if include_dependencies:
            to_process = list(to_include)
            while to_process:
                name = to_process.pop()
                for dep in self._stages[name].dependencies:
                    if dep not in self._stages:
                        raise ConfigError(f"Stage '{name}' depends on '{dep}', but '{dep}' is not registered")
                    if dep not in to_include:
                        to_include.add(dep)
                        to_process.append(dep)

        graph = {name: set(self._stages[name].dependencies) & to_include for name in to_include}
        return self._topological_sort(graph)

    def _topological_sort(self, graph: Dict[str, Set[str]]) -> List[str]:
        """Kahn's algorithm; ties broken by registration order."""
        rank = {name: i for i, name in enumerate(self._stages)}
        in_degree = {node: len(deps) for node, deps in graph.items()}
        queue = sorted((node for node, degree in in_degree.items() if degree == 0), key=rank.get)
        result = []

        while queue:
            current = queue.pop(0)
            result.append(current)
            for node in sorted(graph, key=rank.get):
                if current in graph[node]:
                    in_degree[node] -= 1
                    if in_degree[node] == 0:
                        queue.append(node)

        if len(result) != len(graph):
            remaining = set(graph) - set(result)
            raise ConfigError(f"Circular dependency detected among stages: {sorted(remaining)}")
        return result


def create_default_registry(geo, seg=None, ill=None, tau: Optional[float] = None, threads: int = 1) -> StageRegistry:
    """
    Registry for the standard pipeline: segmentation → unwarping → illumination.

    Stages whose model is missing are left out; unwarping then runs without
    the preprocessing dependency, and the pipeline stops after unwarping.
    """
    from ..stages import IlluminationStage, SegmentationStage, UnwarpingStage

    registry = StageRegistry()
    use_segmentation = seg is not None and geo.config.use_preprocessing
    if use_segmentation:
        registry.register(SegmentationStage(seg, tau, working_size=geo.config.image_size))
    registry.register(UnwarpingStage(geo, use_segmentation=use_segmentation))
    if ill is not None:
        registry.register(IlluminationStage(ill, threads=threads))
    return registry

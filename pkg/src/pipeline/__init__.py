"""
Pipeline package for KG Path Forge.

Subpackages:
- config: run configuration (PipelineConfig)
- core: graph, concept matching, path sampling, task building, orchestration
- io: JSONL, notes, PathSet and tensor bundle formats, run reports
- eval: metrics, oracle, baseline judge, evaluation
- objectives: toy policy, training objectives, gradient checks
- merge: weighted parameter averaging
- logging, utils: shared helpers
"""

from src.__version__ import __version__

__all__ = [
    "__version__",
    "config",
    "core",
    "io",
    "eval",
    "objectives",
    "merge",
    "logging",
    "utils",
]

"""
Exception hierarchy for the collage data pipeline
"""

from typing import List, Optional


class PipelineError(Exception):
    """Base class for every error raised by the pipeline"""


class AssetError(PipelineError):
    """Asset loading, validation or cutout failure"""


class SceneError(PipelineError):
    """Invalid placement or scene sampling failure"""


class RenderError(PipelineError):
    """Rasterization failure (oversized transform, unresolvable asset)"""


class PromptError(PipelineError):
    """Prompt, text spec or drag encoding failure"""


class DatasetError(PipelineError):
    """Shard writing or run validation failure"""


class ConfigError(PipelineError):
    """Invalid configuration; carries one message per offending field"""

    def __init__(self, messages: List[str], path: Optional[str] = None):
        self.messages = list(messages)
        self.path = path
        prefix = f"{path}: " if path else ''
        super().__init__(prefix + '; '.join(self.messages))

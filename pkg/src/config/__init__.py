"""
Configuration package.
"""
from typing import Dict, Any, Optional

from .settings import validate_settings
from .pipeline import PipelineConfig, load_pipeline_config

def initialize_config(path: Optional[str] = None) -> Dict[str, Any]:
    """Resolve runtime settings and, when a path is given, the pipeline config."""
    settings = validate_settings()
    settings['PIPELINE'] = load_pipeline_config(path) if path else PipelineConfig()
    return settings

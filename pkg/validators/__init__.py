"""
검증기 패키지

[사용법]
    from validators import MeshValidator, ConfigValidator

    MeshValidator().require(mesh, context=str(path))     # 문제 → 예외, 경고 → 로그
    ok, problems, warnings = ConfigValidator().validate_full(cfg)
"""
from .base_validator import BaseValidator
from .mesh_validator import MeshValidator
from .atlas_validator import AtlasValidator
from .config_validator import ConfigValidator, ReferencedFilesValidator
from .weights_validator import WeightsValidator

__all__ = [
    'BaseValidator',
    'MeshValidator',
    'AtlasValidator',
    'ConfigValidator',
    'ReferencedFilesValidator',
    'WeightsValidator',
]

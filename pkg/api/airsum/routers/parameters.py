from fastapi import APIRouter

from ..config import ExperimentConfig
from ..utils.parameters import (
    ALL_CONFIG_KEYS,
    COLUMN_DESCRIPTIONS,
    COMMAND_COLUMNS,
    COMMAND_KEY_MAPPING,
    CONFIG_KEY_METADATA,
)

router = APIRouter()


@router.get(
    "/parameters/definitions",
    name="parameters:get_definitions",
    tags=["Parameters"],
    summary="Get configuration key definitions",
    description="Returns every configuration key with its default, the keys each command reads and the CSV columns it writes.",
)
async def get_parameter_definitions():
    """
    Get configuration key definitions.

    Returns:
        dict: Key metadata, defaults, command mappings and CSV columns
    """
    defaults = {key: field.default for key, field in ExperimentConfig.model_fields.items()}
    return {
        "command_key_mapping": COMMAND_KEY_MAPPING,
        "key_metadata": CONFIG_KEY_METADATA,
        "all_config_keys": ALL_CONFIG_KEYS,
        "defaults": defaults,
        "command_columns": COMMAND_COLUMNS,
        "column_descriptions": COLUMN_DESCRIPTIONS,
    }

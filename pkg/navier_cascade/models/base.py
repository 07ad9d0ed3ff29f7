from pydantic import BaseModel, ConfigDict


class CascadeBaseModel(BaseModel):
    """Base model for all configuration and report models"""
    model_config = ConfigDict(extra='forbid')

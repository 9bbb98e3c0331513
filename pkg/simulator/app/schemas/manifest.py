"""
运行清单
"""
from typing import List
from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """输出目录的清单：场景摘要 + 工具版本 + 文件列表"""
    scenario_digest: str = Field(..., description="场景文件字节的 SHA-256")
    tool_version: str
    files: List[str]

    class Config:
        frozen = True

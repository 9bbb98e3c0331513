"""
场景文件的结构化表示（解析后、建模前）
"""
from typing import List, Optional
from pydantic import BaseModel, Field


class FileEntry(BaseModel):
    """一行 key = value"""
    key: str
    value: str
    line: int = Field(..., description="所在行号（从 1 开始）")

    class Config:
        frozen = True


class FileSection(BaseModel):
    """[section] 及其条目，条目保持文件中的顺序"""
    name: str
    line: int
    entries: List[FileEntry] = Field(default_factory=list)

    class Config:
        frozen = True

    def get(self, key: str) -> Optional[FileEntry]:
        for entry in self.entries:
            if entry.key == key:
                return entry
        return None

    def all(self, key: str) -> List[FileEntry]:
        return [e for e in self.entries if e.key == key]


class ScenarioFile(BaseModel):
    """结构校验通过的场景文件"""
    sections: List[FileSection]

    class Config:
        frozen = True

    def section(self, name: str) -> Optional[FileSection]:
        for section in self.sections:
            if section.name == name:
                return section
        return None

    def sections_named(self, name: str) -> List[FileSection]:
        return [s for s in self.sections if s.name == name]

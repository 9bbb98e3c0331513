"""
文件写入工具
"""
import hashlib
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence


def atomic_write_text(path: Path, text: str) -> None:
    """先写临时文件再 rename，避免留下半截输出"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    """拼接 CSV 文本（字段已格式化，不含逗号），行尾统一为 \\n"""
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def sha256_bytes(data: bytes) -> str:
    """内容摘要（与平台无关）"""
    return hashlib.sha256(data).hexdigest()

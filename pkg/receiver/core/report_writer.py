"""
报告输出
CSV / JSON 两种格式，文件开头是 “#” 注释形式的来源信息（工具版本、配置哈希、种子、命令），
不含时间戳，相同输入得到逐字节相同的文件。浮点数用 repr 输出，读回无损。
CSV 中字符串一律加引号，不加引号的空字段表示 None。
"""
import csv
import io
import logging
import math
import re
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from receiver import TOOL_NAME, __version__
from utils import DomainError, json

logger = logging.getLogger("ulprx.report_writer")

FORMATS = ("csv", "json")

_CSV_FIELD = re.compile(r'"((?:[^"]|"")*)"|([^,"]*)')


@dataclass
class Provenance:
    config_hash: str
    seed: int
    command: str
    tool: str = TOOL_NAME
    version: str = __version__

    def header_lines(self) -> List[str]:
        return [
            f"# tool: {self.tool} {self.version}",
            f"# config_hash: {self.config_hash[:16]}",
            f"# seed: {self.seed}",
            f"# command: {self.command}",
        ]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "tool": self.tool, "version": self.version,
            "config_hash": self.config_hash[:16], "seed": self.seed, "command": self.command,
        }


@dataclass
class ReportTable:
    """一张输出表：列名 + 行；meta 只进 JSON"""
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def add_row(self, values: Union[Sequence[Any], Dict[str, Any]]) -> None:
        if isinstance(values, dict):
            values = [values.get(c) for c in self.columns]
        if len(values) != len(self.columns):
            raise DomainError(f"行长度 {len(values)} 与列数 {len(self.columns)} 不一致", field="rows")
        self.rows.append(list(values))

    def records(self) -> List[Dict[str, Any]]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def parse_value(text: str) -> Any:
    """format_value 的逆：整数、浮点、布尔、空值，其余保持字符串"""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _json_value(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return repr(float(value))
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def _csv_cell(value: Any) -> str:
    text = format_value(value)
    if isinstance(value, (str, Enum)):
        return '"' + text.replace('"', '""') + '"'
    return text


def _split_csv_line(line: str) -> List[Tuple[str, bool]]:
    """拆分一行，返回 (文本, 是否带引号)"""
    cells: List[Tuple[str, bool]] = []
    pos = 0
    while True:
        match = _CSV_FIELD.match(line, pos)
        if match.group(1) is not None:
            cells.append((match.group(1).replace('""', '"'), True))
        else:
            cells.append((match.group(2), False))
        pos = match.end()
        if pos >= len(line):
            return cells
        if line[pos] != ",":
            raise DomainError(f"第 {pos} 个字符处 CSV 格式错误: {line!r}", field="csv")
        pos += 1


def render_csv(table: ReportTable, provenance: Provenance) -> str:
    buffer = io.StringIO()
    for line in provenance.header_lines():
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        buffer.write(",".join(_csv_cell(v) for v in row) + "\n")
    return buffer.getvalue()


def render_json(table: ReportTable, provenance: Provenance) -> str:
    document = {
        "provenance": provenance.as_dict(),
        "columns": table.columns,
        "rows": [_json_value(r) for r in table.records()],
    }
    if table.meta:
        document["meta"] = _json_value(table.meta)
    return json.dumps(document, indent=True) + "\n"


def render(table: ReportTable, provenance: Provenance, fmt: str = "csv") -> str:
    if fmt not in FORMATS:
        raise DomainError(f"不支持的格式 {fmt}，可选 {FORMATS}", field="format")
    return render_csv(table, provenance) if fmt == "csv" else render_json(table, provenance)


def write_report(table: ReportTable, provenance: Provenance, fmt: str = "csv",
                 out: Optional[Union[str, Path]] = None, stream: Optional[TextIO] = None) -> str:
    """写到文件（out）或标准输出，返回写出的文本"""
    text = render(table, provenance, fmt)
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"已写出 {len(table.rows)} 行到 {path}")
    else:
        (stream or sys.stdout).write(text)
    return text


def read_csv(source: Union[str, Path, TextIO]) -> Tuple[Dict[str, str], List[str], List[List[Any]]]:
    """读回 render_csv 的输出：(来源信息, 列名, 已解析的行)"""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        with open(source, "r", encoding="utf-8") as f:
            text = f.read()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()

    provenance: Dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            provenance[key.strip()] = value.strip()
        else:
            body.append(line)
    while body and not body[0]:
        body.pop(0)
    if not body:
        return provenance, [], []
    columns = next(csv.reader(body[:1]))
    rows = [
        [cell if quoted else parse_value(cell) for cell, quoted in _split_csv_line(line)]
        for line in body[1:]
    ]
    return provenance, columns, rows


__all__ = [
    'Provenance', 'ReportTable', 'format_value', 'parse_value',
    'render_csv', 'render_json', 'render', 'write_report', 'read_csv', 'FORMATS',
]

"""
MedRadio 混频器优先 OOK 接收机：建模、仿真与设计空间探索
"""

__version__ = "0.3.0"
TOOL_NAME = "ulprx"

__all__ = ['__version__', 'TOOL_NAME']

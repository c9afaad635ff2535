"""Bundled ``.bfs`` benchmark corpus."""

from pathlib import Path

SUITE_DIR = Path(__file__).parent
REPAIR_DIR = SUITE_DIR / "repair"

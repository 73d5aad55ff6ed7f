"""Trajectory rendering: ASCII maps and SVG documents.

Both formats draw the reachable grid with optional overlays for the
demonstration path, an agent path, and start/target markers. Output is a
pure function of the inputs, so identical calls yield identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scene import Cell, House

KNOWN_OVERLAYS = ("demo", "agent", "start", "target")

ASCII_UNREACHABLE = "#"
ASCII_REACHABLE = "."
ASCII_DEMO = "*"
ASCII_AGENT = "+"
ASCII_BOTH = "x"
ASCII_START = "S"
ASCII_TARGET = "T"

_SVG_CELL_PX = 16


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderSpec:
    format: str = "ascii"  # "ascii" | "svg"
    overlays: frozenset[str] = frozenset(KNOWN_OVERLAYS)

    def __post_init__(self):
        if self.format not in ("ascii", "svg"):
            raise RenderError(f"unknown format {self.format!r}")
        unknown = set(self.overlays) - set(KNOWN_OVERLAYS)
        if unknown:
            raise RenderError(f"unknown overlays {sorted(unknown)}")
        if not self.overlays:
            raise RenderError("at least one overlay must be selected")


def _check_cells(house: House, cells, label: str):
    for cell in cells or ():
        if not house.grid.in_bounds(tuple(cell)):
            raise RenderError(f"{label} cell {tuple(cell)} outside the grid")


def render(house: House, spec: RenderSpec, *,
           demo_path: list[Cell] | None = None,
           agent_path: list[Cell] | None = None,
           start_cell: Cell | None = None,
           target_cell: Cell | None = None) -> str:
    """Render the house map with the overlays selected in ``spec``."""
    _check_cells(house, demo_path, "demo path")
    _check_cells(house, agent_path, "agent path")
    if start_cell is not None:
        _check_cells(house, [start_cell], "start")
    if target_cell is not None:
        _check_cells(house, [target_cell], "target")
    if spec.format == "ascii":
        return _render_ascii(house, spec, demo_path, agent_path, start_cell, target_cell)
    return _render_svg(house, spec, demo_path, agent_path, start_cell, target_cell)


def _render_ascii(house, spec, demo_path, agent_path, start_cell, target_cell) -> str:
    grid = house.grid
    demo = set(map(tuple, demo_path or ())) if "demo" in spec.overlays else set()
    agent = set(map(tuple, agent_path or ())) if "agent" in spec.overlays else set()
    lines = []
    for row in range(grid.height - 1, -1, -1):  # north at the top
        chars = []
        for col in range(grid.width):
            cell = (col, row)
            ch = ASCII_REACHABLE if cell in grid.reachable else ASCII_UNREACHABLE
            if cell in demo and cell in agent:
                ch = ASCII_BOTH
            elif cell in demo:
                ch = ASCII_DEMO
            elif cell in agent:
                ch = ASCII_AGENT
            if "start" in spec.overlays and cell == start_cell:
                ch = ASCII_START
            if "target" in spec.overlays and cell == target_cell:
                ch = ASCII_TARGET
            chars.append(ch)
        lines.append("".join(chars))
    return "\n".join(lines) + "\n"


def _svg_xy(grid, cell: Cell) -> tuple[int, int]:
    # Flip rows so north is up; return the cell's top-left pixel corner.
    x = cell[0] * _SVG_CELL_PX
    y = (grid.height - 1 - cell[1]) * _SVG_CELL_PX
    return x, y


def _polyline(grid, cells, color: str, dash: str = "") -> str:
    points = " ".join(
        f"{x + _SVG_CELL_PX // 2},{y + _SVG_CELL_PX // 2}"
        for x, y in (_svg_xy(grid, tuple(c)) for c in cells))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="3"{extra} />')


def _render_svg(house, spec, demo_path, agent_path, start_cell, target_cell) -> str:
    grid = house.grid
    width_px = grid.width * _SVG_CELL_PX
    height_px = grid.height * _SVG_CELL_PX
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px}" '
        f'height="{height_px}" viewBox="0 0 {width_px} {height_px}">',
        f'<rect width="{width_px}" height="{height_px}" fill="#222222" />',
    ]
    for col in range(grid.width):
        for row in range(grid.height):
            if (col, row) in grid.reachable:
                x, y = _svg_xy(grid, (col, row))
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{_SVG_CELL_PX}" '
                    f'height="{_SVG_CELL_PX}" fill="#f2f2f2" stroke="#cccccc" '
                    'stroke-width="1" />')
    if "demo" in spec.overlays and demo_path:
        parts.append(_polyline(grid, demo_path, "#2a7de1"))
    if "agent" in spec.overlays and agent_path:
        parts.append(_polyline(grid, agent_path, "#e1592a", dash="4 3"))
    if "start" in spec.overlays and start_cell is not None:
        x, y = _svg_xy(grid, start_cell)
        cx, cy = x + _SVG_CELL_PX // 2, y + _SVG_CELL_PX // 2
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="5" fill="#1f9d3a" />')
    if "target" in spec.overlays and target_cell is not None:
        x, y = _svg_xy(grid, target_cell)
        cx, cy = x + _SVG_CELL_PX // 2, y + _SVG_CELL_PX // 2
        parts.append(
            f'<circle cx="{cx}" cy="{cy}" r="6" fill="none" stroke="#d12771" '
            'stroke-width="3" />')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

"""Table extraction and span-resolved structure queries.

Candidate documents carry tables either as pipe-style markdown or as HTML.
Both are parsed into a ``TableGrid``: a rectangular occupancy matrix where
every (row, col) slot points at the cell that owns it, so rowspan/colspan
structure survives and directional lookups can skip over a cell's own span.
Cell text stays raw here; normalization happens at comparison time.
"""

from __future__ import annotations

import html
from dataclasses import dataclass
from enum import Enum
from html.parser import HTMLParser
from typing import Optional

from mdbench.normalize import is_pipe_table_line, parse_pipe_table


class RelationKind(str, Enum):
    UP = "up"
    DOWN = "down"
    LEFT = "left"
    RIGHT = "right"
    TOP_HEADING = "top_heading"
    LEFT_HEADING = "left_heading"


RELATION_KINDS = tuple(k.value for k in RelationKind)

_DIRECTIONS = {
    RelationKind.UP: (-1, 0),
    RelationKind.DOWN: (1, 0),
    RelationKind.LEFT: (0, -1),
    RelationKind.RIGHT: (0, 1),
}


@dataclass(frozen=True)
class Cell:
    text: str
    row: int
    col: int
    rowspan: int = 1
    colspan: int = 1


class TableGrid:
    """Rectangular grid of slots, each owned by exactly one cell."""

    def __init__(self, slots: list[list[Cell]], header_rows: int = 0):
        if not slots or not slots[0]:
            raise ValueError("a table grid needs at least one row and column")
        self._slots = slots
        self.n_rows = len(slots)
        self.n_cols = len(slots[0])
        self.header_rows = header_rows

    def cell_at(self, row: int, col: int) -> Cell:
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise IndexError(f"slot ({row}, {col}) outside {self.n_rows}x{self.n_cols} grid")
        return self._slots[row][col]

    def text_at(self, row: int, col: int) -> str:
        return self.cell_at(row, col).text

    def is_origin(self, row: int, col: int) -> bool:
        cell = self.cell_at(row, col)
        return cell.row == row and cell.col == col

    def origins(self) -> list[Cell]:
        seen: list[Cell] = []
        for r in range(self.n_rows):
            for c in range(self.n_cols):
                if self.is_origin(r, c):
                    seen.append(self._slots[r][c])
        return seen

    def signature(self) -> tuple:
        """Structure fingerprint: dimensions plus per-slot (text, origin)."""
        return (
            self.n_rows,
            self.n_cols,
            tuple(
                tuple((self._slots[r][c].text, self.is_origin(r, c)) for c in range(self.n_cols))
                for r in range(self.n_rows)
            ),
        )

    def to_html(self) -> str:
        parts = ["<table>"]
        for r in range(self.n_rows):
            parts.append("<tr>")
            for c in range(self.n_cols):
                cell = self._slots[r][c]
                if cell.row != r or cell.col != c:
                    continue
                tag = "th" if r < self.header_rows else "td"
                attrs = ""
                if cell.rowspan > 1:
                    attrs += f' rowspan="{cell.rowspan}"'
                if cell.colspan > 1:
                    attrs += f' colspan="{cell.colspan}"'
                parts.append(f"<{tag}{attrs}>{html.escape(cell.text)}</{tag}>")
            parts.append("</tr>")
        parts.append("</table>")
        return "".join(parts)


_RawCell = tuple[str, int, int]  # text, rowspan, colspan


def _build_grid(rows: list[list[_RawCell]], header_rows: int) -> Optional[TableGrid]:
    n_rows = len(rows)
    if n_rows == 0:
        return None
    occupied: dict[tuple[int, int], Cell] = {}
    n_cols = 0
    for r, row in enumerate(rows):
        c = 0
        for text, rowspan, colspan in row:
            while (r, c) in occupied:
                c += 1
            rowspan = max(1, min(rowspan, n_rows - r))
            colspan = max(1, colspan)
            cell = Cell(text, r, c, rowspan, colspan)
            for dr in range(rowspan):
                for dc in range(colspan):
                    occupied.setdefault((r + dr, c + dc), cell)
            c += colspan
        n_cols = max(n_cols, c)
    n_cols = max(n_cols, max((col for _, col in occupied), default=-1) + 1)
    if n_cols == 0:
        return None
    slots: list[list[Cell]] = []
    for r in range(n_rows):
        slot_row = []
        for c in range(n_cols):
            cell = occupied.get((r, c))
            if cell is None:
                cell = Cell("", r, c)  # ragged-row padding
            slot_row.append(cell)
        slots.append(slot_row)
    return TableGrid(slots, header_rows=min(header_rows, n_rows))


def _int_attr(attrs: dict[str, Optional[str]], name: str) -> int:
    raw = attrs.get(name)
    if raw is None:
        return 1
    try:
        return max(1, min(int(raw), 1000))
    except ValueError:
        return 1


class _TableParser(HTMLParser):
    """Collects top-level <table> elements; nested tables flatten into text."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.grids: list[TableGrid] = []
        self._rows: list[list[_RawCell]] = []
        self._row_is_header: list[bool] = []
        self._in_table = 0
        self._row: Optional[list[_RawCell]] = None
        self._cell_text: Optional[list[str]] = None
        self._cell_spans = (1, 1)
        self._cell_is_th = False
        self._current_row_header = True

    def _open_row(self) -> None:
        self._close_cell()
        if self._row is not None:
            self._close_row()
        self._row = []
        self._current_row_header = True

    def _close_row(self) -> None:
        self._close_cell()
        if self._row is not None:
            self._rows.append(self._row)
            self._row_is_header.append(self._current_row_header and bool(self._row))
            self._row = None

    def _open_cell(self, attrs: dict[str, Optional[str]], is_th: bool) -> None:
        self._close_cell()
        if self._row is None:
            self._row = []
            self._current_row_header = True
        self._cell_text = []
        self._cell_spans = (_int_attr(attrs, "rowspan"), _int_attr(attrs, "colspan"))
        self._cell_is_th = is_th

    def _close_cell(self) -> None:
        if self._cell_text is not None and self._row is not None:
            text = " ".join("".join(self._cell_text).split())
            self._row.append((text, self._cell_spans[0], self._cell_spans[1]))
            if not self._cell_is_th:
                self._current_row_header = False
        self._cell_text = None

    def handle_starttag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        if tag == "table":
            if self._in_table:
                self._in_table += 1  # nested: keep accumulating text only
            else:
                self._in_table = 1
                self._rows = []
                self._row_is_header = []
                self._row = None
                self._cell_text = None
            return
        if not self._in_table:
            return
        if self._in_table > 1:
            if self._cell_text is not None and tag in ("tr", "td", "th"):
                self._cell_text.append(" ")
            return
        attr_map = dict(attrs)
        if tag == "tr":
            self._open_row()
        elif tag in ("td", "th"):
            self._open_cell(attr_map, tag == "th")
        elif tag == "br" and self._cell_text is not None:
            self._cell_text.append(" ")

    def handle_startendtag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        self.handle_starttag(tag, attrs)

    def handle_endtag(self, tag: str) -> None:
        if not self._in_table:
            return
        if tag == "table":
            self._in_table -= 1
            if self._in_table == 0:
                self._close_row()
                self._finish_table()
            return
        if self._in_table > 1:
            return
        if tag == "tr":
            self._close_row()
        elif tag in ("td", "th"):
            self._close_cell()

    def handle_data(self, data: str) -> None:
        if self._cell_text is not None:
            self._cell_text.append(data)

    def close(self) -> None:
        super().close()
        if self._in_table:
            self._in_table = 0
            self._close_row()
            self._finish_table()

    def _finish_table(self) -> None:
        rows = [r for r in self._rows if r]
        flags = [f for r, f in zip(self._rows, self._row_is_header) if r]
        header_rows = 0
        for flag in flags:
            if flag:
                header_rows += 1
            else:
                break
        grid = _build_grid(rows, header_rows)
        if grid is not None:
            self.grids.append(grid)


def _translate_markdown_tables(doc: str) -> str:
    """Rewrite pipe tables as HTML, tagging markdown header rows as <th>."""
    lines = doc.split("\n")
    out: list[str] = []
    i = 0
    while i < len(lines):
        if is_pipe_table_line(lines[i]):
            j = i
            while j < len(lines) and is_pipe_table_line(lines[j]):
                j += 1
            rows, header_rows = parse_pipe_table(lines[i:j])
            if rows:
                parts = ["<table>"]
                for r, row in enumerate(rows):
                    tag = "th" if r < header_rows else "td"
                    parts.append("<tr>")
                    parts.extend(f"<{tag}>{html.escape(cell)}</{tag}>" for cell in row)
                    parts.append("</tr>")
                parts.append("</table>")
                out.append("".join(parts))
            i = j
        else:
            out.append(lines[i])
            i += 1
    return "\n".join(out)


def extract_tables(doc: str) -> list[TableGrid]:
    """Every table in the document, markdown or HTML, in document order.

    Markdown pipe tables are translated to HTML first, then a single HTML
    pass collects all tables.  Rowspan/colspan expand into the occupancy
    matrix; ragged rows are padded with empty cells on the right.  Tables
    with no rows are skipped.
    """
    parser = _TableParser()
    parser.feed(_translate_markdown_tables(doc))
    parser.close()
    return parser.grids


def relation_lookup(
    grid: TableGrid, origin: tuple[int, int], kind: RelationKind | str
) -> Optional[str]:
    """Text of the cell related to ``origin``, or None at the table edge.

    Directional kinds return the nearest cell past the origin cell's own
    span.  ``top_heading`` scans the origin's column from row 0 down to the
    origin for the first non-empty cell; ``left_heading`` scans the
    origin's row from column 0 rightward.
    """
    kind = RelationKind(kind)
    row, col = origin
    cell = grid.cell_at(row, col)
    if kind in _DIRECTIONS:
        dr, dc = _DIRECTIONS[kind]
        r, c = row + dr, col + dc
        while 0 <= r < grid.n_rows and 0 <= c < grid.n_cols:
            neighbor = grid.cell_at(r, c)
            if neighbor is not cell:
                return neighbor.text
            r, c = r + dr, c + dc
        return None
    if kind is RelationKind.TOP_HEADING:
        for r in range(0, row + 1):
            candidate = grid.cell_at(r, col)
            if candidate is cell:
                continue
            if candidate.text.strip():
                return candidate.text
        return None
    for c in range(0, col + 1):
        candidate = grid.cell_at(row, c)
        if candidate is cell:
            continue
        if candidate.text.strip():
            return candidate.text
    return None

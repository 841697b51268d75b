"""Multi-stage text canonicalization applied before any comparison.

Both sides of every comparison (reference span and candidate document) go
through the same pipeline, so tests measure content differences rather
than formatting choices.  Stages run in a fixed order and each profile
switch enables one stage:

    cleanup_markup -> harmonize_unicode -> project_ascii -> filter_alnum
                   -> squash_spacing -> apply_masks

The pipeline is repeated until the text stops changing.  A single pass is
almost always enough; the repeat guarantees idempotence even when an
earlier stage mints characters a later pass cares about (e.g. NFKC turns
a fullwidth asterisk into a plain one, which only then looks like an
emphasis marker).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

# Bump when any stage's behavior changes; reports carry it so score drift
# across harness versions is detectable.
NORMALIZATION_VERSION = "1"

_MAX_PASSES = 64

_BR_RE = re.compile(r"<br\s*/?\s*>", re.IGNORECASE)
_SPACE_RUN_RE = re.compile(r"[ \t]+")
_PARA_SPLIT_RE = re.compile(r"\n{2,}")

# Emphasis pairs must open/close on the same line with non-space content
# hugging the markers; anything unpaired stays literal.
_EMPHASIS_RES = (
    re.compile(r"\*\*(?=[^\s])([^\n]*?)(?<=[^\s])\*\*"),
    re.compile(r"__(?=[^\s])([^\n]*?)(?<=[^\s])__"),
    re.compile(r"\*(?=[^\s*])([^\n*]*?)(?<=[^\s*])\*"),
    re.compile(r"(?<![0-9A-Za-z_])_(?=[^\s_])([^\n_]*?)(?<=[^\s_])_(?![0-9A-Za-z_])"),
)

_GUILLEMET_OPEN_RE = re.compile("« ?")
_GUILLEMET_CLOSE_RE = re.compile(" ?»")

_CHAR_REPLACEMENTS = str.maketrans(
    {
        "“": '"',  # left double quote
        "”": '"',  # right double quote
        "‘": "'",  # left single quote
        "’": "'",  # right single quote
        "–": "-",  # en dash
        "—": "-",  # em dash
        " ": " ",  # no-break space (NFKC already folds it; kept for clarity)
        "☐": "[ ]",  # empty checkbox
        "☑": "[x]",  # checked checkbox
        "☒": "[x]",  # crossed checkbox
        "✓": "[x]",  # check mark
        "✗": "[x]",  # ballot x
    }
)

_ASCII_EXPANSIONS = {
    "œ": "oe",
    "Œ": "OE",
    "æ": "ae",
    "Æ": "AE",
}


@dataclass(frozen=True)
class NormalizationProfile:
    """Per-test switches selecting which pipeline stages run."""

    markup_cleanup: bool = False
    unicode_harmonize: bool = False
    ascii_projection: bool = False
    alnum_filter: bool = False
    drop_intraline_spaces: bool = False
    drop_linebreaks: bool = False
    masks: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "masks", tuple(self.masks))
        for mask in self.masks:
            if not isinstance(mask, str) or not mask:
                raise ValueError("masks entries must be non-empty strings")

    @classmethod
    def from_json(cls, obj: dict | None) -> "NormalizationProfile":
        """Build a profile from a flat JSON object; absent keys default off."""
        if obj is None:
            return cls()
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown profile keys: {sorted(unknown)}")
        return cls(**obj)

    def to_json(self) -> dict:
        return {
            "markup_cleanup": self.markup_cleanup,
            "unicode_harmonize": self.unicode_harmonize,
            "ascii_projection": self.ascii_projection,
            "alnum_filter": self.alnum_filter,
            "drop_intraline_spaces": self.drop_intraline_spaces,
            "drop_linebreaks": self.drop_linebreaks,
            "masks": list(self.masks),
        }


def _split_table_row(line: str) -> list[str]:
    """Split one pipe-delimited row into stripped cell texts.

    Backslash-escaped pipes stay inside the cell.  Boundary pipes are
    delimiters, not cells.
    """
    stripped = line.strip()
    cells: list[str] = [""]
    escaped = False
    for ch in stripped:
        if escaped:
            cells[-1] += ch
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == "|":
            cells.append("")
        else:
            cells[-1] += ch
    if cells and cells[0].strip() == "":
        cells = cells[1:]
    if cells and stripped.endswith("|") and cells[-1].strip() == "":
        cells = cells[:-1]
    return [c.strip() for c in cells]


_ALIGNMENT_CELL_RE = re.compile(r"^:?-+:?$")


def _is_alignment_row(cells: list[str]) -> bool:
    return bool(cells) and all(_ALIGNMENT_CELL_RE.match(c) for c in cells)


def is_pipe_table_line(line: str) -> bool:
    stripped = line.strip()
    return stripped.startswith("|") and stripped.count("|") >= 2


def parse_pipe_table(lines: list[str]) -> tuple[list[list[str]], int]:
    """Parse a run of pipe-table lines into rows of cells plus a header count.

    The alignment row (``|---|:--:|``) is consumed as structure: it marks
    everything above it as header rows and is never emitted as cells.
    """
    rows: list[list[str]] = []
    header_rows = 0
    for raw in lines:
        cells = _split_table_row(raw)
        if _is_alignment_row(cells):
            if not header_rows:
                header_rows = len(rows)
            continue
        rows.append(cells)
    return rows, header_rows


def _render_table_html(rows: list[list[str]]) -> str:
    parts = ["<table>"]
    for row in rows:
        parts.append("<tr>")
        for cell in row:
            parts.append(f"<td>{cell}</td>")
        parts.append("</tr>")
    parts.append("</table>")
    return "".join(parts)


def translate_tables(text: str) -> str:
    """Rewrite pipe-style markdown tables as single-line HTML tables."""
    lines = text.split("\n")
    out: list[str] = []
    i = 0
    while i < len(lines):
        if is_pipe_table_line(lines[i]):
            j = i
            while j < len(lines) and is_pipe_table_line(lines[j]):
                j += 1
            rows, _ = parse_pipe_table(lines[i:j])
            if rows:
                out.append(_render_table_html(rows))
            i = j
        else:
            out.append(lines[i])
            i += 1
    return "\n".join(out)


def _strip_emphasis(text: str) -> str:
    while True:
        changed = False
        for pattern in _EMPHASIS_RES:
            text, n = pattern.subn(r"\1", text)
            changed = changed or n > 0
        if not changed:
            return text


def _flatten_paragraphs(text: str) -> str:
    """Turn soft line breaks into spaces; keep blank-line paragraph breaks."""
    paragraphs = []
    for para in _PARA_SPLIT_RE.split(text):
        para = _SPACE_RUN_RE.sub(" ", para.replace("\n", " ")).strip()
        if para:
            paragraphs.append(para)
    return "\n\n".join(paragraphs)


def _cleanup_pass(text: str) -> str:
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = _BR_RE.sub(" ", text)
    if "*" in text or "_" in text:
        text = _strip_emphasis(text)
    if "|" in text:
        text = translate_tables(text)
    return _flatten_paragraphs(text)


def cleanup_markup(text: str) -> str:
    """Flatten markdown/HTML presentation into plain running text.

    Emphasis markers go away, ``<br>`` and soft line breaks become single
    spaces, pipe tables become HTML ``<table>`` markup (HTML tables are
    left as they were), and space runs collapse.  Total on any input;
    malformed markdown is kept as literal text.
    """
    for _ in range(_MAX_PASSES):
        result = _cleanup_pass(text)
        if result == text:
            return result
        text = result
    return text


def harmonize_unicode(text: str) -> str:
    """Fold text to NFKC and map curated symbols to ASCII equivalents.

    Covers quotes, dashes, checkbox symbols, and French guillemets (which
    absorb the space hugging them: ``« Oui »`` -> ``"Oui"``).
    """
    text = unicodedata.normalize("NFKC", text)
    if "«" in text:
        text = _GUILLEMET_OPEN_RE.sub('"', text)
    if "»" in text:
        text = _GUILLEMET_CLOSE_RE.sub('"', text)
    return text.translate(_CHAR_REPLACEMENTS)


def project_ascii(text: str) -> str:
    """Strip diacritics down to ASCII; leave unprojectable characters alone."""
    out: list[str] = []
    for ch in text:
        if ord(ch) < 128:
            out.append(ch)
            continue
        expansion = _ASCII_EXPANSIONS.get(ch)
        if expansion is not None:
            out.append(expansion)
            continue
        decomposed = unicodedata.normalize("NFKD", ch)
        base = "".join(c for c in decomposed if not unicodedata.combining(c))
        if base and all(ord(c) < 128 for c in base):
            out.append(base)
        else:
            out.append(ch)
    return "".join(out)


def filter_alnum(text: str) -> str:
    """Keep only letters, digits and spaces; lowercase; collapse space runs."""
    kept: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            kept.append(ch)
        elif ch.isspace():
            kept.append(" ")
    return _SPACE_RUN_RE.sub(" ", "".join(kept)).strip()


def squash_spacing(text: str, drop_spaces: bool, drop_linebreaks: bool) -> str:
    if drop_linebreaks:
        text = text.replace("\n", " ")
    if drop_spaces:
        text = text.replace(" ", "")
    return text


def apply_masks(text: str, masks: list[str] | tuple[str, ...]) -> str:
    """Delete every occurrence of each mask substring, in list order.

    Deletion of one mask can splice a new occurrence together (or expose
    an earlier mask), so the list is re-applied until nothing matches.
    """
    for mask in masks:
        if not mask:
            raise ValueError("masks entries must be non-empty strings")
    changed = True
    while changed:
        changed = False
        for mask in masks:
            while mask in text:
                text = text.replace(mask, "")
                changed = True
    return text


def _pipeline_pass(text: str, profile: NormalizationProfile) -> str:
    if profile.markup_cleanup:
        text = cleanup_markup(text)
    if profile.unicode_harmonize:
        text = harmonize_unicode(text)
    if profile.ascii_projection:
        text = project_ascii(text)
    if profile.alnum_filter:
        text = filter_alnum(text)
    if profile.drop_intraline_spaces or profile.drop_linebreaks:
        text = squash_spacing(
            text, profile.drop_intraline_spaces, profile.drop_linebreaks
        )
    if profile.masks:
        text = apply_masks(text, profile.masks)
    return text.strip()


def normalize(text: str, profile: NormalizationProfile) -> str:
    """Run the enabled stages in pipeline order until the text is stable."""
    result = _pipeline_pass(text, profile)
    for _ in range(_MAX_PASSES):
        again = _pipeline_pass(result, profile)
        if again == result:
            break
        result = again
    return result

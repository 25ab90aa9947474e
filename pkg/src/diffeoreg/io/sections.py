"""Split line-oriented text files into named sections."""

from __future__ import annotations

import io
import logging
from typing import IO, Any

import pandas as pd

logger = logging.getLogger(__name__)

COMMENT_PREFIX = "#"


def read_text(source: bytes | str | IO[Any]) -> str:
    """Return a UTF-8 decoded string from a bytes, str, or file-like input."""
    if isinstance(source, bytes):
        return source.decode("utf-8", errors="replace")
    if isinstance(source, str):
        return source
    if hasattr(source, "read"):
        content = source.read()
        if isinstance(content, bytes):
            return content.decode("utf-8", errors="replace")
        return str(content)
    return str(source)


def extract_sections(text: str, headers: tuple[str, ...]) -> dict[str, tuple[int, str]]:
    """
    Extract sections introduced by a header line equal to one of `headers`.

    Returns `{header: (first_body_line_number, body_text)}`; line numbers are
    1-based so parse errors can point at the file. Blank lines and `#` comments
    are skipped; a section runs until the next header.
    """
    found: dict[str, tuple[int, list[str]]] = {}
    current_key: str | None = None

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIX):
            continue
        if line.upper() in headers:
            current_key = line.upper()
            if current_key in found:
                logger.warning("Section %s repeated at line %d; later rows appended.", current_key, line_number)
            else:
                found[current_key] = (line_number + 1, [])
            continue
        if current_key is None:
            logger.warning("Ignoring line %d outside any section: %r", line_number, line)
            continue
        found[current_key][1].append(line)

    return {key: (start, "\n".join(lines)) for key, (start, lines) in found.items()}


def section_to_dataframe(section_text: str | None, columns: list[str]) -> pd.DataFrame:
    """Parse a whitespace-delimited section into a dataframe of text columns."""
    if not section_text:
        return pd.DataFrame(columns=columns)
    return pd.read_csv(
        io.StringIO(section_text),
        sep=r"\s+",
        header=None,
        names=columns,
        dtype=str,
        engine="python",
    )

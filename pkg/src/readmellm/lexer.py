"""Line lexer for indentation-delimited, ``def``/``class`` style source.

Not a grammar: it knows string literals, ``#`` comments, bracket depth and
backslash continuations, which is all that is needed to find logical lines
and definition headers.  Input does not have to be valid Python; bodiless
headers like the ones in signature-only listings scan fine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_OPEN = "([{"
_CLOSE = ")]}"


@dataclass
class PhysicalLine:
    raw: str          # without the line terminator
    masked: str       # string interiors and comments replaced by spaces
    in_string: bool   # line starts inside a multi-line string
    depth: int        # bracket depth at line start
    backslash: bool   # line ends with an explicit continuation


@dataclass
class LogicalLine:
    first: int        # index of first physical line
    last: int         # index of last physical line (inclusive)
    indent: int       # width of leading whitespace, tabs expanded to 8

    def masked_text(self, lines: list[PhysicalLine]) -> str:
        return "\n".join(ln.masked for ln in lines[self.first:self.last + 1])


def scan(text: str) -> list[PhysicalLine]:
    """Split ``text`` into physical lines annotated with lexical state."""
    out: list[PhysicalLine] = []
    quote = None
    depth = 0
    for raw in text.split("\n"):
        if raw.endswith("\r"):
            raw = raw[:-1]
        start_in_string = quote is not None
        start_depth = depth
        masked = list(raw)
        j = 0
        n = len(raw)
        backslash = False
        while j < n:
            c = raw[j]
            if quote is not None:
                if c == "\\":
                    masked[j] = " "
                    if j + 1 < n:
                        masked[j + 1] = " "
                    j += 2
                    continue
                if raw.startswith(quote, j):
                    j += len(quote)
                    quote = None
                    continue
                masked[j] = " "
                j += 1
                continue
            if c == "#":
                for k in range(j, n):
                    masked[k] = " "
                break
            if c in "\"'":
                quote = raw[j:j + 3] if raw[j:j + 3] in ('"""', "'''") else c
                j += len(quote)
                continue
            if c in _OPEN:
                depth += 1
            elif c in _CLOSE:
                depth = max(0, depth - 1)
            elif c == "\\" and not raw[j + 1:].strip():
                backslash = True
            j += 1
        if quote is not None and len(quote) == 1 and not raw.endswith("\\"):
            # unterminated single-quoted string ends at the newline
            quote = None
        out.append(PhysicalLine(raw, "".join(masked), start_in_string, start_depth, backslash))
    return out


def indent_width(s: str) -> int:
    expanded = s.expandtabs(8)
    return len(expanded) - len(expanded.lstrip(" "))


def logical_lines(lines: list[PhysicalLine]) -> list[LogicalLine]:
    """Group physical lines into logical lines, skipping blank/comment lines."""
    result: list[LogicalLine] = []
    current = None
    for idx, ln in enumerate(lines):
        continued = ln.in_string or ln.depth > 0 or (idx > 0 and lines[idx - 1].backslash)
        if continued and current is not None:
            current.last = idx
            continue
        if not ln.masked.strip():
            current = None
            continue
        current = LogicalLine(idx, idx, indent_width(ln.raw))
        result.append(current)
    return result


def header_colon(lines: list[PhysicalLine], logical: LogicalLine):
    """Locate the first depth-0 ``:`` in a logical line as ``(line, col)``."""
    depth = 0
    for idx in range(logical.first, logical.last + 1):
        for col, c in enumerate(lines[idx].masked):
            if c in _OPEN:
                depth += 1
            elif c in _CLOSE:
                depth = max(0, depth - 1)
            elif c == ":" and depth == 0:
                return idx, col
    return None


_STRING_START = re.compile(r"""^\s*[rRbBuUfF]{0,2}("|')""")


def is_string_statement(lines: list[PhysicalLine], logical: LogicalLine) -> bool:
    """True for a logical line consisting of a lone string literal."""
    first = lines[logical.first].raw
    if not _STRING_START.match(first):
        return False
    masked = logical.masked_text(lines)
    # everything outside the literal is masked to blanks or the quotes themselves
    return re.fullmatch(r"""[\s rRbBuUfF"']*""", masked) is not None


def code_only(text: str) -> str:
    """``text`` with string interiors and comments blanked out."""
    return "\n".join(ln.masked for ln in scan(text))

"""Static check that generated code really uses the target library."""

from __future__ import annotations

import builtins
import keyword
import re
from typing import Iterable, Optional

from readmellm import lexer

_IMPORT = re.compile(r"^\s*import\s+(.+?)\s*$", re.S)
_FROM = re.compile(r"^\s*from\s+([\w.]+)\s+import\s+(.+?)\s*$", re.S)
_DEFINED = re.compile(r"^\s*(?:async\s+def|def|class)\s+(\w+)|^\s*(\w+)\s*=[^=]", re.M)
_BARE_CALL = re.compile(r"(?<![\w.])([A-Za-z_]\w*)\s*\(")
_NOT_LIBRARY = set(dir(builtins)) | set(keyword.kwlist)


def _belongs(module: str, target: str) -> bool:
    return module == target or module.startswith(target + ".")


def _split_names(spec: str) -> list[tuple[str, str]]:
    """``"a as b, c"`` -> ``[("a", "b"), ("c", "c")]``."""
    spec = spec.strip().strip("()")
    out = []
    for part in spec.replace("\n", " ").split(","):
        part = part.strip()
        if not part:
            continue
        bits = part.split()
        if len(bits) == 3 and bits[1] == "as":
            out.append((bits[0], bits[2]))
        else:
            out.append((bits[0], bits[0]))
    return out


def _statements(code: str) -> list[str]:
    phys = lexer.scan(code)
    return [ll.masked_text(phys) for ll in lexer.logical_lines(phys)]


def library_bindings(code: str, target_library: str):
    """Names bound to the target by import statements.

    Returns ``(module_aliases, imported_names, star, other_statements)``.
    """
    aliases: set[str] = set()
    names: set[str] = set()
    star = False
    rest: list[str] = []
    for stmt in _statements(code):
        m = _FROM.match(stmt)
        if m:
            if _belongs(m.group(1), target_library):
                for orig, bound in _split_names(m.group(2)):
                    if orig == "*":
                        star = True
                    else:
                        names.add(bound)
            continue
        m = _IMPORT.match(stmt)
        if m:
            for orig, bound in _split_names(m.group(1)):
                if _belongs(orig, target_library):
                    # "import a.b" binds "a"; "import a.b as c" binds "c"
                    aliases.add(bound if bound != orig else orig.split(".")[0])
            continue
        rest.append(stmt)
    return aliases, names, star, rest


def used_symbols(code: str, target_library: str) -> set[str]:
    """Target-library names that the code calls or accesses attributes of."""
    aliases, names, star, rest = library_bindings(code, target_library)
    body = "\n".join(rest)
    used: set[str] = set()
    for alias in aliases:
        chain = re.compile(r"(?<![\w.])" + re.escape(alias) + r"((?:\s*\.\s*[A-Za-z_]\w*)+)")
        for m in chain.finditer(body):
            used.update(p.strip() for p in m.group(1).split(".") if p.strip())
    for name in names:
        if re.search(r"(?<![\w.])" + re.escape(name) + r"\s*[.(]", body):
            used.add(name)
    if star:
        local = {a or b for a, b in _DEFINED.findall(body)}
        for m in _BARE_CALL.finditer(body):
            if m.group(1) not in _NOT_LIBRARY and m.group(1) not in local:
                used.add(m.group(1))
    return used


def check_library_utilization(code: str, target_library: str,
                              required_symbols: Optional[Iterable[str]] = None) -> bool:
    """True iff ``code`` imports ``target_library`` and invokes its symbols.

    With ``required_symbols``, at least one of those names (last dotted
    component) must be among the invoked ones.  Purely textual: strings and
    comments are ignored, nothing is executed.
    """
    if not code or not code.strip():
        return False
    used = used_symbols(code, target_library)
    if not used:
        return False
    if required_symbols:
        wanted = {s.rsplit(".", 1)[-1] for s in required_symbols}
        return bool(wanted & used)
    return True

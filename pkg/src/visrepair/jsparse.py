"""Structure scanner for JavaScript-family sources.

This is a brace-matching scanner, not a grammar-backed parser.  It masks out
comments, strings, template literals and regex literals, then finds class,
function and method extents by matching braces in what remains.  That is
enough to carve files into headers, bodies, imports, comments and variable
declarations, which is all the code views need.  Odd constructs degrade
softly: an unrecognized region simply stays classified as plain statements.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field

JS_SUFFIXES = {".js", ".jsx", ".mjs", ".cjs", ".ts", ".tsx"}

# Characters after which a `/` starts a regex literal rather than division.
_REGEX_PRECEDERS = set("(,=:[!&|?{};+-*/%~^<>")
_REGEX_KEYWORDS = {
    "return", "typeof", "instanceof", "in", "of", "new", "do", "else",
    "case", "void", "delete", "throw", "yield", "await",
}
_NOT_METHOD_NAMES = {
    "if", "for", "while", "switch", "catch", "return", "new", "typeof",
    "do", "else", "function", "class", "in", "of", "await", "yield",
}

_EXPORT_PREFIX = r"(?:export\s+(?:default\s+)?)?"
_CLASS_HEAD = re.compile(
    _EXPORT_PREFIX + r"(?<![\w$.])class\s+([A-Za-z_$][\w$]*)"
)
_FUNC_HEAD = re.compile(
    _EXPORT_PREFIX + r"(?<![\w$.])(?:async\s+)?function\s*\*?\s*([A-Za-z_$][\w$]*)\s*\("
)
_ASSIGN_HEAD = re.compile(
    _EXPORT_PREFIX
    + r"(?<![\w$.])(?:const|let|var)\s+([A-Za-z_$][\w$]*)\s*=\s*"
    r"(?:async\s+)?(?=(function\b|\(|[A-Za-z_$][\w$]*\s*=>))"
)
_ASSIGN_OBJ = re.compile(
    _EXPORT_PREFIX + r"(?<![\w$.])(?:const|let|var)\s+([A-Za-z_$][\w$]*)\s*=\s*\{"
)
_MEMBER_HEAD = re.compile(
    r"(?<![\w$.])(?:static\s+)?(?:async\s+)?(?:get\s+|set\s+)?\*?\s*"
    r"([A-Za-z_$][\w$]*)\s*\("
)
_PROP_HEAD = re.compile(
    r"(?<![\w$.])([A-Za-z_$][\w$]*)\s*:\s*(?:async\s+)?"
    r"(?=(function\b|\(|[A-Za-z_$][\w$]*\s*=>))"
)
_DECL_KEYWORD = re.compile(r"(?:(?<=^)|(?<=[\s;{}]))(?:export\s+)?(?:const|let|var)\b")
_IMPORT_KEYWORD = re.compile(r"(?:(?<=^)|(?<=[\s;{}]))(?:import\b|export\s+\{[^}]*\}\s*from\b)")
_REQUIRE_CALL = re.compile(r"\brequire\s*\(")


@dataclass
class Element:
    kind: str  # "class" | "function" | "method" | "object"
    name: str
    decl_pos: int
    decl_line: int
    open_pos: int
    open_line: int
    close_pos: int
    close_line: int
    parent: "Element | None" = None
    children: "list[Element]" = field(default_factory=list)
    qualified_name: str = ""

    def contains_line(self, line: int) -> bool:
        """True for lines strictly inside the body (between the braces)."""
        return self.open_line < line < self.close_line

    def body_line_count(self) -> int:
        return max(0, self.close_line - self.open_line - 1)


@dataclass
class ScanResult:
    lines: list[str]
    elements: list[Element]  # document order, all nesting levels
    import_lines: set[int]
    comment_lines: set[int]  # comment-only lines, 1-based
    var_decl_lines: set[int]  # statement-level declaration spans, 1-based

    def innermost_element_at(self, line: int) -> Element | None:
        best: Element | None = None
        for el in self.elements:
            if el.contains_line(line):
                if best is None or el.open_pos > best.open_pos:
                    best = el
        return best


def _mask_source(text: str) -> tuple[str, list[tuple[int, int]]]:
    """Blank out comments, strings, templates and regex literals.

    Newlines survive so line numbers stay aligned; everything else inside the
    masked regions becomes a space.  Returns the masked text and the comment
    spans as (start, end) offsets.
    """
    out = list(text)
    comment_spans: list[tuple[int, int]] = []
    n = len(text)

    def blank(a: int, b: int) -> None:
        for j in range(a, min(b, n)):
            if out[j] != "\n":
                out[j] = " "

    i = 0
    prev_code = ""
    last_word = ""
    word: list[str] = []
    while i < n:
        c = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if c == "/" and nxt == "/":
            j = text.find("\n", i)
            j = n if j == -1 else j
            comment_spans.append((i, j))
            blank(i, j)
            i = j
            continue
        if c == "/" and nxt == "*":
            j = text.find("*/", i + 2)
            j = n if j == -1 else j + 2
            comment_spans.append((i, j))
            blank(i, j)
            i = j
            continue
        if c in "'\"":
            j = i + 1
            while j < n and text[j] != c and text[j] != "\n":
                j += 2 if text[j] == "\\" else 1
            blank(i, min(j + 1, n))
            i = min(j + 1, n)
            continue
        if c == "`":
            j = i + 1
            while j < n and text[j] != "`":
                j += 2 if text[j] == "\\" else 1
            blank(i, min(j + 1, n))
            i = min(j + 1, n)
            continue
        if c == "/" and (not prev_code or prev_code in _REGEX_PRECEDERS or last_word in _REGEX_KEYWORDS):
            j = i + 1
            in_class = False
            while j < n and text[j] != "\n":
                ch = text[j]
                if ch == "\\":
                    j += 2
                    continue
                if ch == "[":
                    in_class = True
                elif ch == "]":
                    in_class = False
                elif ch == "/" and not in_class:
                    break
                j += 1
            blank(i, min(j + 1, n))
            i = min(j + 1, n)
            continue
        if c.isalnum() or c in "_$":
            word.append(c)
        elif word:
            last_word = "".join(word)
            word.clear()
        if not c.isspace():
            prev_code = c
        i += 1
    return "".join(out), comment_spans


class _Geometry:
    """Offset/line bookkeeping plus brace and paren matching."""

    def __init__(self, text: str, masked: str):
        self.text = text
        self.masked = masked
        self.line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.line_starts.append(i + 1)
        self.brace_match: dict[int, int] = {}
        self.paren_match: dict[int, int] = {}
        for open_ch, close_ch, table in (("{", "}", self.brace_match), ("(", ")", self.paren_match)):
            stack: list[int] = []
            for i, ch in enumerate(masked):
                if ch == open_ch:
                    stack.append(i)
                elif ch == close_ch and stack:
                    table[stack.pop()] = i

    def line_of(self, pos: int) -> int:
        return bisect.bisect_right(self.line_starts, pos)

    def skip_space(self, pos: int) -> int:
        while pos < len(self.masked) and self.masked[pos].isspace():
            pos += 1
        return pos

    def prev_code_char(self, pos: int) -> str:
        j = pos - 1
        while j >= 0:
            if not self.masked[j].isspace():
                return self.masked[j]
            j -= 1
        return ""


def _find_block_after_params(geo: _Geometry, pos: int) -> int | None:
    """From the position of a parameter-list ``(``, locate the body ``{``.

    Skips over the parameter list and an optional return-type annotation.
    Returns the offset of the opening brace, or None when the construct has
    no block body.
    """
    pos = geo.skip_space(pos)
    if pos >= len(geo.masked) or geo.masked[pos] != "(":
        return None
    close = geo.paren_match.get(pos)
    if close is None:
        return None
    j = geo.skip_space(close + 1)
    if j < len(geo.masked) and geo.masked[j] == ":":
        # Type annotation: scan to the first brace or statement end.
        while j < len(geo.masked) and geo.masked[j] not in "{;\n":
            j += 1
        j = geo.skip_space(j)
    if j < len(geo.masked) - 1 and geo.masked[j : j + 2] == "=>":
        j = geo.skip_space(j + 2)
    if j < len(geo.masked) and geo.masked[j] == "{":
        return j
    return None


def _find_arrow_block(geo: _Geometry, pos: int) -> int | None:
    """From the start of arrow params (`(` or identifier), locate a block body."""
    masked = geo.masked
    pos = geo.skip_space(pos)
    if pos >= len(masked):
        return None
    if masked[pos] == "(":
        close = geo.paren_match.get(pos)
        if close is None:
            return None
        j = geo.skip_space(close + 1)
        if j < len(masked) and masked[j] == ":":
            while j < len(masked) and masked[j] not in "{;\n":
                if masked[j : j + 2] == "=>":
                    break
                j += 1
            j = geo.skip_space(j)
    else:
        j = pos
        while j < len(masked) and (masked[j].isalnum() or masked[j] in "_$"):
            j += 1
        j = geo.skip_space(j)
    if masked[j : j + 2] != "=>":
        return None
    j = geo.skip_space(j + 2)
    if j < len(masked) and masked[j] == "{":
        return j
    return None


def _statement_end(geo: _Geometry, start: int) -> int:
    """End offset of the statement starting at ``start`` in the masked text.

    Ends at the first top-level semicolon, or at a newline once every bracket
    opened since the start has closed again.
    """
    masked = geo.masked
    depth = 0
    i = start
    while i < len(masked):
        ch = masked[i]
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            if depth == 0:
                return i
            depth -= 1
        elif ch == ";" and depth == 0:
            return i + 1
        elif ch == "\n" and depth == 0 and i > start:
            stmt = masked[start:i].strip()
            if stmt and not stmt.endswith(("=", "+", "-", "*", "/", ",", "&&", "||", ".")):
                return i
        i += 1
    return len(masked)


def scan(text: str) -> ScanResult:
    """Scan a source file into elements, imports, comments and declarations."""
    masked, comment_spans = _mask_source(text)
    geo = _Geometry(text, masked)
    lines = text.splitlines()
    n_lines = len(lines)

    comment_line_candidates: set[int] = set()
    for a, b in comment_spans:
        for ln in range(geo.line_of(a), geo.line_of(max(a, b - 1)) + 1):
            comment_line_candidates.add(ln)
    comment_lines = {
        ln
        for ln in comment_line_candidates
        if 1 <= ln <= n_lines
        and lines[ln - 1].strip()
        and not _masked_line(geo, ln).strip()
    }

    elements: list[Element] = []
    claimed_opens: set[int] = set()

    def add_element(kind: str, name: str, decl_pos: int, open_pos: int) -> None:
        close_pos = geo.brace_match.get(open_pos)
        if close_pos is None or open_pos in claimed_opens:
            return
        claimed_opens.add(open_pos)
        elements.append(
            Element(
                kind=kind,
                name=name,
                decl_pos=decl_pos,
                decl_line=geo.line_of(decl_pos),
                open_pos=open_pos,
                open_line=geo.line_of(open_pos),
                close_pos=close_pos,
                close_line=geo.line_of(close_pos),
            )
        )

    for match in _CLASS_HEAD.finditer(masked):
        j = geo.skip_space(match.end())
        # Skip an optional `extends Base` clause.
        while j < len(masked) and masked[j] != "{" and masked[j] not in ";\n":
            j += 1
        if j < len(masked) and masked[j] == "{":
            add_element("class", match.group(1), match.start(), j)

    for match in _ASSIGN_OBJ.finditer(masked):
        # The regex ends right after the opening brace, so it sits at end-1.
        add_element("object", match.group(1), match.start(), match.end() - 1)

    for match in _ASSIGN_HEAD.finditer(masked):
        tail = match.group(2)
        after = match.end()
        if tail.startswith("function"):
            paren = masked.find("(", after)
            if paren == -1:
                continue
            open_pos = _find_block_after_params(geo, paren)
        else:
            open_pos = _find_arrow_block(geo, after)
        if open_pos is not None:
            add_element("function", match.group(1), match.start(), open_pos)

    for match in _FUNC_HEAD.finditer(masked):
        open_pos = _find_block_after_params(geo, masked.find("(", match.start(1)))
        if open_pos is not None:
            add_element("function", match.group(1), match.start(), open_pos)

    # Methods and function-valued properties live directly inside class or
    # object bodies; depth checks keep `if (...)` blocks out.
    containers = [el for el in elements if el.kind in ("class", "object")]
    for container in containers:
        body = masked[container.open_pos + 1 : container.close_pos]
        offset = container.open_pos + 1
        inner_depth_opens = {
            pos
            for pos, close in geo.brace_match.items()
            if container.open_pos < pos < container.close_pos
            and _directly_inside(geo, pos, container)
        }
        for match in _MEMBER_HEAD.finditer(body):
            name = match.group(1)
            if name in _NOT_METHOD_NAMES:
                continue
            paren = offset + match.end() - 1
            open_pos = _find_block_after_params(geo, paren)
            if open_pos is not None and open_pos in inner_depth_opens:
                # The regex may have eaten whitespace before the name; the
                # declaration starts at the first real prefix character.
                prefix = match.group(0)[: match.start(1) - match.start()]
                lead = len(prefix) - len(prefix.lstrip())
                add_element("method", name, offset + match.start() + lead, open_pos)
        if container.kind == "object":
            for match in _PROP_HEAD.finditer(body):
                name = match.group(1)
                tail = match.group(2)
                after = offset + match.end()
                if tail.startswith("function"):
                    paren = masked.find("(", after)
                    open_pos = _find_block_after_params(geo, paren) if paren != -1 else None
                else:
                    open_pos = _find_arrow_block(geo, after)
                if open_pos is not None and open_pos in inner_depth_opens:
                    add_element("method", name, offset + match.start(), open_pos)

    elements.sort(key=lambda el: (el.decl_pos, el.open_pos))

    # Parent = innermost element whose braces strictly contain this one's.
    for el in elements:
        best: Element | None = None
        for other in elements:
            if other is el:
                continue
            if other.open_pos < el.open_pos and el.close_pos <= other.close_pos:
                if best is None or other.open_pos > best.open_pos:
                    best = other
        el.parent = best
        if best is not None:
            best.children.append(el)

    # An object holding no function members is data, not structure.
    data_objects = {id(el) for el in elements if el.kind == "object" and not el.children}
    elements = [el for el in elements if id(el) not in data_objects]
    for el in elements:
        if el.parent is not None and id(el.parent) in data_objects:
            el.parent = el.parent.parent

    for el in elements:
        names = []
        node: Element | None = el
        while node is not None:
            names.append(node.name)
            node = node.parent
        el.qualified_name = ".".join(reversed(names))

    element_decl_positions = {el.decl_pos for el in elements}

    import_lines: set[int] = set()
    var_decl_lines: set[int] = set()
    for match in _IMPORT_KEYWORD.finditer(masked):
        if geo.prev_code_char(match.start()) not in ("", ";", "{", "}"):
            continue
        end = _statement_end(geo, match.start())
        for ln in range(geo.line_of(match.start()), geo.line_of(max(match.start(), end - 1)) + 1):
            import_lines.add(ln)
    for match in _DECL_KEYWORD.finditer(masked):
        if match.start() in element_decl_positions:
            continue
        if geo.prev_code_char(match.start()) not in ("", ";", "{", "}"):
            continue
        end = _statement_end(geo, match.start())
        span_lines = range(geo.line_of(match.start()), geo.line_of(max(match.start(), end - 1)) + 1)
        if _REQUIRE_CALL.search(masked[match.start() : end]):
            import_lines.update(span_lines)
        else:
            var_decl_lines.update(span_lines)

    return ScanResult(
        lines=lines,
        elements=elements,
        import_lines=import_lines,
        comment_lines=comment_lines,
        var_decl_lines=var_decl_lines,
    )


def _masked_line(geo: _Geometry, line: int) -> str:
    start = geo.line_starts[line - 1]
    end = geo.line_starts[line] - 1 if line < len(geo.line_starts) else len(geo.masked)
    return geo.masked[start:end]


def _directly_inside(geo: _Geometry, open_pos: int, container: Element) -> bool:
    """True when the brace at ``open_pos`` nests immediately in ``container``."""
    depth = 0
    for i in range(container.open_pos + 1, open_pos):
        ch = geo.masked[i]
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
    return depth == 0

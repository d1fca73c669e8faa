"""Turn answer HTML into ordered, placeholder-normalized sentences.

Only top-level ``<p>`` elements count as paragraphs; ``<pre>`` blocks,
blockquotes and other block content are skipped entirely.  Inside a
paragraph, hyperlinks collapse to the standalone word LINK and inline code
to CW, so downstream text processing never sees markup.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

LINK_TOKEN = "LINK"
CODE_TOKEN = "CW"

#: Words whose trailing period never ends a sentence.  This list is part of
#: the splitter contract; golden tests pin its behavior.
ABBREVIATIONS = frozenset({
    "i.e", "e.g", "etc", "vs", "cf", "al",
    "mr", "mrs", "ms", "dr", "prof", "st", "fig",
})

_SENTENCE_OPENERS = set("\"'“‘(")

# Block elements that implicitly close an open <p> (tolerant parsing).
_P_CLOSERS = {
    "p", "pre", "blockquote", "div", "table", "ul", "ol", "dl", "hr",
    "h1", "h2", "h3", "h4", "h5", "h6",
}
_VOID_TAGS = {"br", "hr", "img", "input", "meta", "link", "area", "col", "wbr"}


@dataclass
class Paragraph:
    """One top-level ``<p>`` element of an answer body."""

    answer_id: int
    index: int
    raw_html: str
    normalized_text: str = ""
    #: char offset in normalized_text -> original surface, for LINK/CW tokens
    placeholder_origins: dict[int, str] = field(default_factory=dict)


@dataclass
class SentenceRecord:
    """One normalized sentence with provenance back to its paragraph."""

    sentence_id: str
    text: str
    char_span: tuple[int, int]
    tokens: list[str] = field(default_factory=list)
    lemmas: list[str] = field(default_factory=list)
    placeholder_origins: dict[int, str] = field(default_factory=dict)


class CodeTokenRuleSet:
    """Ordered, named regexes that spot unmarked inline code identifiers."""

    def __init__(self, rules: list[tuple[str, str]]):
        if not rules:
            raise ValueError("code token rule set is empty")
        self.rules = [(name, re.compile(pattern)) for name, pattern in rules]

    @classmethod
    def from_file(cls, path) -> "CodeTokenRuleSet":
        """Load ``name<TAB>regex`` lines."""
        rules = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                if "\t" not in line:
                    raise ValueError(f"{path}:{lineno}: expected name<TAB>regex")
                name, pattern = line.split("\t", 1)
                rules.append((name.strip(), pattern))
        return cls(rules)

    @classmethod
    def default(cls) -> "CodeTokenRuleSet":
        from .resources import default_code_rules_path

        return cls.from_file(default_code_rules_path())


class _BlockCollector(HTMLParser):
    """Splits a body into top-level <p> paragraphs and raw passthrough
    chunks, preserving document order."""

    def __init__(self):
        super().__init__(convert_charrefs=False)
        self.blocks: list[tuple[str, str]] = []  # ("p", inner) | ("raw", chunk)
        self._depth_stack: list[str] = []
        self._p_buf: list[str] | None = None
        self._raw_buf: list[str] = []

    def _flush_raw(self):
        if self._raw_buf:
            chunk = "".join(self._raw_buf)
            self._raw_buf = []
            if chunk.strip():
                self.blocks.append(("raw", chunk))

    def _close_p(self):
        if self._p_buf is not None:
            self.blocks.append(("p", "".join(self._p_buf)))
            self._p_buf = None

    def _emit(self, raw: str):
        if self._p_buf is not None:
            self._p_buf.append(raw)
        else:
            self._raw_buf.append(raw)

    def handle_starttag(self, tag, attrs):
        raw = self.get_starttag_text() or f"<{tag}>"
        if self._p_buf is not None:
            if tag in _P_CLOSERS:
                # a block tag inside <p>: browsers auto-close the paragraph
                self._close_p()
                self._route_start(tag, raw)
            else:
                self._p_buf.append(raw)
            return
        self._route_start(tag, raw)

    def _route_start(self, tag, raw):
        if tag == "p" and not self._depth_stack:
            self._flush_raw()
            self._p_buf = []
        else:
            if tag not in _VOID_TAGS:
                self._depth_stack.append(tag)
            self._raw_buf.append(raw)

    def handle_startendtag(self, tag, attrs):
        self._emit(self.get_starttag_text() or f"<{tag}/>")

    def handle_endtag(self, tag):
        if self._p_buf is not None:
            if tag == "p":
                self._close_p()
            else:
                self._p_buf.append(f"</{tag}>")
            return
        if tag in self._depth_stack:
            while self._depth_stack and self._depth_stack.pop() != tag:
                pass
        self._raw_buf.append(f"</{tag}>")

    def handle_data(self, data):
        self._emit(data)

    def handle_entityref(self, name):
        self._emit(f"&{name};")

    def handle_charref(self, name):
        self._emit(f"&#{name};")

    def close(self):
        super().close()
        self._close_p()
        self._flush_raw()


def split_blocks(body_html: str) -> list[tuple[str, str]]:
    """("p", inner_html) and ("raw", chunk) blocks in document order."""
    collector = _BlockCollector()
    collector.feed(body_html or "")
    collector.close()
    return collector.blocks


def html_to_paragraphs(body_html: str, answer_id: int = 0) -> list[Paragraph]:
    """Extract top-level ``<p>`` elements in document order.

    Content outside ``<p>`` (``<pre><code>`` blocks, blockquotes, lists)
    is dropped.  Malformed HTML is handled leniently; an empty result is
    fine.
    """
    paragraphs = []
    index = 0
    for kind, raw in split_blocks(body_html):
        if kind != "p":
            continue
        text, origins = _normalize_html(raw)
        paragraphs.append(Paragraph(
            answer_id=answer_id,
            index=index,
            raw_html=raw,
            normalized_text=text,
            placeholder_origins=origins,
        ))
        index += 1
    return paragraphs


@dataclass
class _Placeholder:
    token: str
    original: str
    href: str | None = None


class _Normalizer(HTMLParser):
    """Strips markup, replacing <a>/<code> subtrees with LINK/CW."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[tuple[str, object]] = []  # ("text", str) | ("ph", _Placeholder)
        self._skip_tag: str | None = None
        self._skip_depth = 0
        self._skip_text: list[str] = []
        self._skip_href: str | None = None

    def _finish_skip(self):
        token = LINK_TOKEN if self._skip_tag == "a" else CODE_TOKEN
        original = re.sub(r"\s+", " ", "".join(self._skip_text)).strip()
        self.parts.append(("ph", _Placeholder(token, original, self._skip_href)))
        self._skip_tag = None
        self._skip_href = None

    def handle_starttag(self, tag, attrs):
        if self._skip_tag is not None:
            if tag == self._skip_tag:
                self._skip_depth += 1
            return
        if tag in ("a", "code"):
            self._skip_tag = tag
            self._skip_depth = 1
            self._skip_text = []
            self._skip_href = dict(attrs).get("href") if tag == "a" else None

    def handle_endtag(self, tag):
        if self._skip_tag is None:
            return
        if tag == self._skip_tag:
            self._skip_depth -= 1
            if self._skip_depth == 0:
                self._finish_skip()

    def handle_data(self, data):
        if self._skip_tag is not None:
            self._skip_text.append(data)
        else:
            self.parts.append(("text", data))

    def close(self):
        super().close()
        if self._skip_tag is not None:
            # unclosed <a>/<code>: treat whatever was collected as replaced
            self._finish_skip()


def _placeholder_display_html(ph: _Placeholder) -> str:
    import html as _html

    inner = _html.escape(ph.original)
    if ph.token == CODE_TOKEN:
        return f"<code>{inner}</code>"
    href = ph.href or ""
    if href and not href.lower().startswith(("javascript:", "data:", "vbscript:")):
        return f'<a href="{_html.escape(href, quote=True)}">{inner}</a>'
    return f"<a>{inner}</a>"


def normalize_paragraph_parts(raw_html: str) -> tuple[str, dict[int, str], list[tuple[int, int, str]]]:
    """Normalized text, placeholder origins, and display parts.

    Display parts are (start, end, display_html) triples covering every
    word of the normalized text; words separated by exactly one space.
    Rebuilding from display parts recovers a reader-facing rendering with
    links and inline code restored.
    """
    import html as _html

    parser = _Normalizer()
    parser.feed(raw_html or "")
    parser.close()

    out: list[str] = []
    length = 0
    origins: dict[int, str] = {}
    display_parts: list[tuple[int, int, str]] = []
    pending_space = False
    last_was_placeholder = False

    def _append(piece: str, display: str | None):
        nonlocal length
        out.append(piece)
        if display is not None:
            display_parts.append((length, length + len(piece), display))
        length += len(piece)

    for kind, payload in parser.parts:
        if kind == "text":
            text = payload
            leading_ws = text[:1].isspace()
            trailing_ws = text[-1:].isspace() if text else False
            words = text.split()
            if words:
                for i, word in enumerate(words):
                    first = i == 0
                    if out:
                        if pending_space or not first:
                            _append(" ", None)
                        elif first and (leading_ws or (last_was_placeholder and (word[0].isalnum() or word[0] == "_"))):
                            _append(" ", None)
                    _append(word, _html.escape(word))
                pending_space = trailing_ws
                last_was_placeholder = False
            else:
                if text and out:
                    pending_space = True
        else:
            ph = payload
            if out:
                last = out[-1][-1:]
                if pending_space or last.isalnum() or last == "_":
                    _append(" ", None)
            origins[length] = ph.original
            _append(ph.token, _placeholder_display_html(ph))
            pending_space = False
            last_was_placeholder = True

    return "".join(out), origins, display_parts


def _normalize_html(raw_html: str) -> tuple[str, dict[int, str]]:
    text, origins, _parts = normalize_paragraph_parts(raw_html)
    return text, origins


def normalize_paragraph(paragraph: Paragraph | str) -> str:
    """Normalized text of a paragraph (idempotent on its own output)."""
    raw = paragraph.raw_html if isinstance(paragraph, Paragraph) else paragraph
    return _normalize_html(raw)[0]


def _abbreviation_before(text: str, dot_index: int) -> bool:
    j = dot_index
    while j > 0 and (text[j - 1].isalpha() or text[j - 1] == "."):
        j -= 1
    word = text[j:dot_index].rstrip(".")
    return word.lower() in ABBREVIATIONS


def _split_points(text: str) -> list[int]:
    """Indexes just past each sentence terminator."""
    points = []
    for m in re.finditer(r"[.!?]", text):
        i = m.start()
        if i + 1 >= len(text) or text[i + 1] != " ":
            continue
        if i + 2 >= len(text):
            continue
        nxt = text[i + 2]
        if not (nxt.isupper() or nxt.isdigit() or nxt in _SENTENCE_OPENERS):
            continue
        if text[i] == "." and _abbreviation_before(text, i):
            continue
        points.append(i + 1)
    return points


def split_sentences(
    normalized_text: str,
    thread_id: int = 0,
    answer_id: int = 0,
    paragraph_index: int = 0,
    placeholder_origins: dict[int, str] | None = None,
) -> list[SentenceRecord]:
    """Deterministic rule-based sentence splitting over normalized text.

    A terminator (. ! ?) followed by a space and an uppercase letter, digit
    or opening quote starts a new sentence, unless the period belongs to a
    known abbreviation.  Recorded spans joined with single spaces
    reconstruct the input exactly.
    """
    text = normalized_text
    origins = placeholder_origins or {}
    points = _split_points(text)
    spans = []
    start = 0
    for p in points:
        spans.append((start, p))
        start = p + 1
    if start < len(text):
        spans.append((start, len(text)))

    records = []
    for sent_index, (a, b) in enumerate(spans):
        chunk = text[a:b]
        if not chunk.strip():
            continue
        rec = SentenceRecord(
            sentence_id=f"{thread_id}:{answer_id}:{paragraph_index}:{sent_index}",
            text=chunk,
            char_span=(a, b),
        )
        for off, original in origins.items():
            if a <= off < b:
                rec.placeholder_origins[off - a] = original
        records.append(rec)
    return records


def _apply_code_rule(pattern, text, entries):
    """One rule pass; entries are (offset, original) pairs, kept sorted."""
    pieces = []
    new_entries = []
    cursor = 0
    shift = 0
    entry_idx = 0
    changed = False

    def carry_until(limit):
        nonlocal entry_idx
        while entry_idx < len(entries) and entries[entry_idx][0] < limit:
            off, orig = entries[entry_idx]
            new_entries.append((off + shift, orig))
            entry_idx += 1

    for m in pattern.finditer(text):
        surface = m.group(0)
        if surface in (LINK_TOKEN, CODE_TOKEN):
            continue
        if surface.lower().rstrip(".") in ABBREVIATIONS:
            continue
        carry_until(m.start())
        pieces.append(text[cursor:m.start()])
        new_entries.append((m.start() + shift, surface))
        pieces.append(CODE_TOKEN)
        shift += len(CODE_TOKEN) - len(surface)
        cursor = m.end()
        changed = True
        # entries consumed by this match are superseded by the new one
        while entry_idx < len(entries) and entries[entry_idx][0] < m.end():
            entry_idx += 1
    carry_until(len(text) + 1)
    pieces.append(text[cursor:])
    return "".join(pieces), sorted(new_entries), changed


def detect_code_tokens(
    text: str,
    rules: CodeTokenRuleSet,
    origins: dict[int, str] | None = None,
) -> tuple[str, dict[int, str]]:
    """Replace every maximal rule match with CW.

    Returns the rewritten text and an ``offset -> original surface`` map in
    the coordinates of the rewritten text; entries from ``origins`` are
    carried over.  The placeholders themselves and splitter abbreviations
    (i.e, e.g, ...) are never replaced.  The rule cascade is re-applied
    until the text stops changing, so the operation is idempotent.
    """
    entries = sorted((origins or {}).items())
    current = text
    for _ in range(len(text) + 1):
        any_change = False
        for _name, pattern in rules.rules:
            current, entries, changed = _apply_code_rule(pattern, current, entries)
            any_change = any_change or changed
        if not any_change:
            break
    return current, dict(entries)


def preprocess_answer(thread_id: int, answer_id: int, body_html: str) -> list[SentenceRecord]:
    """Full per-answer pipeline: paragraphs, normalization, splitting."""
    records = []
    for para in html_to_paragraphs(body_html, answer_id=answer_id):
        records.extend(split_sentences(
            para.normalized_text,
            thread_id=thread_id,
            answer_id=answer_id,
            paragraph_index=para.index,
            placeholder_origins=para.placeholder_origins,
        ))
    return records

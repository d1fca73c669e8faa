"""Self-contained linguistic primitives.

Tokenization, lemmatization, part-of-speech tagging and conditional-clause
extraction are rule-based and deterministic: a lexicon file provides word
defaults, suffix rules cover inflections, and a handful of contextual
repairs fix the most common mistags.  Unknown words default to NOUN, which
deliberately biases toward keeping technical terms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .preprocess import CODE_TOKEN, LINK_TOKEN

POS_TAGS = frozenset({
    "NOUN", "VERB", "MODAL", "PRON", "ADJ", "ADV", "DET", "PREP", "CONJ",
    "NUM", "PUNCT", "CODE", "LINKT", "OTHER",
})

_REQUIRED_MODALS = frozenset({
    "can", "could", "may", "might", "must", "shall", "should", "will", "would",
})
_REQUIRED_PRONOUNS = frozenset({"i", "we", "me", "my", "our", "you", "your"})

_DASHES = {"-", "–", "—"}


@dataclass
class Token:
    surface: str
    index: int
    start: int = 0
    lemma: str = ""
    pos: str = "OTHER"


@dataclass
class ConditionalClause:
    token_span: tuple[int, int]
    text: str
    parenthesized: bool = False


@dataclass
class Lexicon:
    """Word defaults plus the closed word lists used by the filters."""

    entries: dict[str, tuple[str, str]]
    modal_verbs: frozenset[str]
    first_person: frozenset[str]
    unsure_phrases: tuple[str, ...]

    def __post_init__(self):
        missing = _REQUIRED_MODALS - self.modal_verbs
        if missing:
            raise ValueError(f"lexicon modal list is missing {sorted(missing)}")
        missing = _REQUIRED_PRONOUNS - self.first_person
        if missing:
            raise ValueError(f"lexicon pronoun list is missing {sorted(missing)}")

    @classmethod
    def load(cls, path) -> "Lexicon":
        """Parse ``word<TAB>lemma<TAB>pos`` lines with [modal]-style sections."""
        entries: dict[str, tuple[str, str]] = {}
        sections: dict[str, list[str]] = {"modal": [], "pronoun": [], "unsure": []}
        section = None
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                header = re.fullmatch(r"\[(\w+)\]", line.strip())
                if header:
                    section = header.group(1)
                    if section not in sections:
                        raise ValueError(f"{path}:{lineno}: unknown section [{section}]")
                    continue
                if section is None:
                    fields = line.split("\t")
                    if len(fields) != 3:
                        raise ValueError(f"{path}:{lineno}: expected word<TAB>lemma<TAB>pos")
                    word, lemma, pos = fields
                    if pos not in POS_TAGS:
                        raise ValueError(f"{path}:{lineno}: unknown pos tag {pos!r}")
                    entries[word.lower()] = (lemma.lower(), pos)
                else:
                    sections[section].append(line.strip().lower())
        return cls(
            entries=entries,
            modal_verbs=frozenset(sections["modal"]),
            first_person=frozenset(sections["pronoun"]),
            unsure_phrases=tuple(sections["unsure"]),
        )

    @classmethod
    def default(cls) -> "Lexicon":
        from .resources import default_lexicon_path

        return cls.load(default_lexicon_path())


_TOKEN_RE = re.compile(
    r"\d+(?:\.\d+)*"
    r"|[A-Za-z_][A-Za-z0-9_]*(?:[-.'’][A-Za-z0-9_]+)*"
    r"|\S"
)

_CONTRACTION_SUFFIXES = ("'s", "'re", "'ve", "'ll", "'d", "'m")


def _split_contraction(surface: str, start: int) -> list[tuple[str, int]]:
    plain = surface.replace("’", "'")
    low = plain.lower()
    if low.endswith("n't") and len(plain) > 3:
        cut = len(plain) - 3
        return [(surface[:cut], start), (surface[cut:], start + cut)]
    for suffix in _CONTRACTION_SUFFIXES:
        if low.endswith(suffix) and len(plain) > len(suffix):
            cut = len(plain) - len(suffix)
            return [(surface[:cut], start), (surface[cut:], start + cut)]
    return [(surface, start)]


def tokenize(sentence_text: str) -> list[Token]:
    """Whitespace/punctuation tokenization; placeholders kept whole,
    contractions split at the apostrophe boundary."""
    pieces: list[tuple[str, int]] = []
    for m in _TOKEN_RE.finditer(sentence_text):
        surface = m.group(0)
        if surface in (CODE_TOKEN, LINK_TOKEN) or "'" not in surface.replace("’", "'"):
            pieces.append((surface, m.start()))
        else:
            pieces.extend(_split_contraction(surface, m.start()))
    return [Token(surface=s, index=i, start=pos) for i, (s, pos) in enumerate(pieces)]


def _strip_doubling(stem: str) -> str:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "aeiou":
        if stem[-2:] not in ("ss", "ll", "zz", "ff", "ee", "oo"):
            return stem[:-1]
    return stem


def _suffix_lemma(word: str) -> str:
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ing") and len(word) > 5:
        return _strip_doubling(word[:-3])
    if word.endswith("ed") and len(word) > 4:
        return _strip_doubling(word[:-2])
    if word.endswith("es") and len(word) > 3:
        stem = word[:-2]
        if stem.endswith(("ss", "x", "z", "ch", "sh")):
            return stem
    if word.endswith("s") and len(word) > 3 and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def lemmatize(tokens: list[Token], lexicon: Lexicon) -> list[Token]:
    """Fill lemmas in place: lexicon lookup first, then suffix rules."""
    for tok in tokens:
        if tok.surface in (CODE_TOKEN, LINK_TOKEN):
            tok.lemma = tok.surface
            continue
        low = tok.surface.replace("’", "'").lower()
        entry = lexicon.entries.get(low)
        tok.lemma = entry[0] if entry else _suffix_lemma(low)
    return tokens


def _is_punct(surface: str) -> bool:
    return not any(ch.isalnum() or ch == "_" for ch in surface)


def _base_pos(tok: Token, lexicon: Lexicon) -> str:
    if tok.surface == CODE_TOKEN:
        return "CODE"
    if tok.surface == LINK_TOKEN:
        return "LINKT"
    if _is_punct(tok.surface):
        return "PUNCT"
    if tok.surface[0].isdigit():
        return "NUM"
    low = tok.surface.replace("’", "'").lower()
    if low in lexicon.modal_verbs:
        return "MODAL"
    entry = lexicon.entries.get(low) or lexicon.entries.get(tok.lemma)
    if entry:
        return entry[1]
    return "NOUN"


def pos_tag(tokens: list[Token], lexicon: Lexicon) -> list[Token]:
    """Assign tags from the lexicon, then apply contextual repairs.

    Repairs: the next content word after a determiner is a NOUN; "to"
    followed by a known verb lemma is a VERB; the word after a modal
    (skipping adverbs) is a VERB.  Recomputed from scratch on every call,
    so re-tagging is a fixed point.
    """
    for tok in tokens:
        tok.pos = _base_pos(tok, lexicon)

    for i, tok in enumerate(tokens):
        if tok.pos == "DET":
            for nxt in tokens[i + 1:]:
                if nxt.pos in ("ADJ", "ADV"):
                    continue
                if nxt.pos in ("NOUN", "VERB", "OTHER"):
                    nxt.pos = "NOUN"
                break
        elif tok.pos == "MODAL":
            for nxt in tokens[i + 1:]:
                if nxt.pos == "ADV":
                    continue
                if nxt.pos in ("NOUN", "VERB", "OTHER"):
                    nxt.pos = "VERB"
                break
        elif tok.surface.lower() == "to" and i + 1 < len(tokens):
            nxt = tokens[i + 1]
            entry = lexicon.entries.get(nxt.lemma)
            if entry and entry[1] == "VERB" and nxt.pos in ("NOUN", "VERB", "OTHER"):
                nxt.pos = "VERB"
    return tokens


def annotate(tokens: list[Token], lexicon: Lexicon) -> list[Token]:
    """Lemmatize then tag; convenience for the common pipeline order."""
    return pos_tag(lemmatize(tokens, lexicon), lexicon)


def _paren_depths(tokens: list[Token]) -> list[int]:
    depths = []
    depth = 0
    for tok in tokens:
        if tok.surface == "(":
            depth += 1
            depths.append(depth)
        elif tok.surface == ")":
            depths.append(depth)
            depth = max(0, depth - 1)
        else:
            depths.append(depth)
    return depths


def extract_conditional_clause(tokens: list[Token]) -> ConditionalClause | None:
    """The clause anchored at the first "if" token.

    The clause runs from "if" to the earliest of: a comma/semicolon/dash at
    the same parenthesis depth, the token "then", or the sentence end.
    Returns None when no token has lemma "if".
    """
    anchor = None
    for tok in tokens:
        if tok.lemma == "if":
            anchor = tok.index
            break
    if anchor is None:
        return None

    depths = _paren_depths(tokens)
    base_depth = depths[anchor]
    end = len(tokens)
    for j in range(anchor + 1, len(tokens)):
        tok = tokens[j]
        if tok.lemma == "then":
            end = j
            break
        if depths[j] == base_depth and (tok.surface in (",", ";") or tok.surface in _DASHES):
            end = j
            break
    while end - 1 > anchor and _is_punct(tokens[end - 1].surface):
        end -= 1
    text = " ".join(t.surface for t in tokens[anchor:end])
    return ConditionalClause(
        token_span=(anchor, end),
        text=text,
        parenthesized=base_depth > 0,
    )


def nouns_in(
    clause: ConditionalClause,
    tokens: list[Token],
    code_surfaces: dict[int, str] | None = None,
) -> set[str]:
    """Lowercase noun lemmas of the clause plus code-element surfaces.

    NOUN lemmas are restricted to the clause span; CODE tokens anywhere in
    the sentence contribute their pre-replacement surface (or the literal
    "cw" when no provenance is known), since code elements count as nouns
    for the technical-context check.
    """
    start, end = clause.token_span
    result = set()
    for tok in tokens[start:end]:
        if tok.pos == "NOUN":
            result.add(tok.lemma)
    surfaces = code_surfaces or {}
    for tok in tokens:
        if tok.pos == "CODE":
            result.add(surfaces.get(tok.index, "cw").lower())
    return result


_SKIP_AFTER_VERB = ("DET", "ADJ", "PRON")
_SKIP_AFTER_IF = ("DET", "ADJ")


def verb_noun_relation(clause: ConditionalClause, tokens: list[Token]) -> bool:
    """True when a clause verb is followed, within 4 non-skipped tokens
    (determiners, adjectives and pronouns are skipped), by a noun or code
    token inside the clause."""
    start, end = clause.token_span
    for i in range(start, end):
        if tokens[i].pos != "VERB":
            continue
        steps = 0
        for j in range(i + 1, end):
            if tokens[j].pos in _SKIP_AFTER_VERB:
                continue
            steps += 1
            if steps > 4:
                break
            if tokens[j].pos in ("NOUN", "CODE"):
                return True
    return False


def if_noun_relation(clause: ConditionalClause, tokens: list[Token]) -> bool:
    """True when the token right after "if" (skipping determiners and
    adjectives) is a noun or code token."""
    start, end = clause.token_span
    for j in range(start + 1, end):
        if tokens[j].pos in _SKIP_AFTER_IF:
            continue
        return tokens[j].pos in ("NOUN", "CODE")
    return False

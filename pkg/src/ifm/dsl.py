"""The .ifm text format: parser with located diagnostics and a canonical
serializer.

A model file is a sequence of blocks (``types``, ``rule``, ``site``,
``channel``, ``subnet``, ``alt``, ``outcome``); statements end with
semicolons and ``#`` comments run to end of line.  The grammar is spelled
out in docs/dsl.md.  Parsing never ignores an unknown construct: anything
unrecognized produces an error diagnostic pointing into the source.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

from .analysis import OutcomeSpec, summarize_as_channel
from .model import (
    AlternativeSet,
    CarryRule,
    Channel,
    FlowSpec,
    InferenceRule,
    Introduce,
    Mitigation,
    Network,
    Proxy,
    Site,
    Toggle,
    TypeSystem,
    Variant,
    validate,
)

__all__ = [
    "Diagnostic",
    "SubnetStyle",
    "SourceModel",
    "ParseResult",
    "parse",
    "parse_file",
    "serialize",
    "format_diagnostic",
]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int
    column: int
    length: int = 1
    code: str = "E100"
    source: str = ""  # file the location refers to, when known


def format_diagnostic(d: Diagnostic, path: str = "<input>") -> str:
    where = d.source or path
    return f"{where}:{d.line}:{d.column}: {d.severity}[{d.code}]: {d.message}"


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_PUNCT = ("->", "<=", "{", "}", ";", ",", ":", "[", "]")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "string" | "int" | "punct" | "eof"
    text: str
    line: int
    column: int

    @property
    def length(self) -> int:
        return max(1, len(self.text))


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c in "_?"


def _is_ident_part(c: str) -> bool:
    return c.isalnum() or c in "_."


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.column = 1
        self.diagnostics: list[Diagnostic] = []

    def _advance(self, count: int = 1) -> None:
        for _ in range(count):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.column = 1
            else:
                self.column += 1
            self.pos += 1

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        text = self.text
        while self.pos < len(text):
            c = text[self.pos]
            if c in " \t\r\n":
                self._advance()
                continue
            if c == "#":
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
                continue
            line, column = self.line, self.column
            two = text[self.pos:self.pos + 2]
            if two in ("->", "<="):
                out.append(Token("punct", two, line, column))
                self._advance(2)
                continue
            if c in "{};,:[]":
                out.append(Token("punct", c, line, column))
                self._advance()
                continue
            if c == '"':
                value, ok = self._string()
                out.append(Token("string", value, line, column))
                if not ok:
                    break
                continue
            if c.isdigit():
                start = self.pos
                while self.pos < len(text) and text[self.pos].isdigit():
                    self._advance()
                out.append(Token("int", text[start:self.pos], line, column))
                continue
            if _is_ident_start(c):
                start = self.pos
                self._advance()
                while self.pos < len(text):
                    ch = text[self.pos]
                    if _is_ident_part(ch):
                        self._advance()
                    elif ch == "-" and self.pos + 1 < len(text) \
                            and _is_ident_part(text[self.pos + 1]) \
                            and text[self.pos + 1] != ".":
                        # hyphenated words like defined-by; "->" stays punct
                        self._advance()
                    else:
                        break
                out.append(Token("ident", text[start:self.pos], line, column))
                continue
            self.diagnostics.append(Diagnostic(
                "error", f"unexpected character {c!r}", line, column,
                code="E100"))
            self._advance()
        out.append(Token("eof", "", self.line, self.column))
        return out

    def _string(self) -> tuple[str, bool]:
        line, column = self.line, self.column
        self._advance()  # opening quote
        chars: list[str] = []
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c == '"':
                self._advance()
                return "".join(chars), True
            if c == "\n":
                break
            if c == "\\" and self.pos + 1 < len(self.text):
                nxt = self.text[self.pos + 1]
                if nxt in ('"', "\\"):
                    chars.append(nxt)
                    self._advance(2)
                    continue
                if nxt == "n":
                    chars.append("\n")
                    self._advance(2)
                    continue
            chars.append(c)
            self._advance()
        self.diagnostics.append(Diagnostic(
            "error", "unterminated string literal", line, column,
            code="E100"))
        return "".join(chars), False


# ---------------------------------------------------------------------------
# Parsed model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubnetStyle:
    name: str
    label: str = ""
    color: str = ""
    within: str = ""


@dataclass(frozen=True)
class SourceModel:
    """A parsed model plus its presentation hints and provenance.

    Provenance fields do not take part in equality: two sources describing
    the same model compare equal.
    """

    network: Network
    outcomes: tuple[OutcomeSpec, ...] = ()
    subnet_styles: dict[str, SubnetStyle] = field(default_factory=dict)
    source_path: str | None = field(default=None, compare=False)
    content_hash: str = field(default="", compare=False)


@dataclass(frozen=True)
class ParseResult:
    model: SourceModel | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.model is not None and not self.errors

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")


class _ParseAbort(Exception):
    pass


class _Parser:
    """Recursive-descent parser over the token stream."""

    def __init__(self, tokens: list[Token], diagnostics: list[Diagnostic],
                 base_dir: Path | None, nested: bool = False):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics = diagnostics
        self.base_dir = base_dir
        self.nested = nested
        self.sites: dict[str, Site] = {}
        self.channels: dict[str, Channel] = {}
        self.alternatives: dict[str, AlternativeSet] = {}
        self.outcomes: dict[str, OutcomeSpec] = {}
        self.types: set[str] = set()
        self.subtype_edges: set[tuple[str, str]] = set()
        self.rules: list[InferenceRule] = []
        self.styles: dict[str, SubnetStyle] = {}
        self.locations: dict[tuple[str, str], Token] = {}
        self.tag_uses: list[tuple[str, Token]] = []  # must exist in vocabulary
        self.vocabulary: set[str] = set()

    # -- token helpers ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, tok: Token, message: str, code: str = "E100") -> None:
        self.diagnostics.append(Diagnostic(
            "error", message, tok.line, tok.column, tok.length, code))

    def expect_punct(self, text: str) -> Token:
        tok = self.next()
        if tok.kind != "punct" or tok.text != text:
            self.error(tok, f"expected {text!r}, found {tok.text!r}")
            raise _ParseAbort
        return tok

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.next()
        if tok.kind != "ident":
            self.error(tok, f"expected {what}, found {tok.text!r}")
            raise _ParseAbort
        return tok

    def expect_string(self, what: str = "string") -> Token:
        tok = self.next()
        if tok.kind != "string":
            self.error(tok, f"expected {what}, found {tok.text!r}")
            raise _ParseAbort
        return tok

    def expect_keyword(self, *words: str) -> Token:
        tok = self.next()
        if tok.kind != "ident" or tok.text not in words:
            self.error(tok, f"expected {' or '.join(map(repr, words))}, "
                            f"found {tok.text!r}")
            raise _ParseAbort
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text == word

    def name_ref(self) -> tuple[str, Token]:
        tok = self.next()
        if tok.kind not in ("ident", "string"):
            self.error(tok, f"expected a name, found {tok.text!r}")
            raise _ParseAbort
        return tok.text, tok

    def ident_list(self) -> list[tuple[str, Token]]:
        first = self.expect_ident()
        items = [(first.text, first)]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            t = self.expect_ident()
            items.append((t.text, t))
        return items

    def skip_to_block_end(self) -> None:
        """Recover from a bad statement: drop tokens to the next ';' or
        matching '}' so later declarations still get parsed."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if tok.kind == "punct":
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    if depth == 0:
                        return
                    depth -= 1
                elif tok.text == ";" and depth == 0:
                    self.next()
                    return
            self.next()

    # -- declarations -------------------------------------------------------

    def parse_model(self) -> None:
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "punct" and tok.text == "}":
                if self.nested:
                    return
                self.error(tok, "unmatched '}'")
                self.next()
                continue
            if tok.kind != "ident":
                self.error(tok, f"expected a declaration, found {tok.text!r}")
                self.next()
                continue
            handler = {
                "types": self.parse_types,
                "rule": self.parse_rule,
                "site": self.parse_site,
                "channel": self.parse_channel,
                "subnet": self.parse_subnet,
                "alt": self.parse_alt,
                "outcome": self.parse_outcome,
            }.get(tok.text)
            if handler is None:
                self.error(tok, f"unknown declaration {tok.text!r}",
                           code="E101")
                self.next()
                self.skip_to_block_end()
                continue
            try:
                handler()
            except _ParseAbort:
                self.skip_to_block_end()

    def declare(self, namespace: str, ident: Token) -> bool:
        key = (namespace, ident.text)
        if key in self.locations:
            self.error(ident, f"duplicate {namespace} id {ident.text!r}",
                       code="E102")
            return False
        self.locations[key] = ident
        return True

    def parse_types(self) -> None:
        self.next()  # 'types'
        self.expect_punct("{")
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            if self.peek().kind == "eof":
                self.error(self.peek(), "unterminated types block")
                raise _ParseAbort
            self.expect_keyword("type")
            ident = self.expect_ident("type id")
            self.types.add(ident.text)
            if self.peek().kind == "punct" and self.peek().text == "<=":
                self.next()
                for sup, _ in self.ident_list():
                    self.types.add(sup)
                    self.subtype_edges.add((ident.text, sup))
            self.expect_punct(";")
        self.next()  # '}'

    def _selector(self, allow_input: bool) -> tuple[str, int | None]:
        tok = self.expect_ident("selector")
        if tok.text not in (("channel", "input", "output") if allow_input
                            else ("channel", "output")):
            self.error(tok, f"unknown selector {tok.text!r}")
            raise _ParseAbort
        position: int | None = None
        if self.peek().kind == "punct" and self.peek().text == "[":
            self.next()
            num = self.next()
            if num.kind != "int":
                self.error(num, "expected a position index")
                raise _ParseAbort
            position = int(num.text)
            self.expect_punct("]")
        return tok.text, position

    def parse_rule(self) -> None:
        self.next()  # 'rule'
        ident = self.expect_ident("rule id")
        self.declare("rule", ident)
        self.expect_punct("{")
        conditions: list[tuple[str, int | None, str]] = []
        conclusion: tuple[str, int | None, str] | None = None
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            word = self.expect_keyword("when", "then")
            if word.text == "when":
                kind, position = self._selector(allow_input=True)
                self.expect_keyword("is")
                t = self.expect_ident("type id")
                conditions.append((kind, position, t.text))
            else:
                kind, position = self._selector(allow_input=False)
                self.expect_keyword("is")
                t = self.expect_ident("type id")
                conclusion = (kind, position, t.text)
            self.expect_punct(";")
        self.next()  # '}'
        if conclusion is None:
            self.error(ident, f"rule {ident.text!r} has no 'then' clause",
                       code="E106")
            return
        self.rules.append(InferenceRule(
            id=ident.text, conditions=tuple(conditions),
            conclusion_target=conclusion[0],
            conclusion_position=conclusion[1],
            conclusion_type=conclusion[2]))

    def parse_site(self) -> None:
        self.next()  # 'site'
        ident = self.expect_ident("site id")
        self.declare("site", ident)
        name = ""
        actor: str | None = None
        subnet: str | None = None
        types: set[str] = set()
        seeds: set[str] = set()
        tok = self.peek()
        if tok.kind == "punct" and tok.text == ";":
            self.next()
        else:
            self.expect_punct("{")
            while not (self.peek().kind == "punct" and self.peek().text == "}"):
                word = self.expect_keyword("name", "actor", "subnet", "type",
                                           "seed")
                if word.text == "name":
                    name = self.expect_string().text
                elif word.text == "actor":
                    actor = self.expect_ident("actor id").text
                elif word.text == "subnet":
                    subnet, _ = self.name_ref()
                elif word.text == "type":
                    types.update(t for t, _ in self.ident_list())
                else:
                    for tag, _ in self.ident_list():
                        seeds.add(tag)
                        self.vocabulary.add(tag)
                self.expect_punct(";")
            self.next()  # '}'
        self.sites[ident.text] = Site(
            id=ident.text, name=name, types=frozenset(types), actor=actor,
            seeds=frozenset(seeds), subnet=subnet)

    def parse_channel(self) -> None:
        self.next()  # 'channel'
        ident = self.expect_ident("channel id")
        self.declare("channel", ident)
        name = ""
        inputs: tuple[str, ...] = ()
        outputs: tuple[str, ...] = ()
        actor: str | None = None
        subnet: str | None = None
        types: set[str] = set()
        bias: set[str] = set()
        carries: list[CarryRule] = []
        drops: list[Mitigation] = []
        introduces: list[Introduce] = []
        proxies: list[Proxy] = []
        definition: Network | None = None
        anonymous_drops = 0
        self.expect_punct("{")
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            word = self.expect_keyword(
                "name", "from", "actor", "subnet", "type", "bias", "carry",
                "drop", "introduce", "proxy", "defined-by")
            if word.text == "name":
                name = self.expect_string().text
                self.expect_punct(";")
            elif word.text == "from":
                if inputs:
                    self.error(word, "channel already has a 'from' line",
                               code="E106")
                ins = self.ident_list()
                self.expect_punct("->")
                outs = self.ident_list()
                self.expect_punct(";")
                inputs = tuple(t for t, _ in ins)
                outputs = tuple(t for t, _ in outs)
                for sid, tok in ins + outs:
                    self.locations.setdefault(("siteref", f"{ident.text}/{sid}"),
                                              tok)
            elif word.text == "actor":
                actor = self.expect_ident("actor id").text
                self.expect_punct(";")
            elif word.text == "subnet":
                subnet, _ = self.name_ref()
                self.expect_punct(";")
            elif word.text == "type":
                types.update(t for t, _ in self.ident_list())
                self.expect_punct(";")
            elif word.text == "bias":
                bias.update(t for t, _ in self.ident_list())
                self.expect_punct(";")
            elif word.text == "carry":
                out = self.expect_ident("output site")
                self.expect_keyword("from")
                inp = self.expect_ident("input site")
                self.expect_punct(":")
                if self.at_keyword("all"):
                    self.next()
                    carries.append(CarryRule(out.text, inp.text, None))
                else:
                    tags = self.ident_list()
                    self.tag_uses.extend(tags)
                    carries.append(CarryRule(
                        out.text, inp.text,
                        frozenset(t for t, _ in tags)))
                self.expect_punct(";")
            elif word.text == "drop":
                tags = self.ident_list()
                self.tag_uses.extend(tags)
                conditional = False
                mid = None
                at: tuple[str, ...] = ()
                note = ""
                while not (self.peek().kind == "punct"
                           and self.peek().text == ";"):
                    tok = self.peek()
                    if tok.kind == "ident" and tok.text == "conditional":
                        self.next()
                        conditional = True
                    elif tok.kind == "string":
                        mid = self.next().text
                    elif tok.kind == "ident" and tok.text == "at":
                        self.next()
                        at = tuple(t for t, _ in self.ident_list())
                    elif tok.kind == "ident" and tok.text == "note":
                        self.next()
                        note = self.expect_string().text
                    else:
                        self.error(tok, f"unexpected {tok.text!r} in drop")
                        raise _ParseAbort
                self.expect_punct(";")
                if mid is None:
                    anonymous_drops += 1
                    mid = f"{ident.text}.d{anonymous_drops}"
                drops.append(Mitigation(
                    id=mid, tags=frozenset(t for t, _ in tags),
                    conditional=conditional, note=note, outputs=at))
                self.declare("mitigation", Token(
                    "ident", mid, word.line, word.column))
            elif word.text == "introduce":
                tag = self.expect_ident("feature tag")
                self.vocabulary.add(tag.text)
                self.expect_keyword("as")
                kind = self.expect_ident("bias kind")
                to: tuple[str, ...] = ()
                if self.at_keyword("to"):
                    self.next()
                    to = tuple(t for t, _ in self.ident_list())
                self.expect_punct(";")
                introduces.append(Introduce(tag.text, kind.text, to))
            elif word.text == "proxy":
                src = self.expect_ident("source tag")
                self.tag_uses.append((src.text, src))
                self.expect_punct("->")
                dst = self.expect_ident("proxy tag")
                self.vocabulary.add(dst.text)
                to = ()
                if self.at_keyword("to"):
                    self.next()
                    to = tuple(t for t, _ in self.ident_list())
                self.expect_punct(";")
                proxies.append(Proxy(src.text, dst.text, to))
            else:  # defined-by
                definition = self._definition(word)
        self.next()  # '}'
        if not inputs or not outputs:
            self.error(ident, f"channel {ident.text!r} needs a "
                              f"'from <sites> -> <sites>;' line",
                       code="E106")
            return
        flow = FlowSpec(
            carries=tuple(carries), drops=tuple(drops),
            introduces=tuple(introduces), proxies=tuple(proxies))
        self.channels[ident.text] = Channel(
            id=ident.text, inputs=inputs, outputs=outputs, name=name,
            types=frozenset(types), actor=actor, subnet=subnet, flow=flow,
            bias_kinds=frozenset(bias), definition=definition)

    def _definition(self, word: Token) -> Network | None:
        tok = self.peek()
        if tok.kind == "string":
            self.next()
            self.expect_punct(";")
            if self.base_dir is None:
                self.error(tok, "defined-by file reference needs a known "
                                "base directory; parse from a file",
                           code="E106")
                return None
            path = self.base_dir / tok.text
            try:
                nested_text = path.read_text(encoding="utf-8")
            except OSError as exc:
                self.error(tok, f"cannot read {tok.text!r}: {exc}",
                           code="E103")
                return None
            result = parse(nested_text, source_path=str(path), _nested=True)
            for d in result.diagnostics:
                self.diagnostics.append(Diagnostic(
                    d.severity, f"{tok.text}: {d.message}", tok.line,
                    tok.column, tok.length, d.code))
            if result.model is None:
                return None
            if result.model.network.alternatives or result.model.outcomes:
                self.error(tok, "a channel definition file may not declare "
                                "alternatives or outcomes", code="E106")
            self.vocabulary.update(result.model.network.known_tags())
            return result.model.network
        self.expect_punct("{")
        inner = _Parser(self.tokens, self.diagnostics, self.base_dir,
                        nested=True)
        inner.pos = self.pos
        inner.parse_model()
        self.pos = inner.pos
        self.expect_punct("}")
        if inner.alternatives:
            self.error(word, "alternatives are not allowed inside a "
                             "channel definition", code="E106")
        if inner.outcomes:
            self.error(word, "outcomes are not allowed inside a channel "
                             "definition", code="E106")
        network, _, _ = inner.link(check_tags=False)
        # Tag references inside the definition resolve against the whole
        # document's vocabulary, boundary traffic included.
        self.vocabulary.update(inner.vocabulary)
        self.tag_uses.extend(inner.tag_uses)
        return network

    def parse_subnet(self) -> None:
        self.next()  # 'subnet'
        name, name_tok = self.name_ref()
        self.declare("subnet", Token("ident", name, name_tok.line,
                                     name_tok.column))
        label = ""
        color = ""
        within = ""
        self.expect_punct("{")
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            word = self.expect_keyword("label", "color", "within")
            if word.text == "label":
                label = self.expect_string().text
            elif word.text == "color":
                color = self.expect_string().text
            else:
                within, _ = self.name_ref()
            self.expect_punct(";")
        self.next()  # '}'
        self.styles[name] = SubnetStyle(name=name, label=label, color=color,
                                        within=within)

    def parse_alt(self) -> None:
        self.next()  # 'alt'
        ident = self.expect_ident("alternative id")
        self.declare("alt", ident)
        variants: list[Variant] = []
        self.expect_punct("{")
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            word = self.expect_keyword("variant", "or-absent")
            if word.text == "or-absent":
                self.expect_punct(";")
                variants.append(Variant("absent"))
                continue
            vname = self.expect_ident("variant name")
            toggles: set[Toggle] = set()
            self.expect_punct("{")
            while not (self.peek().kind == "punct"
                       and self.peek().text == "}"):
                kind = self.expect_keyword("edge", "channel", "mitigation")
                if kind.text == "edge":
                    site = self.expect_ident("site id")
                    self.expect_punct("->")
                    channel = self.expect_ident("channel id")
                    toggles.add(Toggle("edge", (site.text, channel.text)))
                elif kind.text == "channel":
                    toggles.add(Toggle("channel",
                                       (self.expect_ident().text,)))
                else:
                    ref, _ = self.name_ref()
                    toggles.add(Toggle("mitigation", (ref,)))
                self.expect_punct(";")
            self.next()  # variant '}'
            variants.append(Variant(vname.text, frozenset(toggles)))
        self.next()  # alt '}'
        self.alternatives[ident.text] = AlternativeSet(
            id=ident.text, variants=tuple(variants))

    def parse_outcome(self) -> None:
        self.next()  # 'outcome'
        ident = self.expect_ident("outcome id")
        self.declare("outcome", ident)
        description = ""
        target = ""
        tags: set[str] = set()
        label = ""
        note = ""
        self.expect_punct("{")
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            word = self.expect_keyword("description", "target", "tags",
                                       "label", "note")
            if word.text == "description":
                description = self.expect_string().text
            elif word.text == "target":
                tok = self.expect_ident("site id")
                target = tok.text
                self.locations.setdefault(
                    ("siteref", f"outcome {ident.text}/{target}"), tok)
            elif word.text == "tags":
                uses = self.ident_list()
                self.tag_uses.extend(uses)
                tags.update(t for t, _ in uses)
            elif word.text == "label":
                label = self.expect_ident("label").text
            else:
                note = self.expect_string().text
            self.expect_punct(";")
        self.next()  # '}'
        if not target:
            self.error(ident, f"outcome {ident.text!r} needs a target site",
                       code="E106")
            return
        self.outcomes[ident.text] = OutcomeSpec(
            id=ident.text, target=target, tags=frozenset(tags),
            description=description, label=label, note=note)

    # -- linking ------------------------------------------------------------

    def link(self, check_tags: bool = True
             ) -> tuple[Network, tuple[OutcomeSpec, ...],
                        dict[str, SubnetStyle]]:
        # Abstract channels take their flow from their definition.
        for cid, ch in list(self.channels.items()):
            if ch.definition is None:
                continue
            flow = ch.flow
            assert isinstance(flow, FlowSpec)
            if flow != FlowSpec():
                loc = self.locations[("channel", cid)]
                self.error(loc, f"channel {cid!r} has both a definition and "
                                f"its own flow declarations", code="E106")
                continue
            if validate(ch.definition).ok:
                self.channels[cid] = replace(ch, flow=summarize_as_channel(
                    ch.definition, outputs=frozenset(ch.outputs)))

        network = Network(
            sites=dict(self.sites),
            channels=dict(self.channels),
            alternatives=dict(self.alternatives),
            type_system=TypeSystem(
                types=frozenset(self.types),
                subtype_edges=frozenset(self.subtype_edges),
                rules=tuple(self.rules)),
        )

        for (kind, key), tok in sorted(self.locations.items(),
                                       key=lambda kv: (kv[1].line,
                                                       kv[1].column)):
            if kind != "siteref":
                continue
            sid = key.rsplit("/", 1)[1]
            if sid not in self.sites:
                self.error(tok, f"unknown site {sid!r}", code="E103")

        if check_tags:
            for tag, tok in self.tag_uses:
                if tag not in self.vocabulary:
                    self.error(tok, f"unknown feature tag {tag!r}; tags come "
                                    f"into being via seed, introduce or "
                                    f"proxy", code="E104")

        for oid, outcome in sorted(self.outcomes.items()):
            loc = self.locations[("outcome", oid)]
            if outcome.label and any(
                    o.label == outcome.label and o.id != oid
                    for o in self.outcomes.values()):
                self.error(loc, f"outcome label {outcome.label!r} is used "
                                f"twice", code="E102")

        report = validate(network)
        for violation in report.violations:
            loc = None
            for subject in violation.subjects:
                for namespace in ("channel", "site", "alt"):
                    loc = self.locations.get((namespace, subject))
                    if loc:
                        break
                if loc:
                    break
            loc = loc or Token("ident", "", 1, 1)
            self.error(loc, f"{violation.message}",
                       code=f"E105.{violation.code}")

        for name in sorted(self.styles):
            referenced = any(s.subnet == name for s in self.sites.values()) \
                or any(c.subnet == name for c in self.channels.values()) \
                or any(st.within == name for st in self.styles.values())
            if not referenced:
                tok = self.locations.get(("subnet", name),
                                         Token("ident", name, 1, 1))
                self.diagnostics.append(Diagnostic(
                    "warning", f"style for unreferenced sub-network "
                               f"{name!r}", tok.line, tok.column,
                    tok.length, "W200"))

        return network, tuple(self.outcomes[oid]
                              for oid in sorted(self.outcomes)), \
            dict(self.styles)


def _normalize(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def parse(text: str, source_path: str | None = None,
          _nested: bool = False) -> ParseResult:
    """Parse .ifm text into a SourceModel, or into located diagnostics."""
    normalized = _normalize(text)
    digest = hashlib.sha256(normalized.encode("utf-8")).hexdigest()
    lexer = _Lexer(normalized)
    tokens = lexer.tokens()
    diagnostics: list[Diagnostic] = list(lexer.diagnostics)
    base_dir = Path(source_path).parent if source_path else None
    parser = _Parser(tokens, diagnostics, base_dir)
    parser.parse_model()
    network, outcomes, styles = parser.link(check_tags=not _nested)
    model: SourceModel | None = SourceModel(
        network=network, outcomes=outcomes, subnet_styles=styles,
        source_path=source_path, content_hash=digest)
    if any(d.severity == "error" and d.code in ("E100", "E101")
           for d in diagnostics):
        # Syntax-level failures leave no trustworthy model behind;
        # semantic errors keep the partial model for inspection.
        model = None
    diagnostics.sort(key=lambda d: (d.line, d.column, d.code))
    return ParseResult(model, tuple(diagnostics))


def parse_file(path: str | Path) -> ParseResult:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), source_path=str(path))


def parse_files(*paths: str | Path) -> ParseResult:
    """Parse several fragment files as one document (model + outcomes).

    Diagnostics are remapped onto the file they point into.
    """
    parts: list[str] = []
    spans: list[tuple[int, int, str]] = []
    line = 1
    for p in paths:
        text = _normalize(Path(p).read_text(encoding="utf-8"))
        if not text.endswith("\n"):
            text += "\n"
        count = text.count("\n")
        spans.append((line, line + count - 1, str(p)))
        parts.append(text)
        line += count
    result = parse("".join(parts), source_path=str(paths[0]))
    remapped = []
    for d in result.diagnostics:
        for start, end, path in spans:
            if start <= d.line <= end:
                remapped.append(replace(d, line=d.line - start + 1,
                                        source=path))
                break
        else:
            remapped.append(d)
    return ParseResult(result.model, tuple(remapped))


# ---------------------------------------------------------------------------
# Canonical serializer
# ---------------------------------------------------------------------------

def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    escaped = escaped.replace("\n", "\\n")
    return f'"{escaped}"'


def _name_out(name: str) -> str:
    if name and all(_is_ident_part(c) or c == "-" for c in name) \
            and _is_ident_start(name[0]):
        return name
    return _quote(name)


def _serialize_flow(lines: list[str], ch: Channel) -> None:
    flow = ch.flow
    if not isinstance(flow, FlowSpec):
        return
    for rule in sorted(flow.carries,
                       key=lambda r: (r.output, r.input,
                                      tuple(sorted(r.tags or ())))):
        tags = "all" if rule.tags is None else ", ".join(sorted(rule.tags))
        lines.append(f"  carry {rule.output} from {rule.input}: {tags};")
    for m in sorted(flow.drops, key=lambda m: m.id):
        parts = ["  drop " + ", ".join(sorted(m.tags))]
        if m.conditional:
            parts.append("conditional")
        parts.append(_quote(m.id))
        if m.outputs:
            parts.append("at " + ", ".join(m.outputs))
        if m.note:
            parts.append("note " + _quote(m.note))
        lines.append(" ".join(parts) + ";")
    for intro in sorted(flow.introduces, key=lambda i: (i.tag, i.kind)):
        line = f"  introduce {intro.tag} as {intro.kind}"
        if intro.outputs:
            line += " to " + ", ".join(intro.outputs)
        lines.append(line + ";")
    for proxy in sorted(flow.proxies, key=lambda p: (p.source, p.target)):
        line = f"  proxy {proxy.source} -> {proxy.target}"
        if proxy.outputs:
            line += " to " + ", ".join(proxy.outputs)
        lines.append(line + ";")


def _serialize_network(n: Network, outcomes: tuple[OutcomeSpec, ...],
                       styles: dict[str, SubnetStyle],
                       indent: str = "") -> list[str]:
    lines: list[str] = []
    ts = n.type_system
    if ts.types:
        lines.append("types {")
        supers: dict[str, list[str]] = {}
        for sub, sup in sorted(ts.subtype_edges):
            supers.setdefault(sub, []).append(sup)
        for t in sorted(ts.types):
            if t in supers:
                lines.append(f"  type {t} <= {', '.join(sorted(supers[t]))};")
            else:
                lines.append(f"  type {t};")
        lines.append("}")
        lines.append("")
    for rule in sorted(ts.rules, key=lambda r: r.id):
        lines.append(f"rule {rule.id} {{")
        for kind, position, t in rule.conditions:
            sel = kind if position is None else f"{kind}[{position}]"
            lines.append(f"  when {sel} is {t};")
        sel = rule.conclusion_target if rule.conclusion_position is None \
            else f"{rule.conclusion_target}[{rule.conclusion_position}]"
        lines.append(f"  then {sel} is {rule.conclusion_type};")
        lines.append("}")
        lines.append("")
    for sid in sorted(n.sites):
        site = n.sites[sid]
        body: list[str] = []
        if site.name:
            body.append(f"  name {_quote(site.name)};")
        if site.actor:
            body.append(f"  actor {site.actor};")
        if site.subnet:
            body.append(f"  subnet {_name_out(site.subnet)};")
        if site.types:
            body.append(f"  type {', '.join(sorted(site.types))};")
        if site.seeds:
            body.append(f"  seed {', '.join(sorted(site.seeds))};")
        if body:
            lines.append(f"site {sid} {{")
            lines.extend(body)
            lines.append("}")
        else:
            lines.append(f"site {sid};")
    if n.sites:
        lines.append("")
    for cid in sorted(n.channels):
        ch = n.channels[cid]
        lines.append(f"channel {cid} {{")
        if ch.name:
            lines.append(f"  name {_quote(ch.name)};")
        lines.append(f"  from {', '.join(ch.inputs)} -> "
                     f"{', '.join(ch.outputs)};")
        if ch.actor:
            lines.append(f"  actor {ch.actor};")
        if ch.subnet:
            lines.append(f"  subnet {_name_out(ch.subnet)};")
        if ch.types:
            lines.append(f"  type {', '.join(sorted(ch.types))};")
        if ch.bias_kinds:
            lines.append(f"  bias {', '.join(sorted(ch.bias_kinds))};")
        if ch.definition is not None:
            nested = _serialize_network(ch.definition, (), {})
            lines.append("  defined-by {")
            lines.extend("    " + line if line else ""
                         for line in nested)
            while lines and lines[-1] == "":
                lines.pop()
            lines.append("  }")
        else:
            _serialize_flow(lines, ch)
        lines.append("}")
        lines.append("")
    for name in sorted(styles):
        style = styles[name]
        lines.append(f"subnet {_name_out(name)} {{")
        if style.label:
            lines.append(f"  label {_quote(style.label)};")
        if style.color:
            lines.append(f"  color {_quote(style.color)};")
        if style.within:
            lines.append(f"  within {_name_out(style.within)};")
        lines.append("}")
        lines.append("")
    for aid in sorted(n.alternatives):
        alt = n.alternatives[aid]
        lines.append(f"alt {aid} {{")
        for variant in alt.variants:
            if not variant.toggles and variant.name == "absent":
                lines.append("  or-absent;")
                continue
            lines.append(f"  variant {variant.name} {{")
            for toggle in sorted(variant.toggles,
                                 key=lambda t: (t.kind, t.ref)):
                if toggle.kind == "edge":
                    lines.append(f"    edge {toggle.ref[0]} -> "
                                 f"{toggle.ref[1]};")
                elif toggle.kind == "channel":
                    lines.append(f"    channel {toggle.ref[0]};")
                else:
                    lines.append(f"    mitigation "
                                 f"{_name_out(toggle.ref[0])};")
            lines.append("  }")
        lines.append("}")
        lines.append("")
    for outcome in sorted(outcomes, key=lambda o: o.id):
        lines.append(f"outcome {outcome.id} {{")
        if outcome.description:
            lines.append(f"  description {_quote(outcome.description)};")
        lines.append(f"  target {outcome.target};")
        if outcome.tags:
            lines.append(f"  tags {', '.join(sorted(outcome.tags))};")
        if outcome.label:
            lines.append(f"  label {outcome.label};")
        if outcome.note:
            lines.append(f"  note {_quote(outcome.note)};")
        lines.append("}")
        lines.append("")
    return lines


def serialize(model: SourceModel) -> str:
    """Deterministic canonical text: blocks sorted by id, fixed field
    order, byte-identical output for structurally equal models."""
    lines = ["# ifm model v1", ""]
    lines.extend(_serialize_network(model.network, model.outcomes,
                                    model.subnet_styles))
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"

"""Robust shallow chart parsing of caption lines.

The chart is a bottom-up CKY generalised to n-ary rules (single-daughter
rules run as a closure pass per span).  Parsing never fails: when no
root-category edge spans the whole line, a fragment cover partitions it
into the fewest, leftmost-longest phrases instead.  Punctuation tokens
never enter the chart; a medial comma bounds fragments and the final
mark sets the line's punctuation and interrogative flags.

Every lexical sign receives a fresh semantic index at lookup.  During
parsing, rule variables unify those indices into the argument slots of
other signs, which is all the structure later stages ever see.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import fs as F
from . import rules as R
from .formats import Grammar, Lexicon
from .fs import FS

PUNCT_CHARS = ".,!?;:"

PASSTHROUGH_CAT = "unk"


@dataclass
class Token:
    text: str        # lowercased surface form used for lookup
    original: str    # as written in the input line
    pos: int
    kind: str        # "word" | "punct"


def tokenize(line: str) -> list[Token]:
    """Whitespace words with leading/trailing punctuation split off."""
    tokens: list[Token] = []

    def add(text: str, kind: str) -> None:
        tokens.append(Token(text.lower(), text, len(tokens), kind))

    for chunk in line.split():
        head = 0
        while head < len(chunk) and chunk[head] in PUNCT_CHARS:
            head += 1
        tail = len(chunk)
        while tail > head and chunk[tail - 1] in PUNCT_CHARS:
            tail -= 1
        for ch in chunk[:head]:
            add(ch, "punct")
        if head < tail:
            add(chunk[head:tail], "word")
        for ch in chunk[tail:]:
            add(ch, "punct")
    return tokens


def lookup(token: Token, lexicon: Lexicon, mint=None) -> list[FS]:
    """All homonym signs for a word token, each with a fresh index.

    Unknown forms yield one passthrough sign (cat unk); brackets around a
    form, as produced for passthrough output, are stripped back off.
    """
    if mint is None:
        counter = itertools.count(1)
        mint = lambda: f"i{next(counter)}"
    form = token.text
    if form.startswith("[") and form.endswith("]") and len(form) > 2:
        form = form[1:-1]
    signs: list[FS] = []
    for entry in lexicon.by_form.get(form, []):
        pairs = [(("sem", "index"), F.atom(mint()))]
        if "proper-name" in entry.flags:
            pairs.append((("proper",), F.atom("yes")))
        sign = F.try_unify(entry.sign, F.from_paths(pairs))
        signs.append(sign if sign is not None else entry.sign)
    if not signs:
        signs.append(F.struct({
            "cat": F.atom(PASSTHROUGH_CAT),
            "lemma": F.atom(form),
            "sem": F.struct({"index": F.atom(mint())}),
        }))
    return signs


@dataclass
class Edge:
    start: int
    end: int
    rule: str                  # rule name, or "lexical"
    children: tuple
    env: FS                    # {sign: ..., lex: {wN: ...}}
    n_edges: int
    trace: tuple
    homonym: int = 0

    @property
    def sign(self) -> FS:
        return F.resolve(self.env, ("sign",))

    def signature(self):
        if self.rule == "lexical":
            return ("lex", self.start, self.homonym)
        return (self.rule,) + tuple(child.signature() for child in self.children)


def edge_cat(edge: Edge) -> str | None:
    node = F.resolve(edge.env, ("sign", "cat"))
    return node.value if node is not None and node.is_atom() else None


def _lexical_env(sign: FS, pos: int) -> FS:
    return F.struct({"sign": sign, "lex": F.struct({f"w{pos}": sign})})


def _combined_env(acc: FS, children: tuple) -> FS:
    lex: dict[str, FS] = {}
    for i, child in enumerate(children):
        for pos in range(child.start, child.end):
            key = f"w{pos}"
            node = F.resolve(acc, (f"d{i}", "lex", key))
            if node is not None:
                lex[key] = node
    return F.struct({"sign": R.mother_of(acc), "lex": F.struct(lex)})


def chart_parse(signs_per_pos: list[list[FS]], grammar: Grammar,
                breaks: frozenset[int] = frozenset(), trace: list | None = None):
    """Chart over a sequence of candidate sign lists; returns span -> edges.

    `breaks` are positions no edge may cross (fragment boundaries from
    medial punctuation).
    """
    n = len(signs_per_pos)
    chart: dict[tuple[int, int], list[Edge]] = {}
    unary = [r for r in grammar.rules if len(r.daughters) == 1]
    nary = [r for r in grammar.rules if len(r.daughters) >= 2]
    daughter_cats = {r.name: [R.rule_daughter_cat(r, i) for i in range(len(r.daughters))]
                     for r in grammar.rules}

    def cat_fits(rule_name: str, i: int, edge: Edge) -> bool:
        want = daughter_cats[rule_name][i]
        have = edge_cat(edge)
        return want is None or have is None or want == have

    def emit(edge: Edge) -> None:
        chart.setdefault((edge.start, edge.end), []).append(edge)
        if trace is not None:
            trace.append(f"EDGE {edge.start}-{edge.end} {edge.rule} {F.canonical(edge.sign)}")

    def close_unary(fresh: list[Edge]) -> None:
        frontier = fresh
        while frontier:
            new: list[Edge] = []
            for rule in unary:
                for child in frontier:
                    if not cat_fits(rule.name, 0, child):
                        continue
                    applied = R.apply_rule(rule, [child.env])
                    if applied is None:
                        continue
                    acc, _record = applied
                    edge = Edge(child.start, child.end, rule.name, (child,),
                                _combined_env(acc, (child,)),
                                1 + child.n_edges, (rule.name,) + child.trace)
                    emit(edge)
                    new.append(edge)
            frontier = new

    for width in range(1, n + 1):
        for start in range(0, n - width + 1):
            end = start + width
            if any(start < b < end for b in breaks):
                continue
            fresh: list[Edge] = []
            if width == 1:
                for h, sign in enumerate(signs_per_pos[start]):
                    edge = Edge(start, end, "lexical", (), _lexical_env(sign, start),
                                1, (f"lex/{start}/{h}",), h)
                    emit(edge)
                    fresh.append(edge)
            for rule in nary:
                k = len(rule.daughters)
                if k > width:
                    continue
                for comp in _compositions(width, k):
                    bounds = [start]
                    for part in comp:
                        bounds.append(bounds[-1] + part)
                    cells = [[e for e in chart.get((bounds[i], bounds[i + 1]), [])
                              if cat_fits(rule.name, i, e)] for i in range(k)]
                    for children in itertools.product(*cells):
                        applied = R.apply_rule(rule, [c.env for c in children])
                        if applied is None:
                            continue
                        acc, _record = applied
                        edge = Edge(start, end, rule.name, children,
                                    _combined_env(acc, children),
                                    1 + sum(c.n_edges for c in children),
                                    (rule.name,) + tuple(t for c in children for t in c.trace))
                        emit(edge)
                        fresh.append(edge)
            close_unary(fresh)
    return chart


def _compositions(total: int, k: int):
    if k == 1:
        yield (total,)
        return
    for head in range(1, total - k + 2):
        for rest in _compositions(total - head, k - 1):
            yield (head,) + rest


@dataclass
class ParseResult:
    words: list[Token]
    spanning: list[Edge]
    chosen: Edge | None
    cover: list[Edge]
    interrogative: bool = False
    final_punct: str = ""
    breaks: frozenset[int] = frozenset()


def _edge_key(edge: Edge, roots: set[str]):
    return (0 if edge_cat(edge) in roots else 1, edge.n_edges, edge.trace)


def parse(tokens: list[Token], grammar: Grammar, lexicon: Lexicon,
          trace: list | None = None) -> ParseResult:
    words = [t for t in tokens if t.kind == "word"]
    # medial punctuation bounds fragments; the trailing mark is policy input
    breaks: set[int] = set()
    seen_words = 0
    for tok in tokens:
        if tok.kind == "word":
            seen_words += 1
        elif 0 < seen_words < len(words):
            breaks.add(seen_words)
    final_punct = tokens[-1].text if tokens and tokens[-1].kind == "punct" else ""
    interrogative = final_punct == "?"

    counter = itertools.count(1)
    mint = lambda: f"i{next(counter)}"
    signs_per_pos = [lookup(t, lexicon, mint) for t in words]
    chart = chart_parse(signs_per_pos, grammar, frozenset(breaks), trace)

    n = len(words)
    spanning = [e for e in chart.get((0, n), []) if edge_cat(e) in grammar.root_set] if n else []
    chosen = min(spanning, key=lambda e: (e.n_edges, e.trace)) if spanning else None

    cover: list[Edge] = []
    if n and chosen is None:
        cover = _fragment_cover(chart, n, grammar.root_set)
    elif chosen is not None:
        cover = [chosen]
    return ParseResult(words, spanning, chosen, cover, interrogative, final_punct, frozenset(breaks))


def _fragment_cover(chart, n: int, roots: set[str]) -> list[Edge]:
    best_edge: dict[tuple[int, int], Edge] = {}
    for span, edges in chart.items():
        best_edge[span] = min(edges, key=lambda e: _edge_key(e, roots))
    # fewest fragments from each position, then greedy leftmost-longest
    INF = n + 1
    best = [INF] * (n + 1)
    best[n] = 0
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n + 1):
            if (i, j) in best_edge and best[j] + 1 < best[i]:
                best[i] = best[j] + 1
    cover: list[Edge] = []
    i = 0
    while i < n:
        j = max(j for j in range(i + 1, n + 1)
                if (i, j) in best_edge and best[j] + 1 == best[i])
        cover.append(best_edge[(i, j)])
        i = j
    return cover


@dataclass
class BagSign:
    position: int
    surface: str
    original: str
    lemma: str
    cat: str | None
    index: str | None
    fs: FS
    passthrough: bool
    proper: bool
    fragment: int


@dataclass
class SourceBag:
    signs: list[BagSign] = field(default_factory=list)
    fragments: list[tuple[int, int]] = field(default_factory=list)
    interrogative: bool = False
    final_punct: str = ""


def extract_bag(result: ParseResult) -> SourceBag:
    """Enriched lexical signs of the chosen analysis; phrasal signs drop out."""
    bag = SourceBag(interrogative=result.interrogative, final_punct=result.final_punct)
    for fragment_id, edge in enumerate(result.cover):
        bag.fragments.append((edge.start, edge.end))
        for pos in range(edge.start, edge.end):
            sign = F.resolve(edge.env, ("lex", f"w{pos}"))
            token = result.words[pos]
            lemma = F.resolve(sign, ("lemma",))
            cat = F.resolve(sign, ("cat",))
            index = F.resolve(sign, ("sem", "index"))
            proper = F.resolve(sign, ("proper",))
            bag.signs.append(BagSign(
                position=pos,
                surface=token.text,
                original=token.original,
                lemma=lemma.value if lemma is not None and lemma.is_atom() else token.text,
                cat=cat.value if cat is not None and cat.is_atom() else None,
                index=index.value if index is not None and index.is_atom() else None,
                fs=sign,
                passthrough=(cat is not None and cat.is_atom() and cat.value == PASSTHROUGH_CAT),
                proper=(proper is not None and proper.is_atom() and proper.value == "yes"),
                fragment=fragment_id,
            ))
    return bag

"""Loaders and serializers for the three lingware file kinds.

One s-expression based, line-oriented text format covers monolingual
lexicons, grammars and the bilingual lexicon; `;` starts a comment.
Loaders never abort mid-file: every problem in a file is reported as a
Diagnostic with its line number, bad forms are skipped, and the rest of
the file still loads.  Variables written `?name` scope over a single
entry, rule or macro, which is how one form expresses sharing between
its parts (a rule's mother and daughters, an entry's two sides).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import fs as F
from .fs import FS


@dataclass
class Diagnostic:
    line: int
    message: str
    file: str | None = None

    def __str__(self) -> str:
        where = f"{self.file}:{self.line}" if self.file else f"line {self.line}"
        return f"{where}: {self.message}"


# ---------------------------------------------------------------------------
# Reader: raw text to form trees with line numbers.

@dataclass
class Tok:
    kind: str  # open close string sym var key
    text: str
    line: int


@dataclass
class SList:
    items: list
    line: int


_SCAN_RE = re.compile(
    r"""(?:
        (?P<ws>\s+)
      | (?P<comment>;[^\n]*)
      | (?P<open>\()
      | (?P<close>\))
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<key>:[A-Za-z][A-Za-z0-9-]*)
      | (?P<var>\?[A-Za-z0-9_-]+=?)
      | (?P<sym>[^\s()";?:][^\s()";]*)
    )""",
    re.VERBOSE,
)


def _scan(text: str, diags: list[Diagnostic], filename: str | None):
    tokens: list[Tok] = []
    pos = 0
    line = 1
    while pos < len(text):
        m = _SCAN_RE.match(text, pos)
        if m is None:
            diags.append(Diagnostic(line, f"bad character {text[pos]!r}", filename))
            pos += 1
            continue
        kind = m.lastgroup
        chunk = m.group(0)
        if kind not in ("ws", "comment"):
            tokens.append(Tok(kind, chunk, line))
        line += chunk.count("\n")
        pos = m.end()
    return tokens


def read_forms(text: str, diags: list[Diagnostic], filename: str | None = None) -> list[SList]:
    tokens = _scan(text, diags, filename)
    forms: list[SList] = []
    stack: list[SList] = []
    for tok in tokens:
        if tok.kind == "open":
            stack.append(SList([], tok.line))
        elif tok.kind == "close":
            if not stack:
                diags.append(Diagnostic(tok.line, "unbalanced ')'", filename))
                continue
            done = stack.pop()
            if stack:
                stack[-1].items.append(done)
            else:
                forms.append(done)
        else:
            if not stack:
                diags.append(Diagnostic(tok.line, f"stray token {tok.text!r} outside any form", filename))
                continue
            stack[-1].items.append(tok)
    for open_form in stack:
        diags.append(Diagnostic(open_form.line, "unterminated '('", filename))
    return forms


def _unquote(text: str) -> str:
    return text[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def _head(form: SList) -> str | None:
    if form.items and isinstance(form.items[0], Tok) and form.items[0].kind == "sym":
        return form.items[0].text
    return None


def _split_keywords(items: list, diags: list[Diagnostic], filename: str | None):
    """Split a form body into leading items plus keyword-to-items sections."""
    leading: list = []
    sections: dict[str, list] = {}
    current: list | None = None
    for item in items:
        if isinstance(item, Tok) and item.kind == "key":
            name = item.text[1:]
            if name in sections:
                diags.append(Diagnostic(item.line, f"duplicate keyword :{name}", filename))
            current = sections.setdefault(name, [])
        elif current is None:
            leading.append(item)
        else:
            current.append(item)
    return leading, sections


# ---------------------------------------------------------------------------
# Feature structures from form trees.

class _FormError(Exception):
    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message


class _Scope:
    """Variable scope of one entry/rule/macro form.

    A binding `?name=(...)` may appear before or after other uses of the
    variable, so structures are described first and materialised once the
    whole form has been read.
    """

    def __init__(self):
        self.bindings: dict[str, tuple] = {}
        self.nodes: dict[str, FS] = {}
        self.in_progress: set[str] = set()


def _ir_value(items: list, scope: _Scope):
    if not items:
        return ("complex", [])
    first = items[0]
    if isinstance(first, Tok) and first.kind == "sym":
        if len(items) > 1:
            raise _FormError(first.line, f"unexpected material after atom {first.text!r}")
        return ("atom", first.text)
    if isinstance(first, Tok) and first.kind == "string":
        if len(items) > 1:
            raise _FormError(first.line, "unexpected material after string value")
        return ("atom", _unquote(first.text))
    if isinstance(first, Tok) and first.kind == "var":
        binds = first.text.endswith("=")
        name = first.text[1:-1] if binds else first.text[1:]
        if binds:
            if name in scope.bindings:
                raise _FormError(first.line, f"variable ?{name} bound twice")
            scope.bindings[name] = (_ir_value(items[1:], scope), first.line)
            return ("var", name)
        if len(items) > 1:
            raise _FormError(first.line, f"unexpected material after variable ?{name}")
        return ("var", name)
    feats: list[tuple[str, tuple]] = []
    for item in items:
        if not isinstance(item, SList):
            raise _FormError(getattr(item, "line", 0),
                             f"unexpected token {getattr(item, 'text', item)!r} in feature groups")
        if not item.items:
            if len(items) > 1:
                raise _FormError(item.line, "unexpected () among feature groups")
            return ("complex", [])
        feat_tok = item.items[0]
        if not (isinstance(feat_tok, Tok) and feat_tok.kind == "sym"):
            raise _FormError(item.line, "feature name expected after '('")
        feat = feat_tok.text
        if any(feat == f for f, _ in feats):
            raise _FormError(item.line, f"duplicate feature name {feat!r}")
        feats.append((feat, _ir_value(item.items[1:], scope)))
    return ("complex", feats)


def _materialize(ir, scope: _Scope, line: int) -> FS:
    kind = ir[0]
    if kind == "atom":
        return F.atom(ir[1])
    if kind == "var":
        name = ir[1]
        node = scope.nodes.get(name)
        if node is not None:
            return node
        bound = scope.bindings.get(name)
        if bound is None:
            node = F.var(name)
        else:
            if name in scope.in_progress:
                raise _FormError(bound[1], f"variable ?{name} is bound to a cycle")
            scope.in_progress.add(name)
            node = _materialize(bound[0], scope, bound[1])
            scope.in_progress.discard(name)
        scope.nodes[name] = node
        return node
    return F.struct({f: _materialize(sub, scope, line) for f, sub in ir[1]})


def _fs_groups(items: list, scope: _Scope, diags: list[Diagnostic],
               filename: str | None, line: int):
    """First phase: describe.  Returns an IR token finished by _finish_fs."""
    try:
        return _ir_value(items, scope)
    except _FormError as err:
        diags.append(Diagnostic(err.line or line, err.message, filename))
        return None


def _finish_fs(ir, scope: _Scope, diags: list[Diagnostic],
               filename: str | None, line: int) -> FS | None:
    if ir is None:
        return None
    try:
        return _materialize(ir, scope, line)
    except _FormError as err:
        diags.append(Diagnostic(err.line or line, err.message, filename))
        return None


# ---------------------------------------------------------------------------
# Domain objects.

@dataclass
class LexicalEntry:
    form: str
    lemma: str
    flags: frozenset[str]
    sign: FS
    line: int = 0


@dataclass
class Lexicon:
    entries: list[LexicalEntry] = field(default_factory=list)
    by_form: dict[str, list[LexicalEntry]] = field(default_factory=dict)
    by_lemma: dict[str, list[LexicalEntry]] = field(default_factory=dict)

    def add(self, entry: LexicalEntry) -> None:
        self.entries.append(entry)
        self.by_form.setdefault(entry.form, []).append(entry)
        self.by_lemma.setdefault(entry.lemma, []).append(entry)


GOAL_REGISTRY: dict[str, tuple[str, ...]] = {
    "agree": ("path", "path"),      # unify the nodes at two daughter paths
    "require": ("path", "const"),   # the node at the path must unify with the atom
    "prohibit": ("path", "const"),  # fails iff the path resolves to exactly that atom
}


@dataclass
class GoalCall:
    name: str
    args: list  # ("path", daughter, (feat, ...)) | ("const", value)


@dataclass
class GrammarRule:
    name: str
    mother: FS
    daughters: list[FS]
    goals: list[GoalCall] = field(default_factory=list)
    line: int = 0

    def __post_init__(self):
        self._wrapper: FS | None = None


@dataclass
class Grammar:
    rules: list[GrammarRule] = field(default_factory=list)
    roots: tuple[str, ...] = ()
    direction: str | None = None

    def __post_init__(self):
        self.root_set = set(self.roots)

    @property
    def root_categories(self) -> set[str]:
        return self.root_set


@dataclass
class TransferMacro:
    name: str
    trigger: FS
    source_extra: list[FS] = field(default_factory=list)
    target_extra: list[FS] = field(default_factory=list)
    line: int = 0


@dataclass
class BilingualEntry:
    name: str
    key: str
    source: list[FS]
    target: list[FS]
    macro_names: list[str] = field(default_factory=list)
    macros: list[TransferMacro] = field(default_factory=list)
    key_index: int = 0
    index: int = 0  # position in file order; later stages use it for tie-breaking
    line: int = 0


@dataclass
class BilingualLexicon:
    entries: list[BilingualEntry] = field(default_factory=list)
    macros: dict[str, TransferMacro] = field(default_factory=dict)
    by_key: dict[str, list[BilingualEntry]] = field(default_factory=dict)

    def add(self, entry: BilingualEntry) -> None:
        entry.index = len(self.entries)
        self.entries.append(entry)
        self.by_key.setdefault(entry.key, []).append(entry)


@dataclass
class Policy:
    inverted_question: bool = False


@dataclass
class Manifest:
    files: list[str] = field(default_factory=list)
    covers: list[str] = field(default_factory=list)
    passthrough_ok: list[str] = field(default_factory=list)


@dataclass
class Lingware:
    source_lexicon: Lexicon
    source_grammar: Grammar
    bilingual: BilingualLexicon
    target_lexicon: Lexicon
    target_grammar: Grammar
    policy: Policy
    manifest: Manifest | None = None
    path: str | None = None


# ---------------------------------------------------------------------------
# Lexicon loading.

def _string_or_sym(item, what: str, diags, filename) -> str | None:
    if isinstance(item, Tok) and item.kind == "string":
        return _unquote(item.text)
    if isinstance(item, Tok) and item.kind == "sym":
        return item.text
    diags.append(Diagnostic(getattr(item, "line", 0), f"{what} expected", filename))
    return None


def load_lexicon(text: str, filename: str | None = None) -> tuple[Lexicon, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    lexicon = Lexicon()
    for form in read_forms(text, diags, filename):
        head = _head(form)
        if head != "entry":
            diags.append(Diagnostic(form.line, f"expected (entry ...), got ({head or '?'} ...)", filename))
            continue
        _, sections = _split_keywords(form.items[1:], diags, filename)
        problems = len(diags)
        form_field = sections.get("form")
        lemma_field = sections.get("lemma")
        if not form_field or not lemma_field:
            diags.append(Diagnostic(form.line, "entry needs :form and :lemma", filename))
            continue
        surface = _string_or_sym(form_field[0], ":form value", diags, filename)
        lemma = _string_or_sym(lemma_field[0], ":lemma value", diags, filename)
        if surface is None or lemma is None:
            continue
        if not surface:
            diags.append(Diagnostic(form.line, "entry :form must be non-empty", filename))
            continue
        flags: set[str] = set()
        for flag_list in sections.get("flags", []):
            if isinstance(flag_list, SList):
                for item in flag_list.items:
                    name = _string_or_sym(item, "flag name", diags, filename)
                    if name is not None:
                        if name not in ("proper-name", "punctuation"):
                            diags.append(Diagnostic(flag_list.line, f"unknown flag {name!r}", filename))
                        else:
                            flags.add(name)
        scope = _Scope()
        sign = _finish_fs(_fs_groups(sections.get("sign", []), scope, diags, filename, form.line),
                          scope, diags, filename, form.line)
        if sign is None:
            continue
        cat = F.resolve(sign, ("cat",))
        if cat is None or not cat.is_atom():
            diags.append(Diagnostic(form.line, f"entry {surface!r} has no atomic cat in its sign", filename))
            continue
        lemma_node = F.resolve(sign, ("lemma",))
        if lemma_node is not None and (not lemma_node.is_atom() or lemma_node.value != lemma):
            diags.append(Diagnostic(form.line, f"entry {surface!r}: sign lemma disagrees with :lemma {lemma!r}", filename))
            continue
        if lemma_node is None:
            merged = F.try_unify(sign, F.from_paths([(("lemma",), F.atom(lemma))]))
            if merged is None:
                diags.append(Diagnostic(form.line, f"entry {surface!r}: cannot attach lemma to sign", filename))
                continue
            sign = merged
        if len(diags) > problems:
            continue
        lexicon.add(LexicalEntry(surface, lemma, frozenset(flags), sign, form.line))
    return lexicon, diags


# ---------------------------------------------------------------------------
# Grammar loading.

_PATH_ARG_RE = re.compile(r"(\d+)((?:\.[A-Za-z][A-Za-z0-9-]*)+)\Z")


def _parse_goal(form: SList, n_daughters: int, diags, filename) -> GoalCall | None:
    if not form.items or not isinstance(form.items[0], Tok) or form.items[0].kind != "sym":
        diags.append(Diagnostic(form.line, "goal call needs a goal name", filename))
        return None
    name = form.items[0].text
    spec = GOAL_REGISTRY.get(name)
    if spec is None:
        diags.append(Diagnostic(form.line, f"unknown goal {name!r}", filename))
        return None
    raw_args = form.items[1:]
    if len(raw_args) != len(spec):
        diags.append(Diagnostic(form.line, f"goal {name} takes {len(spec)} arguments, got {len(raw_args)}", filename))
        return None
    args = []
    for want, item in zip(spec, raw_args):
        if want == "path":
            if not (isinstance(item, Tok) and item.kind == "sym"):
                diags.append(Diagnostic(form.line, f"goal {name}: daughter path expected", filename))
                return None
            m = _PATH_ARG_RE.match(item.text)
            if m is None:
                diags.append(Diagnostic(form.line, f"goal {name}: bad path argument {item.text!r}", filename))
                return None
            daughter = int(m.group(1))
            if daughter >= n_daughters:
                diags.append(Diagnostic(form.line, f"goal {name}: daughter {daughter} out of range", filename))
                return None
            args.append(("path", daughter, tuple(m.group(2)[1:].split("."))))
        else:
            value = _string_or_sym(item, f"goal {name}: constant", diags, filename)
            if value is None:
                return None
            args.append(("const", value))
    return GoalCall(name, args)


MAX_DAUGHTERS = 4


def load_grammar(text: str, filename: str | None = None) -> tuple[Grammar, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    rules: list[GrammarRule] = []
    roots: tuple[str, ...] = ()
    direction: str | None = None
    names: set[str] = set()
    for form in read_forms(text, diags, filename):
        head = _head(form)
        if head == "roots":
            roots = tuple(t.text for t in form.items[1:] if isinstance(t, Tok) and t.kind == "sym")
            if not roots:
                diags.append(Diagnostic(form.line, "(roots ...) must list at least one category", filename))
        elif head == "direction":
            if len(form.items) == 2 and isinstance(form.items[1], Tok) and form.items[1].text in ("source", "target"):
                direction = form.items[1].text
            else:
                diags.append(Diagnostic(form.line, "(direction source|target) expected", filename))
        elif head == "rule":
            rule = _load_rule(form, diags, filename)
            if rule is not None:
                if rule.name in names:
                    diags.append(Diagnostic(form.line, f"duplicate rule name {rule.name!r}", filename))
                    continue
                names.add(rule.name)
                rules.append(rule)
        else:
            diags.append(Diagnostic(form.line, f"expected (rule ...), (roots ...) or (direction ...), got ({head or '?'} ...)", filename))
    if not roots:
        diags.append(Diagnostic(1, "grammar has no (roots ...) header", filename))
    grammar = Grammar(rules, roots, direction)
    _check_unary_cycles(grammar, diags, filename)
    return grammar, diags


def _load_rule(form: SList, diags, filename) -> GrammarRule | None:
    leading, sections = _split_keywords(form.items[1:], diags, filename)
    if not leading or not isinstance(leading[0], Tok) or leading[0].kind != "sym":
        diags.append(Diagnostic(form.line, "rule needs a name", filename))
        return None
    name = leading[0].text
    scope = _Scope()
    mother_items = sections.get("mother")
    if mother_items is None:
        diags.append(Diagnostic(form.line, f"rule {name}: missing :mother", filename))
        return None
    mother_ir = _fs_groups(mother_items, scope, diags, filename, form.line)
    if mother_ir is None:
        return None
    daughter_irs = []
    ok = True
    for item in sections.get("daughters", []):
        if not isinstance(item, SList):
            diags.append(Diagnostic(form.line, f"rule {name}: each daughter must be parenthesised", filename))
            ok = False
            continue
        d = _fs_groups(item.items, scope, diags, filename, item.line)
        if d is None:
            ok = False
            continue
        daughter_irs.append(d)
    if not ok:
        return None
    mother = _finish_fs(mother_ir, scope, diags, filename, form.line)
    daughters = [_finish_fs(ir, scope, diags, filename, form.line) for ir in daughter_irs]
    if mother is None or any(d is None for d in daughters):
        return None
    if not 1 <= len(daughters) <= MAX_DAUGHTERS:
        diags.append(Diagnostic(form.line, f"rule {name}: needs 1..{MAX_DAUGHTERS} daughters, got {len(daughters)}", filename))
        return None
    for which, sign in [("mother", mother)] + [(f"daughter {i}", d) for i, d in enumerate(daughters)]:
        cat = F.resolve(sign, ("cat",))
        if cat is None or not cat.is_atom():
            diags.append(Diagnostic(form.line, f"rule {name}: {which} has no atomic cat", filename))
            return None
    goals: list[GoalCall] = []
    for item in sections.get("goals", []):
        if not isinstance(item, SList):
            diags.append(Diagnostic(form.line, f"rule {name}: each goal must be parenthesised", filename))
            return None
        goal = _parse_goal(item, len(daughters), diags, filename)
        if goal is None:
            return None
        goals.append(goal)
    return GrammarRule(name, mother, daughters, goals, form.line)


def _check_unary_cycles(grammar: Grammar, diags, filename) -> None:
    # The chart's unary closure terminates only if single-daughter rules
    # cannot cycle through categories.
    edges: dict[str, set[str]] = {}
    for rule in grammar.rules:
        if len(rule.daughters) == 1:
            d_cat = F.resolve(rule.daughters[0], ("cat",)).value
            m_cat = F.resolve(rule.mother, ("cat",)).value
            edges.setdefault(d_cat, set()).add(m_cat)

    def reachable(start: str) -> set[str]:
        seen: set[str] = set()
        todo = [start]
        while todo:
            cat = todo.pop()
            for nxt in edges.get(cat, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen

    for cat in edges:
        if cat in reachable(cat):
            diags.append(Diagnostic(1, f"unary rules cycle through category {cat!r}", filename))
            return


# ---------------------------------------------------------------------------
# Bilingual lexicon loading (entries and macros share one file).

def load_bilingual(text: str, filename: str | None = None) -> tuple[BilingualLexicon, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    bl = BilingualLexicon()
    forms = read_forms(text, diags, filename)
    for form in forms:
        if _head(form) == "tmacro":
            macro = _load_macro(form, diags, filename)
            if macro is not None:
                if macro.name in bl.macros:
                    diags.append(Diagnostic(form.line, f"duplicate macro name {macro.name!r}", filename))
                else:
                    bl.macros[macro.name] = macro
    names: set[str] = set()
    for form in forms:
        head = _head(form)
        if head == "tmacro":
            continue
        if head != "bi":
            diags.append(Diagnostic(form.line, f"expected (bi ...) or (tmacro ...), got ({head or '?'} ...)", filename))
            continue
        entry = _load_bi_entry(form, bl, diags, filename)
        if entry is not None:
            if entry.name in names:
                diags.append(Diagnostic(form.line, f"duplicate entry name {entry.name!r}", filename))
                continue
            names.add(entry.name)
            bl.add(entry)
    return bl, diags


def _describe_signs(items: list, scope, diags, filename, line, what: str) -> list | None:
    irs: list = []
    for item in items:
        if not isinstance(item, SList):
            diags.append(Diagnostic(line, f"each {what} sign must be parenthesised", filename))
            return None
        ir = _fs_groups(item.items, scope, diags, filename, item.line)
        if ir is None:
            return None
        irs.append(ir)
    return irs


def _finish_signs(irs: list, scope, diags, filename, line) -> list[FS] | None:
    signs = [_finish_fs(ir, scope, diags, filename, line) for ir in irs]
    return None if any(s is None for s in signs) else signs


def _load_macro(form: SList, diags, filename) -> TransferMacro | None:
    leading, sections = _split_keywords(form.items[1:], diags, filename)
    if not leading or not isinstance(leading[0], Tok) or leading[0].kind != "sym":
        diags.append(Diagnostic(form.line, "tmacro needs a name", filename))
        return None
    name = leading[0].text
    scope = _Scope()
    trigger_ir = _fs_groups(sections.get("trigger", []), scope, diags, filename, form.line)
    if trigger_ir is None:
        return None
    src_irs = _describe_signs(sections.get("source-extra", []), scope, diags, filename, form.line, "source-extra")
    tgt_irs = _describe_signs(sections.get("target-extra", []), scope, diags, filename, form.line, "target-extra")
    if src_irs is None or tgt_irs is None:
        return None
    trigger = _finish_fs(trigger_ir, scope, diags, filename, form.line)
    source_extra = _finish_signs(src_irs, scope, diags, filename, form.line)
    target_extra = _finish_signs(tgt_irs, scope, diags, filename, form.line)
    if trigger is None or source_extra is None or target_extra is None:
        return None
    if not trigger.is_complex() or not trigger.feats:
        diags.append(Diagnostic(form.line, f"macro {name}: trigger must contain at least one feature", filename))
        return None
    return TransferMacro(name, trigger, source_extra, target_extra, form.line)


def _load_bi_entry(form: SList, bl: BilingualLexicon, diags, filename) -> BilingualEntry | None:
    leading, sections = _split_keywords(form.items[1:], diags, filename)
    if not leading or not isinstance(leading[0], Tok) or leading[0].kind != "sym":
        diags.append(Diagnostic(form.line, "bi entry needs a name", filename))
        return None
    name = leading[0].text
    key_items = sections.get("key")
    if not key_items:
        diags.append(Diagnostic(form.line, f"entry {name}: missing :key", filename))
        return None
    key = _string_or_sym(key_items[0], ":key value", diags, filename)
    if key is None:
        return None
    scope = _Scope()
    src_irs = _describe_signs(sections.get("source", []), scope, diags, filename, form.line, "source")
    tgt_irs = _describe_signs(sections.get("target", []), scope, diags, filename, form.line, "target")
    if src_irs is None or tgt_irs is None:
        return None
    source = _finish_signs(src_irs, scope, diags, filename, form.line)
    target = _finish_signs(tgt_irs, scope, diags, filename, form.line)
    if source is None or target is None:
        return None
    if not source:
        diags.append(Diagnostic(form.line, f"entry {name}: needs at least one source sign", filename))
        return None
    key_positions = []
    for i, pattern in enumerate(source):
        lemma = F.resolve(pattern, ("lemma",))
        if lemma is not None and lemma.is_atom() and lemma.value == key:
            key_positions.append(i)
    if len(key_positions) != 1:
        diags.append(Diagnostic(
            form.line,
            f"entry {name}: key-word {key!r} must be the lemma of exactly one source sign "
            f"(found {len(key_positions)})", filename))
        return None
    for i, template in enumerate(target):
        lemma = F.resolve(template, ("lemma",))
        if lemma is None or not lemma.is_atom():
            diags.append(Diagnostic(form.line, f"entry {name}: target sign {i} has no atomic lemma", filename))
            return None
    macro_names: list[str] = []
    macros: list[TransferMacro] = []
    for item in sections.get("macros", []):
        if isinstance(item, SList):
            for sub in item.items:
                mname = _string_or_sym(sub, "macro name", diags, filename)
                if mname is None:
                    return None
                macro = bl.macros.get(mname)
                if macro is None:
                    diags.append(Diagnostic(form.line, f"entry {name}: unknown macro {mname!r}", filename))
                    return None
                macro_names.append(mname)
                macros.append(macro)
    return BilingualEntry(name, key, source, target, macro_names, macros, key_positions[0], 0, form.line)


# ---------------------------------------------------------------------------
# Policy and manifest.

def load_policy(text: str, filename: str | None = None) -> tuple[Policy, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    policy = Policy()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";")[0].strip()
        if not line:
            continue
        if ":" not in line:
            diags.append(Diagnostic(lineno, f"policy line is not 'key: value': {line!r}", filename))
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "inverted-question":
            if value in ("yes", "no"):
                policy.inverted_question = value == "yes"
            else:
                diags.append(Diagnostic(lineno, f"inverted-question must be yes or no, got {value!r}", filename))
        else:
            diags.append(Diagnostic(lineno, f"unknown policy key {key!r}", filename))
    return policy, diags


def load_manifest(text: str, filename: str | None = None) -> tuple[Manifest, list[Diagnostic]]:
    diags: list[Diagnostic] = []
    manifest = Manifest()
    forms = read_forms(text, diags, filename)
    for form in forms:
        if _head(form) != "manifest":
            diags.append(Diagnostic(form.line, "expected (manifest ...)", filename))
            continue
        _, sections = _split_keywords(form.items[1:], diags, filename)
        for item in sections.get("files", []):
            if isinstance(item, SList):
                manifest.files.extend(t.text for t in item.items if isinstance(t, Tok) and t.kind == "sym")
        for item in sections.get("covers", []):
            if isinstance(item, Tok) and item.kind == "string":
                manifest.covers.append(_unquote(item.text))
            else:
                diags.append(Diagnostic(form.line, "each :covers item must be a quoted sentence", filename))
        for item in sections.get("passthrough-ok", []):
            if isinstance(item, SList):
                manifest.passthrough_ok.extend(t.text for t in item.items if isinstance(t, Tok) and t.kind == "sym")
    return manifest, diags


# ---------------------------------------------------------------------------
# Whole-directory loading.

LINGWARE_FILES = {
    "source_lexicon": "source.lex",
    "source_grammar": "source.gram",
    "bilingual": "bilingual.bl",
    "target_lexicon": "target.lex",
    "target_grammar": "target.gram",
    "policy": "policy.cfg",
}

MANIFEST_FILE = "manifest.mf"


def load_lingware(directory) -> tuple[Lingware | None, list[Diagnostic]]:
    from pathlib import Path

    base = Path(directory)
    diags: list[Diagnostic] = []
    loaded: dict = {}
    loaders = {
        "source_lexicon": load_lexicon,
        "source_grammar": load_grammar,
        "bilingual": load_bilingual,
        "target_lexicon": load_lexicon,
        "target_grammar": load_grammar,
        "policy": load_policy,
    }
    missing = False
    for slot, filename in LINGWARE_FILES.items():
        path = base / filename
        if not path.is_file():
            diags.append(Diagnostic(0, f"missing lingware file {filename}", filename))
            missing = True
            continue
        obj, file_diags = loaders[slot](path.read_text(encoding="utf-8"), filename)
        diags.extend(file_diags)
        loaded[slot] = obj
    manifest = None
    mpath = base / MANIFEST_FILE
    if mpath.is_file():
        manifest, m_diags = load_manifest(mpath.read_text(encoding="utf-8"), MANIFEST_FILE)
        diags.extend(m_diags)
    if missing:
        return None, diags
    return Lingware(manifest=manifest, path=str(base), **loaded), diags


# ---------------------------------------------------------------------------
# Serialization.  load(serialize(load(f))) equals load(f); shared variables
# survive because one label space covers every structure of one form.

def _goal_text(goal: GoalCall) -> str:
    parts = [goal.name]
    for arg in goal.args:
        if arg[0] == "path":
            parts.append(f"{arg[1]}." + ".".join(arg[2]))
        else:
            parts.append(F.atom_text(arg[1]))
    return "(" + " ".join(parts) + ")"


def serialize(obj) -> str:
    if isinstance(obj, LexicalEntry):
        flags = " ".join(sorted(obj.flags))
        return (f'(entry :form {F.atom_text(obj.form)} :lemma {F.atom_text(obj.lemma)} '
                f':flags ({flags}) :sign {F.canonical(obj.sign)})')
    if isinstance(obj, Lexicon):
        return "\n".join(serialize(e) for e in obj.entries) + ("\n" if obj.entries else "")
    if isinstance(obj, GrammarRule):
        texts = F.canonical_multi([obj.mother] + obj.daughters)
        parts = [f"(rule {obj.name}", f"  :mother {texts[0]}", "  :daughters"]
        for d_text in texts[1:]:
            parts.append(f"    ({d_text})")
        if obj.goals:
            parts.append("  :goals " + " ".join(_goal_text(g) for g in obj.goals))
        return "\n".join(parts) + ")"
    if isinstance(obj, Grammar):
        lines = []
        if obj.direction:
            lines.append(f"(direction {obj.direction})")
        lines.append("(roots " + " ".join(obj.roots) + ")")
        lines.extend(serialize(rule) for rule in obj.rules)
        return "\n".join(lines) + "\n"
    if isinstance(obj, TransferMacro):
        texts = F.canonical_multi([obj.trigger] + obj.source_extra + obj.target_extra)
        n_src = len(obj.source_extra)
        parts = [f"(tmacro {obj.name}", f"  :trigger {texts[0]}"]
        if obj.source_extra:
            parts.append("  :source-extra " + " ".join(f"({t})" for t in texts[1:1 + n_src]))
        if obj.target_extra:
            parts.append("  :target-extra " + " ".join(f"({t})" for t in texts[1 + n_src:]))
        return "\n".join(parts) + ")"
    if isinstance(obj, BilingualEntry):
        texts = F.canonical_multi(obj.source + obj.target)
        n_src = len(obj.source)
        parts = [f"(bi {obj.name} :key {F.atom_text(obj.key)}"]
        parts.append("  :source " + " ".join(f"({t})" for t in texts[:n_src]))
        if obj.target:
            parts.append("  :target " + " ".join(f"({t})" for t in texts[n_src:]))
        if obj.macro_names:
            parts.append("  :macros (" + " ".join(obj.macro_names) + ")")
        return "\n".join(parts) + ")"
    if isinstance(obj, BilingualLexicon):
        chunks = [serialize(m) for m in obj.macros.values()]
        chunks.extend(serialize(e) for e in obj.entries)
        return "\n".join(chunks) + ("\n" if chunks else "")
    if isinstance(obj, Policy):
        return f"inverted-question: {'yes' if obj.inverted_question else 'no'}\n"
    if isinstance(obj, Manifest):
        parts = ["(manifest"]
        parts.append("  :files (" + " ".join(obj.files) + ")")
        if obj.covers:
            parts.append("  :covers " + " ".join(_quote(c) for c in obj.covers))
        parts.append("  :passthrough-ok (" + " ".join(obj.passthrough_ok) + ")")
        return "\n".join(parts) + ")\n"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'

"""Attribute-value feature structures with coreference, unification and subsumption.

A structure is a rooted acyclic graph.  Nodes are atoms (a symbol value),
unbound variables, or complex nodes (a map from feature names to child
nodes).  Coreference is plain object sharing: two paths that reach the same
node object denote the same piece of information.  Structures are immutable
once built; `unify` never touches its inputs and returns a freshly built
result, so loaded grammars and lexicons can be shared freely across calls.

The canonical text form used in traces, tests and lingware files writes a
complex node as juxtaposed `(feature value)` groups, atoms as bare symbols
or double-quoted strings, and variables as `?name`.  A shared complex node
is introduced as `?name=(...)` at its first occurrence and referenced as
`?name` afterwards.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, Iterator

ATOM = "atom"
VAR = "var"
COMPLEX = "complex"

Path = tuple[str, ...]

_fresh_ids = itertools.count(1)

_BARE_ATOM_RE = re.compile(r"[a-z0-9][a-z0-9-]*\Z")


class UnificationFailure(Exception):
    """Two structures carry incompatible information.

    `path` is the first clashing feature path under a sorted-feature
    traversal; `reason` is one of "clash" (atom vs. different atom),
    "atom-complex" (atomic vs. complex node) or "cycle" (occurs check).
    """

    def __init__(self, path: Path, reason: str = "clash"):
        where = ".".join(path) if path else "<root>"
        super().__init__(f"unification failure ({reason}) at {where}")
        self.path = tuple(path)
        self.reason = reason


class FS:
    """One node of a feature structure graph.  Use the module constructors."""

    __slots__ = ("kind", "value", "feats")

    def __init__(self, kind: str, value: str | None, feats: dict[str, "FS"] | None):
        self.kind = kind
        self.value = value
        self.feats = feats

    def is_atom(self) -> bool:
        return self.kind == ATOM

    def is_var(self) -> bool:
        return self.kind == VAR

    def is_complex(self) -> bool:
        return self.kind == COMPLEX

    def get(self, feature: str) -> "FS | None":
        if self.kind != COMPLEX:
            return None
        return self.feats.get(feature)

    def __repr__(self) -> str:  # debugging aid; equality lives in equal()
        return f"<FS {canonical(self) or '()'}>"


def atom(value: str) -> FS:
    return FS(ATOM, str(value), None)


def var(name: str | None = None) -> FS:
    if name is None:
        name = f"v{next(_fresh_ids)}"
    return FS(VAR, name, None)


def struct(feats: dict[str, FS] | Iterable[tuple[str, FS]] = ()) -> FS:
    pairs = dict(feats)
    return FS(COMPLEX, None, dict(sorted(pairs.items())))


def empty() -> FS:
    return struct({})


def from_paths(pairs: Iterable[tuple[Path, FS]]) -> FS:
    """Build the smallest structure placing each leaf node at its path.

    Leaves may be shared between paths, which is how goal constraints
    express coreference.
    """
    tree: dict = {}
    for path, leaf in pairs:
        if not path:
            raise ValueError("from_paths requires non-empty paths")
        node = tree
        for feat in path[:-1]:
            nxt = node.setdefault(feat, {})
            if not isinstance(nxt, dict):
                raise ValueError(f"path conflict under {feat!r}")
            node = nxt
        if path[-1] in node:
            raise ValueError(f"duplicate path {'.'.join(path)}")
        node[path[-1]] = leaf

    def build(d: dict) -> FS:
        return struct({k: (build(v) if isinstance(v, dict) else v) for k, v in d.items()})

    return build(tree)


def resolve(fs: FS, path: Iterable[str]) -> FS | None:
    """Node at `path`, or None when the path is absent."""
    node = fs
    for feat in path:
        if node.kind != COMPLEX or feat not in node.feats:
            return None
        node = node.feats[feat]
    return node


# ---------------------------------------------------------------------------
# Unification.  Union-find over the two input graphs accumulates merged
# feature maps; the result is rebuilt from the quotient with an occurs check.
# Inputs are never mutated.

def unify(a: FS, b: FS) -> FS:
    parent: dict[int, FS] = {}
    merged: dict[int, dict[str, FS]] = {}

    def find(node: FS) -> FS:
        chain = []
        while id(node) in parent:
            chain.append(node)
            node = parent[id(node)]
        for seen in chain:
            parent[id(seen)] = node
        return node

    def feats_view(rep: FS) -> dict[str, FS]:
        fm = merged.get(id(rep))
        return fm if fm is not None else rep.feats

    def link(x: FS, y: FS, path: Path) -> None:
        x, y = find(x), find(y)
        if x is y:
            return
        if x.kind == VAR:
            parent[id(x)] = y
            return
        if y.kind == VAR:
            parent[id(y)] = x
            return
        if x.kind == ATOM and y.kind == ATOM:
            if x.value != y.value:
                raise UnificationFailure(path, "clash")
            parent[id(y)] = x
            return
        if x.kind == ATOM or y.kind == ATOM:
            raise UnificationFailure(path, "atom-complex")
        # complex/complex: union first so shared substructure terminates,
        # then unify the children of every common feature.
        fy = feats_view(y)
        parent[id(y)] = x
        merged.pop(id(y), None)
        fx = feats_view(x)
        extra = {f: c for f, c in fy.items() if f not in fx}
        if extra:
            fx = dict(fx)
            fx.update(extra)
            merged[id(x)] = fx
        for feat in sorted(fy):
            if feat not in extra:
                link(fx[feat], fy[feat], path + (feat,))

    link(a, b, ())

    building: set[int] = set()
    done: dict[int, FS] = {}

    def rebuild(node: FS, path: Path) -> FS:
        rep = find(node)
        rid = id(rep)
        if rid in building:
            raise UnificationFailure(path, "cycle")
        if rid in done:
            return done[rid]
        if rep.kind in (ATOM, VAR):
            # Leaves are immutable and carry no children: reuse them.
            done[rid] = rep
            return rep
        building.add(rid)
        fm = merged.get(rid, rep.feats)
        out = struct({f: rebuild(child, path + (f,)) for f, child in sorted(fm.items())})
        building.discard(rid)
        done[rid] = out
        return out

    return rebuild(a, ())


def try_unify(a: FS, b: FS) -> FS | None:
    try:
        return unify(a, b)
    except UnificationFailure:
        return None


def subsumes(general: FS, specific: FS) -> bool:
    """True iff every path, atom and coreference of `general` holds in `specific`."""
    mapping: dict[int, FS] = {}

    def walk(g: FS, s: FS) -> bool:
        if g.kind != ATOM:
            # Variables and complex nodes carry identity: a node reached
            # twice in `general` must map to one node in `specific`.
            seen = mapping.get(id(g))
            if seen is not None:
                return seen is s
            mapping[id(g)] = s
        if g.kind == VAR:
            return True
        if g.kind == ATOM:
            return s.kind == ATOM and s.value == g.value
        if s.kind != COMPLEX:
            return False
        for feat, child in g.feats.items():
            if feat not in s.feats:
                return False
            if not walk(child, s.feats[feat]):
                return False
        return True

    return walk(general, specific)


def fresh_variant(fs: FS) -> FS:
    """Structurally identical copy with all variables renamed apart."""
    memo: dict[int, FS] = {}

    def copy(node: FS) -> FS:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if node.kind == ATOM:
            out = node
        elif node.kind == VAR:
            out = var()
        else:
            out = FS(COMPLEX, None, {})
            memo[id(node)] = out
            out.feats.update({f: copy(c) for f, c in node.feats.items()})
            return out
        memo[id(node)] = out
        return out

    return copy(fs)


def check_acyclic(fs: FS) -> bool:
    on_stack: set[int] = set()
    finished: set[int] = set()

    def walk(node: FS) -> bool:
        if id(node) in finished:
            return True
        if id(node) in on_stack:
            return False
        if node.kind == COMPLEX:
            on_stack.add(id(node))
            ok = all(walk(c) for c in node.feats.values())
            on_stack.discard(id(node))
            if not ok:
                return False
        finished.add(id(node))
        return True

    return walk(fs)


# ---------------------------------------------------------------------------
# Canonical text form.  Features print sorted; variables and shared complex
# nodes are numbered ?v1, ?v2, ... by first occurrence, which makes
# structural equality up to variable renaming a string comparison.

def atom_text(value: str) -> str:
    if _BARE_ATOM_RE.match(value):
        return value
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def canonical_multi(roots: list[FS]) -> list[str]:
    """Render several structures in one shared label space.

    Needed wherever variables are shared between structures (a rule's
    mother and daughters, a bilingual entry's two sides).
    """
    refs: dict[int, int] = {}

    def count(node: FS) -> None:
        refs[id(node)] = refs.get(id(node), 0) + 1
        if node.kind == COMPLEX and refs[id(node)] == 1:
            for _, child in sorted(node.feats.items()):
                count(child)

    for root in roots:
        count(root)

    labels: dict[int, str] = {}
    counter = itertools.count(1)

    def label(node: FS) -> str:
        got = labels.get(id(node))
        if got is None:
            got = f"?v{next(counter)}"
            labels[id(node)] = got
        return got

    def groups(node: FS) -> str:
        return " ".join(f"({f} {value(c)})" for f, c in sorted(node.feats.items()))

    def value(node: FS) -> str:
        if node.kind == ATOM:
            return atom_text(node.value)
        if node.kind == VAR:
            return label(node)
        if refs[id(node)] > 1:
            if id(node) in labels:
                return labels[id(node)]
            tag = label(node)
            inner = groups(node)
            return f"{tag}={inner}" if inner else f"{tag}=()"
        inner = groups(node)
        return inner if inner else "()"

    out = []
    for root in roots:
        if root.kind == COMPLEX and refs[id(root)] == 1:
            out.append(groups(root))
        else:
            out.append(value(root))
    return out


def canonical(fs: FS) -> str:
    return canonical_multi([fs])[0]


to_text = canonical


def equal(a: FS, b: FS) -> bool:
    """Structural equality up to variable renaming."""
    return canonical_multi([a, b]) == canonical_multi([b, a])


# ---------------------------------------------------------------------------
# Reader for the canonical text form (used directly by tests and traces;
# the lingware loaders build structures from their own form trees).

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<open>\()
      | (?P<close>\))
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<comment>;[^\n]*)
      | (?P<var>\?[A-Za-z0-9_-]+=?)
      | (?P<sym>[^\s()"?;]+)
    )""",
    re.VERBOSE,
)


def _lex(text: str) -> Iterator[tuple[str, str]]:
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise ValueError(f"bad character {text[pos]!r} in feature structure text")
            return
        pos = m.end()
        kind = m.lastgroup
        if kind == "comment":
            continue
        yield kind, m.group(kind)


def _unquote(tok: str) -> str:
    return tok[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def from_text(text: str, scope: dict[str, FS] | None = None) -> FS:
    """Parse the canonical text form.  `scope` carries shared variables."""
    if scope is None:
        scope = {}
    tokens = list(_lex(text))

    def parse_value(i: int, closers: int) -> tuple[FS, int]:
        # A value is one atom/string/variable, or a run of (feat val) groups.
        items: list[tuple[str, FS]] = []
        while i < len(tokens):
            kind, tok = tokens[i]
            if kind == "close":
                break
            if kind == "sym":
                if items:
                    raise ValueError(f"unexpected atom {tok!r} after groups")
                return atom(tok), i + 1
            if kind == "string":
                if items:
                    raise ValueError("unexpected string after groups")
                return atom(_unquote(tok)), i + 1
            if kind == "var":
                if items:
                    raise ValueError(f"unexpected variable {tok!r} after groups")
                return parse_var(i, closers)
            if kind == "open":
                feat, node, i = parse_group(i)
                if feat is None:
                    if items:
                        raise ValueError("unexpected () after groups")
                    return node, i
                if any(feat == f for f, _ in items):
                    raise ValueError(f"duplicate feature name {feat!r}")
                items.append((feat, node))
                continue
            raise ValueError(f"unexpected token {tok!r}")
        return struct(items), i

    def parse_var(i: int, closers: int) -> tuple[FS, int]:
        tok = tokens[i][1]
        binds = tok.endswith("=")
        name = tok[1:-1] if binds else tok[1:]
        if binds:
            if name in scope:
                raise ValueError(f"variable ?{name} bound twice")
            node, j = parse_value(i + 1, closers)
            scope[name] = node
            return node, j
        node = scope.get(name)
        if node is None:
            node = var(name)
            scope[name] = node
        return node, i + 1

    def parse_group(i: int) -> tuple[str | None, FS, int]:
        assert tokens[i][0] == "open"
        i += 1
        if i < len(tokens) and tokens[i][0] == "close":
            return None, struct({}), i + 1  # bare () is an empty complex node
        kind, tok = tokens[i]
        if kind != "sym":
            raise ValueError("feature name expected after '('")
        feat = tok
        node, i = parse_value(i + 1, 1)
        if i >= len(tokens) or tokens[i][0] != "close":
            raise ValueError(f"missing ')' after feature {feat!r}")
        return feat, node, i + 1

    node, i = parse_value(0, 0)
    if i != len(tokens):
        raise ValueError(f"trailing tokens after feature structure: {tokens[i][1]!r}")
    return node

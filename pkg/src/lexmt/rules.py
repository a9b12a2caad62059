"""Rule application shared by the analysis and generation charts.

A rule applies by pure unification: the rule is wrapped once into a single
structure {m: mother, d0: {sign: D0}, d1: {sign: D1}, ...} whose variables
tie the parts together, and an application unifies that wrapper with
{d0: env0, d1: env1, ...} where each env carries at least the daughter's
sign.  Anything else in an env (the parser threads per-token lexical signs
under a `lex` map) rides along and gets instantiated by the same
unification.  Goals are evaluated afterwards against the unified result:
`agree` and `require` as one more unification, `prohibit` as a check.
"""

from __future__ import annotations

from typing import Sequence

from . import fs as F
from .formats import GoalCall, GrammarRule
from .fs import FS


def wrapper(rule: GrammarRule) -> FS:
    cached = getattr(rule, "_wrapper", None)
    if cached is None:
        feats: dict[str, FS] = {"m": rule.mother}
        for i, daughter in enumerate(rule.daughters):
            feats[f"d{i}"] = F.struct({"sign": daughter})
        cached = F.struct(feats)
        rule._wrapper = cached
    return cached


def mother_of(acc: FS) -> FS:
    return F.resolve(acc, ("m",))


def daughter_sign(acc: FS, i: int) -> FS:
    return F.resolve(acc, (f"d{i}", "sign"))


def _goal_constraint(goal: GoalCall) -> FS:
    if goal.name == "agree":
        shared = F.var()
        pairs = []
        for _, daughter, path in goal.args:
            pairs.append(((f"d{daughter}", "sign") + path, shared))
        return F.from_paths(pairs)
    if goal.name == "require":
        (_, daughter, path), (_, value) = goal.args
        return F.from_paths([((f"d{daughter}", "sign") + path, F.atom(value))])
    raise ValueError(f"goal {goal.name} has no constraint form")


def goal_text(goal: GoalCall) -> str:
    bits = []
    for arg in goal.args:
        if arg[0] == "path":
            bits.append(f"{arg[1]}." + ".".join(arg[2]))
        else:
            bits.append(arg[1])
    return f"{goal.name}({', '.join(bits)})"


def eval_goals(acc: FS, rule: GrammarRule) -> tuple[FS, list[str]] | None:
    """Apply the rule's goals to an application result; None when one fails."""
    record: list[str] = []
    for goal in rule.goals:
        if goal.name in ("agree", "require"):
            out = F.try_unify(acc, _goal_constraint(goal))
            if out is None:
                return None
            acc = out
        elif goal.name == "prohibit":
            (_, daughter, path), (_, value) = goal.args
            node = F.resolve(acc, (f"d{daughter}", "sign") + path)
            if node is not None and node.is_atom() and node.value == value:
                return None
        else:
            raise ValueError(f"unknown goal {goal.name!r}")
        record.append(f"{rule.name}:{goal_text(goal)}")
    return acc, record


def apply_rule(rule: GrammarRule, child_envs: Sequence[FS]) -> tuple[FS, list[str]] | None:
    """Unify daughter environments into the rule; None when it does not fit."""
    if len(child_envs) != len(rule.daughters):
        return None
    args = F.struct({f"d{i}": env for i, env in enumerate(child_envs)})
    acc = F.try_unify(wrapper(rule), args)
    if acc is None:
        return None
    return eval_goals(acc, rule)


def rule_daughter_cat(rule: GrammarRule, i: int) -> str | None:
    node = F.resolve(rule.daughters[i], ("cat",))
    return node.value if node is not None and node.is_atom() else None

"""Context-free grammar over operation trees.

The grammar has three non-terminals: ``S`` (start, derives the question-type
root), ``R`` (result table, derives Projection), and ``T`` (intermediate
tables). Each production has a stable integer id assigned by the order below,
so a tree maps to exactly one left-to-right rule sequence and back.

A linearized tree is a list of actions: ``ApplyRule`` steps expand
non-terminals, ``GenToken`` steps bind a node's terminal arguments (table
names, attributes, comparators, values). ``Distinct`` is an extension beyond
the core operation set, kept because corpora quantify over "different"
entities; it is sampled by nothing but accepted everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

from otforge.trees import ARG_FIELDS, OperationKind, OperationTree, OtNode


class GrammarError(Exception):
    """A rule sequence that does not derive from the start symbol."""


@dataclass(frozen=True)
class Production:
    rule_id: int
    lhs: str
    kind: OperationKind
    rhs: tuple[str, ...]

    def __str__(self) -> str:
        args = ", ".join(self.rhs) if self.rhs else ""
        return f"{self.lhs} -> {self.kind.value}({args})"


PRODUCTIONS: tuple[Production, ...] = (
    Production(1, "S", OperationKind.DONE, ("R",)),
    Production(2, "S", OperationKind.COUNT, ("T",)),
    Production(3, "S", OperationKind.SUM, ("T",)),
    Production(4, "S", OperationKind.AVERAGE, ("T",)),
    Production(5, "S", OperationKind.IS_EMPTY, ("T",)),
    Production(6, "S", OperationKind.GROUP_BY, ("T",)),
    Production(7, "R", OperationKind.PROJECTION, ("T",)),
    Production(8, "T", OperationKind.GET_DATA, ()),
    Production(9, "T", OperationKind.SELECTION, ("T",)),
    Production(10, "T", OperationKind.JOIN, ("T", "T")),
    Production(11, "T", OperationKind.UNION, ("T", "T")),
    Production(12, "T", OperationKind.INTERSECT, ("T", "T")),
    Production(13, "T", OperationKind.DIFF, ("T", "T")),
    Production(14, "T", OperationKind.MIN, ("T",)),
    Production(15, "T", OperationKind.MAX, ("T",)),
    Production(16, "T", OperationKind.DISTINCT, ("T",)),
)

BY_ID: dict[int, Production] = {p.rule_id: p for p in PRODUCTIONS}
BY_KIND: dict[OperationKind, Production] = {p.kind: p for p in PRODUCTIONS}


@dataclass(frozen=True)
class ApplyRule:
    rule_id: int


@dataclass(frozen=True)
class GenToken:
    value: object


Action = ApplyRule | GenToken


def to_rule_sequence(tree: OperationTree) -> list[Action]:
    """Linearize a tree pre-order, left to right.

    Each node contributes its production followed by one GenToken per argument
    slot (a Projection's attribute tuple is one token), then its children.
    """
    actions: list[Action] = []

    def walk(node: OtNode) -> None:
        actions.append(ApplyRule(BY_KIND[node.kind].rule_id))
        for name in ARG_FIELDS[node.kind]:
            actions.append(GenToken(getattr(node, name)))
        for child in node.children:
            walk(child)

    walk(tree.root)
    return actions


def rule_ids(actions: list[Action]) -> list[int]:
    """Just the production ids, dropping terminal bindings."""
    return [a.rule_id for a in actions if isinstance(a, ApplyRule)]


def from_rule_sequence(actions: list[Action], tree_id: str = "", schema_id: str = "") -> OperationTree:
    """Rebuild a tree from its linearization.

    Inverse of :func:`to_rule_sequence`: the reconstructed tree is structurally
    identical to the original, arguments included.
    """
    if not actions:
        raise GrammarError("no derivation")
    pos = 0

    def take() -> Action:
        nonlocal pos
        if pos >= len(actions):
            raise GrammarError(f"sequence ends before the derivation is complete (position {pos})")
        action = actions[pos]
        pos += 1
        return action

    def parse_symbol(symbol: str) -> OtNode:
        at = pos
        action = take()
        if not isinstance(action, ApplyRule):
            raise GrammarError(f"inapplicable rule at position {at}: expected a production for {symbol}")
        production = BY_ID.get(action.rule_id)
        if production is None or production.lhs != symbol:
            raise GrammarError(f"inapplicable rule at position {at}: rule {action.rule_id} does not expand {symbol}")
        args: dict[str, object] = {}
        for name in ARG_FIELDS[production.kind]:
            token_at = pos
            token = take()
            if not isinstance(token, GenToken):
                raise GrammarError(f"expected terminal token at position {token_at} for {production.kind.value}.{name}")
            value = token.value
            if name == "attributes" and value is not None:
                value = tuple(value)  # type: ignore[arg-type]
            args[name] = value
        children = tuple(parse_symbol(s) for s in production.rhs)
        return OtNode(kind=production.kind, children=children, **args)  # type: ignore[arg-type]

    root = parse_symbol("S")
    if pos != len(actions):
        raise GrammarError(f"inapplicable rule at position {pos}: derivation already complete")
    return OperationTree(root=root, id=tree_id, schema_id=schema_id)


def grammar_text() -> str:
    """Human-readable listing of the production rules with their stable ids."""
    return "\n".join(f"{p.rule_id:>2}  {p}" for p in PRODUCTIONS)

"""Small regular-expression language compiled to a weighted DFA.

Supported syntax:

    atom       ::= literal char | escape | "(" alternation ")"
    escape     ::= "\\d" (digit class) | "\\" metacharacter (literal)
    quantified ::= atom ("+" | "?" | "*")?
    concat     ::= quantified*
    alternation::= concat ("|" concat)*

Metacharacters ``( ) | + ? * . $ \\`` must be escaped to be matched
literally; a space matches itself. ``\\d`` matches the ASCII digits 0-9.

Two independent execution routes are provided on purpose:

* :func:`match_ends` / :func:`matches_full` interpret the syntax tree
  directly with backtracking; slow but obviously correct.
* :func:`compile_dfa` builds a Thompson NFA per expression, unions them
  and determinizes via subset construction into a :class:`RegexDfa` whose
  states carry accept and lookahead ("best") weights for decoding.

The DFA route is what the decoder uses; the tree interpreter is the
reference the DFA is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

METACHARS = set("()|+?*.$\\")
DIGITS = frozenset("0123456789")


class RegexSyntaxError(ValueError):
    """Parse failure; position is the 1-based character column."""

    def __init__(self, message: str, pattern: str, position: int):
        super().__init__(f"{message} in pattern {pattern!r} at position {position}")
        self.pattern = pattern
        self.position = position


# -- syntax tree ----------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    char: str


@dataclass(frozen=True)
class Digit:
    pass


@dataclass(frozen=True)
class Concat:
    parts: Tuple["Node", ...]


@dataclass(frozen=True)
class Alt:
    options: Tuple["Node", ...]


@dataclass(frozen=True)
class Star:
    inner: "Node"


@dataclass(frozen=True)
class Plus:
    inner: "Node"


@dataclass(frozen=True)
class Opt:
    inner: "Node"


Node = Lit | Digit | Concat | Alt | Star | Plus | Opt


def regex_parse(pattern: str) -> Node:
    """Parse a pattern into a syntax tree; raises RegexSyntaxError."""
    pos = 0
    n = len(pattern)

    def fail(message: str, at: int) -> None:
        raise RegexSyntaxError(message, pattern, at + 1)

    def parse_alt(depth: int) -> Node:
        nonlocal pos
        options = [parse_concat(depth)]
        while pos < n and pattern[pos] == "|":
            pos += 1
            options.append(parse_concat(depth))
        if len(options) == 1:
            return options[0]
        return Alt(tuple(options))

    def parse_concat(depth: int) -> Node:
        nonlocal pos
        parts: List[Node] = []
        while pos < n and pattern[pos] not in ")|":
            parts.append(parse_quantified(depth))
        if len(parts) == 1:
            return parts[0]
        return Concat(tuple(parts))

    def parse_quantified(depth: int) -> Node:
        nonlocal pos
        node = parse_atom(depth)
        if pos < n and pattern[pos] in "+?*":
            q = pattern[pos]
            pos += 1
            if pos < n and pattern[pos] in "+?*":
                fail("stacked quantifier (group it instead)", pos)
            node = {"+": Plus, "?": Opt, "*": Star}[q](node)
        return node

    def parse_atom(depth: int) -> Node:
        nonlocal pos
        c = pattern[pos]
        if c in "+?*":
            fail("dangling quantifier", pos)
        if c == "(":
            open_at = pos
            pos += 1
            node = parse_alt(depth + 1)
            if pos >= n or pattern[pos] != ")":
                fail("unbalanced parenthesis", open_at)
            pos += 1
            return node
        if c == ")":
            fail("unbalanced parenthesis", pos)
        if c == "\\":
            if pos + 1 >= n:
                fail("trailing backslash", pos)
            e = pattern[pos + 1]
            pos += 2
            if e == "d":
                return Digit()
            if e in METACHARS:
                return Lit(e)
            fail(f"unknown escape \\{e}", pos - 2)
        if c in ".$":
            fail(f"unsupported metacharacter {c!r} (escape it)", pos)
        pos += 1
        return Lit(c)

    if not pattern:
        raise RegexSyntaxError("empty pattern", pattern, 1)
    tree = parse_alt(0)
    if pos < n:  # only a stray ")" can stop the top-level parse early
        fail("unbalanced parenthesis", pos)
    return tree


def to_pattern(node: Node) -> str:
    """Print a tree back to a pattern that reparses to an equal tree."""
    def atom(x: Node) -> str:
        s = to_pattern(x)
        if isinstance(x, (Lit, Digit)):
            return s
        return f"({s})"

    if isinstance(node, Lit):
        return "\\" + node.char if node.char in METACHARS else node.char
    if isinstance(node, Digit):
        return "\\d"
    if isinstance(node, Concat):
        return "".join(atom(p) if isinstance(p, (Alt, Concat)) else to_pattern(p)
                       for p in node.parts)
    if isinstance(node, Alt):
        return "|".join(atom(o) if isinstance(o, Alt) else to_pattern(o)
                        for o in node.options)
    if isinstance(node, Star):
        return atom(node.inner) + "*"
    if isinstance(node, Plus):
        return atom(node.inner) + "+"
    if isinstance(node, Opt):
        return atom(node.inner) + "?"
    raise TypeError(f"not a regex node: {node!r}")


# -- reference interpreter (backtracking over the tree) --------------------

def match_ends(node: Node, text: str, start: int = 0) -> FrozenSet[int]:
    """All positions where a match beginning at `start` may end."""
    memo: Dict[Tuple[int, int], FrozenSet[int]] = {}

    def ends(x: Node, i: int) -> FrozenSet[int]:
        key = (id(x), i)
        got = memo.get(key)
        if got is not None:
            return got
        memo[key] = frozenset()  # cuts cycles from nested empty-match stars
        if isinstance(x, Lit):
            out = frozenset((i + 1,)) if i < len(text) and text[i] == x.char else frozenset()
        elif isinstance(x, Digit):
            out = frozenset((i + 1,)) if i < len(text) and text[i] in DIGITS else frozenset()
        elif isinstance(x, Concat):
            frontier = {i}
            for part in x.parts:
                frontier = {e for f in frontier for e in ends(part, f)}
                if not frontier:
                    break
            out = frozenset(frontier)
        elif isinstance(x, Alt):
            out = frozenset(e for o in x.options for e in ends(o, i))
        elif isinstance(x, Opt):
            out = ends(x.inner, i) | {i}
        elif isinstance(x, (Star, Plus)):
            reached = set(ends(x.inner, i))
            frontier = set(reached)
            while frontier:
                nxt = {e for f in frontier for e in ends(x.inner, f)}
                frontier = nxt - reached
                reached |= nxt
            out = frozenset(reached | {i}) if isinstance(x, Star) else frozenset(reached)
        else:
            raise TypeError(f"not a regex node: {x!r}")
        memo[key] = out
        return out

    return ends(node, start)


def matches_full(node: Node, text: str) -> bool:
    return len(text) in match_ends(node, text, 0)


def matches_in(node: Node, text: str,
               anchor_start: bool = False, anchor_end: bool = False) -> bool:
    """Non-empty match inside `text`, honoring the anchor flags."""
    starts = (0,) if anchor_start else range(len(text) + 1)
    for s in starts:
        ends = match_ends(node, text, s)
        if anchor_end:
            if len(text) in ends and len(text) > s:
                return True
        elif any(e > s for e in ends):
            return True
    return False


# -- Thompson construction + subset determinization ------------------------

class _Nfa:
    """Epsilon NFA under construction; states are dense ints."""

    def __init__(self) -> None:
        self.char_edges: List[List[Tuple[FrozenSet[str], int]]] = []
        self.eps_edges: List[List[int]] = []

    def new_state(self) -> int:
        self.char_edges.append([])
        self.eps_edges.append([])
        return len(self.char_edges) - 1

    def add_eps(self, a: int, b: int) -> None:
        self.eps_edges[a].append(b)

    def add_char(self, a: int, chars: FrozenSet[str], b: int) -> None:
        self.char_edges[a].append((chars, b))

    def build(self, node: Node) -> Tuple[int, int]:
        if isinstance(node, Lit):
            a, b = self.new_state(), self.new_state()
            self.add_char(a, frozenset((node.char,)), b)
            return a, b
        if isinstance(node, Digit):
            a, b = self.new_state(), self.new_state()
            self.add_char(a, DIGITS, b)
            return a, b
        if isinstance(node, Concat):
            if not node.parts:
                a = self.new_state()
                return a, a
            a, b = self.build(node.parts[0])
            for part in node.parts[1:]:
                c, d = self.build(part)
                self.add_eps(b, c)
                b = d
            return a, b
        if isinstance(node, Alt):
            a, b = self.new_state(), self.new_state()
            for opt in node.options:
                c, d = self.build(opt)
                self.add_eps(a, c)
                self.add_eps(d, b)
            return a, b
        if isinstance(node, (Star, Plus, Opt)):
            c, d = self.build(node.inner)
            a, b = self.new_state(), self.new_state()
            self.add_eps(a, c)
            self.add_eps(d, b)
            if isinstance(node, (Star, Opt)):
                self.add_eps(a, b)
            if isinstance(node, (Star, Plus)):
                self.add_eps(d, c)
            return a, b
        raise TypeError(f"not a regex node: {node!r}")

    def closure(self, states: Iterable[int]) -> FrozenSet[int]:
        seen = set(states)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for t in self.eps_edges[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)


@dataclass
class CompiledPattern:
    """One weighted expression headed for the shared DFA."""
    tree: Node
    weight: float
    anchor_start: bool
    anchor_end: bool


class RegexDfa:
    """Deterministic union automaton with per-state weight summaries.

    For every state four accept weights are kept, split by whether the
    accepting expression requires a word-boundary start ("bound" covers
    all expressions, "free" only the unanchored ones) and by whether it
    defers its bonus until a following boundary (end-anchored). The two
    best_* arrays are the max accept weight reachable from each state,
    including the state itself; they drive completion lookahead.
    """

    def __init__(self) -> None:
        self.transitions: List[Dict[str, int]] = [{}]
        self.acc_now_bound: List[float] = [0.0]
        self.acc_now_free: List[float] = [0.0]
        self.acc_end_bound: List[float] = [0.0]
        self.acc_end_free: List[float] = [0.0]
        self.best_bound: List[float] = [0.0]
        self.best_free: List[float] = [0.0]
        self.start = 0

    @property
    def n_states(self) -> int:
        return len(self.transitions)

    def accept_weight(self, state: int) -> float:
        return max(self.acc_now_bound[state], self.acc_end_bound[state])

    def best_weight(self, state: int) -> float:
        return self.best_bound[state]

    def anchor_end_flag(self, state: int) -> bool:
        return self.acc_end_bound[state] > 0.0

    def full_match_weight(self, text: str) -> float:
        """Weight of the whole string as one match, both boundaries
        satisfied; 0 if not accepted. Empty strings never match."""
        s = self.start
        for c in text:
            s = self.transitions[s].get(c, -1)
            if s < 0:
                return 0.0
        if not text:
            return 0.0
        return max(self.acc_now_bound[s], self.acc_end_bound[s])

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "transitions": [dict(sorted(t.items())) for t in self.transitions],
            "acc_now_bound": self.acc_now_bound,
            "acc_now_free": self.acc_now_free,
            "acc_end_bound": self.acc_end_bound,
            "acc_end_free": self.acc_end_free,
        }


def compile_dfa(patterns: Sequence[CompiledPattern]) -> RegexDfa:
    """Union all patterns into one DFA with deterministic state numbering."""
    dfa = RegexDfa()
    if not patterns:
        return dfa

    nfa = _Nfa()
    union_start = nfa.new_state()
    accept_of: Dict[int, int] = {}  # NFA accepting state -> pattern index
    for i, pat in enumerate(patterns):
        a, b = nfa.build(pat.tree)
        nfa.add_eps(union_start, a)
        accept_of[b] = i

    start_set = nfa.closure((union_start,))
    ids: Dict[FrozenSet[int], int] = {start_set: 0}
    order = [start_set]
    queue = [start_set]
    transitions: List[Dict[str, int]] = [{}]
    while queue:
        cur = queue.pop(0)
        cur_id = ids[cur]
        by_char: Dict[str, set] = {}
        for s in cur:
            for chars, dst in nfa.char_edges[s]:
                for c in chars:
                    by_char.setdefault(c, set()).add(dst)
        for c in sorted(by_char):  # sorted: stable state numbering
            nxt = nfa.closure(by_char[c])
            nid = ids.get(nxt)
            if nid is None:
                nid = len(order)
                ids[nxt] = nid
                order.append(nxt)
                transitions.append({})
                queue.append(nxt)
            transitions[cur_id][c] = nid

    n = len(order)
    dfa.transitions = transitions
    dfa.acc_now_bound = [0.0] * n
    dfa.acc_now_free = [0.0] * n
    dfa.acc_end_bound = [0.0] * n
    dfa.acc_end_free = [0.0] * n
    for sid, nfa_set in enumerate(order):
        for s in nfa_set:
            pi = accept_of.get(s)
            if pi is None:
                continue
            pat = patterns[pi]
            if pat.anchor_end:
                dfa.acc_end_bound[sid] = max(dfa.acc_end_bound[sid], pat.weight)
                if not pat.anchor_start:
                    dfa.acc_end_free[sid] = max(dfa.acc_end_free[sid], pat.weight)
            else:
                dfa.acc_now_bound[sid] = max(dfa.acc_now_bound[sid], pat.weight)
                if not pat.anchor_start:
                    dfa.acc_now_free[sid] = max(dfa.acc_now_free[sid], pat.weight)

    # Reverse max-fixpoint; the DFA may contain cycles, so relax to stability.
    dfa.best_bound = [max(a, b) for a, b in zip(dfa.acc_now_bound, dfa.acc_end_bound)]
    dfa.best_free = [max(a, b) for a, b in zip(dfa.acc_now_free, dfa.acc_end_free)]
    for best in (dfa.best_bound, dfa.best_free):
        changed = True
        while changed:
            changed = False
            for sid in range(n):
                m = best[sid]
                for dst in transitions[sid].values():
                    if best[dst] > m:
                        m = best[dst]
                if m > best[sid]:
                    best[sid] = m
                    changed = True
    return dfa

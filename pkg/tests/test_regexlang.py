import random
import re

import pytest

from lexibeam.regexlang import (Alt, CompiledPattern, Concat, Digit, Lit,
                                Opt, Plus, RegexSyntaxError, compile_dfa,
                                match_ends, matches_full, matches_in,
                                regex_parse, to_pattern)

PRICE_PATTERNS = [r"\$\d+", r"\d+\.\d", r"\d+ ?(CT|LB|OZ|EA|ML|MG)"]


def test_parse_dollar_amount():
    tree = regex_parse(r"\$\d+")
    assert tree == Concat((Lit("$"), Plus(Digit())))


def test_parse_quantity_expression():
    tree = regex_parse(r"\d+ ?(CT|LB|OZ|EA|ML|MG)")
    assert isinstance(tree, Concat)
    plus, opt, alt = tree.parts
    assert plus == Plus(Digit())
    assert opt == Opt(Lit(" "))
    assert isinstance(alt, Alt) and len(alt.options) == 6


@pytest.mark.parametrize("pattern,position", [
    ("a(", 2),
    (")", 1),
    ("ab)", 3),
    ("+a", 1),
    ("a|+", 3),
    ("a++", 3),
    ("\\w", 1),
    ("a\\", 2),
    ("a.b", 2),
    ("$5", 1),
])
def test_parse_errors_carry_position(pattern, position):
    with pytest.raises(RegexSyntaxError) as err:
        regex_parse(pattern)
    assert err.value.position == position
    assert repr(pattern) in str(err.value)


def test_empty_pattern_rejected():
    with pytest.raises(RegexSyntaxError):
        regex_parse("")


@pytest.mark.parametrize("pattern", PRICE_PATTERNS + [
    "abc", "a|b|c", "(ab)c", "a(b|cd)*e", "x+y?z*", r"\\\.\$",
    "(a|(b|c))d", "((ab))", "a b", r"(\d\d)+",
])
def test_printer_round_trips(pattern):
    tree = regex_parse(pattern)
    printed = to_pattern(tree)
    assert regex_parse(printed) == tree


@pytest.mark.parametrize("pattern", PRICE_PATTERNS + [
    "abc", "a(b|cd)*e", "x+y?z*", r"(\d\d)+", "a|ab|abc", "(a|b)(a|b)",
])
def test_matcher_agrees_with_stdlib_re(pattern):
    tree = regex_parse(pattern)
    compiled = re.compile(pattern)
    rng = random.Random(3)
    chars = "ab cdxyz.$0123456789CTLBOZEAMG"
    for _ in range(400):
        s = "".join(rng.choice(chars) for _ in range(rng.randrange(0, 9)))
        assert matches_full(tree, s) == bool(compiled.fullmatch(s)), (pattern, s)


def test_match_ends_positions():
    tree = regex_parse(r"\d+")
    assert match_ends(tree, "12a", 0) == frozenset({1, 2})
    assert match_ends(tree, "12a", 2) == frozenset()


def test_matches_in_anchor_rules():
    tree = regex_parse("ab")
    assert matches_in(tree, "xabx")
    assert not matches_in(tree, "xabx", anchor_start=True)
    assert matches_in(tree, "abx", anchor_start=True)
    assert matches_in(tree, "xab", anchor_end=True)
    assert not matches_in(tree, "abx", anchor_end=True)
    assert matches_in(tree, "ab", anchor_start=True, anchor_end=True)
    # empty matches never count
    star = regex_parse("a*")
    assert not matches_in(star, "bbb")


def _dfa_for(patterns, weights=None, anchors=None):
    weights = weights or [1.0] * len(patterns)
    anchors = anchors or [(False, False)] * len(patterns)
    return compile_dfa([
        CompiledPattern(regex_parse(p), w, a_s, a_e)
        for p, w, (a_s, a_e) in zip(patterns, weights, anchors)])


def test_dfa_examples():
    dfa = _dfa_for([r"\d+\.\d"], [2.0])
    assert dfa.full_match_weight("3.1") == 2.0
    assert dfa.full_match_weight("42.7") == 2.0
    assert dfa.full_match_weight("3.") == 0.0
    assert dfa.full_match_weight("") == 0.0


def test_dfa_agrees_with_backtracking_matcher():
    patterns = PRICE_PATTERNS + ["a(b|cd)*e", r"(\d\d)+"]
    weights = [3.0, 2.0, 5.0, 1.5, 4.0]
    trees = [regex_parse(p) for p in patterns]
    dfa = _dfa_for(patterns, weights)
    rng = random.Random(17)
    chars = "ab cde.$0123456789CTLBOZEAMG"
    for _ in range(3000):
        s = "".join(rng.choice(chars) for _ in range(rng.randrange(0, 10)))
        want = max((w for t, w in zip(trees, weights) if matches_full(t, s)),
                   default=0.0)
        assert dfa.full_match_weight(s) == want, s


def test_dfa_is_deterministic():
    dfa = _dfa_for(PRICE_PATTERNS)
    for trans in dfa.transitions:
        assert all(isinstance(v, int) for v in trans.values())
    # same patterns, same automaton
    again = _dfa_for(PRICE_PATTERNS)
    assert dfa.to_dict() == again.to_dict()


def test_dfa_best_weight_fixpoint():
    dfa = _dfa_for(PRICE_PATTERNS + ["(ab)+"], [3.0, 2.0, 5.0, 7.0])
    # recompute best weights by BFS reachability and compare
    n = dfa.n_states
    for arrays, best in ((("acc_now_bound", "acc_end_bound"), dfa.best_bound),
                         (("acc_now_free", "acc_end_free"), dfa.best_free)):
        acc = [max(getattr(dfa, arrays[0])[s], getattr(dfa, arrays[1])[s])
               for s in range(n)]
        for s in range(n):
            seen = {s}
            stack = [s]
            reachable_max = acc[s]
            while stack:
                cur = stack.pop()
                for dst in dfa.transitions[cur].values():
                    if dst not in seen:
                        seen.add(dst)
                        stack.append(dst)
                        reachable_max = max(reachable_max, acc[dst])
            assert best[s] == reachable_max


def test_dfa_anchor_weight_split():
    dfa = _dfa_for(["ab"], [4.0], [(True, True)])
    s = dfa.start
    for c in "ab":
        s = dfa.transitions[s][c]
    assert dfa.acc_end_bound[s] == 4.0   # end-anchored weight
    assert dfa.acc_now_bound[s] == 0.0
    assert dfa.acc_end_free[s] == 0.0    # start-anchored: not free
    assert dfa.anchor_end_flag(s)


def test_empty_pattern_list():
    dfa = compile_dfa([])
    assert dfa.n_states == 1
    assert dfa.full_match_weight("anything") == 0.0

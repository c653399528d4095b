import random

import pytest
from hypothesis import HealthCheck, example, given, settings, strategies as st

from eql.ast import (
    AggCall, And, Anonymous, Assignment, Compare, FilterClause, Name, Pattern, PatternStatement,
    PropertyPath, Query, Var,
)
from eql.errors import EQLError, EQLSyntaxError
from eql.lexer import escape_name, tokenize, unescape
from eql.parser import (
    AmbiguousSegmentationError, NoSegmentationError, parse_fact, parse_query, parse_simplified,
    parse_suggestion, pretty_print,
)

from ast_strategies import queries


def kinds(text):
    return [(t.kind, t.value) for t in tokenize(text)]


class TestLexer:
    def test_escaped_question_mark_stays_in_name(self):
        toks = kinds(r"What is life\? The Physical Aspect of the Living Cell: author:?")
        assert toks[0] == ("NAME", "What is life? The Physical Aspect of the Living Cell")
        assert toks[1:] == [("COLON", ":"), ("NAME", "author"), ("COLON", ":"), ("ANON", "?")]

    def test_escaped_colon(self):
        assert kinds(r"Central Asia \: Culture on Horseback:author:?")[0] == (
            "NAME", "Central Asia : Culture on Horseback")

    def test_empty(self):
        assert tokenize("") == []

    def test_aggregate_query_tokens(self):
        assert kinds("?x: award :?y (prize :?z1)") == [
            ("VAR", "x"), ("COLON", ":"), ("NAME", "award"), ("COLON", ":"), ("VAR", "y"),
            ("LPAREN", "("), ("NAME", "prize"), ("COLON", ":"), ("VAR", "z1"), ("RPAREN", ")")]

    def test_full_width_punctuation(self):
        assert kinds("？：award：Nobel Prize") == kinds("?:award:Nobel Prize")

    def test_variable_out_of_range(self):
        with pytest.raises(EQLSyntaxError):
            tokenize("?z51 : a : b")
        with pytest.raises(EQLSyntaxError):
            tokenize("?w : a : b")

    @given(st.text(alphabet="ab :?%_\\()=,.!<>", max_size=20))
    def test_escape_totality(self, text):
        assert unescape(escape_name(text)) == text


class TestParseQuery:
    def test_anonymous_subject_with_qualifier(self):
        q = parse_query("?: award : Nobel Prize in Literature (Date : 2016)")
        (st_,) = q.statements
        pat = st_.tree
        assert isinstance(pat.s, Anonymous)
        assert pat.p == Name("award") and pat.o == Name("Nobel Prize in Literature")
        assert pat.qualifiers == ((Name("Date"), Name("2016")),)

    def test_shared_variable_conjunction(self):
        q = parse_query("Pride and Prejudice:author :?x \\and Sense and Sensibility: author :?x")
        tree = q.statements[0].tree
        assert isinstance(tree, And) and len(tree.items) == 2
        assert {p.o for p in tree.items} == {Var("x")}

    def test_assignment_and_ans(self):
        q = parse_query("?x: profession : musician \\and ?x: children :?y \\and (count (?y) >= 10), "
                        "?z = count (?y), ANS ?x, ?x.native language, ?z")
        tree = q.statements[0].tree
        assert isinstance(tree.items[-1], Compare)
        assert tree.items[-1].lhs == AggCall("count", Var("y"))
        assert q.statements[1] == Assignment(Var("z"), "count", Var("y"))
        assert q.ans == (Var("x"), PropertyPath(Var("x"), ("native language",)), Var("z"))

    def test_bare_and_backslash_clauses(self):
        a = parse_query("?x: award : Nobel Prize in Literature (Date :?y)\norder by ?y desc")
        b = parse_query("?x: award : Nobel Prize in Literature (Date :?y)\n\\order by ?y desc")
        assert a == b and a.order_by[0].descending

    def test_filter_misspelling(self):
        q = parse_query("?x:instance of :song\n\\fileter ?x \\match '%99%\\%qualified%'")
        assert isinstance(q.statements[1], FilterClause)

    def test_trailing_comma(self):
        assert parse_query("?x : a : b,") == parse_query("?x : a : b")

    def test_precedence(self):
        tree = parse_query("?x : a : b \\or ?x : c : d \\and \\not ?x : e : f").statements[0].tree
        assert tree.__class__.__name__ == "Or"
        assert tree.items[1].__class__.__name__ == "And"
        assert tree.items[1].items[1].__class__.__name__ == "Not"

    @pytest.mark.parametrize("text", [
        "?x : a : b, ANS ?y",
        "?x : a : b \\order by ?y",
        "?x : a : b, ?z = max(?y)",
        "? : a : ?",
        "?x : a : b \\and ?x \\match '?'" if False else "?x : a : b \\and ? > 3",
        "?x : a : (",
        "?x : a",
        "?x." + ".".join(["p"] * 9) + " : a : b",
    ])
    def test_rejects(self, text):
        with pytest.raises(EQLSyntaxError) as exc:
            parse_query(text)
        assert exc.value.line >= 1 and exc.value.column >= 1

    def test_variable_limit(self):
        pats = " \\and ".join(f"?z{i} : a : b" for i in range(1, 51))
        parse_query(pats)  # 50 variables
        with pytest.raises(EQLSyntaxError):
            parse_query(pats + " \\and ?x : a : b")

    def test_position_in_diagnostic(self):
        with pytest.raises(EQLSyntaxError) as exc:
            parse_query("?x : award :\n  ?y (prize : ")
        assert exc.value.line == 2


class TestPrettyPrint:
    def test_single_pattern(self):
        q = parse_query("?: award : Nobel Prize in Literature (Date : 1925)")
        assert pretty_print(q) == "? : award : Nobel Prize in Literature (Date : 1925)"

    def test_minimal(self):
        assert pretty_print(parse_query("?: p : o")) == "? : p : o"

    def test_order_clause_on_own_line(self):
        q = parse_query("?x: award : Nobel Prize in Literature (Date :?y)\norder by ?y desc")
        lines = pretty_print(q).splitlines()
        assert len(lines) == 2
        assert lines[1] == "    \\order by ?y desc"


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(queries())
def test_round_trip(query):
    assert parse_query(pretty_print(query)) == query


@settings(max_examples=10_000, deadline=None)
@given(st.binary(max_size=60))
@example(b"\\")
@example(b"((((((((((((((((((((((((((((((((((((((((((((((((((((((((((((((((((((")
def test_fuzz_bytes_give_diagnostics_only(data):
    text = data.decode("utf-8", errors="replace")
    try:
        parse_query(text)
    except EQLError:
        pass


class TestSimplified:
    LEX = {"capital", "beijing", "bob dylan", "male", "bird", "good at", "flying"}

    def test_capital(self):
        assert parse_simplified("? Capital Beijing", self.LEX) == parse_query("?: Capital : Beijing")

    def test_unknown_property(self):
        assert parse_simplified("Bob Dylan ? Male", self.LEX) == parse_query("Bob Dylan : ? : Male")

    def test_ambiguous(self):
        with pytest.raises(AmbiguousSegmentationError):
            parse_simplified("a b c ?", {"a", "a b", "b c", "c"})

    def test_no_segmentation(self):
        with pytest.raises(NoSegmentationError):
            parse_simplified("Bird swims ?", self.LEX)

    def test_agrees_with_colon_form(self):
        rng = random.Random(3)
        words = ["bird", "good at", "flying", "capital", "beijing"]
        for _ in range(200):
            parts = rng.sample(words, 3)
            parts[rng.randrange(3)] = "?"
            try:
                got = parse_simplified(" ".join(parts), set(words))
            except EQLSyntaxError:
                continue
            assert got == parse_query(" : ".join(parts))


class TestSuggestions:
    HEMINGWAY_ADD = ("\\suggest add\nErnest Hemingway : major works : a movable feast\n"
              "(first published : 1964, ISBN: 0-684-82499-X)\n"
              "\\ref1: Wikipedia www.wikipedia.com ,\n\\ref2: Ernest Hemingway Research Anthology\n"
              "ISBN 978-7-5447-3164-5")

    def test_add_with_refs(self):
        sug = parse_suggestion(self.HEMINGWAY_ADD)
        assert sug.kind == "add"
        assert sug.before.s == "Ernest Hemingway" and sug.before.o == "a movable feast"
        assert sug.before.qualifiers == (("first published", "1964"), ("ISBN", "0-684-82499-X"))
        assert sug.refs == ("Wikipedia www.wikipedia.com",
                            "Ernest Hemingway Research Anthology ISBN 978-7-5447-3164-5")

    def test_delete(self):
        sug = parse_suggestion("\\suggest delete Ernest Hemingway : major works : a movable feast")
        assert sug.kind == "delete" and sug.before.qualifiers == () and sug.after is None

    def test_change_needs_change_to(self):
        with pytest.raises(EQLSyntaxError):
            parse_suggestion("\\suggest change a : b : c")

    def test_delete_rejects_qualifiers(self):
        with pytest.raises(EQLSyntaxError):
            parse_suggestion("\\suggest delete a : b : c (d : e)")

    def test_plain_ref(self):
        assert parse_suggestion("\\suggest add a : b : c \\ref: somewhere").refs == ("somewhere",)


def test_fact_with_escapes():
    fact = parse_fact(r"What is life\? The Physical Aspect of the Living Cell : author : Erwin Schrödinger")
    assert fact.s == "What is life? The Physical Aspect of the Living Cell"

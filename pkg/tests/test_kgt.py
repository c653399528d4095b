import io
from pathlib import Path

from hypothesis import given, settings, strategies as st

from eql.kgt import load_graph, save_graph
from eql.store import Store

from conftest import DATA, load


def test_awards_report():
    store = Store()
    report = store.load_graph(DATA / "awards.kgt")
    assert report.statements == 15
    assert (report.property_aliases, report.entity_aliases) == (2, 3)
    assert report.errors == []


def test_empty_source():
    report = Store().load_graph("")
    assert (report.statements, report.aliases, report.errors) == (0, 0, [])


def test_malformed_line_is_isolated():
    text = "a : p : b\nthis line has no separators\nc : p : d\n"
    store = Store()
    report = store.load_graph(text)
    assert report.statements == 2
    assert [line for line, _ in report.errors] == [2]


def test_sources(tmp_path):
    text = (DATA / "awards.kgt").read_text(encoding="utf-8")
    for source in (text, text.encode("utf-8"), io.StringIO(text), io.BytesIO(text.encode()),
                   DATA / "awards.kgt"):
        assert Store().load_graph(source).statements == 15


def test_undecodable_stream_is_fatal():
    import pytest
    from eql.errors import EQLError

    with pytest.raises(EQLError):
        Store().load_graph(b"\xff\xfe bad")


def test_default_before_entity_is_deferred():
    text = "@default Dub = Dub_A\n@entity e1 Dub_A\n@entity e2 Dub_B\nx : p : Dub\n"
    store = Store()
    report = store.load_graph(text)
    assert report.errors == []
    st = store.statements[1]
    assert st.o.payload == "e1"


def test_alias_declared_after_use():
    store = Store()
    store.load_graph("@entity p1 award\nx : Awards : y\n@alias award = Awards\n")
    assert store.statements[1].p == "p1"


def test_quoted_values_stay_text():
    store = Store()
    store.load_graph('@entity e1 Thing\nx : p : "Thing"\nx : q : "1925"\n')
    assert [st.o.tag for st in store.statements.values()] == ["text", "text"]


def _multiset(store):
    return store.statement_multiset()


def _names(store):
    """Statement multiset with entity ids replaced by canonical names."""
    from collections import Counter

    def n(eid):
        return store.get(eid).canonical_name

    def v(value):
        return ("e", n(value.payload)) if value.is_entity else value.key()

    return Counter((n(st.s), n(st.p), v(st.o), frozenset((n(q), v(x)) for q, x in st.qualifiers))
                   for st in store.statements.values())


def test_round_trip_fixtures():
    for files in (["awards.kgt"], ["awards.kgt", "awards_aliases.kgt", "laureates.kgt"],
                  ["family.kgt"]):
        store = load(*files)
        again = Store()
        report = again.load_graph(save_graph(store))
        assert report.errors == []
        assert _multiset(again) == _multiset(store)
        assert set(again.rules) == set(store.rules)


_name = st.text(alphabet="abcXYZ :?%_,()=\\'\"1", min_size=1, max_size=12).map(
    lambda s: " ".join(s.split())).filter(lambda s: s and s.strip("\"") == s)
_value = st.one_of(_name, st.integers(0, 3000).map(str), st.sampled_from(["8000000 SEK", "SEK 5", "1.5 km"]))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(_name, _name, _value, st.lists(st.tuples(_name, _value), max_size=2)),
                min_size=1, max_size=8))
def test_round_trip_generated(facts):
    from eql.lexer import escape_name

    lines = []
    for s, p, o, quals in facts:
        line = f"{escape_name(s)} : {escape_name(p)} : {escape_name(o)}"
        if quals:
            line += " (" + ", ".join(f"{escape_name(q)} : {escape_name(v)}" for q, v in quals) + ")"
        lines.append(line)
    store = Store()
    store.load_graph("\n".join(lines))
    again = Store()
    report = again.load_graph(save_graph(store))
    assert report.errors == []
    assert _names(again) == _names(store)

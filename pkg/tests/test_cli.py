import io
import os
import random
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from eql.cli import Session, repl, repl_step, run
from eql.evaluator import evaluate
from eql.parser import parse_query
from eql.render import Renderer, card_csv, duplicate_report, render_result

from conftest import DATA, load

AWARDS = [str(DATA / "awards.kgt"), str(DATA / "awards_aliases.kgt")]
ALL = AWARDS + [str(DATA / "laureates.kgt")]
DUBLIN_WRITERS = "?x: occupation : writer \\and ?x: place of birth : Dublin"


def kg(files):
    return [arg for f in files for arg in ("--kg", f)]


def cli(argv, capsys):
    out = io.StringIO()
    status = run(argv, out)
    return status, out.getvalue(), capsys.readouterr().err


@pytest.fixture
def many(tmp_path):
    """120 people who all hold the same award."""
    path = tmp_path / "many.kgt"
    lines = ["@entity p1 award", "@entity ea1 Prize"]
    lines += [f"Person {i:03d} : award : Prize" for i in range(120)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


class TestOneShot:
    def test_query(self, capsys):
        status, out, _ = cli(kg(AWARDS) + ["query", "?: award : Nobel Prize in Literature (Date : 2016)"], capsys)
        assert status == 0 and out == "Bob Dylan ehm001002\n"

    def test_query_from_file(self, capsys, tmp_path):
        f = tmp_path / "q.eql"
        f.write_text("G.B. Shaw : BirthPlace : ?\n", encoding="utf-8")
        status, out, _ = cli(kg(AWARDS) + ["query", "-f", str(f)], capsys)
        assert out.startswith("Dublin ep1900101\n")

    def test_syntax_error(self, capsys):
        status, out, err = cli(kg(AWARDS) + ["query", "?x : award :\n (Date : "], capsys)
        assert status != 0 and out == ""
        assert "line 2, column" in err

    def test_missing_graph_file(self, capsys):
        status, _, err = cli(["--kg", "/nonexistent.kgt", "query", "?x : a : b"], capsys)
        assert status != 0 and err

    def test_fuzzy_miss(self, capsys):
        status, _, err = cli(kg(AWARDS) + ["query", "G.E. Shaw: BirthPlace:?"], capsys)
        assert status == 1 and 'do not found "G.E. Shaw"' in err

    def test_env_graph_path(self, capsys, monkeypatch):
        monkeypatch.setenv("EQL_KG_PATH", os.pathsep.join(AWARDS))
        status, out, _ = cli(["query", "George Bernard Shaw : award : Nobel Prize in Literature (prize : ?)"],
                             capsys)
        assert out == "118165 SEK\n"

    def test_duplicate_report(self, capsys):
        status, out, _ = cli(kg(ALL) + ["query", DUBLIN_WRITERS], capsys)
        assert out.splitlines() == [
            "x = George Bernard Shaw ehm001001",
            "x = James Joyce         ehm001088",
            "EQL duplicate name report:",
            "",
            "1. Dublin_Ireland default",
            "2. Dublin_California",
            'default applied: "Dublin = Dublin_Ireland"',
        ]

    def test_csv_and_jsonl_modes(self, capsys):
        _, out, _ = cli(kg(ALL) + ["--mode", "csv", "query", DUBLIN_WRITERS], capsys)
        assert out.splitlines()[:2] == ["x,x id", "George Bernard Shaw,ehm001001"]
        _, out, _ = cli(kg(ALL) + ["--mode", "jsonl", "query", DUBLIN_WRITERS], capsys)
        assert out.splitlines()[1] == '{"x": "James Joyce", "x id": "ehm001088"}'

    def test_card_csv(self, capsys):
        status, out, _ = cli(kg(AWARDS) + ["card", "George Bernard Shaw", "--csv"], capsys)
        lines = out.splitlines()
        assert lines[0] == "subject,subject id,property,value,value id,Date,prize,Winning work,Related items"
        assert lines[1] == ("George Bernard Shaw,ehm001001,award,Nobel Prize in Literature,ea0000001,"
                            "1925,118165 SEK,,")
        assert len(lines) == 1 + 6

    def test_card_text_and_unknown(self, capsys):
        status, out, _ = cli(kg(AWARDS) + ["card", "Bob Dylan"], capsys)
        assert out.startswith("Bob Dylan  ehm001002\n")
        status, _, err = cli(kg(AWARDS) + ["card", "Bob Dilan"], capsys)
        assert status == 1 and "Bob Dylan" in err

    def test_lambda(self, capsys):
        status, out, _ = cli(["lambda", "(? : children): BirthPlace: New York"], capsys)
        assert out == "λx.∃y.Children(x, y) ∧ BirthPlace(y, NewYork)\n"
        status, out, _ = cli(["--ascii-lambda", "lambda", "(? : children): BirthPlace: New York"], capsys)
        assert out.startswith("lambda x.exists y.")

    def test_load(self, capsys):
        status, out, _ = cli(["load"] + AWARDS, capsys)
        assert status == 0 and "15 statements" in out

    def test_suggest_queue(self, capsys, tmp_path):
        journal = ["--journal", str(tmp_path / "j")]
        text = "\\suggest add Ernest Hemingway : major works : a movable feast (first published : 1964)"
        base = kg(ALL) + journal
        assert cli(base + ["suggest-queue", "submit", "--text", text], capsys)[1] == (
            "'\\suggest add' request accepted: id 1\n")
        _, out, _ = cli(base + ["suggest-queue", "list", "--state", "pending"], capsys)
        assert out.startswith("1\tpending\t")
        _, out, _ = cli(base + ["suggest-queue", "approve", "1"], capsys)
        assert "approved" in out
        _, out, _ = cli(base + ["query", "Ernest Hemingway : major works : ?"], capsys)
        assert out == "a movable feast\n"
        status, _, err = cli(base + ["suggest-queue", "reject", "1"], capsys)
        assert status == 1 and "already approved" in err

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "eql", *kg(AWARDS), "query",
                               "George Bernard Shaw : ? : Dublin"], capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.startswith("place of birth p01000100\n")


class TestRepl:
    def test_fuzzy_yes(self, awards):
        s = Session(awards)
        prompt = repl_step(s, "G.E. Shaw: birthplace:?")
        assert prompt.startswith('do not found "G.E. Shaw" , the query you actually want is "G.B. Shaw')
        assert prompt.rstrip().endswith("(y/n)")
        assert repl_step(s, "y") == "Dublin ep1900101\n"

    def test_fuzzy_no_and_new_query_clears(self, awards):
        s = Session(awards)
        repl_step(s, "G.E. Shaw: birthplace:?")
        assert repl_step(s, "n") == "cancelled\n"
        repl_step(s, "G.E. Shaw: birthplace:?")
        repl_step(s, "Bob Dylan : Chinese name : ?")
        assert s.pending is None

    def test_more_paging(self, many):
        s = Session(load_graph(many))
        first = repl_step(s, "? : award : Prize")
        assert first.count("Person") == 50 and "more" in first.splitlines()[-1]
        second = repl_step(s, "more")
        assert second.count("Person") == 50
        third = repl_step(s, "more")
        assert third.count("Person") == 20 and "more rows" not in third
        assert repl_step(s, "more") == "no more rows\n"

    def test_page_size_flag(self, many, capsys):
        stdin = io.StringIO("? : award : Prize\nmore\n")
        session = Session(load_graph(many), page_size=100)
        out = io.StringIO()
        repl(session, stdin, out)
        assert out.getvalue().count("Person") == 120

    def test_report_appended(self, laureates):
        out = repl_step(Session(laureates), DUBLIN_WRITERS)
        assert "EQL duplicate name report:" in out and "James Joyce" in out

    def test_mode_switch(self, awards):
        s = Session(awards)
        assert repl_step(s, ":mode csv") == "mode csv\n"
        assert repl_step(s, "G.B. Shaw : BirthPlace : ?") == "?,? id\nDublin,ep1900101\n"
        assert repl_step(s, ":mode xml").startswith("usage")

    def test_errors_do_not_end_session(self, awards):
        s = Session(awards)
        assert repl_step(s, "?x : (").startswith("syntax error")
        assert repl_step(s, "Nobody Here : award : ?").startswith("error")
        assert repl_step(s, "more") == "no active result\n"
        assert not s.done
        repl_step(s, ":quit")
        assert s.done

    def test_continuation_lines(self, laureates):
        stdin = io.StringIO("?x: award : Nobel Prize in Literature (Date :?y) \\\n\\filter ?y > 2017\n")
        out = io.StringIO()
        repl(Session(laureates), stdin, out)
        assert "Peter Handke" in out.getvalue() and "Ishiguro" not in out.getvalue()

    @pytest.mark.parametrize("query", [DUBLIN_WRITERS, "?x: award : Nobel Prize in Literature (Date :?y)",
                                       "?x: award : ?y (prize :?z1), ?z2 = avg(?z1), ?z3 = max(?z1)"])
    @pytest.mark.parametrize("mode", ["table", "csv", "jsonl"])
    def test_repl_matches_one_shot(self, laureates, capsys, query, mode):
        _, one_shot, _ = cli(kg(ALL) + ["--mode", mode, "--page-size", "1000", "query", query], capsys)
        s = Session(laureates, mode=mode, page_size=1000)
        assert repl_step(s, query) == one_shot


def load_graph(path):
    from pathlib import Path

    from eql.store import Store

    store = Store()
    store.load_graph(Path(path))
    return store


@settings(max_examples=300, deadline=None)
@given(st.lists(st.text(max_size=40), max_size=5))
def test_repl_survives_any_input(lines):
    store = load("awards.kgt", "awards_aliases.kgt")
    s = Session(store)
    for line in lines:
        if line.strip().lower() in (":quit", ":q", ":exit"):
            continue
        assert isinstance(repl_step(s, line), str)
        assert not s.done


def test_repl_survives_random_bytes(awards):
    rng = random.Random(4)
    s = Session(awards)
    for _ in range(2000):
        line = bytes(rng.randrange(256) for _ in range(rng.randint(0, 30))).decode("utf-8", "replace")
        if line.strip().lower() in (":quit", ":q", ":exit"):
            continue
        repl_step(s, line)
    assert not s.done


class TestRender:
    def test_group_headers(self, laureates):
        rs = evaluate(parse_query("?x: award : Nobel Prize in Literature (Date :?y)\n\\order by ?y asc\n"
                                  "\\group by ?x.nationality"), laureates)
        text = render_result(laureates, rs)
        assert text.splitlines()[0] == "group x.nationality = France"

    def test_continued_group(self, laureates):
        rs = evaluate(parse_query("?x: award : Nobel Prize in Literature (Date :?y)\n\\order by ?y asc\n"
                                  "\\group by ?x.nationality"), laureates)
        r = Renderer(laureates, rs)
        page, more = r.page(1, 2)
        assert page.splitlines() == ["group x.nationality = France (continued)",
                                     "x = Andre Gide          ehm001027  y = 1947",
                                     "group x.nationality = Ireland",
                                     "x = George Bernard Shaw ehm001001  y = 1925"]
        assert more

    def test_summary_annotation(self, awards):
        rs = evaluate(parse_query("?x: award : ?y (prize :?z1), ?z2 = avg(?z1), ?z3 = max(?z1)"), awards)
        lines = render_result(awards, rs).splitlines()
        assert lines[-2:] == ["z2 = 4059082.5 SEK", "z3 = 8000000 SEK (x = Bob Dylan ehm001002)"]

    def test_empty_report(self, awards):
        assert duplicate_report(awards, []) == ""

    def test_card_csv_has_row_per_fact(self, awards):
        card = awards.knowledge_card(awards.find("Bob Dylan"))
        assert len(card_csv(awards, card).splitlines()) == 1 + len(card.facts)

    def test_no_results(self, awards):
        rs = evaluate(parse_query("Bob Dylan : place of birth : ?"), awards)
        assert render_result(awards, rs) == "(no results)\n"

import random

from eql.evaluator import evaluate
from eql.parser import parse_query

from generators import RandomGraph
from oracles import brute_force


def evaluator_tuples(graph, text, order):
    rs = evaluate(parse_query(text), graph.store, fuzzy=False)
    names = {ident: name for name, ident in graph.ids.items()}
    return {tuple(names[row[v].payload] for v in order) for row in rs.rows}


def check(seed: int) -> None:
    rng = random.Random(seed)
    graph = RandomGraph(rng)
    for _ in range(2):
        text, patterns, order = graph.query(rng)
        want = brute_force(graph.facts, patterns, order, graph.domain)
        assert evaluator_tuples(graph, text, order) == want, (seed, text)


def test_small_graphs():
    for seed in range(60):
        check(seed)


def test_empty_graph():
    rng = random.Random(0)
    graph = RandomGraph(rng, max_statements=0)
    text, patterns, order = graph.query(rng)
    assert evaluator_tuples(graph, text, order) == brute_force(graph.facts, patterns, order, graph.domain)

"""Tests for subtokens, SBT, the AST graph and code tokens."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import random

import numpy as np
import pytest

from src.errors import SbtFormatError, SchemaError
from src.modalities import (
    END, START, GraphRep, adjacency_from_edges, code_tokens, graph_extract, join_value_pieces,
    normalize_literals, render_graph, sbt_parse, sbt_serialize, subtokenize, value_pieces, value_tokens,
)
from src.solidity_parser import AstNode, assign_ids, parse_source


def _method(src: str) -> AstNode:
    contract = parse_source("contract C {\n" + src + "\n}").children[0]
    return assign_ids(next(c for c in contract.children if c.type_label == "FunctionDefinition"))


# ── Subtokens ────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("word, pieces", [
    ("_tokensToSell", ["_tokens", "To", "Sell"]),
    ("balanceOf", ["balance", "Of"]),
    ("ERC20Token", ["ERC20", "Token"]),
    ("HTTPServer", ["HTTP", "Server"]),
    ("total_supply", ["total", "supply"]),
    ("owner", ["owner"]),
    ("<NUM>", ["<NUM>"]),
    ("__", ["__"]),
    ("==", ["=="]),
])
def test_subtokenize(word, pieces):
    assert subtokenize(word) == pieces


def test_value_pieces_keep_underscores_and_spaces():
    assert value_pieces("total_supply") == ["total", "_", "supply"]
    assert value_pieces("uint x ;") == ["uint", "<SP>", "x", "<SP>", ";"]
    assert join_value_pieces(value_pieces("a__bC (d)")) == "a__bC (d)"


def test_value_tokens_drop_spacing():
    assert value_tokens("uint x ;") == ["uint", "x", ";"]
    assert value_tokens("f(a)") == ["f", "(", "a", ")"]


# ── SBT ──────────────────────────────────────────────────────────────────────

def test_sbt_shape():
    tree = AstNode("Return", children=[AstNode("Identifier", "x")])
    assert sbt_serialize(tree).tokens == [
        START, "(", "Return", "(", "Identifier", "x", ")", "Identifier", ")", "Return", END,
    ]


def test_sbt_of_method_splits_identifiers():
    fn = _method("function _tokensToSell() private view returns (uint256) { return 1; }")
    text = " ".join(sbt_serialize(normalize_literals(fn)).tokens)
    assert text.startswith("<START> ( FunctionDefinition ( SimpleName _tokens To Sell ) SimpleName")
    assert "( NumberLiteral <NUM> ) NumberLiteral" in text


VALUE_PARTS = [
    "a", "b", "_", "X", "Y", "1", " ", "\n", "(", ")", "<", ">", "=", ";", ".",
    "<SP>", "<NL>", "<LRB>", "<LT>", "<EMPTY>", "<NUM>", "<START>", "<END>",
]


def _random_tree(rng: random.Random, budget: list, depth: int = 0) -> AstNode:
    budget[0] -= 1
    label = rng.choice(["Block", "Identifier", "BinaryOperation", "Statement", "X"])
    if depth >= 6 or budget[0] <= 0 or rng.random() < 0.3:
        value = "".join(rng.choice(VALUE_PARTS) for _ in range(rng.randint(0, 6)))
        return AstNode(label, value)
    children = []
    for _ in range(rng.randint(0, 4)):
        if budget[0] <= 0:
            break
        children.append(_random_tree(rng, budget, depth + 1))
    return AstNode(label, children=children)


def test_sbt_round_trip_random_trees():
    rng = random.Random(7)
    for _ in range(1000):
        tree = assign_ids(_random_tree(rng, [150]))
        assert tree.size() <= 150
        assert sbt_parse(sbt_serialize(tree, max_len=10**6)) == tree


@pytest.mark.parametrize("value", ["", "<", ">", "<SP>", "a<NL>b", "<LT>", "<EMPTY>", "x <RRB> y", "<NUM>"])
def test_sbt_round_trip_reserved_looking_values(value):
    tree = assign_ids(AstNode("Block", children=[AstNode("Statement", value), AstNode("Identifier", "x")]))
    parsed = sbt_parse(sbt_serialize(tree))
    assert parsed == tree
    assert parsed.children[0].value == value


def test_value_pieces_escape_markers():
    assert value_pieces("") == ["<EMPTY>"]
    assert value_pieces("<SP>") == ["<LT>", "SP", ">"]
    assert value_pieces("<NUM>") == ["<NUM>"]
    assert join_value_pieces(value_pieces("a<NL>b")) == "a<NL>b"


def test_sbt_round_trip_parsed_method():
    fn = normalize_literals(_method(
        "function f(uint a) public returns (uint) { if (a > 2) { return a * 2; } assembly { let x := 1 } return a; }"
    ))
    assert sbt_parse(sbt_serialize(fn, max_len=10**6)) == fn


def test_sbt_truncation():
    fn = _method("function f() public { x = 1; }")
    seq = sbt_serialize(fn, max_len=5)
    assert len(seq) == 5
    assert seq.truncated


@pytest.mark.parametrize("tokens", [
    [],
    [START, END],
    ["(", "A", ")", "B"],
    ["(", "A"],
    ["x"],
    ["(", "A", "v", "(", "B", ")", "B", ")", "A"],
    ["(", "A", ")", "A", "(", "B", ")", "B"],
    ["(", ")", "A"],
    [")", "A"],
])
def test_sbt_parse_rejects_malformed(tokens):
    with pytest.raises(SbtFormatError):
        sbt_parse(tokens)


# ── Graph ────────────────────────────────────────────────────────────────────

def test_graph_extract():
    tree = assign_ids(AstNode("FunctionDefinition", children=[
        AstNode("SimpleName", "_tokensToSell"), AstNode("Block"),
    ]))
    graph = graph_extract(tree)
    assert graph.node_labels == ["FunctionDefinition", "SimpleName", "_tokens", "To", "Sell", "Block"]
    assert graph.edges == [(0, 1), (1, 2), (1, 3), (1, 4), (0, 5)]
    assert graph.neighbors(1) == [0, 2, 3, 4]


def test_graph_cap():
    tree = AstNode("FunctionDefinition", children=[AstNode("SimpleName", "_tokensToSell"), AstNode("Block")])
    graph = graph_extract(tree, max_nodes=3)
    assert graph.node_labels == ["FunctionDefinition", "SimpleName", "_tokens"]
    assert all(i < 3 and j < 3 for i, j in graph.edges)


def test_adjacency_has_self_loops_and_is_symmetric():
    adj = GraphRep(["a", "b", "c"], [(0, 1), (0, 2)]).adjacency
    expected = np.array([[1, 1, 1], [1, 1, 0], [1, 0, 1]], dtype=float)
    np.testing.assert_array_equal(adj, expected)


@pytest.mark.parametrize("edge", [(0, 3), (1, 1), (-1, 0)])
def test_adjacency_rejects_bad_edges(edge):
    with pytest.raises(SchemaError):
        adjacency_from_edges(3, [edge])


def test_render_graph():
    text = render_graph(GraphRep(["A", "B"], [(0, 1)]))
    assert "nodes (2):" in text
    assert "0-1" in text


# ── Literals and code tokens ─────────────────────────────────────────────────

def test_normalize_literals_replaces_values_and_copies():
    fn = _method("function f() public { s = \"hi\"; a = 0x5B38Da6a701c568545dCfcB03FcB875f56beddC4; "
                 "assembly { let x := 16 } }")
    out = normalize_literals(fn)
    values = {n.type_label: n.value for n in out.walk() if n.value is not None}
    assert values["StringLiteral"] == "<STR>"
    assert values["AddressLiteral"] == "<ADDR>"
    assert values["Statement"] == "assembly { let x := <NUM> }"
    assert any(n.value == '"hi"' for n in fn.walk())


def test_code_tokens():
    fn = normalize_literals(_method("function f(uint a) public returns (uint) { return a + 1; }"))
    assert code_tokens(fn) == [
        START, "function", "f", "(", "uint", "a", ")", "public", "returns", "(", "uint", ")",
        "{", "return", "a", "+", "<NUM>", ";", "}", END,
    ]


def test_code_tokens_cap():
    fn = _method("function f(uint a) public { a = a + 1; }")
    assert len(code_tokens(fn, max_len=4)) == 4

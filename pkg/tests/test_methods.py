"""Tests for method extraction and doc-comment attachment."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import pytest

from src.method_extractor import extract_methods
from src.solidity_parser import parse_source

SOURCE = """pragma solidity ^0.8.0;

contract Shop {
    uint count; // running total

    /// @notice Buy some tokens for the sender.
    function buy() public payable {
        count += 1;
    }

    function Shop() public {}

    constructor() {}

    // plain comment line one
    // plain line two
    modifier onlyOwner() { _; }

    function () external {}

    receive() external payable {}
}

/** Free helper. */
function helper() pure returns (uint) { return 1; }
"""


@pytest.fixture
def records():
    return extract_methods(parse_source(SOURCE), SOURCE)


def test_every_method_is_found(records):
    assert [(r.kind, r.name) for r in records] == [
        ("function", "buy"),
        ("constructor", "Shop"),
        ("constructor", "constructor"),
        ("modifier", "onlyOwner"),
        ("fallback", "fallback"),
        ("receive", "receive"),
        ("function", "helper"),
    ]


def test_contract_owner(records):
    assert {r.contract for r in records[:-1]} == {"Shop"}
    assert records[-1].contract is None


def test_doc_attaches_directly_above(records):
    by_name = {r.name: r for r in records}
    assert by_name["buy"].doc == "/// @notice Buy some tokens for the sender."
    assert by_name["onlyOwner"].doc == "// plain comment line one\n// plain line two"
    assert by_name["helper"].doc == "/** Free helper. */"


def test_trailing_comment_does_not_leak(records):
    buy = records[0]
    assert "running total" not in buy.doc


def test_undocumented_methods_have_no_doc(records):
    by_name = {r.name: r for r in records}
    assert by_name["Shop"].doc is None
    assert by_name["fallback"].doc is None


def test_span_covers_method_text(records):
    buy = records[0]
    raw = SOURCE.encode("utf-8")[buy.span[0]:buy.span[1]].decode("utf-8")
    assert raw.startswith("function buy()")
    assert raw.endswith("}")


def test_method_ast_is_a_fresh_tree(records):
    buy = records[0]
    assert buy.ast.type_label == "FunctionDefinition"
    assert buy.ast.id == 0
    assert [n.id for n in buy.ast.walk()] == list(range(buy.ast.size()))


def test_bodyless_interface_functions():
    src = "interface IERC20 {\n    /// @notice Total token supply.\n    function totalSupply() external view returns (uint256);\n}\n"
    records = extract_methods(parse_source(src), src)
    assert len(records) == 1
    assert records[0].ast.child("Block") is None
    assert records[0].doc == "/// @notice Total token supply."


def test_parameter_named_from():
    src = ("contract T {\n    /// @notice Move tokens between two accounts.\n"
           "    function transferFrom(address from, address to) public {}\n}\n")
    records = extract_methods(parse_source(src), src)
    assert [r.name for r in records] == ["transferFrom"]
    params = records[0].ast.child("ParameterList").children
    names = [p.child("SimpleName").value for p in params]
    assert names == ["from", "to"]

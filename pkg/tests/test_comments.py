"""Tests for NatSpec parsing and comment selection."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import pytest

from src.comment_extractor import comment_tokens, first_sentence, parse_comment_doc, select_comment


def test_notice_beats_dev():
    doc = parse_comment_doc("/// @notice Buy tokens.\n/// @dev Uses the oracle.")
    assert doc.tagged["@notice"] == "Buy tokens."
    assert doc.tagged["@dev"] == "Uses the oracle."
    assert select_comment(doc) == "Buy tokens."


def test_untagged_natspec_counts_as_notice():
    doc = parse_comment_doc("/// Untagged natspec line.")
    assert doc.tagged == {"@notice": "Untagged natspec line."}
    assert doc.plain == ""


def test_plain_line_comment():
    doc = parse_comment_doc("// just a plain remark")
    assert doc.tagged == {}
    assert select_comment(doc) == "just a plain remark"


def test_block_doc_dev_beats_return():
    raw = "/**\n     * @dev Internal helper.\n     * @return the amount owed\n     */"
    doc = parse_comment_doc(raw)
    assert doc.tagged["@return"] == "the amount owed"
    assert select_comment(doc) == "Internal helper."


def test_return_used_when_nothing_better():
    doc = parse_comment_doc("/// @return the address registered under the given name")
    assert select_comment(doc) == "the address registered under the given name"


def test_param_only_selects_nothing():
    doc = parse_comment_doc("/// @param amount the value to send")
    assert "@param" in doc.tagged
    assert select_comment(doc) is None


def test_wrapped_tag_body_keeps_line_breaks():
    doc = parse_comment_doc("/// @notice Transfers tokens\n/// to the recipient.")
    assert doc.tagged["@notice"] == "Transfers tokens\nto the recipient."
    assert first_sentence(select_comment(doc)) == "Transfers tokens"


def test_line_break_in_block_comment_ends_the_sentence():
    raw = "/**\n     * Register a name\n     * for the target address.\n     */"
    assert first_sentence(select_comment(parse_comment_doc(raw))) == "Register a name"


def test_empty_doc():
    doc = parse_comment_doc(None)
    assert doc.is_empty
    assert select_comment(doc) is None


@pytest.mark.parametrize("text, expected", [
    ("Get balance. Then more.", "Get balance."),
    ("no end mark at all", "no end mark at all"),
    ("Version v1.2 is current. Next", "Version v1.2 is current."),
    ("line one\nline two", "line one"),
    ("Stop! now", "Stop!"),
])
def test_first_sentence(text, expected):
    assert first_sentence(text) == expected


def test_comment_tokens():
    assert comment_tokens("Get current Latium balance of this contract.") == [
        "get", "current", "latium", "balance", "of", "this", "contract",
    ]
    assert comment_tokens("Returns `x`, (the) value!") == ["returns", "x", "the", "value"]
    assert comment_tokens(" -- ") == []

"""Path-name rendering and parsing."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaptdom.errors import BadToken, ParseError
from adaptdom.paths import PathName, check_token, render_relative

TOKENS = st.from_regex(r"[A-Za-z0-9_-]{1,64}", fullmatch=True)


def test_root_renders_as_slash():
    assert PathName.root().render() == "/"
    assert PathName.parse("/") == PathName.root()
    assert PathName.root().is_root


def test_simple_round_trip():
    p = PathName(("healing", "hostA"))
    assert p.render() == "/healing/hostA"
    assert PathName.parse("/healing/hostA") == p


def test_parse_rejects_relative_and_trailing():
    with pytest.raises(ParseError):
        PathName.parse("healing")
    with pytest.raises(ParseError):
        PathName.parse("/healing/")
    with pytest.raises(ParseError):
        PathName.parse("/a//b")


def test_token_grammar():
    check_token("a-b_C9")
    with pytest.raises(BadToken):
        check_token("")
    with pytest.raises(BadToken):
        check_token("a/b")
    with pytest.raises(BadToken):
        check_token("x" * 65)
    with pytest.raises(BadToken):
        PathName(("ok", "not ok"))


def test_child_and_ordering():
    p = PathName.root().child("a").child("b")
    assert p.render() == "/a/b"
    assert PathName(("a",)) < PathName(("a", "b")) < PathName(("b",))


def test_render_relative():
    assert render_relative(()) == ""
    assert render_relative(("d", "x")) == "d/x"


@given(st.lists(TOKENS, max_size=6))
def test_render_parse_inverse(tokens):
    p = PathName(tuple(tokens))
    assert PathName.parse(p.render()) == p


@given(st.lists(TOKENS, min_size=1, max_size=6))
def test_parse_render_inverse_on_rendered_text(tokens):
    text = "/" + "/".join(tokens)
    assert PathName.parse(text).render() == text

"""Parser contract: leaf totality, structure, opaque fallback, leaf roles."""

from __future__ import annotations

import pytest

from ponziscan.errors import ParseError, UnbalancedBrackets
from ponziscan.solparse import astnodes as A
from ponziscan.solparse.lexer import code_tokens, lex
from ponziscan.solparse.parser import parse as parse_tokens


def parse(source: str):
    return parse_tokens(lex(source))


def walk(node):
    yield node
    for child in node.children:
        yield from walk(child)


def leaves(ast):
    return list(A.iter_leaves(ast))


def assert_leaf_totality(source: str):
    """Every non-comment token appears as exactly one leaf, in source order."""
    ast = parse(source)
    toks = code_tokens(lex(source))
    got = [leaf.token.index for leaf in leaves(ast)]
    assert got == [t.index for t in toks]


@pytest.mark.parametrize("source", [
    "",
    "uint a = b;",
    "contract C {}",
    "pragma solidity ^0.4.19;",
    'import "lib.sol";',
    "contract C { uint a; function f() public { a = 1; } }",
    "function f(uint c) public { if (c > 0) { c = 1; } else { c = 2; } }",
    "function f() public { while (x < 10) { x = x + 1; } }",
    "function f() public { for (uint i = 0; i < n; i++) { s += i; } }",
    "function f() public returns (uint) { return a + b; }",
    "function f() public { assembly { let x := mload(0x40) } }",
    "contract C is Base, Other { struct P { uint a; address b; } enum E { X, Y } }",
    "contract C { event Paid(address who, uint amount); modifier only() { _; } }",
    "contract C { mapping(address => uint256) balances; }",
    "function f() public { owner.transfer(msg.value); }",
    "function f() public { (a, b) = (b, a); }",
    "function f() public { delete m[k]; }",
    "contract C { constructor() public { owner = msg.sender; } }",
    "function f() public { do { i++; } while (i < 3); }",
    "interface I { function g() external; } library L { function h() internal {} }",
    "contract C { uint[] xs; function f() public { xs.push(1); emit E(xs[0]); } }",
    "function f() public { require(msg.value > 0, \"no value\"); }",
    "function f() public { uint x = a > b ? a : b; }",
])
def test_leaf_totality(source):
    assert_leaf_totality(source)


def test_empty_source_unit():
    ast = parse("")
    assert ast.kind == A.SOURCE_UNIT
    assert ast.children == []


def test_contract_shape():
    ast = parse("contract C { uint a; }")
    contract = ast.children[0]
    assert contract.kind == A.CONTRACT
    assert A.STATE_VAR in [c.kind for c in contract.children]


def test_function_shape():
    ast = parse("contract C { function f(uint x) public returns (uint) { return x; } }")
    fn = next(c for c in ast.children[0].children if c.kind == A.FUNCTION)
    kinds = [c.kind for c in fn.children]
    assert A.PARAM in kinds
    assert A.BLOCK in kinds


def test_if_else_shape():
    ast = parse("function f() public { if (a) { b = 1; } else { b = 2; } }")
    block = next(c for c in ast.children[0].children if c.kind == A.BLOCK)
    node = next(c for c in block.children if c.kind == A.IF_STMT)
    kinds = [c.kind for c in node.children]
    assert kinds.count(A.BLOCK) == 2


def test_assembly_block_is_single_opaque_statement():
    src = "function f() public { assembly { let x := mload(0x40) } }"
    ast = parse(src)
    block = next(c for c in ast.children[0].children if c.kind == A.BLOCK)
    opaque = [n for n in block.children if n.kind == A.OPAQUE]
    assert len(opaque) == 1
    inner = [leaf.token.text for leaf in A.iter_leaves(opaque[0])]
    assert inner[0] == "assembly" and inner[-1] == "}"


def test_callee_leaf_is_name_not_var():
    ast = parse("function f() public { uint r = add(a, b); }")
    roles = {}
    for leaf in leaves(ast):
        if leaf.token.text in ("add", "a", "b", "r"):
            roles.setdefault(leaf.token.text, leaf.kind)
    assert roles["add"] == A.LEAF_NAME
    assert roles["a"] == A.LEAF_VAR
    assert roles["b"] == A.LEAF_VAR
    assert roles["r"] == A.LEAF_VAR


def test_member_access_roles():
    ast = parse("function f() public { owner.transfer(fee); }")
    roles = [(l.token.text, l.kind) for l in leaves(ast)
             if l.token.text in ("owner", "transfer", "fee")]
    assert ("owner", A.LEAF_VAR) in roles
    assert ("transfer", A.LEAF_NAME) in roles
    assert ("fee", A.LEAF_VAR) in roles


def test_builtin_reference_grouped():
    ast = parse("function f() public { a = msg.sender; }")
    refs = [n for n in walk(ast) if n.kind == A.BUILTIN_REF]
    assert len(refs) == 1
    texts = [l.token.text for l in A.iter_leaves(refs[0])]
    assert texts == ["msg", ".", "sender"]


@pytest.mark.parametrize("expr", ["block.timestamp", "tx.origin", "msg.value"])
def test_builtin_reference_variants(expr):
    ast = parse(f"function f() public {{ a = {expr}; }}")
    refs = [n for n in walk(ast) if n.kind == A.BUILTIN_REF]
    assert len(refs) == 1
    assert "".join(l.token.text for l in A.iter_leaves(refs[0])) == expr


def test_placeholder_underscore_is_name():
    ast = parse("contract C { modifier only() { _; } }")
    underscore = [l for l in leaves(ast) if l.token.text == "_"]
    assert len(underscore) == 1
    assert underscore[0].kind == A.LEAF_NAME


def test_leaf_variable_order():
    ast = parse("uint a = b + c;")
    names = [l.token.text for l in leaves(ast) if l.kind == A.LEAF_VAR]
    assert names == ["a", "b", "c"]


def test_unbalanced_brackets_raise():
    with pytest.raises(UnbalancedBrackets):
        parse("assembly { let x")


def test_mangled_nesting_still_raises_parse_error():
    with pytest.raises(ParseError):
        parse("function f() public { if (a { } }")


def test_parse_error_has_offset():
    with pytest.raises(ParseError) as err:
        parse("contract {")
    assert isinstance(err.value.offset, int)
    assert err.value.offset >= 0


def test_to_jsonable_shape():
    ast = parse("uint a;")
    data = A.to_jsonable(ast)
    assert data["kind"] == A.SOURCE_UNIT
    assert isinstance(data["children"], list)
    node = data
    while "children" in node:
        node = node["children"][0]
    assert node["text"] == "uint"
    assert node["span"] == [0, 4]


def test_node_at_follows_paths():
    ast = parse("contract C { function f() public { a = 1; } }")
    for leaf, path in A.iter_leaves_with_paths(ast):
        assert A.node_at(ast, path) is leaf

"""Lexing and parsing for the supported Solidity subset."""

from ponziscan.solparse import astnodes
from ponziscan.solparse.astnodes import AstNode, AstPath, iter_leaves, iter_leaves_with_paths, node_at, to_jsonable
from ponziscan.solparse.lexer import (
    KIND_COMMENT,
    KIND_IDENTIFIER,
    KIND_KEYWORD,
    KIND_NUMBER,
    KIND_PUNCT,
    KIND_STRING,
    Token,
    code_tokens,
    is_type_keyword,
    lex,
    render,
)
from ponziscan.solparse.parser import leaf_identifiers, occurrence_name, parse

__all__ = [
    "astnodes",
    "AstNode",
    "AstPath",
    "Token",
    "KIND_COMMENT",
    "KIND_IDENTIFIER",
    "KIND_KEYWORD",
    "KIND_NUMBER",
    "KIND_PUNCT",
    "KIND_STRING",
    "code_tokens",
    "is_type_keyword",
    "iter_leaves",
    "iter_leaves_with_paths",
    "leaf_identifiers",
    "lex",
    "node_at",
    "occurrence_name",
    "parse",
    "render",
    "to_jsonable",
]

"""Typed values stored in relation tuples: NULL, constants, and object identifiers.

Object identifiers (OIDs) live in a sort disjoint from ordinary constants.
An OID carries a tag (its entity sort) and a payload; two OIDs are equal only
when both match, and an OID never equals a constant.  Forward mapping views
mint OIDs by retagging natural-key constants, so the payload of a minted OID
is that key value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


class _Null:
    """The NULL marker.  Singleton; distinct from every constant and OID."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NULL"

    def __hash__(self):
        return hash("schematrans.NULL")


NULL = _Null()

Token = Union[str, int]


@dataclass(frozen=True)
class Const:
    token: Token

    def __repr__(self):
        return repr(self.token)


@dataclass(frozen=True)
class Oid:
    tag: str
    payload: Token

    def __repr__(self):
        return f"{self.tag}:{self.payload}"


Value = Union[_Null, Const, Oid]


def is_null(v: Value) -> bool:
    return v is NULL or isinstance(v, _Null)


def retag(v: Value, tag: str) -> Value:
    """Coerce a constant into the OID sort (surrogate minting)."""
    if is_null(v):
        return NULL
    if isinstance(v, Oid):
        if v.tag != tag:
            raise ValueError(f"cannot retag OID {v!r} into sort {tag}")
        return v
    return Oid(tag, v.token)


def untag(v: Value) -> Value:
    """Coerce an OID back into the constant sort (natural-key recovery)."""
    if is_null(v):
        return NULL
    if isinstance(v, Oid):
        return Const(v.payload)
    return v


def _order_key(v: Value):
    # NULL < integer constants < string constants < OIDs.
    if is_null(v):
        return (0, "", 0, "")
    if isinstance(v, Const):
        if isinstance(v.token, int):
            return (1, "", v.token, "")
        return (2, "", 0, v.token)
    if isinstance(v.payload, int):
        return (3, v.tag, v.payload, "")
    return (4, v.tag, 0, v.payload)


def value_sort_key(v: Value):
    """Total order on values, used for deterministic enumeration and printing."""
    return _order_key(v)


def format_value(v: Value) -> str:
    """Render a value in the instance-file syntax."""
    if is_null(v):
        return "NULL"
    if isinstance(v, Const):
        if isinstance(v.token, int):
            return str(v.token)
        return '"' + v.token.replace('"', '\\"') + '"'
    return f"{v.tag}:{v.payload}"

"""Minimal element/attribute whitelist checking for the two XML dialects."""
from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from ..errors import ParseError, UnknownElementError

log = logging.getLogger(__name__)


@dataclass
class Node:
    attrs: frozenset = frozenset()
    children: dict = field(default_factory=dict)
    text: bool = False


def node(*attrs, text=False, **children) -> Node:
    return Node(frozenset(attrs), children, text)


def local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_xml(xml_text: str) -> ET.Element:
    try:
        return ET.fromstring(xml_text.encode() if isinstance(xml_text, str) else xml_text)
    except ET.ParseError as exc:
        raise ParseError(f"XML is not well-formed: {exc}") from None


def check(elem: ET.Element, schema: Node, strict: bool, path: str = "") -> None:
    here = f"{path}/{local(elem.tag)}"
    for a in elem.attrib:
        name = local(a)
        if a.startswith("{http://www.w3.org/2001/XMLSchema-instance}"):
            continue
        if name not in schema.attrs:
            _complain(f"unknown attribute {name!r} on {here}", strict)
    for child in elem:
        if not isinstance(child.tag, str):
            continue  # comments
        tag = local(child.tag)
        sub = schema.children.get(tag)
        if sub is None:
            _complain(f"unknown element <{tag}> in {here}", strict)
            continue
        check(child, sub, strict, here)


def _complain(msg: str, strict: bool) -> None:
    if strict:
        raise UnknownElementError(msg)
    log.warning(msg)


def find(elem: ET.Element, *path: str):
    """First descendant along ``path`` (namespace-agnostic), or None."""
    cur = elem
    for name in path:
        nxt = None
        for child in cur:
            if isinstance(child.tag, str) and local(child.tag) == name:
                nxt = child
                break
        if nxt is None:
            return None
        cur = nxt
    return cur


def findall(elem: ET.Element, name: str):
    return [c for c in elem if isinstance(c.tag, str) and local(c.tag) == name]


def text_of(elem) -> str | None:
    return None if elem is None or elem.text is None else elem.text.strip()

"""Lexical URL parsing and fixed-order feature extraction.

Every classifier, attack, and defense in this package consumes the
16-dimensional vector produced by :func:`extract_features`.  The order of
``FEATURE_NAMES`` is frozen; reordering it is a breaking change guarded by
a golden-vector test.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from urllib.parse import urlsplit

import numpy as np

from .errors import LabelError, MalformedUrl

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*://")
_IPV4_RE = re.compile(r"^(?:\d{1,3}\.){3}\d{1,3}$")

FEATURE_NAMES: tuple[str, ...] = (
    "url_length",
    "hostname_length",
    "path_length",
    "digit_count",
    "letter_count",
    "special_char_count",
    "dot_count",
    "hyphen_count",
    "slash_count",
    "query_param_count",
    "subdomain_count",
    "tld_length",
    "digit_ratio",
    "char_entropy",
    "has_ip_hostname",
    "uses_https",
)

N_FEATURES = len(FEATURE_NAMES)


@dataclass
class UrlRecord:
    """A raw URL string with its binary class (0 benign, 1 malicious)."""

    raw: str
    label: int

    def __post_init__(self):
        if not self.raw.strip():
            raise MalformedUrl("URL is empty")
        if self.label not in (0, 1):
            raise LabelError(f"label must be 0 or 1, got {self.label!r}")


@dataclass
class UrlParts:
    scheme: str
    hostname: str
    path: str
    query: str


def parse_url(raw: str) -> UrlParts:
    """Decompose a URL into scheme, hostname, path, and query.

    A missing scheme defaults to "http" (real corpora mix both forms);
    the hostname is lowercased.  Raises :class:`MalformedUrl` when no
    hostname can be identified.
    """
    s = raw.strip()
    if not s:
        raise MalformedUrl("URL is empty")
    if not _SCHEME_RE.match(s):
        s = "http://" + s
    try:
        parts = urlsplit(s)
        hostname = parts.hostname
    except ValueError as exc:
        raise MalformedUrl(f"cannot parse {raw!r}: {exc}") from exc
    if not hostname:
        raise MalformedUrl(f"no hostname in {raw!r}")
    return UrlParts(
        scheme=parts.scheme.lower(),
        hostname=hostname,
        path=parts.path,
        query=parts.query,
    )


def char_entropy(raw: str) -> float:
    """Shannon entropy in bits of the character distribution of ``raw``.

    0.0 for a single repeated character, log2(k) for k equally frequent
    symbols.  Base 2 is used throughout for interpretability.
    """
    n = len(raw)
    if n == 0:
        return 0.0
    ent = 0.0
    for count in Counter(raw).values():
        p = count / n
        ent -= p * math.log2(p)
    return ent


def extract_features(raw: str) -> np.ndarray:
    """Extract the 16 lexical features of a URL, in ``FEATURE_NAMES`` order.

    All counts are measured on the whitespace-trimmed input string;
    hostname-derived features use the parsed, lowercased hostname.
    Deterministic: the same string always yields a bit-identical vector.
    Propagates :class:`MalformedUrl` from :func:`parse_url`.
    """
    s = raw.strip()
    parts = parse_url(s)
    host_labels = parts.hostname.split(".")
    digits = sum(c.isdigit() for c in s)

    values = np.array(
        [
            len(s),
            len(parts.hostname),
            len(parts.path),
            digits,
            sum(c.isalpha() for c in s),
            sum(not c.isalnum() for c in s),
            s.count("."),
            s.count("-"),
            s.count("/"),
            len([p for p in parts.query.split("&") if p]) if parts.query else 0,
            max(0, len(host_labels) - 2),
            len(host_labels[-1]) if len(host_labels) > 1 else 0,
            digits / len(s),
            char_entropy(s),
            1.0 if _IPV4_RE.match(parts.hostname) else 0.0,
            1.0 if parts.scheme == "https" else 0.0,
        ],
        dtype=np.float64,
    )
    return values

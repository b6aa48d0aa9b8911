"""Flat ``key = value`` experiment configs and run manifests."""

from __future__ import annotations

import configparser
import hashlib
import json
import platform
import re

import numpy as np

from .exceptions import ConfigurationError

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "parse_list",
    "parse_matrix",
    "manifest_json",
    "versions_string",
]


class ExperimentConfig:
    """Parsed config with typed getters whose errors cite the source line."""

    def __init__(self, parser, lines, source):
        self._parser = parser
        self._lines = lines
        self.source = source

    def sections(self):
        return self._parser.sections()

    def has(self, section, key):
        return self._parser.has_option(section, key)

    def section(self, section):
        if not self._parser.has_section(section):
            return {}
        return dict(self._parser.items(section))

    def _where(self, section, key):
        line = self._lines.get((section, key))
        return f"{self.source}:{line}" if line else self.source

    def _fail(self, section, key, message):
        raise ConfigurationError(f"{self._where(section, key)}: [{section}] {key}: {message}")

    def raw(self, section, key, default=None, required=False):
        if self._parser.has_option(section, key):
            return self._parser.get(section, key)
        if required:
            raise ConfigurationError(f"{self.source}: missing required key [{section}] {key}")
        return default

    def get(self, section, key, default=None, *, type=str, required=False):
        value = self.raw(section, key, None, required)
        if value is None:
            return default
        try:
            return type(value)
        except (ValueError, TypeError) as err:
            self._fail(section, key, str(err) or f"cannot parse {value!r}")

    def digest(self):
        """SHA-256 of the canonical (sorted, whitespace-normalized) content."""
        canon = {s: dict(sorted(self._parser.items(s))) for s in sorted(self._parser.sections())}
        blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_KEY_LINE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")
_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")


def _key_lines(text):
    lines, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_LINE.match(line)
        if m:
            section = m.group(1).strip()
            continue
        m = _KEY_LINE.match(line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip()), lineno)
    return lines


def parse_config(text, source="<config>"):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as err:
        lineno = getattr(err, "lineno", None)
        where = f"{source}:{lineno}" if lineno else source
        msg = str(err).splitlines()[0]
        raise ConfigurationError(f"{where}: {msg}") from None
    return ExperimentConfig(parser, _key_lines(text), source)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigurationError(f"cannot read config {path}: {err.strerror}") from None
    return parse_config(text, str(path))


def parse_list(text, type=float):
    """``"1, 2, 3"`` -> list; empty items are rejected."""
    items = [t.strip() for t in str(text).split(",")]
    if not items or any(t == "" for t in items):
        raise ValueError(f"malformed list {text!r}")
    return [type(t) for t in items]


def parse_matrix(text):
    """Rows separated by ``;``, entries by ``,``: ``"2,0;0,1"``."""
    rows = [parse_list(r) for r in str(text).split(";")]
    if len({len(r) for r in rows}) != 1:
        raise ValueError(f"ragged matrix {text!r}")
    return np.array(rows, dtype=float)


def versions_string():
    import scipy

    from . import __version__

    return (f"mfsampling {__version__}; numpy {np.__version__}; scipy {scipy.__version__}; "
            f"python {platform.python_version()}")


def manifest_json(manifest):
    """Serialize a manifest dict deterministically (sorted keys, fixed indentation)."""
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"

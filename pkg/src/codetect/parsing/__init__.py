"""Pluggable grammar backends producing a uniform typed tree.

Each backend turns source text into a :class:`Node` tree. Node type names
are the backend's own grammar vocabulary; feature extraction namespaces them
per language, so backends never need to agree on names. Nodes may carry a
role annotation that the summarizer understands:

* ``function``  - a function/method definition (span feeds function length)
* ``decision``  - a branching construct; ``text`` holds the condition source
* ``assignment`` - one assignment operation
* ``variable``  - a variable identifier; ``text`` holds the name
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class ParseFailure(ValueError):
    """Raised when a backend cannot produce a tree ("unparsable")."""


@dataclass
class Node:
    type: str
    start_line: int = 1
    end_line: int = 1
    children: list["Node"] = field(default_factory=list)
    role: Optional[str] = None
    text: Optional[str] = None

    def add(self, child: "Node") -> "Node":
        self.children.append(child)
        return child


def get_backend(language: str):
    """Backend registry; raises ParseFailure for unsupported languages."""
    from . import cfamily, python_backend, ruby_backend

    if language == "python":
        return python_backend.PythonBackend()
    if language in cfamily.CFAMILY_LANGUAGES:
        return cfamily.CFamilyBackend(language)
    if language == "ruby":
        return ruby_backend.RubyBackend()
    raise ParseFailure(f"no grammar backend for language {language!r}")


def supported_languages() -> tuple[str, ...]:
    from . import cfamily

    return ("python",) + cfamily.CFAMILY_LANGUAGES + ("ruby",)

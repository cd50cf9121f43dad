"""Reading and writing serialized optimization-remark streams.

The text format is the multi-document YAML emitted by ``-fsave-optimization-record``:

    --- !Missed
    Pass:            loop-vectorize
    Name:            CantIdentifyArrayBounds
    DebugLoc:        { File: walker.hpp, Line: 142, Column: 5 }
    Function:        _ZN6Walker7doSweepEv
    Hotness:         300
    Args:
      - String:          'loop not vectorized: '
      - String:          cannot identify array bounds
    ...

Documents are split on ``---`` markers before YAML parsing so that one broken
document can be reported by index (and skipped in lenient mode) without
losing the rest of the stream.
"""

from __future__ import annotations

import enum
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable

import yaml

from .errors import MalformedDocument

log = logging.getLogger(__name__)

REMARK_FILE_SUFFIX = ".opt.yaml"

_DOC_START = re.compile(r"^---(?:[ \t]|$)")
_DOC_END = re.compile(r"^\.\.\.[ \t]*$")


class RemarkKind(enum.Enum):
    PASSED = "Passed"
    MISSED = "Missed"
    ANALYSIS = "Analysis"


# Producer sub-tags that are specialisations of the three base kinds.
_TAG_KINDS = {
    "Passed": RemarkKind.PASSED,
    "Missed": RemarkKind.MISSED,
    "Analysis": RemarkKind.ANALYSIS,
    "AnalysisFPCommute": RemarkKind.ANALYSIS,
    "AnalysisAliasing": RemarkKind.ANALYSIS,
}


@dataclass(frozen=True, order=True)
class SourceLoc:
    file: str
    line: int
    column: int = 0

    def __post_init__(self) -> None:
        if not self.file:
            raise ValueError("SourceLoc.file must be non-empty")
        if self.line < 1:
            raise ValueError(f"SourceLoc.line must be >= 1, got {self.line}")
        if self.column < 0:
            raise ValueError(f"SourceLoc.column must be >= 0, got {self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class RemarkArg:
    key: str
    value: str
    loc: SourceLoc | None = None

    def __post_init__(self) -> None:
        if not self.key:
            raise ValueError("RemarkArg.key must be non-empty")


@dataclass(frozen=True)
class Remark:
    kind: RemarkKind
    pass_name: str
    name: str
    function: str = ""
    loc: SourceLoc | None = None
    # None means "no PGO data"; 0 means "never sampled".
    hotness: int | None = None
    args: tuple[RemarkArg, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.pass_name:
            raise ValueError("Remark.pass_name must be non-empty")
        if not self.name:
            raise ValueError("Remark.name must be non-empty")
        if self.hotness is not None and self.hotness < 0:
            raise ValueError("Remark.hotness must be non-negative")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def message(self) -> str:
        return remark_message(self)


def remark_message(r: Remark) -> str:
    """Concatenate the argument values in order, with no separators."""
    return "".join(a.value for a in r.args)


# ---------------------------------------------------------------------------
# YAML plumbing


class _Tagged:
    __slots__ = ("tag", "body")

    def __init__(self, tag: str, body: Any) -> None:
        self.tag = tag
        self.body = body


_BaseLoader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)
_BaseDumper = getattr(yaml, "CSafeDumper", yaml.SafeDumper)


class _RemarkLoader(_BaseLoader):  # type: ignore[misc,valid-type]
    # Only decimal integers and nulls are implicitly typed. Everything else stays
    # text, so arg values like ``yes`` or ``1.50`` survive verbatim.
    yaml_implicit_resolvers: dict = {}


_RemarkLoader.add_implicit_resolver(
    "tag:yaml.org,2002:int", re.compile(r"^[-+]?(?:0|[1-9][0-9]*)$"), list("-+0123456789")
)
_RemarkLoader.add_implicit_resolver(
    "tag:yaml.org,2002:null", re.compile(r"^(?:~|null|Null|NULL|)$"), ["~", "n", "N", ""]
)


def _construct_tagged(loader: yaml.Loader, suffix: str, node: yaml.Node) -> _Tagged:
    if isinstance(node, yaml.MappingNode):
        body: Any = loader.construct_mapping(node, deep=True)
    elif isinstance(node, yaml.SequenceNode):
        body = loader.construct_sequence(node, deep=True)
    else:
        body = loader.construct_scalar(node)
    return _Tagged(suffix, body)


_RemarkLoader.add_multi_constructor("!", _construct_tagged)


class _RemarkDumper(_BaseDumper):  # type: ignore[misc,valid-type]
    pass


def _represent_str(dumper: yaml.Dumper, data: str) -> yaml.Node:
    # Double quotes keep control characters escaped and every scalar on one line,
    # which the document splitter relies on.
    if any(not (" " <= ch <= "~") for ch in data):
        return dumper.represent_scalar("tag:yaml.org,2002:str", data, style='"')
    return dumper.represent_scalar("tag:yaml.org,2002:str", data)


class _FlowMap(dict):
    pass


def _represent_flow_map(dumper: yaml.Dumper, data: _FlowMap) -> yaml.Node:
    return dumper.represent_mapping("tag:yaml.org,2002:map", data.items(), flow_style=True)


_RemarkDumper.add_representer(str, _represent_str)
_RemarkDumper.add_representer(_FlowMap, _represent_flow_map)


# ---------------------------------------------------------------------------
# Parsing


def _split_documents(text: str) -> list[str]:
    docs: list[list[str]] = []
    current: list[str] | None = None
    preamble: list[str] = []
    for line in text.splitlines():
        if _DOC_START.match(line):
            current = [line]
            docs.append(current)
        elif _DOC_END.match(line):
            current = None
        elif current is not None:
            current.append(line)
        elif docs:
            # Stray text after an explicit end marker belongs to no document.
            if line.strip() and not line.lstrip().startswith("#"):
                current = [line]
                docs.append(current)
        else:
            preamble.append(line)
    body = [ln for ln in preamble if ln.strip() and not ln.lstrip().startswith(("#", "%"))]
    if body:
        docs.insert(0, preamble)
    return ["\n".join(d) + "\n" for d in docs]


def _scalar_text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float, str)):
        return str(value)
    raise TypeError(f"expected a scalar, got {type(value).__name__}")


def _required_text(body: dict, key: str) -> str:
    if key not in body:
        raise ValueError(f"missing required field {key!r}")
    try:
        text = _scalar_text(body[key])
    except TypeError as exc:
        raise ValueError(f"field {key!r}: {exc}") from None
    if not text:
        raise ValueError(f"field {key!r} is empty")
    return text


def _as_int(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{what} must be an integer, got {value!r}")
    return value


def _parse_loc(raw: Any) -> SourceLoc:
    if not isinstance(raw, dict):
        raise ValueError("DebugLoc must be a mapping")
    if "File" not in raw or "Line" not in raw:
        raise ValueError("DebugLoc requires File and Line")
    file = _scalar_text(raw["File"])
    line = _as_int(raw["Line"], "DebugLoc.Line")
    column = _as_int(raw.get("Column", 0), "DebugLoc.Column")
    return SourceLoc(file, line, column)


def _parse_args(raw: Any) -> tuple[RemarkArg, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ValueError("Args must be a sequence")
    out = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ValueError(f"Args[{i}] must be a mapping")
        keys = [k for k in item if k != "DebugLoc"]
        if len(keys) != 1:
            raise ValueError(f"Args[{i}] must have exactly one key besides DebugLoc")
        key = _scalar_text(keys[0])
        try:
            value = _scalar_text(item[keys[0]])
        except TypeError as exc:
            raise ValueError(f"Args[{i}]: {exc}") from None
        loc = _parse_loc(item["DebugLoc"]) if "DebugLoc" in item else None
        out.append(RemarkArg(key, value, loc))
    return tuple(out)


def _build_remark(kind: RemarkKind, body: Any) -> Remark:
    if not isinstance(body, dict):
        raise ValueError("remark body must be a mapping")
    hotness = body.get("Hotness")
    if hotness is not None:
        hotness = _as_int(hotness, "Hotness")
        if hotness < 0:
            raise ValueError("Hotness must be non-negative")
    function = body.get("Function")
    return Remark(
        kind=kind,
        pass_name=_required_text(body, "Pass"),
        name=_required_text(body, "Name"),
        function="" if function is None else _scalar_text(function),
        loc=_parse_loc(body["DebugLoc"]) if body.get("DebugLoc") is not None else None,
        hotness=hotness,
        args=_parse_args(body.get("Args")),
    )


def _note(diagnostics: list[str] | None, message: str) -> None:
    log.warning(message)
    if diagnostics is not None:
        diagnostics.append(message)


def parse_remark_stream(
    stream: IO[str] | str,
    *,
    strict: bool = True,
    source: str = "<stream>",
    diagnostics: list[str] | None = None,
) -> list[Remark]:
    """Parse one remark stream into a list of remarks, in document order.

    In strict mode a structurally invalid document raises MalformedDocument; in
    lenient mode it is skipped and a warning is recorded in ``diagnostics``.
    Documents tagged with an unknown kind are always skipped with a warning.
    """
    text = stream if isinstance(stream, str) else stream.read()
    remarks: list[Remark] = []
    for index, doc in enumerate(_split_documents(text)):
        try:
            data = yaml.load(doc, Loader=_RemarkLoader)
            if data is None:
                continue
            if not isinstance(data, _Tagged):
                raise ValueError("document has no remark kind tag")
            kind = _TAG_KINDS.get(data.tag)
            if kind is None:
                _note(diagnostics, f"{source}: document {index}: skipping unknown remark tag !{data.tag}")
                continue
            remarks.append(_build_remark(kind, data.body))
        except (yaml.YAMLError, ValueError, TypeError) as exc:
            reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            if strict:
                raise MalformedDocument(index, reason, source) from exc
            _note(diagnostics, f"{source}: document {index}: skipped malformed document: {reason}")
    return remarks


def expand_remark_paths(paths: Iterable[str | Path]) -> list[str]:
    """Expand directories into their remark files; keep ``-`` and plain files as given."""
    out: list[str] = []
    for p in paths:
        if str(p) == "-":
            out.append("-")
            continue
        path = Path(p)
        if path.is_dir():
            out.extend(str(f) for f in sorted(path.rglob(f"*{REMARK_FILE_SUFFIX}")))
        else:
            out.append(str(path))
    return out


def load_remark_files(
    paths: Iterable[str | Path],
    *,
    strict: bool = True,
    diagnostics: list[str] | None = None,
    stdin: IO[str] | None = None,
) -> list[Remark]:
    """Parse every file (``-`` reads stdin) and concatenate in argument order."""
    remarks: list[Remark] = []
    for name in expand_remark_paths(paths):
        if name == "-":
            remarks.extend(
                parse_remark_stream(stdin or sys.stdin, strict=strict, source="<stdin>", diagnostics=diagnostics)
            )
            continue
        with open(name, encoding="utf-8") as fh:
            remarks.extend(parse_remark_stream(fh, strict=strict, source=name, diagnostics=diagnostics))
    return remarks


# ---------------------------------------------------------------------------
# Serialization


def _loc_map(loc: SourceLoc) -> _FlowMap:
    return _FlowMap(File=loc.file, Line=loc.line, Column=loc.column)


def remark_to_dict(r: Remark) -> dict[str, Any]:
    body: dict[str, Any] = {"Pass": r.pass_name, "Name": r.name}
    if r.loc is not None:
        body["DebugLoc"] = _loc_map(r.loc)
    body["Function"] = r.function
    if r.hotness is not None:
        body["Hotness"] = r.hotness
    args = []
    for a in r.args:
        item: dict[str, Any] = {a.key: a.value}
        if a.loc is not None:
            item["DebugLoc"] = _loc_map(a.loc)
        args.append(item)
    body["Args"] = args
    return body


def serialize_remarks(remarks: Iterable[Remark]) -> str:
    """Render remarks back into the multi-document text format."""
    parts = []
    for r in remarks:
        body = yaml.dump(
            remark_to_dict(r),
            Dumper=_RemarkDumper,
            sort_keys=False,
            default_flow_style=False,
            allow_unicode=True,
            width=2**31 - 1,
        )
        parts.append(f"--- !{r.kind.value}\n{body}...\n")
    return "".join(parts)

"""Parsing of captured panic output into a structured report."""

from __future__ import annotations

import enum
import logging
import os
import re
from dataclasses import dataclass
from pathlib import PurePosixPath
from typing import Optional

from .errors import MalformedBacktrace, NoProjectLocation

log = logging.getLogger(__name__)

# Since Rust 1.73 the location sits in the header and the payload follows on
# the next lines; older toolchains quote the payload inline.
_HEADER_NEW = re.compile(
    r"^thread '(?P<thread>[^']*)'(?: \(\d+\))? panicked at "
    r"(?P<file>.+?):(?P<line>\d+):(?P<col>\d+):[ \t]*$",
    re.M,
)
_HEADER_OLD = re.compile(
    r"^thread '(?P<thread>[^']*)'(?: \(\d+\))? panicked at '(?P<msg>.*)', "
    r"(?P<file>\S+?):(?P<line>\d+):(?P<col>\d+)[ \t]*$",
    re.M,
)
_FRAME = re.compile(r"^\s*(?P<idx>\d+):\s+(?:0x[0-9a-fA-F]+ - )?(?P<sym>\S.*?)\s*$")
_AT = re.compile(r"^\s+at (?P<file>.+?):(?P<line>\d+):(?P<col>\d+)\s*$")
_AT_NO_COL = re.compile(r"^\s+at \S")
_MESSAGE_END = re.compile(r"^(stack backtrace:|note: )")


class RootCauseKind(str, enum.Enum):
    UnwrapNone = "UnwrapNone"
    MixedBorrow = "MixedBorrow"
    AsyncWrongResume = "AsyncWrongResume"
    ArithmeticOverflow = "ArithmeticOverflow"
    IndexOutOfBounds = "IndexOutOfBounds"
    Utf8Boundary = "Utf8Boundary"
    DivByZero = "DivByZero"
    AssertionFailed = "AssertionFailed"
    UnreachableCode = "UnreachableCode"
    Other = "Other"


# Evaluated top to bottom, first hit wins. DivByZero precedes overflow so that
# "attempt to divide by zero" is not mistaken for "attempt to divide with
# overflow"; Utf8Boundary precedes IndexOutOfBounds because both mention byte
# indices.
CLASSIFICATION_RULES: list[tuple[RootCauseKind, re.Pattern]] = [
    (RootCauseKind.MixedBorrow, re.compile(r"already (?:mutably )?borrowed|Borrow(?:Mut)?Error")),
    (RootCauseKind.AsyncWrongResume, re.compile(
        r"(?:`async fn`|`async` block|`async gen fn`|`gen fn`|coroutine|generator)"
        r" resumed after (?:completion|panicking|async drop)"
        r"|polled after (?:completion|complete)")),
    (RootCauseKind.UnwrapNone, re.compile(
        r"called `(?:Option|Result)::(?:unwrap|expect|unwrap_err)\(\)` on (?:a `None`|an `Err`|an `Ok`) value"
        r"|on a `None` value")),
    (RootCauseKind.DivByZero, re.compile(
        r"attempt to divide by zero|attempt to calculate the remainder with a divisor of zero")),
    (RootCauseKind.ArithmeticOverflow, re.compile(
        r"attempt to (?:add|subtract|multiply|divide|negate|shift left|shift right"
        r"|calculate the remainder|calculate the absolute value)[^\n]* with overflow"
        r"|attempt to [a-z ]+ overflow|overflow when")),
    (RootCauseKind.Utf8Boundary, re.compile(r"is not a char boundary|invalid utf-8|Utf8Error")),
    (RootCauseKind.IndexOutOfBounds, re.compile(
        r"index out of bounds|range (?:start|end) index \d+ out of range"
        r"|slice index starts at|out of range for (?:slice|str)|begin <= end"
        r"|byte range starts at|byte index \d+ is out of bounds|is out of bounds of")),
    (RootCauseKind.AssertionFailed, re.compile(r"assertion failed|assertion `[^`]*` failed")),
    (RootCauseKind.UnreachableCode, re.compile(r"entered unreachable code")),
]


@dataclass(frozen=True)
class RootCause:
    kind: RootCauseKind
    matched_fragment: str

    def to_dict(self):
        return {"kind": self.kind.value, "matched_fragment": self.matched_fragment}


@dataclass(frozen=True)
class BacktraceFrame:
    index: int
    symbol: str
    file: Optional[str] = None
    line: Optional[int] = None
    column: Optional[int] = None
    in_project: bool = False

    def to_dict(self):
        return {
            "index": self.index,
            "symbol": self.symbol,
            "file": self.file,
            "line": self.line,
            "column": self.column,
            "in_project": self.in_project,
        }


@dataclass(frozen=True)
class PanicSite:
    file: str
    line: int
    column: int

    def to_dict(self):
        return {"file": self.file, "line": self.line, "column": self.column}


@dataclass
class PanicReport:
    message: str
    root_cause: RootCause
    panic_site: Optional[PanicSite]
    frames: list[BacktraceFrame]
    project_root: str
    thread: str = ""
    skipped_frames: int = 0

    def relative(self, file: Optional[str]) -> Optional[str]:
        """Project-relative posix path of ``file``, or None when outside the project."""
        return relative_to_root(file, self.project_root)

    def site_in_project(self) -> bool:
        return self.panic_site is not None and self.relative(self.panic_site.file) is not None

    def to_dict(self):
        return {
            "message": self.message,
            "root_cause": self.root_cause.to_dict(),
            "panic_site": self.panic_site.to_dict() if self.panic_site else None,
            "frames": [f.to_dict() for f in self.frames],
            "project_root": self.project_root,
        }


def relative_to_root(file: Optional[str], project_root: str) -> Optional[str]:
    if not file:
        return None
    root = os.path.normpath(os.path.abspath(project_root))
    relative = not os.path.isabs(file)
    path = os.path.normpath(os.path.join(root, file) if relative else file)
    # Toolchain frames carry relative paths of their own build trees.
    if relative and not os.path.isfile(path):
        return None
    if path != root and not path.startswith(root + os.sep):
        return None
    rel = PurePosixPath(*os.path.relpath(path, root).split(os.sep))
    if rel.parts and rel.parts[0] == "target":
        return None
    return str(rel)


def classify_root_cause(message: str) -> RootCause:
    for kind, rule in CLASSIFICATION_RULES:
        m = rule.search(message)
        if m:
            return RootCause(kind, m.group(0))
    return RootCause(RootCauseKind.Other, "")


def iter_headers(raw: str):
    """Yield (file, first message line) for every panic header in ``raw``."""
    for m in _HEADER_OLD.finditer(raw):
        yield m.group("file"), m.group("msg")
    for m in _HEADER_NEW.finditer(raw):
        yield m.group("file"), raw[m.end():].lstrip("\n").split("\n", 1)[0]


def _find_header(raw: str):
    candidates = [m for m in (_HEADER_NEW.search(raw), _HEADER_OLD.search(raw)) if m]
    if not candidates:
        return None
    return min(candidates, key=lambda m: m.start())


def parse_backtrace(raw: str, project_root) -> PanicReport:
    """Parse the stderr of a panicking run into a :class:`PanicReport`.

    The first panic header wins. Frames are read from the ``stack backtrace:``
    block that follows it; frame lines that cannot be understood are skipped
    and counted in ``skipped_frames``.
    """
    project_root = str(project_root)
    header = _find_header(raw)
    if header is None:
        raise MalformedBacktrace("no panic header line found")

    site = PanicSite(header.group("file"), int(header.group("line")), int(header.group("col")))
    rest = raw[header.end():].splitlines()
    if rest and rest[0] == "":
        rest = rest[1:]

    if "msg" in header.groupdict() and header.group("msg") is not None:
        message = header.group("msg")
        body = rest
    else:
        msg_lines = []
        body = []
        for i, line in enumerate(rest):
            if _MESSAGE_END.match(line) or line.strip() == "":
                body = rest[i:]
                break
            msg_lines.append(line)
        message = "\n".join(msg_lines)

    frames, skipped = _parse_frames(body, project_root)
    if skipped:
        log.warning("skipped %d unrecognized backtrace lines", skipped)
    return PanicReport(
        message=message,
        root_cause=classify_root_cause(message),
        panic_site=site,
        frames=frames,
        project_root=project_root,
        thread=header.group("thread"),
        skipped_frames=skipped,
    )


def _parse_frames(lines: list[str], project_root: str):
    frames: list[BacktraceFrame] = []
    skipped = 0
    started = False
    pending = None  # (index, symbol) waiting for an optional `at` line

    def flush(loc=None):
        nonlocal pending
        if pending is None:
            return
        idx, sym = pending
        pending = None
        if loc is None:
            frames.append(BacktraceFrame(idx, sym))
            return
        file, line, col = loc
        frames.append(BacktraceFrame(
            idx, sym, file, line, col, relative_to_root(file, project_root) is not None))

    for line in lines:
        if not started:
            if line.startswith("stack backtrace:"):
                started = True
            continue
        if line.strip() == "" or line.startswith("note: "):
            break
        m = _FRAME.match(line)
        if m:
            flush()
            idx = int(m.group("idx"))
            if frames and idx <= frames[-1].index:
                skipped += 1
                continue
            pending = (idx, m.group("sym"))
            continue
        m = _AT.match(line)
        if m and pending is not None:
            line_no, col = int(m.group("line")), int(m.group("col"))
            if line_no >= 1 and col >= 1:
                flush((m.group("file"), line_no, col))
            else:
                flush()
            continue
        if _AT_NO_COL.match(line) and pending is not None:
            flush()
            continue
        skipped += 1
    flush()
    return frames, skipped


def project_frames(report: PanicReport) -> list[BacktraceFrame]:
    frames = [f for f in report.frames if f.in_project]
    if frames:
        return frames
    if report.site_in_project():
        s = report.panic_site
        return [BacktraceFrame(0, "<panic site>", s.file, s.line, s.column, True)]
    raise NoProjectLocation("backtrace references no file under the project root")

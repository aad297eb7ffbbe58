"""Similarity scoring, patch prioritization and report rendering."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import MalformedDiff
from .validation import ValidationStatus

TOKEN = re.compile(r"[a-z0-9_]+")
SIMILAR_THRESHOLD = 0.75
DEFAULT_TOP_K = 5
SCHEMA_VERSION = 1
# InsertUnsafeBlock cannot prove its precondition; its similarity is scaled down.
MANUAL_REVIEW_FLAG = "requires manual safety review"
MANUAL_REVIEW_PENALTY = 0.5

# Lower is better when totals tie.
STATUS_PREFERENCE = {
    ValidationStatus.Correct: 0,
    ValidationStatus.Plausible: 1,
    ValidationStatus.Failed: 2,
    ValidationStatus.CompileError: 3,
    ValidationStatus.Timeout: 4,
    None: 5,
}
EMITTABLE = {ValidationStatus.Correct, ValidationStatus.Plausible}


def tokenize(text: str) -> list[str]:
    return TOKEN.findall(text.lower())


def tfidf_vectors(docs: list[list[str]]) -> list[dict[str, float]]:
    """Raw term counts weighted by smoothed idf: ln((1 + n) / (1 + df)) + 1."""
    n = len(docs)
    df = Counter()
    for d in docs:
        df.update(set(d))
    idf = {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}
    return [{t: c * idf[t] for t, c in Counter(d).items()} for d in docs]


def cosine(u: dict[str, float], v: dict[str, float]) -> float:
    if not u or not v:
        return 0.0
    if u == v:
        return 1.0
    dot = math.fsum(u[t] * v[t] for t in sorted(u.keys() & v.keys()))
    nu = math.sqrt(math.fsum(x * x for _, x in sorted(u.items())))
    nv = math.sqrt(math.fsum(x * x for _, x in sorted(v.items())))
    return min(1.0, max(0.0, dot / (nu * nv)))


def similarity(interpretation: str, error_message: str, corpus: Iterable[str] = ()) -> float:
    """TF-IDF cosine of the two texts.

    Document frequencies are taken over the set of distinct texts formed by the
    pair and ``corpus``; texts without tokens are left out.
    """
    a, b = tokenize(interpretation), tokenize(error_message)
    if not a or not b:
        return 0.0
    docs = [a, b]
    for text in dict.fromkeys(corpus):
        tokens = tokenize(text)
        if tokens and text not in (interpretation, error_message):
            docs.append(tokens)
    vecs = tfidf_vectors(docs)
    return cosine(vecs[0], vecs[1])


# -- diffs --------------------------------------------------------------------------

def diff_body(diff_text: str) -> str:
    """Changed lines (without their +/- marker) of a unified diff."""
    lines = diff_text.splitlines()
    if not any(l.startswith("--- ") for l in lines) or not any(l.startswith("+++ ") for l in lines):
        raise MalformedDiff("missing ---/+++ file header")
    if not any(l.startswith("@@") for l in lines):
        raise MalformedDiff("missing @@ hunk header")
    body = []
    for l in lines:
        if l.startswith(("--- ", "+++ ", "@@")):
            continue
        if l.startswith(("+", "-")):
            body.append(l[1:])
    return "\n".join(body)


def compare_diffs(generated: str, reference: str) -> tuple[float, bool]:
    g, r = tokenize(diff_body(generated)), tokenize(diff_body(reference))
    if not g or not r:
        return 0.0, False
    u, v = tfidf_vectors([g, r])
    score = cosine(u, v)
    return score, is_similar(score)


def is_similar(score: float) -> bool:
    # strictly above the threshold
    return score > SIMILAR_THRESHOLD


# -- prioritization --------------------------------------------------------------------

@dataclass
class RankedPatch:
    patch: object
    con: float
    sim: float
    total: float
    rank: int


def status_of(patch) -> Optional[ValidationStatus]:
    v = getattr(patch, "validation", None)
    if v is None:
        return None
    return getattr(v, "status", v)


def score_patches(patches: list, error_message: str) -> None:
    """Fill ``sim`` and ``total`` on every candidate in place."""
    corpus = [p.interpretation for p in patches]
    for p in patches:
        sim = similarity(p.interpretation, error_message, corpus)
        if MANUAL_REVIEW_FLAG in getattr(p, "flags", ()):
            sim *= MANUAL_REVIEW_PENALTY
        p.sim = sim
        p.total = p.con + sim


def ordering_key(patch):
    loc = getattr(patch, "location", None)
    return (
        -patch.total,
        STATUS_PREFERENCE[status_of(patch)],
        getattr(loc, "rank", 0),
        getattr(patch, "catalog_order", 0),
        getattr(patch, "variant_index", 0),
        str(getattr(patch, "id", "")),
    )


def prioritize(candidates: list, k: int = DEFAULT_TOP_K, include_failed: bool = True) -> list[RankedPatch]:
    """Order by total (con + sim), then validation preference, then location rank."""
    if k < 1:
        raise ValueError("k must be positive")
    for p in candidates:
        if p.sim is None:
            raise ValueError(f"patch {getattr(p, 'id', p)} has no similarity score")
        p.total = p.con + p.sim
    pool = candidates if include_failed else [p for p in candidates if status_of(p) in EMITTABLE]
    ordered = sorted(pool, key=ordering_key)[:k]
    return [RankedPatch(p, p.con, p.sim, p.total, i) for i, p in enumerate(ordered, start=1)]


def exit_status(ranked: list[RankedPatch]) -> int:
    statuses = {status_of(r.patch) for r in ranked}
    if ValidationStatus.Correct in statuses:
        return 0
    if ValidationStatus.Plausible in statuses:
        return 2
    return 3


def patch_record(r: RankedPatch) -> dict:
    p = r.patch
    v = getattr(p, "validation", None)
    status = status_of(p)
    return {
        "rank": r.rank,
        "total": r.total,
        "con": r.con,
        "sim": r.sim,
        "pattern_name": p.pattern_name,
        "variant_index": p.variant_index,
        "validation": status.value if status else None,
        "regression_executed": bool(v is not None and v.regression_passed is not None),
        "regression_passed": None if v is None else v.regression_passed,
        "location": p.position,
        "flags": list(p.flags),
        "interpretation": p.interpretation,
        "diff": p.diff,
        "id": p.id,
    }


def emit_report(ranked: list[RankedPatch], format: str = "json", *, root_cause=None,
                elapsed_seconds: Optional[float] = None, color: bool = False) -> str:
    if format == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "elapsed_seconds": elapsed_seconds,
            "root_cause": root_cause.to_dict() if root_cause is not None else None,
            "patches": [patch_record(r) for r in ranked],
        }
        return json.dumps(doc, indent=2)
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    return _render_text(ranked, root_cause, elapsed_seconds, color)


def _render_text(ranked, root_cause, elapsed, color) -> str:
    def paint(line, code):
        return f"\x1b[{code}m{line}\x1b[0m" if color else line

    out = []
    if root_cause is not None:
        out.append(f"root cause: {root_cause.kind.value} ({root_cause.matched_fragment!r})")
    if elapsed is not None:
        out.append(f"elapsed: {elapsed:.2f}s")
    if not ranked:
        out.append("no patches found")
        return "\n".join(out) + "\n"
    for r in ranked:
        rec = patch_record(r)
        out.append("")
        out.append(paint(f"#{rec['rank']} {rec['pattern_name']} at {rec['location']}", "1"))
        out.append(f"  score {rec['total']:.4f} (con {rec['con']:.4f} + sim {rec['sim']:.4f})")
        regression = "not executed" if not rec["regression_executed"] else (
            "passed" if rec["regression_passed"] else "changed")
        out.append(f"  validation: {rec['validation']} (regression {regression})")
        for flag in rec["flags"]:
            out.append(paint(f"  warning: {flag}", "33"))
        out.append(f"  {rec['interpretation']}")
        out.append("```diff")
        for line in rec["diff"].rstrip("\n").splitlines():
            if line.startswith("+") and not line.startswith("+++"):
                line = paint(line, "32")
            elif line.startswith("-") and not line.startswith("---"):
                line = paint(line, "31")
            out.append(line)
        out.append("```")
    return "\n".join(out) + "\n"

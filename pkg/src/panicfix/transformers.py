"""Edit procedures behind each catalog pattern.

A transformer turns one matched syntax node into slot bindings (``bind``) and
then into at most three concrete edit sets (``variants``). Edits are byte
splices on the original file; nothing is pretty-printed from the tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import UnsynthesizableBinding
from .source_model import Kind, SyntaxNode, descend

MAX_VARIANTS = 3

MANUAL_ADJUSTMENT = "may need manual adjustment"


@dataclass(frozen=True, order=True)
class Edit:
    file: str
    span: tuple[int, int]
    replacement: str

    def to_dict(self):
        return {"file": self.file, "span": list(self.span), "replacement": self.replacement}


@dataclass
class Variant:
    edits: list[Edit]
    slots: dict[str, str] = field(default_factory=dict)
    flags: tuple[str, ...] = ()


# -- syntax helpers -------------------------------------------------------------

def enclosing_statement(node: SyntaxNode) -> Optional[SyntaxNode]:
    n = node
    while n is not None and not n.is_statement:
        n = n.parent
    return n


def enclosing_function(node: SyntaxNode) -> SyntaxNode:
    """The function item whose body holds ``node``; closures have no usable return type."""
    for a in node.ancestors():
        if a.raw_type == "closure_expression":
            raise UnsynthesizableBinding("early return inside a closure")
        if a.raw_type in ("async_block", "const_block"):
            raise UnsynthesizableBinding(f"early return inside {a.raw_type}")
        if a.raw_type == "function_item":
            return a
    raise UnsynthesizableBinding("no enclosing function")


def crosses_closure(node: SyntaxNode, stop: SyntaxNode) -> bool:
    n = node.parent
    while n is not None and n is not stop:
        if n.raw_type == "closure_expression":
            return True
        n = n.parent
    return False


def line_indent(node: SyntaxNode) -> str:
    data = node.unit.data
    start = data.rfind(b"\n", 0, node.start) + 1
    m = re.match(rb"[ \t]*", data[start:node.start])
    return m.group(0).decode()


def owns_lines(node: SyntaxNode) -> bool:
    """True when nothing but whitespace shares the node's first and last lines."""
    data = node.unit.data
    start = data.rfind(b"\n", 0, node.start) + 1
    end = data.find(b"\n", node.end)
    end = len(data) if end < 0 else end
    return not data[start:node.start].strip() and not data[node.end:end].strip()


def full_line_span(node: SyntaxNode) -> tuple[int, int]:
    data = node.unit.data
    start = data.rfind(b"\n", 0, node.start) + 1
    end = data.find(b"\n", node.end)
    end = len(data) if end < 0 else end + 1
    return start, end


def receiver(call: SyntaxNode) -> Optional[SyntaxNode]:
    fn = call.child("function")
    if fn is not None and fn.raw_type == "generic_function":
        fn = fn.child("function")
    if fn is None or fn.raw_type != "field_expression":
        return None
    return fn.child("value")


def method_name_node(call: SyntaxNode) -> Optional[SyntaxNode]:
    fn = call.child("function")
    if fn is not None and fn.raw_type == "generic_function":
        fn = fn.child("function")
    if fn is None or fn.raw_type != "field_expression":
        return None
    return fn.child("field")


def call_arguments(call: SyntaxNode) -> list[SyntaxNode]:
    args = call.child("arguments")
    return [a for a in (args.children if args else []) if a.raw_type not in ("line_comment", "block_comment")]


def index_parts(node: SyntaxNode) -> tuple[SyntaxNode, SyntaxNode]:
    exprs = [c for c in node.children if c.raw_type not in ("line_comment", "block_comment")]
    if len(exprs) != 2:
        raise UnsynthesizableBinding("index expression without array and index")
    return exprs[0], exprs[1]


def range_bounds(index: SyntaxNode) -> tuple[Optional[SyntaxNode], Optional[SyntaxNode], bool]:
    """(start, end, inclusive) of a range expression; missing bounds are None."""
    text = index.text
    start = end = None
    inclusive = False
    for c in index.children:
        before = index.unit.data[index.start:c.start].decode()
        if ".." in before:
            end = c
        else:
            start = c
    inclusive = "..=" in text[: (end.start - index.start) if end else len(text)]
    return start, end, inclusive


_PRIMARY = {
    "identifier", "self", "field_expression", "call_expression", "index_expression",
    "parenthesized_expression", "integer_literal", "float_literal", "scoped_identifier",
    "macro_invocation", "try_expression", "generic_function", "array_expression",
    "tuple_expression", "string_literal", "char_literal", "boolean_literal",
}


def as_receiver(node: SyntaxNode) -> str:
    return node.text if node.raw_type in _PRIMARY else f"({node.text})"


_INT = re.compile(r"^(?:[iu](?:8|16|32|64|128|size))$")
_FLOAT = re.compile(r"^f(?:32|64)$")
_OWNED_NEW = re.compile(r"^(?:String|(?:Vec|VecDeque|HashMap|HashSet|BTreeMap|BTreeSet)(?:<.*>)?)$")


def _first_err_constructor(fn: SyntaxNode) -> Optional[str]:
    body = fn.child("body")
    if body is None:
        return None
    for n in descend(body, prune=lambda x: x.raw_type in ("closure_expression", "function_item")):
        if n.raw_type == "call_expression" and n.callee in ("Err", "Result::Err"):
            return n.text
    return None


def fallback_return(fn: SyntaxNode) -> tuple[str, bool]:
    """Early-return statement for ``fn`` and whether it needs manual adjustment."""
    rt = fn.child("return_type")
    if rt is None:
        return "return", False
    t = re.sub(r"\s+", " ", rt.text).strip()
    bare = re.sub(r"^&(?:'\w+ )?", "&", t)
    if t == "()":
        return "return", False
    if _INT.match(t):
        return "return 0", False
    if _FLOAT.match(t):
        return "return 0.0", False
    if t == "bool":
        return "return false", False
    if t == "char":
        return "return '\\0'", False
    if bare == "&str":
        return 'return ""', False
    if re.match(r"^&\[.*\]$", bare):
        return "return &[]", False
    if re.match(r"^&mut \[.*\]$", bare):
        return "return &mut []", False
    if _OWNED_NEW.match(t):
        return f"return {t.split('<', 1)[0]}::new()", False
    if re.match(r"^(?:std::option::)?Option<", t):
        return "return None", False
    if re.match(r"^(?:(?:std::|core::)?(?:io|fmt|result)::)?Result\b", t):
        err = _first_err_constructor(fn)
        if err is not None:
            return f"return {err}", False
        return "return Err(Default::default())", True
    return "return Default::default()", True


def binding_name(node: SyntaxNode) -> Optional[str]:
    """Variable the statement around ``node`` binds or assigns, if it is a plain path."""
    stmt = enclosing_statement(node)
    if stmt is None:
        return None
    if stmt.raw_type == "let_declaration":
        pat = stmt.child("pattern")
        if pat is not None and pat.raw_type in ("identifier", "mut_pattern"):
            return pat.text.replace("mut ", "").strip()
        return None
    e = stmt.children[0] if stmt.raw_type == "expression_statement" and stmt.children else stmt
    if e.raw_type == "assignment_expression":
        left = e.child("left")
        if left is not None and left.raw_type in ("identifier", "field_expression", "self"):
            return left.text
    return None


def _guarded_return(stmt: SyntaxNode, condition: str, ret: str) -> Edit:
    indent = line_indent(stmt)
    text = f"if {condition} {{\n{indent}    {ret};\n{indent}}}\n{indent}"
    return Edit(stmt.unit.file, (stmt.start, stmt.start), text)


def _idents(text: str) -> set[str]:
    return set(re.findall(r"\b[A-Za-z_][A-Za-z0-9_]*\b", text))


# -- transformers -----------------------------------------------------------------

class Transformer:
    """Base: ``bind`` yields (slots, ctx) pairs, ``variants`` yields edit sets."""

    transformer_id = ""
    provides: frozenset = frozenset()

    def bind(self, node: SyntaxNode) -> list[tuple[dict, dict]]:
        raise NotImplementedError

    def variants(self, node: SyntaxNode, ctx: dict) -> list[Variant]:
        raise NotImplementedError


class InsertMatchUnwrapper(Transformer):
    transformer_id = "insert_match_unwrapper"
    provides = frozenset({"value", "variable"})
    _WRAP_PARENTS = {"field_expression", "index_expression", "try_expression", "await_expression",
                     "type_cast_expression", "unary_expression", "binary_expression", "reference_expression"}

    def bind(self, node):
        recv = receiver(node)
        if recv is None:
            return []
        name = binding_name(node)
        variable = name or recv.text
        arm = name if name and re.fullmatch(r"[a-z_][a-z0-9_]*", name) else "value"
        return [({"value": node.text, "variable": variable}, {"receiver": recv, "arm": arm})]

    def variants(self, node, ctx):
        fn = enclosing_function(node)
        ret, manual = fallback_return(fn)
        recv, arm = ctx["receiver"], ctx["arm"]
        flags = (MANUAL_ADJUSTMENT,) if manual else ()
        wrap = node.parent is not None and node.parent.raw_type in self._WRAP_PARENTS
        out = []
        for ctor in ("Some", "Ok"):
            text = f"match {recv.text} {{ {ctor}({arm}) => {arm}, _ => {ret} }}"
            if wrap:
                text = f"({text})"
            out.append(Variant([Edit(node.unit.file, node.span, text)], {}, flags))
        return out


class MutateErrorHandler(Transformer):
    transformer_id = "mutate_error_handler"
    provides = frozenset({"original handler", "new handler"})

    def bind(self, node):
        name = method_name_node(node)
        if name is None:
            return []
        handler = node.unit.data[name.start:node.end].decode()
        return [({"original handler": handler}, {"name": name})]

    def variants(self, node, ctx):
        name = ctx["name"]
        news = ["unwrap_or_default()"]
        if node.callee == "expect":
            news.append("unwrap()")
        return [Variant([Edit(node.unit.file, (name.start, node.end), new)], {"new handler": new})
                for new in news]


_OP_METHODS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "rem"}
_EXPLANATIONS = {
    "wrapping": "the result wraps around at the boundary of the type",
    "saturating": "the result is clamped to the bounds of the type",
    "checked": "a failed operation falls back to the default value of the type",
}


class MutateBinaryOperator(Transformer):
    transformer_id = "mutate_binary_operator"
    provides = frozenset({"operator", "call name", "explanation"})

    def bind(self, node):
        op = (node.operator or "").rstrip("=") if node.kind is Kind.Assignment else node.operator
        if op not in _OP_METHODS:
            return []
        left, right = node.child("left"), node.child("right")
        if left is None or right is None:
            return []
        return [({"operator": op}, {"op": op, "left": left, "right": right})]

    def variants(self, node, ctx):
        op, left, right = ctx["op"], ctx["left"], ctx["right"]
        method = _OP_METHODS[op]
        families = ["wrapping", "saturating", "checked"]
        if op == "%":
            families.remove("saturating")
        out = []
        for fam in families:
            call = f"{fam}_{method}"
            expr = f"{as_receiver(left)}.{call}({right.text})"
            if fam == "checked":
                expr += ".unwrap_or_default()"
            if node.kind is Kind.Assignment:
                expr = f"{left.text} = {expr}"
            out.append(Variant([Edit(node.unit.file, node.span, expr)],
                               {"call name": call, "explanation": _EXPLANATIONS[fam]}))
        return out


class InsertRangeChecker(Transformer):
    transformer_id = "insert_range_checker"
    provides = frozenset({"index", "array name", "condition"})

    def bind(self, node):
        array, index = index_parts(node)
        stmt = enclosing_statement(node)
        if stmt is None or crosses_closure(node, stmt):
            return []
        return [({"index": index.text, "array name": array.text}, {"array": array, "index": index, "stmt": stmt})]

    @staticmethod
    def guards(array: SyntaxNode, index: SyntaxNode) -> list[str]:
        a = array.text
        if index.raw_type != "range_expression":
            return [f"{index.text} >= {a}.len()"]
        start, end, inclusive = range_bounds(index)
        s = start.text if start is not None else None
        e = end.text if end is not None else None
        out = []
        bounds = []
        if s is not None:
            bounds.append(f"{s} > {a}.len()")
        if e is not None:
            bounds.append(f"{e} {'>=' if inclusive else '>'} {a}.len()")
        if bounds:
            out.append(" || ".join(bounds))
        if s is not None and e is not None:
            out.append(f"{s} > {e}")
        boundary = [f"!{a}.is_char_boundary({x})" for x in (s, e) if x is not None and not inclusive]
        if boundary:
            out.append(" || ".join(boundary))
        return out[:MAX_VARIANTS]

    def variants(self, node, ctx):
        fn = enclosing_function(node)
        ret, manual = fallback_return(fn)
        flags = (MANUAL_ADJUSTMENT,) if manual else ()
        return [Variant([_guarded_return(ctx["stmt"], g, ret)], {"condition": g}, flags)
                for g in self.guards(ctx["array"], ctx["index"])]


class MutateIndexExpression(Transformer):
    transformer_id = "mutate_index_expression"
    provides = frozenset({"index", "array name"})

    def bind(self, node):
        array, index = index_parts(node)
        try:
            fn = enclosing_function(node)
        except UnsynthesizableBinding:
            return []
        seen, alts = {index.text}, []
        for n in descend(fn.child("body")):
            if n.raw_type != "index_expression" or n is node:
                continue
            try:
                a, i = index_parts(n)
            except UnsynthesizableBinding:
                continue
            if a.text == array.text and i.raw_type != "range_expression" and i.text not in seen:
                seen.add(i.text)
                alts.append(i.text)
        if not alts:
            return []
        return [({"index": index.text, "array name": array.text}, {"index": index, "alternatives": alts[:MAX_VARIANTS]})]

    def variants(self, node, ctx):
        index = ctx["index"]
        return [Variant([Edit(node.unit.file, index.span, alt)], {"new index": alt})
                for alt in ctx["alternatives"]]


class MutateCondition(Transformer):
    transformer_id = "mutate_condition"
    provides = frozenset({"condition"})

    @staticmethod
    def _guards(node: SyntaxNode) -> list[str]:
        cond, cons = node.child("condition"), node.child("consequence")
        local = set()
        if cons is not None:
            for n in descend(cons):
                if n.raw_type == "let_declaration":
                    pat = n.child("pattern")
                    if pat is not None:
                        local |= _idents(pat.text)
        guards = []
        prune = lambda x: x.raw_type in ("closure_expression", "function_item", "else_clause")
        for root in (cond, cons):
            if root is None:
                continue
            for n in descend(root, prune=prune):
                g = None
                if n.raw_type == "index_expression":
                    try:
                        a, i = index_parts(n)
                    except UnsynthesizableBinding:
                        continue
                    if i.raw_type == "range_expression":
                        _, end, inclusive = range_bounds(i)
                        if end is not None:
                            g = f"{end.text} {'<' if inclusive else '<='} {a.text}.len()"
                    else:
                        g = f"{i.text} < {a.text}.len()"
                elif n.raw_type == "binary_expression" and n.operator in ("/", "%"):
                    right = n.child("right")
                    if right is not None and right.raw_type not in ("integer_literal", "float_literal"):
                        g = f"{right.text} != 0"
                if g and g not in guards and not (_idents(g) & local):
                    guards.append(g)
        return guards[:MAX_VARIANTS]

    def bind(self, node):
        guards = self._guards(node)
        if not guards or node.child("condition") is None:
            return []
        return [({}, {"guards": guards})]

    def variants(self, node, ctx):
        cond = node.child("condition")
        ctext = cond.text
        if cond.raw_type == "binary_expression" and cond.operator == "||":
            ctext = f"({ctext})"
        return [Variant([Edit(node.unit.file, cond.span, f"{ctext} && {g}")], {"condition": g})
                for g in ctx["guards"]]


class InsertUnsafeBlock(Transformer):
    transformer_id = "insert_unsafe_block"
    provides = frozenset({"precondition", "variable"})

    def bind(self, node):
        if node.kind is Kind.IndexExpr:
            array, index = index_parts(node)
            return [({"precondition": f"{index.text} < {array.text}.len()", "variable": array.text},
                     {"text": f"(*unsafe {{ {as_receiver(array)}.get_unchecked({index.text}) }})"})]
        recv = receiver(node)
        if recv is None:
            return []
        return [({"precondition": f"{recv.text} holds a value", "variable": recv.text},
                 {"text": f"unsafe {{ {as_receiver(recv)}.unwrap_unchecked() }}"})]

    def variants(self, node, ctx):
        return [Variant([Edit(node.unit.file, node.span, ctx["text"])])]


METHOD_ALTERNATIVES = {
    "trim_end": ["trim"],
    "trim_start": ["trim"],
    "trim_end_matches": ["trim_matches"],
    "trim_start_matches": ["trim_matches"],
    "pow": ["saturating_pow", "wrapping_pow"],
    "abs": ["saturating_abs", "wrapping_abs"],
    "duration_since": ["saturating_duration_since"],
    "add": ["saturating_add", "wrapping_add"],
    "sub": ["saturating_sub", "wrapping_sub"],
    "mul": ["saturating_mul", "wrapping_mul"],
    "wrapping_add": ["saturating_add"],
    "wrapping_sub": ["saturating_sub"],
    "wrapping_mul": ["saturating_mul"],
    "first": ["last"],
    "last": ["first"],
    "min": ["max"],
    "max": ["min"],
    "floor": ["ceil"],
    "ceil": ["floor"],
    "to_lowercase": ["to_uppercase"],
    "to_uppercase": ["to_lowercase"],
    "to_ascii_lowercase": ["to_ascii_uppercase"],
    "to_ascii_uppercase": ["to_ascii_lowercase"],
}


class MutateMethodInvocation(Transformer):
    transformer_id = "mutate_method_invocation"
    provides = frozenset({"call name", "new call name"})

    def bind(self, node):
        name = method_name_node(node)
        alts = METHOD_ALTERNATIVES.get(node.callee or "", [])
        if name is None or not alts:
            return []
        return [({"call name": node.callee}, {"name": name, "alternatives": alts[:MAX_VARIANTS]})]

    def variants(self, node, ctx):
        name = ctx["name"]
        return [Variant([Edit(node.unit.file, name.span, alt)], {"new call name": alt})
                for alt in ctx["alternatives"]]


APPENDED_CALLS = ["to_ascii_lowercase", "trim"]


class InsertCallInvocation(Transformer):
    transformer_id = "insert_call_invocation"
    provides = frozenset({"call name", "variable"})

    def bind(self, node):
        if receiver(node) is None:
            return []
        parent = node.parent
        if parent is not None and parent.raw_type == "field_expression" and parent.parent is not None:
            outer = parent.parent
            if outer.raw_type == "call_expression" and outer.callee in APPENDED_CALLS:
                return []
        return [({"variable": node.text}, {})]

    def variants(self, node, ctx):
        out = []
        for call in APPENDED_CALLS:
            if call == "trim" and (node.callee or "").startswith("trim"):
                continue
            out.append(Variant([Edit(node.unit.file, (node.end, node.end), f".{call}()")], {"call name": call}))
        return out


class DeleteSecondBorrow(Transformer):
    transformer_id = "delete_second_borrow"
    provides = frozenset({"data"})

    @staticmethod
    def _holds_shared_borrow(stmt: SyntaxNode, target: str) -> Optional[str]:
        if stmt.raw_type != "let_declaration":
            return None
        value = stmt.child("value")
        if value is None:
            return None
        for n in descend(value, prune=lambda x: x.raw_type in ("closure_expression", "block")):
            if n.raw_type == "call_expression" and n.callee in ("borrow", "try_borrow"):
                r = receiver(n)
                if r is not None and r.text == target:
                    pat = stmt.child("pattern")
                    return pat.text if pat is not None else "_"
        return None

    def bind(self, node):
        recv = receiver(node)
        stmt = enclosing_statement(node)
        if recv is None or stmt is None:
            return []
        if stmt.raw_type != "expression_statement" or not stmt.text.rstrip().endswith(";"):
            return []
        target = recv.text
        inner = stmt
        for block in stmt.ancestors():
            if block.raw_type == "function_item":
                break
            if block.raw_type != "block":
                inner = block
                continue
            for sib in block.children:
                if sib.start >= inner.start:
                    break
                held = self._holds_shared_borrow(sib, target)
                if held is None or held == "_":
                    continue
                dropped = any(
                    n.raw_type == "call_expression" and n.callee == "drop"
                    and any(a.text == held for a in call_arguments(n))
                    for s in block.children if sib.end <= s.start < inner.start
                    for n in descend(s))
                if not dropped:
                    return [({"data": target}, {"stmt": stmt})]
            inner = block
        return []

    def variants(self, node, ctx):
        stmt = ctx["stmt"]
        span = full_line_span(stmt) if owns_lines(stmt) else stmt.span
        return [Variant([Edit(node.unit.file, span, "")])]


STATE_FIELD = re.compile(
    r"(?:^|_)(?:state|status|done|finished|complete|completed|ready|resumed|polled|started|stage|phase|terminated)$")
_POLL_CALL = re.compile(r"^(?:poll(?:_\w+)?|resume)$")


def is_poll_site(node: SyntaxNode) -> bool:
    if node.raw_type == "await_expression":
        return True
    return node.kind is Kind.MethodCall and bool(_POLL_CALL.match(node.callee or ""))


class ReorderStateChanger(Transformer):
    transformer_id = "reorder_state_changer"
    provides = frozenset({"state changer"})

    @staticmethod
    def _state_assignment(stmt: SyntaxNode) -> bool:
        if stmt.raw_type != "expression_statement" or not stmt.children:
            return False
        e = stmt.children[0]
        if e.raw_type not in ("assignment_expression", "compound_assignment_expr"):
            return False
        left = e.child("left")
        if left is None or left.raw_type != "field_expression":
            return False
        fld = left.child("field")
        return fld is not None and bool(STATE_FIELD.search(fld.text))

    def bind(self, node):
        stmt = enclosing_statement(node)
        if stmt is None or not owns_lines(stmt):
            return []
        block = stmt.parent
        later = [s for s in block.children if s.is_statement and s.start > stmt.end]
        for idx, t in enumerate(later):
            if self._state_assignment(t) and owns_lines(t):
                return [({"state changer": t.text}, {"stmt": stmt, "moved": t, "adjacent": idx == 0})]
        return []

    def variants(self, node, ctx):
        stmt, moved = ctx["stmt"], ctx["moved"]
        file = node.unit.file
        delete = Edit(file, full_line_span(moved), "")
        out = []
        if not ctx["adjacent"]:
            after = full_line_span(stmt)[1]
            out.append(Variant([Edit(file, (after, after), f"{line_indent(stmt)}{moved.text}\n"), delete]))
        before = full_line_span(stmt)[0]
        out.append(Variant([Edit(file, (before, before), f"{line_indent(stmt)}{moved.text}\n"), delete]))
        return out


TRANSFORMERS: dict[str, Transformer] = {
    t.transformer_id: t for t in (
        InsertMatchUnwrapper(), ReorderStateChanger(), DeleteSecondBorrow(), MutateErrorHandler(),
        MutateBinaryOperator(), InsertRangeChecker(), MutateIndexExpression(), MutateCondition(),
        InsertUnsafeBlock(), MutateMethodInvocation(), InsertCallInvocation(),
    )
}

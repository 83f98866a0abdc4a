"""A tiny C-like language used to build self-contained AST fixtures.

Grammar::

    program := 'func' NAME '(' [NAME {',' NAME}] ')' block
    block   := '{' {stmt} '}'
    stmt    := 'if' '(' expr ')' block ['else' block]
             | 'while' '(' expr ')' block
             | 'return' [expr] ';'
             | NAME '=' expr ';'
             | NAME '(' [expr {',' expr}] ')' ';'
    expr    := binary operators (|| && == != < > <= >= + - * / %) over
               NAME | INT | call | '(' expr ')'

Node ids are assigned in preorder. ``//`` starts a line comment.
"""
from __future__ import annotations

import re

from ..errors import MiniSyntaxError
from .graph import AstGraph, AstNode

NODE_TYPES = ("FunctionDef", "Params", "Param", "Block", "If", "While", "Return", "Assign",
              "Call", "BinOp", "Name", "Literal", "Cond", "Args")
KEYWORDS = {"func", "if", "else", "while", "return"}
PRECEDENCE = [("||",), ("&&",), ("==", "!="), ("<", ">", "<=", ">="), ("+", "-"), ("*", "/", "%")]

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|//[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[-+*/%<>=(){},;])
""", re.VERBOSE)


def tokenize(source: str):
    """Yield ``(kind, text, line, column)``; kind is int/name/kw/op/eof."""
    line, line_start, pos = 1, 0, 0
    out = []
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise MiniSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            text = m.group()
            if kind == "name" and text in KEYWORDS:
                kind = "kw"
            out.append((kind, text, line, col))
        pos = m.end()
    out.append(("eof", "", line, pos - line_start + 1))
    return out


class _Node:
    __slots__ = ("type", "value", "children")

    def __init__(self, type_, value=None, children=()):
        self.type = type_
        self.value = value
        self.children = list(children)


class _Parser:
    def __init__(self, source):
        self.toks = tokenize(source)
        self.i = 0

    def peek(self, offset=0):
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def fail(self, expected):
        kind, text, line, col = self.peek()
        found = "end of input" if kind == "eof" else repr(text)
        raise MiniSyntaxError(f"expected {expected}, found {found}", line, col)

    def accept(self, text):
        if self.peek()[1] == text and self.peek()[0] in ("op", "kw"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.fail(repr(text))

    def name(self):
        kind, text, _, _ = self.peek()
        if kind != "name":
            self.fail("identifier")
        self.i += 1
        return text

    def program(self):
        self.expect("func")
        fname = self.name()
        self.expect("(")
        params = []
        if not self.accept(")"):
            params.append(_Node("Param", self.name()))
            while self.accept(","):
                params.append(_Node("Param", self.name()))
            self.expect(")")
        body = self.block()
        if self.peek()[0] != "eof":
            self.fail("end of input")
        return _Node("FunctionDef", fname, [_Node("Params", None, params), body])

    def block(self):
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            if self.peek()[0] == "eof":
                self.fail("'}'")
            stmts.append(self.statement())
        return _Node("Block", None, stmts)

    def statement(self):
        if self.accept("if"):
            self.expect("(")
            cond = _Node("Cond", None, [self.expr()])
            self.expect(")")
            children = [cond, self.block()]
            if self.accept("else"):
                children.append(self.block())
            return _Node("If", None, children)
        if self.accept("while"):
            self.expect("(")
            cond = _Node("Cond", None, [self.expr()])
            self.expect(")")
            return _Node("While", None, [cond, self.block()])
        if self.accept("return"):
            if self.accept(";"):
                return _Node("Return")
            value = self.expr()
            self.expect(";")
            return _Node("Return", None, [value])
        if self.peek()[0] == "name":
            if self.peek(1)[1] == "=":
                target = _Node("Name", self.name())
                self.expect("=")
                value = self.expr()
                self.expect(";")
                return _Node("Assign", None, [target, value])
            if self.peek(1)[1] == "(":
                call = self.call()
                self.expect(";")
                return call
        self.fail("statement")

    def call(self):
        fname = self.name()
        self.expect("(")
        args = []
        if not self.accept(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
        return _Node("Call", fname, [_Node("Args", None, args)])

    def expr(self, level=0):
        if level == len(PRECEDENCE):
            return self.primary()
        left = self.expr(level + 1)
        while self.peek()[0] == "op" and self.peek()[1] in PRECEDENCE[level]:
            op = self.peek()[1]
            self.i += 1
            right = self.expr(level + 1)
            left = _Node("BinOp", op, [left, right])
        return left

    def primary(self):
        kind, text, _, _ = self.peek()
        if kind == "int":
            self.i += 1
            return _Node("Literal", text)
        if kind == "name":
            if self.peek(1)[1] == "(":
                return self.call()
            self.i += 1
            return _Node("Name", text)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        self.fail("expression")


def _flatten(root: _Node) -> AstGraph:
    nodes, edges = [], []
    stack = [(root, None)]
    while stack:
        node, parent = stack.pop()
        nid = len(nodes)
        nodes.append(AstNode(nid, node.type, node.value))
        if parent is not None:
            edges.append((parent, nid))
        for child in reversed(node.children):
            stack.append((child, nid))
    return AstGraph(nodes, edges)


def parse_mini(source: str) -> AstGraph:
    """Parse a mini-language function into a preorder-numbered AST."""
    return _flatten(_Parser(source).program())


def _rebuild(g: AstGraph):
    kids = g.children()

    def build(i):
        nd = g.nodes[i]
        return _Node(nd.type, nd.value, [build(c) for c in kids[i]])

    return build(0)


def print_mini(g: AstGraph) -> str:
    """Canonical source text for an AST produced by :func:`parse_mini`."""
    root = _rebuild(g)
    lines = []

    def expr(node, nested=False):
        if node.type in ("Name", "Literal"):
            return node.value
        if node.type == "Call":
            return f"{node.value}({', '.join(expr(a) for a in node.children[0].children)})"
        text = f"{expr(node.children[0], True)} {node.value} {expr(node.children[1], True)}"
        return f"({text})" if nested else text

    def block(node, depth):
        for stmt in node.children:
            statement(stmt, depth)

    def statement(node, depth):
        pad = "    " * depth
        t = node.type
        if t in ("If", "While"):
            head = "if" if t == "If" else "while"
            lines.append(f"{pad}{head} ({expr(node.children[0].children[0])}) {{")
            block(node.children[1], depth + 1)
            if t == "If" and len(node.children) == 3:
                lines.append(f"{pad}}} else {{")
                block(node.children[2], depth + 1)
            lines.append(f"{pad}}}")
        elif t == "Return":
            lines.append(f"{pad}return {expr(node.children[0])};" if node.children else f"{pad}return;")
        elif t == "Assign":
            lines.append(f"{pad}{node.children[0].value} = {expr(node.children[1])};")
        elif t == "Call":
            lines.append(f"{pad}{expr(node)};")
        else:
            raise ValueError(f"cannot print statement node {t}")

    params = ", ".join(p.value for p in root.children[0].children)
    lines.append(f"func {root.value}({params}) {{")
    block(root.children[1], 1)
    lines.append("}")
    return "\n".join(lines) + "\n"

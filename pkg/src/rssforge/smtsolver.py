"""A small SMT-LIB v2 console for nonlinear real arithmetic.

Run as ``python -m rssforge.smtsolver`` (or via the ``rssforge-smt``
entry point).  It understands the command subset used by this package's
solver interface — ``set-logic``, ``declare-const``/``declare-fun`` (zero
arity, Real sort), ``assert``, ``check-sat``, ``get-model``, ``reset``,
``exit`` — and decides queries with the same exact machinery as the
in-process route.  Pointing ``RSSFORGE_SMT_SOLVER`` at this module lets
the subprocess protocol be tested without any third-party solver.
"""

from __future__ import annotations

import sys
from fractions import Fraction

from .symbolic import (
    Assertion,
    FALSE,
    TRUE,
    Term,
    conj,
    disj,
    eq,
    exists,
    forall,
    ge,
    gt,
    implies,
    le,
    lt,
    ne,
    neg,
)


class SmtParseError(Exception):
    pass


def tokenize(text: str) -> list[str]:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif ch in "()":
            out.append(ch)
            i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "();":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def read_sexpr(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise SmtParseError("unexpected end of input")
    if tokens[pos] != "(":
        return tokens[pos], pos + 1
    out = []
    pos += 1
    while pos < len(tokens) and tokens[pos] != ")":
        node, pos = read_sexpr(tokens, pos)
        out.append(node)
    if pos >= len(tokens):
        raise SmtParseError("unbalanced parentheses")
    return out, pos + 1


def _number(token: str) -> Fraction | None:
    try:
        return Fraction(token)
    except ValueError:
        return None


def parse_term(node, env: dict) -> Term:
    if isinstance(node, str):
        num = _number(node)
        if num is not None:
            return Term.const(num)
        if node in env:
            return env[node]
        return Term.var(node)
    if not node:
        raise SmtParseError("empty term")
    head, args = node[0], node[1:]
    if head == "+":
        out = Term.const(0)
        for a in args:
            out = out + parse_term(a, env)
        return out
    if head == "-":
        if len(args) == 1:
            return -parse_term(args[0], env)
        out = parse_term(args[0], env)
        for a in args[1:]:
            out = out - parse_term(a, env)
        return out
    if head == "*":
        out = Term.const(1)
        for a in args:
            out = out * parse_term(a, env)
        return out
    if head == "/":
        out = parse_term(args[0], env)
        for a in args[1:]:
            d = parse_term(a, env)
            if not d.is_constant() or d.constant_value() == 0:
                raise SmtParseError("division only by nonzero constants")
            out = out.scale(Fraction(1) / d.constant_value())
        return out
    raise SmtParseError(f"unknown term head {head!r}")


_REL = {"<=": le, "<": lt, ">=": ge, ">": gt, "=": eq}


def parse_formula(node, env: dict) -> Assertion:
    if isinstance(node, str):
        if node == "true":
            return TRUE
        if node == "false":
            return FALSE
        raise SmtParseError(f"bare symbol {node!r} is not a formula")
    if not node:
        raise SmtParseError("empty formula")
    head, args = node[0], node[1:]
    if head == "and":
        return conj(*[parse_formula(a, env) for a in args])
    if head == "or":
        return disj(*[parse_formula(a, env) for a in args])
    if head == "not":
        return neg(parse_formula(args[0], env))
    if head == "=>":
        out = parse_formula(args[-1], env)
        for a in reversed(args[:-1]):
            out = implies(parse_formula(a, env), out)
        return out
    if head in _REL:
        lhs = parse_term(args[0], env)
        out = TRUE
        for a in args[1:]:
            rhs = parse_term(a, env)
            out = conj(out, _REL[head](lhs, rhs))
            lhs = rhs
        return out
    if head == "distinct":
        lhs = parse_term(args[0], env)
        rhs = parse_term(args[1], env)
        return ne(lhs, rhs)
    if head in ("exists", "forall"):
        bindings, body = args[0], args[1]
        out = parse_formula(body, env)
        wrap = exists if head == "exists" else forall
        for binding in reversed(bindings):
            name, sort = binding[0], binding[1]
            if sort != "Real":
                raise SmtParseError("only Real quantification is supported")
            out = wrap(name, out)
        return out
    if head == "let":
        raise SmtParseError("let-bindings are not supported")
    raise SmtParseError(f"unknown formula head {head!r}")


def _print_number(c: Fraction) -> str:
    if c < 0:
        return f"(- {_print_number(-c)})"
    if c.denominator == 1:
        return f"{c.numerator}.0"
    return f"(/ {c.numerator}.0 {c.denominator}.0)"


class Console:
    def __init__(self, out):
        self._out = out
        self.reset()

    def reset(self) -> None:
        self.declared: list[str] = []
        self.assertions: list[Assertion] = []
        self.model: dict | None = None
        self.timeout = 60.0

    def _say(self, text: str) -> None:
        self._out.write(text + "\n")
        self._out.flush()

    def handle(self, cmd) -> bool:
        """Process one command; returns False on (exit)."""
        from . import smt

        if not isinstance(cmd, list) or not cmd:
            raise SmtParseError(f"malformed command {cmd!r}")
        head = cmd[0]
        if head == "exit":
            return False
        if head in ("set-logic", "set-option", "set-info"):
            if head == "set-option" and len(cmd) >= 3 and cmd[1] == ":timeout":
                self.timeout = float(cmd[2]) / 1000.0
            return True
        if head == "reset":
            self.reset()
            return True
        if head in ("declare-const", "declare-fun"):
            name = cmd[1]
            sort = cmd[-1]
            if sort != "Real":
                raise SmtParseError("only Real constants are supported")
            if head == "declare-fun" and cmd[2] != []:
                raise SmtParseError("only zero-arity functions are supported")
            self.declared.append(name)
            return True
        if head == "assert":
            self.assertions.append(parse_formula(cmd[1], {}))
            self.model = None
            return True
        if head == "check-sat":
            goal = conj(*self.assertions) if self.assertions else TRUE
            verdict = smt._internal_check_sat(goal, self.timeout)
            self.model = dict(verdict.model) if verdict.model is not None else None
            self._say(verdict.kind if verdict.kind in ("sat", "unsat") else "unknown")
            return True
        if head == "get-model":
            if self.model is None:
                self._say("(error \"no model available\")")
                return True
            entries = []
            for name in self.declared:
                value = self.model.get(name, Fraction(0))
                value = value if isinstance(value, Fraction) else Fraction(value)
                entries.append(f"(define-fun {name} () Real {_print_number(value)})")
            self._say(f"(model {' '.join(entries)})")
            return True
        raise SmtParseError(f"unsupported command {head!r}")


def main(argv=None) -> int:
    console = Console(sys.stdout)
    buffer = ""
    for line in sys.stdin:
        buffer += line
        tokens = tokenize(buffer)
        # only consume complete toplevel forms; keep partial input buffered
        pos = 0
        consumed = 0
        try:
            while pos < len(tokens):
                depth_ok = True
                try:
                    cmd, nxt = read_sexpr(tokens, pos)
                except SmtParseError:
                    depth_ok = False
                if not depth_ok:
                    break
                if not console.handle(cmd):
                    return 0
                pos = nxt
                consumed = pos
        except SmtParseError as exc:
            sys.stdout.write(f'(error "{exc}")\n')
            sys.stdout.flush()
            consumed = len(tokens)
        if consumed:
            # rebuild the unconsumed tail as the new buffer
            buffer = " ".join(tokens[consumed:])
    return 0


if __name__ == "__main__":  # pragma: no cover - exercised via subprocess
    sys.exit(main())

from __future__ import annotations

from typing import Optional

from . import ast as A
from .ast import SourceSpan
from .lexer import Token, TokenKind as K, tokenize

TYPES = ("int", "float", "bool", "string")

# lowest to highest binding power
BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("|",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]
PRECEDENCE = {op: i for i, ops in enumerate(BINARY_LEVELS) for op in ops}


class ParseError(Exception):
    def __init__(self, span: Optional[SourceSpan], expected: str, found: str):
        where = f"{span.file_id}:{span.begin}" if span else "<eof>"
        super().__init__(f"{where}: expected {expected}, found {found}")
        self.span = span
        self.expected = expected
        self.found = found


class Parser:
    def __init__(self, tokens: list[Token], file_id: str = "<input>"):
        self.tokens = tokens
        self.pos = 0
        self.file_id = file_id

    # -- token helpers --

    def peek(self, offset: int = 0) -> Optional[Token]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, kind: K, text: Optional[str] = None, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.kind is kind and (text is None or tok.text == text)

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind is K.KEYWORD and tok.text in words

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: K, text: Optional[str] = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        tok = self.peek()
        expected = text or kind.value
        raise ParseError(tok.span if tok else None, repr(expected), repr(tok.text) if tok else "end of input")

    def expect_type(self, allow_void: bool = False) -> Token:
        names = TYPES + (("void",) if allow_void else ())
        if self.at_keyword(*names):
            return self.advance()
        tok = self.peek()
        raise ParseError(tok.span if tok else None, "a type", repr(tok.text) if tok else "end of input")

    # -- declarations --

    def parse_program(self) -> A.Program:
        decls = []
        while self.peek() is not None:
            decls.append(self.parse_decl())
        span = decls[0].span.cover(decls[-1].span) if decls else None
        return A.Program(decls, span=span)

    def parse_decl(self) -> A.Node:
        start = self.peek()
        if self.at_keyword("extern"):
            self.advance()
            ty = self.expect_type()
            name = self.expect(K.IDENT)
            end = self.expect(K.SEMI)
            return A.ExternDecl(ty.text, name.text, span=start.span.cover(end.span))
        if self.at_keyword("test"):
            self.advance()
            name = self.expect(K.IDENT)
            body = self.parse_block()
            return A.TestDecl(name.text, body, span=start.span.cover(body.span))
        if self.at_keyword("const"):
            return self.parse_var_decl()
        if self.at(K.IDENT, offset=1) and self.at(K.LPAREN, offset=2):
            return self.parse_function()
        return self.parse_var_decl()

    def parse_function(self) -> A.FunctionDecl:
        ret = self.expect_type(allow_void=True)
        name = self.expect(K.IDENT)
        self.expect(K.LPAREN)
        params = []
        if not self.at(K.RPAREN):
            while True:
                ty = self.expect_type()
                pname = self.expect(K.IDENT)
                params.append(A.ParamDecl(ty.text, pname.text, span=ty.span.cover(pname.span)))
                if not self.at(K.COMMA):
                    break
                self.advance()
        self.expect(K.RPAREN)
        body = self.parse_block()
        return A.FunctionDecl(ret.text, name.text, params, body, span=ret.span.cover(body.span))

    def parse_var_decl(self) -> A.VarDecl:
        start = self.peek()
        const = False
        if self.at_keyword("const"):
            self.advance()
            const = True
        ty = self.expect_type()
        name = self.expect(K.IDENT)
        self.expect(K.ASSIGN)
        init = self.parse_expr()
        end = self.expect(K.SEMI)
        return A.VarDecl(ty.text, name.text, init, const, span=start.span.cover(end.span))

    # -- statements --

    def parse_block(self) -> A.Block:
        start = self.expect(K.LBRACE)
        stmts = []
        while not self.at(K.RBRACE):
            if self.peek() is None:
                raise ParseError(None, "'}'", "end of input")
            stmts.append(self.parse_stmt())
        end = self.advance()
        return A.Block(stmts, span=start.span.cover(end.span))

    def parse_stmt(self) -> A.Stmt:
        start = self.peek()
        if self.at(K.LBRACE):
            return self.parse_block()
        if self.at_keyword("const", *TYPES):
            return self.parse_var_decl()
        if self.at_keyword("if"):
            return self.parse_if()
        if self.at_keyword("while"):
            self.advance()
            self.expect(K.LPAREN)
            cond = self.parse_expr()
            self.expect(K.RPAREN)
            body = self.parse_block()
            return A.While(cond, body, span=start.span.cover(body.span))
        if self.at_keyword("return"):
            self.advance()
            value = None if self.at(K.SEMI) else self.parse_expr()
            end = self.expect(K.SEMI)
            return A.Return(value, span=start.span.cover(end.span))
        if self.at_keyword("assert"):
            self.advance()
            self.expect(K.LPAREN)
            cond = self.parse_expr()
            self.expect(K.RPAREN)
            end = self.expect(K.SEMI)
            return A.AssertStmt(cond, span=start.span.cover(end.span))
        if self.at(K.IDENT) and self.at(K.ASSIGN, offset=1):
            name = self.advance()
            self.advance()
            value = self.parse_expr()
            end = self.expect(K.SEMI)
            return A.Assign(name.text, value, span=start.span.cover(end.span))
        expr = self.parse_expr()
        end = self.expect(K.SEMI)
        return A.ExprStmt(expr, span=start.span.cover(end.span))

    def parse_if(self) -> A.If:
        start = self.advance()
        self.expect(K.LPAREN)
        cond = self.parse_expr()
        self.expect(K.RPAREN)
        then = self.parse_block()
        other = None
        if self.at_keyword("else"):
            self.advance()
            other = self.parse_if() if self.at_keyword("if") else self.parse_block()
        end = (other or then).span
        return A.If(cond, then, other, span=start.span.cover(end))

    # -- expressions --

    def parse_expr(self) -> A.Expr:
        cond = self.parse_binary(0)
        if not self.at(K.QUESTION):
            return cond
        self.advance()
        then = self.parse_expr()
        self.expect(K.COLON)
        other = self.parse_expr()
        return A.Conditional(cond, then, other, span=cond.span.cover(other.span))

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(BINARY_LEVELS):
            return self.parse_unary()
        left = self.parse_binary(level + 1)
        ops = BINARY_LEVELS[level]
        while True:
            tok = self.peek()
            if tok is None or tok.kind.value not in ops:
                return left
            self.advance()
            right = self.parse_binary(level + 1)
            left = A.BinaryOp(tok.text, left, right, span=left.span.cover(right.span), op_span=tok.span)

    def parse_unary(self) -> A.Expr:
        if self.at(K.MINUS) or self.at(K.BANG):
            tok = self.advance()
            operand = self.parse_unary()
            return A.UnaryOp(tok.text, operand, span=tok.span.cover(operand.span))
        return self.parse_primary()

    def parse_primary(self) -> A.Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError(None, "an expression", "end of input")
        if tok.kind is K.INT_LIT:
            self.advance()
            return A.Literal(tok.value, "int", span=tok.span)
        if tok.kind is K.FLOAT_LIT:
            self.advance()
            return A.Literal(tok.value, "float", span=tok.span)
        if tok.kind is K.STRING_LIT:
            self.advance()
            return A.Literal(tok.value, "string", span=tok.span)
        if self.at_keyword("true", "false"):
            self.advance()
            return A.Literal(tok.text == "true", "bool", span=tok.span)
        if self.at_keyword("switch"):
            return self.parse_switch()
        if tok.kind is K.LPAREN:
            self.advance()
            inner = self.parse_expr()
            end = self.expect(K.RPAREN)
            inner.span = tok.span.cover(end.span)
            inner.parens += 1
            return inner
        if tok.kind is K.IDENT:
            self.advance()
            if not self.at(K.LPAREN):
                return A.VarRef(tok.text, span=tok.span)
            self.advance()
            if tok.text == "__probe":
                site = self.expect(K.INT_LIT)
                self.expect(K.COMMA)
                inner = self.parse_expr()
                end = self.expect(K.RPAREN)
                return A.Probe(site.value, inner, span=tok.span.cover(end.span))
            args = []
            if not self.at(K.RPAREN):
                while True:
                    args.append(self.parse_expr())
                    if not self.at(K.COMMA):
                        break
                    self.advance()
            end = self.expect(K.RPAREN)
            return A.Call(tok.text, args, span=tok.span.cover(end.span))
        raise ParseError(tok.span, "an expression", repr(tok.text))

    def parse_switch(self) -> A.Switch:
        start = self.advance()
        self.expect(K.LPAREN)
        scrutinee = self.parse_expr()
        self.expect(K.RPAREN)
        self.expect(K.LBRACE)
        cases = []
        while self.at_keyword("case"):
            self.advance()
            label = self.expect(K.INT_LIT)
            self.expect(K.COLON)
            cases.append((label.value, self.parse_expr()))
            self.expect(K.SEMI)
        self.expect(K.KEYWORD, "default")
        self.expect(K.COLON)
        default = self.parse_expr()
        self.expect(K.SEMI)
        end = self.expect(K.RBRACE)
        return A.Switch(scrutinee, cases, default, span=start.span.cover(end.span))


def parse(tokens: list[Token], file_id: str = "<input>") -> A.Program:
    parser = Parser(tokens, file_id)
    return parser.parse_program()


def parse_source(source: str, file_id: str = "<input>") -> A.Program:
    return parse(tokenize(source, file_id), file_id)

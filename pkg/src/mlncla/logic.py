"""First-order-logic data model and parsers for model (.mln) and evidence (.db) files.

File grammar (Alchemy-style):

* ``// comment`` to end of line, blank lines ignored.
* Predicate declaration: ``Pred(domain1, domain2)`` -- domain names lowercase.
* Domain enumeration: ``domain = {Const1, Const2, ...}``.
* Weighted formula: ``<float> <formula>``, one per line.
* Hard formula: ``<formula>.`` (trailing period, no weight).
* Formula operators, loosest to tightest: ``<=>``, ``=>``, ``v``, ``^``, ``!``.
* Constants start uppercase, variables lowercase; ``+x`` marks a plus-variable.

Evidence files hold one ground atom per line; a ``!`` prefix marks a false atom.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from .errors import MLNSyntaxError, MLNValidationError

__all__ = [
    "Variable", "Constant", "PlusVariable", "Term",
    "Atom", "Not", "And", "Or", "Implies", "Iff", "FormulaAst",
    "PredicateDecl", "DomainMap", "WeightedFormula", "MLNModel",
    "EvidenceAtom", "EvidenceDatabase",
    "parse_mln", "parse_db", "parse_formula", "extract_domains",
    "format_mln", "format_formula", "format_ast",
    "to_clauses", "Literal", "Clause", "canonical_key",
    "infer_variable_domains", "atoms_of", "predicates_of", "constants_of",
    "free_variables", "plus_variables", "substitute", "eval_ast",
]


# --- terms and formula AST -------------------------------------------------

@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Constant:
    name: str


@dataclass(frozen=True)
class PlusVariable:
    """Variable marked ``+x``: one learned weight per constant it ranges over."""
    name: str


Term = Union[Variable, Constant, PlusVariable]


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    operand: "FormulaAst"


@dataclass(frozen=True)
class And:
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True)
class Or:
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True)
class Implies:
    left: "FormulaAst"
    right: "FormulaAst"


@dataclass(frozen=True)
class Iff:
    left: "FormulaAst"
    right: "FormulaAst"


FormulaAst = Union[Atom, Not, And, Or, Implies, Iff]


# --- model-level types -----------------------------------------------------

@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arg_domains: tuple[str, ...]

    def __post_init__(self):
        if len(self.arg_domains) < 1:
            raise MLNValidationError(f"predicate {self.name}: arity must be >= 1")
        if any(not d for d in self.arg_domains):
            raise MLNValidationError(f"predicate {self.name}: empty domain name")


class DomainMap:
    """Finite map from domain name to a set of constants.

    A constant may belong to several domains (multi-membership is recorded,
    not rejected). Iteration order is always sorted for determinism.
    """

    def __init__(self, entries: Optional[dict[str, Iterable[str]]] = None):
        self._entries: dict[str, set[str]] = {}
        if entries:
            for dom, consts in entries.items():
                self._entries[dom] = set(consts)

    def add(self, domain: str, constant: str) -> None:
        self._entries.setdefault(domain, set()).add(constant)

    def add_domain(self, domain: str) -> None:
        self._entries.setdefault(domain, set())

    def constants(self, domain: str) -> tuple[str, ...]:
        return tuple(sorted(self._entries.get(domain, ())))

    def domains(self) -> tuple[str, ...]:
        return tuple(sorted(self._entries))

    def __contains__(self, domain: str) -> bool:
        return domain in self._entries

    def has_constant(self, domain: str, constant: str) -> bool:
        return constant in self._entries.get(domain, ())

    def all_constants(self) -> set[str]:
        out: set[str] = set()
        for consts in self._entries.values():
            out |= consts
        return out

    def union(self, other: "DomainMap") -> "DomainMap":
        merged = DomainMap()
        for dom in self._entries:
            merged._entries[dom] = set(self._entries[dom])
        for dom, consts in other._entries.items():
            merged._entries.setdefault(dom, set()).update(consts)
        return merged

    def replace(self, domain: str, constants: Iterable[str]) -> "DomainMap":
        out = self.copy()
        out._entries[domain] = set(constants)
        return out

    def restrict(self, domains: Iterable[str]) -> "DomainMap":
        keep = set(domains)
        out = DomainMap()
        for dom, consts in self._entries.items():
            if dom in keep:
                out._entries[dom] = set(consts)
        return out

    def copy(self) -> "DomainMap":
        return self.union(DomainMap())

    def items(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        for dom in sorted(self._entries):
            yield dom, tuple(sorted(self._entries[dom]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DomainMap):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self):
        return f"DomainMap({dict(self.items())!r})"


@dataclass(frozen=True)
class WeightedFormula:
    """A first-order formula with a weight; ``weight is None`` means hard."""
    weight: Optional[float]
    ast: FormulaAst

    @property
    def is_hard(self) -> bool:
        return self.weight is None


@dataclass
class MLNModel:
    decls: list[PredicateDecl]
    formulas: list[WeightedFormula]
    domains: DomainMap

    @property
    def decl_map(self) -> dict[str, PredicateDecl]:
        return {d.name: d for d in self.decls}


@dataclass(frozen=True)
class EvidenceAtom:
    predicate: str
    args: tuple[str, ...]
    value: bool


@dataclass
class EvidenceDatabase:
    atoms: list[EvidenceAtom]

    def dedup(self) -> "EvidenceDatabase":
        seen: set[EvidenceAtom] = set()
        out = []
        for a in self.atoms:
            if a not in seen:
                seen.add(a)
                out.append(a)
        return EvidenceDatabase(out)

    def __len__(self) -> int:
        return len(self.atoms)


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<NUMBER>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<IFF><=>)
  | (?P<IMPLIES>=>)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<LPAREN>\()
  | (?P<RPAREN>\))
  | (?P<LBRACE>\{)
  | (?P<RBRACE>\})
  | (?P<COMMA>,)
  | (?P<BANG>!)
  | (?P<CARET>\^)
  | (?P<PLUS>\+)
  | (?P<PERIOD>\.)
  | (?P<EQUALS>=)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    line: int
    column: int


def _tokenize_line(text: str, line_no: int) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise MLNSyntaxError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        kind = m.lastgroup
        if kind != "WS":
            value = m.group()
            # a lone lowercase 'v' is the disjunction operator, not a variable
            if kind == "IDENT" and value == "v":
                kind = "VEE"
            tokens.append(_Token(kind, value, line_no, m.start() + 1))
        pos = m.end()
    return tokens


class _TokenStream:
    def __init__(self, tokens: list[_Token], line_no: int, line_len: int):
        self._tokens = tokens
        self._pos = 0
        self._line = line_no
        self._end_col = line_len + 1

    def peek(self) -> Optional[_Token]:
        return self._tokens[self._pos] if self._pos < len(self._tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise MLNSyntaxError("unexpected end of line", self._line, self._end_col)
        self._pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            found = "end of line" if tok is None else repr(tok.value)
            line = self._line if tok is None else tok.line
            col = self._end_col if tok is None else tok.column
            raise MLNSyntaxError(f"expected {kind}, found {found}", line, col)
        return self.next()

    def at_end(self) -> bool:
        return self.peek() is None


# --- formula parser --------------------------------------------------------

def _parse_term(ts: _TokenStream) -> Term:
    tok = ts.peek()
    if tok is not None and tok.kind == "PLUS":
        ts.next()
        name = ts.expect("IDENT")
        if name.value[0].isupper():
            raise MLNSyntaxError("'+' must precede a variable, not a constant",
                                 name.line, name.column)
        return PlusVariable(name.value)
    tok = ts.expect("IDENT")
    if tok.value[0].isupper():
        return Constant(tok.value)
    return Variable(tok.value)


def _parse_atom(ts: _TokenStream) -> Atom:
    name = ts.expect("IDENT")
    if not name.value[0].isupper():
        raise MLNSyntaxError(f"predicate name must start uppercase: {name.value!r}",
                             name.line, name.column)
    ts.expect("LPAREN")
    args = [_parse_term(ts)]
    while ts.peek() is not None and ts.peek().kind == "COMMA":
        ts.next()
        args.append(_parse_term(ts))
    ts.expect("RPAREN")
    return Atom(name.value, tuple(args))


def _parse_unary(ts: _TokenStream) -> FormulaAst:
    tok = ts.peek()
    if tok is None:
        raise MLNSyntaxError("expected formula", ts._line, ts._end_col)
    if tok.kind == "BANG":
        ts.next()
        return Not(_parse_unary(ts))
    if tok.kind == "LPAREN":
        ts.next()
        inner = _parse_iff(ts)
        ts.expect("RPAREN")
        return inner
    return _parse_atom(ts)


def _parse_and(ts: _TokenStream) -> FormulaAst:
    node = _parse_unary(ts)
    while ts.peek() is not None and ts.peek().kind == "CARET":
        ts.next()
        node = And(node, _parse_unary(ts))
    return node


def _parse_or(ts: _TokenStream) -> FormulaAst:
    node = _parse_and(ts)
    while ts.peek() is not None and ts.peek().kind == "VEE":
        ts.next()
        node = Or(node, _parse_and(ts))
    return node


def _parse_implies(ts: _TokenStream) -> FormulaAst:
    node = _parse_or(ts)
    if ts.peek() is not None and ts.peek().kind == "IMPLIES":
        ts.next()
        return Implies(node, _parse_implies(ts))  # right-associative
    return node


def _parse_iff(ts: _TokenStream) -> FormulaAst:
    node = _parse_implies(ts)
    if ts.peek() is not None and ts.peek().kind == "IFF":
        ts.next()
        return Iff(node, _parse_iff(ts))
    return node


def parse_formula(text: str, line_no: int = 1) -> FormulaAst:
    """Parse a bare formula (no weight) from a single line of text."""
    ts = _TokenStream(_tokenize_line(text, line_no), line_no, len(text))
    ast = _parse_iff(ts)
    if not ts.at_end():
        tok = ts.peek()
        raise MLNSyntaxError(f"trailing input {tok.value!r}", tok.line, tok.column)
    return ast


# --- AST utilities ---------------------------------------------------------

def atoms_of(ast: FormulaAst) -> list[Atom]:
    if isinstance(ast, Atom):
        return [ast]
    if isinstance(ast, Not):
        return atoms_of(ast.operand)
    return atoms_of(ast.left) + atoms_of(ast.right)


def predicates_of(ast: FormulaAst) -> set[str]:
    return {a.predicate for a in atoms_of(ast)}


def constants_of(ast: FormulaAst) -> set[str]:
    return {t.name for a in atoms_of(ast) for t in a.args if isinstance(t, Constant)}


def free_variables(ast: FormulaAst) -> list[str]:
    """Ordinary (non-plus) variable names in first-occurrence order."""
    seen: list[str] = []
    for a in atoms_of(ast):
        for t in a.args:
            if isinstance(t, Variable) and t.name not in seen:
                seen.append(t.name)
    return seen


def plus_variables(ast: FormulaAst) -> list[str]:
    seen: list[str] = []
    for a in atoms_of(ast):
        for t in a.args:
            if isinstance(t, PlusVariable) and t.name not in seen:
                seen.append(t.name)
    return seen


def infer_variable_domains(ast: FormulaAst, decl_map: dict[str, PredicateDecl]) -> dict[str, str]:
    """Assign each variable (plus or plain) its domain from the predicate
    argument positions it occupies. Conflicting assignments are errors."""
    var_domains: dict[str, str] = {}
    for atom in atoms_of(ast):
        decl = decl_map.get(atom.predicate)
        if decl is None:
            raise MLNValidationError(f"undeclared predicate {atom.predicate!r}")
        if len(atom.args) != len(decl.arg_domains):
            raise MLNValidationError(
                f"arity mismatch: {atom.predicate!r} declared with "
                f"{len(decl.arg_domains)} argument(s), used with {len(atom.args)}"
            )
        for term, dom in zip(atom.args, decl.arg_domains):
            if isinstance(term, (Variable, PlusVariable)):
                prev = var_domains.get(term.name)
                if prev is not None and prev != dom:
                    raise MLNValidationError(
                        f"variable {term.name!r} used in domains {prev!r} and {dom!r}"
                    )
                var_domains[term.name] = dom
    return var_domains


def substitute(ast: FormulaAst, binding: dict[str, str]) -> FormulaAst:
    """Replace variables/plus-variables named in ``binding`` by constants."""
    if isinstance(ast, Atom):
        new_args = []
        for t in ast.args:
            if isinstance(t, (Variable, PlusVariable)) and t.name in binding:
                new_args.append(Constant(binding[t.name]))
            else:
                new_args.append(t)
        return Atom(ast.predicate, tuple(new_args))
    if isinstance(ast, Not):
        return Not(substitute(ast.operand, binding))
    cls = type(ast)
    return cls(substitute(ast.left, binding), substitute(ast.right, binding))


def eval_ast(ast: FormulaAst, truth: dict[Atom, bool]) -> bool:
    """Evaluate a ground formula against an atom truth assignment."""
    if isinstance(ast, Atom):
        return truth[ast]
    if isinstance(ast, Not):
        return not eval_ast(ast.operand, truth)
    if isinstance(ast, And):
        return eval_ast(ast.left, truth) and eval_ast(ast.right, truth)
    if isinstance(ast, Or):
        return eval_ast(ast.left, truth) or eval_ast(ast.right, truth)
    if isinstance(ast, Implies):
        return (not eval_ast(ast.left, truth)) or eval_ast(ast.right, truth)
    if isinstance(ast, Iff):
        return eval_ast(ast.left, truth) == eval_ast(ast.right, truth)
    raise TypeError(f"not a formula node: {ast!r}")


# --- CNF -------------------------------------------------------------------

Literal = tuple[Atom, bool]  # (atom, positive?)
Clause = frozenset  # frozenset[Literal]


def _elim_arrows(ast: FormulaAst) -> FormulaAst:
    if isinstance(ast, Atom):
        return ast
    if isinstance(ast, Not):
        return Not(_elim_arrows(ast.operand))
    if isinstance(ast, Implies):
        return Or(Not(_elim_arrows(ast.left)), _elim_arrows(ast.right))
    if isinstance(ast, Iff):
        left, right = _elim_arrows(ast.left), _elim_arrows(ast.right)
        return And(Or(Not(left), right), Or(Not(right), left))
    cls = type(ast)
    return cls(_elim_arrows(ast.left), _elim_arrows(ast.right))


def _to_nnf(ast: FormulaAst, negate: bool = False) -> FormulaAst:
    if isinstance(ast, Atom):
        return Not(ast) if negate else ast
    if isinstance(ast, Not):
        return _to_nnf(ast.operand, not negate)
    if isinstance(ast, And):
        cls = Or if negate else And
        return cls(_to_nnf(ast.left, negate), _to_nnf(ast.right, negate))
    if isinstance(ast, Or):
        cls = And if negate else Or
        return cls(_to_nnf(ast.left, negate), _to_nnf(ast.right, negate))
    raise TypeError("arrows must be eliminated before NNF")


def _distribute(ast: FormulaAst) -> list[Clause]:
    if isinstance(ast, Atom):
        return [frozenset([(ast, True)])]
    if isinstance(ast, Not):
        return [frozenset([(ast.operand, False)])]
    if isinstance(ast, And):
        return _distribute(ast.left) + _distribute(ast.right)
    if isinstance(ast, Or):
        return [lc | rc for lc in _distribute(ast.left) for rc in _distribute(ast.right)]
    raise TypeError(f"unexpected node in NNF: {ast!r}")


def _literal_sort_key(lit: Literal):
    atom, positive = lit
    args = tuple(
        (0, t.name) if isinstance(t, Constant)
        else (1, t.name) if isinstance(t, Variable)
        else (2, t.name)
        for t in atom.args
    )
    return (atom.predicate, args, not positive)


def to_clauses(ast: FormulaAst) -> list[Clause]:
    """CNF of a (possibly non-ground) formula.

    Tautological clauses (containing a literal and its negation) are dropped,
    duplicate clauses removed, output deterministically ordered.
    """
    clauses = _distribute(_to_nnf(_elim_arrows(ast)))
    out: list[Clause] = []
    seen: set[Clause] = set()
    for clause in clauses:
        atoms = {}
        tautology = False
        for atom, positive in clause:
            if atoms.get(atom, positive) != positive:
                tautology = True
                break
            atoms[atom] = positive
        if tautology or clause in seen:
            continue
        seen.add(clause)
        out.append(clause)
    out.sort(key=lambda c: sorted(_literal_sort_key(l) for l in c))
    return out


def canonical_key(ast: FormulaAst) -> str:
    """Canonical text for formula equality: sorted-clause CNF with variables
    renamed in order of first occurrence. Constants (and therefore bound
    plus-variable instantiations) are part of the identity."""
    clauses = to_clauses(ast)
    ordered = [sorted(c, key=_literal_sort_key) for c in clauses]
    ordered.sort(key=lambda lits: [_literal_sort_key(l) for l in lits])
    rename: dict[str, str] = {}

    def term_text(t: Term) -> str:
        if isinstance(t, Constant):
            return t.name
        prefix = "+" if isinstance(t, PlusVariable) else ""
        if t.name not in rename:
            rename[t.name] = f"v{len(rename)}"
        return prefix + rename[t.name]

    parts = []
    for lits in ordered:
        rendered = []
        for atom, positive in lits:
            args = ",".join(term_text(t) for t in atom.args)
            rendered.append(("" if positive else "!") + f"{atom.predicate}({args})")
        parts.append(" v ".join(rendered))
    return " ; ".join(parts)


# --- validation helpers ----------------------------------------------------

def _validate_formula(ast: FormulaAst, decl_map: dict[str, PredicateDecl],
                      domains: DomainMap, register_constants: bool) -> None:
    infer_variable_domains(ast, decl_map)  # raises on type conflicts
    for atom in atoms_of(ast):
        decl = decl_map[atom.predicate]
        for term, dom in zip(atom.args, decl.arg_domains):
            if isinstance(term, Constant):
                if register_constants:
                    domains.add(dom, term.name)
                elif not domains.has_constant(dom, term.name):
                    raise MLNValidationError(
                        f"constant {term.name!r} not in domain {dom!r}"
                    )


def _strip_comment(line: str) -> str:
    idx = line.find("//")
    return line if idx < 0 else line[:idx]


# --- model file parser -----------------------------------------------------

def parse_mln(text: str) -> MLNModel:
    """Parse an Alchemy-style model file into an :class:`MLNModel`.

    Constants appearing in formulas are registered into the domain of the
    argument position they occupy, so the returned model always satisfies
    the "every constant belongs to its declared domain" invariant.
    """
    decls: list[PredicateDecl] = []
    decl_map: dict[str, PredicateDecl] = {}
    domains = DomainMap()
    pending: list[tuple[Optional[float], FormulaAst]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        tokens = _tokenize_line(line, line_no)
        ts = _TokenStream(tokens, line_no, len(line))
        first = tokens[0]

        if first.kind == "NUMBER":
            ts.next()
            ast = _parse_iff(ts)
            if not ts.at_end():
                tok = ts.peek()
                raise MLNSyntaxError(f"trailing input {tok.value!r}", tok.line, tok.column)
            pending.append((float(first.value), ast))
        elif (len(tokens) >= 3 and first.kind == "IDENT"
              and tokens[1].kind == "EQUALS" and tokens[2].kind == "LBRACE"):
            # domain enumeration: name = {Const, ...}
            dom = ts.expect("IDENT").value
            ts.expect("EQUALS")
            ts.expect("LBRACE")
            domains.add_domain(dom)
            while ts.peek() is not None and ts.peek().kind != "RBRACE":
                const = ts.expect("IDENT")
                if not const.value[0].isupper():
                    raise MLNSyntaxError("constants must start uppercase",
                                         const.line, const.column)
                domains.add(dom, const.value)
                if ts.peek() is not None and ts.peek().kind == "COMMA":
                    ts.next()
            ts.expect("RBRACE")
            if not ts.at_end():
                tok = ts.peek()
                raise MLNSyntaxError(f"trailing input {tok.value!r}", tok.line, tok.column)
        elif tokens[-1].kind == "PERIOD":
            # hard formula
            ts_hard = _TokenStream(tokens[:-1], line_no, len(line))
            ast = _parse_iff(ts_hard)
            if not ts_hard.at_end():
                tok = ts_hard.peek()
                raise MLNSyntaxError(f"trailing input {tok.value!r}", tok.line, tok.column)
            pending.append((None, ast))
        else:
            # predicate declaration: Pred(dom1, dom2)
            name = ts.expect("IDENT")
            if not name.value[0].isupper():
                raise MLNSyntaxError(
                    f"expected declaration or weighted formula, found {name.value!r}",
                    name.line, name.column)
            ts.expect("LPAREN")
            arg_domains = []
            while True:
                dom = ts.expect("IDENT")
                if dom.value[0].isupper():
                    raise MLNSyntaxError(
                        "domain names in declarations must start lowercase "
                        "(is this formula missing its weight?)",
                        dom.line, dom.column)
                arg_domains.append(dom.value)
                nxt = ts.next()
                if nxt.kind == "RPAREN":
                    break
                if nxt.kind != "COMMA":
                    raise MLNSyntaxError(f"expected ',' or ')', found {nxt.value!r}",
                                         nxt.line, nxt.column)
            if not ts.at_end():
                tok = ts.peek()
                raise MLNSyntaxError(f"trailing input {tok.value!r}", tok.line, tok.column)
            if name.value in decl_map:
                raise MLNValidationError(f"duplicate declaration of {name.value!r}")
            decl = PredicateDecl(name.value, tuple(arg_domains))
            decls.append(decl)
            decl_map[name.value] = decl
            for dom in arg_domains:
                domains.add_domain(dom)

    formulas = []
    for weight, ast in pending:
        _validate_formula(ast, decl_map, domains, register_constants=True)
        formulas.append(WeightedFormula(weight, ast))
    return MLNModel(decls, formulas, domains)


# --- evidence file parser --------------------------------------------------

def parse_db(text: str, decls: list[PredicateDecl]) -> EvidenceDatabase:
    """Parse an evidence database against the given declarations.

    Duplicates are kept; use :meth:`EvidenceDatabase.dedup` before counting.
    """
    if not decls:
        raise MLNValidationError("parse_db requires at least one declaration")
    decl_map = {d.name: d for d in decls}
    atoms: list[EvidenceAtom] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        tokens = _tokenize_line(line, line_no)
        ts = _TokenStream(tokens, line_no, len(line))
        value = True
        if ts.peek() is not None and ts.peek().kind == "BANG":
            ts.next()
            value = False
        atom = _parse_atom(ts)
        if not ts.at_end():
            tok = ts.peek()
            raise MLNSyntaxError(f"trailing input {tok.value!r}", tok.line, tok.column)
        decl = decl_map.get(atom.predicate)
        if decl is None:
            raise MLNValidationError(
                f"line {line_no}: unknown predicate {atom.predicate!r}")
        if len(atom.args) != len(decl.arg_domains):
            raise MLNValidationError(
                f"line {line_no}: {atom.predicate!r} declared with "
                f"{len(decl.arg_domains)} argument(s), used with {len(atom.args)}")
        args = []
        for term in atom.args:
            if not isinstance(term, Constant):
                raise MLNValidationError(
                    f"line {line_no}: evidence atoms must be ground, "
                    f"found variable {term.name!r}")
            args.append(term.name)
        atoms.append(EvidenceAtom(atom.predicate, tuple(args), value))
    return EvidenceDatabase(atoms)


def extract_domains(db: EvidenceDatabase, decls: list[PredicateDecl]) -> DomainMap:
    """Assign each evidence constant to the domain of the argument position
    it occupies; union over all atoms."""
    decl_map = {d.name: d for d in decls}
    domains = DomainMap()
    for atom in db.atoms:
        decl = decl_map.get(atom.predicate)
        if decl is None:
            raise MLNValidationError(f"unknown predicate {atom.predicate!r}")
        for const, dom in zip(atom.args, decl.arg_domains):
            domains.add(dom, const)
    return domains


# --- formatting ------------------------------------------------------------

_PRECEDENCE = {Iff: 0, Implies: 1, Or: 2, And: 3, Not: 4, Atom: 5}


def _format_term(t: Term) -> str:
    if isinstance(t, PlusVariable):
        return "+" + t.name
    return t.name


def format_ast(ast: FormulaAst, parent_prec: int = -1, right_side: bool = False) -> str:
    if isinstance(ast, Atom):
        return f"{ast.predicate}({','.join(_format_term(t) for t in ast.args)})"
    if isinstance(ast, Not):
        return "!" + format_ast(ast.operand, _PRECEDENCE[Not])
    ops = {And: " ^ ", Or: " v ", Implies: " => ", Iff: " <=> "}
    prec = _PRECEDENCE[type(ast)]
    # ^ and v parse left-associative; => and <=> right-associative
    if isinstance(ast, (And, Or)):
        text = (format_ast(ast.left, prec - 1) + ops[type(ast)]
                + format_ast(ast.right, prec))
    else:
        text = (format_ast(ast.left, prec) + ops[type(ast)]
                + format_ast(ast.right, prec - 1))
    if prec <= parent_prec:
        return "(" + text + ")"
    return text


def format_formula(wf: WeightedFormula) -> str:
    if wf.is_hard:
        return format_ast(wf.ast) + "."
    return f"{wf.weight!r} {format_ast(wf.ast)}"


def format_mln(model: MLNModel) -> str:
    """Render a model back to file text; the result reparses to a
    structurally identical model."""
    lines = [f"{d.name}({', '.join(d.arg_domains)})" for d in model.decls]
    for dom, consts in model.domains.items():
        if consts:
            lines.append(f"{dom} = {{{', '.join(consts)}}}")
    lines.extend(format_formula(wf) for wf in model.formulas)
    return "\n".join(lines) + ("\n" if lines else "")


def format_db(db: EvidenceDatabase) -> str:
    lines = []
    for a in db.atoms:
        prefix = "" if a.value else "!"
        lines.append(f"{prefix}{a.predicate}({','.join(a.args)})")
    return "\n".join(lines) + ("\n" if lines else "")

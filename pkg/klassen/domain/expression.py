from dataclasses import dataclass, field, fields

from klassen.domain.source_span import SourceSpan

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", "<=", "=", ">", ">=")


class Node:
    """ Gemeinsame Basis aller AST-Knoten """

    def children(self):
        """ Liefert die direkten Kindknoten in Quelltextreihenfolge """
        for f in fields(self):
            wert = getattr(self, f.name)
            if isinstance(wert, Node):
                yield wert
            elif isinstance(wert, tuple):
                for element in wert:
                    if isinstance(element, Node):
                        yield element
                    elif isinstance(element, tuple):
                        # Zuweisungen (feld, ausdruck) bei INSERT
                        yield from (e for e in element if isinstance(e, Node))

    def walk(self):
        """ Tiefensuche über den Teilbaum, Knoten selbst zuerst """
        yield self
        for kind in self.children():
            yield from kind.walk()


class Expr(Node):
    """ Arithmetischer Ausdruck """


class BoolExpr(Node):
    """ Boolescher Ausdruck """


@dataclass(frozen=True)
class IntConst(Expr):
    value: int
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Arg(Expr):
    """ Parameter der Transaktion """
    name: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Any(Expr):
    """ any{φ}: beliebiger Wert, der φ erfüllt (Platzhalter _ im Constraint) """
    constraint: BoolExpr
    # abs_k nach Vorkommensreihenfolge, wird vom Parser vergeben
    name: str = field(default="", compare=False)
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AnyValue(Expr):
    """ Der von any{} gewählte Wert (_) """
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Iter(Expr):
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Size(Expr):
    var: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Proj(Expr):
    """ proj(f, v, e): Feld f des e-ten Datensatzes (1-basiert) im Ergebnis v """
    field: str
    var: str
    index: Expr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ThisField(Expr):
    field: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cmp(BoolExpr):
    left: Expr
    op: str
    right: Expr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Not(BoolExpr):
    operand: BoolExpr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class And(BoolExpr):
    left: BoolExpr
    right: BoolExpr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or(BoolExpr):
    left: BoolExpr
    right: BoolExpr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoolConst(BoolExpr):
    value: bool
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def conjunction(guards: list) -> BoolExpr:
    """ Linksassoziative Konjunktion, TRUE für die leere Liste """
    if not guards:
        return TRUE
    ergebnis = guards[0]
    for guard in guards[1:]:
        ergebnis = And(ergebnis, guard)
    return ergebnis

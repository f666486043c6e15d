from dataclasses import dataclass, field

from klassen.domain.expression import BoolExpr, Expr, Node
from klassen.domain.source_span import SourceSpan


class Query(Node):
    """ Datenbankanfrage auf genau einer Tabelle """
    table: str

    @property
    def kind(self) -> str:
        return type(self).__name__.lower()


@dataclass(frozen=True)
class Select(Query):
    table: str
    field: str
    as_var: str
    where: BoolExpr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SelectAgg(Query):
    """ SELECT min/max(f): wird geparst, aber nicht kodiert """
    table: str
    agg: str
    field: str
    as_var: str
    where: BoolExpr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Update(Query):
    table: str
    field: str
    value: Expr
    where: BoolExpr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Insert(Query):
    table: str
    # Paare (feld, ausdruck) in Quelltextreihenfolge
    assignments: tuple[tuple[str, Expr], ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def value_of(self, feld: str) -> Expr | None:
        for name, ausdruck in self.assignments:
            if name == feld:
                return ausdruck
        return None


@dataclass(frozen=True)
class Delete(Query):
    table: str
    where: BoolExpr
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

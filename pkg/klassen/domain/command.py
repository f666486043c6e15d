from dataclasses import dataclass, field

from klassen.domain.expression import BoolExpr, Expr, Node
from klassen.domain.query import Query
from klassen.domain.source_span import SourceSpan


class Command(Node):
    """ Anweisung im Rumpf einer Transaktion """


@dataclass(frozen=True)
class QueryCmd(Command):
    query: Query
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If(Command):
    cond: BoolExpr
    body: Command
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Iterate(Command):
    count: Expr
    body: Command
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Skip(Command):
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


def sequence(commands: list) -> Command:
    """ Faltet eine Anweisungsliste rechtsgeschachtelt zu Seq, leere Liste ergibt Skip """
    if not commands:
        return Skip()
    ergebnis = commands[-1]
    for cmd in reversed(commands[:-1]):
        ergebnis = Seq(cmd, ergebnis)
    return ergebnis


def flatten(cmd: Command) -> list:
    """ Umkehrung von sequence() für die Ausgabe """
    if isinstance(cmd, Seq):
        return [cmd.first] + flatten(cmd.second)
    return [cmd]


def count_queries(cmd: Command) -> int:
    """ Anzahl der Anfrage-Stellen im Teilbaum (Schleifenrümpfe einmal gezählt) """
    if isinstance(cmd, QueryCmd):
        return 1
    if isinstance(cmd, (If, Iterate)):
        return count_queries(cmd.body)
    if isinstance(cmd, Seq):
        return count_queries(cmd.first) + count_queries(cmd.second)
    return 0

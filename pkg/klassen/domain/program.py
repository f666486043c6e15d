from dataclasses import dataclass, field

from klassen.domain.command import Command
from klassen.domain.source_span import SourceSpan


@dataclass(frozen=True)
class Transaction:
    name: str
    params: tuple[str, ...]
    body: Command
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    transactions: tuple[Transaction, ...] = field(default_factory=tuple)

    def transaction(self, name: str) -> Transaction | None:
        for txn in self.transactions:
            if txn.name == name:
                return txn
        return None

    def names(self) -> list[str]:
        return [txn.name for txn in self.transactions]

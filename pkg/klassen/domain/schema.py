from dataclasses import dataclass, field

# reserviertes Feld, das jede Tabelle implizit besitzt
ALIVE = "alive"


@dataclass(frozen=True)
class TableDef:
    """ Tabelle mit geordneten Feldern und Primärschlüssel """
    name: str
    fields: tuple[str, ...]
    primary_key: tuple[str, ...]

    @property
    def all_fields(self) -> tuple[str, ...]:
        """ Felder inklusive des impliziten alive-Feldes """
        return self.fields + (ALIVE,)

    def is_key(self, feld: str) -> bool:
        return feld in self.primary_key

    def has_field(self, feld: str) -> bool:
        return feld in self.fields or feld == ALIVE

    def key_index(self, feld: str) -> int:
        return self.primary_key.index(feld)


@dataclass(frozen=True)
class Schema:
    """ Menge von Tabellen, über denen ein Programm arbeitet """
    tables: tuple[TableDef, ...] = field(default_factory=tuple)

    def table(self, name: str) -> TableDef | None:
        for tabelle in self.tables:
            if tabelle.name == name:
                return tabelle
        return None

    def table_names(self) -> list[str]:
        return [tabelle.name for tabelle in self.tables]

    def tables_with_field(self, feld: str) -> list[TableDef]:
        return [tabelle for tabelle in self.tables if feld in tabelle.fields]

from dataclasses import dataclass, field

READ = "rd"
WRITE = "wr"


@dataclass(frozen=True, order=True)
class EffectId:
    """ (Schrittindex, Ordinalzahl im Schritt), Schritt 0 ist die Initialisierung """
    step: int
    ordinal: int

    def __str__(self):
        return f"{self.step}.{self.ordinal}"


@dataclass(frozen=True, order=True)
class QueryInstanceId:
    """ Ausgeführte Anfrage: Instanz, dynamische Ordinalzahl (O_j), Typ und Stelle """
    instance: str
    ordinal: int
    txn: str = field(compare=False)
    uid: str = field(compare=False)
    site: int = field(compare=False)

    def __str__(self):
        return f"{self.instance}-O{self.ordinal}"


@dataclass(frozen=True)
class Effect:
    id: EffectId
    kind: str  # rd oder wr
    table: str
    record_key: tuple
    field: str
    value: int | None
    partition: str
    used: bool = True  # False => rd⁺
    query: QueryInstanceId | None = None  # None für Effekte der Initialisierung
    source: EffectId | None = None  # gelesene Version (nur bei Lesezugriffen)

    @property
    def txn_instance(self) -> str | None:
        return self.query.instance if self.query is not None else None

    @property
    def item(self) -> tuple:
        """ (Tabelle, Schlüssel, Feld), die Einheit der Abhängigkeiten """
        return (self.table, self.record_key, self.field)

    @property
    def is_read(self) -> bool:
        return self.kind == READ

    @property
    def is_write(self) -> bool:
        return self.kind == WRITE

    def label(self) -> str:
        art = self.kind if self.is_write or self.used else "rd+"
        schluessel = ",".join(str(k) for k in self.record_key)
        return f"{art}({self.table}:{schluessel},{self.field},{self.value})"

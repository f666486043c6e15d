from dataclasses import dataclass, field

from klassen.domain.guarantee import EC, GuaranteeSpec


@dataclass(frozen=True)
class InitConstraint:
    """ Benutzerbedingung über den Anfangszustand: Tabelle leer oder Prädikat über this.f """
    table: str
    empty: bool = False
    predicate: object = None  # BoolExpr über ThisField, nur wenn empty False


@dataclass(frozen=True)
class SearchConfig:
    max_p: int = 1
    max_t: int = 2
    max_c: int = 4
    spec: GuaranteeSpec = EC
    internal_only: bool = False
    timeout: int = 120  # Sekunden je Solveraufruf
    records: int = 4
    unroll: int = 2
    partitions: int = 2
    inner_loop: bool = True
    deadline: float | None = None  # globale Wandzeit in Sekunden
    init_constraints: tuple = field(default_factory=tuple)

    def validate(self) -> list[str]:
        """ Meldungen zu verletzten Schranken, leer wenn gültig """
        fehler = []
        if self.max_t < 2:
            fehler.append("max_t muss mindestens 2 sein")
        if self.max_c < 3:
            fehler.append("max_c muss mindestens 3 sein")
        if self.max_p < 0:
            fehler.append("max_p darf nicht negativ sein")
        if self.records < 1:
            fehler.append("records muss mindestens 1 sein")
        if self.unroll < 0:
            fehler.append("unroll darf nicht negativ sein")
        if self.partitions < 1:
            fehler.append("partitions muss mindestens 1 sein")
        if self.timeout <= 0:
            fehler.append("timeout muss positiv sein")
        return fehler

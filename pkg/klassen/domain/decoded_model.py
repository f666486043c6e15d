from dataclasses import dataclass, field


@dataclass(frozen=True)
class PlanInstance:
    """ Instanz im Kodierungsplan: serielle Instanzen stehen vor den Zyklusinstanzen """
    index: int
    txn: str
    serial: bool = False


@dataclass(frozen=True)
class DecodedModel:
    """ Strukturierte Belegung eines erfüllenden Modells

    Anfrageknoten heißen (Instanzindex, Vorkommensindex), beide 1-basiert.
    """
    plan: tuple = ()  # PlanInstance
    partitions: int = 1
    args: dict = field(default_factory=dict)  # Instanz -> {Parameter: Wert}
    abstract_values: dict = field(default_factory=dict)  # Instanz -> {abs-Name: Wert}
    executed: frozenset = frozenset()  # Knoten mit Λ = true
    ts: dict = field(default_factory=dict)  # Knoten -> Zeitstempel
    tau: dict = field(default_factory=dict)  # Knoten -> Partitionsindex
    broadcast: dict = field(default_factory=dict)  # Knoten -> frozenset der erreichten Partitionen
    keys: dict = field(default_factory=dict)  # Tabelle -> [Schlüsseltupel je Slot]
    init: dict = field(default_factory=dict)  # Tabelle -> [{Feld: Wert} je Slot], inkl. alive
    cycle: tuple = ()  # Knoten in Zyklusreihenfolge
    kinds: tuple = ()  # Kantenart je Position (letzte Kante ST)
    fields: tuple = ()  # Feld je Kante, "" bei ST
    internal: bool = False

    def instance(self, index: int) -> PlanInstance:
        return self.plan[index - 1]

    def schedule(self) -> list[tuple]:
        """ Ausgeführte Knoten in Arbitrierungsreihenfolge, Gleichstand nach Knotenname """
        return sorted(self.executed, key=lambda knoten: (self.ts[knoten], knoten))

    def visible(self, a: tuple, b: tuple) -> bool:
        """ vis(a, b) auf Anfrageebene """
        return self.ts[a] < self.ts[b] and self.tau[b] in self.broadcast[a]

from dataclasses import dataclass, field

from klassen.domain.effect import Effect, EffectId
from klassen.domain.schema import ALIVE


@dataclass(frozen=True)
class SystemState:
    """ Zustand des replizierten Speichers (store, ar, vis)

    store hält die Effekte nach Ursprungspartition (disjunkt), replicas die Effekte,
    die einer Partition bekannt sind. ar ist als Zeitstempel je Effekt abgelegt.
    """
    effects: dict = field(default_factory=dict)  # EffectId -> Effect
    store: dict = field(default_factory=dict)  # Partition -> frozenset[EffectId]
    replicas: dict = field(default_factory=dict)  # Partition -> frozenset[EffectId]
    ar: dict = field(default_factory=dict)  # EffectId -> int
    vis: frozenset = frozenset()  # Paare (EffectId, EffectId)

    @property
    def partitions(self) -> list[str]:
        return sorted(self.replicas)

    def effect(self, effect_id: EffectId) -> Effect:
        return self.effects[effect_id]

    def visible(self, a: EffectId, b: EffectId) -> bool:
        return (a, b) in self.vis

    def ar_before(self, a: EffectId, b: EffectId) -> bool:
        return self.ar[a] < self.ar[b]

    def ordered(self) -> list[Effect]:
        """ Alle Effekte in Arbitrierungsreihenfolge """
        return [self.effects[i] for i in sorted(self.ar, key=self.ar.get)]


@dataclass(frozen=True)
class LocalView:
    """ Lokale Sicht σ: (Tabelle, Schlüssel) -> Feld -> Wert """
    rows: dict = field(default_factory=dict)
    # (Tabelle, Schlüssel, Feld) -> EffectId des sichtbaren Schreibeffekts
    sources: dict = field(default_factory=dict)

    def value(self, table: str, key: tuple, feld: str) -> int:
        # nicht geschriebene Felder haben den Vorgabewert 0, damit auch alive=0
        return self.rows.get((table, key), {}).get(feld, 0)

    def is_alive(self, table: str, key: tuple) -> bool:
        return self.value(table, key, ALIVE) == 1

    def source(self, table: str, key: tuple, feld: str) -> EffectId | None:
        return self.sources.get((table, key, feld))

    def keys(self, table: str) -> list[tuple]:
        return sorted(k for (t, k) in self.rows if t == table)

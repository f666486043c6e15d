from dataclasses import dataclass, field


@dataclass(frozen=True)
class ScheduleStep:
    """ Ein Schritt: Instanz führt ihre ordinal-te Anfrage auf partition aus """
    instance: str
    ordinal: int
    partition: str
    # Gruppen verbundener Partitionen zum Zeitpunkt des Schritts
    topology: tuple = ()
    label: str = ""


@dataclass(frozen=True)
class InitRow:
    table: str
    key: tuple
    values: dict  # Feld -> Wert, inklusive alive


@dataclass(frozen=True)
class ExecutionOracle:
    """ Orakel der Semantik: Ablaufplan, Argumente (η), abstrakte Werte (α), Schleifen (β) """
    instances: dict = field(default_factory=dict)  # Instanz -> Transaktionsname
    schedule: tuple = ()
    args: dict = field(default_factory=dict)  # (Instanz, Parameter) -> int
    abstract_values: dict = field(default_factory=dict)  # (Instanz, abs-Schlüssel) -> int
    iteration_counts: dict = field(default_factory=dict)  # (Instanz, Schleifenstelle) -> int
    initial_db: tuple = ()

    def partition_universe(self) -> list[str]:
        universum = set()
        for schritt in self.schedule:
            universum.add(schritt.partition)
            for gruppe in schritt.topology:
                universum.update(gruppe)
        return sorted(universum) or ["A"]

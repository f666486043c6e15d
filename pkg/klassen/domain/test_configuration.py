from dataclasses import dataclass, field


@dataclass(frozen=True)
class ConfigInstance:
    label: str  # Ins1, Ins2, ...
    txn: str
    args: tuple = ()
    abstract_values: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConfigStep:
    """ @T<k>@partitions{...}: Ins<i>-O<j>, die erste Partition der ersten Gruppe führt aus """
    label: str
    groups: tuple  # Tupel von Tupeln mit Partitionsnamen
    instance: str
    ordinal: int

    @property
    def partition(self) -> str:
        return self.groups[0][0]


@dataclass(frozen=True)
class TestConfiguration:
    # pytest soll die Klasse nicht als Testklasse einsammeln
    __test__ = False

    init: tuple = ()  # InitRow
    instances: tuple = ()  # ConfigInstance
    schedule: tuple = ()  # ConfigStep

    def instance(self, label: str) -> ConfigInstance | None:
        for instanz in self.instances:
            if instanz.label == label:
                return instanz
        return None

    def partitions(self) -> list[str]:
        namen = []
        for schritt in self.schedule:
            for gruppe in schritt.groups:
                for name in gruppe:
                    if name not in namen:
                        namen.append(name)
        return namen

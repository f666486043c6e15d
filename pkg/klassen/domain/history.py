from dataclasses import dataclass, field

from klassen.domain.effect import QueryInstanceId
from klassen.domain.system_state import SystemState


@dataclass(frozen=True)
class Step:
    index: int
    query: QueryInstanceId
    partition: str
    effects: tuple = ()  # erzeugte EffectIds (ε₁ ∪ ε₂)
    label: str = ""


@dataclass(frozen=True)
class History:
    """ Folge von Systemzuständen, Zustand 0 enthält nur die Initialisierung """
    states: tuple = ()
    steps: tuple = ()
    # Kontext für die erneute Ausführung durch das Orakel
    oracle: object = field(default=None, compare=False, repr=False)
    program: object = field(default=None, compare=False, repr=False)
    schema: object = field(default=None, compare=False, repr=False)

    @property
    def final(self) -> SystemState:
        return self.states[-1]

    def __len__(self):
        return len(self.states)

    def queries(self) -> list[QueryInstanceId]:
        return [schritt.query for schritt in self.steps]

    def instances(self) -> list[str]:
        gesehen = []
        for schritt in self.steps:
            if schritt.query.instance not in gesehen:
                gesehen.append(schritt.query.instance)
        return gesehen

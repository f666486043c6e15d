from dataclasses import dataclass, field

from klassen.domain.decoded_model import DecodedModel
from klassen.domain.dependency_graph import fingerprint_text


class ReplayStatus:
    PENDING = "pending"
    CONFIRMED = "confirmed"
    FAILED = "failed"
    NO_PREFIX = "no independent prefix"
    UNDETERMINED = "undetermined"


class Verdict:
    CONFIRMED = "confirmed"
    CYCLE_ABSENT = "cycle-absent"
    DIFFERENT_CYCLE = "different-cycle"


@dataclass(frozen=True)
class AnomalyReport:
    fingerprint: tuple = ()
    types: tuple = ()  # Transaktionstypen der Zyklusinstanzen
    prefix: tuple = ()  # Transaktionstypen des seriellen Präfixes
    model: DecodedModel | None = None
    seconds: float = 0.0
    status: str = ReplayStatus.PENDING
    internal: bool = False
    anomaly_type: str = ""
    tables: tuple = ()

    @property
    def length(self) -> int:
        return len(self.fingerprint)

    @property
    def prefix_length(self) -> int:
        return len(self.prefix)

    @property
    def kinds(self) -> list[str]:
        return [element[2] for element in self.fingerprint]

    def describe(self) -> str:
        return fingerprint_text(self.fingerprint)


@dataclass(frozen=True)
class VerifyResult:
    verdict: str
    internal: bool = False
    # Vermerk, wenn die Klassifikation vom Bericht abweicht
    note: str = ""
    cycle: object = None

    @property
    def confirmed(self) -> bool:
        return self.verdict == Verdict.CONFIRMED


@dataclass(frozen=True)
class SearchResult:
    reports: tuple = ()
    truncated: bool = False
    seconds: float = 0.0
    solver_calls: int = field(default=0, compare=False)

from dataclasses import dataclass, field

from klassen.domain.effect import QueryInstanceId


class EdgeKind:
    WR = "WR"
    WW = "WW"
    RW = "RW"
    ST = "ST"
    STP = "ST+"

    DEPENDENCIES = ("WR", "WW", "RW")


@dataclass(frozen=True, order=True)
class DepEdge:
    """ Kante des Abhängigkeitsgraphen, witness = (Tabelle, Schlüssel, Feld) bei WR/WW/RW """
    source: QueryInstanceId
    target: QueryInstanceId
    kind: str
    witness: tuple | None = None

    @property
    def field(self) -> str | None:
        return self.witness[2] if self.witness else None

    @property
    def is_dependency(self) -> bool:
        return self.kind in EdgeKind.DEPENDENCIES


@dataclass(frozen=True)
class DependencyGraph:
    """ Multigraph über Anfrageinstanzen; ST-Kanten sind kanonisch (source < target) abgelegt """
    nodes: tuple = ()
    edges: frozenset = frozenset()

    def edges_between(self, a: QueryInstanceId, b: QueryInstanceId) -> list[DepEdge]:
        """ Kanten, die von a nach b durchlaufen werden können (ST in beide Richtungen) """
        kanten = []
        for kante in self.edges:
            if kante.source == a and kante.target == b:
                kanten.append(kante)
            elif not kante.is_dependency and kante.source == b and kante.target == a:
                kanten.append(kante)
        return sorted(kanten)

    def dependency_edges(self) -> list[DepEdge]:
        return sorted(k for k in self.edges if k.is_dependency)


@dataclass(frozen=True)
class CycleEdge:
    source: QueryInstanceId
    target: QueryInstanceId
    kind: str
    field: str | None = None


@dataclass(frozen=True)
class Cycle:
    """ Geschlossener Weg über paarweise verschiedene Anfrageinstanzen """
    edges: tuple = ()
    internal: bool = False

    def __len__(self):
        return len(self.edges)

    @property
    def nodes(self) -> list[QueryInstanceId]:
        return [kante.source for kante in self.edges]

    def fingerprint(self) -> tuple:
        """ Rotationsminimale Folge aus (Typ, Stelle, Kantenart, Feld), ST+ zählt als ST """
        folge = []
        for kante in self.edges:
            art = EdgeKind.ST if kante.kind == EdgeKind.STP else kante.kind
            folge.append((kante.source.txn, kante.source.site, art, kante.field or ""))
        return canonical_rotation(folge)

    def kinds(self) -> list[str]:
        return [kante.kind for kante in self.edges]


def canonical_rotation(folge: list) -> tuple:
    if not folge:
        return ()
    rotationen = [tuple(folge[i:] + folge[:i]) for i in range(len(folge))]
    return min(rotationen)


def fingerprint_text(fingerprint: tuple) -> str:
    """ Lesbare Form, z.B. 'T.q1 -WR(f)-> U.q1 -RW(f)-> ...' """
    teile = []
    for txn, stelle, art, feld in fingerprint:
        beschriftung = f"{art}({feld})" if feld else art
        teile.append(f"{txn}.q{stelle} -{beschriftung}->")
    if fingerprint:
        teile.append(f"{fingerprint[0][0]}.q{fingerprint[0][1]}")
    return " ".join(teile)

import logging
from collections import Counter
from dataclasses import dataclass
from itertools import permutations, product

import networkx as nx

from klassen.controller.service.program_analysis import unroll_program
from klassen.controller.service.semantics import Simulator
from klassen.domain.dependency_graph import Cycle, CycleEdge, DepEdge, DependencyGraph, EdgeKind
from klassen.domain.errors import (BoundExceeded, EvaluationFault, OracleSizeExceeded, ScheduleMismatch,
                                   UnknownPartition)
from klassen.domain.history import History
from klassen.domain.system_state import SystemState


@dataclass(frozen=True)
class OracleVerdict:
    serializable: bool
    order: tuple = ()  # Zeugenreihenfolge der Instanzen
    cycle: Cycle | None = None


class DependencyService:
    """ Abhängigkeiten, Zyklen und Klassifikation auf konkreten Historien """

    @staticmethod
    def effect_dependencies(state: SystemState) -> set[tuple]:
        """ (η₁, η₂, Art, (Tabelle, Schlüssel, Feld)) über die gelesenen Versionen """
        schreiben = {}
        for effekt in state.ordered():
            if effekt.is_write:
                schreiben.setdefault(effekt.item, []).append(effekt)
        abhaengigkeiten = set()
        for item, folge in schreiben.items():
            # folge ist nach ar sortiert
            for i, frueher in enumerate(folge):
                for spaeter in folge[i + 1:]:
                    abhaengigkeiten.add((frueher.id, spaeter.id, EdgeKind.WW, item))
        for effekt in state.ordered():
            if not effekt.is_read:
                continue
            if effekt.source is not None:
                abhaengigkeiten.add((effekt.source, effekt.id, EdgeKind.WR, effekt.item))
            for schreiber in schreiben.get(effekt.item, ()):
                if schreiber.id == effekt.source:
                    continue
                # gelesene Version ist älter als der Schreibeffekt
                if effekt.source is None or state.ar_before(effekt.source, schreiber.id):
                    abhaengigkeiten.add((effekt.id, schreiber.id, EdgeKind.RW, effekt.item))
        return abhaengigkeiten

    @staticmethod
    def lift_to_queries(history: History, abhaengigkeiten: set | None = None, schranke: int = 2) -> DependencyGraph:
        """ Hebt Effektabhängigkeiten auf Anfrageinstanzen; innerhalb einer Transaktion nur ST bzw. ST+ """
        zustand = history.final
        if abhaengigkeiten is None:
            abhaengigkeiten = DependencyService.effect_dependencies(zustand)
        knoten = tuple(history.queries())
        kanten = set()
        for quelle, ziel, art, zeuge in abhaengigkeiten:
            a = zustand.effect(quelle).query
            b = zustand.effect(ziel).query
            # Initialisierung ist keine Anfrage
            if a is None or b is None or a.instance == b.instance:
                continue
            kanten.add(DepEdge(a, b, art, zeuge))
        abgewickelt = unroll_program(history.program, schranke) if history.program is not None else {}
        # ST+ bei Datenfluss zwischen den beiden Anfragen, sonst ST
        for i, a in enumerate(knoten):
            for b in knoten[i + 1:]:
                if a.instance != b.instance:
                    continue
                quelle, ziel = sorted((a, b))
                txn = abgewickelt.get(a.txn)
                art = EdgeKind.STP if txn is not None and txn.dataflow_linked(a.uid, b.uid) else EdgeKind.ST
                kanten.add(DepEdge(quelle, ziel, art))
        return DependencyGraph(knoten, frozenset(kanten))

    @staticmethod
    def find_cycles(graph: DependencyGraph, max_laenge: int, internal_only: bool = False) -> list[Cycle]:
        """ Alle gültigen Zyklen bis max_laenge, eindeutig bis auf Rotation """
        digraph = nx.DiGraph()
        digraph.add_nodes_from(graph.nodes)
        # ST-Kanten sind in beide Richtungen begehbar
        for kante in graph.edges:
            digraph.add_edge(kante.source, kante.target)
            if not kante.is_dependency:
                digraph.add_edge(kante.target, kante.source)
        gefunden = {}
        for pfad in nx.simple_cycles(digraph, length_bound=max_laenge):
            if len(pfad) < 3:
                continue
            schritte = []
            for i, a in enumerate(pfad):
                b = pfad[(i + 1) % len(pfad)]
                moeglich = {}
                for kante in graph.edges_between(a, b):
                    if internal_only and kante.kind == EdgeKind.ST:
                        continue
                    moeglich.setdefault((kante.kind, kante.field), CycleEdge(a, b, kante.kind, kante.field))
                schritte.append(list(moeglich.values()))
            # parallele Kanten zwischen denselben Knoten ergeben eigene Kandidaten
            for auswahl in product(*schritte):
                if not is_valid(auswahl):
                    continue
                zyklus = Cycle(tuple(auswahl), all(k.kind != EdgeKind.ST for k in auswahl))
                gefunden.setdefault(zyklus.fingerprint(), zyklus)
        return [gefunden[f] for f in sorted(gefunden)]

    @staticmethod
    def is_internal(zyklus: Cycle) -> bool:
        return all(k.kind != EdgeKind.ST for k in zyklus.edges)

    @staticmethod
    def anomaly_type(fingerprint: tuple) -> str:
        """ Benennung nach dem Muster der Abhängigkeitskanten """
        abhaengig = [(art, feld) for _, _, art, feld in fingerprint if art in EdgeKind.DEPENDENCIES]
        arten = sorted(art for art, _ in abhaengig)
        if arten == ["RW", "RW"]:
            return "Lost Update" if abhaengig[0][1] == abhaengig[1][1] else "Write Skew"
        if arten == ["RW", "WR"]:
            return "Dirty Read"
        if arten == ["RW", "WW"]:
            return "Lost Update"
        if arten == ["WW", "WW"]:
            return "Dirty Write"
        return f"Generic ({','.join(arten)})"

    @staticmethod
    def serializability_oracle(history: History, max_schritte: int = 9, schranke: int = 2) -> OracleVerdict:
        """ Sucht eine serielle Reihenfolge der Instanzen mit gleichen Versionen und Werten """
        if len(history.steps) > max_schritte:
            raise OracleSizeExceeded(f"{len(history.steps)} Schritte, höchstens {max_schritte} erlaubt")
        oracle = history.oracle
        instanzen = list(oracle.instances) if oracle is not None else history.instances()
        soll = _signatur(history)
        simulator = Simulator(history.program, history.schema, schranke)
        for reihenfolge in permutations(instanzen):
            try:
                seriell = simulator.run_serial(oracle, list(reihenfolge))
            except (ScheduleMismatch, EvaluationFault, BoundExceeded, UnknownPartition) as fehler:
                logging.info(f"Reihenfolge {reihenfolge} nicht ausführbar: {fehler}")
                continue
            if _signatur(seriell) == soll:
                return OracleVerdict(True, tuple(reihenfolge))
        graph = DependencyService.lift_to_queries(history, schranke=schranke)
        zyklen = DependencyService.find_cycles(graph, max(3, len(graph.nodes)))
        return OracleVerdict(False, (), zyklen[0] if zyklen else None)


def is_valid(kanten) -> bool:
    """ Mindestens zwei Abhängigkeiten, mindestens ein ST und nie zwei ST nacheinander """
    abhaengig = sum(1 for k in kanten if k.kind in EdgeKind.DEPENDENCIES)
    if abhaengig < 2 or abhaengig == len(kanten):
        return False
    for i, kante in enumerate(kanten):
        naechste = kanten[(i + 1) % len(kanten)]
        if kante.kind not in EdgeKind.DEPENDENCIES and naechste.kind not in EdgeKind.DEPENDENCIES:
            return False
    return True


def _signatur(history: History) -> tuple:
    """ Lesezugriffe mit gelesener Version, Schreibzugriffe mit Wert und Reihenfolge je Datum """
    zustand = history.final

    def herkunft(effekt_id):
        if effekt_id is None:
            return "init"
        quelle = zustand.effect(effekt_id).query
        return "init" if quelle is None else (quelle.instance, quelle.uid)

    lesen = Counter()
    schreiben = Counter()
    folge = {}
    for effekt in zustand.ordered():
        if effekt.query is None:
            continue
        anfrage = (effekt.query.instance, effekt.query.uid)
        if effekt.is_read:
            lesen[(anfrage, effekt.item, herkunft(effekt.source))] += 1
        else:
            schreiben[(anfrage, effekt.item, effekt.value)] += 1
            folge.setdefault(effekt.item, []).append(anfrage)
    return (frozenset(lesen.items()), frozenset(schreiben.items()),
            frozenset((item, tuple(reihe)) for item, reihe in folge.items()))


def build_graph(history: History, schranke: int = 2) -> DependencyGraph:
    return DependencyService.lift_to_queries(history, schranke=schranke)

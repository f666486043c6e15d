from itertools import permutations

import pytest

from klassen.controller.service.depgraph import DependencyService, build_graph, is_valid
from klassen.controller.service.semantics import Simulator
from klassen.domain.dependency_graph import (Cycle, CycleEdge, DepEdge, DependencyGraph, EdgeKind,
                                             canonical_rotation, fingerprint_text)
from klassen.domain.effect import QueryInstanceId
from klassen.domain.errors import OracleSizeExceeded
from klassen.domain.oracle import ExecutionOracle, InitRow, ScheduleStep
from klassen.repository.source_data import QuelltextData
from tests.conftest import benchmark_pfad

GETRENNT = (("A",), ("B",))

A = QueryInstanceId("Ins1", 1, "T", "q1", 1)
B = QueryInstanceId("Ins1", 2, "T", "q2", 2)
C = QueryInstanceId("Ins2", 1, "U", "q1", 1)


def _dreieck(st_art=EdgeKind.ST) -> DependencyGraph:
    kanten = frozenset({
        DepEdge(B, C, EdgeKind.WR, ("R", (1,), "f")),
        DepEdge(C, A, EdgeKind.RW, ("R", (1,), "g")),
        DepEdge(A, B, st_art),
    })
    return DependencyGraph((A, B, C), kanten)


def test_dreieck_hat_genau_einen_zyklus():
    zyklen = DependencyService.find_cycles(_dreieck(), 4)
    assert len(zyklen) == 1
    zyklus = zyklen[0]
    assert len(zyklus) == 3
    assert not zyklus.internal
    assert zyklus.fingerprint() == (("T", 1, "ST", ""), ("T", 2, "WR", "f"), ("U", 1, "RW", "g"))
    assert DependencyService.anomaly_type(zyklus.fingerprint()) == "Dirty Read"
    assert fingerprint_text(zyklus.fingerprint()) == "T.q1 -ST-> T.q2 -WR(f)-> U.q1 -RW(g)-> T.q1"


def test_nur_interne_zyklen():
    assert DependencyService.find_cycles(_dreieck(), 4, internal_only=True) == []
    zyklen = DependencyService.find_cycles(_dreieck(EdgeKind.STP), 4, internal_only=True)
    assert len(zyklen) == 1
    assert zyklen[0].internal
    # ST+ erscheint im Fingerabdruck als ST
    assert zyklen[0].fingerprint()[0][2] == "ST"


def test_zu_kurze_laengenschranke():
    assert DependencyService.find_cycles(_dreieck(), 2) == []


def test_st_kanten_in_beide_richtungen():
    graph = _dreieck()
    assert graph.edges_between(B, A) == [DepEdge(A, B, EdgeKind.ST)]
    assert graph.edges_between(A, C) == []
    assert len(graph.dependency_edges()) == 2


def _kanten(*arten):
    return [CycleEdge(A, B, art) for art in arten]


@pytest.mark.parametrize("arten, gueltig", [
    (("ST", "WR", "RW"), True),
    (("ST", "WR", "ST", "RW"), True),
    (("ST+", "WW", "RW"), True),
    (("WR", "RW", "WW"), False),
    (("ST", "WR"), False),
    (("ST", "ST", "WR", "RW"), False),
    (("WR", "ST", "RW", "ST", "ST"), False),
])
def test_gueltige_zyklen(arten, gueltig):
    assert is_valid(_kanten(*arten)) == gueltig


@pytest.mark.parametrize("fingerabdruck, name", [
    ((("T", 1, "RW", "f"), ("T", 2, "ST", ""), ("U", 1, "RW", "f"), ("U", 2, "ST", "")), "Lost Update"),
    ((("T", 1, "RW", "f"), ("T", 2, "ST", ""), ("U", 1, "RW", "g"), ("U", 2, "ST", "")), "Write Skew"),
    ((("T", 1, "ST", ""), ("T", 2, "WR", "f"), ("U", 1, "RW", "g")), "Dirty Read"),
    ((("T", 2, "WW", "f"), ("U", 2, "ST", ""), ("U", 1, "RW", "f")), "Lost Update"),
    ((("T", 1, "WW", "f"), ("T", 2, "ST", ""), ("U", 1, "WW", "g"), ("U", 2, "ST", "")), "Dirty Write"),
    ((("T", 1, "WR", "f"), ("T", 2, "ST", ""), ("U", 1, "WR", "g"), ("U", 2, "ST", "")), "Generic (WR,WR)"),
])
def test_klassifikation(fingerabdruck, name):
    assert DependencyService.anomaly_type(fingerabdruck) == name


def test_kanonische_rotation():
    assert canonical_rotation([3, 1, 2]) == (1, 2, 3)
    assert canonical_rotation([]) == ()


# ---------- Graphen aus Historien ----------

def _simulator(name: str) -> Simulator:
    schema, programm, _ = QuelltextData(benchmark_pfad(name, "schema"), benchmark_pfad(name, "txn")).laden()
    return Simulator(programm, schema)


def _payment_orakel(plan=()) -> ExecutionOracle:
    return ExecutionOracle(
        instances={"Ins1": "payment", "Ins2": "payment"},
        schedule=tuple(ScheduleStep(i, o, "A") for i, o in plan),
        args={("Ins1", "id"): 10, ("Ins2", "id"): 10},
        initial_db=(InitRow("CUST", (10,), {"c_pay_cnt": 50, "alive": 1}),))


@pytest.fixture
def verschraenkt():
    plan = [("Ins1", 1), ("Ins2", 1), ("Ins1", 2), ("Ins2", 2)]
    return _simulator("payment").run(_payment_orakel(plan))


def test_abhaengigkeiten_des_verlorenen_updates(verschraenkt):
    graph = build_graph(verschraenkt)
    erster_lesen, zweiter_lesen, erster_schreiben, zweiter_schreiben = graph.nodes
    kanten = {(k.source, k.target, k.kind) for k in graph.edges}
    assert (erster_lesen, zweiter_schreiben, EdgeKind.RW) in kanten
    assert (zweiter_lesen, erster_schreiben, EdgeKind.RW) in kanten
    assert (erster_schreiben, zweiter_schreiben, EdgeKind.WW) in kanten
    # Lesen und Schreiben derselben Instanz sind über den Datenfluss verbunden
    assert (erster_lesen, erster_schreiben, EdgeKind.STP) in kanten
    assert not any(k.kind == EdgeKind.ST for k in graph.edges)


def test_zyklen_des_verlorenen_updates(verschraenkt):
    graph = build_graph(verschraenkt)
    zyklen = DependencyService.find_cycles(graph, 4, internal_only=True)
    assert zyklen
    assert all(z.internal for z in zyklen)
    assert {DependencyService.anomaly_type(z.fingerprint()) for z in zyklen} == {"Lost Update"}
    assert len({z.fingerprint() for z in zyklen}) == len(zyklen)


def test_orakel_verschraenkt(verschraenkt):
    urteil = DependencyService.serializability_oracle(verschraenkt)
    assert not urteil.serializable
    assert urteil.cycle is not None


def test_orakel_seriell():
    simulator = _simulator("payment")
    history = simulator.run_serial(_payment_orakel(), ["Ins2", "Ins1"])
    urteil = DependencyService.serializability_oracle(history)
    assert urteil.serializable
    assert urteil.order == ("Ins2", "Ins1")


def test_orakel_zu_gross(verschraenkt):
    with pytest.raises(OracleSizeExceeded):
        DependencyService.serializability_oracle(verschraenkt, max_schritte=3)


# ---------- Orakel und Zyklensuche stimmen überein ----------

FAELLE = {
    "upd": ({"Ins1": "upd", "Ins2": "upd", "Ins3": "upd"},
            {("Ins1", "k"): 1, ("Ins1", "a"): 5, ("Ins2", "k"): 1, ("Ins2", "a"): 6,
             ("Ins3", "k"): 1, ("Ins3", "a"): 7},
            (InitRow("R", (1,), {"f": 0, "alive": 1}),)),
    "write_skew": ({"Ins1": "writeF", "Ins2": "writeG", "Ins3": "writeF"},
                   {("Ins1", "k"): 1, ("Ins1", "a"): 7, ("Ins2", "k"): 1, ("Ins2", "a"): 8,
                    ("Ins3", "k"): 1, ("Ins3", "a"): 9},
                   (InitRow("ACC", (1,), {"f": 0, "g": 0, "alive": 1}),)),
    "dirty_read": ({"Ins1": "twoWrites", "Ins2": "oneRead", "Ins3": "oneRead"},
                   {("Ins1", "k1"): 1, ("Ins1", "k2"): 1, ("Ins1", "a1"): 3, ("Ins1", "a2"): 4,
                    ("Ins2", "k3"): 1, ("Ins3", "k3"): 1},
                   (InitRow("R", (1,), {"f": 0, "g": 0, "alive": 1}),)),
}

# Partition und Topologie je (Instanz, Schrittnummer, Schrittanzahl)
VERTEILUNGEN = {
    "verbunden": lambda instanz, n, gesamt: ("A", ()),
    "getrennt": lambda instanz, n, gesamt: ("A" if instanz == "Ins1" else "B", GETRENNT),
    "geheilt": lambda instanz, n, gesamt: ("A" if instanz == "Ins1" else "B", () if n == gesamt else GETRENNT),
    "zweite_allein": lambda instanz, n, gesamt: ("B" if instanz == "Ins2" else "A", GETRENNT),
    "wechselnd": lambda instanz, n, gesamt: ("A" if instanz != "Ins2" else "B", () if n % 2 else GETRENNT),
}


def _alle_ablaeufe(anzahl: int):
    instanzen = [f"Ins{i}" for i in range(1, anzahl + 1)]
    for reihenfolge in sorted(set(permutations([i for i in instanzen for _ in range(2)]))):
        for verteilung, ort in VERTEILUNGEN.items():
            zaehler = {}
            schritte = []
            for n, instanz in enumerate(reihenfolge, start=1):
                zaehler[instanz] = zaehler.get(instanz, 0) + 1
                partition, topologie = ort(instanz, n, len(reihenfolge))
                schritte.append(ScheduleStep(instanz, zaehler[instanz], partition, topologie))
            yield verteilung, tuple(schritte)


@pytest.mark.parametrize("anzahl", [2, 3])
@pytest.mark.parametrize("name", sorted(FAELLE))
def test_orakel_entspricht_zyklensuche(name, anzahl):
    instanzen, args, init = FAELLE[name]
    instanzen = {i: t for i, t in instanzen.items() if int(i[3:]) <= anzahl}
    simulator = _simulator(name)
    abweichungen = []
    for verteilung, schritte in _alle_ablaeufe(anzahl):
        history = simulator.run(ExecutionOracle(instanzen, schritte, args, initial_db=init))
        graph = build_graph(history)
        zyklen = DependencyService.find_cycles(graph, len(graph.nodes))
        if DependencyService.serializability_oracle(history).serializable == bool(zyklen):
            abweichungen.append((verteilung, [(s.instance, s.ordinal) for s in schritte]))
    assert abweichungen == []


def test_orakel_auf_anderer_partition():
    # die serielle Wiederholung darf keine Partition A voraussetzen
    instanzen, args, init = FAELLE["dirty_read"]
    instanzen = {"Ins1": instanzen["Ins1"], "Ins2": instanzen["Ins2"]}
    schritte = tuple(ScheduleStep(i, o, "B") for i, o in [("Ins1", 1), ("Ins2", 1), ("Ins2", 2), ("Ins1", 2)])
    history = _simulator("dirty_read").run(ExecutionOracle(instanzen, schritte, args, initial_db=init))
    assert history.oracle.partition_universe() == ["B"]
    urteil = DependencyService.serializability_oracle(history)
    graph = build_graph(history)
    assert not urteil.serializable
    assert DependencyService.find_cycles(graph, len(graph.nodes))
    seriell = tuple(ScheduleStep(i, o, "B") for i, o in [("Ins1", 1), ("Ins1", 2), ("Ins2", 1), ("Ins2", 2)])
    history = _simulator("dirty_read").run(ExecutionOracle(instanzen, seriell, args, initial_db=init))
    assert DependencyService.serializability_oracle(history).order == ("Ins1", "Ins2")


def test_zyklus_ohne_kanten():
    assert Cycle().fingerprint() == ()

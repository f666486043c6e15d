import os
from dataclasses import replace

import pytest

from klassen.controller.service.replay import ReplayService, partition_name
from klassen.controller.service.manager import AnalyseManager
from klassen.controller.service.search import find_anomalies
from klassen.controller.service.solver import Z3Solver
from klassen.domain.anomaly_report import AnomalyReport, ReplayStatus, Verdict
from klassen.domain.decoded_model import DecodedModel, PlanInstance
from klassen.domain.errors import ConfigFormatError, ScheduleMismatch
from klassen.domain.search_config import SearchConfig
from klassen.repository.config_converter import ConfigConverter
from klassen.repository.program_converter import parse_init_constraints
from klassen.repository.source_data import QuelltextData
from klassen.repository.trace_converter import TraceTextConverter
from klassen.repository.trace_data import TraceTextData
from tests.conftest import GOLDEN

VERLORENES_UPDATE = (("payment", 1, "RW", "c_pay_cnt"), ("payment", 2, "ST", ""),
                     ("payment", 1, "RW", "c_pay_cnt"), ("payment", 2, "ST", ""))


@pytest.fixture
def payment(benchmark):
    schema, programm, _ = benchmark("payment")
    return schema, programm


@pytest.fixture
def golden_config(payment, golden):
    schema, _ = payment
    return ConfigConverter.deserialisieren(golden("payment.conf"), schema)


def _init_text(config, schema) -> str:
    text = ConfigConverter.serialisieren(config, schema)
    return text[:text.index("# instances:")]


# ---------- .conf ----------

def test_konfiguration_lesen(golden_config):
    config = golden_config
    assert [(z.table, z.key, z.values) for z in config.init] == [("CUST", (10,), {"c_pay_cnt": 50, "alive": 1})]
    assert [(i.label, i.txn, i.args) for i in config.instances] == [("Ins1", "payment", (10,)),
                                                                   ("Ins2", "payment", (10,))]
    assert [(s.label, s.instance, s.ordinal, s.partition) for s in config.schedule] == [
        ("T1", "Ins1", 1, "A"), ("T2", "Ins2", 1, "A"), ("T3", "Ins1", 2, "A"), ("T4", "Ins2", 2, "A")]
    assert config.partitions() == ["A", "B"]


def test_konfiguration_bitgenau_zurueckschreiben(payment, golden, golden_config):
    schema, _ = payment
    assert ConfigConverter.serialisieren(golden_config, schema) == golden("payment.conf")


def test_abstrakte_werte_und_mehrere_gruppen(payment):
    schema, _ = payment
    text = ("# initialize:\n# instances:\nIns1: payment(3) any_1=4\n# schedule:\n"
            "@T1@partitions{B}{A}: Ins1-O1\n")
    config = ConfigConverter.deserialisieren(text, schema)
    assert config.instances[0].abstract_values == {"any_1": 4}
    assert config.schedule[0].groups == (("B",), ("A",))
    assert config.schedule[0].partition == "B"
    assert "Ins1: payment(3) any_1=4" in ConfigConverter.serialisieren(config, schema)


@pytest.mark.parametrize("text, meldung, zeile", [
    ("Ins1: payment(1)\n", "außerhalb", 1),
    ("# initialize:\nINSERT INTO X(a) VALUES (1);\n", "Unbekannte Tabelle", 2),
    ("# initialize:\nINSERT INTO CUST(c_id) VALUES (1, 2);\n", "Werte", 2),
    ("# initialize:\nINSERT INTO CUST(c_pay_cnt) VALUES (1);\n", "Schlüsselfeld", 2),
    ("# initialize:\nINSERT INTO CUST(c_id)\n  VALUES (1)\n# instances:\n", "';'", 2),
    ("# initialize:\nINSERT INTO CUST(c_id) VALUES (x);\n", "Ganzzahlen", 2),
    ("# instances:\nIns1 payment(1)\n", "Ins<i>", 2),
    ("# schedule:\n@T1@partitions{A}: Ins1 O1\n", "@T<k>", 2),
    ("# schedule:\n@T1@partitions{}: Ins1-O1\n", "Leere", 2),
    ("# schedule:\n@T1@partitions{ }: Ins1-O1\n", "Leere", 2),
])
def test_konfiguration_fehler_mit_zeile(payment, text, meldung, zeile):
    schema, _ = payment
    with pytest.raises(ConfigFormatError, match=meldung) as fehler:
        ConfigConverter.deserialisieren(text, schema)
    assert fehler.value.line == zeile


@pytest.mark.parametrize("ablauf, meldung", [
    ("@T1@partitions{A}: Ins2-O1\n", "nicht deklariert"),
    ("@T1@partitions{A,B}: Ins1-O1\n@T2@partitions{A}: Ins1-O2\n", "nicht ab"),
    ("@T1@partitions{A}{A}: Ins1-O1\n", "mehreren Gruppen"),
])
def test_konfiguration_inkonsistent(payment, ablauf, meldung):
    schema, _ = payment
    text = "# initialize:\n# instances:\nIns1: payment(10)\n# schedule:\n" + ablauf
    with pytest.raises(ConfigFormatError, match=meldung):
        ConfigConverter.deserialisieren(text, schema)


def test_partitionsnamen():
    assert [partition_name(i) for i in (0, 1, 25, 26)] == ["A", "B", "Z", "P26"]


# ---------- Wiedergabe ----------

def test_golden_wiedergabe(payment, golden, golden_config):
    schema, programm = payment
    history, graph = ReplayService(programm, schema).replay(golden_config)
    assert TraceTextConverter.serialisieren(history) == golden("payment.trace")
    pruefung = ReplayService.verify(AnomalyReport(VERLORENES_UPDATE), graph)
    assert pruefung.confirmed
    # beide Kanten innerhalb der Instanzen sind Datenfluss
    assert pruefung.internal
    assert pruefung.note == "intern"


def test_ohne_bericht_genuegt_irgendein_zyklus(payment, golden_config):
    schema, programm = payment
    _, graph = ReplayService(programm, schema).replay(golden_config)
    assert ReplayService.verify(AnomalyReport(), graph).verdict == Verdict.CONFIRMED


def test_vertauschte_schritte(payment, golden_config):
    schema, programm = payment
    schritte = list(golden_config.schedule)
    schritte[0], schritte[2] = schritte[2], schritte[0]
    with pytest.raises(ScheduleMismatch):
        ReplayService(programm, schema).replay(replace(golden_config, schedule=tuple(schritte)))


def test_serieller_ablauf_hat_keinen_zyklus(payment, golden_config):
    schema, programm = payment
    t1, t2, t3, t4 = golden_config.schedule
    seriell = replace(golden_config, schedule=(t1, t3, t2, t4))
    _, graph = ReplayService(programm, schema).replay(seriell)
    assert ReplayService.verify(AnomalyReport(VERLORENES_UPDATE), graph).verdict == Verdict.CYCLE_ABSENT


def test_anderer_zyklus(payment, golden_config):
    schema, programm = payment
    _, graph = ReplayService(programm, schema).replay(golden_config)
    anderer = (("payment", 1, "WR", "c_pay_cnt"), ("payment", 2, "ST", ""), ("payment", 1, "WR", "c_pay_cnt"))
    pruefung = ReplayService.verify(AnomalyReport(anderer), graph)
    assert pruefung.verdict == Verdict.DIFFERENT_CYCLE
    assert not pruefung.confirmed


@pytest.mark.parametrize("instanz, meldung", [
    ("Ins1: transfer(10)", "unbekannte Transaktion"),
    ("Ins1: payment(10,11)", "Argumente"),
])
def test_konfiguration_passt_nicht_zum_programm(payment, instanz, meldung):
    schema, programm = payment
    text = f"# initialize:\n# instances:\n{instanz}\n# schedule:\n@T1@partitions{{A}}: Ins1-O1\n"
    with pytest.raises(ConfigFormatError, match=meldung):
        ReplayService(programm, schema).replay(ConfigConverter.deserialisieren(text, schema))


def test_leerer_ablauf(payment):
    schema, programm = payment
    config = ConfigConverter.deserialisieren("# initialize:\n# instances:\n# schedule:\n", schema)
    with pytest.raises(ConfigFormatError, match="leer"):
        ReplayService(programm, schema).replay(config)


# ---------- vom Modell zur Konfiguration ----------

def _payment_modell(tau: dict, broadcast: dict, ts: dict) -> DecodedModel:
    knoten = frozenset(ts)
    return DecodedModel(plan=(PlanInstance(1, "payment"), PlanInstance(2, "payment")), partitions=2,
                        args={1: {"id": 10}, 2: {"id": 10}}, executed=knoten, ts=ts,
                        tau={k: tau[k[0]] for k in knoten},
                        broadcast={k: frozenset({tau[k[0]]}) | broadcast.get(k, frozenset()) for k in knoten},
                        keys={"CUST": [(10,)]}, init={"CUST": [{"c_pay_cnt": 50, "alive": 1}]})


def test_payment_modell_ergibt_golden_konfiguration(payment, golden):
    schema, programm = payment
    # getrennte Partitionen ohne Broadcast, aber keine relevante Sichtbarkeit verlangt eine Trennung
    modell = _payment_modell({1: 1, 2: 0}, {}, {(1, 1): 1, (2, 1): 2, (1, 2): 3, (2, 2): 4})
    erzeugt, history, graph = ReplayService(programm, schema).realize(modell)
    assert ConfigConverter.serialisieren(erzeugt, schema) == golden("payment.conf")
    assert TraceTextConverter.serialisieren(history) == golden("payment.trace")
    assert ReplayService.verify(AnomalyReport(VERLORENES_UPDATE), graph).confirmed


def test_nicht_sichtbares_schreiben_trennt_partitionen(payment):
    schema, programm = payment
    # Ins2 liest nach dem Schreiben von Ins1, darf es aber nicht sehen
    modell = _payment_modell({1: 0, 2: 1}, {}, {(1, 1): 1, (1, 2): 2, (2, 1): 3, (2, 2): 4})
    erzeugt, history, _ = ReplayService(programm, schema).realize(modell)
    assert [s.groups for s in erzeugt.schedule] == [
        (("A", "B"),), (("A",), ("B",)), (("B",), ("A",)), (("B", "A"),)]
    assert [s.partition for s in erzeugt.schedule] == ["A", "A", "B", "B"]
    gelesen = [history.final.effect(s.effects[0]).value for s in history.steps if s.query.ordinal == 1]
    assert gelesen == [50, 50]


def test_sichtbares_schreiben_bleibt_verbunden(payment):
    schema, programm = payment
    modell = _payment_modell({1: 0, 2: 1}, {(1, 2): frozenset({1})}, {(1, 1): 1, (1, 2): 2, (2, 1): 3, (2, 2): 4})
    erzeugt, history, _ = ReplayService(programm, schema).realize(modell)
    assert all(s.groups == (("A", "B"),) for s in erzeugt.schedule)
    assert all(s.partition == "A" for s in erzeugt.schedule)
    assert TraceTextConverter.serialisieren(history).splitlines()[-1].split()[5] == "52"


def test_gefundenes_payment_modell_wird_bestaetigt(payment, golden, golden_config):
    schema, programm = payment
    bedingungen = parse_init_constraints("CUST: this.c_id = 10 AND this.c_pay_cnt = 50", schema)
    config = SearchConfig(max_p=0, max_t=2, max_c=4, init_constraints=bedingungen, timeout=60)
    berichte = [b for b in find_anomalies(programm, schema, config, Z3Solver(60)).reports
                if b.fingerprint == VERLORENES_UPDATE]
    assert len(berichte) == 1
    erzeugt, history, graph = ReplayService(programm, schema).realize(berichte[0].model)

    assert _init_text(erzeugt, schema) == _init_text(golden_config, schema)
    assert [(i.txn, i.args) for i in erzeugt.instances] == [("payment", (10,)), ("payment", (10,))]
    assert erzeugt.partitions() == ["A", "B"]
    assert TraceTextConverter.serialisieren(history).splitlines()[-1].split()[5] == "51"
    assert ReplayService.verify(berichte[0], graph).confirmed


# ---------- AnalyseManager ----------

@pytest.fixture
def manager(benchmark_datei):
    def bauen(name: str) -> AnalyseManager:
        bedingungen = benchmark_datei(name, "init")
        return AnalyseManager(QuelltextData(benchmark_datei(name, "schema"), benchmark_datei(name, "txn"),
                                            bedingungen if os.path.exists(bedingungen) else None))
    return bauen


@pytest.mark.parametrize("name, max_p", [
    ("upd", 0), ("payment", 0), ("write_skew", 0), ("dirty_read", 0), ("inc", 0), ("partition", 0), ("restock", 1),
])
def test_alle_berichte_werden_bestaetigt(manager, tmp_path, name, max_p):
    lauf = manager(name).analysieren(SearchConfig(max_p=max_p, max_t=2, max_c=4), Z3Solver(60), str(tmp_path))
    # Berichte ohne Präfix werden nicht abgespielt
    ausgelassen = (ReplayStatus.NO_PREFIX, ReplayStatus.UNDETERMINED)
    abgespielt = [e for e in lauf.entries if e.report.status not in ausgelassen]
    assert abgespielt
    assert lauf.failed == []
    for eintrag in abgespielt:
        assert eintrag.report.status == ReplayStatus.CONFIRMED
        assert eintrag.verify.confirmed
        assert os.path.exists(tmp_path / eintrag.config_file)


def test_berichte_und_konfiguration_wieder_lesen(manager, tmp_path):
    verwaltung = manager("upd")
    lauf = verwaltung.analysieren(SearchConfig(max_p=0, max_t=2, max_c=4), Z3Solver(60), str(tmp_path),
                                  dump_smt=True)
    assert os.listdir(tmp_path / "smt")
    bericht = AnalyseManager.bericht_laden(str(tmp_path / "reports.jsonl"), 1)
    assert bericht.fingerprint == lauf.entries[0].report.fingerprint
    assert bericht.model == lauf.entries[0].report.model
    assert bericht.status == ReplayStatus.CONFIRMED
    assert AnalyseManager.bericht_laden(str(tmp_path / "reports.jsonl"), len(lauf.entries) + 1) is None

    trace = tmp_path / "anomalie.trace"
    _, _, pruefung = verwaltung.wiedergeben(str(tmp_path / lauf.entries[0].config_file), bericht, str(trace))
    assert pruefung.confirmed
    assert TraceTextData(str(trace)).laden()


def test_golden_ueber_manager(manager, tmp_path, golden):
    verwaltung = manager("payment")
    konfiguration = os.path.join(GOLDEN, "payment.conf")
    trace = tmp_path / "payment.trace"
    _, _, pruefung = verwaltung.wiedergeben(konfiguration, AnomalyReport(VERLORENES_UPDATE), str(trace))
    assert pruefung.confirmed
    assert trace.read_text(encoding="utf-8") == golden("payment.trace")
    json_trace = tmp_path / "payment.json"
    verwaltung.wiedergeben(konfiguration, None, str(json_trace))
    assert json_trace.read_text(encoding="utf-8").startswith("{")


def test_orakel_ueber_manager(manager):
    urteil = manager("payment").orakel(os.path.join(GOLDEN, "payment.conf"))
    assert not urteil.serializable
    assert urteil.cycle is not None


def test_fehlende_konfiguration(manager, tmp_path):
    with pytest.raises(ConfigFormatError, match="nicht gefunden"):
        manager("payment").wiedergeben(str(tmp_path / "fehlt.conf"))

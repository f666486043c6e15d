import os

import click
import pytest
from flask import json

from klassen.controller.handler import CliHandler
from klassen.domain.guarantee import SER
from tests.conftest import GOLDEN

GOLDEN_CONF = os.path.join(GOLDEN, "payment.conf")

SERIELL_CONF = """# initialize:
INSERT INTO
  CUST(c_id,c_pay_cnt)
  VALUES (10,50);
# instances:
Ins1: payment(10)
Ins2: payment(10)
# schedule:
@T1@partitions{A,B}: Ins1-O1
@T2@partitions{A,B}: Ins1-O2
@T3@partitions{A,B}: Ins2-O1
@T4@partitions{A,B}: Ins2-O2
"""


@pytest.fixture
def quellen(benchmark_datei):
    def pfade(name: str) -> list[str]:
        return [benchmark_datei(name, "schema"), benchmark_datei(name, "txn")]
    return pfade


# ---------- analyze ----------

def test_analyse_ohne_anomalien(cli_runner, quellen, tmp_path):
    ergebnis = cli_runner.invoke(args=["analyze", *quellen("disjoint"), "--max-p", "0", "--max-c", "3",
                                       "--out", str(tmp_path)])
    assert ergebnis.exit_code == 0, ergebnis.output
    assert "Keine Anomalien gefunden." in ergebnis.output
    assert f"Ausgabe: {tmp_path}" in ergebnis.output
    assert (tmp_path / "reports.jsonl").read_text(encoding="utf-8") == ""


def test_analyse_mit_tabelle(cli_runner, quellen, tmp_path):
    ergebnis = cli_runner.invoke(args=["analyze", *quellen("upd"), "--max-p", "0", "--out", str(tmp_path),
                                       "--dump-smt"])
    assert ergebnis.exit_code == 0, ergebnis.output
    assert "Lost Update" in ergebnis.output
    assert "Wiedergabe bestätigt: " in ergebnis.output
    gesamt = ergebnis.output.split("Wiedergabe bestätigt: ")[1].split()[0]
    bestaetigt, alle = gesamt.split("/")
    assert bestaetigt == alle
    assert os.listdir(tmp_path / "smt")


def test_analyse_als_json(cli_runner, quellen, tmp_path):
    ergebnis = cli_runner.invoke(args=["analyze", *quellen("upd"), "--max-p", "0", "--json",
                                       "--out", str(tmp_path)])
    assert ergebnis.exit_code == 0, ergebnis.output
    zeilen = [json.loads(z) for z in ergebnis.output.splitlines() if z.strip()]
    assert zeilen
    assert all(z["status"] == "confirmed" for z in zeilen)
    assert all(z["types"] == ["upd", "upd"] for z in zeilen)


def test_analyse_serialisierbar(cli_runner, quellen, tmp_path):
    ergebnis = cli_runner.invoke(args=["analyze", *quellen("write_skew"), "--spec", "ser", "--max-p", "0",
                                       "--out", str(tmp_path)])
    assert ergebnis.exit_code == 0, ergebnis.output
    assert "Keine Anomalien gefunden." in ergebnis.output


@pytest.mark.parametrize("optionen", [
    ["--max-t", "1"],
    ["--max-c", "2"],
    ["--max-p", "zwei"],
    ["--spec", "si"],
    ["--deadline", "0"],
])
def test_ungueltige_schranken(cli_runner, quellen, tmp_path, optionen):
    ergebnis = cli_runner.invoke(args=["analyze", *quellen("upd"), *optionen, "--out", str(tmp_path)])
    assert ergebnis.exit_code == 2


def test_syntaxfehler_im_programm(cli_runner, benchmark_datei, tmp_path):
    programm = tmp_path / "kaputt.txn"
    programm.write_text("upd(k) { SELECT f AS WHERE this.id = k }\n", encoding="utf-8")
    ergebnis = cli_runner.invoke(args=["analyze", benchmark_datei("upd", "schema"), str(programm),
                                       "--out", str(tmp_path)])
    assert ergebnis.exit_code == 2
    assert "Fehler:" in ergebnis.output
    assert "kaputt.txn" in ergebnis.output


def test_konstante_schleife_ueber_schranke(cli_runner, benchmark_datei, tmp_path):
    programm = tmp_path / "schleife.txn"
    programm.write_text("t() { ITERATE (3) { UPDATE R SET f = 1 WHERE this.id = iter } }\n", encoding="utf-8")
    ergebnis = cli_runner.invoke(args=["analyze", benchmark_datei("upd", "schema"), str(programm),
                                       "--unroll", "2", "--out", str(tmp_path)])
    assert ergebnis.exit_code == 2
    assert "ITERATE(3) überschreitet die Schranke 2" in ergebnis.output
    assert not (tmp_path / "reports.jsonl").exists()


def test_fehlende_datei(cli_runner, benchmark_datei, tmp_path):
    ergebnis = cli_runner.invoke(args=["analyze", benchmark_datei("upd", "schema"), str(tmp_path / "fehlt.txn")])
    assert ergebnis.exit_code == 2


# ---------- replay ----------

def test_golden_wiedergabe(cli_runner, quellen, golden, tmp_path):
    ergebnis = cli_runner.invoke(args=["replay", *quellen("payment"), GOLDEN_CONF, "--trace", "payment.trace",
                                       "--dot", "payment.dot", "--out", str(tmp_path)])
    assert ergebnis.exit_code == 0, ergebnis.output
    assert "Urteil: confirmed" in ergebnis.output
    assert "Klassifikation: intern" in ergebnis.output
    assert "Schritte: 4" in ergebnis.output
    assert (tmp_path / "payment.trace").read_text(encoding="utf-8") == golden("payment.trace")
    dot = (tmp_path / "payment.dot").read_text(encoding="utf-8")
    assert dot.startswith("digraph abhaengigkeiten {")
    assert "color=red" in dot


def test_wiedergabe_ohne_zyklus(cli_runner, quellen, tmp_path):
    conf = tmp_path / "seriell.conf"
    conf.write_text(SERIELL_CONF, encoding="utf-8")
    ergebnis = cli_runner.invoke(args=["replay", *quellen("payment"), str(conf)])
    assert ergebnis.exit_code == 1
    assert "Urteil: cycle-absent" in ergebnis.output


def test_wiedergabe_mit_vertauschten_schritten(cli_runner, quellen, golden, tmp_path):
    zeilen = golden("payment.conf").splitlines(keepends=True)
    # T1 und T3 tauschen die Anfragen
    zeilen[-4], zeilen[-2] = zeilen[-4].replace("Ins1-O1", "Ins1-O2"), zeilen[-2].replace("Ins1-O2", "Ins1-O1")
    conf = tmp_path / "vertauscht.conf"
    conf.write_text("".join(zeilen), encoding="utf-8")
    ergebnis = cli_runner.invoke(args=["replay", *quellen("payment"), str(conf)])
    assert ergebnis.exit_code == 1
    assert "Fehler:" in ergebnis.output


def test_wiedergabe_fehlerhafte_konfiguration(cli_runner, quellen, tmp_path):
    conf = tmp_path / "kaputt.conf"
    conf.write_text("# instances:\nIns1 payment(10)\n", encoding="utf-8")
    ergebnis = cli_runner.invoke(args=["replay", *quellen("payment"), str(conf)])
    assert ergebnis.exit_code == 2
    assert "Zeile 2" in ergebnis.output


def test_analyse_und_wiedergabe_mit_bericht(cli_runner, quellen, tmp_path):
    analyse = cli_runner.invoke(args=["analyze", *quellen("upd"), "--max-p", "0", "--out", str(tmp_path)])
    assert analyse.exit_code == 0, analyse.output
    berichte = str(tmp_path / "reports.jsonl")
    with open(berichte, encoding="utf-8") as datei:
        erster = json.loads(datei.readline())
    conf = str(tmp_path / erster["config"])

    ergebnis = cli_runner.invoke(args=["replay", *quellen("upd"), conf, "--report", berichte, "--index", "1"])
    assert ergebnis.exit_code == 0, ergebnis.output
    assert "Urteil: confirmed" in ergebnis.output

    ergebnis = cli_runner.invoke(args=["replay", *quellen("upd"), conf, "--report", berichte, "--index", "99"])
    assert ergebnis.exit_code == 2


# ---------- oracle ----------

def test_orakel_golden(cli_runner, quellen):
    ergebnis = cli_runner.invoke(args=["oracle", *quellen("payment"), GOLDEN_CONF])
    assert ergebnis.exit_code == 0, ergebnis.output
    assert "Serialisierbar: nein" in ergebnis.output
    assert "Zyklus:" in ergebnis.output


def test_orakel_seriell(cli_runner, quellen, tmp_path):
    conf = tmp_path / "seriell.conf"
    conf.write_text(SERIELL_CONF, encoding="utf-8")
    ergebnis = cli_runner.invoke(args=["oracle", *quellen("payment"), str(conf)])
    assert ergebnis.exit_code == 0, ergebnis.output
    assert "Serialisierbar: ja" in ergebnis.output
    assert "Serielle Reihenfolge: Ins1 Ins2" in ergebnis.output


def test_orakel_zu_viele_schritte(cli_runner, quellen):
    ergebnis = cli_runner.invoke(args=["oracle", *quellen("payment"), GOLDEN_CONF, "--max-steps", "3"])
    assert ergebnis.exit_code == 1


# ---------- Optionen ----------

def test_solverpfad_reihenfolge(monkeypatch):
    monkeypatch.delenv("SOLVER_PATH", raising=False)
    assert CliHandler.solver_pfad(None, {"SOLVER_PATH": ""}) == ""
    assert CliHandler.solver_pfad(None, {"SOLVER_PATH": "cvc5 --lang smt2"}) == "cvc5 --lang smt2"
    assert CliHandler.solver_pfad("z3 -in", {"SOLVER_PATH": "cvc5"}) == "z3 -in"
    monkeypatch.setenv("SOLVER_PATH", "yices-smt2")
    assert CliHandler.solver_pfad("z3 -in", {"SOLVER_PATH": "cvc5"}) == "yices-smt2"


def test_suchkonfiguration_aus_datei_und_optionen():
    datei = {"MAX_P": "0", "MAX_T": "3", "SPEC": "ser", "SOLVER_TIMEOUT": ""}
    suche = CliHandler.search_config({"max_c": "5", "no_inner_loop": True}, datei)
    assert (suche.max_p, suche.max_t, suche.max_c) == (0, 3, 5)
    assert suche.spec == SER
    assert suche.timeout == 120
    assert not suche.inner_loop


def test_suchkonfiguration_ungueltig():
    with pytest.raises(click.BadParameter, match="max_t"):
        CliHandler.search_config({"max_t": "1"}, {})

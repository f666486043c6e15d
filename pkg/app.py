import logging
import os
import sys

import click
from dotenv import dotenv_values
from flask import Flask, json
from werkzeug.utils import secure_filename

from klassen.controller.handler import CliHandler
from klassen.controller.service.manager import AnalyseManager
from klassen.controller.service.service import BerichtService
from klassen.controller.service.solver import create_solver
from klassen.domain.errors import AnalyseFehler, ConfigFormatError, ParseError, ValidationError
from klassen.repository.json_converter import BerichtJSONConverter
from klassen.repository.source_data import QuelltextData
from klassen.view.view import AnomalieAnsicht

# Konfigurationsdatei laden
config = dotenv_values("app.config")

# Erstellen des Haupt-Objekts
anomalie_app = Flask(__name__)

service = BerichtService()  # Aufbereitung der Ergebnisse für die Ausgabe
ansicht = AnomalieAnsicht()  # Gibt die Templates als Text aus

# Logging Konfiguration, Ausgabe in Datei, Datei wird bei jedem Start überschrieben
logging.basicConfig(filename=config.get("LOG_FILE") or "analyse.log", filemode='w',
                    level=(config.get("LOG_LEVEL") or "WARNING").upper(),
                    format='%(asctime)s - %(levelname)s - %(message)s',
                    datefmt='%Y-%m-%d %H:%M:%S')

# Exit-Codes
FEHLGESCHLAGEN = 1
EINGABEFEHLER = 2


def _beenden(fehler: AnalyseFehler):
    """ Eingabefehler -> 2, alle übrigen Analysefehler -> 1 """
    logging.error(f"Abbruch: {fehler}")
    click.echo(f"Fehler: {fehler}", err=True)
    if isinstance(fehler, (ParseError, ValidationError, ConfigFormatError)):
        sys.exit(EINGABEFEHLER)
    sys.exit(FEHLGESCHLAGEN)


def _ausgabe(out: str | None) -> str:
    return out or config.get("OUT_DIR") or "out"


def _unroll(wert) -> int:
    return CliHandler.ganzzahl(wert if wert is not None else config.get("UNROLL"), "unroll", 2)


DATEI = click.Path(exists=True, dir_okay=False)


# Analyse
@anomalie_app.cli.command("analyze")
@click.argument("schema", type=DATEI)
@click.argument("program", type=DATEI)
@click.option("--constraints", type=DATEI, help="Anfangsbedingungen, z.B. 'CUST: EMPTY'")
@click.option("--spec", help="Garantie, z.B. ec, cc, ser oder cc+rc")
@click.option("--max-p", "max_p", help="höchstens max_p serielle Transaktionen")
@click.option("--max-t", "max_t", help="höchstens max_t nebenläufige Transaktionen")
@click.option("--max-c", "max_c", help="höchstens max_c Knoten im Zyklus")
@click.option("--internal-only", is_flag=True, help="nur interne Anomalien")
@click.option("--unroll", help="Schranke für Schleifen")
@click.option("--records", help="Datensätze je Tabelle in der Kodierung")
@click.option("--partitions", help="Anzahl der Partitionen")
@click.option("--timeout", help="Sekunden je Solveraufruf")
@click.option("--solver", help="Solverbefehl, leer für z3 im Prozess")
@click.option("--dump-smt", is_flag=True, help="Probleme als .smt2 ablegen")
@click.option("--no-inner-loop", is_flag=True, help="strukturgleiche Varianten nicht gesondert suchen")
@click.option("--deadline", type=float, help="Frist der gesamten Suche in Sekunden")
@click.option("--out", help="Ausgabeverzeichnis")
@click.option("--json", "als_json", is_flag=True, help="Berichte als JSON-Zeilen ausgeben")
def analyze(schema, program, constraints, solver, dump_smt, out, als_json, **optionen):
    """ Sucht Serialisierbarkeitsanomalien in PROGRAM über SCHEMA """
    suche = CliHandler.search_config(optionen, config)
    pfad = CliHandler.solver_pfad(solver, config)
    manager = AnalyseManager(QuelltextData(schema, program, constraints), suche.unroll)
    try:
        lauf = manager.analysieren(suche, create_solver(pfad, suche.timeout), _ausgabe(out), dump_smt)
    except AnalyseFehler as fehler:
        _beenden(fehler)
    if als_json:
        for eintrag in lauf.entries:
            click.echo(json.dumps(BerichtJSONConverter.serialisieren(eintrag.report), ensure_ascii=False))
    else:
        click.echo(ansicht.zusammenfassung(lauf, service))
    if lauf.failed:
        sys.exit(FEHLGESCHLAGEN)


# Wiedergabe
@anomalie_app.cli.command("replay")
@click.argument("schema", type=DATEI)
@click.argument("program", type=DATEI)
@click.argument("conf", type=DATEI)
@click.option("--report", "report_pfad", type=DATEI, help="reports.jsonl der Analyse")
@click.option("--index", "nummer", type=int, default=1, show_default=True, help="Nummer des Berichts")
@click.option("--unroll", help="Schranke für Schleifen")
@click.option("--trace", help="Dateiname für den Trace-Export, .json für JSON")
@click.option("--dot", help="Dateiname für den DOT-Export")
@click.option("--out", help="Ausgabeverzeichnis")
def replay(schema, program, conf, report_pfad, nummer, unroll, trace, dot, out):
    """ Spielt CONF auf dem Simulator ab und weist den Zyklus nach """
    manager = AnalyseManager(QuelltextData(schema, program), _unroll(unroll))
    bericht = None
    if report_pfad:
        try:
            bericht = manager.bericht_laden(report_pfad, nummer)
        except AnalyseFehler as fehler:
            _beenden(fehler)
        if bericht is None:
            raise click.BadParameter(f"Bericht {nummer} nicht vorhanden", param_hint="--index")
    ziel = _ausgabe(out)
    if trace or dot:
        os.makedirs(ziel, exist_ok=True)
    trace_pfad = os.path.join(ziel, secure_filename(trace)) if trace else None
    try:
        history, graph, pruefung = manager.wiedergeben(conf, bericht, trace_pfad)
    except AnalyseFehler as fehler:
        _beenden(fehler)
    if dot:
        with open(os.path.join(ziel, secure_filename(dot)), 'w', encoding='utf-8') as datei:
            datei.write(ansicht.graph_dot(graph, service, pruefung.cycle))
    click.echo(ansicht.zyklus(pruefung, history))
    if not pruefung.confirmed:
        sys.exit(FEHLGESCHLAGEN)


# Orakel
@anomalie_app.cli.command("oracle")
@click.argument("schema", type=DATEI)
@click.argument("program", type=DATEI)
@click.argument("conf", type=DATEI)
@click.option("--max-steps", "max_schritte", help="höchstens so viele Schritte")
@click.option("--unroll", help="Schranke für Schleifen")
def oracle(schema, program, conf, max_schritte, unroll):
    """ Prüft durch Aufzählung aller seriellen Reihenfolgen, ob CONF serialisierbar ist """
    grenze = CliHandler.ganzzahl(max_schritte if max_schritte is not None else config.get("ORACLE_MAX_STEPS"),
                                 "max-steps", 9)
    manager = AnalyseManager(QuelltextData(schema, program), _unroll(unroll))
    try:
        urteil = manager.orakel(conf, grenze)
    except AnalyseFehler as fehler:
        _beenden(fehler)
    click.echo(ansicht.orakel(urteil))

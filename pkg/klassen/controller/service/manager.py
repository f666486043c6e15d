import logging
import os
from dataclasses import dataclass, field, replace

from werkzeug.utils import secure_filename

from klassen.controller.service.depgraph import DependencyService, OracleVerdict
from klassen.controller.service.program_analysis import check_bounds
from klassen.controller.service.replay import ReplayService
from klassen.controller.service.search import SearchService
from klassen.controller.service.solver import ISolver
from klassen.domain.anomaly_report import AnomalyReport, ReplayStatus, SearchResult, VerifyResult
from klassen.domain.errors import NonRealizableModel, ValidationError
from klassen.domain.search_config import SearchConfig
from klassen.repository.config_data import KonfigurationData
from klassen.repository.interface import IRepository
from klassen.repository.json_converter import BerichtJSONConverter
from klassen.repository.json_data import BerichtJSONData, TraceJSONData
from klassen.repository.trace_data import TraceTextData


@dataclass
class Eintrag:
    """ Ein Bericht mit Ergebnis der automatischen Wiedergabe """
    report: AnomalyReport
    verify: VerifyResult | None = None
    config_file: str | None = None


@dataclass
class AnalyseLauf:
    result: SearchResult
    entries: list = field(default_factory=list)
    out_dir: str = ""

    @property
    def failed(self) -> list:
        return [e for e in self.entries if e.report.status == ReplayStatus.FAILED]


class AnalyseManager:
    """ Verbindet Quelltexte, Suche, Wiedergabe und Ausgabedateien """

    def __init__(self, quellen: IRepository, schranke: int = 2):
        self.quellen = quellen
        self.schranke = schranke
        self._geladen = None

    def laden(self):
        """ (schema, programm, bedingungen), nur einmal gelesen """
        if self._geladen is None:
            self._geladen = self.quellen.laden()
        return self._geladen

    def analysieren(self, config: SearchConfig, solver: ISolver, out_dir: str, dump_smt: bool = False) -> AnalyseLauf:
        schema, programm, bedingungen = self.laden()
        # konstante Schleifen über der Schranke werden vor der Suche abgewiesen
        diagnosen = check_bounds(programm, config.unroll)
        if diagnosen:
            for diagnose in diagnosen:
                logging.error(f"Schranke: {diagnose}")
            raise ValidationError(diagnosen)
        if bedingungen and not config.init_constraints:
            config = replace(config, init_constraints=bedingungen)
        os.makedirs(out_dir, exist_ok=True)
        protokoll = None
        if dump_smt:
            smt_dir = os.path.join(out_dir, "smt")
            os.makedirs(smt_dir, exist_ok=True)

            def protokoll(name, text):
                with open(os.path.join(smt_dir, secure_filename(name)), 'w', encoding='utf-8') as datei:
                    datei.write(text)
        suche = SearchService(programm, schema, config, solver, protokoll)
        ergebnis = suche.find_anomalies()
        wiedergabe = ReplayService(programm, schema, config.unroll)
        lauf = AnalyseLauf(ergebnis, [], out_dir)
        for nummer, bericht in enumerate(ergebnis.reports, start=1):
            lauf.entries.append(self._automatisch(wiedergabe, bericht, nummer, out_dir, schema))
        zeilen = [BerichtJSONConverter.serialisieren(e.report, {"config": e.config_file,
                                                                 "verdict": e.verify.verdict if e.verify else None})
                  for e in lauf.entries]
        BerichtJSONData(os.path.join(out_dir, "reports.jsonl")).speichern(zeilen)
        if ergebnis.truncated:
            logging.warning("Ergebnis unvollständig, Frist abgelaufen")
        return lauf

    def _automatisch(self, wiedergabe: ReplayService, bericht: AnomalyReport, nummer: int, out_dir: str,
                     schema) -> Eintrag:
        """ Konfiguration schreiben, abspielen und den Zyklus nachweisen """
        if bericht.status != ReplayStatus.PENDING or bericht.model is None:
            return Eintrag(bericht)
        try:
            config, _, graph = wiedergabe.realize(bericht.model)
        except NonRealizableModel as fehler:
            logging.error(f"Bericht {nummer} nicht abspielbar: {fehler}")
            return Eintrag(replace(bericht, status=ReplayStatus.FAILED))
        name = secure_filename(f"anomaly_{nummer:03d}_{'_'.join(bericht.types)}.conf")
        KonfigurationData(os.path.join(out_dir, name), schema).speichern(config)
        pruefung = ReplayService.verify(bericht, graph)
        status = ReplayStatus.CONFIRMED if pruefung.confirmed else ReplayStatus.FAILED
        logging.info(f"Bericht {nummer}: {pruefung.verdict} {pruefung.note}".strip())
        return Eintrag(replace(bericht, status=status), pruefung, name)

    def wiedergeben(self, config_pfad: str, bericht: AnomalyReport | None = None, trace_pfad: str | None = None):
        """ Liefert (Historie, Graph, Urteil) für eine gespeicherte Konfiguration """
        schema, programm, _ = self.laden()
        config = KonfigurationData(config_pfad, schema).laden()
        wiedergabe = ReplayService(programm, schema, self.schranke)
        history, graph = wiedergabe.replay(config)
        if trace_pfad:
            # .json als JSON-Dokument, sonst ein Effekt pro Zeile
            ablage = TraceJSONData(trace_pfad) if trace_pfad.endswith(".json") else TraceTextData(trace_pfad)
            ablage.speichern(history)
        pruefung = ReplayService.verify(bericht or AnomalyReport(), graph)
        logging.info(f"Wiedergabe {config_pfad}: {pruefung.verdict}")
        return history, graph, pruefung

    def orakel(self, config_pfad: str, max_schritte: int = 9):
        schema, programm, _ = self.laden()
        config = KonfigurationData(config_pfad, schema).laden()
        # leere Historie ist trivial serialisierbar
        if not config.schedule:
            return OracleVerdict(True)
        history = ReplayService(programm, schema, self.schranke).replay(config)[0]
        return DependencyService.serializability_oracle(history, max_schritte, self.schranke)

    @staticmethod
    def bericht_laden(pfad: str, nummer: int = 1) -> AnomalyReport | None:
        berichte = BerichtJSONData(pfad).laden()
        if not 1 <= nummer <= len(berichte):
            return None
        return berichte[nummer - 1]

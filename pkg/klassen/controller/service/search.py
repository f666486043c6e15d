import logging
import time
from dataclasses import replace
from itertools import combinations_with_replacement

from klassen.controller.service.depgraph import DependencyService
from klassen.controller.service.encoder import Encoder
from klassen.controller.service.solver import ISolver, UNKNOWN
from klassen.domain.anomaly_report import AnomalyReport, ReplayStatus, SearchResult
from klassen.domain.decoded_model import PlanInstance
from klassen.domain.dependency_graph import EdgeKind
from klassen.domain.errors import EncodingError
from klassen.domain.search_config import SearchConfig


class _Abbruch(Exception):
    """ Globale Frist abgelaufen """


class SearchService:
    """ Schrittweise Suche nach Anomalien über Instanzzahl und Zykluslänge

    Zuerst werden Zyklen ohne seriellen Präfix gesucht, danach wird für jeden Zyklus
    ein unabhängiger Präfix aus höchstens max_p seriellen Transaktionen konstruiert.
    """

    def __init__(self, programm, schema, config: SearchConfig, solver: ISolver, protokoll=None):
        self.programm = programm
        self.schema = schema
        self.config = config
        self.solver = solver
        # protokoll(name, text) erhält jedes Problem, z.B. für --dump-smt
        self.protokoll = protokoll
        self.fingerprints = []
        self._start = 0.0
        self._nummer = 0

    def find_anomalies(self) -> SearchResult:
        self._start = time.perf_counter()
        self.fingerprints = []
        self._nummer = 0
        berichte = []
        abgebrochen = False
        typen = self.programm.names()
        try:
            for t in range(2, self.config.max_t + 1):
                for c in range(3, self.config.max_c + 1):
                    # jede Instanz muss im Zyklus vorkommen
                    if c < t:
                        continue
                    for auswahl in combinations_with_replacement(typen, t):
                        berichte += self._zyklen(auswahl, c)
        except _Abbruch:
            abgebrochen = True
            logging.warning(f"Suche nach {self.config.deadline} s abgebrochen, {len(berichte)} Zyklen bisher")
        ergebnis = []
        for bericht in berichte:
            if abgebrochen or bericht.status != ReplayStatus.PENDING:
                ergebnis.append(bericht)
                continue
            try:
                ergebnis.append(self._praefix(bericht))
            except _Abbruch:
                abgebrochen = True
                logging.warning("Frist während der Präfixsuche abgelaufen")
                ergebnis.append(bericht)
        dauer = time.perf_counter() - self._start
        logging.info(f"Suche beendet: {len(ergebnis)} Anomalien in {dauer:.2f} s, {self.solver.calls} Solveraufrufe")
        return SearchResult(tuple(ergebnis), abgebrochen, dauer, self.solver.calls)

    # ---------- erste Stufe: Zyklen ----------

    def _zyklen(self, auswahl: tuple, laenge: int) -> list[AnomalyReport]:
        plan = tuple(PlanInstance(i, typ) for i, typ in enumerate(auswahl, start=1))
        try:
            encoder = self._encoder(plan, laenge, ())
        except EncodingError as fehler:
            logging.warning(f"Plan {list(auswahl)} mit Länge {laenge} nicht kodierbar: {fehler}")
            return []
        berichte = []
        # bis unsat, jeder Fund wird über seinen Fingerabdruck ausgeschlossen
        while True:
            beginn = time.perf_counter()
            ergebnis = self._pruefen(encoder, encoder.enc_neg(self.fingerprints), f"{'_'.join(auswahl)}_c{laenge}")
            if ergebnis.status == UNKNOWN:
                berichte.append(AnomalyReport(types=auswahl, seconds=time.perf_counter() - beginn,
                                              status=ReplayStatus.UNDETERMINED, internal=self.config.internal_only))
                break
            if not ergebnis.sat:
                break
            modell = encoder.decode(ergebnis.model)
            bericht = self._bericht(encoder, modell, auswahl, time.perf_counter() - beginn)
            if bericht is None:
                break
            berichte.append(bericht)
            if self.config.inner_loop:
                berichte += self._aehnliche(encoder, modell, auswahl, laenge)
        return berichte

    def _aehnliche(self, encoder: Encoder, vorlage, auswahl: tuple, laenge: int) -> list[AnomalyReport]:
        """ Strukturgleiche Varianten: Typ und Kantenart je Position bleiben fest """
        struktur = encoder.enc_struct(vorlage)
        berichte = []
        while True:
            beginn = time.perf_counter()
            zusatz = encoder.enc_neg(self.fingerprints) + [struktur]
            ergebnis = self._pruefen(encoder, zusatz, f"{'_'.join(auswahl)}_c{laenge}_struct")
            if not ergebnis.sat:
                return berichte
            bericht = self._bericht(encoder, encoder.decode(ergebnis.model), auswahl, time.perf_counter() - beginn)
            if bericht is None:
                return berichte
            berichte.append(bericht)

    def _bericht(self, encoder: Encoder, modell, auswahl: tuple, dauer: float) -> AnomalyReport | None:
        fingerprint = encoder.fingerprint(modell)
        if fingerprint in self.fingerprints:
            # darf wegen enc_neg nicht vorkommen
            logging.error(f"Zyklus doppelt gefunden: {fingerprint}")
            return None
        self.fingerprints.append(fingerprint)
        tabellen = []
        for knoten, art in zip(modell.cycle, modell.kinds):
            name = encoder.node(knoten).table.name
            if art in EdgeKind.DEPENDENCIES and name not in tabellen:
                tabellen.append(name)
        bericht = AnomalyReport(fingerprint, tuple(auswahl), (), modell, dauer, ReplayStatus.PENDING,
                                self.config.internal_only, DependencyService.anomaly_type(fingerprint),
                                tuple(tabellen))
        logging.info(f"Anomalie gefunden ({bericht.anomaly_type}): {bericht.describe()}")
        return bericht

    # ---------- zweite Stufe: serieller Präfix ----------

    def _praefix(self, bericht: AnomalyReport) -> AnomalyReport:
        # ohne Anfangsbedingungen ist das Modell der ersten Stufe schon ein Präfix der Länge 0
        if not self.config.init_constraints:
            return bericht
        typen = self.programm.names()
        unbestimmt = False
        for p in range(0, self.config.max_p + 1):
            for praefix in combinations_with_replacement(typen, p):
                ergebnis, modell = self.enc_path(bericht, praefix)
                if ergebnis is None:
                    continue
                if ergebnis.status == UNKNOWN:
                    unbestimmt = True
                if modell is not None:
                    logging.info(f"Präfix {list(praefix)} für {bericht.describe()} gefunden")
                    return replace(bericht, prefix=praefix, model=modell)
        status = ReplayStatus.UNDETERMINED if unbestimmt else ReplayStatus.NO_PREFIX
        logging.warning(f"Kein unabhängiger Präfix bis {self.config.max_p} für {bericht.describe()}")
        return replace(bericht, status=status)

    def enc_path(self, bericht: AnomalyReport, praefix: tuple):
        """ Kodierung mit seriellem Präfix und Zyklus auf den Fingerabdruck des Berichts festgelegt """
        anzahl = len(praefix)
        plan = tuple(PlanInstance(i, typ, True) for i, typ in enumerate(praefix, start=1))
        plan += tuple(PlanInstance(anzahl + i, typ) for i, typ in enumerate(bericht.types, start=1))
        try:
            encoder = self._encoder(plan, bericht.length, self.config.init_constraints)
        except EncodingError as fehler:
            logging.warning(f"Präfix {list(praefix)} nicht kodierbar: {fehler}")
            return None, None
        name = f"path_{'_'.join(praefix) or 'leer'}_{'_'.join(bericht.types)}"
        ergebnis = self._pruefen(encoder, [encoder.matches_fingerprint(bericht.fingerprint)], name)
        if not ergebnis.sat:
            return ergebnis, None
        return ergebnis, encoder.decode(ergebnis.model)

    # ---------- Hilfen ----------

    def _encoder(self, plan: tuple, laenge: int, bedingungen: tuple) -> Encoder:
        c = self.config
        return Encoder(self.programm, self.schema, plan, laenge, c.unroll, c.records, c.partitions,
                       c.spec, c.internal_only, bedingungen)

    def _pruefen(self, encoder: Encoder, zusatz: list, name: str):
        # die Frist greift nur zwischen Solveraufrufen
        if self.config.deadline is not None and time.perf_counter() - self._start > self.config.deadline:
            raise _Abbruch()
        self._nummer += 1
        problem = encoder.problem(zusatz, f"{name} ({self._nummer})")
        if self.protokoll is not None:
            self.protokoll(f"{self._nummer:04d}_{name}.smt2", problem)
        ergebnis = self.solver.check(problem)
        logging.info(f"Solveraufruf {self._nummer} {name}: {ergebnis.status} in {ergebnis.seconds:.2f} s")
        return ergebnis


def find_anomalies(programm, schema, config: SearchConfig, solver: ISolver) -> SearchResult:
    return SearchService(programm, schema, config, solver).find_anomalies()

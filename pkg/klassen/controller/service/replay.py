import logging
import string

from klassen.controller.service.dependency_rules import observed_fields, written_fields
from klassen.controller.service.depgraph import DependencyService
from klassen.controller.service.semantics import Simulator
from klassen.domain.anomaly_report import AnomalyReport, Verdict, VerifyResult
from klassen.domain.decoded_model import DecodedModel
from klassen.domain.errors import (BoundExceeded, ConfigFormatError, EvaluationFault, NonRealizableModel,
                                   ScheduleMismatch, UnknownPartition)
from klassen.domain.oracle import ExecutionOracle, InitRow, ScheduleStep
from klassen.domain.schema import ALIVE
from klassen.domain.test_configuration import ConfigInstance, ConfigStep, TestConfiguration


def partition_name(index: int) -> str:
    """ A, B, ..., Z, P26, P27, ... """
    if index < len(string.ascii_uppercase):
        return string.ascii_uppercase[index]
    return f"P{index}"


class ReplayService:
    """ Übersetzt Modelle in Testkonfigurationen und spielt sie auf dem Simulator ab """

    def __init__(self, programm, schema, schranke: int = 2):
        self.programm = programm
        self.schema = schema
        self.schranke = schranke
        self.simulator = Simulator(programm, schema, schranke)

    def to_config(self, modell: DecodedModel) -> TestConfiguration:
        config, _ = self._uebersetzen(modell, self._anfangszeilen(modell))
        # nur Datensätze behalten, die eine Anfrage berührt
        try:
            history = self.simulator.run(self.to_oracle(config))
        except (ScheduleMismatch, EvaluationFault, BoundExceeded, UnknownPartition) as fehler:
            raise NonRealizableModel(f"Modell lässt sich nicht abspielen: {fehler}") from fehler
        beruehrt = {(e.table, e.record_key) for e in history.final.effects.values() if e.query is not None}
        init = tuple(z for z in config.init if (z.table, z.key) in beruehrt)
        return TestConfiguration(init, config.instances, config.schedule)

    def _anfangszeilen(self, modell: DecodedModel) -> tuple:
        zeilen = []
        for tabelle in self.schema.tables:
            for slot, werte in enumerate(modell.init.get(tabelle.name, ())):
                if werte.get(ALIVE, 0) != 1:
                    continue
                schluessel = modell.keys[tabelle.name][slot]
                zeilen.append(InitRow(tabelle.name, schluessel, dict(werte)))
        return tuple(zeilen)

    def _uebersetzen(self, modell: DecodedModel, init: tuple) -> tuple[TestConfiguration, dict]:
        """ Liefert die Konfiguration und die Zuordnung Knoten -> (Instanzlabel, Ordinal) """
        ablauf = modell.schedule()
        # Instanzen nach erstem Schritt nummerieren, danach die übrigen nach Planindex
        reihenfolge = []
        for instanz, _ in ablauf:
            if instanz not in reihenfolge:
                reihenfolge.append(instanz)
        reihenfolge += [p.index for p in modell.plan if p.index not in reihenfolge]
        labels = {instanz: f"Ins{n}" for n, instanz in enumerate(reihenfolge, start=1)}
        # Partitionen nach erster ausführender Verwendung benennen
        partitionen = []
        for knoten in ablauf:
            if modell.tau[knoten] not in partitionen:
                partitionen.append(modell.tau[knoten])
        partitionen += [p for p in range(modell.partitions) if p not in partitionen]
        namen = {p: partition_name(i) for i, p in enumerate(partitionen)}

        instanzen = []
        for instanz in reihenfolge:
            plan = modell.instance(instanz)
            txn = self.programm.transaction(plan.txn)
            args = tuple(modell.args.get(instanz, {}).get(p, 0) for p in txn.params)
            instanzen.append(ConfigInstance(labels[instanz], plan.txn, args,
                                            dict(modell.abstract_values.get(instanz, {}))))
        schritte = []
        zuordnung = {}
        zaehler = {}
        gruppen_je_schritt = self._gruppen(modell, ablauf, partitionen)
        # ohne jede Trennung läuft alles auf der ersten Partition
        verbunden = all(len(gruppen) == 1 for gruppen in gruppen_je_schritt)
        for n, (knoten, gruppen) in enumerate(zip(ablauf, gruppen_je_schritt), start=1):
            instanz = knoten[0]
            zaehler[instanz] = zaehler.get(instanz, 0) + 1
            eigene = partitionen[0] if verbunden else modell.tau[knoten]
            gruppen = sorted(gruppen, key=lambda g: (eigene not in g, min(partitionen.index(p) for p in g)))
            geordnet = []
            for gruppe in gruppen:
                reihe = sorted(gruppe, key=lambda p: (p != eigene, partitionen.index(p)))
                geordnet.append(tuple(namen[p] for p in reihe))
            schritte.append(ConfigStep(f"T{n}", tuple(geordnet), labels[instanz], zaehler[instanz]))
            zuordnung[knoten] = (labels[instanz], zaehler[instanz])
        return TestConfiguration(init, tuple(instanzen), tuple(schritte)), zuordnung

    def _anfrage(self, modell: DecodedModel, knoten: tuple):
        instanz, vorkommen = knoten
        return self.simulator.abgewickelt[modell.instance(instanz).txn].occurrences[vorkommen - 1].query

    def relevant(self, modell: DecodedModel, a: tuple, b: tuple) -> bool:
        """ Kann ein Effekt von a das Ergebnis von b beeinflussen? """
        schreiber, leser = self._anfrage(modell, a), self._anfrage(modell, b)
        if schreiber.table != leser.table:
            return False
        return bool(written_fields(schreiber, self.schema.table(schreiber.table)) & observed_fields(leser))

    def _sieht(self, modell: DecodedModel, a: tuple, b: tuple) -> bool:
        if modell.instance(a[0]).serial:
            return modell.ts[a] < modell.ts[b]
        return modell.visible(a, b)

    def _gruppen(self, modell: DecodedModel, ablauf: list, partitionen: list) -> list[list[set]]:
        """ Verbindungsgruppen je Schritt, so grob wie die relevante Sichtbarkeit des Modells erlaubt

        Eine Partition darf einen Effekt a erst kennen, wenn kein späterer Knoten auf ihr a nicht sehen
        soll, obwohl a sein Ergebnis beeinflussen kann. Von Einzelgruppen ausgehend werden Gruppen gierig
        zusammengelegt, solange der Abgleich keine solche Sperre verletzt.
        """
        position = {knoten: n for n, knoten in enumerate(ablauf)}
        # gesperrt[q][k]: Knoten, die q ab Schritt k nicht kennen darf
        gesperrt = {q: [set() for _ in range(len(ablauf) + 1)] for q in partitionen}
        for c in ablauf:
            for a in ablauf[:position[c]]:
                if not self._sieht(modell, a, c) and self.relevant(modell, a, c):
                    for k in range(position[c] + 1):
                        gesperrt[modell.tau[c]][k].add(a)

        ursprung = {q: set() for q in partitionen}
        bekannt = {q: set() for q in partitionen}
        ergebnis = []
        for k, b in enumerate(ablauf):
            eigene = modell.tau[b]

            def zulaessig(gruppe: set) -> bool:
                effekte = set().union(*(ursprung[q] for q in gruppe))
                for q in gruppe:
                    if (bekannt[q] | effekte) & gesperrt[q][k]:
                        return False
                    if eigene in gruppe and b in gesperrt[q][k + 1]:
                        return False
                return True

            gruppen = [{q} for q in partitionen]
            zusammengelegt = True
            while zusammengelegt:
                zusammengelegt = False
                for i in range(len(gruppen)):
                    for j in range(i + 1, len(gruppen)):
                        if zulaessig(gruppen[i] | gruppen[j]):
                            gruppen[i] = gruppen[i] | gruppen.pop(j)
                            zusammengelegt = True
                            break
                    if zusammengelegt:
                        break
            # Abgleich wie im Simulator, danach der neue Effekt in der eigenen Gruppe
            for gruppe in gruppen:
                effekte = set().union(*(ursprung[q] for q in gruppe))
                for q in gruppe:
                    bekannt[q] |= effekte
            ursprung[eigene].add(b)
            for gruppe in gruppen:
                if eigene in gruppe:
                    for q in gruppe:
                        bekannt[q].add(b)
            ergebnis.append(gruppen)
        return ergebnis

    def to_oracle(self, config: TestConfiguration) -> ExecutionOracle:
        instanzen = {}
        args = {}
        abstrakt = {}
        for instanz in config.instances:
            txn = self.programm.transaction(instanz.txn)
            if txn is None:
                raise ConfigFormatError(f"{instanz.label}: unbekannte Transaktion {instanz.txn}")
            if len(instanz.args) != len(txn.params):
                raise ConfigFormatError(f"{instanz.label}: {len(txn.params)} Argumente erwartet, "
                                        f"{len(instanz.args)} angegeben")
            instanzen[instanz.label] = instanz.txn
            args.update({(instanz.label, p): w for p, w in zip(txn.params, instanz.args)})
            abstrakt.update({(instanz.label, name): w for name, w in instanz.abstract_values.items()})
        schritte = []
        for schritt in config.schedule:
            if schritt.instance not in instanzen:
                raise ConfigFormatError(f"{schritt.label}: unbekannte Instanz {schritt.instance}")
            schritte.append(ScheduleStep(schritt.instance, schritt.ordinal, schritt.partition,
                                         schritt.groups, schritt.label))
        return ExecutionOracle(instanzen, tuple(schritte), args, abstrakt, {}, tuple(config.init))

    def replay(self, config: TestConfiguration):
        """ Spielt die Konfiguration ab und liefert Historie und Abhängigkeitsgraph """
        if not config.schedule:
            raise ConfigFormatError("Ablaufplan ist leer")
        history = self.simulator.run(self.to_oracle(config))
        graph = DependencyService.lift_to_queries(history, schranke=self.schranke)
        logging.info(f"Konfiguration abgespielt: {len(history.steps)} Schritte, {len(graph.edges)} Kanten")
        return history, graph

    def realize(self, modell: DecodedModel):
        """ Konfiguration erzeugen, abspielen und die Sichtbarkeit des Modells nachprüfen """
        config = self.to_config(modell)
        _, zuordnung = self._uebersetzen(modell, config.init)
        try:
            history, graph = self.replay(config)
        except (ScheduleMismatch, EvaluationFault, BoundExceeded, UnknownPartition) as fehler:
            raise NonRealizableModel(f"Modell lässt sich nicht abspielen: {fehler}") from fehler
        zustand = history.final
        erster = {}
        for schritt in history.steps:
            if schritt.effects:
                erster[(schritt.query.instance, schritt.query.ordinal)] = schritt.effects[0]
        # nur Paare, bei denen die Sichtbarkeit ein Ergebnis beeinflussen kann
        for a, ort_a in zuordnung.items():
            for b, ort_b in zuordnung.items():
                if a == b or ort_a not in erster or ort_b not in erster or not self.relevant(modell, a, b):
                    continue
                if self._sieht(modell, a, b) != zustand.visible(erster[ort_a], erster[ort_b]):
                    raise NonRealizableModel(f"Sichtbarkeit {ort_a} -> {ort_b} weicht vom Modell ab")
        return config, history, graph

    @staticmethod
    def verify(report: AnomalyReport, graph) -> VerifyResult:
        """ confirmed, wenn der abgespielte Graph einen Zyklus mit dem Fingerabdruck des Berichts enthält """
        # ohne Fingerabdruck genügt irgendein gültiger Zyklus
        laenge = report.length if report.fingerprint else len(graph.nodes)
        laenge = max(3, laenge)
        zyklen = DependencyService.find_cycles(graph, laenge)
        treffer = [z for z in zyklen if not report.fingerprint or z.fingerprint() == report.fingerprint]
        if not treffer:
            if zyklen:
                return VerifyResult(Verdict.DIFFERENT_CYCLE, False, "anderer Zyklus im Graphen", zyklen[0])
            return VerifyResult(Verdict.CYCLE_ABSENT)
        gesucht = treffer[0].fingerprint()
        intern = any(z.fingerprint() == gesucht
                     for z in DependencyService.find_cycles(graph, laenge, internal_only=True))
        vermerk = ""
        if intern != report.internal:
            vermerk = "intern" if intern else "extern"
        return VerifyResult(Verdict.CONFIRMED, intern, vermerk, treffer[0])

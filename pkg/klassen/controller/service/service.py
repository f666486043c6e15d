from collections import Counter

from klassen.domain.anomaly_report import AnomalyReport, ReplayStatus
from klassen.domain.dependency_graph import Cycle, DependencyGraph, EdgeKind


class BerichtService:
    """ Bereitet Suchergebnisse und Graphen für die Textausgabe auf """

    @staticmethod
    def tabellenzeilen(eintraege: list) -> list[dict]:
        """ Eine Zeile je Anomalie: Länge, Transaktionen, Tabellen, Typ, Analysezeit """
        zeilen = []
        for nummer, eintrag in enumerate(eintraege, start=1):
            bericht: AnomalyReport = eintrag.report
            zeilen.append({
                "nummer": nummer,
                "laenge": bericht.length if bericht.fingerprint else "-",
                "txns": ",".join(bericht.types),
                "praefix": ",".join(bericht.prefix) or "-",
                "tabellen": ",".join(bericht.tables) or "-",
                "typ": bericht.anomaly_type or "-",
                "zeit": f"{bericht.seconds:.2f}",
                "status": bericht.status,
                "datei": eintrag.config_file or "-",
                "zyklus": bericht.describe(),
            })
        return zeilen

    @staticmethod
    def typ_anzahl(eintraege: list) -> dict:
        """ Anzahl je Anomalietyp, unbestimmte Einträge zählen nicht """
        return dict(Counter(e.report.anomaly_type for e in eintraege
                            if e.report.status != ReplayStatus.UNDETERMINED))

    @staticmethod
    def bestaetigt(eintraege: list) -> str:
        """ Anteil bestätigter Wiedergaben, z.B. '3/4' """
        abspielbar = [e for e in eintraege if e.verify is not None or e.report.status == ReplayStatus.FAILED]
        ok = sum(1 for e in abspielbar if e.report.status == ReplayStatus.CONFIRMED)
        return f"{ok}/{len(abspielbar)}"

    @staticmethod
    def dot_kanten(graph: DependencyGraph, zyklus: Cycle | None = None) -> list[dict]:
        """ Kanten für den DOT-Export, Zykluskanten werden hervorgehoben """
        im_zyklus = set()
        if zyklus is not None:
            for kante in zyklus.edges:
                im_zyklus.add((kante.source, kante.target))
                im_zyklus.add((kante.target, kante.source))
        kanten = []
        for kante in sorted(graph.edges):
            beschriftung = f"{kante.kind}({kante.field})" if kante.field else kante.kind
            kanten.append({
                "von": str(kante.source),
                "nach": str(kante.target),
                "label": beschriftung,
                "gerichtet": kante.is_dependency,
                "markiert": (kante.source, kante.target) in im_zyklus,
                "gestrichelt": kante.kind in (EdgeKind.ST, EdgeKind.STP),
            })
        return kanten

from flask import render_template

from klassen.controller.service.depgraph import OracleVerdict
from klassen.domain.anomaly_report import VerifyResult
from klassen.domain.dependency_graph import Cycle, DependencyGraph


class AnomalieAnsicht:
    """ Gibt die Ergebnisse über die Templates als Text aus """

    @staticmethod
    def zusammenfassung(lauf, service) -> str:
        """ Übersichtstabelle nach einer Analyse """
        return render_template(
            'summary.txt',
            zeilen=service.tabellenzeilen(lauf.entries),
            typen=service.typ_anzahl(lauf.entries),
            bestaetigt=service.bestaetigt(lauf.entries),
            abgebrochen=lauf.result.truncated,
            sekunden=f"{lauf.result.seconds:.2f}",
            aufrufe=lauf.result.solver_calls,
            ausgabe=lauf.out_dir,
        )

    @staticmethod
    def zyklus(pruefung: VerifyResult, history) -> str:
        """ Urteil der Wiedergabe mit manifestiertem Zyklus """
        kanten = []
        if pruefung.cycle is not None:
            for kante in pruefung.cycle.edges:
                kanten.append({"von": str(kante.source), "nach": str(kante.target),
                               "art": kante.kind, "feld": kante.field or ""})
        return render_template(
            'cycle.txt',
            urteil=pruefung.verdict,
            intern=pruefung.internal,
            vermerk=pruefung.note,
            kanten=kanten,
            schritte=len(history.steps),
        )

    @staticmethod
    def graph_dot(graph: DependencyGraph, service, zyklus: Cycle | None = None) -> str:
        return render_template(
            'graph.dot',
            knoten=[str(k) for k in graph.nodes],
            kanten=service.dot_kanten(graph, zyklus),
        )

    @staticmethod
    def orakel(urteil: OracleVerdict) -> str:
        kanten = []
        if urteil.cycle is not None:
            kanten = [{"von": str(k.source), "nach": str(k.target), "art": k.kind, "feld": k.field or ""}
                      for k in urteil.cycle.edges]
        return render_template('oracle.txt', serialisierbar=urteil.serializable,
                               reihenfolge=list(urteil.order), kanten=kanten)

from klassen.domain.anomaly_report import AnomalyReport, ReplayStatus
from klassen.domain.decoded_model import DecodedModel, PlanInstance
from klassen.domain.history import History


def _knoten(knoten: tuple) -> str:
    return f"n{knoten[0]}_{knoten[1]}"


def _knoten_lesen(text: str) -> tuple:
    instanz, vorkommen = text[1:].split("_")
    return int(instanz), int(vorkommen)


class BerichtJSONConverter:
    """ Konvertiert Anomalieberichte in Dictionaries für JSON-Zeilen und zurück """

    @staticmethod
    def serialisieren(bericht: AnomalyReport, extra: dict | None = None) -> dict:
        daten = {
            "fingerprint": [list(element) for element in bericht.fingerprint],
            "cycle": bericht.describe(),
            "anomaly_type": bericht.anomaly_type,
            "length": bericht.length,
            "types": list(bericht.types),
            "prefix": list(bericht.prefix),
            "tables": list(bericht.tables),
            "internal": bericht.internal,
            "status": bericht.status,
            "seconds": round(bericht.seconds, 3),
            "model": BerichtJSONConverter._modell(bericht.model) if bericht.model is not None else None,
        }
        # z.B. Dateiname der Konfiguration und Urteil der Wiedergabe
        daten.update(extra or {})
        return daten

    @staticmethod
    def _modell(modell: DecodedModel) -> dict:
        return {
            "plan": [{"index": p.index, "txn": p.txn, "serial": p.serial} for p in modell.plan],
            "partitions": modell.partitions,
            "args": {str(i): werte for i, werte in modell.args.items()},
            "abstract_values": {str(i): werte for i, werte in modell.abstract_values.items()},
            "executed": sorted(_knoten(k) for k in modell.executed),
            "ts": {_knoten(k): w for k, w in sorted(modell.ts.items())},
            "tau": {_knoten(k): w for k, w in sorted(modell.tau.items())},
            "broadcast": {_knoten(k): sorted(w) for k, w in sorted(modell.broadcast.items())},
            "keys": {t: [list(s) for s in slots] for t, slots in modell.keys.items()},
            "init": modell.init,
            "cycle": [_knoten(k) for k in modell.cycle],
            "kinds": list(modell.kinds),
            "fields": list(modell.fields),
            "internal": modell.internal,
        }

    @staticmethod
    def deserialisieren(daten: dict) -> AnomalyReport:
        modell = None
        if daten.get("model"):
            modell = BerichtJSONConverter._modell_lesen(daten["model"])
        return AnomalyReport(
            fingerprint=tuple(tuple(element) for element in daten["fingerprint"]),
            types=tuple(daten.get("types", ())),
            prefix=tuple(daten.get("prefix", ())),
            model=modell,
            seconds=float(daten.get("seconds", 0.0)),
            status=daten.get("status", ReplayStatus.PENDING),
            internal=bool(daten.get("internal", False)),
            anomaly_type=daten.get("anomaly_type", ""),
            tables=tuple(daten.get("tables", ())),
        )

    @staticmethod
    def _modell_lesen(daten: dict) -> DecodedModel:
        def je_knoten(eintrag, umwandeln=lambda w: w):
            return {_knoten_lesen(k): umwandeln(w) for k, w in eintrag.items()}

        return DecodedModel(
            plan=tuple(PlanInstance(p["index"], p["txn"], p["serial"]) for p in daten["plan"]),
            partitions=daten["partitions"],
            args={int(i): werte for i, werte in daten["args"].items()},
            abstract_values={int(i): werte for i, werte in daten["abstract_values"].items()},
            executed=frozenset(_knoten_lesen(k) for k in daten["executed"]),
            ts=je_knoten(daten["ts"]),
            tau=je_knoten(daten["tau"]),
            broadcast=je_knoten(daten["broadcast"], frozenset),
            keys={t: [tuple(s) for s in slots] for t, slots in daten["keys"].items()},
            init=daten["init"],
            cycle=tuple(_knoten_lesen(k) for k in daten["cycle"]),
            kinds=tuple(daten["kinds"]),
            fields=tuple(daten["fields"]),
            internal=daten["internal"],
        )


class TraceJSONConverter:
    """ Export einer Historie: Schritte mit Effekten, Sichtbarkeit über Effektkennungen """

    @staticmethod
    def serialisieren(history: History) -> dict:
        zustand = history.final
        schritte = []
        for schritt in history.steps:
            effekte = []
            for effekt_id in schritt.effects:
                effekt = zustand.effect(effekt_id)
                effekte.append({
                    "id": str(effekt.id),
                    "effect": effekt.label(),
                    "source": str(effekt.source) if effekt.source is not None else None,
                })
            schritte.append({
                "label": schritt.label,
                "query": str(schritt.query),
                "site": schritt.query.uid,
                "partition": schritt.partition,
                "effects": effekte,
            })
        init = [{"id": str(e.id), "effect": e.label()} for e in zustand.ordered() if e.query is None]
        return {
            "init": init,
            "steps": schritte,
            "vis": sorted([str(a), str(b)] for a, b in zustand.vis),
            "final": {f"{t}:{','.join(str(k) for k in s)}": werte for (t, s), werte in
                      sorted(_endzustand(history).items())},
        }


def _endzustand(history: History) -> dict:
    """ Werte nach allen Schreibeffekten in ar-Reihenfolge """
    zeilen = {}
    for effekt in history.final.ordered():
        if effekt.is_write:
            zeilen.setdefault((effekt.table, effekt.record_key), {})[effekt.field] = effekt.value
    return zeilen

import logging
import os

from flask import json

from klassen.domain.anomaly_report import AnomalyReport
from klassen.domain.errors import ConfigFormatError
from klassen.domain.history import History
from klassen.repository.interface import IRepository
from klassen.repository.json_converter import BerichtJSONConverter, TraceJSONConverter


class BerichtJSONData(IRepository):
    """ Anomalieberichte als JSON-Zeilen, ein Bericht pro Zeile """

    def __init__(self, pfad: str):
        self.pfad = pfad

    def speichern(self, zeilen: list):
        """ zeilen enthält Berichte oder bereits serialisierte Dictionaries """
        with open(self.pfad, 'w', encoding='utf-8', newline='\n') as json_file:
            for zeile in zeilen:
                daten = BerichtJSONConverter.serialisieren(zeile) if isinstance(zeile, AnomalyReport) else zeile
                # ensure_ascii=False -> keine Unicode Konvertierung
                json_file.write(json.dumps(daten, ensure_ascii=False, sort_keys=False) + "\n")
        logging.info(f"{len(zeilen)} Bericht(e) in {self.pfad} gespeichert.")

    def laden(self) -> list[AnomalyReport]:
        if not os.path.exists(self.pfad):
            return []
        berichte = []
        with open(self.pfad, 'r', encoding='utf-8') as json_file:
            for nummer, zeile in enumerate(json_file, start=1):
                if not zeile.strip():
                    continue
                try:
                    berichte.append(BerichtJSONConverter.deserialisieren(json.loads(zeile)))
                except (ValueError, KeyError) as fehler:
                    logging.error(f"Bericht in Zeile {nummer} nicht lesbar: {fehler}")
                    raise ConfigFormatError(f"Bericht nicht lesbar: {fehler}", nummer) from fehler
        return berichte


class TraceJSONData(IRepository):
    """ Export einer Historie als JSON-Datei """

    def __init__(self, pfad: str):
        self.pfad = pfad

    def speichern(self, history: History):
        daten = TraceJSONConverter.serialisieren(history)
        with open(self.pfad, 'w', encoding='utf-8', newline='\n') as json_file:
            # indent=4 -> bessere Lesbarkeit
            json.dump(daten, json_file, indent=4, ensure_ascii=False, sort_keys=False)
            json_file.write("\n")
        logging.info(f"Trace in {self.pfad} gespeichert.")

    def laden(self):
        if not os.path.exists(self.pfad):
            return None
        with open(self.pfad, 'r', encoding='utf-8') as json_file:
            return json.load(json_file)

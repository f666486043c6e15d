import logging
import os

from klassen.domain.history import History
from klassen.repository.interface import IRepository
from klassen.repository.trace_converter import TraceTextConverter

# Konverter initialisieren
converter = TraceTextConverter()


class TraceTextData(IRepository):
    """ Trace einer Historie im Zeilenformat """

    def __init__(self, pfad: str):
        self.pfad = pfad

    def speichern(self, history: History):
        with open(self.pfad, 'w', encoding='utf-8', newline='\n') as datei:
            datei.write(converter.serialisieren(history))
        logging.info(f"Trace in {self.pfad} gespeichert.")

    def laden(self) -> list[str]:
        """ Zeilen des Traces, leer wenn die Datei fehlt """
        if not os.path.exists(self.pfad):
            return []
        with open(self.pfad, 'r', encoding='utf-8') as datei:
            return datei.read().splitlines()

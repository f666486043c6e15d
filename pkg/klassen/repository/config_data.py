import logging
import os

from klassen.domain.errors import ConfigFormatError
from klassen.domain.schema import Schema
from klassen.domain.test_configuration import TestConfiguration
from klassen.repository.config_converter import ConfigConverter
from klassen.repository.interface import IRepository

converter = ConfigConverter()


class KonfigurationData(IRepository):
    """ Speichern und Laden einer Testkonfiguration (.conf) """

    def __init__(self, pfad: str, schema: Schema):
        self.pfad = pfad
        self.schema = schema

    def speichern(self, config: TestConfiguration):
        text = converter.serialisieren(config, self.schema)
        with open(self.pfad, 'w', encoding='utf-8', newline='\n') as datei:
            datei.write(text)
        logging.info(f"Konfiguration {self.pfad} gespeichert.")

    def laden(self) -> TestConfiguration:
        if not os.path.exists(self.pfad):
            logging.error(f"Konfiguration {self.pfad} nicht gefunden")
            raise ConfigFormatError(f"Datei {self.pfad} nicht gefunden")
        with open(self.pfad, 'r', encoding='utf-8') as datei:
            text = datei.read()
        return converter.deserialisieren(text, self.schema)

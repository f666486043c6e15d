import logging

from klassen.domain.errors import ParseError
from klassen.repository.interface import IRepository
from klassen.repository.program_converter import ProgramTextConverter, parse_init_constraints
from klassen.repository.schema_converter import parse_schema


def datei_lesen(pfad: str) -> str:
    """ Liest eine Textdatei, Lesefehler werden als ParseError gemeldet """
    try:
        with open(pfad, 'r', encoding='utf-8') as datei:
            return datei.read()
    except (OSError, UnicodeDecodeError) as fehler:
        logging.error(f"Datei {pfad} konnte nicht gelesen werden: {fehler}")
        raise ParseError(f"Datei {pfad} konnte nicht gelesen werden") from fehler


class QuelltextData(IRepository):
    """ Liest Schema, Programm und optionale Anfangsbedingungen aus Textdateien """

    def __init__(self, schema_pfad: str, programm_pfad: str, bedingungen_pfad: str | None = None):
        self.schema_pfad = schema_pfad
        self.programm_pfad = programm_pfad
        self.bedingungen_pfad = bedingungen_pfad

    def speichern(self, objekt):
        """ Quelltexte werden nicht geschrieben """
        return NotImplemented

    def laden(self):
        logging.info(f"Lese Schema {self.schema_pfad} und Programm {self.programm_pfad}")
        schema = parse_schema(datei_lesen(self.schema_pfad), self.schema_pfad)
        programm = ProgramTextConverter.deserialisieren(datei_lesen(self.programm_pfad), schema, self.programm_pfad)
        bedingungen = ()
        if self.bedingungen_pfad:
            bedingungen = parse_init_constraints(datei_lesen(self.bedingungen_pfad), schema, self.bedingungen_pfad)
        return schema, programm, bedingungen

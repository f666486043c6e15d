import logging

from klassen.domain.errors import ParseError
from klassen.domain.schema import ALIVE, Schema, TableDef
from klassen.repository.lexer import TokenStream, tokenize


def parse_schema(text: str, datei: str = "<schema>") -> Schema:
    """ Liest Zeilen der Form TABLE name (f, ...) PK (f, ...), Kommentare mit # """
    strom = TokenStream(tokenize(text, datei))
    tabellen = []
    namen = set()
    while not strom.at_end():
        start = strom.expect_keyword("TABLE")
        name = strom.expect_identifier("Tabellenname")
        if name.text in namen:
            raise ParseError(f"Tabelle {name.text} doppelt deklariert", name.span)
        felder = _namensliste(strom, "Feldname")
        strom.expect_keyword("PK")
        schluessel = _namensliste(strom, "Schlüsselfeld")
        # Invarianten der Tabellendefinition prüfen
        gesehen = set()
        for feld in felder:
            if feld.text == ALIVE:
                raise ParseError(f"Feld {ALIVE} ist reserviert", feld.span)
            if feld.text in gesehen:
                raise ParseError(f"Feld {feld.text} doppelt in Tabelle {name.text}", feld.span)
            gesehen.add(feld.text)
        if not schluessel:
            raise ParseError(f"Leerer Primärschlüssel in Tabelle {name.text}", start.span)
        for feld in schluessel:
            if feld.text not in gesehen:
                raise ParseError(f"Schlüsselfeld {feld.text} ist nicht deklariert", feld.span)
        if len({f.text for f in schluessel}) != len(schluessel):
            raise ParseError(f"Schlüsselfeld doppelt in Tabelle {name.text}", start.span)
        namen.add(name.text)
        tabellen.append(TableDef(name.text, tuple(f.text for f in felder), tuple(f.text for f in schluessel)))
    logging.info(f"Schema mit {len(tabellen)} Tabelle(n) gelesen.")
    return Schema(tuple(tabellen))


def _namensliste(strom: TokenStream, was: str) -> list:
    strom.expect_symbol("(")
    namen = []
    if strom.accept_symbol(")"):
        return namen
    namen.append(strom.expect_identifier(was))
    while strom.accept_symbol(","):
        namen.append(strom.expect_identifier(was))
    strom.expect_symbol(")")
    return namen


def format_schema(schema: Schema) -> str:
    """ Umkehrung von parse_schema """
    zeilen = []
    for tabelle in schema.tables:
        zeilen.append(f"TABLE {tabelle.name} ({', '.join(tabelle.fields)}) PK ({', '.join(tabelle.primary_key)})")
    return "\n".join(zeilen) + ("\n" if zeilen else "")

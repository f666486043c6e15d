import logging
import re

from klassen.domain.errors import ConfigFormatError
from klassen.domain.oracle import InitRow
from klassen.domain.schema import ALIVE, Schema
from klassen.domain.test_configuration import ConfigInstance, ConfigStep, TestConfiguration

INITIALIZE = "# initialize:"
INSTANCES = "# instances:"
SCHEDULE = "# schedule:"

_INSERT = re.compile(r"INSERT\s+INTO\s+(\w+)\s*\(([^)]*)\)\s*VALUES\s*\(([^)]*)\)\s*;", re.IGNORECASE)
_INSTANZ = re.compile(r"(Ins\d+)\s*:\s*(\w+)\s*\(([^)]*)\)((?:\s+[\w\[\],]+\s*=\s*-?\d+)*)\s*$")
_ABSTRAKT = re.compile(r"([\w\[\],]+)\s*=\s*(-?\d+)")
_SCHRITT = re.compile(r"@(T\d+)@partitions((?:\{[^{}]*\})+)\s*:\s*(Ins\d+)-O(\d+)\s*$")


def _zahlen(text: str, zeile: int) -> tuple:
    if not text.strip():
        return ()
    try:
        return tuple(int(teil) for teil in text.split(","))
    except ValueError as fehler:
        raise ConfigFormatError(f"Ganzzahlen erwartet: {text.strip()!r}", zeile) from fehler


class ConfigConverter:
    """ Liest und schreibt Testkonfigurationen im .conf-Format """

    @staticmethod
    def deserialisieren(text: str, schema: Schema) -> TestConfiguration:
        abschnitt = None
        init, instanzen, schritte = [], [], []
        offen, offen_ab = "", 0
        for nummer, zeile in enumerate(text.splitlines(), start=1):
            inhalt = zeile.strip()
            if inhalt in (INITIALIZE, INSTANCES, SCHEDULE):
                if offen.strip():
                    raise ConfigFormatError("INSERT ohne abschließendes ';'", offen_ab)
                abschnitt = inhalt
                continue
            if not inhalt or inhalt.startswith("#"):
                continue
            if abschnitt is None:
                raise ConfigFormatError(f"Zeile außerhalb eines Abschnitts: {inhalt!r}", nummer)
            if abschnitt == INITIALIZE:
                # INSERT darf über mehrere Zeilen gehen
                if not offen:
                    offen_ab = nummer
                offen += " " + inhalt
                if inhalt.endswith(";"):
                    init.append(ConfigConverter._insert(offen.strip(), schema, offen_ab))
                    offen = ""
            elif abschnitt == INSTANCES:
                instanzen.append(ConfigConverter._instanz(inhalt, nummer))
            else:
                schritte.append(ConfigConverter._schritt(inhalt, nummer))
        if offen.strip():
            raise ConfigFormatError("INSERT ohne abschließendes ';'", offen_ab)
        config = TestConfiguration(tuple(init), tuple(instanzen), tuple(schritte))
        ConfigConverter._pruefen(config)
        logging.info(f"Konfiguration gelesen: {len(init)} Zeilen, {len(instanzen)} Instanzen, {len(schritte)} Schritte")
        return config

    @staticmethod
    def _insert(text: str, schema: Schema, zeile: int) -> InitRow:
        treffer = _INSERT.fullmatch(text)
        if treffer is None:
            raise ConfigFormatError(f"INSERT INTO T(f,...) VALUES (...); erwartet: {text!r}", zeile)
        name, felder, werte = treffer.groups()
        # Tabellennamen wie im Schema, Groß-/Kleinschreibung egal
        tabelle = schema.table(name) or next((t for t in schema.tables if t.name.lower() == name.lower()), None)
        if tabelle is None:
            raise ConfigFormatError(f"Unbekannte Tabelle {name}", zeile)
        felder = [f.strip() for f in felder.split(",") if f.strip()]
        werte = _zahlen(werte, zeile)
        if len(felder) != len(werte):
            raise ConfigFormatError(f"{len(felder)} Felder, aber {len(werte)} Werte", zeile)
        belegung = dict(zip(felder, werte))
        for feld in felder:
            if not tabelle.has_field(feld):
                raise ConfigFormatError(f"Tabelle {tabelle.name} hat kein Feld {feld}", zeile)
        fehlend = [f for f in tabelle.primary_key if f not in belegung]
        if fehlend:
            raise ConfigFormatError(f"Schlüsselfeld(er) {', '.join(fehlend)} fehlen", zeile)
        schluessel = tuple(belegung[f] for f in tabelle.primary_key)
        werte = {f: belegung.get(f, 0) for f in tabelle.fields if not tabelle.is_key(f)}
        werte[ALIVE] = belegung.get(ALIVE, 1)
        return InitRow(tabelle.name, schluessel, werte)

    @staticmethod
    def _instanz(inhalt: str, zeile: int) -> ConfigInstance:
        treffer = _INSTANZ.fullmatch(inhalt)
        if treffer is None:
            raise ConfigFormatError(f"Ins<i>: txn(args) erwartet: {inhalt!r}", zeile)
        label, txn, args, rest = treffer.groups()
        abstrakt = {name: int(wert) for name, wert in _ABSTRAKT.findall(rest or "")}
        return ConfigInstance(label, txn, _zahlen(args, zeile), abstrakt)

    @staticmethod
    def _schritt(inhalt: str, zeile: int) -> ConfigStep:
        treffer = _SCHRITT.fullmatch(inhalt)
        if treffer is None:
            raise ConfigFormatError(f"@T<k>@partitions{{...}}: Ins<i>-O<j> erwartet: {inhalt!r}", zeile)
        label, gruppen_text, instanz, ordinal = treffer.groups()
        gruppen = []
        for gruppe in re.findall(r"\{([^{}]*)\}", gruppen_text):
            namen = tuple(n.strip() for n in gruppe.split(",") if n.strip())
            if not namen:
                raise ConfigFormatError("Leere Partitionsgruppe", zeile)
            gruppen.append(namen)
        return ConfigStep(label, tuple(gruppen), instanz, int(ordinal))

    @staticmethod
    def _pruefen(config: TestConfiguration):
        """ Gruppen je Schritt müssen das Partitionsuniversum zerlegen """
        labels = [i.label for i in config.instances]
        if len(set(labels)) != len(labels):
            raise ConfigFormatError("Instanz doppelt deklariert")
        universum = set(config.partitions())
        for schritt in config.schedule:
            if schritt.instance not in labels:
                raise ConfigFormatError(f"{schritt.label}: Instanz {schritt.instance} ist nicht deklariert")
            namen = [n for gruppe in schritt.groups for n in gruppe]
            if len(set(namen)) != len(namen):
                raise ConfigFormatError(f"{schritt.label}: Partition in mehreren Gruppen")
            if set(namen) != universum:
                fehlend = ", ".join(sorted(universum - set(namen)))
                raise ConfigFormatError(f"{schritt.label}: Gruppen decken {fehlend} nicht ab")

    @staticmethod
    def serialisieren(config: TestConfiguration, schema: Schema) -> str:
        # Leerzeichen am Zeilenende wie im bisherigen Format
        zeilen = [INITIALIZE]
        for zeile in config.init:
            tabelle = schema.table(zeile.table)
            werte = []
            for feld in tabelle.fields:
                if tabelle.is_key(feld):
                    werte.append(zeile.key[tabelle.key_index(feld)])
                else:
                    werte.append(zeile.values.get(feld, 0))
            zeilen.append("INSERT INTO ")
            zeilen.append(f"  {tabelle.name}({','.join(tabelle.fields)}) ")
            zeilen.append(f"  VALUES ({','.join(str(w) for w in werte)});")
        zeilen.append(INSTANCES)
        for instanz in config.instances:
            abstrakt = "".join(f" {name}={wert}" for name, wert in sorted(instanz.abstract_values.items()))
            zeilen.append(f"{instanz.label}: {instanz.txn}({','.join(str(a) for a in instanz.args)}){abstrakt}")
        zeilen.append(SCHEDULE + " ")
        for schritt in config.schedule:
            gruppen = "".join("{" + ",".join(g) + "}" for g in schritt.groups)
            zeilen.append(f"@{schritt.label}@partitions{gruppen}: {schritt.instance}-O{schritt.ordinal}")
        return "\n".join(zeilen) + "\n"

import logging
import os

import click

from klassen.domain.guarantee import GuaranteeSpec
from klassen.domain.search_config import SearchConfig


class CliHandler:
    """ Prüft die Kommandozeilenoptionen und baut daraus die Suchkonfiguration """

    @staticmethod
    def ganzzahl(wert, name: str, standard: int) -> int:
        """ Wert aus Option oder app.config, leer bedeutet Standardwert """
        if wert is None or wert == "":
            return standard
        try:
            return int(wert)
        except (TypeError, ValueError):
            logging.error(f"Ungültiger Wert für {name}: {wert}")
            raise click.BadParameter(f"{wert!r} ist keine Ganzzahl", param_hint=f"--{name}")

    @staticmethod
    def spec(text: str) -> GuaranteeSpec:
        try:
            return GuaranteeSpec.parse(text)
        except ValueError as fehler:
            logging.error(f"Ungültige Garantie: {text}")
            raise click.BadParameter(str(fehler), param_hint="--spec")

    @staticmethod
    def search_config(optionen: dict, config: dict) -> SearchConfig:
        """ Optionen überschreiben app.config; alle Schranken werden vor der Analyse geprüft """
        def wert(name, schluessel, standard):
            return CliHandler.ganzzahl(optionen.get(name) if optionen.get(name) is not None else config.get(schluessel),
                                       name.replace("_", "-"), standard)

        deadline = optionen.get("deadline")
        suche = SearchConfig(
            max_p=wert("max_p", "MAX_P", 1),
            max_t=wert("max_t", "MAX_T", 2),
            max_c=wert("max_c", "MAX_C", 4),
            spec=CliHandler.spec(optionen.get("spec") or config.get("SPEC") or "ec"),
            internal_only=bool(optionen.get("internal_only")),
            timeout=wert("timeout", "SOLVER_TIMEOUT", 120),
            records=wert("records", "RECORDS", 4),
            unroll=wert("unroll", "UNROLL", 2),
            partitions=wert("partitions", "PARTITIONS", 2),
            inner_loop=not optionen.get("no_inner_loop"),
            deadline=float(deadline) if deadline is not None else None,
        )
        fehler = suche.validate()
        if suche.deadline is not None and suche.deadline <= 0:
            fehler.append("deadline muss positiv sein")
        if fehler:
            for meldung in fehler:
                logging.error(f"Ungültige Schranke: {meldung}")
            raise click.BadParameter("; ".join(fehler))
        return suche

    @staticmethod
    def solver_pfad(option: str | None, config: dict) -> str:
        """ Umgebungsvariable vor Option vor app.config, leer heißt z3 im Prozess """
        umgebung = os.environ.get("SOLVER_PATH")
        if umgebung:
            return umgebung
        if option:
            return option
        return config.get("SOLVER_PATH") or ""

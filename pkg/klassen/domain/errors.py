class AnalyseFehler(Exception):
    """ Basisklasse aller Fehler der Anomalie-Analyse """


class ParseError(AnalyseFehler):
    """ Syntaxfehler in Schema, Programm oder Konfiguration """

    def __init__(self, message: str, span=None):
        self.message = message
        self.span = span  # SourceSpan oder None
        ort = f"{span}: " if span is not None else ""
        super().__init__(f"{ort}{message}")


class ValidationError(AnalyseFehler):
    """ Programm verletzt die Invarianten des Kernmodells """

    def __init__(self, diagnostics: list):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


class EvaluationFault(AnalyseFehler):
    """ Laufzeitfehler bei der Auswertung eines Ausdrucks (bricht den Schritt ab) """


class ScheduleMismatch(AnalyseFehler):
    """ Ablaufplan passt nicht zum Kontrollfluss der Instanzen """


class UnknownPartition(AnalyseFehler):
    """ Partition gehört nicht zum Partitionsuniversum """


class BoundExceeded(AnalyseFehler):
    """ Schleife oder Suche überschreitet die konfigurierte Schranke """


class EncodingError(AnalyseFehler):
    """ Programm oder Schranken lassen sich nicht kodieren """


class SolverError(AnalyseFehler):
    """ Solver konnte nicht gestartet werden oder lieferte unbrauchbare Ausgabe """


class ModelDecodeError(AnalyseFehler):
    """ Modelltext des Solvers ist nicht lesbar """


class ConfigFormatError(AnalyseFehler):
    """ Testkonfiguration (.conf) ist fehlerhaft """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        ort = f"Zeile {line}: " if line is not None else ""
        super().__init__(f"{ort}{message}")


class NonRealizableModel(AnalyseFehler):
    """ Sichtbarkeit eines Modells lässt sich nicht durch Partitionierung nachstellen """


class OracleSizeExceeded(AnalyseFehler):
    """ Historie ist für das Brute-Force-Orakel zu groß """


class UnknownQuery(AnalyseFehler):
    """ Anfrage-Kennung existiert im (abgewickelten) Programm nicht """

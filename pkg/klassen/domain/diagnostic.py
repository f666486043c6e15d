from dataclasses import dataclass

from klassen.domain.source_span import SourceSpan


@dataclass(frozen=True)
class Diagnostic:
    """ Meldung der Validierung mit Quellposition """
    message: str
    span: SourceSpan | None = None

    def __str__(self):
        if self.span is None:
            return self.message
        return f"{self.span}: {self.message}"

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """ Position eines Knotens im Quelltext (1-basiert) """
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"

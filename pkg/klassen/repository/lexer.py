import re
from dataclasses import dataclass

from klassen.domain.errors import ParseError
from klassen.domain.source_span import SourceSpan

# Schlüsselwörter sind nicht case-sensitiv und keine gültigen Bezeichner
KEYWORDS = frozenset({
    "SELECT", "AS", "WHERE", "UPDATE", "SET", "INSERT", "INTO", "VALUES", "DELETE", "FROM",
    "IF", "ITERATE", "SKIP", "AND", "OR", "NOT", "TRUE", "FALSE", "MIN", "MAX",
    "ITER", "SIZE", "PROJ", "ANY", "THIS", "TABLE", "PK", "EMPTY",
})

NUMBER = "NUMBER"
IDENT = "IDENT"
SYMBOL = "SYMBOL"
EOF = "EOF"

# längere Operatoren zuerst
_MUSTER = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<symbol><=|>=|[(){},;.@+\-*/<=>:])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan

    def is_keyword(self, *woerter: str) -> bool:
        return self.kind == IDENT and self.text.upper() in woerter

    def is_symbol(self, *zeichen: str) -> bool:
        return self.kind == SYMBOL and self.text in zeichen


def tokenize(text: str, datei: str = "<text>") -> list[Token]:
    """ Zerlegt den Text in Tokens, das letzte Token ist immer EOF """
    tokens = []
    zeile, zeilenanfang, pos = 1, 0, 0
    while pos < len(text):
        treffer = _MUSTER.match(text, pos)
        spalte = pos - zeilenanfang + 1
        if treffer is None:
            raise ParseError(f"Unerwartetes Zeichen {text[pos]!r}", SourceSpan(datei, zeile, spalte))
        art = treffer.lastgroup
        wert = treffer.group()
        span = SourceSpan(datei, zeile, spalte, len(wert))
        if art == "nl":
            zeile += 1
            zeilenanfang = treffer.end()
        elif art == "number":
            tokens.append(Token(NUMBER, wert, span))
        elif art == "ident":
            tokens.append(Token(IDENT, wert, span))
        elif art == "symbol":
            tokens.append(Token(SYMBOL, wert, span))
        pos = treffer.end()
    tokens.append(Token(EOF, "", SourceSpan(datei, zeile, pos - zeilenanfang + 1, 0)))
    return tokens


class TokenStream:
    """ Cursor über der Tokenliste mit Rücksetzpunkt für Backtracking """

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, abstand: int = 1) -> Token:
        return self.tokens[min(self.pos + abstand, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.current
        if token.kind != EOF:
            self.pos += 1
        return token

    def at_end(self) -> bool:
        return self.current.kind == EOF

    def error(self, meldung: str, token: Token | None = None) -> ParseError:
        token = token or self.current
        gefunden = token.text or "Dateiende"
        return ParseError(f"{meldung}, gefunden: {gefunden!r}", token.span)

    def expect_symbol(self, zeichen: str) -> Token:
        if not self.current.is_symbol(zeichen):
            raise self.error(f"{zeichen!r} erwartet")
        return self.advance()

    def expect_keyword(self, wort: str) -> Token:
        if not self.current.is_keyword(wort):
            raise self.error(f"{wort} erwartet")
        return self.advance()

    def accept_symbol(self, zeichen: str) -> bool:
        if self.current.is_symbol(zeichen):
            self.advance()
            return True
        return False

    def accept_keyword(self, wort: str) -> bool:
        if self.current.is_keyword(wort):
            self.advance()
            return True
        return False

    def expect_identifier(self, was: str = "Bezeichner") -> Token:
        token = self.current
        if token.kind != IDENT or token.text.upper() in KEYWORDS or token.text == "_":
            raise self.error(f"{was} erwartet")
        return self.advance()

    def expect_number(self) -> int:
        token = self.current
        if token.kind != NUMBER:
            raise self.error("Zahl erwartet")
        self.advance()
        return int(token.text)

import re

from klassen.domain.errors import ModelDecodeError

# ---------- Terme ----------

TRUE = "true"
FALSE = "false"


def num(wert: int) -> str:
    return str(wert) if wert >= 0 else f"(- {-wert})"


def and_(*terme) -> str:
    terme = [t for t in terme if t != TRUE]
    if FALSE in terme:
        return FALSE
    if not terme:
        return TRUE
    if len(terme) == 1:
        return terme[0]
    return f"(and {' '.join(terme)})"


def or_(*terme) -> str:
    terme = [t for t in terme if t != FALSE]
    if TRUE in terme:
        return TRUE
    if not terme:
        return FALSE
    if len(terme) == 1:
        return terme[0]
    return f"(or {' '.join(terme)})"


def not_(term: str) -> str:
    if term == TRUE:
        return FALSE
    if term == FALSE:
        return TRUE
    return f"(not {term})"


def implies(links: str, rechts: str) -> str:
    if links == FALSE or rechts == TRUE:
        return TRUE
    if links == TRUE:
        return rechts
    return f"(=> {links} {rechts})"


def ite(bedingung: str, dann: str, sonst: str) -> str:
    if bedingung == TRUE:
        return dann
    if bedingung == FALSE:
        return sonst
    return f"(ite {bedingung} {dann} {sonst})"


def eq(a: str, b: str) -> str:
    return TRUE if a == b else f"(= {a} {b})"


def distinct(*terme) -> str:
    if len(terme) < 2:
        return TRUE
    return f"(distinct {' '.join(terme)})"


def op(operator: str, a: str, b: str) -> str:
    return f"({operator} {a} {b})"


def lt(a: str, b: str) -> str:
    return op("<", a, b)


def le(a: str, b: str) -> str:
    return op("<=", a, b)


def add(*terme) -> str:
    if not terme:
        return "0"
    if len(terme) == 1:
        return terme[0]
    return f"(+ {' '.join(terme)})"


ARITH = {"+": "+", "-": "-", "*": "*", "/": "div"}
COMPARE = {"<": "<", "<=": "<=", "=": "=", ">": ">", ">=": ">="}


def lex_less(links: list, rechts: list) -> str:
    """ Lexikographisch kleiner für gleich lange Termfolgen """
    if not links:
        return FALSE
    kopf = lt(links[0], rechts[0])
    if len(links) == 1:
        return kopf
    return or_(kopf, and_(eq(links[0], rechts[0]), lex_less(links[1:], rechts[1:])))


class Script:
    """ Sammelt Deklarationen und Zusicherungen eines Problems im SMT-LIB-Format """

    def __init__(self):
        self.declarations = []
        self.assertions = []
        self.sorts = {}

    def declare(self, name: str, sorte: str) -> str:
        if name not in self.sorts:
            self.sorts[name] = sorte
            self.declarations.append(f"(declare-const {name} {sorte})")
        return name

    def define(self, name: str, sorte: str, term: str) -> str:
        """ Zwischenterm als Konstante mit Gleichung, hält den Text klein """
        if name not in self.sorts:
            self.declare(name, sorte)
            self.add(eq(name, term))
        return name

    def lazy(self, name: str, sorte: str, bauen) -> str:
        """ Wie define, der Name ist aber schon vor dem Aufbau des Terms deklariert (rekursive Sichten) """
        if name not in self.sorts:
            self.declare(name, sorte)
            self.add(eq(name, bauen()))
        return name

    def add(self, term: str):
        if term != TRUE:
            self.assertions.append(f"(assert {term})")

    def text(self, kommentar: str = "") -> str:
        zeilen = []
        if kommentar:
            zeilen.extend(f"; {z}" for z in kommentar.splitlines())
        zeilen.append("(set-option :produce-models true)")
        zeilen.extend(self.declarations)
        zeilen.extend(self.assertions)
        zeilen.append("(check-sat)")
        zeilen.append("(get-model)")
        return "\n".join(zeilen) + "\n"


# ---------- Modelle ----------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|(\|[^|]*\|)|([^\s()|]+))")


def parse_sexpr(text: str) -> list:
    """ Liest eine Folge von S-Ausdrücken als verschachtelte Listen """
    stapel = [[]]
    position = 0
    while position < len(text):
        treffer = _TOKEN.match(text, position)
        if treffer is None or treffer.end() == position:
            if text[position:].strip():
                raise ModelDecodeError(f"Unlesbares Zeichen an Position {position}")
            break
        position = treffer.end()
        auf, zu, zitiert, atom = treffer.groups()
        if auf:
            stapel.append([])
        elif zu:
            if len(stapel) == 1:
                raise ModelDecodeError("Schließende Klammer ohne Gegenstück")
            fertig = stapel.pop()
            stapel[-1].append(fertig)
        elif zitiert:
            stapel[-1].append(zitiert[1:-1])
        elif atom is not None:
            stapel[-1].append(atom)
    if len(stapel) != 1:
        raise ModelDecodeError("Offene Klammer im Modelltext")
    return stapel[0]


def _wert(ausdruck):
    if isinstance(ausdruck, str):
        if ausdruck == "true":
            return True
        if ausdruck == "false":
            return False
        try:
            return int(ausdruck)
        except ValueError as fehler:
            raise ModelDecodeError(f"Unerwarteter Wert {ausdruck!r}") from fehler
    if len(ausdruck) == 2 and ausdruck[0] == "-":
        return -_wert(ausdruck[1])
    raise ModelDecodeError(f"Unerwarteter Wert {ausdruck!r}")


def parse_model(text: str) -> dict:
    """ define-fun-Einträge eines Modells als Name -> int oder bool """
    belegung = {}

    def sammeln(knoten):
        if not isinstance(knoten, list) or not knoten:
            return
        if knoten[0] == "define-fun":
            if len(knoten) != 5:
                raise ModelDecodeError(f"Unvollständiges define-fun: {knoten!r}")
            _, name, parameter, _sorte, rumpf = knoten
            if not parameter:
                belegung[name] = _wert(rumpf)
            return
        for kind in knoten:
            sammeln(kind)

    for ausdruck in parse_sexpr(text):
        sammeln(ausdruck)
    return belegung

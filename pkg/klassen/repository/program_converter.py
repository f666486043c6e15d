import logging

from klassen.domain.command import If, Iterate, QueryCmd, Seq, Skip, sequence
from klassen.domain.errors import ParseError, ValidationError
from klassen.domain.expression import (And, Any, AnyValue, Arg, BinOp, BoolConst, Cmp, CMP_OPS,
                                       IntConst, Iter, Not, Or, Proj, Size, ThisField)
from klassen.domain.program import Program, Transaction
from klassen.domain.query import Delete, Insert, Select, SelectAgg, Update
from klassen.domain.schema import Schema
from klassen.domain.search_config import InitConstraint
from klassen.repository.lexer import IDENT, NUMBER, TokenStream, tokenize


class _Backtrack(Exception):
    pass


class ProgramParser:
    """ Rekursiver Abstieg über der Token-Folge eines .txn-Textes """

    def __init__(self, text: str, schema: Schema, datei: str = "<program>"):
        self.strom = TokenStream(tokenize(text, datei))
        self.schema = schema
        self.abs_zaehler = 0
        # Tabellenangaben der aktuell gelesenen Anfrage
        self.hinweise = []

    # ---------- Programm und Anweisungen ----------

    def program(self) -> Program:
        transaktionen = []
        while not self.strom.at_end():
            transaktionen.append(self.transaction())
        return Program(tuple(transaktionen))

    def transaction(self) -> Transaction:
        name = self.strom.expect_identifier("Transaktionsname")
        self.strom.expect_symbol("(")
        parameter = []
        if not self.strom.current.is_symbol(")"):
            parameter.append(self.strom.expect_identifier("Parameter").text)
            while self.strom.accept_symbol(","):
                parameter.append(self.strom.expect_identifier("Parameter").text)
        self.strom.expect_symbol(")")
        rumpf = self.block()
        return Transaction(name.text, tuple(parameter), rumpf, name.span)

    def block(self):
        self.strom.expect_symbol("{")
        anweisungen = []
        while not self.strom.current.is_symbol("}"):
            anweisung, ist_block = self.statement()
            anweisungen.append(anweisung)
            if self.strom.accept_symbol(";") or ist_block:
                continue
            if not self.strom.current.is_symbol("}"):
                raise self.strom.error("';' oder '}' erwartet")
        self.strom.expect_symbol("}")
        return sequence(anweisungen)

    def statement(self) -> tuple:
        """ Liefert (Anweisung, endet_mit_block) """
        token = self.strom.current
        if token.is_keyword("IF"):
            self.strom.advance()
            self.strom.expect_symbol("(")
            bedingung = self.boolean()
            self.strom.expect_symbol(")")
            return If(bedingung, self.block(), token.span), True
        if token.is_keyword("ITERATE"):
            self.strom.advance()
            self.strom.expect_symbol("(")
            anzahl = self.expr()
            self.strom.expect_symbol(")")
            return Iterate(anzahl, self.block(), token.span), True
        if token.is_keyword("SKIP"):
            self.strom.advance()
            return Skip(token.span), False
        tabelle = None
        if self.strom.accept_symbol("@"):
            tabelle = self._tabelle(self.strom.expect_identifier("Tabellenname"))
        return QueryCmd(self.query(tabelle), token.span), False

    # ---------- Anfragen ----------

    def query(self, explizit: str | None):
        self.hinweise = []
        token = self.strom.current
        if token.is_keyword("SELECT"):
            anfrage = self._select()
        elif token.is_keyword("UPDATE"):
            anfrage = self._update()
        elif token.is_keyword("INSERT"):
            anfrage = self._insert()
        elif token.is_keyword("DELETE"):
            anfrage = self._delete()
        else:
            raise self.strom.error("Anfrage erwartet")
        tabelle = self._tabelle_aufloesen(explizit, token)
        return anfrage(tabelle, token.span)

    def _select(self):
        self.strom.advance()
        agg = None
        if self.strom.current.is_keyword("MIN", "MAX"):
            agg = self.strom.advance().text.lower()
            self.strom.expect_symbol("(")
            feld = self._feld_qualifiziert()
            self.strom.expect_symbol(")")
        else:
            feld = self._feld_qualifiziert()
        self.strom.expect_keyword("AS")
        variable = self.strom.expect_identifier("Ergebnisvariable").text
        bedingung = self._where()
        if agg is not None:
            return lambda t, s: SelectAgg(t, agg, feld, variable, bedingung, s)
        return lambda t, s: Select(t, feld, variable, bedingung, s)

    def _update(self):
        self.strom.advance()
        if not self.strom.current.is_keyword("SET"):
            self.hinweise.append(self._tabelle(self.strom.expect_identifier("Tabellenname")))
        self.strom.expect_keyword("SET")
        feld = self._feld_qualifiziert()
        self.strom.expect_symbol("=")
        wert = self.expr()
        bedingung = self._where()
        return lambda t, s: Update(t, feld, wert, bedingung, s)

    def _insert(self):
        self.strom.advance()
        self.strom.expect_keyword("INTO")
        self.hinweise.append(self._tabelle(self.strom.expect_identifier("Tabellenname")))
        self.strom.expect_symbol("(")
        felder = [self.strom.expect_identifier("Feldname")]
        while self.strom.accept_symbol(","):
            felder.append(self.strom.expect_identifier("Feldname"))
        self.strom.expect_symbol(")")
        self.strom.expect_keyword("VALUES")
        self.strom.expect_symbol("(")
        werte = [self.expr()]
        while self.strom.accept_symbol(","):
            werte.append(self.expr())
        schluss = self.strom.expect_symbol(")")
        if len(felder) != len(werte):
            raise ParseError("Anzahl der Felder und Werte von INSERT verschieden", schluss.span)
        zuweisungen = tuple((f.text, w) for f, w in zip(felder, werte))
        return lambda t, s: Insert(t, zuweisungen, s)

    def _delete(self):
        self.strom.advance()
        if self.strom.accept_keyword("FROM"):
            self.hinweise.append(self._tabelle(self.strom.expect_identifier("Tabellenname")))
        bedingung = self._where()
        return lambda t, s: Delete(t, bedingung, s)

    def _where(self):
        if self.strom.accept_keyword("WHERE"):
            return self.boolean()
        return BoolConst(True)

    def _feld_qualifiziert(self) -> str:
        name = self.strom.expect_identifier("Feldname")
        if self.strom.current.is_symbol(".") and self.schema.table(name.text) is not None:
            self.strom.advance()
            self.hinweise.append(name.text)
            return self.strom.expect_identifier("Feldname").text
        return name.text

    def _tabelle(self, token) -> str:
        if self.schema.table(token.text) is None:
            raise ParseError(f"Unbekannte Tabelle {token.text}", token.span)
        return token.text

    def _tabelle_aufloesen(self, explizit, token) -> str:
        kandidaten = set(self.hinweise)
        if explizit is not None:
            kandidaten.add(explizit)
        if len(kandidaten) > 1:
            raise ParseError(f"Widersprüchliche Tabellenangaben {sorted(kandidaten)}", token.span)
        if kandidaten:
            return kandidaten.pop()
        if len(self.schema.tables) == 1:
            return self.schema.tables[0].name
        # wird von der Validierung gemeldet
        return ""

    # ---------- Ausdrücke ----------

    def expr(self):
        links = self._term()
        while self.strom.current.is_symbol("+", "-"):
            op = self.strom.advance()
            links = BinOp(op.text, links, self._term(), op.span)
        return links

    def _term(self):
        links = self._factor()
        while self.strom.current.is_symbol("*", "/"):
            op = self.strom.advance()
            links = BinOp(op.text, links, self._factor(), op.span)
        return links

    def _factor(self):
        token = self.strom.current
        if token.kind == NUMBER:
            return IntConst(self.strom.expect_number(), token.span)
        if token.is_symbol("-") and self.strom.peek().kind == NUMBER:
            self.strom.advance()
            return IntConst(-self.strom.expect_number(), token.span)
        if token.is_symbol("("):
            self.strom.advance()
            innen = self.expr()
            self.strom.expect_symbol(")")
            return innen
        if token.kind != IDENT:
            raise self.strom.error("Ausdruck erwartet")
        if token.text == "_":
            self.strom.advance()
            return AnyValue(token.span)
        if token.is_keyword("ITER"):
            self.strom.advance()
            return Iter(token.span)
        if token.is_keyword("SIZE"):
            self.strom.advance()
            self.strom.expect_symbol("(")
            variable = self.strom.expect_identifier("Ergebnisvariable").text
            self.strom.expect_symbol(")")
            return Size(variable, token.span)
        if token.is_keyword("PROJ"):
            self.strom.advance()
            self.strom.expect_symbol("(")
            feld = self._feld_qualifiziert()
            self.strom.expect_symbol(",")
            variable = self.strom.expect_identifier("Ergebnisvariable").text
            self.strom.expect_symbol(",")
            index = self.expr()
            self.strom.expect_symbol(")")
            return Proj(feld, variable, index, token.span)
        if token.is_keyword("THIS"):
            self.strom.advance()
            self.strom.expect_symbol(".")
            return ThisField(self.strom.expect_identifier("Feldname").text, token.span)
        if token.is_keyword("ANY"):
            self.strom.advance()
            self.strom.expect_symbol("{")
            bedingung = self.boolean()
            self.strom.expect_symbol("}")
            self.abs_zaehler += 1
            return Any(bedingung, f"abs_{self.abs_zaehler}", token.span)
        name = self.strom.expect_identifier()
        if self.strom.current.is_symbol("."):
            # T.f im WHERE entspricht this.f
            self.hinweise.append(self._tabelle(name))
            self.strom.advance()
            return ThisField(self.strom.expect_identifier("Feldname").text, name.span)
        return Arg(name.text, name.span)

    def boolean(self):
        links = self._und()
        while self.strom.current.is_keyword("OR"):
            op = self.strom.advance()
            links = Or(links, self._und(), op.span)
        return links

    def _und(self):
        links = self._nicht()
        while self.strom.current.is_keyword("AND"):
            op = self.strom.advance()
            links = And(links, self._nicht(), op.span)
        return links

    def _nicht(self):
        token = self.strom.current
        if token.is_keyword("NOT"):
            self.strom.advance()
            return Not(self._nicht(), token.span)
        return self._atom()

    def _atom(self):
        token = self.strom.current
        if token.is_keyword("TRUE"):
            self.strom.advance()
            return BoolConst(True, token.span)
        if token.is_keyword("FALSE"):
            self.strom.advance()
            return BoolConst(False, token.span)
        if token.is_symbol("("):
            # '(' kann eine boolesche Klammer oder den Anfang eines Vergleichs öffnen
            merke, hinweise, zaehler = self.strom.pos, list(self.hinweise), self.abs_zaehler
            try:
                self.strom.advance()
                innen = self.boolean()
                self.strom.expect_symbol(")")
                if self.strom.current.is_symbol(*CMP_OPS, "+", "-", "*", "/"):
                    raise _Backtrack()
                return innen
            except (ParseError, _Backtrack):
                self.strom.pos, self.hinweise, self.abs_zaehler = merke, hinweise, zaehler
        return self._vergleich()

    def _vergleich(self):
        links = self.expr()
        op = self.strom.current
        if not op.is_symbol(*CMP_OPS):
            raise self.strom.error("Vergleichsoperator erwartet")
        self.strom.advance()
        return Cmp(links, op.text, self.expr(), op.span)


def parse_program(text: str, schema: Schema, datei: str = "<program>") -> Program:
    """ Liest ein Programm und validiert es gegen das Schema """
    # Import hier, da die Analyse ihrerseits den Drucker verwendet
    from klassen.controller.service.program_analysis import validate_program
    programm = ProgramParser(text, schema, datei).program()
    diagnosen = validate_program(schema, programm)
    if diagnosen:
        for diagnose in diagnosen:
            logging.error(f"Validierung: {diagnose}")
        raise ValidationError(diagnosen)
    logging.info(f"Programm mit {len(programm.transactions)} Transaktion(en) gelesen.")
    return programm


def parse_init_constraints(text: str, schema: Schema, datei: str = "<constraints>") -> tuple:
    """ Zeilen 'TABELLE: EMPTY' oder 'TABELLE: <bool über this.f>' """
    bedingungen = []
    for nummer, zeile in enumerate(text.splitlines(), start=1):
        inhalt = zeile.split("#", 1)[0].strip()
        if not inhalt:
            continue
        if ":" not in inhalt:
            raise ParseError(f"':' erwartet in Zeile {nummer}")
        name, rest = (teil.strip() for teil in inhalt.split(":", 1))
        if schema.table(name) is None:
            raise ParseError(f"Unbekannte Tabelle {name} in Zeile {nummer}")
        if rest.upper() == "EMPTY":
            bedingungen.append(InitConstraint(name, empty=True))
            continue
        parser = ProgramParser(rest, schema, datei)
        praedikat = parser.boolean()
        if not parser.strom.at_end():
            raise parser.strom.error("Ende der Bedingung erwartet")
        bedingungen.append(InitConstraint(name, predicate=praedikat))
    return tuple(bedingungen)


# ---------- Ausgabe ----------

def _expr_text(ausdruck) -> str:
    if isinstance(ausdruck, IntConst):
        return str(ausdruck.value)
    if isinstance(ausdruck, Arg):
        return ausdruck.name
    if isinstance(ausdruck, BinOp):
        return f"({_expr_text(ausdruck.left)} {ausdruck.op} {_expr_text(ausdruck.right)})"
    if isinstance(ausdruck, Any):
        return f"any{{{_bool_text(ausdruck.constraint)}}}"
    if isinstance(ausdruck, AnyValue):
        return "_"
    if isinstance(ausdruck, Iter):
        return "iter"
    if isinstance(ausdruck, Size):
        return f"size({ausdruck.var})"
    if isinstance(ausdruck, Proj):
        return f"proj({ausdruck.field}, {ausdruck.var}, {_expr_text(ausdruck.index)})"
    if isinstance(ausdruck, ThisField):
        return f"this.{ausdruck.field}"
    raise TypeError(f"Kein Ausdruck: {ausdruck!r}")


def _bool_text(ausdruck) -> str:
    if isinstance(ausdruck, BoolConst):
        return "TRUE" if ausdruck.value else "FALSE"
    if isinstance(ausdruck, Cmp):
        return f"{_expr_text(ausdruck.left)} {ausdruck.op} {_expr_text(ausdruck.right)}"
    if isinstance(ausdruck, Not):
        return f"NOT {_bool_text(ausdruck.operand)}"
    if isinstance(ausdruck, And):
        return f"({_bool_text(ausdruck.left)} AND {_bool_text(ausdruck.right)})"
    if isinstance(ausdruck, Or):
        return f"({_bool_text(ausdruck.left)} OR {_bool_text(ausdruck.right)})"
    raise TypeError(f"Kein boolescher Ausdruck: {ausdruck!r}")


def query_text(anfrage) -> str:
    """ Kanonische Form '@T ANFRAGE' """
    if isinstance(anfrage, Select):
        rumpf = f"SELECT {anfrage.field} AS {anfrage.as_var} WHERE {_bool_text(anfrage.where)}"
    elif isinstance(anfrage, SelectAgg):
        rumpf = (f"SELECT {anfrage.agg.upper()}({anfrage.field}) AS {anfrage.as_var} "
                 f"WHERE {_bool_text(anfrage.where)}")
    elif isinstance(anfrage, Update):
        rumpf = (f"UPDATE SET {anfrage.field} = {_expr_text(anfrage.value)} "
                 f"WHERE {_bool_text(anfrage.where)}")
    elif isinstance(anfrage, Insert):
        felder = ", ".join(f for f, _ in anfrage.assignments)
        werte = ", ".join(_expr_text(w) for _, w in anfrage.assignments)
        rumpf = f"INSERT INTO {anfrage.table} ({felder}) VALUES ({werte})"
    elif isinstance(anfrage, Delete):
        rumpf = f"DELETE WHERE {_bool_text(anfrage.where)}"
    else:
        raise TypeError(f"Keine Anfrage: {anfrage!r}")
    return f"@{anfrage.table} {rumpf}"


def _command_lines(cmd, tiefe: int) -> list[str]:
    einzug = "  " * tiefe
    anweisungen = _statements(cmd)
    zeilen = []
    for nummer, anweisung in enumerate(anweisungen):
        trenner = ";" if nummer < len(anweisungen) - 1 else ""
        if isinstance(anweisung, If):
            zeilen.append(f"{einzug}IF ({_bool_text(anweisung.cond)}) {{")
            zeilen += _command_lines(anweisung.body, tiefe + 1)
            zeilen.append(f"{einzug}}}{trenner}")
        elif isinstance(anweisung, Iterate):
            zeilen.append(f"{einzug}ITERATE ({_expr_text(anweisung.count)}) {{")
            zeilen += _command_lines(anweisung.body, tiefe + 1)
            zeilen.append(f"{einzug}}}{trenner}")
        elif isinstance(anweisung, Skip):
            zeilen.append(f"{einzug}SKIP{trenner}")
        else:
            zeilen.append(f"{einzug}{query_text(anweisung.query)}{trenner}")
    return zeilen


def _statements(cmd) -> list:
    if isinstance(cmd, Seq):
        return _statements(cmd.first) + _statements(cmd.second)
    return [cmd]


def pretty_print(programm: Program) -> str:
    bloecke = []
    for txn in programm.transactions:
        zeilen = [f"{txn.name}({', '.join(txn.params)}) {{"]
        zeilen += _command_lines(txn.body, 1)
        zeilen.append("}")
        bloecke.append("\n".join(zeilen))
    return "\n\n".join(bloecke) + ("\n" if bloecke else "")


class ProgramTextConverter:
    """ Konvertiert .txn-Text in ein Programm und zurück """

    @staticmethod
    def deserialisieren(text: str, schema: Schema, datei: str = "<program>") -> Program:
        return parse_program(text, schema, datei)

    @staticmethod
    def serialisieren(programm: Program) -> str:
        return pretty_print(programm)

from dataclasses import dataclass, field
from functools import cached_property

from klassen.domain.command import If, Iterate, QueryCmd, Seq, count_queries
from klassen.domain.diagnostic import Diagnostic
from klassen.domain.errors import UnknownQuery
from klassen.domain.expression import (And, Any, AnyValue, Arg, BinOp, Cmp, IntConst,
                                       Iter, Not, Or, Proj, Size, ThisField, conjunction)
from klassen.domain.program import Program, Transaction
from klassen.domain.query import Delete, Insert, Select, SelectAgg, Update
from klassen.domain.schema import ALIVE, Schema, TableDef


def where_fields(bedingung) -> set[str]:
    """ F(φ): alle Felder mit this.f in φ, zuzüglich alive """
    felder = {knoten.field for knoten in bedingung.walk() if isinstance(knoten, ThisField)}
    felder.add(ALIVE)
    return felder


def ordered_where_fields(bedingung, tabelle: TableDef) -> list[str]:
    """ F(φ) in Tabellenreihenfolge, alive zuletzt """
    felder = where_fields(bedingung)
    return [f for f in tabelle.all_fields if f in felder]


def key_lookup(bedingung, tabelle: TableDef) -> dict | None:
    """ Erkennt WHERE-Klauseln aus Gleichungen auf allen Schlüsselfeldern

    Liefert Schlüsselfeld -> Ausdruck oder None, wenn die Klausel einen Scan benötigt.
    """
    gleichungen = {}

    def sammeln(teil) -> bool:
        if isinstance(teil, And):
            return sammeln(teil.left) and sammeln(teil.right)
        if not isinstance(teil, Cmp) or teil.op != "=":
            return False
        for feldseite, andere in ((teil.left, teil.right), (teil.right, teil.left)):
            if isinstance(feldseite, ThisField) and tabelle.is_key(feldseite.field) \
                    and not _enthaelt(andere, ThisField):
                if feldseite.field in gleichungen:
                    return False
                gleichungen[feldseite.field] = andere
                return True
        return False

    if not sammeln(bedingung) or set(gleichungen) != set(tabelle.primary_key):
        return None
    return gleichungen


def _enthaelt(ausdruck, typ) -> bool:
    return any(isinstance(knoten, typ) for knoten in ausdruck.walk())


def variables_of(ausdruck) -> set[str]:
    """ Ergebnisvariablen, die über size/proj gelesen werden """
    return {knoten.var for knoten in ausdruck.walk() if isinstance(knoten, (Size, Proj))}


def query_expressions(anfrage) -> list:
    """ Alle Ausdrücke einer Anfrage (WHERE, Wert, INSERT-Werte) """
    if isinstance(anfrage, (Select, SelectAgg, Delete)):
        return [anfrage.where]
    if isinstance(anfrage, Update):
        return [anfrage.value, anfrage.where]
    if isinstance(anfrage, Insert):
        return [wert for _, wert in anfrage.assignments]
    return []


# ---------- Validierung ----------

class _Validierung:
    """ Sammelt Diagnosen über einer Transaktion """

    def __init__(self, schema: Schema, txn: Transaction, diagnosen: list):
        self.schema = schema
        self.txn = txn
        self.diagnosen = diagnosen
        # Variable -> (Tabelle, Anfrage, umgebende Schleifen)
        self.bindungen = {}
        self.schleifen_zaehler = 0

    def melde(self, meldung: str, knoten=None):
        span = getattr(knoten, "span", None) or self.txn.span
        self.diagnosen.append(Diagnostic(f"{self.txn.name}: {meldung}", span))

    def command(self, cmd, schleifen: tuple):
        if isinstance(cmd, Seq):
            self.command(cmd.first, schleifen)
            self.command(cmd.second, schleifen)
        elif isinstance(cmd, If):
            self.boolean(cmd.cond, schleifen, im_where=False)
            self.command(cmd.body, schleifen)
        elif isinstance(cmd, Iterate):
            self.expr(cmd.count, schleifen, im_where=False)
            self.schleifen_zaehler += 1
            self.command(cmd.body, schleifen + (self.schleifen_zaehler,))
        elif isinstance(cmd, QueryCmd):
            self.query(cmd.query, schleifen)

    def query(self, anfrage, schleifen: tuple):
        tabelle = self.schema.table(anfrage.table) if anfrage.table else None
        if tabelle is None:
            if anfrage.table:
                self.melde(f"Unbekannte Tabelle {anfrage.table}", anfrage)
            else:
                self.melde("Tabelle der Anfrage nicht bestimmbar (@T angeben)", anfrage)
            return
        if isinstance(anfrage, (Select, SelectAgg)):
            self._feld(tabelle, anfrage.field, anfrage)
            self.boolean(anfrage.where, schleifen, im_where=True, tabelle=tabelle)
            if anfrage.as_var in self.bindungen:
                self.melde(f"Variable {anfrage.as_var} mehrfach gebunden", anfrage)
            self.bindungen[anfrage.as_var] = (tabelle, anfrage, schleifen)
        elif isinstance(anfrage, Update):
            self._feld(tabelle, anfrage.field, anfrage)
            if tabelle.is_key(anfrage.field) or anfrage.field == ALIVE:
                self.melde(f"Feld {anfrage.field} darf nicht aktualisiert werden", anfrage)
            self.expr(anfrage.value, schleifen, im_where=False)
            self.boolean(anfrage.where, schleifen, im_where=True, tabelle=tabelle)
        elif isinstance(anfrage, Insert):
            felder = [f for f, _ in anfrage.assignments]
            for feld in felder:
                if feld == ALIVE:
                    self.melde(f"Feld {ALIVE} wird von INSERT implizit gesetzt", anfrage)
                else:
                    self._feld(tabelle, feld, anfrage)
            if len(set(felder)) != len(felder):
                self.melde("Feld mehrfach in INSERT", anfrage)
            for feld in tabelle.primary_key:
                if feld not in felder:
                    self.melde(f"INSERT ohne Schlüsselfeld {feld}", anfrage)
            for _, wert in anfrage.assignments:
                self.expr(wert, schleifen, im_where=False)
        elif isinstance(anfrage, Delete):
            self.boolean(anfrage.where, schleifen, im_where=True, tabelle=tabelle)

    def _feld(self, tabelle: TableDef, feld: str, knoten):
        if not tabelle.has_field(feld):
            self.melde(f"Feld {feld} existiert nicht in Tabelle {tabelle.name}", knoten)

    def boolean(self, ausdruck, schleifen, im_where, tabelle=None, im_any=False):
        if isinstance(ausdruck, Cmp):
            self.expr(ausdruck.left, schleifen, im_where, tabelle, im_any)
            self.expr(ausdruck.right, schleifen, im_where, tabelle, im_any)
        elif isinstance(ausdruck, Not):
            self.boolean(ausdruck.operand, schleifen, im_where, tabelle, im_any)
        elif isinstance(ausdruck, (And, Or)):
            self.boolean(ausdruck.left, schleifen, im_where, tabelle, im_any)
            self.boolean(ausdruck.right, schleifen, im_where, tabelle, im_any)

    def expr(self, ausdruck, schleifen, im_where, tabelle=None, im_any=False):
        if isinstance(ausdruck, Arg):
            if ausdruck.name not in self.txn.params:
                self.melde(f"Unbekannter Parameter {ausdruck.name}", ausdruck)
        elif isinstance(ausdruck, BinOp):
            self.expr(ausdruck.left, schleifen, im_where, tabelle, im_any)
            self.expr(ausdruck.right, schleifen, im_where, tabelle, im_any)
        elif isinstance(ausdruck, Any):
            if im_any:
                self.melde("any{} darf nicht geschachtelt werden", ausdruck)
            for knoten in ausdruck.constraint.walk():
                if isinstance(knoten, (Size, Proj, ThisField, Iter)):
                    self.melde("any{} darf nur _ und Parameter verwenden", knoten)
            self.boolean(ausdruck.constraint, schleifen, False, None, im_any=True)
        elif isinstance(ausdruck, AnyValue):
            if not im_any:
                self.melde("_ außerhalb von any{}", ausdruck)
        elif isinstance(ausdruck, Iter):
            if not schleifen:
                self.melde("iter außerhalb von ITERATE", ausdruck)
        elif isinstance(ausdruck, (Size, Proj)):
            self._variable(ausdruck, schleifen)
            if isinstance(ausdruck, Proj):
                self.expr(ausdruck.index, schleifen, False, None, im_any)
        elif isinstance(ausdruck, ThisField):
            if not im_where:
                self.melde(f"this.{ausdruck.field} außerhalb einer WHERE-Klausel", ausdruck)
            elif tabelle is not None:
                self._feld(tabelle, ausdruck.field, ausdruck)

    def _variable(self, ausdruck, schleifen):
        bindung = self.bindungen.get(ausdruck.var)
        if bindung is None:
            self.melde(f"Variable {ausdruck.var} ist nicht durch ein früheres SELECT gebunden", ausdruck)
            return
        tabelle, anfrage, bindungs_schleifen = bindung
        if schleifen[:len(bindungs_schleifen)] != bindungs_schleifen:
            self.melde(f"Variable {ausdruck.var} wird außerhalb ihrer Schleife verwendet", ausdruck)
        if isinstance(ausdruck, Proj):
            erlaubt = {anfrage.field} | set(tabelle.primary_key) | where_fields(anfrage.where)
            if ausdruck.field not in erlaubt:
                self.melde(f"proj auf nicht gelesenes Feld {ausdruck.field}", ausdruck)


def validate_program(schema: Schema, programm: Program) -> list[Diagnostic]:
    """ Prüft die Invarianten des Kernmodells, eine Diagnose je Verletzung """
    diagnosen = []
    namen = set()
    for txn in programm.transactions:
        if txn.name in namen:
            diagnosen.append(Diagnostic(f"Transaktion {txn.name} doppelt definiert", txn.span))
        namen.add(txn.name)
        if len(set(txn.params)) != len(txn.params):
            diagnosen.append(Diagnostic(f"{txn.name}: Parameter doppelt", txn.span))
        _Validierung(schema, txn, diagnosen).command(txn.body, ())
    return diagnosen


def check_bounds(programm: Program, unroll: int) -> list[Diagnostic]:
    """ Konstante Schleifenzahlen oberhalb der Abwicklungsschranke """
    diagnosen = []
    for txn in programm.transactions:
        for knoten in txn.body.walk():
            if isinstance(knoten, Iterate) and isinstance(knoten.count, IntConst) \
                    and knoten.count.value > unroll:
                diagnosen.append(Diagnostic(
                    f"{txn.name}: ITERATE({knoten.count.value}) überschreitet die Schranke {unroll}",
                    knoten.span))
    return diagnosen


# ---------- Abwicklung ----------

def query_uid(stelle: int, kopie: tuple) -> str:
    """ q3, q3[2] oder q3[2,1] """
    if not kopie:
        return f"q{stelle}"
    return f"q{stelle}[{','.join(str(i) for i in kopie)}]"


@dataclass(frozen=True)
class QueryOccurrence:
    """ Anfrage nach der Schleifenabwicklung """
    uid: str
    site: int
    copy: tuple
    query: object
    guards: tuple  # umgebende Bedingungen von außen nach innen
    index: int  # Position unter den Vorkommen, 1-basiert

    @property
    def reach(self):
        return conjunction(list(self.guards))


@dataclass(frozen=True)
class LoopBound:
    """ Prüfpunkt einer Schleife: count darf die Schranke nicht überschreiten """
    guards: tuple
    count: object
    copy: tuple
    bound: int


@dataclass(frozen=True)
class UnrolledTransaction:
    txn: Transaction
    entries: tuple  # QueryOccurrence und LoopBound in Programmreihenfolge
    bindings: dict = field(default_factory=dict)  # Variable -> (Stelle, Schleifentiefe)

    @property
    def name(self) -> str:
        return self.txn.name

    @property
    def occurrences(self) -> list[QueryOccurrence]:
        return [e for e in self.entries if isinstance(e, QueryOccurrence)]

    def occurrence(self, uid: str) -> QueryOccurrence:
        for vorkommen in self.occurrences:
            if vorkommen.uid == uid:
                return vorkommen
        raise UnknownQuery(f"{self.txn.name}.{uid}")

    def binding_uid(self, variable: str, kopie: tuple) -> str:
        """ Vorkommen, dessen SELECT die Variable für eine Verwendung in kopie bindet """
        stelle, tiefe = self.bindings[variable]
        return query_uid(stelle, kopie[:tiefe])

    def guard_refs(self, vorkommen: QueryOccurrence) -> set[str]:
        variablen = set()
        for guard in vorkommen.guards:
            variablen |= variables_of(guard)
        return {self.binding_uid(v, vorkommen.copy) for v in variablen}

    def expr_refs(self, vorkommen: QueryOccurrence) -> set[str]:
        variablen = set()
        for ausdruck in query_expressions(vorkommen.query):
            variablen |= variables_of(ausdruck)
        return {self.binding_uid(v, vorkommen.copy) for v in variablen}

    @cached_property
    def dataflow(self) -> set[tuple]:
        """ Paare (früher, später) mit Datenfluss, transitiv abgeschlossen """
        abhaengig = {}
        paare = set()
        for vorkommen in self.occurrences:
            direkt = self.guard_refs(vorkommen) | self.expr_refs(vorkommen)
            alle = set(direkt)
            for quelle in direkt:
                alle |= abhaengig.get(quelle, set())
            abhaengig[vorkommen.uid] = alle
            paare |= {(quelle, vorkommen.uid) for quelle in alle}
        return paare

    def dataflow_linked(self, a: str, b: str) -> bool:
        """ ST+-Beziehung: symmetrisch """
        fluss = self.dataflow
        return (a, b) in fluss or (b, a) in fluss


def substitute(ausdruck, iter_wert: int | None, kopie: tuple):
    """ Ersetzt iter durch den Kopieindex und benennt any{} je Kopie um """
    if isinstance(ausdruck, Iter):
        return IntConst(iter_wert, ausdruck.span) if iter_wert is not None else ausdruck
    if isinstance(ausdruck, BinOp):
        return BinOp(ausdruck.op, substitute(ausdruck.left, iter_wert, kopie),
                     substitute(ausdruck.right, iter_wert, kopie), ausdruck.span)
    if isinstance(ausdruck, Any):
        name = ausdruck.name + (f"[{','.join(str(i) for i in kopie)}]" if kopie else "")
        return Any(ausdruck.constraint, name, ausdruck.span)
    if isinstance(ausdruck, Proj):
        return Proj(ausdruck.field, ausdruck.var, substitute(ausdruck.index, iter_wert, kopie), ausdruck.span)
    if isinstance(ausdruck, Cmp):
        return Cmp(substitute(ausdruck.left, iter_wert, kopie), ausdruck.op,
                   substitute(ausdruck.right, iter_wert, kopie), ausdruck.span)
    if isinstance(ausdruck, Not):
        return Not(substitute(ausdruck.operand, iter_wert, kopie), ausdruck.span)
    if isinstance(ausdruck, (And, Or)):
        return type(ausdruck)(substitute(ausdruck.left, iter_wert, kopie),
                              substitute(ausdruck.right, iter_wert, kopie), ausdruck.span)
    return ausdruck


def _query_substitute(anfrage, iter_wert, kopie):
    if isinstance(anfrage, Select):
        return Select(anfrage.table, anfrage.field, anfrage.as_var,
                      substitute(anfrage.where, iter_wert, kopie), anfrage.span)
    if isinstance(anfrage, SelectAgg):
        return SelectAgg(anfrage.table, anfrage.agg, anfrage.field, anfrage.as_var,
                         substitute(anfrage.where, iter_wert, kopie), anfrage.span)
    if isinstance(anfrage, Update):
        return Update(anfrage.table, anfrage.field, substitute(anfrage.value, iter_wert, kopie),
                      substitute(anfrage.where, iter_wert, kopie), anfrage.span)
    if isinstance(anfrage, Insert):
        return Insert(anfrage.table, tuple((f, substitute(w, iter_wert, kopie)) for f, w in anfrage.assignments),
                      anfrage.span)
    return Delete(anfrage.table, substitute(anfrage.where, iter_wert, kopie), anfrage.span)


def unroll(txn: Transaction, schranke: int) -> UnrolledTransaction:
    """ Wickelt alle Schleifen bis zur Schranke ab; Kopien teilen sich die Stellennummer """
    eintraege = []
    bindungen = {}

    def laufen(cmd, basis: int, guards: tuple, kopie: tuple, iter_wert):
        if isinstance(cmd, Seq):
            laufen(cmd.first, basis, guards, kopie, iter_wert)
            laufen(cmd.second, basis + count_queries(cmd.first), guards, kopie, iter_wert)
        elif isinstance(cmd, If):
            laufen(cmd.body, basis, guards + (substitute(cmd.cond, iter_wert, kopie),), kopie, iter_wert)
        elif isinstance(cmd, Iterate):
            anzahl = substitute(cmd.count, iter_wert, kopie)
            eintraege.append(LoopBound(guards, anzahl, kopie, schranke))
            for i in range(1, schranke + 1):
                laufen(cmd.body, basis, guards + (Cmp(IntConst(i), "<=", anzahl),), kopie + (i,), i)
        elif isinstance(cmd, QueryCmd):
            stelle = basis + 1
            anfrage = _query_substitute(cmd.query, iter_wert, kopie)
            if isinstance(anfrage, (Select, SelectAgg)):
                bindungen[anfrage.as_var] = (stelle, len(kopie))
            eintraege.append(QueryOccurrence(query_uid(stelle, kopie), stelle, kopie, anfrage, guards, 0))

    laufen(txn.body, 0, (), (), None)
    # Positionen nachtragen
    nummeriert = []
    position = 0
    for eintrag in eintraege:
        if isinstance(eintrag, QueryOccurrence):
            position += 1
            eintrag = QueryOccurrence(eintrag.uid, eintrag.site, eintrag.copy, eintrag.query,
                                      eintrag.guards, position)
        nummeriert.append(eintrag)
    return UnrolledTransaction(txn, tuple(nummeriert), bindungen)


def reachability_condition(programm: Program, txn_name: str, uid: str, schranke: int = 2):
    """ Λ: Konjunktion aller umgebenden Bedingungen, TRUE auf oberster Ebene """
    txn = programm.transaction(txn_name)
    if txn is None:
        raise UnknownQuery(f"{txn_name}.{uid}")
    return unroll(txn, schranke).occurrence(uid).reach


def unroll_program(programm: Program, schranke: int) -> dict:
    return {txn.name: unroll(txn, schranke) for txn in programm.transactions}


def table_of(schema: Schema, anfrage) -> TableDef:
    return schema.table(anfrage.table)


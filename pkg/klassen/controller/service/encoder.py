import logging
from dataclasses import dataclass

from klassen.controller.service import smt
from klassen.controller.service.consistency import smt_templates
from klassen.controller.service.dependency_rules import KIND_CODES, KIND_NAMES, DependencyRules, can_write
from klassen.controller.service.program_analysis import (LoopBound, QueryOccurrence, key_lookup,
                                                         unroll_program, where_fields)
from klassen.domain.decoded_model import DecodedModel, PlanInstance
from klassen.domain.dependency_graph import EdgeKind, canonical_rotation
from klassen.domain.errors import EncodingError
from klassen.domain.expression import (And, Any, AnyValue, Arg, BinOp, BoolConst, Cmp, IntConst, Iter,
                                       Not, Or, Proj, Size, ThisField)
from klassen.domain.guarantee import EC, GuaranteeSpec
from klassen.domain.query import Delete, Insert, Select, SelectAgg, Update
from klassen.domain.schema import ALIVE
from klassen.domain.search_config import InitConstraint

ST = KIND_CODES[EdgeKind.ST]


@dataclass(frozen=True)
class QueryNode:
    """ Anfrageknoten der Kodierung: Vorkommen occ der Planinstanz inst """
    inst: PlanInstance
    occ: QueryOccurrence
    table: object  # TableDef

    @property
    def name(self) -> str:
        return f"n{self.inst.index}_{self.occ.index}"

    @property
    def key(self) -> tuple:
        return self.inst.index, self.occ.index

    @property
    def query(self):
        return self.occ.query


@dataclass(frozen=True)
class _Ort:
    """ Auswertungsort eines Ausdrucks """
    inst: int
    copy: tuple
    node: QueryNode | None = None
    slot: int | None = None
    any_value: str | None = None


class Encoder:
    """ Baut die Formel für einen Plan aus Instanzen und eine Zykluslänge

    Alle Quantoren sind über die Instanzen und Datensatz-Slots ausgerollt, Zwischenterme
    werden als Konstanten mit Gleichung abgelegt.
    """

    def __init__(self, programm, schema, plan: tuple, laenge: int, unroll: int = 2, records: int = 4,
                 partitions: int = 2, spec: GuaranteeSpec = EC, internal: bool = False,
                 init_constraints: tuple = ()):
        if laenge < 3:
            raise EncodingError(f"Zykluslänge {laenge} ist kleiner als 3")
        self.programm = programm
        self.schema = schema
        self.plan = tuple(plan)
        self.laenge = laenge
        self.unroll = unroll
        self.records = records
        self.partitions = partitions
        self.spec = spec
        self.internal = internal
        self.script = smt.Script()
        self.rules = DependencyRules(self)
        self.abgewickelt = unroll_program(programm, unroll)
        self.field_index = [(t.name, f) for t in schema.tables for f in t.all_fields]
        self.nodes = []
        self.abstract = {}  # (Instanz, abs-Name) -> Konstante
        self._writers = {}
        for instanz in self.plan:
            if instanz.txn not in self.abgewickelt:
                raise EncodingError(f"Unbekannter Transaktionstyp {instanz.txn}")
            for vorkommen in self.abgewickelt[instanz.txn].occurrences:
                if isinstance(vorkommen.query, SelectAgg):
                    raise EncodingError(f"{instanz.txn}.{vorkommen.uid}: Aggregation wird nicht kodiert")
                tabelle = schema.table(vorkommen.query.table)
                self.nodes.append(QueryNode(instanz, vorkommen, tabelle))
        self._by_key = {k.key: k for k in self.nodes}
        self.cycle_nodes = [k for k in self.nodes if not k.inst.serial]
        self._encode(init_constraints)

    # ---------- Symbole ----------

    def lam(self, k: QueryNode) -> str:
        return f"lam_{k.name}"

    def ts(self, k: QueryNode) -> str:
        return f"ts_{k.name}"

    def tau(self, k: QueryNode) -> str:
        return f"tau_{k.name}"

    def bc(self, k: QueryNode, p: int) -> str:
        return f"bc_{k.name}_{p}"

    def arg(self, inst: int, param: str) -> str:
        return f"arg_{inst}_{param}"

    def key_const(self, tabelle: str, r: int, feld: str) -> str:
        return f"key_{tabelle}_{r}_{feld}"

    def init_const(self, tabelle: str, r: int, feld: str) -> str:
        return f"init_{tabelle}_{r}_{feld}"

    def vis(self, a: QueryNode, b: QueryNode) -> str:
        if a == b:
            return smt.FALSE

        def bauen():
            # früher und die Partition von b liegt im Broadcast von a
            erreicht = smt.or_(*(smt.and_(smt.eq(self.tau(b), smt.num(p)), self.bc(a, p))
                                 for p in range(self.partitions)))
            return smt.and_(smt.lt(self.ts(a), self.ts(b)), erreicht)
        return self.script.lazy(f"vis_{a.name}_{b.name}", "Bool", bauen)

    def node(self, schluessel: tuple) -> QueryNode:
        return self._by_key[schluessel]

    def writers(self, tabelle: str, feld: str) -> list[QueryNode]:
        if (tabelle, feld) not in self._writers:
            self._writers[(tabelle, feld)] = [k for k in self.nodes
                                              if k.table.name == tabelle and can_write(k.query, feld)]
        return self._writers[(tabelle, feld)]

    def may_read(self, k: QueryNode, feld: str) -> bool:
        if isinstance(k.query, Select) and k.query.field == feld:
            return True
        if isinstance(k.query, Insert):
            return False
        return self._scan(k) and feld in where_fields(k.query.where)

    def _scan(self, k: QueryNode) -> bool:
        # ohne eindeutigen Schlüsselzugriff liest die Anfrage jeden Slot
        return not isinstance(k.query, Insert) and key_lookup(k.query.where, k.table) is None

    # ---------- Sicht einer Anfrage ----------

    def val(self, k: QueryNode, r: int, feld: str) -> str:
        """ Feldwert von Slot r in der Sicht von k: letzter sichtbarer Schreiber oder Anfangswert """
        tabelle = k.table
        if tabelle.is_key(feld):
            return self.key_const(tabelle.name, r, feld)

        def bauen():
            term = self.init_const(tabelle.name, r, feld)
            for w in self.writers(tabelle.name, feld):
                if w != k:
                    term = smt.ite(self.top(w, k, r, feld), self.wval(w, r, feld), term)
            return term
        return self.script.lazy(f"val_{k.name}_{r}_{feld}", "Int", bauen)

    def alive(self, k: QueryNode, r: int) -> str:
        return smt.eq(self.val(k, r, ALIVE), "1")

    def top(self, w: QueryNode, b: QueryNode, r: int, feld: str) -> str:
        """ w ist der letzte für b sichtbare ausgeführte Schreiber von (r, feld) """
        if w == b:
            return smt.FALSE

        def bauen():
            spaeter = [smt.not_(smt.and_(self.writes(x, r, feld), self.vis(x, b),
                                         smt.lt(self.ts(w), self.ts(x))))
                       for x in self.writers(w.table.name, feld) if x not in (w, b)]
            return smt.and_(self.writes(w, r, feld), self.vis(w, b), *spaeter)
        return self.script.lazy(f"top_{w.name}_{b.name}_{r}_{feld}", "Bool", bauen)

    def match(self, k: QueryNode, r: int) -> str:
        ort = _Ort(k.inst.index, k.occ.copy, k, r)
        return self.script.lazy(f"match_{k.name}_{r}", "Bool",
                                lambda: smt.and_(self.alive(k, r), self.boolean(k.query.where, ort)))

    def insert_hit(self, k: QueryNode, r: int) -> str:
        ort = _Ort(k.inst.index, k.occ.copy, k)
        gleich = []
        for feld in k.table.primary_key:
            wert = k.query.value_of(feld)
            gleich.append(smt.eq(self.key_const(k.table.name, r, feld),
                                 self.term(wert, ort) if wert is not None else "0"))
        return smt.and_(*gleich)

    def writes(self, w: QueryNode, r: int, feld: str) -> str:
        anfrage = w.query
        if not can_write(anfrage, feld):
            return smt.FALSE
        if isinstance(anfrage, Insert):
            return self.script.lazy(f"ins_{w.name}_{r}", "Bool",
                                    lambda: smt.and_(self.lam(w), self.insert_hit(w, r)))
        return self.script.lazy(f"writes_{w.name}_{r}", "Bool", lambda: smt.and_(self.lam(w), self.match(w, r)))

    def wval(self, w: QueryNode, r: int, feld: str) -> str:
        """ geschriebener Wert, Update-Werte werden einmal vor dem Abgleich ausgewertet """
        anfrage = w.query
        ort = _Ort(w.inst.index, w.occ.copy, w)
        if isinstance(anfrage, Update):
            return self.script.lazy(f"upd_{w.name}", "Int", lambda: self.term(anfrage.value, ort))
        if isinstance(anfrage, Delete):
            return "0"
        if feld == ALIVE:
            return "1"
        wert = anfrage.value_of(feld)
        return self.term(wert, ort) if wert is not None else "0"

    def exists(self, tabelle: str, r: int) -> str:
        """ Slot gehört zum Schlüsseluniversum: anfangs lebend oder irgendwo eingefügt """
        def bauen():
            eingefuegt = [self.writes(w, r, ALIVE) for w in self.nodes
                          if w.table.name == tabelle and isinstance(w.query, Insert)]
            return smt.or_(smt.eq(self.init_const(tabelle, r, ALIVE), "1"), *eingefuegt)
        return self.script.lazy(f"ex_{tabelle}_{r}", "Bool", bauen)

    def reads(self, k: QueryNode, r: int, feld: str) -> str:
        anfrage = k.query
        # Ergebnisfeld der Treffer, beim Scan zusätzlich jedes WHERE-Feld aller Slots
        teile = []
        if isinstance(anfrage, Select) and anfrage.field == feld:
            teile.append(smt.and_(self.lam(k), self.match(k, r)))
        if self._scan(k) and feld in where_fields(anfrage.where):
            teile.append(smt.and_(self.lam(k), self.exists(k.table.name, r)))
        return smt.or_(*teile)

    # ---------- Ausdrücke ----------

    def _bindung(self, ort: _Ort, variable: str) -> QueryNode:
        instanz = self.plan[ort.inst - 1]
        abgewickelt = self.abgewickelt[instanz.txn]
        try:
            uid = abgewickelt.binding_uid(variable, ort.copy)
        except KeyError as fehler:
            raise EncodingError(f"Variable {variable} ist nicht gebunden") from fehler
        return self.node((ort.inst, abgewickelt.occurrence(uid).index))

    def size(self, k: QueryNode) -> str:
        return self.script.lazy(f"size_{k.name}", "Int",
                                lambda: smt.add(*(smt.ite(self.match(k, r), "1", "0") for r in range(self.records))))

    def position(self, k: QueryNode, r: int) -> str:
        """ 1-basierte Position von Slot r in der nach Schlüssel sortierten Ergebnisliste """
        return self.script.lazy(f"cnt_{k.name}_{r}", "Int",
                                lambda: smt.add("1", *(smt.ite(self.match(k, s), "1", "0") for s in range(r))))

    def term(self, ausdruck, ort: _Ort) -> str:
        if isinstance(ausdruck, IntConst):
            return smt.num(ausdruck.value)
        if isinstance(ausdruck, Arg):
            return self.arg(ort.inst, ausdruck.name)
        if isinstance(ausdruck, BinOp):
            return smt.op(smt.ARITH[ausdruck.op], self.term(ausdruck.left, ort), self.term(ausdruck.right, ort))
        if isinstance(ausdruck, Any):
            return self.abstract[(ort.inst, ausdruck.name)]
        if isinstance(ausdruck, AnyValue):
            if ort.any_value is None:
                raise EncodingError("_ außerhalb von any{}")
            return ort.any_value
        if isinstance(ausdruck, Size):
            return self.size(self._bindung(ort, ausdruck.var))
        if isinstance(ausdruck, Proj):
            bindung = self._bindung(ort, ausdruck.var)
            # Treffer an Position index, sonst 0
            index = self.term(ausdruck.index, ort)
            wert = "0"
            for r in reversed(range(self.records)):
                wert = smt.ite(smt.and_(self.match(bindung, r), smt.eq(self.position(bindung, r), index)),
                               self.val(bindung, r, ausdruck.field), wert)
            return wert
        if isinstance(ausdruck, ThisField):
            if ort.node is None or ort.slot is None:
                raise EncodingError(f"this.{ausdruck.field} ohne Datensatz")
            return self.val(ort.node, ort.slot, ausdruck.field)
        if isinstance(ausdruck, Iter):
            raise EncodingError("iter nach der Abwicklung")
        return self.boolean(ausdruck, ort)

    def boolean(self, ausdruck, ort: _Ort) -> str:
        if isinstance(ausdruck, BoolConst):
            return smt.TRUE if ausdruck.value else smt.FALSE
        if isinstance(ausdruck, Cmp):
            links = self.term(ausdruck.left, ort)
            rechts = self.term(ausdruck.right, ort)
            return smt.op(smt.COMPARE[ausdruck.op], links, rechts)
        if isinstance(ausdruck, Not):
            return smt.not_(self.boolean(ausdruck.operand, ort))
        if isinstance(ausdruck, And):
            return smt.and_(self.boolean(ausdruck.left, ort), self.boolean(ausdruck.right, ort))
        if isinstance(ausdruck, Or):
            return smt.or_(self.boolean(ausdruck.left, ort), self.boolean(ausdruck.right, ort))
        raise EncodingError(f"Unbekannter Ausdruck {ausdruck!r}")

    def defined(self, ausdruck, ort: _Ort) -> list[str]:
        """ Bedingungen, unter denen die Auswertung ohne Laufzeitfehler gelingt """
        if isinstance(ausdruck, (BinOp, Cmp, And, Or)):
            bedingungen = self.defined(ausdruck.left, ort) + self.defined(ausdruck.right, ort)
            if isinstance(ausdruck, BinOp) and ausdruck.op == "/":
                bedingungen.append(smt.not_(smt.eq(self.term(ausdruck.right, ort), "0")))
            return bedingungen
        if isinstance(ausdruck, Not):
            return self.defined(ausdruck.operand, ort)
        if isinstance(ausdruck, Size):
            return [self.lam(self._bindung(ort, ausdruck.var))]
        if isinstance(ausdruck, Proj):
            bindung = self._bindung(ort, ausdruck.var)
            index = self.term(ausdruck.index, ort)
            return [self.lam(bindung)] + self.defined(ausdruck.index, ort) + [
                smt.le("1", index), smt.le(index, self.size(bindung))]
        return []

    # ---------- φ_context ----------

    def _encode(self, init_constraints: tuple):
        self._declare()
        self._records()
        for instanz in self.plan:
            self._instance(instanz)
        self._order()
        for term in smt_templates(self.spec, self.nodes, {k: k.inst.index for k in self.nodes},
                                  self.lam, self.vis, lambda a, b: smt.lt(self.ts(a), self.ts(b))):
            self.script.add(term)
        for bedingung in init_constraints:
            self._init_constraint(bedingung)
        if self.cycle_nodes:
            self._cycle()
        logging.info(f"Kodierung: {len(self.plan)} Instanzen, {len(self.nodes)} Knoten, "
                     f"Länge {self.laenge}, {len(self.script.assertions)} Zusicherungen")

    def _declare(self):
        s = self.script
        for k in self.nodes:
            s.declare(self.ts(k), "Int")
            s.declare(self.tau(k), "Int")
            s.add(smt.and_(smt.le("0", self.tau(k)), smt.lt(self.tau(k), smt.num(self.partitions))))
            for p in range(self.partitions):
                s.declare(self.bc(k, p), "Bool")
                # die eigene Partition ist immer erreicht
                s.add(smt.implies(smt.eq(self.tau(k), smt.num(p)), self.bc(k, p)))
                if k.inst.serial:
                    s.add(self.bc(k, p))
        # ar ist total
        s.add(smt.distinct(*(self.ts(k) for k in self.nodes)))
        for instanz in self.plan:
            txn = self.abgewickelt[instanz.txn].txn
            for param in txn.params:
                s.declare(self.arg(instanz.index, param), "Int")
            for eintrag in self.abgewickelt[instanz.txn].entries:
                for ausdruck in _ausdruecke(eintrag):
                    for knoten in ausdruck.walk():
                        if isinstance(knoten, Any) and (instanz.index, knoten.name) not in self.abstract:
                            name = s.declare(f"abs_{instanz.index}_{len(self.abstract)}", "Int")
                            self.abstract[(instanz.index, knoten.name)] = name
                            ort = _Ort(instanz.index, eintrag.copy, any_value=name)
                            # Auswahlbedingung gilt unabhängig von der Erreichbarkeit
                            s.add(smt.and_(*self.defined(knoten.constraint, ort)))
                            s.add(self.boolean(knoten.constraint, ort))

    def _records(self):
        s = self.script
        for tabelle in self.schema.tables:
            for r in range(self.records):
                for feld in tabelle.primary_key:
                    s.declare(self.key_const(tabelle.name, r, feld), "Int")
                lebend = s.declare(self.init_const(tabelle.name, r, ALIVE), "Int")
                s.add(smt.or_(smt.eq(lebend, "0"), smt.eq(lebend, "1")))
                for feld in tabelle.fields:
                    if tabelle.is_key(feld):
                        continue
                    wert = s.declare(self.init_const(tabelle.name, r, feld), "Int")
                    # tote Slots tragen nur Nullen
                    s.add(smt.implies(smt.eq(lebend, "0"), smt.eq(wert, "0")))
                # Slots streng nach Schlüssel geordnet
                if r > 0:
                    s.add(smt.lex_less([self.key_const(tabelle.name, r - 1, f) for f in tabelle.primary_key],
                                       [self.key_const(tabelle.name, r, f) for f in tabelle.primary_key]))

    def _instance(self, instanz: PlanInstance):
        s = self.script
        abgewickelt = self.abgewickelt[instanz.txn]
        vorige = None
        for eintrag in abgewickelt.entries:
            ort = _Ort(instanz.index, eintrag.copy)
            guards = [self.boolean(g, ort) for g in eintrag.guards]
            # Bedingungen werden nacheinander ausgewertet, Abbruch bei der ersten falschen
            for m, guard in enumerate(eintrag.guards):
                s.add(smt.implies(smt.and_(*guards[:m]), smt.and_(*self.defined(guard, ort))))
            if isinstance(eintrag, LoopBound):
                anzahl = self.term(eintrag.count, ort)
                s.add(smt.implies(smt.and_(*guards), smt.and_(*self.defined(eintrag.count, ort),
                                                               smt.le(anzahl, smt.num(eintrag.bound)))))
                continue
            k = self.node((instanz.index, eintrag.index))
            s.define(self.lam(k), "Bool", smt.and_(*guards))
            # Programmreihenfolge innerhalb der Instanz
            if vorige is not None:
                s.add(smt.lt(self.ts(vorige), self.ts(k)))
            vorige = k
            self._query_definedness(k)

    def _query_definedness(self, k: QueryNode):
        s = self.script
        anfrage = k.query
        ort = _Ort(k.inst.index, k.occ.copy, k)
        if isinstance(anfrage, Insert):
            for _, wert in anfrage.assignments:
                s.add(smt.implies(self.lam(k), smt.and_(*self.defined(wert, ort))))
            s.add(smt.implies(self.lam(k), smt.or_(*(self.insert_hit(k, r) for r in range(self.records)))))
            return
        if isinstance(anfrage, Update):
            s.add(smt.implies(self.lam(k), smt.and_(*self.defined(anfrage.value, ort))))
        suche = key_lookup(anfrage.where, k.table)
        # bei Schlüsselzugriff wird WHERE nur auf dem gesuchten Slot ausgewertet
        if suche is not None:
            for ausdruck in suche.values():
                s.add(smt.implies(self.lam(k), smt.and_(*self.defined(ausdruck, ort))))
        for r in range(self.records):
            vor = [self.lam(k), self.alive(k, r)]
            if suche is not None:
                vor += [smt.eq(self.key_const(k.table.name, r, f), self.term(suche[f], ort)) for f in suche]
            bedingungen = self.defined(anfrage.where, _Ort(k.inst.index, k.occ.copy, k, r))
            s.add(smt.implies(smt.and_(*vor), smt.and_(*bedingungen)))

    def _order(self):
        """ Serielle Instanzen laufen vollständig vor allen späteren Instanzen """
        for position, instanz in enumerate(self.plan):
            if not instanz.serial:
                continue
            eigene = [k for k in self.nodes if k.inst == instanz]
            if not eigene:
                continue
            for spaetere in self.plan[position + 1:]:
                andere = [k for k in self.nodes if k.inst == spaetere]
                if andere:
                    self.script.add(smt.lt(self.ts(eigene[-1]), self.ts(andere[0])))

    def _init_constraint(self, bedingung: InitConstraint):
        tabelle = self.schema.table(bedingung.table)
        if tabelle is None:
            raise EncodingError(f"Unbekannte Tabelle {bedingung.table} in der Anfangsbedingung")
        for r in range(self.records):
            lebend = smt.eq(self.init_const(tabelle.name, r, ALIVE), "1")
            if bedingung.empty:
                self.script.add(smt.not_(lebend))
            else:
                self.script.add(smt.implies(lebend, self._init_term(bedingung.predicate, tabelle, r)))

    def _init_term(self, ausdruck, tabelle, r: int) -> str:
        if isinstance(ausdruck, ThisField):
            if tabelle.is_key(ausdruck.field):
                return self.key_const(tabelle.name, r, ausdruck.field)
            return self.init_const(tabelle.name, r, ausdruck.field)
        if isinstance(ausdruck, IntConst):
            return smt.num(ausdruck.value)
        if isinstance(ausdruck, BinOp):
            return smt.op(smt.ARITH[ausdruck.op], self._init_term(ausdruck.left, tabelle, r),
                          self._init_term(ausdruck.right, tabelle, r))
        if isinstance(ausdruck, Cmp):
            return smt.op(smt.COMPARE[ausdruck.op], self._init_term(ausdruck.left, tabelle, r),
                          self._init_term(ausdruck.right, tabelle, r))
        if isinstance(ausdruck, Not):
            return smt.not_(self._init_term(ausdruck.operand, tabelle, r))
        if isinstance(ausdruck, (And, Or)):
            verbinde = smt.and_ if isinstance(ausdruck, And) else smt.or_
            return verbinde(self._init_term(ausdruck.left, tabelle, r), self._init_term(ausdruck.right, tabelle, r))
        if isinstance(ausdruck, BoolConst):
            return smt.TRUE if ausdruck.value else smt.FALSE
        raise EncodingError(f"Ausdruck {ausdruck!r} ist in Anfangsbedingungen nicht erlaubt")

    # ---------- φ_cycle ----------

    def pos(self, m: int) -> str:
        return f"pos_{m}"

    def kind(self, m: int) -> str:
        return f"kind_{m}"

    def fld(self, m: int) -> str:
        return f"fld_{m}"

    def rec(self, m: int) -> str:
        return f"rec_{m}"

    def _at(self, m: int, k: QueryNode) -> str:
        return smt.eq(self.pos(m), smt.num(self.cycle_nodes.index(k)))

    def _cycle(self):
        s = self.script
        n = len(self.cycle_nodes)
        laenge = self.laenge
        for m in range(laenge):
            s.declare(self.pos(m), "Int")
            s.declare(self.kind(m), "Int")
            s.declare(self.fld(m), "Int")
            s.declare(self.rec(m), "Int")
            s.add(smt.and_(smt.le("0", self.pos(m)), smt.lt(self.pos(m), smt.num(n))))
            s.add(smt.and_(smt.le("0", self.kind(m)), smt.le(self.kind(m), "3")))
            s.add(smt.and_(smt.le("0", self.rec(m)), smt.lt(self.rec(m), smt.num(self.records))))
            for index, k in enumerate(self.cycle_nodes):
                s.add(smt.implies(smt.eq(self.pos(m), smt.num(index)), self.lam(k)))
        # jeder Knoten höchstens einmal, jede Instanz mindestens einmal
        s.add(smt.distinct(*(self.pos(m) for m in range(laenge))))
        for instanz in dict.fromkeys(k.inst for k in self.cycle_nodes):
            eigene = [k for k in self.cycle_nodes if k.inst == instanz]
            s.add(smt.or_(*(self._at(m, k) for m in range(laenge) for k in eigene)))
        # Muster: erste und vorletzte Kante Abhängigkeiten, letzte Kante ST, keine zwei ST hintereinander
        s.add(smt.eq(self.kind(laenge - 1), smt.num(ST)))
        s.add(smt.lt(smt.num(ST), self.kind(0)))
        s.add(smt.lt(smt.num(ST), self.kind(laenge - 2)))
        for m in range(laenge - 1):
            s.add(smt.not_(smt.and_(smt.eq(self.kind(m), smt.num(ST)), smt.eq(self.kind(m + 1), smt.num(ST)))))
        for m in range(laenge):
            self._edge(m, (m + 1) % laenge)

    def _edge(self, m: int, naechste: int):
        s = self.script
        ist_st = smt.eq(self.kind(m), smt.num(ST))
        st_paare = []
        for a in self.cycle_nodes:
            for b in self.cycle_nodes:
                if a != b and a.inst == b.inst and (not self.internal or self._dataflow(a, b)):
                    st_paare.append(smt.and_(self._at(m, a), self._at(naechste, b)))
        # ST nur innerhalb einer Instanz, im internen Modus nur entlang des Datenflusses
        s.add(smt.implies(ist_st, smt.and_(smt.eq(self.fld(m), smt.num(-1)), smt.or_(*st_paare))))
        moeglich = []
        for a in self.cycle_nodes:
            for b in self.cycle_nodes:
                if a.inst == b.inst or a.table.name != b.table.name:
                    continue
                for art in EdgeKind.DEPENDENCIES:
                    for feld_index, (tabelle, feld) in enumerate(self.field_index):
                        if tabelle != a.table.name or not self.rules.possible(art, a, b, feld):
                            continue
                        auswahl = smt.and_(self._at(m, a), self._at(naechste, b),
                                           smt.eq(self.kind(m), smt.num(KIND_CODES[art])),
                                           smt.eq(self.fld(m), smt.num(feld_index)))
                        moeglich.append(auswahl)
                        # ein Slot bezeugt die Kante mit verschiedenen Werten
                        zeuge = smt.or_(*(smt.and_(smt.eq(self.rec(m), smt.num(r)),
                                                   self.rules.condition(art, a, b, r, feld),
                                                   self.rules.distinct_values(art, a, b, r, feld))
                                          for r in range(self.records)))
                        s.add(smt.implies(auswahl, smt.and_(self.rules.predicate(art, a, b, feld_index), zeuge)))
        s.add(smt.implies(smt.not_(ist_st), smt.or_(*moeglich)))

    def _dataflow(self, a: QueryNode, b: QueryNode) -> bool:
        return self.abgewickelt[a.inst.txn].dataflow_linked(a.occ.uid, b.occ.uid)

    # ---------- Zusatzklauseln der Suche ----------

    def _position_matches(self, m: int, element: tuple) -> str:
        txn, stelle, art, feld = element
        knoten = [smt.eq(self.pos(m), smt.num(i)) for i, k in enumerate(self.cycle_nodes)
                  if k.inst.txn == txn and k.occ.site == stelle]
        teile = [smt.or_(*knoten), smt.eq(self.kind(m), smt.num(KIND_CODES[art]))]
        if art != EdgeKind.ST:
            teile.append(smt.or_(*(smt.eq(self.fld(m), smt.num(i))
                                   for i, (_, f) in enumerate(self.field_index) if f == feld)))
        return smt.and_(*teile)

    def _rotations(self, fingerprint: tuple) -> list[tuple]:
        """ Rotationen, deren letzte Kante ST ist, passend zur Zykluslänge """
        if len(fingerprint) != self.laenge:
            return []
        folge = list(fingerprint)
        rotationen = [tuple(folge[i:] + folge[:i]) for i in range(len(folge))]
        return [r for r in rotationen if r[-1][2] == EdgeKind.ST]

    def matches_fingerprint(self, fingerprint: tuple) -> str:
        return smt.or_(*(smt.and_(*(self._position_matches(m, e) for m, e in enumerate(rotation)))
                         for rotation in self._rotations(fingerprint)))

    def enc_neg(self, fingerprints) -> list[str]:
        """ Blockiert bereits gefundene Zyklen auf Ebene (Typ, Stelle, Kantenart, Feld) """
        return [smt.not_(self.matches_fingerprint(f)) for f in fingerprints]

    def enc_struct(self, modell: DecodedModel) -> str:
        """ Hält Transaktionstyp und Kantenart je Position fest """
        teile = []
        for m, (knoten, art) in enumerate(zip(modell.cycle, modell.kinds)):
            typ = modell.instance(knoten[0]).txn
            teile.append(smt.or_(*(smt.eq(self.pos(m), smt.num(i)) for i, k in enumerate(self.cycle_nodes)
                                   if k.inst.txn == typ)))
            art = EdgeKind.ST if art == EdgeKind.STP else art
            teile.append(smt.eq(self.kind(m), smt.num(KIND_CODES[art])))
        return smt.and_(*teile)

    def problem(self, zusatz=(), kommentar: str = "") -> str:
        text = self.script.text(kommentar)
        # Zusatzklauseln vor check-sat einfügen
        if not zusatz:
            return text
        extra = "".join(f"(assert {t})\n" for t in zusatz if t != smt.TRUE)
        return text.replace("(check-sat)\n", extra + "(check-sat)\n", 1)

    # ---------- Dekodierung ----------

    def decode(self, modell: dict) -> DecodedModel:
        def wert(name, standard=0):
            return modell.get(name, standard)

        args = {}
        abstrakt = {}
        for instanz in self.plan:
            txn = self.abgewickelt[instanz.txn].txn
            args[instanz.index] = {p: wert(self.arg(instanz.index, p)) for p in txn.params}
            abstrakt[instanz.index] = {name: wert(const) for (i, name), const in self.abstract.items()
                                       if i == instanz.index}
        # fehlende Symbole sind frei und nehmen den Standardwert an
        ausgefuehrt = frozenset(k.key for k in self.nodes if wert(self.lam(k), False))
        ts = {k.key: wert(self.ts(k)) for k in self.nodes}
        tau = {k.key: wert(self.tau(k)) for k in self.nodes}
        broadcast = {k.key: frozenset(p for p in range(self.partitions)
                                      if wert(self.bc(k, p), False) or p == tau[k.key])
                     for k in self.nodes}
        schluessel = {}
        anfang = {}
        for tabelle in self.schema.tables:
            schluessel[tabelle.name] = [tuple(wert(self.key_const(tabelle.name, r, f)) for f in tabelle.primary_key)
                                        for r in range(self.records)]
            anfang[tabelle.name] = [{f: wert(self.init_const(tabelle.name, r, f))
                                     for f in tabelle.all_fields if not tabelle.is_key(f)}
                                    for r in range(self.records)]
        zyklus, arten, felder = [], [], []
        if self.cycle_nodes:
            for m in range(self.laenge):
                index = wert(self.pos(m))
                if not 0 <= index < len(self.cycle_nodes):
                    raise EncodingError(f"Position {m} zeigt auf keinen Knoten")
                zyklus.append(self.cycle_nodes[index].key)
                code = wert(self.kind(m))
                art = KIND_NAMES.get(code, EdgeKind.ST)
                # interne Suche kennt nur ST+
                if art == EdgeKind.ST and self.internal:
                    art = EdgeKind.STP
                arten.append(art)
                feld_index = wert(self.fld(m), -1)
                felder.append(self.field_index[feld_index][1]
                              if code != ST and 0 <= feld_index < len(self.field_index) else "")
        return DecodedModel(self.plan, self.partitions, args, abstrakt, ausgefuehrt, ts, tau, broadcast,
                            schluessel, anfang, tuple(zyklus), tuple(arten), tuple(felder), self.internal)

    def fingerprint(self, modell: DecodedModel) -> tuple:
        folge = []
        for knoten, art, feld in zip(modell.cycle, modell.kinds, modell.fields):
            k = self.node(knoten)
            folge.append((k.inst.txn, k.occ.site, EdgeKind.ST if art == EdgeKind.STP else art, feld))
        return canonical_rotation(folge)


def _ausdruecke(eintrag) -> list:
    """ Alle Ausdrücke eines Eintrags der Abwicklung """
    ausdruecke = list(eintrag.guards)
    if isinstance(eintrag, LoopBound):
        ausdruecke.append(eintrag.count)
    else:
        anfrage = eintrag.query
        if isinstance(anfrage, Insert):
            ausdruecke.extend(w for _, w in anfrage.assignments)
        else:
            ausdruecke.append(anfrage.where)
            if isinstance(anfrage, Update):
                ausdruecke.append(anfrage.value)
    return ausdruecke

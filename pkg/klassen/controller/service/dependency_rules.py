from klassen.controller.service import smt
from klassen.controller.service.program_analysis import where_fields
from klassen.domain.dependency_graph import EdgeKind
from klassen.domain.query import Delete, Insert, Select, SelectAgg, Update
from klassen.domain.schema import ALIVE

# Kodierung der Kantenart in der Zyklusvariable kind_m
KIND_CODES = {EdgeKind.ST: 0, EdgeKind.WR: 1, EdgeKind.WW: 2, EdgeKind.RW: 3}
KIND_NAMES = {code: name for name, code in KIND_CODES.items()}


def can_write(anfrage, feld: str) -> bool:
    if isinstance(anfrage, Update):
        return anfrage.field == feld
    if isinstance(anfrage, Delete):
        return feld == ALIVE
    return isinstance(anfrage, Insert)


def can_read(anfrage, feld: str, where_felder: set, scan: bool) -> bool:
    if isinstance(anfrage, (Select, SelectAgg)) and anfrage.field == feld:
        return True
    if isinstance(anfrage, Insert):
        return False
    return scan and feld in where_felder


def written_fields(anfrage, tabelle) -> set[str]:
    return {feld for feld in tabelle.all_fields if can_write(anfrage, feld)}


def observed_fields(anfrage) -> set[str]:
    """ Felder, deren Werte das Ergebnis oder die Trefferauswahl der Anfrage bestimmen """
    if isinstance(anfrage, Insert):
        return set()
    felder = where_fields(anfrage.where)
    if isinstance(anfrage, (Select, SelectAgg)):
        felder.add(anfrage.field)
    return felder


class DependencyRules:
    """ Bedingungen für WR, WW und RW zwischen zwei Anfrageknoten auf einem Slot

    Die Bedingungen bilden die Abhängigkeitsrelationen der Semantik exakt nach:
    WR über den letzten sichtbaren Schreiber, WW über ar, RW über eine ältere gelesene Version.
    """

    def __init__(self, encoder):
        self.enc = encoder

    def possible(self, art: str, a, b, feld: str) -> bool:
        """ Statische Vorprüfung, ob die Kante überhaupt entstehen kann """
        if a.inst.index == b.inst.index or a.table.name != b.table.name:
            return False
        if art == EdgeKind.WR:
            return can_write(a.query, feld) and self.enc.may_read(b, feld)
        if art == EdgeKind.WW:
            return can_write(a.query, feld) and can_write(b.query, feld)
        if art == EdgeKind.RW:
            return self.enc.may_read(a, feld) and can_write(b.query, feld)
        return False

    def condition(self, art: str, a, b, slot: int, feld: str) -> str:
        enc = self.enc
        if art == EdgeKind.WR:
            return smt.and_(enc.reads(b, slot, feld), enc.top(a, b, slot, feld))
        if art == EdgeKind.WW:
            return smt.and_(enc.writes(a, slot, feld), enc.writes(b, slot, feld), smt.lt(enc.ts(a), enc.ts(b)))
        # RW: gelesene Version liegt in ar vor dem Schreiben von b
        aelter = [smt.implies(enc.top(w, a, slot, feld), smt.lt(enc.ts(w), enc.ts(b)))
                  for w in enc.writers(a.table.name, feld) if w not in (a, b)]
        return smt.and_(enc.reads(a, slot, feld), enc.writes(b, slot, feld),
                        smt.not_(enc.top(b, a, slot, feld)), *aelter)

    def distinct_values(self, art: str, a, b, slot: int, feld: str) -> str:
        """ Wertverschiedenheit auf Zykluskanten, nur für Nicht-Schlüsselfelder """
        enc = self.enc
        if feld == ALIVE or a.table.is_key(feld) or art == EdgeKind.WR:
            return smt.TRUE
        if art == EdgeKind.RW:
            return smt.not_(smt.eq(enc.val(a, slot, feld), enc.wval(b, slot, feld)))
        return smt.not_(smt.eq(enc.wval(a, slot, feld), enc.wval(b, slot, feld)))

    def predicate(self, art: str, a, b, feld_index: int) -> str:
        """ D-Konstante mit φ_dep→ (D ⇒ Bedingung) und φ_→dep (Bedingung ⇒ D) """
        enc = self.enc
        name = f"D_{art}_{a.name}_{b.name}_{feld_index}"
        if name in enc.script.sorts:
            return name
        enc.script.declare(name, "Bool")
        _, feld = enc.field_index[feld_index]
        bedingung = smt.or_(*(self.condition(art, a, b, r, feld) for r in range(enc.records)))
        enc.script.add(smt.implies(name, bedingung))
        enc.script.add(smt.implies(bedingung, name))
        return name

import logging
from dataclasses import dataclass
from itertools import product

from klassen.controller.service import smt
from klassen.domain.guarantee import GuaranteeSpec
from klassen.domain.history import History
from klassen.domain.system_state import SystemState


@dataclass(frozen=True)
class CheckResult:
    """ Ergebnis einer Prüfung; bei Verletzung mit Gegenbeispiel """
    ok: bool
    atom: str = ""
    counterexample: tuple = ()  # EffectIds

    def __bool__(self):
        return self.ok


class ConsistencyService:
    """ Prüft die Garantien aus dem Verband auf einem Systemzustand """

    @staticmethod
    def check_state(state: SystemState, spec: GuaranteeSpec) -> CheckResult:
        effekte = state.ordered()
        pruefungen = (("cv", _cv), ("cc", _cc), ("rc", _rc), ("rr", _rr), ("lin", _lin))
        for atom, pruefung in pruefungen:
            if not spec.requires(atom):
                continue
            gegenbeispiel = pruefung(state, effekte)
            if gegenbeispiel is not None:
                return CheckResult(False, atom, tuple(e.id for e in gegenbeispiel))
        return CheckResult(True)

    @staticmethod
    def check_history(history: History, spec: GuaranteeSpec) -> CheckResult:
        """ Es genügt der Endzustand, da store, ar und vis nur wachsen """
        if not history.states:
            raise ValueError("Leere Historie kann nicht geprüft werden")
        ergebnis = ConsistencyService.check_state(history.final, spec)
        if not ergebnis:
            logging.info(f"Garantie {ergebnis.atom} verletzt: {[str(e) for e in ergebnis.counterexample]}")
        return ergebnis


def _gleiche_transaktion(a, b) -> bool:
    return a.txn_instance is not None and a.txn_instance == b.txn_instance and a.id != b.id


def _cv(state, effekte):
    for a, b, c in product(effekte, repeat=3):
        if state.visible(a.id, b.id) and state.visible(b.id, c.id) and not state.visible(a.id, c.id):
            return a, b, c
    return None


def _cc(state, effekte):
    gegenbeispiel = _cv(state, effekte)
    if gegenbeispiel is not None:
        return gegenbeispiel
    for a, b in product(effekte, repeat=2):
        if _gleiche_transaktion(a, b) and a.id.step != b.id.step \
                and not state.visible(a.id, b.id) and not state.visible(b.id, a.id):
            return a, b
    return None


def _rc(state, effekte):
    for a, b, c in product(effekte, repeat=3):
        if _gleiche_transaktion(a, b) and c.txn_instance != a.txn_instance \
                and state.visible(a.id, c.id) and not state.visible(b.id, c.id):
            return a, b, c
    return None


def _rr(state, effekte):
    for a, b, c in product(effekte, repeat=3):
        if _gleiche_transaktion(a, b) and c.txn_instance != a.txn_instance \
                and state.visible(c.id, a.id) and not state.visible(c.id, b.id):
            return a, b, c
    return None


def _lin(state, effekte):
    for a, b in product(effekte, repeat=2):
        if a.id.step != b.id.step and state.ar_before(a.id, b.id) and not state.visible(a.id, b.id):
            return a, b
    return None


def check_state(state: SystemState, spec: GuaranteeSpec) -> CheckResult:
    return ConsistencyService.check_state(state, spec)


def check_history(history: History, spec: GuaranteeSpec) -> CheckResult:
    return ConsistencyService.check_history(history, spec)


# ---------- Vorlagen für die Kodierung ----------

def smt_templates(spec: GuaranteeSpec, knoten: list, instanz_von: dict, lam, vis, ar) -> list[str]:
    """ Garantien auf Anfrageebene über den gegebenen Knoten

    instanz_von bildet Knoten auf ihre Instanz ab; lam, vis und ar liefern SMT-Terme.
    """
    klauseln = []
    paare = [(a, b) for a in knoten for b in knoten if a != b]
    rang = {k: i for i, k in enumerate(knoten)}

    def gleich(a, b):
        return instanz_von[a] == instanz_von[b]

    if spec.requires("cv"):
        for a, b in paare:
            for c in knoten:
                if c in (a, b):
                    continue
                klauseln.append(smt.implies(smt.and_(lam(a), lam(b), lam(c), vis(a, b), vis(b, c)), vis(a, c)))
    if spec.requires("cc"):
        for a, b in paare:
            if gleich(a, b) and rang[a] < rang[b]:
                klauseln.append(smt.implies(smt.and_(lam(a), lam(b)), smt.or_(vis(a, b), vis(b, a))))
    if spec.requires("rc") or spec.requires("rr"):
        for a, b in paare:
            if not gleich(a, b):
                continue
            for c in knoten:
                if gleich(a, c):
                    continue
                aktiv = smt.and_(lam(a), lam(b), lam(c))
                if spec.requires("rc"):
                    klauseln.append(smt.implies(smt.and_(aktiv, vis(a, c)), vis(b, c)))
                if spec.requires("rr"):
                    klauseln.append(smt.implies(smt.and_(aktiv, vis(c, a)), vis(c, b)))
    if spec.requires("lin"):
        for a, b in paare:
            klauseln.append(smt.implies(smt.and_(lam(a), lam(b), ar(a, b)), vis(a, b)))
    return klauseln

import logging
from dataclasses import dataclass, field, replace

from klassen.controller.service.program_analysis import (LoopBound, QueryOccurrence, key_lookup,
                                                         ordered_where_fields, unroll_program)
from klassen.domain.effect import READ, WRITE, Effect, EffectId, QueryInstanceId
from klassen.domain.errors import BoundExceeded, EvaluationFault, ScheduleMismatch, UnknownPartition
from klassen.domain.expression import (And, Any, AnyValue, Arg, BinOp, BoolConst, Cmp, IntConst, Iter,
                                       Not, Or, Proj, Size, ThisField)
from klassen.domain.history import History, Step
from klassen.domain.oracle import ExecutionOracle, ScheduleStep
from klassen.domain.query import Delete, Insert, Select, SelectAgg, Update
from klassen.domain.schema import ALIVE, Schema
from klassen.domain.system_state import LocalView, SystemState


def euclidean_div(a: int, b: int) -> int:
    """ Ganzzahldivision wie div in SMT-LIB (Rest nie negativ) """
    if b == 0:
        raise EvaluationFault("Division durch Null")
    if b > 0:
        return a // b
    return -(a // -b)


@dataclass
class Env:
    """ Belegungen einer Instanz: Argumente (η), abstrakte Werte (α) und SELECT-Ergebnisse """
    args: dict = field(default_factory=dict)
    abstract: dict = field(default_factory=dict)
    # Bindungsvorkommen (oder Variablenname ohne Abwicklung) -> Liste der Zeilen
    results: dict = field(default_factory=dict)
    unrolled: object = None
    copy: tuple = ()
    any_value: int | None = None
    # verbrauchte Bindungen, daraus ergeben sich die rd⁺-Markierungen
    consumed: set = field(default_factory=set)

    def rows(self, variable: str) -> list:
        schluessel = variable
        if self.unrolled is not None:
            schluessel = self.unrolled.binding_uid(variable, self.copy)
        if schluessel not in self.results:
            raise EvaluationFault(f"Variable {variable} ist nicht gebunden")
        self.consumed.add(schluessel)
        return self.results[schluessel]


def eval_expr(ausdruck, sigma: LocalView | None, env: Env, record: dict | None = None) -> int:
    """ ⇓ für arithmetische Ausdrücke """
    if isinstance(ausdruck, IntConst):
        return ausdruck.value
    if isinstance(ausdruck, Arg):
        if ausdruck.name not in env.args:
            raise EvaluationFault(f"Argument {ausdruck.name} fehlt")
        return env.args[ausdruck.name]
    if isinstance(ausdruck, BinOp):
        links = eval_expr(ausdruck.left, sigma, env, record)
        rechts = eval_expr(ausdruck.right, sigma, env, record)
        if ausdruck.op == "+":
            return links + rechts
        if ausdruck.op == "-":
            return links - rechts
        if ausdruck.op == "*":
            return links * rechts
        # Division wie div in SMT-LIB
        return euclidean_div(links, rechts)
    if isinstance(ausdruck, Any):
        if ausdruck.name not in env.abstract:
            raise EvaluationFault(f"Kein Wert für {ausdruck.name}")
        wert = env.abstract[ausdruck.name]
        if not eval_bool(ausdruck.constraint, sigma, replace(env, any_value=wert)):
            raise EvaluationFault(f"{ausdruck.name}={wert} erfüllt die Bedingung nicht")
        return wert
    if isinstance(ausdruck, AnyValue):
        if env.any_value is None:
            raise EvaluationFault("_ außerhalb von any{}")
        return env.any_value
    if isinstance(ausdruck, Iter):
        raise EvaluationFault("iter ohne Schleifenkopie")
    if isinstance(ausdruck, Size):
        return len(env.rows(ausdruck.var))
    if isinstance(ausdruck, Proj):
        zeilen = env.rows(ausdruck.var)
        index = eval_expr(ausdruck.index, sigma, env, record)
        if not 1 <= index <= len(zeilen):
            raise EvaluationFault(f"proj-Index {index} außerhalb von 1..{len(zeilen)}")
        return zeilen[index - 1].get(ausdruck.field, 0)
    if isinstance(ausdruck, ThisField):
        if record is None:
            raise EvaluationFault(f"this.{ausdruck.field} ohne Datensatz")
        return record.get(ausdruck.field, 0)
    raise EvaluationFault(f"Unbekannter Ausdruck {ausdruck!r}")


def eval_bool(ausdruck, sigma: LocalView | None, env: Env, record: dict | None = None) -> bool:
    if isinstance(ausdruck, BoolConst):
        return ausdruck.value
    if isinstance(ausdruck, Cmp):
        links = eval_expr(ausdruck.left, sigma, env, record)
        rechts = eval_expr(ausdruck.right, sigma, env, record)
        return {"<": links < rechts, "<=": links <= rechts, "=": links == rechts,
                ">": links > rechts, ">=": links >= rechts}[ausdruck.op]
    if isinstance(ausdruck, Not):
        return not eval_bool(ausdruck.operand, sigma, env, record)
    # beide Seiten werden ausgewertet, Fehler brechen unabhängig vom Ergebnis ab
    if isinstance(ausdruck, And):
        links = eval_bool(ausdruck.left, sigma, env, record)
        return eval_bool(ausdruck.right, sigma, env, record) and links
    if isinstance(ausdruck, Or):
        links = eval_bool(ausdruck.left, sigma, env, record)
        return eval_bool(ausdruck.right, sigma, env, record) or links
    raise EvaluationFault(f"Unbekannter boolescher Ausdruck {ausdruck!r}")


def local_view(ar: dict, effekte) -> LocalView:
    """ Δ: wendet die Schreibeffekte in ar-Reihenfolge an """
    zeilen = {}
    quellen = {}
    for effekt in sorted((e for e in effekte if e.is_write), key=lambda e: ar[e.id]):
        zeilen.setdefault((effekt.table, effekt.record_key), {})[effekt.field] = effekt.value
        quellen[effekt.item] = effekt.id
    return LocalView(zeilen, quellen)


def record_of(sigma: LocalView, tabelle, schluessel: tuple) -> dict:
    """ Datensatz aus der Sicht, Schlüsselfelder kommen aus dem Schlüssel """
    zeile = {f: sigma.value(tabelle.name, schluessel, f) for f in tabelle.all_fields}
    for feld, wert in zip(tabelle.primary_key, schluessel):
        zeile[feld] = wert
    return zeile


@dataclass(frozen=True)
class StepContext:
    schema: Schema
    step: int
    query: QueryInstanceId | None = None
    topology: tuple = ()  # Gruppen verbundener Partitionen
    universe: dict | None = None  # Tabelle -> Schlüssel für Scans
    used: bool = True  # Markierung der SELECT-Leseeffekte


@dataclass(frozen=True)
class StepOutcome:
    state: SystemState
    effects: tuple
    result: list | None = None


def step_query(state: SystemState, anfrage, partition: str, env: Env, kontext: StepContext) -> StepOutcome:
    """ Führt eine Anfrage auf einer Partition aus und erweitert (store, ar, vis) """
    if partition not in state.replicas:
        raise UnknownPartition(f"Partition {partition} ist unbekannt")
    # verbundene Partitionen holen zuerst die Effekte nach, die während einer Trennung entstanden sind
    state = _heilen(state, kontext.topology)
    sichtbar = state.replicas[partition]
    sigma = local_view(state.ar, (state.effects[i] for i in sichtbar))
    tabelle = kontext.schema.table(anfrage.table)
    lesen, schreiben, ergebnis = [], [], None

    def rd(schluessel, feld, benutzt=True):
        lesen.append((schluessel, feld, sigma.value(tabelle.name, schluessel, feld),
                      sigma.source(tabelle.name, schluessel, feld), benutzt))

    if isinstance(anfrage, Insert):
        werte = {f: eval_expr(w, sigma, env) for f, w in anfrage.assignments}
        # nicht genannte Felder erhalten 0
        schluessel = tuple(werte[f] for f in tabelle.primary_key)
        for feld in tabelle.fields:
            schreiben.append((schluessel, feld, werte.get(feld, 0)))
        schreiben.append((schluessel, ALIVE, 1))
    else:
        # der neue Wert wird einmal vor der Trefferauswahl ausgewertet
        if isinstance(anfrage, Update):
            neuer_wert = eval_expr(anfrage.value, sigma, env)
        treffer = _passende_datensaetze(anfrage, tabelle, sigma, env, kontext, state, rd)
        if isinstance(anfrage, (Select, SelectAgg)):
            for schluessel in treffer:
                rd(schluessel, anfrage.field, kontext.used)
            zeilen = [record_of(sigma, tabelle, k) for k in treffer]
            if isinstance(anfrage, SelectAgg):
                werte = [z[anfrage.field] for z in zeilen]
                ergebnis = [{anfrage.field: (min if anfrage.agg == "min" else max)(werte)}] if werte else []
            else:
                ergebnis = zeilen
        elif isinstance(anfrage, Update):
            schreiben = [(k, anfrage.field, neuer_wert) for k in treffer]
        elif isinstance(anfrage, Delete):
            schreiben = [(k, ALIVE, 0) for k in treffer]

    # neue Effekte: Lesen vor Schreiben, ar hinter allen vorhandenen Effekten
    neu = []
    naechster_ts = max(state.ar.values(), default=0) + 1
    for ordinal, (schluessel, feld, wert, quelle, benutzt) in enumerate(lesen, start=1):
        neu.append(Effect(EffectId(kontext.step, ordinal), READ, tabelle.name, schluessel, feld, wert,
                          partition, benutzt, kontext.query, quelle))
    for schluessel, feld, wert in schreiben:
        neu.append(Effect(EffectId(kontext.step, len(neu) + 1), WRITE, tabelle.name, schluessel, feld, wert,
                          partition, True, kontext.query))
    return StepOutcome(_erweitern(state, neu, partition, kontext.topology, naechster_ts), tuple(neu), ergebnis)


def _passende_datensaetze(anfrage, tabelle, sigma, env, kontext, state, rd) -> list:
    """ Lebende Datensätze, die WHERE erfüllen; erzeugt nebenbei die Scan-Lesezugriffe ε₂ """
    suche = key_lookup(anfrage.where, tabelle)
    if suche is not None:
        # Zugriff über den Primärschlüssel ohne Scan
        schluessel = tuple(eval_expr(suche[f], sigma, env) for f in tabelle.primary_key)
        kandidaten = [schluessel]
    else:
        if kontext.universe is not None:
            kandidaten = sorted(kontext.universe.get(tabelle.name, ()))
        else:
            kandidaten = sorted({e.record_key for e in state.effects.values() if e.table == tabelle.name})
        felder = ordered_where_fields(anfrage.where, tabelle)
        for schluessel in kandidaten:
            for feld in felder:
                rd(schluessel, feld)
    treffer = []
    for schluessel in kandidaten:
        if sigma.is_alive(tabelle.name, schluessel) \
                and eval_bool(anfrage.where, sigma, env, record_of(sigma, tabelle, schluessel)):
            treffer.append(schluessel)
    return treffer


def _erweitern(state: SystemState, neu: list, partition: str, topologie: tuple, ts: int) -> SystemState:
    ids = frozenset(e.id for e in neu)
    effekte = dict(state.effects)
    effekte.update({e.id: e for e in neu})
    ar = dict(state.ar)
    for versatz, effekt in enumerate(neu):
        ar[effekt.id] = ts + versatz
    # vis′ = vis ∪ {(η, η′) | η bekannt auf p, η′ neu}
    vis = set(state.vis)
    for bekannt in state.replicas[partition]:
        for effekt in neu:
            vis.add((bekannt, effekt.id))
    # Ursprung ist allein die ausführende Partition, bekannt werden die Effekte in ihrer Gruppe
    store = dict(state.store)
    store[partition] = store.get(partition, frozenset()) | ids
    replicas = dict(state.replicas)
    for ziel in _gruppe(partition, topologie, state.replicas):
        replicas[ziel] = replicas[ziel] | ids
    return SystemState(effekte, store, replicas, ar, frozenset(vis))


def _heilen(state: SystemState, topologie: tuple) -> SystemState:
    """ Abgleich innerhalb jeder Gruppe: jedes Mitglied erhält die Effekte aller Ursprungspartitionen der Gruppe """
    gruppen = topologie or (tuple(state.replicas),)
    replicas = dict(state.replicas)
    for gruppe in gruppen:
        mitglieder = [p for p in gruppe if p in replicas]
        ursprung = frozenset().union(*(state.store.get(p, frozenset()) for p in mitglieder))
        for p in mitglieder:
            replicas[p] = replicas[p] | ursprung
    if replicas == state.replicas:
        return state
    return replace(state, replicas=replicas)


def _gruppe(partition: str, topologie: tuple, replicas: dict) -> set:
    """ Partitionen, die zum Zeitpunkt des Schritts mit partition verbunden sind """
    if not topologie:
        return set(replicas)
    for gruppe in topologie:
        if partition in gruppe:
            return set(gruppe) & set(replicas) | {partition}
    return {partition}


def initial_state(oracle: ExecutionOracle, schema: Schema, partitionen: list) -> SystemState:
    """ Zustand 0: je (Schlüssel, Feld) ein Schreibeffekt, überall bekannt """
    effekte = {}
    ar = {}
    for zeile in oracle.initial_db:
        tabelle = schema.table(zeile.table)
        for feld in tabelle.all_fields:
            if tabelle.is_key(feld):
                wert = zeile.key[tabelle.key_index(feld)]
            else:
                wert = zeile.values.get(feld, 1 if feld == ALIVE else 0)
            effekt_id = EffectId(0, len(effekte) + 1)
            effekte[effekt_id] = Effect(effekt_id, WRITE, tabelle.name, tuple(zeile.key), feld, wert,
                                        partitionen[0])
            ar[effekt_id] = len(ar) + 1
    alle = frozenset(effekte)
    store = {p: (alle if i == 0 else frozenset()) for i, p in enumerate(partitionen)}
    replicas = {p: alle for p in partitionen}
    return SystemState(effekte, store, replicas, ar, frozenset())


class _InstanzLauf:
    """ Kontrollfluss einer Transaktionsinstanz über den abgewickelten Vorkommen """

    def __init__(self, name: str, abgewickelt, env: Env):
        self.name = name
        self.abgewickelt = abgewickelt
        self.env = env
        self.position = 0
        self.ausgefuehrt = []
        self._vorschau = None

    def peek(self) -> QueryOccurrence | None:
        """ Nächstes erreichbares Vorkommen; wertet dabei die Bedingungen aus """
        if self._vorschau is not None:
            return self._vorschau
        eintraege = self.abgewickelt.entries
        while self.position < len(eintraege):
            eintrag = eintraege[self.position]
            self.position += 1
            self.env.copy = eintrag.copy
            if not self._bedingungen(eintrag.guards):
                continue
            if isinstance(eintrag, LoopBound):
                anzahl = eval_expr(eintrag.count, None, self.env)
                if anzahl > eintrag.bound:
                    raise BoundExceeded(f"{self.name}: Schleife mit {anzahl} Durchläufen über Schranke {eintrag.bound}")
                continue
            self._vorschau = eintrag
            return eintrag
        return None

    def take(self) -> QueryOccurrence | None:
        vorkommen = self.peek()
        self._vorschau = None
        if vorkommen is not None:
            self.ausgefuehrt.append(vorkommen.uid)
            self.env.copy = vorkommen.copy
        return vorkommen

    def _bedingungen(self, guards: tuple) -> bool:
        # von außen nach innen, Abbruch bei der ersten falschen Bedingung
        for guard in guards:
            if not eval_bool(guard, None, self.env):
                return False
        return True


@dataclass
class _Lauf:
    history: History
    universe: dict
    consumed: dict
    steps: list


class Simulator:
    """ Deterministischer Interpreter über dem replizierten Speicher """

    def __init__(self, programm, schema: Schema, schranke: int = 2):
        self.programm = programm
        self.schema = schema
        self.schranke = schranke
        self.abgewickelt = unroll_program(programm, schranke)

    def run(self, oracle: ExecutionOracle) -> History:
        # erster Lauf: eingefügte Schlüssel und verbrauchte Ergebnisse ermitteln
        erster = self._lauf(oracle, _feste_folge(oracle.schedule), None, None)
        zweiter = self._lauf(oracle, _feste_folge(oracle.schedule), erster.universe, erster.consumed)
        return zweiter.history

    def run_serial(self, oracle: ExecutionOracle, reihenfolge: list, partition: str | None = None) -> History:
        """ Führt die Instanzen vollständig nacheinander auf einer Partition aus

        Ohne Angabe läuft alles auf der ersten Partition des Ablaufplans.
        """
        if partition is None:
            partition = oracle.partition_universe()[0]
        erster = self._lauf(oracle, _serielle_folge(reihenfolge, partition), None, None)
        seriell = replace(oracle, schedule=tuple(erster.steps))
        return self.run(seriell)

    def _lauf(self, oracle, naechster, universum, verbraucht) -> _Lauf:
        partitionen = oracle.partition_universe()
        state = initial_state(oracle, self.schema, partitionen)
        zustaende = [state]
        schritte = []
        ausgefuehrt = []
        laeufe = {}
        eingefuegt = {}
        for zeile in oracle.initial_db:
            eingefuegt.setdefault(zeile.table, set()).add(tuple(zeile.key))
        index = 0
        while True:
            schritt = naechster(laeufe, lambda name: self._starten(name, oracle, laeufe))
            if schritt is None:
                break
            index += 1
            lauf = laeufe.get(schritt.instance) or self._starten(schritt.instance, oracle, laeufe)
            bezeichnung = schritt.label or f"T{index}"
            try:
                vorkommen = lauf.take()
                if vorkommen is None:
                    raise ScheduleMismatch(f"{bezeichnung}: {schritt.instance} hat keine weitere Anfrage")
                if len(lauf.ausgefuehrt) != schritt.ordinal:
                    raise ScheduleMismatch(
                        f"{bezeichnung}: {schritt.instance}-O{schritt.ordinal} erwartet, "
                        f"nächste Anfrage ist O{len(lauf.ausgefuehrt)} ({vorkommen.uid})")
                anfrage_id = QueryInstanceId(schritt.instance, schritt.ordinal, lauf.abgewickelt.name,
                                             vorkommen.uid, vorkommen.site)
                benutzt = True
                if verbraucht is not None:
                    benutzt = vorkommen.uid in verbraucht.get(schritt.instance, set())
                kontext = StepContext(self.schema, index, anfrage_id, schritt.topology, universum, benutzt)
                ergebnis = step_query(state, vorkommen.query, schritt.partition, lauf.env, kontext)
            except ScheduleMismatch as fehler:
                logging.error(f"Ausführung abgebrochen: {fehler}")
                raise
            except (EvaluationFault, BoundExceeded, UnknownPartition) as fehler:
                logging.error(f"Ausführung abgebrochen in {bezeichnung}: {fehler}")
                raise type(fehler)(f"{bezeichnung}: {fehler}") from fehler
            if ergebnis.result is not None:
                lauf.env.results[vorkommen.uid] = ergebnis.result
            # eingefügte Schlüssel bilden im zweiten Lauf das Scan-Universum
            for effekt in ergebnis.effects:
                if effekt.is_write and effekt.field == ALIVE and effekt.value == 1:
                    eingefuegt.setdefault(effekt.table, set()).add(effekt.record_key)
            state = ergebnis.state
            zustaende.append(state)
            schritte.append(Step(index, anfrage_id, schritt.partition,
                                 tuple(e.id for e in ergebnis.effects), bezeichnung))
            ausgefuehrt.append(replace(schritt, label=bezeichnung))
        # alle erreichbaren Anfragen müssen geplant sein
        for name in oracle.instances:
            lauf = laeufe.get(name) or self._starten(name, oracle, laeufe)
            rest = lauf.peek()
            if rest is not None:
                raise ScheduleMismatch(f"{name}: Anfrage {rest.uid} ist erreichbar, aber nicht geplant")
        history = History(tuple(zustaende), tuple(schritte), oracle, self.programm, self.schema)
        verbrauchte = {name: set(lauf.env.consumed) for name, lauf in laeufe.items()}
        return _Lauf(history, eingefuegt, verbrauchte, ausgefuehrt)

    def _starten(self, name: str, oracle: ExecutionOracle, laeufe: dict) -> _InstanzLauf:
        """ e-spawn: neue Instanz mit Argumenten und abstrakten Werten """
        if name in laeufe:
            return laeufe[name]
        txn_name = oracle.instances.get(name)
        if txn_name is None or txn_name not in self.abgewickelt:
            raise ScheduleMismatch(f"Instanz {name} hat keinen bekannten Transaktionstyp")
        abgewickelt = self.abgewickelt[txn_name]
        args = {p: oracle.args.get((name, p)) for p in abgewickelt.txn.params}
        args = {p: w for p, w in args.items() if w is not None}
        # fehlende Argumente fallen erst bei der Auswertung auf
        abstrakt = {abs_name: wert for (instanz, abs_name), wert in oracle.abstract_values.items()
                    if instanz == name}
        laeufe[name] = _InstanzLauf(name, abgewickelt, Env(args, abstrakt, {}, abgewickelt))
        return laeufe[name]


def _feste_folge(schedule: tuple):
    schritte = iter(schedule)

    def naechster(laeufe, starten):
        return next(schritte, None)
    return naechster


def _serielle_folge(reihenfolge: list, partition: str):
    offen = list(reihenfolge)
    zaehler = {}

    def naechster(laeufe, starten):
        while offen:
            name = offen[0]
            # ohne weitere erreichbare Anfrage ist die Instanz fertig
            if starten(name).peek() is not None:
                zaehler[name] = zaehler.get(name, 0) + 1
                return ScheduleStep(name, zaehler[name], partition, ())
            offen.pop(0)
        return None
    return naechster


def run(oracle: ExecutionOracle, programm, schema: Schema, schranke: int = 2) -> History:
    """ Führt den Ablaufplan des Orakels aus und liefert die Historie """
    return Simulator(programm, schema, schranke).run(oracle)

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from klassen.controller.service.program_analysis import check_bounds, reachability_condition, unroll
from klassen.domain.command import If, Iterate, QueryCmd, Skip, sequence
from klassen.domain.errors import ParseError, ValidationError
from klassen.domain.expression import (ARITH_OPS, CMP_OPS, And, Any, AnyValue, Arg, BinOp, BoolConst, Cmp,
                                       IntConst, Iter, Not, Or, Proj, Size, ThisField)
from klassen.domain.program import Program, Transaction
from klassen.domain.query import Delete, Insert, Select, SelectAgg, Update
from klassen.repository.lexer import EOF, IDENT, NUMBER, SYMBOL, tokenize
from klassen.repository.program_converter import (ProgramParser, ProgramTextConverter, parse_init_constraints,
                                                  parse_program, pretty_print)
from klassen.repository.schema_converter import format_schema, parse_schema

SCHEMA_TEXT = """
# zwei Tabellen mit gleichen Feldern
TABLE R (id, f, g) PK (id)
TABLE S (id, f, g) PK (id)
"""


@pytest.fixture
def schema():
    return parse_schema(SCHEMA_TEXT)


# ---------- Lexer und Schema ----------

def test_tokenize_operatoren_und_kommentare():
    tokens = tokenize("a <= 10 # Kommentar\n  b>=c")
    arten = [(t.kind, t.text) for t in tokens]
    assert arten == [(IDENT, "a"), (SYMBOL, "<="), (NUMBER, "10"), (IDENT, "b"), (SYMBOL, ">="),
                     (IDENT, "c"), (EOF, "")]
    assert tokens[3].span.line == 2
    assert tokens[3].span.column == 3


def test_tokenize_unerwartetes_zeichen():
    with pytest.raises(ParseError) as fehler:
        tokenize("a = 1\nb ? 2", "x.txn")
    assert fehler.value.span.line == 2
    assert "x.txn:2:3" in str(fehler.value)


def test_schema_lesen(schema):
    assert schema.table_names() == ["R", "S"]
    assert schema.table("R").primary_key == ("id",)
    assert schema.table("R").all_fields == ("id", "f", "g", "alive")
    assert parse_schema(format_schema(schema)) == schema


@pytest.mark.parametrize("text", [
    "TABLE R (id, f) PK (x)",
    "TABLE R (id, id) PK (id)",
    "TABLE R (id, alive) PK (id)",
    "TABLE R (id) PK ()",
    "TABLE R (id) PK (id)\nTABLE R (id) PK (id)",
    "TABLE SELECT (id) PK (id)",
])
def test_schema_fehler(text):
    with pytest.raises(ParseError):
        parse_schema(text)


# ---------- Programme ----------

def test_benchmark_programm_lesen(benchmark):
    _, programm, _ = benchmark("payment")
    txn = programm.transaction("payment")
    assert txn.params == ("id",)
    erste, zweite = txn.body.first, txn.body.second
    assert isinstance(erste.query, Select)
    assert erste.query.table == "CUST"
    assert erste.query.where == Cmp(ThisField("c_id"), "=", Arg("id"))
    assert isinstance(zweite.query, Update)
    assert zweite.query.value == BinOp("+", Proj("c_pay_cnt", "cnt", IntConst(1)), IntConst(1))


def test_tabelle_ueber_qualifikation(schema):
    text = "t(k) { SELECT S.f AS v WHERE this.id = k; UPDATE R SET g = 1 WHERE R.id = k }"
    programm = parse_program(text, schema)
    erste, zweite = programm.transactions[0].body.first, programm.transactions[0].body.second
    assert erste.query.table == "S"
    assert zweite.query.table == "R"
    assert zweite.query.where == Cmp(ThisField("id"), "=", Arg("k"))


def test_schluesselwoerter_ohne_gross_kleinschreibung(schema):
    text = "t(k) { @R select f as v where this.id = k and not (this.g < 0) }"
    anfrage = parse_program(text, schema).transactions[0].body.query
    assert anfrage.where == And(Cmp(ThisField("id"), "=", Arg("k")), Not(Cmp(ThisField("g"), "<", IntConst(0))))


def test_leerer_rumpf_ist_skip(schema):
    programm = parse_program("t() { }", schema)
    assert programm.transactions[0].body == Skip()


@pytest.mark.parametrize("text", [
    "t(k) { @R SELECT f AS v WHERE this.id = k",
    "t(k) { @R SELECT f v WHERE this.id = k }",
    "t(select) { SKIP }",
    "t(k) { @R UPDATE SET f = WHERE this.id = k }",
    "t(k) { @R INSERT INTO R (id, f) VALUES (k) }",
    "t(k) { @X SELECT f AS v WHERE this.id = k }",
])
def test_syntaxfehler(schema, text):
    with pytest.raises(ParseError):
        parse_program(text, schema)


@pytest.mark.parametrize("text, meldung", [
    ("t(k) { SELECT f AS v WHERE this.id = k }", "nicht bestimmbar"),
    ("t(k) { @R UPDATE SET id = 1 WHERE this.id = k }", "darf nicht aktualisiert"),
    ("t(k) { @R UPDATE SET f = iter WHERE this.id = k }", "iter außerhalb"),
    ("t(k) { @R UPDATE SET f = size(v) WHERE this.id = k }", "nicht durch ein früheres SELECT"),
    ("t(k) { @R UPDATE SET f = this.g WHERE this.id = k }", "außerhalb einer WHERE"),
    ("t(k) { @R UPDATE SET f = x WHERE this.id = k }", "Unbekannter Parameter"),
    ("t(k, k) { SKIP }", "Parameter doppelt"),
    ("t(k) { @R INSERT INTO R (f) VALUES (k) }", "ohne Schlüsselfeld"),
    ("t(k) { @R UPDATE SET h = 1 WHERE this.id = k }", "existiert nicht"),
])
def test_validierung(schema, text, meldung):
    with pytest.raises(ValidationError) as fehler:
        parse_program(text, schema)
    assert any(meldung in str(d) for d in fehler.value.diagnostics)


def test_anfangsbedingungen(schema):
    bedingungen = parse_init_constraints("R: EMPTY\n# Kommentar\nS: this.f = 10 AND this.g > 0\n", schema)
    assert bedingungen[0].table == "R" and bedingungen[0].empty
    assert bedingungen[1].predicate == And(Cmp(ThisField("f"), "=", IntConst(10)),
                                           Cmp(ThisField("g"), ">", IntConst(0)))
    with pytest.raises(ParseError):
        parse_init_constraints("X: EMPTY", schema)
    with pytest.raises(ParseError):
        parse_init_constraints("R this.f = 1", schema)


# ---------- Abwicklung und Erreichbarkeit ----------

def test_erreichbarkeit_verschachtelter_bedingungen(schema):
    text = "t(a, b) { IF (a > 0) { IF (b = 1) { @R UPDATE SET f = 1 WHERE this.id = a } } }"
    programm = parse_program(text, schema)
    assert reachability_condition(programm, "t", "q1") == And(Cmp(Arg("a"), ">", IntConst(0)),
                                                              Cmp(Arg("b"), "=", IntConst(1)))


def test_abwicklung_setzt_iter_ein(schema):
    text = "t(n) { ITERATE (n) { @R UPDATE SET f = iter WHERE this.id = iter } }"
    programm = parse_program(text, schema)
    abgewickelt = unroll(programm.transactions[0], 2)
    assert [v.uid for v in abgewickelt.occurrences] == ["q1[1]", "q1[2]"]
    erste = abgewickelt.occurrence("q1[1]")
    assert erste.reach == Cmp(IntConst(1), "<=", Arg("n"))
    assert erste.query.value == IntConst(1)
    assert erste.site == abgewickelt.occurrence("q1[2]").site == 1


def test_datenfluss_zwischen_anfragen(benchmark):
    _, programm, _ = benchmark("inc")
    inc = unroll(programm.transaction("inc"), 2)
    assert inc.dataflow_linked("q1", "q2")
    _, programm, _ = benchmark("upd")
    upd = unroll(programm.transaction("upd"), 2)
    assert not upd.dataflow_linked("q1", "q2")


def test_konstante_schleife_ueber_schranke(schema):
    programm = parse_program("t() { ITERATE (3) { @R UPDATE SET f = 1 WHERE this.id = iter } }", schema)
    assert len(check_bounds(programm, 2)) == 1
    assert check_bounds(programm, 3) == []


# ---------- Rundlauf über zufällige Programme ----------

PARAMS = ("a", "b", "k")
VARS = ("v", "w")
FIELDS = ("f", "g")
TABLES = ("R", "S")
NAMES = ("alpha", "beta", "gamma")

ganzzahlen = st.integers(min_value=-5, max_value=20).map(IntConst)
any_bedingung = st.builds(Cmp, st.just(AnyValue()), st.sampled_from(CMP_OPS), ganzzahlen)

ausdruecke = st.recursive(
    st.one_of(
        ganzzahlen,
        st.sampled_from(PARAMS).map(Arg),
        st.just(Iter()),
        st.sampled_from(VARS).map(Size),
        st.sampled_from(FIELDS).map(ThisField),
        st.builds(Any, any_bedingung),
    ),
    lambda kinder: st.one_of(
        st.builds(BinOp, st.sampled_from(ARITH_OPS), kinder, kinder),
        st.builds(Proj, st.sampled_from(FIELDS), st.sampled_from(VARS), kinder),
    ),
    max_leaves=5,
)

bedingungen = st.recursive(
    st.one_of(st.builds(Cmp, ausdruecke, st.sampled_from(CMP_OPS), ausdruecke), st.builds(BoolConst, st.booleans())),
    lambda kinder: st.one_of(
        st.builds(Not, kinder),
        st.builds(And, kinder, kinder),
        st.builds(Or, kinder, kinder),
    ),
    max_leaves=4,
)


@st.composite
def inserts(draw, tabelle):
    felder = draw(st.lists(st.sampled_from(("id",) + FIELDS), min_size=1, max_size=3, unique=True))
    return Insert(tabelle, tuple((f, draw(ausdruecke)) for f in felder))


@st.composite
def anfragen(draw):
    tabelle = draw(st.sampled_from(TABLES))
    art = draw(st.sampled_from(("select", "agg", "update", "insert", "delete")))
    if art == "select":
        return Select(tabelle, draw(st.sampled_from(FIELDS)), draw(st.sampled_from(VARS)), draw(bedingungen))
    if art == "agg":
        return SelectAgg(tabelle, draw(st.sampled_from(("min", "max"))), draw(st.sampled_from(FIELDS)),
                         draw(st.sampled_from(VARS)), draw(bedingungen))
    if art == "update":
        return Update(tabelle, draw(st.sampled_from(FIELDS)), draw(ausdruecke), draw(bedingungen))
    if art == "insert":
        return draw(inserts(tabelle))
    return Delete(tabelle, draw(bedingungen))


anweisungen = st.recursive(
    st.one_of(anfragen().map(QueryCmd), st.just(Skip())),
    lambda kinder: st.one_of(
        st.builds(If, bedingungen, st.lists(kinder, max_size=3).map(sequence)),
        st.builds(Iterate, ausdruecke, st.lists(kinder, max_size=3).map(sequence)),
    ),
    max_leaves=4,
)


@st.composite
def programme(draw):
    namen = draw(st.lists(st.sampled_from(NAMES), min_size=1, max_size=3, unique=True))
    transaktionen = []
    for name in namen:
        parameter = draw(st.lists(st.sampled_from(PARAMS), max_size=3, unique=True))
        rumpf = sequence(draw(st.lists(anweisungen, max_size=4)))
        transaktionen.append(Transaction(name, tuple(parameter), rumpf))
    return Program(tuple(transaktionen))


@settings(max_examples=1000, deadline=None,
          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
@given(programm=programme())
def test_rundlauf_pretty_print(programm):
    schema = parse_schema(SCHEMA_TEXT)
    text = pretty_print(programm)
    assert ProgramParser(text, schema).program() == programm
    # Ausgabe ist ein Fixpunkt
    assert pretty_print(ProgramParser(text, schema).program()) == text


@pytest.mark.parametrize("name", ["dirty_read", "disjoint", "inc", "partition", "payment", "restock", "upd",
                                  "write_skew"])
def test_rundlauf_benchmarks(benchmark, name):
    # jeder mitgelieferte Benchmark muss sich laden und prüfen lassen
    schema, programm, _ = benchmark(name)
    text = ProgramTextConverter.serialisieren(programm)
    assert ProgramTextConverter.deserialisieren(text, schema) == programm

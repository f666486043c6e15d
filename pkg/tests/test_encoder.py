import shlex
import sys

import pytest

from klassen.controller.service import smt
from klassen.controller.service.depgraph import DependencyService
from klassen.controller.service.encoder import Encoder
from klassen.controller.service.solver import SAT, UNKNOWN, UNSAT, SubprocessSolver, Z3Solver, create_solver
from klassen.domain.decoded_model import PlanInstance
from klassen.domain.errors import EncodingError, ModelDecodeError, SolverError
from klassen.domain.guarantee import SER
from klassen.repository.program_converter import parse_program
from klassen.repository.schema_converter import parse_schema


# ---------- Terme ----------

def test_vereinfachung_boolescher_terme():
    assert smt.and_() == smt.TRUE
    assert smt.and_("a", smt.TRUE) == "a"
    assert smt.and_("a", smt.FALSE) == smt.FALSE
    assert smt.or_("a", "b") == "(or a b)"
    assert smt.or_("a", smt.TRUE) == smt.TRUE
    assert smt.not_(smt.FALSE) == smt.TRUE
    assert smt.implies(smt.TRUE, "b") == "b"
    assert smt.ite(smt.FALSE, "x", "y") == "y"
    assert smt.eq("x", "x") == smt.TRUE
    assert smt.distinct("x") == smt.TRUE


def test_negative_zahlen():
    assert smt.num(3) == "3"
    assert smt.num(-3) == "(- 3)"


def test_lexikographisch_kleiner():
    assert smt.lex_less([], []) == smt.FALSE
    assert smt.lex_less(["a"], ["b"]) == "(< a b)"
    assert smt.lex_less(["a", "c"], ["b", "d"]) == "(or (< a b) (and (= a b) (< c d)))"


def test_skript_text():
    skript = smt.Script()
    skript.declare("x", "Int")
    skript.declare("x", "Int")
    skript.define("y", "Int", "(+ x 1)")
    skript.add(smt.TRUE)
    text = skript.text("Kopf\nzweite Zeile")
    assert text.splitlines() == [
        "; Kopf",
        "; zweite Zeile",
        "(set-option :produce-models true)",
        "(declare-const x Int)",
        "(declare-const y Int)",
        "(assert (= y (+ x 1)))",
        "(check-sat)",
        "(get-model)",
    ]


# ---------- Modelle ----------

@pytest.mark.parametrize("text", [
    "(model (define-fun x () Int (- 4)) (define-fun b () Bool true))",
    "(\n  (define-fun x () Int\n    (- 4))\n  (define-fun b () Bool\n    true)\n)",
])
def test_modell_lesen(text):
    assert smt.parse_model(text) == {"x": -4, "b": True}


def test_modell_mit_funktionen_und_namen_in_strichen():
    text = "((define-fun |a b| () Int 2) (define-fun f ((y Int)) Int y))"
    assert smt.parse_model(text) == {"a b": 2}


@pytest.mark.parametrize("text", [
    "((define-fun x () Int 1)",
    ")",
    "((define-fun x () Int abc))",
    "((define-fun x () Int))",
])
def test_modell_fehler(text):
    with pytest.raises(ModelDecodeError):
        smt.parse_model(text)


# ---------- Solver ----------

def _problem(obere_schranke: int) -> str:
    skript = smt.Script()
    x = skript.declare("x", "Int")
    skript.add(smt.lt("3", x))
    skript.add(smt.lt(x, str(obere_schranke)))
    return skript.text()


def test_z3_im_prozess():
    solver = create_solver("", 10)
    assert isinstance(solver, Z3Solver)
    ergebnis = solver.check(_problem(5))
    assert ergebnis.sat
    assert ergebnis.model["x"] == 4
    assert solver.check(_problem(4)).status == UNSAT
    assert solver.calls == 2


def test_z3_modell_ueber_api():
    problem = ("(declare-const |a b| Int)\n(declare-const n Int)\n(declare-const b Bool)\n"
               "(declare-fun f (Int) Int)\n(assert (= n (- 4)))\n(assert b)\n"
               "(assert (= (f n) 2))\n(assert (= |a b| (f n)))\n(check-sat)\n(get-model)\n")
    ergebnis = Z3Solver(10).check(problem)
    assert ergebnis.sat
    # f hat Parameter und fehlt in der Belegung
    assert ergebnis.model == {"a b": 2, "n": -4, "b": True}


def test_z3_lehnt_fehlerhaftes_problem_ab():
    with pytest.raises(SolverError):
        Z3Solver(10).check("(assert (> y 0))")


@pytest.fixture
def solver_skript(tmp_path):
    def schreiben(ausgabe: str) -> SubprocessSolver:
        skript = tmp_path / "solver.py"
        skript.write_text(f"import sys\nsys.stdin.read()\nprint({ausgabe!r})\n", encoding="utf-8")
        return SubprocessSolver(f"{shlex.quote(sys.executable)} {shlex.quote(str(skript))}", 10)
    return schreiben


def test_externer_solver_sat(solver_skript):
    solver = solver_skript("sat\n(model (define-fun x () Int 7))")
    ergebnis = solver.check(_problem(10))
    assert ergebnis.status == SAT
    assert ergebnis.model == {"x": 7}


@pytest.mark.parametrize("ausgabe, status", [("unsat", UNSAT), ("unknown", UNKNOWN), ("timeout", UNKNOWN)])
def test_externer_solver_ohne_modell(solver_skript, ausgabe, status):
    assert solver_skript(ausgabe).check(_problem(10)).status == status


def test_externer_solver_unerwartete_ausgabe(solver_skript):
    with pytest.raises(SolverError):
        solver_skript("(error \"kaputt\")").check(_problem(10))


def test_externer_solver_fehlt(tmp_path):
    with pytest.raises(SolverError):
        SubprocessSolver(str(tmp_path / "gibt_es_nicht"), 10).check(_problem(10))
    with pytest.raises(SolverError):
        SubprocessSolver("   ", 10)


def test_externer_solver_ueber_create_solver():
    assert isinstance(create_solver("z3 -in", 10), SubprocessSolver)


# ---------- Kodierung ----------

@pytest.fixture
def upd(benchmark):
    schema, programm, _ = benchmark("upd")
    return schema, programm


def _plan(*typen):
    return tuple(PlanInstance(i, txn) for i, txn in enumerate(typen, start=1))


def test_zu_kurzer_zyklus(upd):
    schema, programm = upd
    with pytest.raises(EncodingError):
        Encoder(programm, schema, _plan("upd", "upd"), 2)


def test_unbekannter_typ(upd):
    schema, programm = upd
    with pytest.raises(EncodingError, match="inc"):
        Encoder(programm, schema, _plan("upd", "inc"), 4)


def test_aggregation_wird_nicht_kodiert():
    schema = parse_schema("TABLE R (id, f) PK (id)")
    programm = parse_program("top() { @R SELECT MAX(f) AS m WHERE this.f > 0 }", schema)
    with pytest.raises(EncodingError, match="Aggregation"):
        Encoder(programm, schema, _plan("top", "top"), 3)


def test_problemtext(upd):
    schema, programm = upd
    encoder = Encoder(programm, schema, _plan("upd", "upd"), 4)
    text = encoder.problem(["(> 1 0)"], "upd x2")
    assert text.startswith("; upd x2\n")
    assert "(declare-const lam_n1_1 Bool)" in text
    assert text.endswith("(assert (> 1 0))\n(check-sat)\n(get-model)\n")


def test_verlorenes_update_wird_gefunden(upd):
    schema, programm = upd
    encoder = Encoder(programm, schema, _plan("upd", "upd"), 4, records=2)
    solver = Z3Solver(60)
    ergebnis = solver.check(encoder.problem())
    assert ergebnis.sat
    modell = encoder.decode(ergebnis.model)
    assert len(modell.cycle) == 4
    assert len(set(modell.cycle)) == 4
    assert set(modell.cycle) <= modell.executed
    fingerabdruck = encoder.fingerprint(modell)
    assert len(fingerabdruck) == 4
    assert {element[0] for element in fingerabdruck} == {"upd"}
    assert DependencyService.anomaly_type(fingerabdruck) == "Lost Update"

    # derselbe Fingerabdruck wird danach ausgeschlossen
    weiter = solver.check(encoder.problem(encoder.enc_neg([fingerabdruck])))
    if weiter.sat:
        assert encoder.fingerprint(encoder.decode(weiter.model)) != fingerabdruck


def test_serialisierbarkeit_schliesst_zyklen_aus(upd):
    schema, programm = upd
    encoder = Encoder(programm, schema, _plan("upd", "upd"), 4, records=2, spec=SER)
    assert Z3Solver(60).check(encoder.problem()).status == UNSAT


def test_nur_interne_zyklen_bei_upd(upd):
    schema, programm = upd
    encoder = Encoder(programm, schema, _plan("upd", "upd"), 4, records=2, internal=True)
    assert Z3Solver(60).check(encoder.problem()).status == UNSAT

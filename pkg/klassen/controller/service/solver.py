import logging
import shlex
import subprocess
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import z3

from klassen.controller.service.smt import parse_model
from klassen.domain.errors import ModelDecodeError, SolverError

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverResult:
    status: str
    model: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def sat(self) -> bool:
        return self.status == SAT


class ISolver(ABC):
    """ Schnittstelle für SMT-Solver, die ein Problem im Textformat lösen """

    def __init__(self, timeout: int = 120):
        self.timeout = timeout  # Sekunden
        self.calls = 0

    @abstractmethod
    def check(self, problem: str) -> SolverResult:
        pass


class Z3Solver(ISolver):
    """ z3 im selben Prozess """

    def check(self, problem: str) -> SolverResult:
        self.calls += 1
        start = time.perf_counter()
        # check-sat und get-model übernimmt die API
        zeilen = [z for z in problem.splitlines() if z.strip() not in ("(check-sat)", "(get-model)")]
        solver = z3.Solver()
        solver.set("timeout", int(self.timeout * 1000))
        try:
            solver.from_string("\n".join(zeilen))
        except z3.Z3Exception as fehler:
            logging.error(f"z3 lehnt das Problem ab: {fehler}")
            raise SolverError(f"z3 lehnt das Problem ab: {fehler}") from fehler
        antwort = solver.check()
        dauer = time.perf_counter() - start
        if antwort == z3.sat:
            return SolverResult(SAT, _belegung(solver.model()), dauer)
        if antwort == z3.unsat:
            return SolverResult(UNSAT, {}, dauer)
        logging.warning(f"z3 liefert unknown: {solver.reason_unknown()}")
        return SolverResult(UNKNOWN, {}, dauer)


def _belegung(modell: z3.ModelRef) -> dict:
    """ Konstanten des Modells als Name -> int oder bool, Funktionen werden übergangen """
    belegung = {}
    for deklaration in modell.decls():
        if deklaration.arity() > 0:
            continue
        wert = modell[deklaration]
        if z3.is_int_value(wert):
            belegung[deklaration.name()] = wert.as_long()
        elif z3.is_true(wert) or z3.is_false(wert):
            belegung[deklaration.name()] = z3.is_true(wert)
        else:
            raise ModelDecodeError(f"Unerwarteter Wert für {deklaration.name()}: {wert}")
    return belegung


class SubprocessSolver(ISolver):
    """ Externer Solver, liest SMT-LIB auf stdin und schreibt Ergebnis und Modell auf stdout """

    def __init__(self, befehl: str, timeout: int = 120):
        super().__init__(timeout)
        self.befehl = shlex.split(befehl)
        if not self.befehl:
            raise SolverError("Leerer Solverbefehl")

    def check(self, problem: str) -> SolverResult:
        self.calls += 1
        start = time.perf_counter()
        try:
            prozess = subprocess.run(self.befehl, input=problem, capture_output=True, text=True,
                                     timeout=self.timeout + 5)
        except subprocess.TimeoutExpired:
            logging.warning(f"Solver nach {self.timeout} s abgebrochen")
            return SolverResult(UNKNOWN, {}, time.perf_counter() - start)
        except OSError as fehler:
            logging.error(f"Solver {self.befehl[0]} konnte nicht gestartet werden: {fehler}")
            raise SolverError(f"Solver {self.befehl[0]} konnte nicht gestartet werden") from fehler
        dauer = time.perf_counter() - start
        ausgabe = prozess.stdout.strip()
        erste, _, rest = ausgabe.partition("\n")
        erste = erste.strip()
        if erste == SAT:
            return SolverResult(SAT, parse_model(rest), dauer)
        if erste == UNSAT:
            return SolverResult(UNSAT, {}, dauer)
        if erste == UNKNOWN or erste == "timeout":
            return SolverResult(UNKNOWN, {}, dauer)
        logging.error(f"Unerwartete Solverausgabe: {ausgabe[:200]} {prozess.stderr[:200]}")
        raise SolverError(f"Unerwartete Solverausgabe: {erste!r}")


def create_solver(pfad: str | None, timeout: int) -> ISolver:
    """ Leerer Pfad bedeutet z3 im Prozess """
    if pfad:
        logging.info(f"Externer Solver: {pfad}")
        return SubprocessSolver(pfad, timeout)
    return Z3Solver(timeout)

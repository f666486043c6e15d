from abc import ABC, abstractmethod
from typing import Generic, TypeVar

T = TypeVar("T")


class IRepository(ABC, Generic[T]):
    """ Interface zum Speichern und Laden von Analysedateien (Quelltext, Konfiguration, Berichte, Traces) """
    # Methoden müssen von Kindklasse überschrieben werden.
    @abstractmethod
    def speichern(self, objekt: T) -> None:
        pass
    @abstractmethod
    def laden(self) -> T:
        pass

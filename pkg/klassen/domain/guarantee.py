from dataclasses import dataclass

# Atome des Garantieverbands, ec bedeutet keine Einschränkung über die Semantik hinaus
ATOMS = ("ec", "cv", "cc", "rc", "rr", "lin")


@dataclass(frozen=True)
class GuaranteeSpec:
    """ Konjunktion von Konsistenz- und Isolationsgarantien """
    atoms: frozenset = frozenset()

    @staticmethod
    def parse(text: str) -> "GuaranteeSpec":
        """ Liest z.B. 'ser' oder 'cc+rc'; unbekannte Namen führen zu ValueError """
        atome = set()
        for teil in text.lower().split("+"):
            name = teil.strip()
            if name == "ser":
                # ser ist strukturell rc ∧ rr ∧ lin
                atome.update(("rc", "rr", "lin"))
            elif name == "cc":
                atome.update(("cc", "cv"))
            elif name in ATOMS:
                if name != "ec":
                    atome.add(name)
            else:
                raise ValueError(f"Unbekannte Garantie: {name!r}")
        return GuaranteeSpec(frozenset(atome))

    def requires(self, atom: str) -> bool:
        return atom in self.atoms

    @property
    def is_ec(self) -> bool:
        return not self.atoms

    @property
    def is_ser(self) -> bool:
        return {"rc", "rr", "lin"} <= self.atoms

    def __str__(self):
        if self.is_ec:
            return "ec"
        return "+".join(a for a in ATOMS if a in self.atoms)


EC = GuaranteeSpec()
SER = GuaranteeSpec.parse("ser")

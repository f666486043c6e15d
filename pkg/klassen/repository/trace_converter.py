from klassen.domain.history import History


class TraceTextConverter:
    """ Zeilenformat der Historie: ein Effekt pro Zeile, 'step id kind key field value partition' """

    @staticmethod
    def serialisieren(history: History) -> str:
        zustand = history.final
        zeilen = []
        for effekt in zustand.ordered():
            if effekt.query is not None:
                continue
            zeilen.append(TraceTextConverter._zeile(0, effekt))
        for schritt in history.steps:
            for effekt_id in schritt.effects:
                zeilen.append(TraceTextConverter._zeile(schritt.index, zustand.effect(effekt_id)))
        return "\n".join(zeilen) + ("\n" if zeilen else "")

    @staticmethod
    def _zeile(schritt: int, effekt) -> str:
        art = effekt.kind if effekt.is_write or effekt.used else f"{effekt.kind}+"
        schluessel = ",".join(str(k) for k in effekt.record_key)
        return f"{schritt} {effekt.id} {art} {effekt.table}:{schluessel} {effekt.field} {effekt.value} {effekt.partition}"

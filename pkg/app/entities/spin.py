from pydantic import BaseModel

LOW_ORIGIN = "-"
HIGH_ORIGIN = "+"
LOW_VALUE = -1.0
HIGH_VALUE = 2.0


class Spin(BaseModel):
    """A continuous spin tagged with the vertex whose initial uniform it copies.

    Equality is origin equality. The two sentinel spins used by the extremal frozen boundaries
    carry the origins ``-`` (below every uniform) and ``+`` (above every uniform).
    """
    value: float
    origin: str
    model_config = {
        'frozen': True
    }

    def __eq__(self, other):
        if not isinstance(other, Spin):
            return NotImplemented
        return self.origin == other.origin

    def __hash__(self):
        return hash(self.origin)

    @property
    def is_sentinel(self) -> bool:
        return self.origin in (LOW_ORIGIN, HIGH_ORIGIN)

    def sort_key(self) -> tuple[float, str]:
        return self.value, self.origin


LOW_SPIN = Spin(value=LOW_VALUE, origin=LOW_ORIGIN)
HIGH_SPIN = Spin(value=HIGH_VALUE, origin=HIGH_ORIGIN)

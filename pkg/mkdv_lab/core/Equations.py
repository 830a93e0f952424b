import math
from dataclasses import dataclass, replace
from enum import Enum


class Variant(Enum):
    """Enumerate of equations of the mKdV family."""
    MKDV = 'mkdv'
    MKDV1 = 'mkdv1'
    MKDV2 = 'mkdv2'

    @staticmethod
    def get_all_variants():
        """Returns all variant names."""
        return list(map(
            lambda x: x.value,
            Variant))


def _validate_sign(sign) -> int:
    if sign not in (1, -1):
        raise ValueError(f'sign must be +1 or -1, got {sign!r}')
    return int(sign)


@dataclass(frozen=True)
class EquationSpec:
    """Equation variant together with the sign of its cubic term.

    ``sign = +1`` is the ``+|u|^2 u_x`` equation, ``sign = -1`` the other one.
    """
    variant: Variant = Variant.MKDV
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'variant', Variant(self.variant))
        object.__setattr__(self, 'sign', _validate_sign(self.sign))

    def to_dict(self) -> dict:
        return {'variant': self.variant.value, 'sign': self.sign}

    @classmethod
    def from_dict(cls, data: dict) -> 'EquationSpec':
        return cls(Variant(data['variant']), int(data['sign']))

    def __str__(self):
        return f'{self.variant.value}({self.sign:+d})'


class GaugeKind(Enum):
    G1 = 'G1'
    G2 = 'G2'


# variant reached by the forward gauge from the key variant
GAUGE_TARGETS = {
    GaugeKind.G1: (Variant.MKDV, Variant.MKDV1),
    GaugeKind.G2: (Variant.MKDV1, Variant.MKDV2),
}


@dataclass(frozen=True)
class GaugeSpec:
    """One gauge transformation as recorded on a trajectory.

    ``scalar`` is the mass for G1 and the momentum for G2. ``inverse`` marks
    the inverse map (the record pushed when an ungauged trajectory is inverted).
    """
    which: GaugeKind
    sign: int
    scalar: float
    inverse: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'which', GaugeKind(self.which))
        object.__setattr__(self, 'sign', _validate_sign(self.sign))
        object.__setattr__(self, 'scalar', float(self.scalar))
        if not math.isfinite(self.scalar):
            raise ValueError(f'gauge scalar must be finite, got {self.scalar}')

    def inverted(self) -> 'GaugeSpec':
        return replace(self, inverse=not self.inverse)

    def matches(self, other: 'GaugeSpec') -> bool:
        return (self.which == other.which and self.sign == other.sign and self.inverse == other.inverse
                and math.isclose(self.scalar, other.scalar, rel_tol=1e-12, abs_tol=1e-15))

    def target_variant(self, variant: Variant) -> Variant:
        """Equation solved by the gauged trajectory."""
        source, target = GAUGE_TARGETS[self.which]
        if self.inverse:
            source, target = target, source
        return target if variant == source else variant

    def to_dict(self) -> dict:
        return {'gauge': self.which.value, 'sign': self.sign, 'scalar': self.scalar, 'inverse': self.inverse}

    @classmethod
    def from_dict(cls, data: dict) -> 'GaugeSpec':
        return cls(GaugeKind(data['gauge']), int(data['sign']), float(data['scalar']), bool(data.get('inverse', False)))

"""Exception types raised across the package."""


class CokernelLabError(Exception):
    """Base class for all package errors."""


class GroupTooLarge(CokernelLabError):
    """An enumeration was requested on a group beyond the enumeration guard."""


class NotInSp(CokernelLabError, ValueError):
    """The group is not of the form G x G (some part has odd multiplicity)."""


class NotASubgroup(CokernelLabError, ValueError):
    pass


class NotPrimePower(CokernelLabError, ValueError):
    pass


class NonconvergentSpec(CokernelLabError, ValueError):
    """A product term family is not of the admissible 1 - q^(a i + b) form."""


class MissingPrime(CokernelLabError, ValueError):
    pass


class LevelTooLow(CokernelLabError, ValueError):
    """The truncation level cannot resolve Hom into the requested group."""


class TooLargeToEnumerate(CokernelLabError):
    pass


class ImaginaryResidue(CokernelLabError, ArithmeticError):
    """A character sum that must be real has a non-negligible imaginary part."""


class ConstantMap(CokernelLabError, ValueError):
    """An affine map expected to be non-constant is constant."""


class ConfigError(CokernelLabError, ValueError):
    pass

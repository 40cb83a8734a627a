"""Exception types raised across the package.

Every error carries a short machine-readable ``code`` so the command line
front end can emit it as JSON.
"""


class EMEError(Exception):
    code = "eme_error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


def _jsonable(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return repr(v)


class ConfigError(EMEError):
    code = "config_error"


class DegreeOverflow(EMEError):
    code = "degree_overflow"


class TruncationTooSmall(EMEError):
    code = "truncation_too_small"


class NonPositiveDefinite(EMEError):
    code = "non_positive_definite"


class DegenerateDetuning(EMEError):
    code = "degenerate_detuning"


class ResonanceWithoutDamping(EMEError):
    code = "resonance_without_damping"


class ResonantDenominator(EMEError):
    code = "resonant_denominator"


class AccidentalDegeneracy(EMEError):
    code = "accidental_degeneracy"


class AdaptiveFailure(EMEError):
    code = "adaptive_failure"


class TruncationLeak(EMEError):
    code = "truncation_leak"


class DimensionMismatch(EMEError):
    code = "dimension_mismatch"


class NonMonotoneData(EMEError):
    code = "non_monotone_data"

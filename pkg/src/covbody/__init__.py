"""covbody: weighted mth-order covariogram-type bodies of convex polytopes.

Covariograms, difference bodies, projection bodies and radial mean bodies
over polytopes with weighted measures, plus a numerical verification harness
for the sharp inequalities relating them (Rogers-Shephard, Zhang, Berwald
chains, chord-integral bounds).
"""

from .errors import CovbodyError, DegenerateMeasureError, InputError, NumericError

__version__ = "0.1.0"

__all__ = [
    "CovbodyError", "InputError", "NumericError", "DegenerateMeasureError",
    "__version__",
]

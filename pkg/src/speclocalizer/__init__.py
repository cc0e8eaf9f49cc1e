"""Hermitian forms, K_0 labels for operator systems, and the even spectral localizer."""

from .errors import (
    BoundViolated,
    Degenerate,
    GapCollapse,
    LocalizerError,
    NotHermitian,
    NotUnitary,
    OddSignature,
    PadTooSmall,
    PlateauBroken,
    ShapeMismatch,
    SignatureMismatch,
    SingularLocalizer,
)
from .hermitian import (
    HermitianForm,
    HomotopyCertificate,
    RawHermitian,
    direct_sum,
    linear_homotopy,
    make_form,
    operator_norm,
    perturbation_homotopy,
    rigidity_bound,
    whitehead_path,
    witt_projection,
)
from .localizer import (
    LocalizerInstance,
    SweepReport,
    additivity_check,
    build_localizer,
    kappa_plateau,
    localizer_index,
    sweep,
)

__version__ = "0.1.0"

"""Desk-scale reproduction of collective vacuum Rabi oscillations, W-state
preparation, tomography and entanglement certification for up to three
transmons sharing one photon with a microwave resonator."""

__version__ = "0.1.0"

from .device import (  # noqa: F401
    CrosstalkMatrix,
    QubitParams,
    ResonatorParams,
    SystemConfig,
    equal_coupling_system,
    named_preset,
    paper_system,
)
from .hilbert import (  # noqa: F401
    DensityMatrix,
    HilbertSpec,
    OperatorMatrix,
    QuantumState,
    basis_ket,
    ket_from_label,
)

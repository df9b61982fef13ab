"""Numerical Livsic-theorem laboratory: matrix cocycles over hyperbolic systems.

The compiled core exposes the concrete testbeds (hyperbolic toral
automorphisms, full shifts), cocycle evaluation and long products, Lyapunov
spectra and adapted norms, periodic obstruction audits, transfer-table
construction, holonomies, and the verification suite.
"""

from cocyclelab._core import (
    Cocycle,
    CocycleLabError,
    SymbolSequence,
    TorusPoint,
    System,
    TransferTable,
    __version__,
    build_transfer,
    make,
    obstruction_audit,
    run_verify,
    uniqueness_residual,
)

__all__ = [
    "Cocycle",
    "CocycleLabError",
    "SymbolSequence",
    "TorusPoint",
    "System",
    "TransferTable",
    "__version__",
    "build_transfer",
    "make",
    "obstruction_audit",
    "run_verify",
    "uniqueness_residual",
]

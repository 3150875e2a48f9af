"""Hybrid stochastic delay systems under periodically intermittent
sampled-data control: simulation and exponential-stability certificates.

The heavy lifting lives in the compiled extension ``sddestab._core``; this
package re-exports its functions.
"""

from ._core import (
    __version__,
    certify,
    gaussians,
    moment_decay,
    philox_block,
    simulate,
)

__all__ = [
    "__version__",
    "certify",
    "gaussians",
    "moment_decay",
    "philox_block",
    "simulate",
]

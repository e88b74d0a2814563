"""Order-book model with liquidity fluctuations: simulation, closed-form
analytics, rate estimation and statistical verification."""

from .model import (
    BookState,
    CatastropheDist,
    HcParams,
    LlgParams,
    ModelError,
    NcParams,
    RegimeSpec,
    TransitionLaw,
    hc_rates,
    llg_rates,
    nc_rates,
    spread_law,
)

__version__ = "0.1.0"

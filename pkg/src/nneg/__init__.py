"""Superhedging prices for no-negative-equity guarantees on equity-release mortgages.

The one-period engine (:mod:`nneg.single`) prices a book of identical lives
in closed form and certifies the answer with a pricing measure; books of
different loans go through the linear program in :mod:`nneg.lp`; and
:mod:`nneg.lattice` chains one-period hedges through a mortality and
property-price lattice.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ArbitrageError,
    CapacityError,
    CertificateUnavailable,
    DomainError,
    InternalInconsistency,
    ModelError,
    NNEGError,
    NormalizationError,
    ParameterError,
    TableError,
)
from .insurance import (  # noqa: E402
    ReinsurerBasis,
    XoLQuote,
    check_no_arbitrage,
    ldp_price_bound,
    rate_function,
    xol_excess,
    xol_price_binomial,
)
from .lattice import (  # noqa: E402
    MultiPeriodResult,
    PolicySchedule,
    ReinsuranceTerms,
    backward_induct,
    bs_put,
    dcf_black_scholes,
    simulate_paths,
)
from .lp import (  # noqa: E402
    BookXoL,
    LpInstance,
    VaryingLoanBook,
    build_general_instance,
    build_symmetric_instance,
    solve_dual_bounds,
    solve_primal,
)
from .market import PropertyBinomial, crr_from_vol, normalize_claim, put_price_one_period  # noqa: E402
from .mortality import MortalityTable, load_sample_table, load_table  # noqa: E402
from .single import (  # noqa: E402
    HedgePortfolio,
    SuperhedgeResult,
    minimal_superhedge,
    price_single,
    superhedge_price,
    verify_certificate,
)

__all__ = [name for name in dir() if not name.startswith("_")]

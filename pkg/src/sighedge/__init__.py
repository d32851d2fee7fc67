"""Signature-based pricing and hedging of path-dependent payoffs under market impact."""

from .frictionless import HedgePlan, fair_price, hedge_ratio, simulate_replication
from .market import (
    DeltaTracking,
    EuQuadraticFeedback,
    NoPermanentBenchmark,
    PerfectHedge,
    SigFeedback,
    SimResult,
    ZeroTrading,
    indifference_price_mc,
    run_paths,
)
from .params import DEFAULT_MARKET, MarketParams
from .payoffs import (
    PathPayoff,
    PayoffKind,
    SignaturePayoff,
    UnsupportedPayoff,
    asian_poly,
    bachelier_price,
    european_poly,
    xi_at,
)
from .regression import RankDeficientError, RegressionSpec, fit, reduced_words, regress_and_hedge
from .riccati import (
    EuQuadraticClosedForm,
    NoPermanentClosedForm,
    RiccatiBlowUp,
    RiccatiParams,
    RiccatiSolution,
    solve_backward,
)
from .signature import SampledPath, SignatureState, path_signature
from .tensor_algebra import TensorSeries, bracket, concat, shuffle, tensor_exp, word

__version__ = "0.1.0"

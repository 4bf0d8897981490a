"""Day-ahead auctions for exporting energy stored in electric vehicles."""

from .clearing import Allocation, clear_bruteforce, clear_day, clear_peak_dp, peak_dp_tables
from .errors import BudgetExceeded, MarketError, StageError, ValidationError
from .fileio import (
    dump_prices,
    dumps_scenario,
    emit_report,
    load_prices,
    load_report,
    load_scenario,
    loads_scenario,
)
from .frequency import (
    EvFrState,
    FrConfig,
    FrQuote,
    PeakLedger,
    fr_abstention_check,
    fr_dispatch,
    fr_payment,
)
from .model import (
    Bundle,
    Contract,
    ContractBook,
    DemandVector,
    FleetPrivate,
    PriceVector,
    Timeline,
    adjusted_demand,
    build_timeline,
    format_pence,
    pence,
    validate_book,
)
from .reliability import (
    active_set,
    lower_bound_report,
    monte_carlo_supply,
    prob_lower_bound,
    supply_distribution,
    supply_probability,
)
from .savings import is_feasible, soc_save
from .simulator import CarbonFactors, EvSpec, Scenario, Settlement, carbon_proxy, run_scenario, sweep
from .vcg import (
    PaymentSchedule,
    deviation_grid,
    fleet_utility,
    payment_schedule,
    platform_utility,
    truthful_bid,
    vcg_payment,
)

__version__ = "0.1.0"

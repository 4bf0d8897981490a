"""Domain types: timeline, demand, prices, bundles, contracts and the contract book.

Units are fixed throughout the package:

* energy is an integer number of kWh,
* money is an integer number of milli-pence (1 pence == 1000),
* per-kWh prices and bids are integer milli-pence per kWh, so a bid times a
  quantity is again an exact integer amount.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError

MILLI = 1000

PEAK = "peak"
VALLEY = "valley"

MARKETS = ("day-ahead", "intra-day", "balancing")


def pence(amount) -> int:
    """Convert a decimal pence amount (str, int, Decimal) to integer milli-pence.

    Floats are rejected unless they are exactly representable with three
    fraction digits; strings are the safe way to pass prices in.
    """
    try:
        value = Decimal(str(amount)) * MILLI
    except InvalidOperation as exc:
        raise ValidationError(f"not a decimal amount: {amount!r}") from exc
    if value != value.to_integral_value():
        raise ValidationError(f"more than 3 fraction digits: {amount!r}")
    return int(value)


def format_pence(milli: int) -> str:
    """Render milli-pence as decimal pence with exactly 3 fraction digits."""
    sign = "-" if milli < 0 else ""
    whole, frac = divmod(abs(int(milli)), MILLI)
    return f"{sign}{whole}.{frac:03d}"


def round_half_up(x: Fraction) -> int:
    """Round an exact rational to the nearest integer, ties away from -inf."""
    return int((Fraction(x) + Fraction(1, 2)).__floor__())


# ---------------------------------------------------------------------------
# Timeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    kind: str
    start: int
    stop: int

    @property
    def hhps(self) -> range:
        return range(self.start, self.stop)

    def __contains__(self, hhp: int) -> bool:
        return self.start <= hhp < self.stop


@dataclass(frozen=True)
class Timeline:
    """The day's half-hour periods split into alternating peak and valley blocks."""

    hhp_count: int
    blocks: tuple[Block, ...]

    def __post_init__(self):
        pos = 0
        prev = None
        for b in self.blocks:
            if b.kind not in (PEAK, VALLEY):
                raise ValidationError(f"unknown block kind {b.kind!r}")
            if b.start != pos or b.stop <= b.start:
                raise ValidationError(f"blocks are not contiguous at hhp {pos}")
            if prev == b.kind:
                raise ValidationError(
                    f"two consecutive {b.kind} blocks meet at hhp {b.start}"
                )
            prev = b.kind
            pos = b.stop
        if pos != self.hhp_count:
            raise ValidationError(f"blocks cover [0, {pos}) not [0, {self.hhp_count})")

    @property
    def peaks(self) -> tuple[Block, ...]:
        return tuple(b for b in self.blocks if b.kind == PEAK)

    @property
    def valleys(self) -> tuple[Block, ...]:
        return tuple(b for b in self.blocks if b.kind == VALLEY)

    def block_of(self, hhp: int) -> Block:
        if not 0 <= hhp < self.hhp_count:
            raise ValidationError(f"hhp {hhp} outside [0, {self.hhp_count})")
        for b in self.blocks:
            if hhp in b:
                return b
        raise AssertionError("unreachable: blocks cover the day")

    def is_peak(self, hhp: int) -> bool:
        return self.block_of(hhp).kind == PEAK

    def peak_ranges(self) -> list[tuple[int, int]]:
        return [(b.start, b.stop) for b in self.peaks]


def build_timeline(hhp_count: int, peak_ranges: Iterable[Sequence[int]]) -> Timeline:
    """Build a timeline from half-open peak ranges; valleys fill every gap.

    >>> t = build_timeline(4, [(1, 3)])
    >>> [(b.kind, b.start, b.stop) for b in t.blocks]
    [('valley', 0, 1), ('peak', 1, 3), ('valley', 3, 4)]
    """
    if hhp_count <= 0:
        raise ValidationError("hhp_count must be positive")
    ranges = [tuple(int(x) for x in r) for r in peak_ranges]
    blocks: list[Block] = []
    pos = 0
    for i, r in enumerate(ranges):
        if len(r) != 2:
            raise ValidationError(f"peak range #{i} must be (start, stop): {r}")
        start, stop = r
        if not (0 <= start < stop <= hhp_count):
            raise ValidationError(f"peak range #{i} {r} not inside [0, {hhp_count})")
        if start < pos:
            raise ValidationError(
                f"peak range #{i} {r} overlaps or is out of order (previous ends at {pos})"
            )
        if i > 0 and start == pos:
            raise ValidationError(
                f"peak ranges #{i - 1} and #{i} touch at hhp {start}: no valley between"
            )
        if start > pos:
            blocks.append(Block(VALLEY, pos, start))
        blocks.append(Block(PEAK, start, stop))
        pos = stop
    if pos < hhp_count:
        blocks.append(Block(VALLEY, pos, hhp_count))
    return Timeline(hhp_count, tuple(blocks))


# ---------------------------------------------------------------------------
# Demand and prices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DemandVector:
    demand: tuple[int, ...]
    safety_margin: int = 0

    def __post_init__(self):
        object.__setattr__(self, "demand", tuple(int(d) for d in self.demand))
        if any(d < 0 for d in self.demand):
            raise ValidationError("demand entries must be >= 0")
        if self.safety_margin < 0:
            raise ValidationError("safety margin must be >= 0")

    def __len__(self):
        return len(self.demand)


def adjusted_demand(demand: DemandVector) -> tuple[int, ...]:
    """Expected demand plus the safety margin at every hhp."""
    return tuple(d + demand.safety_margin for d in demand.demand)


@dataclass(frozen=True)
class PriceVector:
    """Per-hhp prices in milli-pence per kWh for one market. Negative is allowed."""

    prices: tuple[int, ...]
    market_id: str = "day-ahead"

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(int(p) for p in self.prices))
        if self.market_id not in MARKETS:
            raise ValidationError(f"unknown market {self.market_id!r}")

    def __len__(self):
        return len(self.prices)

    def __getitem__(self, hhp):
        return self.prices[hhp]

    def __iter__(self):
        return iter(self.prices)


# ---------------------------------------------------------------------------
# Bundles, contracts, book
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bundle:
    bundle_id: str
    owner_fleet: str
    size: int

    def __post_init__(self):
        if int(self.size) <= 0:
            raise ValidationError(f"bundle {self.bundle_id}: size must be > 0")


@dataclass(frozen=True)
class Contract:
    """An offer to export one bundle at one hhp.

    ``bid`` is milli-pence per kWh; ``fine`` is a total amount per contract.
    """

    contract_id: str
    fleet: str
    bid: int
    hhp: int
    bundle: str
    fine: int = 0

    def __post_init__(self):
        if self.bid < 0:
            raise ValidationError(f"contract {self.contract_id}: bid must be >= 0")
        if self.fine < 0:
            raise ValidationError(f"contract {self.contract_id}: fine must be >= 0")


@dataclass(frozen=True)
class ContractBook:
    """Validated contracts grouped per bundle (groups in ascending bundle_id)."""

    contracts: tuple[Contract, ...]
    bundles: tuple[Bundle, ...]
    groups: tuple[tuple[str, ...], ...]
    timeline: Timeline
    _by_id: Mapping[str, Contract] = field(repr=False, compare=False, default=None)
    _bundle_by_id: Mapping[str, Bundle] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {c.contract_id: c for c in self.contracts})
        object.__setattr__(self, "_bundle_by_id", {b.bundle_id: b for b in self.bundles})

    def __len__(self):
        return len(self.contracts)

    def __contains__(self, contract_id) -> bool:
        return contract_id in self._by_id

    def contract(self, contract_id: str) -> Contract:
        try:
            return self._by_id[contract_id]
        except KeyError:
            raise ValidationError(f"contract {contract_id!r} not in book") from None

    def bundle(self, bundle_id: str) -> Bundle:
        return self._bundle_by_id[bundle_id]

    def size(self, contract_id: str) -> int:
        """Energy (kWh) of the bundle a contract exports."""
        return self._bundle_by_id[self.contract(contract_id).bundle].size

    def fleets(self) -> tuple[str, ...]:
        return tuple(sorted({c.fleet for c in self.contracts}))

    def group_bundle(self, group: Sequence[str]) -> str:
        return self.contract(group[0]).bundle

    def restrict(self, fleets: Iterable[str]) -> "ContractBook":
        """Sub-book holding only the contracts (and bundles) of ``fleets``."""
        keep = set(fleets)
        return validate_book(
            [c for c in self.contracts if c.fleet in keep],
            [b for b in self.bundles if b.owner_fleet in keep],
            self.timeline,
        )

    def without_fleet(self, fleet: str) -> "ContractBook":
        return self.restrict(f for f in self.fleets() if f != fleet)

    def peak_slice(self, peak: Block) -> "ContractBook":
        """Sub-book of contracts whose hhp lies inside ``peak``."""
        cs = [c for c in self.contracts if c.hhp in peak]
        used = {c.bundle for c in cs}
        return validate_book(cs, [b for b in self.bundles if b.bundle_id in used], self.timeline)

    def with_bids(self, bids: Mapping[str, int]) -> "ContractBook":
        """Copy of the book with some contracts' bids replaced."""
        cs = [
            Contract(c.contract_id, c.fleet, int(bids[c.contract_id]), c.hhp, c.bundle, c.fine)
            if c.contract_id in bids
            else c
            for c in self.contracts
        ]
        return validate_book(cs, self.bundles, self.timeline)


def validate_book(
    contracts: Iterable[Contract], bundles: Iterable[Bundle], timeline: Timeline
) -> ContractBook:
    """Check the offer-side rules and group contracts per bundle.

    Raises ValidationError on duplicate ids, unknown bundles, owner mismatch,
    valley hhps, two offers of a bundle at one hhp, or a bundle offered in two
    different peaks.
    """
    contracts = list(contracts)
    bundles = list(bundles)
    bundle_by_id: dict[str, Bundle] = {}
    for b in bundles:
        if b.bundle_id in bundle_by_id:
            raise ValidationError(f"duplicate bundle id {b.bundle_id!r}")
        bundle_by_id[b.bundle_id] = b

    seen: set[str] = set()
    per_bundle: dict[str, list[Contract]] = {}
    for c in contracts:
        if c.contract_id in seen:
            raise ValidationError(f"duplicate contract id {c.contract_id!r}")
        seen.add(c.contract_id)
        b = bundle_by_id.get(c.bundle)
        if b is None:
            raise ValidationError(f"contract {c.contract_id}: unknown bundle {c.bundle!r}")
        if b.owner_fleet != c.fleet:
            raise ValidationError(
                f"contract {c.contract_id}: bundle owner mismatch "
                f"({b.owner_fleet!r} owns {b.bundle_id!r}, offered by {c.fleet!r})"
            )
        if timeline.block_of(c.hhp).kind != PEAK:
            raise ValidationError(f"contract {c.contract_id}: hhp not in peak ({c.hhp})")
        per_bundle.setdefault(c.bundle, []).append(c)

    for bid, group in per_bundle.items():
        hhps = [c.hhp for c in group]
        if len(set(hhps)) != len(hhps):
            raise ValidationError(f"bundle {bid!r} offered twice at the same hhp")
        blocks = {timeline.block_of(h).start for h in hhps}
        if len(blocks) > 1:
            raise ValidationError(f"bundle {bid!r} spans peaks (hhps {sorted(hhps)})")

    groups = tuple(
        tuple(sorted(c.contract_id for c in per_bundle[bid])) for bid in sorted(per_bundle)
    )
    return ContractBook(
        contracts=tuple(sorted(contracts, key=lambda c: c.contract_id)),
        bundles=tuple(sorted(bundles, key=lambda b: b.bundle_id)),
        groups=groups,
        timeline=timeline,
    )


# ---------------------------------------------------------------------------
# Private fleet data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FleetPrivate:
    """Information only the fleet knows: success probabilities and unit costs.

    ``success_prob`` maps contract id to p(j). Costs are milli-pence per kWh
    except ``scheduling_cost``, which is milli-pence per contract.
    """

    fleet_id: str
    success_prob: Mapping[str, float]
    m_imported: int = 0
    c_bd: int = 0
    scheduling_cost: int = 0

    def __post_init__(self):
        for cid, p in self.success_prob.items():
            if not 0.0 <= float(p) <= 1.0:
                raise ValidationError(f"fleet {self.fleet_id}: p({cid}) = {p} outside [0, 1]")
        if min(self.m_imported, self.c_bd, self.scheduling_cost) < 0:
            raise ValidationError(f"fleet {self.fleet_id}: costs must be >= 0")

    def p(self, contract_id: str) -> float:
        try:
            return self.success_prob[contract_id]
        except KeyError:
            raise ValidationError(
                f"fleet {self.fleet_id}: no success probability for {contract_id!r}"
            ) from None

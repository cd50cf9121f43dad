"""Blocker taxonomy, remedy knowledge base, and per-site advice."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .correlate import LoopSite
from .errors import BadElementWidth, InvalidCategory
from .remarks import Remark, RemarkKind, remark_message


class BlockerCategory(enum.Enum):
    # Declaration order is the remedy concatenation order used by advise().
    FP_REORDER = "FP_REORDER"
    UNKNOWN_BOUNDS = "UNKNOWN_BOUNDS"
    LIBCALL = "LIBCALL"
    NORETURN_EXIT = "NORETURN_EXIT"
    CF_SELECT = "CF_SELECT"
    UNIDENTIFIED_BOUNDS = "UNIDENTIFIED_BOUNDS"
    VECTORIZED = "VECTORIZED"
    UNKNOWN = "UNKNOWN"

    @property
    def rank(self) -> int:
        return _CATEGORY_RANK[self]


_CATEGORY_RANK = {c: i for i, c in enumerate(BlockerCategory)}
BOUNDS_CATEGORIES = frozenset({BlockerCategory.UNKNOWN_BOUNDS, BlockerCategory.UNIDENTIFIED_BOUNDS})


class RemedyKind(enum.Enum):
    DIRECTIVE = "directive"
    FLAG = "flag"
    TRANSFORMATION = "transformation"
    CAUTION = "caution"


@dataclass(frozen=True)
class Remedy:
    kind: RemedyKind
    text: str
    rationale: str
    correctness_note: str | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("Remedy.text must be non-empty")
        if self.kind is RemedyKind.DIRECTIVE and not self.text.startswith(("#pragma omp", "#pragma clang loop")):
            raise ValueError(f"directive remedies must be a pragma, got {self.text!r}")

    @property
    def key(self) -> tuple[RemedyKind, str]:
        return (self.kind, self.text)


D, F, T, C = RemedyKind.DIRECTIVE, RemedyKind.FLAG, RemedyKind.TRANSFORMATION, RemedyKind.CAUTION

_FP_NOTE = (
    "Vectorizing the reduction reassociates floating-point operations; results can differ "
    "from the scalar loop and are no longer strictly IEEE-754 reproducible."
)
_NOALIAS_NOTE = (
    "Asserts that the arrays accessed in the loop never overlap. The compiler does not check "
    "this; if they do alias, the vectorized loop silently computes wrong results."
)
_VECMATH_NOTE = (
    "Vector math routines are not bit-identical to scalar libm calls; expect small "
    "precision differences in the results."
)

_INTERCHANGE = Remedy(
    T,
    "interchange (transpose) the loop nest so the inner loop walks the storage-major "
    "dimension, e.g. rows in the inner loop for column-major matrices",
    "Turns scattered stores into contiguous ones and removes gathers along the inner "
    "dimension; this helps even when the loop stays scalar.",
    "Legal only when iterations are independent of each other and the index ranges "
    "permit swapping the loops (e.g. square matrices).",
)
_OMP_SIMD_NOALIAS = Remedy(
    D,
    "#pragma omp simd",
    "Tells the vectorizer that iterations carry no memory dependences, so it does not need "
    "the runtime alias check it cannot build when bounds depend on loaded indices.",
    _NOALIAS_NOTE,
)
_ALIASING_CAUTION = Remedy(
    C,
    "no-alias assertion: confirm the arrays touched by the loop can never overlap",
    "The advisor cannot verify this; index arrays loaded at run time make overlap easy to miss.",
    _NOALIAS_NOTE,
)

_DEFAULT_REMEDIES: dict[BlockerCategory, tuple[Remedy, ...]] = {
    BlockerCategory.FP_REORDER: (
        Remedy(
            D,
            "#pragma omp simd reduction(<op>:<var>)",
            "Makes the reduction explicit: <op> is the reduction operator and <var> the "
            "accumulator variable.",
            _FP_NOTE,
        ),
        Remedy(
            D,
            "#pragma omp simd reduction(<op>:<var>) aligned(<ptrs> : <bytes>)",
            "Use when the base pointers are known to be aligned (typically 64 bytes); the "
            "aligned clause enables aligned vector loads.",
            _FP_NOTE + " The alignment claim must hold on every call or behaviour is undefined.",
        ),
        Remedy(
            F,
            "-ffast-math",
            "Permits floating-point reassociation for the whole translation unit.",
            "Relaxes IEEE semantics for every floating-point operation in the translation "
            "unit, not only this loop.",
        ),
        Remedy(
            D,
            "#pragma clang loop vectorize(enable)",
            "Clang-only alternative to the OpenMP directive; allows reordering for this loop.",
            _FP_NOTE,
        ),
        Remedy(
            C,
            "vectorizing this loop changes floating-point result ordering",
            "Confirm the application tolerates different rounding before applying any of the above.",
            _FP_NOTE,
        ),
    ),
    BlockerCategory.UNKNOWN_BOUNDS: (_OMP_SIMD_NOALIAS, _ALIASING_CAUTION),
    BlockerCategory.LIBCALL: (
        Remedy(
            F,
            "-fsimdmath",
            "Arm compiler: use the vendor vector math library so calls such as sin and cos "
            "get vector variants.",
            _VECMATH_NOTE,
        ),
        Remedy(
            F,
            "-fveclib=<library>",
            "Upstream Clang: name the vector math library that provides the vector variants "
            "(libmvec, SLEEFGNUABI or ArmPL, depending on the Clang version).",
            _VECMATH_NOTE,
        ),
        Remedy(
            F,
            "-fno-math-errno",
            "Removes the errno side effect (also implied by -ffast-math) so the loop can run "
            "out of order. Without a vector library the lanes are unpacked and the function "
            "is called once per lane.",
            "Math functions stop setting errno; code that inspects errno after the call breaks.",
        ),
        Remedy(
            C,
            "a vector math library trades precision for throughput",
            "Re-validate numerical results after switching math libraries.",
            _VECMATH_NOTE,
        ),
    ),
    BlockerCategory.NORETURN_EXIT: (
        Remedy(
            F,
            "-DNDEBUG",
            "Compiles out assert(); assertions in element accessors create loop exits that "
            "never return, which block vectorization.",
            "Disables every assertion in the translation unit, so debug and release builds "
            "stop behaving alike.",
        ),
        Remedy(
            C,
            "assertions inside the loop body block vectorization",
            "Alternatively check the index range once before the loop so debug builds keep "
            "their bounds checks.",
            "Compiling assertions out hides the out-of-bounds accesses they would have caught.",
        ),
    ),
    BlockerCategory.CF_SELECT: (
        _INTERCHANGE,
        Remedy(
            T,
            "hoist conditional updates that fire once per outer iteration (e.g. an i == j "
            "diagonal update) out of the inner loop",
            "Otherwise both branches are computed for every lane and the rarely needed result "
            "is masked away.",
        ),
        Remedy(
            D,
            "#pragma omp assume holds(<denominator> != 0)",
            "OpenMP 5.1: assert that a division in the loop cannot fault, so the branch can "
            "be turned into a select.",
            "If the assumption is ever false, behaviour is undefined.",
        ),
        Remedy(
            D,
            "#pragma omp simd",
            "Requests vectorization of the inner loop once the branches are select-friendly.",
            _NOALIAS_NOTE,
        ),
    ),
    BlockerCategory.UNIDENTIFIED_BOUNDS: (_OMP_SIMD_NOALIAS, _ALIASING_CAUTION, _INTERCHANGE),
    BlockerCategory.UNKNOWN: (
        Remedy(
            C,
            "unrecognized vectorization blocker: inspect the remark text",
            "No classification rule matched. Add the wording to the rule table config to "
            "teach the advisor about it.",
        ),
    ),
}

DEFAULT_RULES: tuple[tuple[str, BlockerCategory], ...] = (
    ("safe to reorder floating-point operations", BlockerCategory.FP_REORDER),
    ("Unknown array bounds", BlockerCategory.UNKNOWN_BOUNDS),
    ("library call cannot be vectorized", BlockerCategory.LIBCALL),
    ("control flow that does not return", BlockerCategory.NORETURN_EXIT),
    ("cannot be substituted for a select", BlockerCategory.CF_SELECT),
    ("cannot identify array bounds", BlockerCategory.UNIDENTIFIED_BOUNDS),
)

VECTORIZE_PASSES = frozenset({"loop-vectorize"})


@dataclass(frozen=True)
class RuleTable:
    """Ordered substring rules plus the remedy list for each category. Immutable once built."""

    rules: tuple[tuple[str, BlockerCategory], ...] = DEFAULT_RULES
    remedy_lists: Mapping[BlockerCategory, tuple[Remedy, ...]] = field(
        default_factory=lambda: MappingProxyType(dict(_DEFAULT_REMEDIES))
    )

    def __post_init__(self) -> None:
        for substring, _ in self.rules:
            if not substring:
                raise ValueError("classification rules need a non-empty substring")
        if not isinstance(self.remedy_lists, MappingProxyType):
            object.__setattr__(self, "remedy_lists", MappingProxyType(dict(self.remedy_lists)))

    def classify_message(self, message: str) -> BlockerCategory:
        for substring, category in self.rules:
            if substring in message:
                return category
        return BlockerCategory.UNKNOWN

    def classify(self, r: Remark) -> BlockerCategory:
        if r.kind is RemarkKind.PASSED and r.pass_name in VECTORIZE_PASSES:
            return BlockerCategory.VECTORIZED
        return self.classify_message(remark_message(r))

    def remedies(self, c: BlockerCategory) -> list[Remedy]:
        if c is BlockerCategory.VECTORIZED:
            raise InvalidCategory("VECTORIZED has no remedies")
        return list(self.remedy_lists.get(c, ()))


DEFAULT_TABLE = RuleTable()


def classify(r: Remark, table: RuleTable = DEFAULT_TABLE) -> BlockerCategory:
    """First matching substring rule over the remark message; vectorizer successes are VECTORIZED."""
    return table.classify(r)


def classify_message(message: str, table: RuleTable = DEFAULT_TABLE) -> BlockerCategory:
    return table.classify_message(message)


def remedies(c: BlockerCategory, table: RuleTable = DEFAULT_TABLE) -> list[Remedy]:
    return table.remedies(c)


# ---------------------------------------------------------------------------
# Benefit heuristic


@dataclass(frozen=True)
class ArchModel:
    name: str
    vector_bits: int
    supports_gather: bool

    def __post_init__(self) -> None:
        if self.vector_bits not in (128, 256, 512, 1024, 2048):
            raise ValueError(f"unsupported vector width {self.vector_bits}")


ARCHES: dict[str, ArchModel] = {
    "sve512": ArchModel("sve512", 512, supports_gather=True),
    "neon128": ArchModel("neon128", 128, supports_gather=False),
}

ELEMENT_BITS = (8, 16, 32, 64)
DEFAULT_BOUNDS_DISCOUNT = 0.5
DEFAULT_REDUCTION_DISCOUNT = 0.5


def estimate_benefit(
    categories: Iterable[BlockerCategory],
    element_bits: int,
    arch: ArchModel,
    *,
    bounds_discount: float = DEFAULT_BOUNDS_DISCOUNT,
    reduction_discount: float = DEFAULT_REDUCTION_DISCOUNT,
) -> float | None:
    """Heuristic upper bound on the vector speedup of a remedied loop.

    Starts from the lane count and halves it (by default) for gather/scatter-bound
    loops and for reductions. Never below 1.0. Returns None when a bounds blocker
    needs gathers the architecture does not have.
    """
    if element_bits not in ELEMENT_BITS:
        raise BadElementWidth(f"element width must be one of {ELEMENT_BITS}, got {element_bits}")
    cats = set(categories)
    has_bounds = bool(cats & BOUNDS_CATEGORIES)
    if has_bounds and not arch.supports_gather:
        return None
    estimate = arch.vector_bits / element_bits
    if has_bounds:
        estimate *= bounds_discount
    if BlockerCategory.FP_REORDER in cats:
        estimate *= reduction_discount
    return max(estimate, 1.0)


@dataclass(frozen=True)
class BenefitModel:
    arch: ArchModel
    element_bits: int = 64
    bounds_discount: float = DEFAULT_BOUNDS_DISCOUNT
    reduction_discount: float = DEFAULT_REDUCTION_DISCOUNT

    def estimate(self, categories: Iterable[BlockerCategory]) -> float | None:
        return estimate_benefit(
            categories,
            self.element_bits,
            self.arch,
            bounds_discount=self.bounds_discount,
            reduction_discount=self.reduction_discount,
        )


# ---------------------------------------------------------------------------
# Advice


@dataclass(frozen=True)
class AdviceEntry:
    site: LoopSite
    categories: tuple[BlockerCategory, ...]
    remedies: tuple[Remedy, ...]
    benefit_estimate: float | None = None
    already_vectorized: bool = False

    @property
    def is_finding(self) -> bool:
        """A loop the compiler failed to vectorize."""
        return bool(self.categories)


def advise(site: LoopSite, table: RuleTable = DEFAULT_TABLE, benefit: BenefitModel | None = None) -> AdviceEntry:
    """Classify every remark at ``site`` and merge the remedy lists.

    Categories come out in enum order and remedies are deduplicated on (kind, text),
    keeping the first occurrence. Successful non-vectorizer passes are not blockers,
    and the catch-all UNKNOWN is dropped when a recognized blocker explains the loop.
    """
    found: set[BlockerCategory] = set()
    for r in site.remarks:
        if r.kind is RemarkKind.PASSED and r.pass_name not in VECTORIZE_PASSES:
            continue
        found.add(table.classify(r))
    vectorized = BlockerCategory.VECTORIZED in found
    found.discard(BlockerCategory.VECTORIZED)
    if len(found) > 1:
        found.discard(BlockerCategory.UNKNOWN)
    categories = tuple(sorted(found, key=lambda c: c.rank))

    merged: list[Remedy] = []
    seen: set[tuple[RemedyKind, str]] = set()
    for c in categories:
        for remedy in table.remedies(c):
            if remedy.key not in seen:
                seen.add(remedy.key)
                merged.append(remedy)

    estimate = benefit.estimate(categories) if benefit is not None and categories else None
    return AdviceEntry(
        site=site,
        categories=categories,
        remedies=tuple(merged),
        benefit_estimate=estimate,
        already_vectorized=vectorized and not categories,
    )

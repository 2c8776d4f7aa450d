"""Linear array geometries on the half-wavelength grid and their difference co-arrays.

Positions are stored as integers in units of ``d0 = lambda / 2``, so every phase
in the package reads ``pi * (p - 1) * sin(theta)`` and no wavelength appears.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, InvalidConfigurationError

__all__ = [
    "ArrayGeometry",
    "CoArray",
    "build_nested",
    "build_ula",
    "build_custom",
    "parse_geometry",
    "difference_coarray",
    "steering_vector",
    "steering_matrix",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """Sorted antenna positions plus the recipe that produced them.

    ``kind`` is one of ``"nested"``, ``"ula"`` or ``"custom"``; ``params`` holds
    ``(n1, n2)``, ``(m,)`` or the positions respectively.  ``ula_equivalent`` is
    set whenever the positions are exactly ``1..M``, which is how degenerate
    nested parameters such as ``(0, M)`` or ``(M - 1, 1)`` are flagged.
    """

    positions: tuple[int, ...]
    kind: str = "custom"
    params: tuple[int, ...] = ()
    ula_equivalent: bool = field(init=False)

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if len(pos) < 1:
            raise InvalidConfigurationError("an array needs at least one antenna")
        if any(p < 1 for p in pos):
            raise InvalidConfigurationError("positions must be positive integers")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise InvalidConfigurationError("positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "ula_equivalent", pos == tuple(range(1, len(pos) + 1)))

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def aperture(self) -> int:
        """Largest position, i.e. the span counted from the grid origin."""
        return self.positions[-1]

    @property
    def n1(self) -> int | None:
        return self.params[0] if self.kind == "nested" else None

    @property
    def n2(self) -> int | None:
        return self.params[1] if self.kind == "nested" else None

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    def to_text(self) -> str:
        """Single-line form ``nested:N1,N2``, ``ula:M`` or ``custom:p1,p2,...``."""
        return f"{self.kind}:{','.join(str(p) for p in self.params)}"

    def __str__(self):
        return self.to_text()


def build_nested(n1: int, n2: int) -> ArrayGeometry:
    """Two-level nested array: ``{1..n1}`` joined with ``{k (n1 + 1) : k = 1..n2}``.

    Degenerate pairs ``(0, M)``, ``(M, 0)`` and ``(M - 1, 1)`` are accepted; the
    result then has ``ula_equivalent`` set.
    """
    n1, n2 = int(n1), int(n2)
    if n1 < 0 or n2 < 0:
        raise InvalidConfigurationError(f"nested parameters must be non-negative, got ({n1}, {n2})")
    if n1 + n2 < 1:
        raise InvalidConfigurationError("nested array needs n1 + n2 >= 1")
    inner = list(range(1, n1 + 1))
    outer = [k * (n1 + 1) for k in range(1, n2 + 1)]
    return ArrayGeometry(tuple(inner + outer), "nested", (n1, n2))


def build_ula(m: int) -> ArrayGeometry:
    m = int(m)
    if m < 1:
        raise InvalidConfigurationError(f"ULA needs at least one element, got {m}")
    return ArrayGeometry(tuple(range(1, m + 1)), "ula", (m,))


def build_custom(positions: Sequence[int]) -> ArrayGeometry:
    pos = tuple(int(p) for p in positions)
    return ArrayGeometry(pos, "custom", pos)


def parse_geometry(text: str) -> ArrayGeometry:
    """Inverse of :meth:`ArrayGeometry.to_text`."""
    kind, sep, rest = text.strip().partition(":")
    if not sep:
        raise InvalidConfigurationError(f"geometry {text!r} is not of the form kind:values")
    try:
        values = [int(v) for v in rest.split(",") if v.strip()]
    except ValueError:
        raise InvalidConfigurationError(f"geometry {text!r} has non-integer values") from None
    kind = kind.strip().lower()
    if kind == "nested":
        if len(values) != 2:
            raise InvalidConfigurationError("nested geometry needs exactly two values N1,N2")
        return build_nested(*values)
    if kind == "ula":
        if len(values) != 1:
            raise InvalidConfigurationError("ula geometry needs exactly one value M")
        return build_ula(values[0])
    if kind == "custom":
        return build_custom(values)
    raise InvalidConfigurationError(f"unknown geometry kind {kind!r}")


@dataclass(frozen=True)
class CoArray:
    """Non-negative difference lags of an array.

    ``pair_map[lag]`` lists every physical index pair ``(i, j)`` (0-based) with
    ``positions[i] - positions[j] == lag``.  Negative lags are implied by
    symmetry: lag ``-l`` is produced by the swapped pairs.
    """

    lags: tuple[int, ...]
    pair_map: Mapping[int, tuple[tuple[int, int], ...]]
    contiguous_extent: int

    @property
    def virtual_ula_size(self) -> int:
        """Number of elements of the central virtual ULA, ``2 L - 1``."""
        return 2 * self.contiguous_extent - 1

    def signed_lags(self) -> tuple[int, ...]:
        return tuple(sorted({-lag for lag in self.lags} | set(self.lags)))

    def redundancy(self, lag: int) -> int:
        return len(self.pair_map.get(abs(lag), ()))


def difference_coarray(geom: ArrayGeometry) -> CoArray:
    pos = geom.positions
    pairs: dict[int, list[tuple[int, int]]] = {}
    for i, pi in enumerate(pos):
        for j, pj in enumerate(pos):
            lag = pi - pj
            if lag >= 0:
                pairs.setdefault(lag, []).append((i, j))
    lags = tuple(sorted(pairs))
    extent = 0
    while extent in pairs:
        extent += 1
    frozen = MappingProxyType({lag: tuple(pairs[lag]) for lag in lags})
    return CoArray(lags, frozen, extent)


def _check_angles(angles: np.ndarray) -> None:
    if np.any(~np.isfinite(angles)) or np.any(np.abs(angles) >= np.pi / 2):
        raise DomainError("angles must lie in the open interval (-pi/2, pi/2)")


def steering_vector(geom: ArrayGeometry, angle: float) -> np.ndarray:
    """Unit-modulus response ``exp(j pi (p_m - 1) sin(angle))``; entry 0 is exactly 1."""
    angle = float(angle)
    _check_angles(np.asarray(angle))
    return np.exp(1j * np.pi * (geom.as_array() - 1.0) * np.sin(angle))


def steering_matrix(geom: ArrayGeometry, angles) -> np.ndarray:
    """Stack of steering vectors, shape ``(M, len(angles))``."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    _check_angles(angles)
    return np.exp(1j * np.pi * np.outer(geom.as_array() - 1.0, np.sin(angles)))

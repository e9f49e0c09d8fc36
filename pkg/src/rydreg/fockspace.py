"""Bosonic occupation-number representation of collectively encoded registers.

A permutation-symmetric ensemble of K atoms with internal levels
|0>, |1>, ..., |N>, |r>, ... is exactly equivalent to a system of bosonic
modes, one per internal level.  Register qubit i is the 0-or-1 collective
occupation of level |i|; the macroscopically occupied reservoir level |0>
is kept implicit, entering only through sqrt(n0) matrix elements with
n0 = K - (total tracked occupation).  This keeps the basis at a few
hundred states while K may be 10^6.

Basis states are occupation vectors over the tracked levels (registers
first, then extra levels in declared order), enumerated in lexicographic
order so that indices are stable across runs and serializations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Sentinel label for the implicit reservoir level |0>.
RESERVOIR = "0"

# Roles an extra (non-register) level may play.
RYDBERG_ROLES = ("r", "r2")
EXTRA_ROLES = ("r", "r2", "c", "e")

NORM_TOL = 1e-10


class ConfigurationError(ValueError):
    """A level scheme or cap configuration is unusable."""


class DomainError(ValueError):
    """An operation was called outside its domain."""


@dataclass(frozen=True)
class LevelScheme:
    """Tracked internal levels of the ensemble and their occupation caps.

    register_levels: number N of register levels, labeled 1..N.
    extra_levels: ordered roles from ("r", "r2", "c", "e"), each a level label.
    total_atoms: ensemble size K.
    tracked_cap: maximum total occupation of all tracked levels (S_max).
    rydberg_cap: per-Rydberg-level occupation cap (1 = hard blockade).
    rydberg_total_cap: cap on the summed occupation of all Rydberg levels;
        defaults to 1 when rydberg_cap == 1 (hard blockade excludes
        simultaneous r / r2 occupation structurally), else unbounded.
    """

    register_levels: int
    extra_levels: tuple[str, ...] = ()
    total_atoms: int = 10**6
    tracked_cap: int = 4
    rydberg_cap: int = 1
    rydberg_total_cap: int | None = None

    def __post_init__(self):
        if self.register_levels < 1:
            raise ConfigurationError("need at least one register level")
        if self.tracked_cap < 0:
            raise ConfigurationError("tracked_cap must be >= 0")
        if self.total_atoms < max(self.tracked_cap, 1):
            raise ConfigurationError("total_atoms must be >= tracked_cap")
        if len(set(self.extra_levels)) != len(self.extra_levels):
            raise ConfigurationError("duplicate extra level roles")
        for role in self.extra_levels:
            if role not in EXTRA_ROLES:
                raise ConfigurationError(f"unknown extra level role {role!r}")
        if self.rydberg_cap < 1:
            raise ConfigurationError("rydberg_cap must be >= 1")
        if self.rydberg_cap > self.tracked_cap and self.tracked_cap > 0:
            object.__setattr__(self, "rydberg_cap", self.tracked_cap)
        if self.rydberg_total_cap is None:
            total = self.rydberg_cap if self.rydberg_cap == 1 else None
            object.__setattr__(self, "rydberg_total_cap", total)

    @property
    def levels(self) -> tuple:
        """All tracked level labels: registers 1..N then extras by role."""
        return tuple(range(1, self.register_levels + 1)) + self.extra_levels

    def level_index(self, level) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise DomainError(f"level {level!r} is not tracked") from None

    def is_rydberg(self, level) -> bool:
        return level in RYDBERG_ROLES

    def level_cap(self, level) -> int:
        if self.is_rydberg(level):
            return min(self.rydberg_cap, self.tracked_cap)
        return self.tracked_cap


@dataclass(frozen=True)
class OccupationBasis:
    """Canonically ordered occupation-number basis over tracked levels."""

    scheme: LevelScheme
    states: tuple[tuple[int, ...], ...]
    index: dict

    @property
    def dim(self) -> int:
        return len(self.states)

    def occupation(self, i: int, level) -> int:
        return self.states[i][self.scheme.level_index(level)]


@lru_cache(maxsize=None)
def build_basis(scheme: LevelScheme) -> OccupationBasis:
    """Enumerate all occupation vectors satisfying the scheme's caps.

    Lexicographic order over (n_1, ..., n_N, extras...), ascending.
    """
    levels = scheme.levels
    caps = [scheme.level_cap(lv) for lv in levels]
    ryd = [scheme.is_rydberg(lv) for lv in levels]
    states = []

    def rec(pos, total, ryd_total, prefix):
        if pos == len(levels):
            states.append(tuple(prefix))
            return
        for n in range(caps[pos] + 1):
            if total + n > scheme.tracked_cap:
                break
            if ryd[pos] and scheme.rydberg_total_cap is not None \
                    and ryd_total + n > scheme.rydberg_total_cap:
                break
            prefix.append(n)
            rec(pos + 1, total + n, ryd_total + n if ryd[pos] else ryd_total, prefix)
            prefix.pop()

    rec(0, 0, 0, [])
    if not states:
        raise ConfigurationError("cap configuration admits zero basis states")
    index = {s: i for i, s in enumerate(states)}
    return OccupationBasis(scheme=scheme, states=tuple(states), index=index)


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over the occupation basis of a scheme."""

    scheme: LevelScheme
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (self.basis.dim,):
            raise DomainError("amplitude vector does not match basis dimension")

    @property
    def basis(self) -> OccupationBasis:
        return build_basis(self.scheme)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def reservoir_occupation(self, i: int) -> int:
        return self.scheme.total_atoms - sum(self.basis.states[i])

    def nonzero(self, tol: float = 1e-14):
        """Yield (occupation tuple, amplitude) for amplitudes above tol."""
        for i, a in enumerate(self.amplitudes):
            if abs(a) > tol:
                yield self.basis.states[i], a

    def amplitude(self, occ: tuple) -> complex:
        try:
            return complex(self.amplitudes[self.basis.index[tuple(occ)]])
        except KeyError:
            raise DomainError(f"occupation {occ} outside the basis") from None


def _unit(amplitudes: np.ndarray, scheme: LevelScheme) -> StateVector:
    nrm = np.linalg.norm(amplitudes)
    if nrm < 1e-300:
        raise DomainError("cannot normalize a zero state")
    return StateVector(scheme=scheme, amplitudes=amplitudes / nrm)


def vacuum_state(scheme: LevelScheme) -> StateVector:
    """All atoms in the reservoir: occupation (0, ..., 0)."""
    basis = build_basis(scheme)
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index[(0,) * len(scheme.levels)]] = 1.0
    return StateVector(scheme=scheme, amplitudes=amps)


def basis_state(scheme: LevelScheme, occ) -> StateVector:
    """Unit-norm basis state with the given full occupation vector."""
    basis = build_basis(scheme)
    occ = tuple(occ)
    if occ not in basis.index:
        raise DomainError(f"occupation {occ} violates the scheme's caps")
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index[occ]] = 1.0
    return StateVector(scheme=scheme, amplitudes=amps)


def register_state(scheme: LevelScheme, bits) -> StateVector:
    """Basis state with given register occupations, extras unoccupied."""
    bits = tuple(int(b) for b in bits)
    if len(bits) != scheme.register_levels:
        raise DomainError("bits must give one occupation per register level")
    if any(b < 0 for b in bits):
        raise DomainError("occupations must be nonnegative")
    if sum(bits) > scheme.tracked_cap:
        raise DomainError("total register occupation exceeds tracked_cap")
    occ = bits + (0,) * len(scheme.extra_levels)
    return basis_state(scheme, occ)


@dataclass(frozen=True)
class SymmetricCoeffs:
    """Complex symmetric matrix c defining a two-excitation register state.

    The state is sum_ij c_ij a_i^dag a_j^dag |vac>; symmetry c_ij = c_ji is
    enforced by construction.  State norm of c is
    sqrt(4 sum_{i<j} |c_ij|^2 + 2 sum_i |c_ii|^2).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("coefficient matrix must be square")
        m = (m + m.T) / 2.0
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def state_norm(self) -> float:
        m = self.matrix
        off = np.sum(np.abs(m) ** 2) - np.sum(np.abs(np.diag(m)) ** 2)
        return math.sqrt(2.0 * off + 2.0 * np.sum(np.abs(np.diag(m)) ** 2))

    def normalized(self) -> "SymmetricCoeffs":
        nrm = self.state_norm()
        if nrm < 1e-300:
            raise DomainError("cannot normalize zero coefficient matrix")
        return SymmetricCoeffs(self.matrix / nrm)


def two_excitation_state(scheme: LevelScheme, coeffs: SymmetricCoeffs) -> StateVector:
    """Normalized sum_ij c_ij a_i^dag a_j^dag |vac> over the register levels.

    Bosonic matrix elements supply the sqrt(2) factors on doubly occupied
    levels automatically.
    """
    n = coeffs.n
    if n != scheme.register_levels:
        raise DomainError("coefficient dimension does not match register count")
    if scheme.tracked_cap < 2:
        raise DomainError("scheme cannot hold two excitations")
    basis = build_basis(scheme)
    amps = np.zeros(basis.dim, dtype=complex)
    pad = (0,) * len(scheme.extra_levels)
    m = coeffs.matrix
    for i in range(n):
        for j in range(i, n):
            c = m[i, j]
            if c == 0:
                continue
            occ = [0] * n
            if i == j:
                occ[i] = 2
                amp = math.sqrt(2.0) * c
            else:
                occ[i] = 1
                occ[j] = 1
                amp = 2.0 * c
            amps[basis.index[tuple(occ) + pad]] += amp
    if np.linalg.norm(amps) < 1e-300:
        raise DomainError("coefficient matrix produced a zero state")
    return _unit(amps, scheme)


def coeffs_from_state(state: StateVector) -> SymmetricCoeffs:
    """Inverse of two_excitation_state, normalized to unit state norm.

    Requires support only on states with total register occupation 2 and
    empty extra levels.
    """
    scheme = state.scheme
    n = scheme.register_levels
    basis = state.basis
    m = np.zeros((n, n), dtype=complex)
    for i, amp in enumerate(state.amplitudes):
        if abs(amp) <= 1e-14:
            continue
        occ = basis.states[i]
        regs, extras = occ[:n], occ[n:]
        if any(extras) or sum(regs) != 2:
            raise DomainError(
                "state has support outside the two-excitation register sector")
        filled = [k for k, v in enumerate(regs) if v]
        if len(filled) == 1:
            k = filled[0]
            m[k, k] = amp / math.sqrt(2.0)
        else:
            a, b = filled
            m[a, b] = amp / 2.0
            m[b, a] = amp / 2.0
    return SymmetricCoeffs(m).normalized()


def overlap(a: StateVector, b: StateVector) -> complex:
    if a.scheme != b.scheme:
        raise DomainError("states live on different schemes")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clipped to [0, 1]."""
    return float(min(1.0, abs(overlap(a, b)) ** 2))


def phase_on_occupation(state: StateVector, level, phi: float) -> StateVector:
    """Multiply each amplitude by exp(i phi n_level); exact light shift.

    With phi = pi this is sigma^z on a 0/1-occupied register level.
    """
    k = state.scheme.level_index(level)
    ns = np.array([occ[k] for occ in state.basis.states])
    return StateVector(state.scheme, state.amplitudes * np.exp(1j * phi * ns))


def measure_occupation(state: StateVector, level) -> dict:
    """Projective measurement of one level's occupation.

    Returns {outcome: (probability, renormalized post-measurement state)}
    over all outcomes with nonzero probability; probabilities sum to 1.
    Deterministic; use sample_occupation for a random draw.
    """
    k = state.scheme.level_index(level)
    ns = np.array([occ[k] for occ in state.basis.states])
    out = {}
    for value in sorted(set(ns.tolist())):
        mask = ns == value
        p = float(np.sum(np.abs(state.amplitudes[mask]) ** 2))
        if p <= 1e-300:
            continue
        amps = np.where(mask, state.amplitudes, 0.0) / math.sqrt(p)
        out[int(value)] = (p, StateVector(state.scheme, amps))
    return out


def sample_occupation(state: StateVector, level, rng: np.random.Generator):
    """Draw one outcome from measure_occupation using the given stream."""
    branches = measure_occupation(state, level)
    outcomes = sorted(branches)
    probs = np.array([branches[o][0] for o in outcomes])
    pick = int(rng.choice(len(outcomes), p=probs / probs.sum()))
    value = outcomes[pick]
    return value, branches[value][1]


def state_to_text(state: StateVector) -> str:
    """One line per nonzero amplitude: occupation vector, Re, Im (17 digits)."""
    lines = [
        "# state v1 levels=" + ",".join(str(lv) for lv in state.scheme.levels),
        f"# atoms={state.scheme.total_atoms} tracked_cap={state.scheme.tracked_cap}",
    ]
    for occ, amp in state.nonzero(tol=0.0):
        occ_txt = " ".join(str(n) for n in occ)
        lines.append(f"{occ_txt} {amp.real:.17g} {amp.imag:.17g}")
    return "\n".join(lines) + "\n"


def state_from_text(scheme: LevelScheme, text: str) -> StateVector:
    basis = build_basis(scheme)
    amps = np.zeros(basis.dim, dtype=complex)
    nlev = len(scheme.levels)
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != nlev + 2:
            raise DomainError(f"state text line {ln}: expected {nlev} occupations + Re + Im")
        occ = tuple(int(p) for p in parts[:nlev])
        if occ not in basis.index:
            raise DomainError(f"state text line {ln}: occupation {occ} outside basis")
        amps[basis.index[occ]] = float(parts[-2]) + 1j * float(parts[-1])
    return StateVector(scheme, amps)

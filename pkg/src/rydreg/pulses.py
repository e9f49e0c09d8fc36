"""Piecewise-constant drive Hamiltonians, blockade, and exact unitary evolution.

Rotating-frame segment Hamiltonian for a pulse coupling levels (a, b):

    H = (Omega/2) (e^{i phi} b^dag a + e^{-i phi} a^dag b) - Delta n_b

with Delta the laser detuning from the a->b transition.  When a is the
reservoir, the ladder operators carry the collective sqrt(n0) matrix
element, n0 = K - (tracked occupation).  Soft blockade adds
(V/2) n_r (n_r - 1) per Rydberg level and V_cross n_r n_r2.

Evolution is one dense Hermitian eigendecomposition per segment: exact,
deterministic, and unitary to machine precision.  Light shifts are exact
occupation phases, not simulated dynamics.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .fockspace import (
    RESERVOIR,
    ConfigurationError,
    DomainError,
    LevelScheme,
    OccupationBasis,
    StateVector,
    build_basis,
    phase_on_occupation,
)

SQRT2 = math.sqrt(2.0)

RAMAN = "raman"
RYDBERG_DRIVE = "rydberg_drive"
LIGHT_SHIFT = "light_shift"


class NumericalError(RuntimeError):
    """Numerical linear algebra failed or lost too much precision."""


class ScheduleParseError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Pulse:
    """One constant drive segment; light shifts use level_a and phase only."""

    kind: str
    level_a: object
    level_b: object = None
    rabi: float = 0.0
    phase: float = 0.0
    detuning: float = 0.0
    duration: float = 0.0
    reference_occupancy: int = 1

    def __post_init__(self):
        if self.kind not in (RAMAN, RYDBERG_DRIVE, LIGHT_SHIFT):
            raise DomainError(f"unknown pulse kind {self.kind!r}")
        if self.duration < 0:
            raise DomainError("pulse duration must be >= 0")
        if self.rabi < 0:
            raise DomainError("Rabi magnitude must be >= 0")
        if self.kind == LIGHT_SHIFT and self.level_b is not None:
            raise DomainError("light shifts act on a single level")
        if self.kind != LIGHT_SHIFT and self.level_b is None:
            raise DomainError("drive pulses need a coupled level pair")


@dataclass(frozen=True)
class Measure:
    """Projective occupation measurement marker inside a schedule."""

    level: object
    label: str = ""


@dataclass(frozen=True)
class BlockadeConfig:
    """Hard blockade excludes multiple Rydberg occupation structurally;
    soft blockade keeps it in the basis at interaction energy V (V_cross
    between the two Rydberg levels)."""

    mode: str = "hard"
    v: float = 0.0
    v_cross: float = 0.0

    def __post_init__(self):
        if self.mode not in ("hard", "soft"):
            raise ConfigurationError("blockade mode must be 'hard' or 'soft'")
        if self.mode == "soft" and self.v <= 0:
            raise ConfigurationError("soft blockade requires V > 0")


HARD = BlockadeConfig("hard")


def soft(v: float, v_cross: float | None = None) -> BlockadeConfig:
    return BlockadeConfig("soft", v=v, v_cross=v if v_cross is None else v_cross)


def validate_blockade(scheme: LevelScheme, blockade: BlockadeConfig) -> None:
    has_ryd = any(scheme.is_rydberg(lv) for lv in scheme.extra_levels)
    if blockade.mode == "hard":
        if has_ryd and scheme.rydberg_cap != 1:
            raise ConfigurationError("hard blockade requires rydberg_cap == 1")
    else:
        if has_ryd and scheme.rydberg_cap < 2:
            raise ConfigurationError("soft blockade requires rydberg_cap >= 2")
        if "r" in scheme.extra_levels and "r2" in scheme.extra_levels \
                and blockade.v_cross <= 0:
            raise ConfigurationError("soft blockade with two Rydberg levels requires V_cross > 0")


def infer_kind(level_a, level_b) -> str:
    for lv in (level_a, level_b):
        if lv in ("r", "r2"):
            return RYDBERG_DRIVE
    return RAMAN


def drive_pulse(level_a, level_b, rabi, phase=0.0, detuning=0.0, duration=0.0,
                reference_occupancy=1) -> Pulse:
    return Pulse(kind=infer_kind(level_a, level_b), level_a=level_a, level_b=level_b,
                 rabi=rabi, phase=phase, detuning=detuning, duration=duration,
                 reference_occupancy=reference_occupancy)


def area_pulse(level_a, level_b, area, reference_occupancy, phase=0.0) -> Pulse:
    """Resonant pulse calibrated to unit effective Rabi on its reference manifold.

    The bare Rabi is 1/sqrt(reference_occupancy) so that the manifold whose
    coupling matrix element is sqrt(reference_occupancy) rotates at unit rate;
    the duration then equals the requested area.  The reference is recorded,
    never auto-adjusted per branch: a calibration mismatch on other manifolds
    is a physical effect the simulation must expose.
    """
    if reference_occupancy <= 0:
        raise DomainError("reference occupancy must be positive")
    if area < 0:
        raise DomainError("pulse area must be >= 0")
    return drive_pulse(level_a, level_b, rabi=1.0 / math.sqrt(reference_occupancy),
                       phase=phase, detuning=0.0, duration=float(area),
                       reference_occupancy=int(reference_occupancy))


def pi_pulse(level_a, level_b, reference_occupancy, phase=0.0) -> Pulse:
    """Pulse of effective area pi on the reference manifold."""
    return area_pulse(level_a, level_b, math.pi, reference_occupancy, phase)


def light_shift(level, phi) -> Pulse:
    return Pulse(kind=LIGHT_SHIFT, level_a=level, phase=float(phi))


def build_hamiltonian(scheme: LevelScheme, basis: OccupationBasis, pulse: Pulse,
                      blockade: BlockadeConfig) -> np.ndarray:
    """Dense Hermitian segment Hamiltonian over the basis."""
    if pulse.kind == LIGHT_SHIFT:
        raise DomainError("light shifts are exact phases, not Hamiltonians")
    validate_blockade(scheme, blockade)
    dim = basis.dim
    h = np.zeros((dim, dim), dtype=complex)
    a, b = pulse.level_a, pulse.level_b
    if a != RESERVOIR:
        scheme.level_index(a)
    if b != RESERVOIR:
        scheme.level_index(b)
    if a == b:
        raise DomainError("coupling needs two distinct levels")

    coup = 0.5 * pulse.rabi * cmath.exp(1j * pulse.phase)
    k_atoms = scheme.total_atoms
    ib = None if b == RESERVOIR else scheme.level_index(b)
    ia = None if a == RESERVOIR else scheme.level_index(a)

    for j, occ in enumerate(basis.states):
        # raising term e^{i phi} b^dag a acting on |occ>
        total = sum(occ)
        if ia is None:
            amp_a = math.sqrt(k_atoms - total)
            new = list(occ)
        else:
            if occ[ia] == 0:
                amp_a = 0.0
                new = None
            else:
                amp_a = math.sqrt(occ[ia])
                new = list(occ)
                new[ia] -= 1
        if amp_a:
            if ib is None:
                amp_b = math.sqrt(k_atoms - sum(new) + 1)
                dest = tuple(new)
            else:
                new[ib] += 1
                amp_b = math.sqrt(new[ib])
                dest = tuple(new)
            i = basis.index.get(dest)
            if i is not None:  # absent => structurally blocked (hard mode)
                h[i, j] += coup * amp_a * amp_b

    h = h + h.conj().T

    # detuning on level b, and blockade interaction energies in soft mode
    diag = np.zeros(dim)
    if pulse.detuning != 0.0 and ib is not None:
        for j, occ in enumerate(basis.states):
            diag[j] -= pulse.detuning * occ[ib]
    if blockade.mode == "soft":
        ryd_idx = [scheme.level_index(lv) for lv in scheme.extra_levels
                   if scheme.is_rydberg(lv)]
        for j, occ in enumerate(basis.states):
            e = 0.0
            for k in ryd_idx:
                e += 0.5 * blockade.v * occ[k] * (occ[k] - 1)
            if len(ryd_idx) == 2:
                e += blockade.v_cross * occ[ryd_idx[0]] * occ[ryd_idx[1]]
            diag[j] += e
    h[np.diag_indices(dim)] += diag
    return h


def propagator(scheme: LevelScheme, pulse: Pulse, blockade: BlockadeConfig) -> np.ndarray:
    """exp(-i H t) for one pulse segment, via Hermitian eigendecomposition."""
    basis = build_basis(scheme)
    if pulse.kind == LIGHT_SHIFT:
        k = scheme.level_index(pulse.level_a)
        ns = np.array([occ[k] for occ in basis.states])
        return np.diag(np.exp(1j * pulse.phase * ns))
    h = build_hamiltonian(scheme, basis, pulse, blockade)
    try:
        w, v = scipy.linalg.eigh(h)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed for pulse {pulse}") from exc
    return (v * np.exp(-1j * w * pulse.duration)) @ v.conj().T


def evolve(state: StateVector, pulse: Pulse, blockade: BlockadeConfig = HARD) -> StateVector:
    """Apply one pulse segment exactly; norm preserved to 1e-10."""
    if pulse.kind == LIGHT_SHIFT:
        return phase_on_occupation(state, pulse.level_a, pulse.phase)
    u = propagator(state.scheme, pulse, blockade)
    amps = u @ state.amplitudes
    drift = abs(np.linalg.norm(amps) - np.linalg.norm(state.amplitudes))
    if drift > 1e-10:
        raise NumericalError(f"norm drift {drift:.3e} after pulse {pulse}")
    return StateVector(state.scheme, amps)


def run_schedule(state: StateVector, items, blockade: BlockadeConfig = HARD):
    """Apply pulses in order; record occupation distributions at Measure marks.

    Measurements are reported as deterministic marginals (the state is not
    collapsed); protocols place them at points where collapsing is moot.
    Returns (final state, [(label, level, {outcome: probability}), ...]).
    """
    from .fockspace import measure_occupation

    measured = []
    for item in items:
        if isinstance(item, Measure):
            dist = {k: p for k, (p, _) in measure_occupation(state, item.level).items()}
            measured.append((item.label or f"n_{item.level}", item.level, dist))
        else:
            state = evolve(state, item, blockade)
    return state, measured


# -- the three-pulse phase-imprinting composite ------------------------------

def composite_phase_pulse(omega_t: float) -> list:
    """Three equal-duration pulses on (1, r): phases 0, pi/2, pi.

    The middle pulse is a full 2pi generalized rotation on the bare
    (single-atom) manifold whose rotation axis passes through the state the
    first pulse prepares on the sqrt(2)-enhanced manifold, so populations
    return in every occupation sector and only phases are imprinted.
    Durations are taken as 1, so rabi and detuning carry the areas.
    """
    if omega_t <= 0:
        raise DomainError("omega_t must be positive")
    a = SQRT2 * omega_t
    s, c = math.sin(a), math.cos(a)
    if abs(s) < 1e-9:
        raise DomainError("sin(sqrt2 * omega_t) = 0: composite parameters singular")
    den = math.sqrt(1.0 + c * c)
    omega2_t = 2.0 * math.pi * s / den
    delta2_t = -2.0 * SQRT2 * math.pi * c / den
    mk = lambda ot, dt, ph: drive_pulse(1, "r", rabi=abs(ot), phase=ph if ot >= 0 else ph + math.pi,
                                        detuning=dt, duration=1.0)
    return [
        mk(omega_t, 0.0, 0.0),
        mk(omega2_t, delta2_t, math.pi / 2.0),
        mk(omega_t, 0.0, math.pi),
    ]


def analytic_phase_deltas(omega_t: float):
    """Published closed forms for the composite's four sector phases.

    Returns (d00, d10, d01, d11).  Note: the d11 branch printed in the
    source analysis disagrees with exact evolution of the same pulses; see
    analytic_phase_deltas_simulated for the branch the dynamics follows.
    """
    a = SQRT2 * omega_t
    c = math.cos(a)
    den = math.sqrt(1.0 + c * c)
    d10 = math.pi - SQRT2 * math.pi * c / den
    d11 = SQRT2 * math.pi * (1.0 - c) / den
    return 0.0, d10, d10, d11


def analytic_phase_deltas_simulated(omega_t: float):
    """Sector phases the exact dynamics produces for composite_phase_pulse.

    d00, d10, d01 agree with analytic_phase_deltas; d11 sits on the other
    eigenphase branch of the middle pulse:

        d11 = Delta2 t / 2 - chi' / 2 = -sqrt2 pi (1 + cos(sqrt2 omega_t))
              / sqrt(1 + cos^2(sqrt2 omega_t))      (mod 2 pi)

    which is the value exact evolution of the same three pulses yields (the
    two published sector formulas are mutually inconsistent under any
    global sign convention; the simulation is the arbiter here).
    """
    a = SQRT2 * omega_t
    c = math.cos(a)
    den = math.sqrt(1.0 + c * c)
    d10 = math.pi - SQRT2 * math.pi * c / den
    d11 = (-SQRT2 * math.pi * (1.0 + c) / den) % (2.0 * math.pi)
    return 0.0, d10, d10, d11


def phase_gate_light_shift(omega_t: float) -> float:
    """Per-level light-shift angle x = sqrt2 pi cos(a)/sqrt(1+cos^2 a)."""
    a = SQRT2 * omega_t
    c = math.cos(a)
    return SQRT2 * math.pi * c / math.sqrt(1.0 + c * c)


def phase_gate_magic_omega_t() -> float:
    """omega_t at which light-shifted sector phases become (0, pi, pi, pi).

    Exact evolution requires cos(sqrt2 omega_t) = 2 - sqrt3 (the mirror of
    the published sqrt3 - 2, which solves the condition for the published
    d11 branch instead).
    """
    return math.acos(2.0 - math.sqrt(3.0)) / SQRT2


def phase_gate_published_omega_t() -> float:
    """omega_t with cos(sqrt2 omega_t) = sqrt3 - 2 (published operating point)."""
    return math.acos(math.sqrt(3.0) - 2.0) / SQRT2


# -- schedule text format -----------------------------------------------------

_LEVEL_TOKENS = {"r": "r", "r2": "r2", "c": "c", "e": "e", RESERVOIR: RESERVOIR}


def _level_to_token(level) -> str:
    return str(level)


def _token_to_level(token: str, line: int, col: int):
    if token == RESERVOIR:
        return RESERVOIR
    if token in _LEVEL_TOKENS:
        return token
    try:
        return int(token)
    except ValueError:
        raise ScheduleParseError(line, col, f"unknown level token {token!r}") from None


def schedule_to_text(items) -> str:
    """Serialize pulses / shifts / measures, one record per line."""
    lines = ["# rydreg schedule v1"]
    for item in items:
        if isinstance(item, Measure):
            lines.append(f"measure level={_level_to_token(item.level)} label={item.label or '-'}")
        elif item.kind == LIGHT_SHIFT:
            lines.append(f"shift level={_level_to_token(item.level_a)} phi={item.phase:.17g}")
        else:
            lines.append(
                f"pulse kind={item.kind} a={_level_to_token(item.level_a)}"
                f" b={_level_to_token(item.level_b)}"
                f" omega_t={item.rabi * item.duration:.17g}"
                f" phi={item.phase:.17g}"
                f" delta_t={item.detuning * item.duration:.17g}"
                f" t={item.duration:.17g}"
                f" ref={item.reference_occupancy}"
            )
    return "\n".join(lines) + "\n"


_RECORD_FIELDS = {
    "pulse": ("kind", "a", "b", "omega_t", "phi", "delta_t", "t", "ref"),
    "shift": ("level", "phi"),
    "measure": ("level", "label"),
}
_OPTIONAL_FIELDS = {"measure": ("label",)}


def parse_schedule(text: str) -> list:
    """Strictly parse the schedule text format, reporting line and column."""
    items = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        tokens = raw.split()
        record = tokens[0]
        if record not in _RECORD_FIELDS:
            raise ScheduleParseError(ln, raw.index(record) + 1, f"unknown record type {record!r}")
        allowed = _RECORD_FIELDS[record]
        fields = {}
        cursor = 0
        for tok in tokens[1:]:
            col = raw.index(tok, cursor) + 1
            cursor = col - 1 + len(tok)
            if "=" not in tok:
                raise ScheduleParseError(ln, col, f"expected key=value, got {tok!r}")
            key, val = tok.split("=", 1)
            if key not in allowed:
                raise ScheduleParseError(ln, col, f"unknown {record} field {key!r}")
            if key in fields:
                raise ScheduleParseError(ln, col, f"duplicate field {key!r}")
            fields[key] = (val, col)
        for key in allowed:
            if key not in fields and key not in _OPTIONAL_FIELDS.get(record, ()):
                raise ScheduleParseError(ln, 1, f"{record} record missing field {key!r}")

        def fnum(key):
            val, c = fields[key]
            try:
                return float(val)
            except ValueError:
                raise ScheduleParseError(ln, c, f"field {key} is not a number: {val!r}") from None

        if record == "pulse":
            kind, kc = fields["kind"]
            if kind not in (RAMAN, RYDBERG_DRIVE):
                raise ScheduleParseError(ln, kc, f"unknown pulse kind {kind!r}")
            a = _token_to_level(fields["a"][0], ln, fields["a"][1])
            b = _token_to_level(fields["b"][0], ln, fields["b"][1])
            if infer_kind(a, b) != kind:
                raise ScheduleParseError(ln, kc, f"kind {kind!r} inconsistent with levels {a!r},{b!r}")
            t = fnum("t")
            if t <= 0:
                raise ScheduleParseError(ln, fields["t"][1], "pulse duration must be > 0")
            try:
                ref = int(fields["ref"][0])
            except ValueError:
                raise ScheduleParseError(ln, fields["ref"][1],
                                         f"ref must be an integer: {fields['ref'][0]!r}") from None
            omega_t = fnum("omega_t")
            if omega_t < 0:
                raise ScheduleParseError(ln, fields["omega_t"][1], "omega_t must be >= 0")
            items.append(Pulse(kind=kind, level_a=a, level_b=b, rabi=omega_t / t,
                               phase=fnum("phi"), detuning=fnum("delta_t") / t, duration=t,
                               reference_occupancy=ref))
        elif record == "shift":
            lv = _token_to_level(fields["level"][0], ln, fields["level"][1])
            items.append(light_shift(lv, fnum("phi")))
        else:
            lv = _token_to_level(fields["level"][0], ln, fields["level"][1])
            label = fields.get("label", ("-", 1))[0]
            items.append(Measure(level=lv, label="" if label == "-" else label))
    return items

"""Autonne-Takagi factorization and the Raman-reachability criterion.

A complex symmetric A factors as A = V Sigma V^T with V unitary and Sigma
diagonal nonnegative; the sigma are the positive square roots of the
eigenvalues of A conj(A).  Two normalized two-excitation coefficient
matrices c and c~ are connected by a single-atom (Raman-only) unitary U,
c~ = U^T c U, exactly when c conj(c) and c~ conj(c~) share their spectrum;
one connecting unitary is U = conj(V) V~^T.

compile_unitary factors any register unitary into physical Raman pulses
(two-level rotations, Reck-style elimination) plus a final light-shift
layer.  Convention: compile_unitary(U) realizes the creation-operator map
a_i^dag -> sum_j U_ij a_j^dag, i.e. one-excitation amplitude vectors
transform as v -> U^T v and coefficient matrices as c -> U^T c U, matching
synthesize_u so the two compose directly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .fockspace import DomainError, SymmetricCoeffs
from .pulses import NumericalError, Pulse, drive_pulse, light_shift

UNITARY_TOL = 1e-10
RECONSTRUCT_TOL = 1e-9
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class TakagiFactorization:
    v: np.ndarray       # unitary, columns are the Takagi frame
    sigma: np.ndarray   # nonnegative, descending

    def reconstruct(self) -> np.ndarray:
        return self.v @ np.diag(self.sigma) @ self.v.T


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, SymmetricCoeffs):
        return np.array(a.matrix, dtype=complex)
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("expected a square matrix")
    if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise DomainError("matrix is not symmetric")
    return (m + m.T) / 2.0


def _canonical_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is real positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.argmax(np.abs(col) > 1e-9)
        pivot = col[idx]
        if abs(pivot) > 0:
            out[:, k] = col * (abs(pivot) / pivot)
    return out


def _canonical_sign(vecs: np.ndarray) -> np.ndarray:
    """Fix real eigenvector signs: largest-magnitude entry positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        pivot = col[np.argmax(np.abs(col))]
        if pivot < 0:
            out[:, k] = -col
    return out


def _joint_diagonalize_commuting(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Real orthogonal O diagonalizing two commuting real symmetric matrices."""
    wx, ox = np.linalg.eigh(x)
    o = ox.copy()
    # refine within degenerate x-eigenspaces using y
    start = 0
    n = len(wx)
    for stop in range(1, n + 1):
        if stop == n or wx[stop] - wx[stop - 1] > 1e-10 * max(1.0, abs(wx[stop])):
            if stop - start > 1:
                q = o[:, start:stop]
                yb = q.T @ y @ q
                _, oy = np.linalg.eigh((yb + yb.T) / 2.0)
                o[:, start:stop] = q @ oy
            start = stop
    return _canonical_sign(o)


def takagi_decompose(a) -> TakagiFactorization:
    """Takagi factorization A = V Sigma V^T of a complex symmetric matrix.

    Eigendecomposes the Hermitian PSD product A conj(A); inside each
    degenerate sigma > 0 block with orthonormal frame P, the symmetric
    unitary Z = P^dag A conj(P) / sigma is split into commuting real parts
    and jointly diagonalized, Z = O diag(e^{i theta}) O^T, giving the block
    frame P O diag(e^{i theta / 2}).  Deterministic: descending sigma,
    canonical frame orientation.
    """
    a = _as_matrix(a)
    n = a.shape[0]
    prod = a @ a.conj()
    prod = (prod + prod.conj().T) / 2.0
    evals, evecs = scipy.linalg.eigh(prod)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    sigma = np.sqrt(np.clip(evals, 0.0, None))

    scale = max(1.0, float(sigma[0]) if n else 1.0)
    v = np.zeros((n, n), dtype=complex)
    tol = DEGENERACY_TOL * scale
    start = 0
    for stop in range(1, n + 1):
        if stop == n or sigma[start] - sigma[stop] > tol:
            block = slice(start, stop)
            p = evecs[:, block]
            s = float(np.mean(sigma[block]))
            if s <= tol:
                v[:, block] = _canonical_phase(p)
            else:
                z = p.conj().T @ a @ p.conj() / s
                z = (z + z.T) / 2.0
                x, y = np.real(z), np.imag(z)
                o = _joint_diagonalize_commuting(x, y)
                d = o.T @ z @ o
                thetas = np.angle(np.diag(d))
                frame = p @ o @ np.diag(np.exp(1j * thetas / 2.0))
                v[:, block] = _canonical_phase(frame)
            start = stop

    fact = TakagiFactorization(v=v, sigma=sigma)
    if np.linalg.norm(v.conj().T @ v - np.eye(n)) > UNITARY_TOL:
        raise NumericalError("Takagi frame lost unitarity")
    resid = np.linalg.norm(fact.reconstruct() - a)
    if resid > RECONSTRUCT_TOL * max(np.linalg.norm(a), 1.0):
        raise NumericalError(f"Takagi reconstruction residual {resid:.3e} too large")
    return fact


def coeff_spectrum(c) -> np.ndarray:
    """Eigenvalues of c conj(c), sorted descending (all real nonnegative)."""
    m = _as_matrix(c)
    prod = m @ m.conj()
    evals = scipy.linalg.eigvalsh((prod + prod.conj().T) / 2.0)
    return evals[::-1]


def _check_normalized(c: np.ndarray, what: str) -> None:
    nrm = SymmetricCoeffs(c).state_norm()
    if abs(nrm - 1.0) > 1e-6:
        raise DomainError(f"{what} must be normalized to unit state norm (got {nrm:.6f})")


def reachable(c, c_tilde, tol: float = 1e-9) -> bool:
    """True iff the two coefficient matrices are Raman-connected.

    Criterion: the spectra of c conj(c) and c~ conj(c~) agree entrywise
    (sorted) within tol.  Both matrices must be normalized to unit state
    norm so the spectra are on a common scale.
    """
    a, b = _as_matrix(c), _as_matrix(c_tilde)
    if a.shape != b.shape:
        raise DomainError("coefficient matrices must have the same dimension")
    _check_normalized(a, "c")
    _check_normalized(b, "c_tilde")
    return bool(np.all(np.abs(coeff_spectrum(a) - coeff_spectrum(b)) <= tol))


def synthesize_u(c, c_tilde, tol: float = 1e-9) -> np.ndarray:
    """Unitary U with U^T c U = c~, built as conj(V) V~^T from the two
    Takagi factorizations (valid for any frame choice once the sigma agree)."""
    a, b = _as_matrix(c), _as_matrix(c_tilde)
    if not reachable(a, b, tol=tol):
        raise DomainError("states are not Raman-connected (spectra differ)")
    fa, fb = takagi_decompose(a), takagi_decompose(b)
    u = fa.v.conj() @ fb.v.T
    resid = np.linalg.norm(u.T @ a @ u - b)
    if resid > RECONSTRUCT_TOL:
        raise NumericalError(f"congruence residual {resid:.3e} exceeds tolerance")
    return u


# -- compilation into Raman pulses --------------------------------------------

def _rotation(n: int, p: int, q: int, theta: float, phi: float) -> np.ndarray:
    """Two-level pulse matrix on levels (p, q) in ket-action convention:
    |p> -> cos(theta/2)|p> - i e^{i phi} sin(theta/2)|q>."""
    g = np.eye(n, dtype=complex)
    ch, sh = math.cos(theta / 2.0), math.sin(theta / 2.0)
    g[p, p] = ch
    g[q, q] = ch
    g[p, q] = -1j * cmath.exp(-1j * phi) * sh
    g[q, p] = -1j * cmath.exp(1j * phi) * sh
    return g


def compile_unitary(u) -> list:
    """Compile a register unitary into Raman pulses plus final light shifts.

    Returns a schedule of pulses on register level pairs (labels 1..N, unit
    effective Rabi, duration = rotation angle) followed by per-level light
    shifts.  Simulating the schedule implements the single-atom map
    a_i^dag -> sum_j U_ij a_j^dag exactly, on every occupation sector.
    """
    u = np.array(u, dtype=complex)
    n = u.shape[0]
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DomainError("expected a square matrix")
    if np.linalg.norm(u.conj().T @ u - np.eye(n)) > UNITARY_TOL:
        raise DomainError("matrix is not unitary")

    # ket-action matrix: one-excitation amplitudes transform as v -> U^T v
    a = u.T.copy()
    rotations = []  # (p, q, theta, phi) applied left, R_m ... R_1 a = diag
    for col in range(n - 1):
        for row in range(n - 1, col, -1):
            x = a[col, col]
            y = a[row, col]
            if abs(y) < 1e-14:
                continue
            if abs(x) < 1e-14:
                theta, phi = math.pi, 0.0
            else:
                theta = 2.0 * math.atan2(abs(y), abs(x))
                phi = -math.pi / 2.0 + cmath.phase(y) - cmath.phase(x)
            g = _rotation(n, col, row, theta, phi)
            a = g @ a
            rotations.append((col, row, theta, phi))

    diag = np.diag(a).copy()
    if np.linalg.norm(a - np.diag(diag)) > 1e-10:
        raise NumericalError("triangular elimination failed to diagonalize")
    alphas = np.angle(diag)

    # target = R_1^dag ... R_m^dag D; commute D leftward so shifts come last:
    # target = D B_1 ... B_m with B_k = D^dag R_k^dag D applied in reverse order
    schedule = []
    for (p, q, theta, phi) in reversed(rotations):
        phi_inv = phi + math.pi  # R(theta, phi)^dag = R(theta, phi + pi)
        phi_b = phi_inv + alphas[p] - alphas[q]
        if abs(theta) < 1e-14:
            continue
        schedule.append(drive_pulse(p + 1, q + 1, rabi=1.0, phase=phi_b % (2 * math.pi),
                                    detuning=0.0, duration=theta))
    for k, alpha in enumerate(alphas):
        if abs(alpha) > 1e-14:
            schedule.append(light_shift(k + 1, float(alpha)))

    # verify the compiled product reproduces the requested ket action
    check = np.eye(n, dtype=complex)
    for item in schedule:
        if item.kind == "light_shift":
            d = np.ones(n, dtype=complex)
            d[item.level_a - 1] = cmath.exp(1j * item.phase)
            check = np.diag(d) @ check
        else:
            check = _rotation(n, item.level_a - 1, item.level_b - 1,
                              item.rabi * item.duration, item.phase) @ check
    if np.linalg.norm(check - u.T) > 1e-10:
        raise NumericalError("compiled schedule does not reproduce the unitary")
    return schedule


# -- plain-text complex matrix I/O --------------------------------------------

def parse_complex(token: str) -> complex:
    """Parse 'a+bi' style tokens: 1, -2.5, 3i, 1+2i, -0.5-0.3i."""
    t = token.strip().replace(" ", "")
    if not t:
        raise DomainError("empty complex token")
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise DomainError(f"cannot parse complex token {token!r}") from None


def format_complex(z: complex) -> str:
    re, im = z.real, z.imag
    if im == 0:
        return f"{re:.17g}"
    if re == 0:
        return f"{im:.17g}i"
    sign = "+" if im >= 0 else "-"
    return f"{re:.17g}{sign}{abs(im):.17g}i"


def parse_complex_matrix(text: str) -> np.ndarray:
    """Row-major whitespace-separated complex matrix; blank/# lines skipped."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([parse_complex(tok) for tok in line.split()])
    if not rows:
        raise DomainError("no matrix rows found")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DomainError("ragged matrix rows")
    return np.array(rows, dtype=complex)


def format_complex_matrix(m) -> str:
    m = np.asarray(m, dtype=complex)
    return "\n".join(" ".join(format_complex(z) for z in row) for row in m) + "\n"

"""Drive-dressed eigenstructure and frequency-resolved jump components.

Diagonalising the rotating-frame Hamiltonian splits each transition
operator into pieces that rotate at a single frequency under the system
evolution.  Each piece later picks up the reservoir rate evaluated at its
own frequency, which is how the drive strength enters the dissipators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Frequencies closer than this (ps^-1) are treated as degenerate: far below
# any physical splitting of interest, far above eigenvalue noise.
MERGE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SystemHamiltonian:
    """Rotating-frame Hamiltonian with its cached eigen-decomposition."""

    matrix: np.ndarray        # 3x3 Hermitian, ps^-1
    eigenvalues: np.ndarray   # ascending, ps^-1
    eigenvectors: np.ndarray  # unitary, columns match eigenvalues


@dataclass(frozen=True, eq=False)
class JumpComponent:
    """Fixed-frequency piece of a transition operator.

    ``frequency`` is relative to the e -> g transition; ``rate`` is filled
    in by the generator assembly from the reservoir spectral density.
    """

    frequency: float
    operator: np.ndarray
    rate: float = float("nan")


def system_hamiltonian(delta: float, omega_drive: float) -> SystemHamiltonian:
    """Build the rotating-frame Hamiltonian (ps^-1 inputs).

    The upper level sits at ``delta`` and the drive couples g and e with
    matrix element omega_drive / 2.  Eigenvalues come out as
    {-omega_drive/2, +omega_drive/2, delta} for omega_drive < 2 delta.
    """
    h = np.zeros((3, 3), dtype=complex)
    h[2, 2] = delta
    h[0, 1] = h[1, 0] = 0.5 * omega_drive
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite Hamiltonian entries")
    eigenvalues, eigenvectors = np.linalg.eigh(h)
    return SystemHamiltonian(matrix=h, eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def _eigenspace_projectors(hs: SystemHamiltonian):
    """Group near-degenerate eigenvalues and return (value, projector) pairs."""
    values = hs.eigenvalues
    vectors = hs.eigenvectors
    groups: list[list[int]] = []
    for i in range(len(values)):
        if groups and abs(values[i] - values[groups[-1][0]]) < MERGE_TOL:
            groups[-1].append(i)
        else:
            groups.append([i])
    out = []
    for idx in groups:
        vecs = vectors[:, idx]
        out.append((float(np.mean(values[idx])), vecs @ vecs.conj().T))
    return out


def frequency_components(sigma: np.ndarray, hs: SystemHamiltonian) -> list[JumpComponent]:
    """Decompose an operator into single-frequency jump components.

    Sandwiching ``sigma`` between eigenprojectors P_a, P_b yields a piece
    rotating at the eigenvalue difference lambda_b - lambda_a; pieces with
    coinciding frequencies are merged and the remainder sorted by
    frequency.  Completeness holds by construction: the components sum back
    to ``sigma``.
    """
    if not np.all(np.isfinite(sigma)):
        raise ValueError("non-finite operator entries")
    projectors = _eigenspace_projectors(hs)
    pieces: dict[int, JumpComponent] = {}
    order: list[float] = []
    for val_a, proj_a in projectors:
        for val_b, proj_b in projectors:
            op = proj_a @ sigma @ proj_b
            if np.linalg.norm(op) < 1e-14:
                continue
            freq = val_b - val_a
            for k, known in enumerate(order):
                if abs(freq - known) < MERGE_TOL:
                    old = pieces[k]
                    pieces[k] = JumpComponent(frequency=old.frequency, operator=old.operator + op)
                    break
            else:
                pieces[len(order)] = JumpComponent(frequency=freq, operator=op)
                order.append(freq)
    components = sorted(pieces.values(), key=lambda c: c.frequency)
    return components

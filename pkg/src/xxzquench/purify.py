"""Recurrence entanglement purification on Bell-diagonal pair states.

The protocol is the original recurrence scheme of Bennett et al., Phys.
Rev. Lett. 76, 722 (1996): two identical noisy pairs, a bilateral CNOT
(each party uses their qubit of the source pair as control onto their
qubit of the target pair), a computational-basis measurement of the
target pair, and postselection on coincident outcomes.  For the
Bell-diagonal family produced by the quench the twirling step of the
original protocol is unnecessary: the map sends Bell-diagonal states to
Bell-diagonal states in closed form.

Weights are ordered (psi+, psi-, phi+, phi-).  The closed-form map, with
the target state psi+, reads

    p   = (w+ + w-)^2 + (v+ + v-)^2
    w+' = (w+^2 + w-^2) / p      w-' = 2 w+ w- / p
    v+' = (v+^2 + v-^2) / p      v-' = 2 v+ v- / p

where (w+, w-) are the psi weights and (v+, v-) the phi weights.  A
brute-force two-pair density-matrix construction of the very same
protocol lives alongside it as the testing oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NotPurifiableError
from .freefermion import EndSpinState

WEIGHT_TOL = 1e-12
MAX_RECURRENCE_STEPS = 64

PAIR_ACCOUNTING_NOTE = (
    "expected_pairs = prod_i(2 / p_i): two fresh pairs per attempt, "
    "mean number of attempts 1/p per step (expectation-value accounting)"
)


@dataclass(frozen=True)
class BellDiagonal:
    """Nonnegative weights on the Bell basis, summing to one."""

    psi_plus: float
    psi_minus: float
    phi_plus: float
    phi_minus: float

    def __post_init__(self):
        w = self.as_array()
        if np.any(w < -WEIGHT_TOL):
            raise ValueError(f"Bell weights must be nonnegative, got {tuple(w)}")
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"Bell weights sum to {w.sum()}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.psi_plus, self.psi_minus, self.phi_plus, self.phi_minus]
        )

    @property
    def fidelity(self) -> float:
        """Weight of the psi+ target."""
        return self.psi_plus

    @property
    def largest_weight(self) -> float:
        return float(self.as_array().max())

    @classmethod
    def from_weights(cls, w) -> "BellDiagonal":
        return cls(float(w[0]), float(w[1]), float(w[2]), float(w[3]))

    @classmethod
    def from_end_spin_state(cls, state: EndSpinState) -> "BellDiagonal":
        """Exact Bell decomposition of the end-spin X state.

        The inner block splits into psi+/psi- with weights b +- c; the
        coherence-free outer block spreads evenly over the phi pair.
        """
        return cls(
            psi_plus=state.b + state.c,
            psi_minus=state.b - state.c,
            phi_plus=state.a,
            phi_minus=state.a,
        )

    @classmethod
    def from_fidelity(cls, f: float) -> "BellDiagonal":
        """Source with psi+ weight f and the remainder split over phi+-.

        This is the post-quench peak state with the small psi- admixture
        dropped, the form in which a scan record (a bare fef value)
        specifies a purification source.
        """
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"fidelity must lie in [0, 1], got {f}")
        r = 0.5 * (1.0 - f)
        return cls(psi_plus=f, psi_minus=0.0, phi_plus=r, phi_minus=r)


@dataclass(frozen=True)
class PurificationStep:
    input_state: BellDiagonal
    success_probability: float
    output_state: BellDiagonal


@dataclass(frozen=True)
class PurificationTrace:
    steps: tuple[PurificationStep, ...]
    expected_pairs: float
    final_fidelity: float
    threshold: float
    input_fidelity: float

    @property
    def iterations(self) -> int:
        return len(self.steps)

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "input_fidelity": self.input_fidelity,
            "iterations": self.iterations,
            "final_fidelity": self.final_fidelity,
            "expected_pairs": self.expected_pairs,
            "pair_accounting": PAIR_ACCOUNTING_NOTE,
            "steps": [
                {
                    "input": list(s.input_state.as_array()),
                    "success_probability": s.success_probability,
                    "output": list(s.output_state.as_array()),
                }
                for s in self.steps
            ],
        }


def recurrence_step(state: BellDiagonal) -> tuple[BellDiagonal, float]:
    """One purification round on two copies of ``state`` (closed form)."""
    wp, wm, vp, vm = state.as_array()
    p = (wp + wm) ** 2 + (vp + vm) ** 2
    out = np.array(
        [wp**2 + wm**2, 2.0 * wp * wm, vp**2 + vm**2, 2.0 * vp * vm]
    ) / p
    return BellDiagonal.from_weights(out), float(p)


# --- brute-force oracle -------------------------------------------------
# Qubit order (A1, B1, A2, B2); pair 1 is the kept source, pair 2 the
# measured target.  psi+ is first rotated onto the protocol fixed point
# phi+ by an X on Bob's qubit of each pair, and rotated back afterwards.

_E0 = np.array([1.0, 0.0])
_E1 = np.array([0.0, 1.0])
_X = np.array([[0.0, 1.0], [1.0, 0.0]])

_BELL_VECTORS = (
    np.array([0.0, 1.0, 1.0, 0.0]) / np.sqrt(2.0),   # psi+
    np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0),  # psi-
    np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0),   # phi+
    np.array([1.0, 0.0, 0.0, -1.0]) / np.sqrt(2.0),  # phi-
)


def _cnot(control: int, target: int, n_qubits: int = 4) -> np.ndarray:
    dim = 2**n_qubits
    u = np.zeros((dim, dim))
    for s in range(dim):
        if (s >> (n_qubits - 1 - control)) & 1:
            u[s ^ (1 << (n_qubits - 1 - target)), s] = 1.0
        else:
            u[s, s] = 1.0
    return u


_ROTATE_B = np.kron(np.eye(2), _X)
_BILATERAL_CNOT = _cnot(0, 2) @ _cnot(1, 3)
_PROJ_00 = np.kron(np.eye(4), np.kron(np.outer(_E0, _E0), np.outer(_E0, _E0)))
_PROJ_11 = np.kron(np.eye(4), np.kron(np.outer(_E1, _E1), np.outer(_E1, _E1)))


def _bell_diagonal_matrix(state: BellDiagonal) -> np.ndarray:
    return sum(
        w * np.outer(v, v) for w, v in zip(state.as_array(), _BELL_VECTORS)
    )


def recurrence_step_dense(state: BellDiagonal) -> tuple[BellDiagonal, float]:
    """Same round as :func:`recurrence_step`, via the 16x16 density matrix.

    Builds the two-pair product state, applies the bilateral CNOT,
    projects the target pair on coincident outcomes, renormalizes, traces
    the target pair out and undoes the local rotation.
    """
    pair = _ROTATE_B @ _bell_diagonal_matrix(state) @ _ROTATE_B.T
    full = np.kron(pair, pair)
    full = _BILATERAL_CNOT @ full @ _BILATERAL_CNOT.T
    kept = _PROJ_00 @ full @ _PROJ_00 + _PROJ_11 @ full @ _PROJ_11
    p = float(np.trace(kept).real)
    kept /= p
    reduced = np.trace(kept.reshape(4, 4, 4, 4), axis1=1, axis2=3)
    reduced = _ROTATE_B @ reduced @ _ROTATE_B.T
    weights = np.array([float((v @ reduced @ v).real) for v in _BELL_VECTORS])
    return BellDiagonal.from_weights(weights), p


_ORIENTATIONS = {
    0: (0, 1, 2, 3),  # psi+ already dominant
    1: (1, 0, 3, 2),  # Z on one side swaps psi+/psi- and phi+/phi-
    2: (2, 3, 0, 1),  # X on one side swaps psi/phi within each sign
    3: (3, 2, 1, 0),  # Y on one side
}


def orient_to_target(state: BellDiagonal) -> BellDiagonal:
    """Local rotation (a weight permutation) putting the largest weight
    on the psi+ target."""
    w = state.as_array()
    perm = _ORIENTATIONS[int(np.argmax(w))]
    return BellDiagonal.from_weights(w[list(perm)])


def purify_until(
    state: BellDiagonal, threshold: float = 0.99, max_steps: int = MAX_RECURRENCE_STEPS
) -> PurificationTrace:
    """Iterate purification rounds until the target fidelity crosses
    ``threshold``; track success probabilities and the expected number of
    raw input pairs per final pair."""
    if not 0.5 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (1/2, 1), got {threshold}")
    current = orient_to_target(state)
    input_fidelity = current.fidelity
    if input_fidelity <= 0.5:
        raise NotPurifiableError(
            f"input fidelity {input_fidelity} <= 1/2; the criterion "
            f"for purifiability is fidelity > 1/2"
        )
    steps: list[PurificationStep] = []
    expected_pairs = 1.0
    while current.fidelity < threshold:
        if len(steps) >= max_steps:
            raise ConvergenceError(
                f"fidelity {current.fidelity} below threshold {threshold} "
                f"after {max_steps} purification rounds"
            )
        nxt, p = recurrence_step(current)
        steps.append(
            PurificationStep(
                input_state=current, success_probability=p, output_state=nxt
            )
        )
        expected_pairs *= 2.0 / p
        current = nxt
    return PurificationTrace(
        steps=tuple(steps),
        expected_pairs=expected_pairs,
        final_fidelity=current.fidelity,
        threshold=threshold,
        input_fidelity=input_fidelity,
    )

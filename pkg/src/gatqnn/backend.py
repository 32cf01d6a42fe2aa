"""Small-register quantum simulation for RX/CNOT circuits.

States are plain complex numpy arrays whose last axis has length ``2**n``;
any leading axes are batch axes, so a whole mini-batch of encoded samples is
pushed through a circuit in one pass. Bit ``i`` of a basis index is qubit
``i`` (qubit 0 is the least significant bit). Density matrices carry two
trailing axes of length ``2**n`` (row, column).

Three execution backends are available through :class:`BackendConfig`:

* ``exact``  - statevector, exact Pauli-Z expectations
* ``shots``  - statevector, Z means estimated from sampled bitstrings
* ``noisy``  - density matrix with a single-qubit depolarizing channel
  applied to every wire a gate touches, right after that gate
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    BackendConfigError,
    ControlEqualsTarget,
    MissingSlot,
    NotNormalized,
    WireOutOfRange,
    WrongLength,
    ZeroShots,
)

if TYPE_CHECKING:
    from .circuit import MicroCircuitSpec, SlotId

MAX_QUBITS = 10
ENCODE_NORM_TOL = 1e-6
BACKEND_KINDS = ("exact", "shots", "noisy")


@dataclass(frozen=True)
class GateOp:
    """One gate of a microCircuit.

    ``kind`` is ``"RX"`` or ``"CNOT"``. RX uses ``wires=(wire,)`` and names the
    parameter slot it reads; CNOT uses ``wires=(control, target)``.
    """

    kind: str
    wires: tuple[int, ...]
    slot: Optional["SlotId"] = None

    def __post_init__(self):
        if self.kind == "RX":
            if len(self.wires) != 1 or self.slot is None:
                raise ValueError("RX needs exactly one wire and a slot")
        elif self.kind == "CNOT":
            if len(self.wires) != 2:
                raise ValueError("CNOT needs (control, target)")
            if self.wires[0] == self.wires[1]:
                raise ControlEqualsTarget(f"control == target == {self.wires[0]}")
        else:
            raise ValueError(f"unsupported gate kind {self.kind!r}")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "exact"
    shots: int = 1024
    p: float = 0.01
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise BackendConfigError(f"unknown backend {self.kind!r}")
        if self.kind == "shots" and (int(self.shots) != self.shots or self.shots < 1):
            raise BackendConfigError(f"shots must be a positive integer, got {self.shots}")
        if self.kind == "noisy" and not (0.0 <= self.p < 1.0):
            raise BackendConfigError(f"depolarizing probability must be in [0, 1), got {self.p}")

    @property
    def stochastic(self) -> bool:
        return self.kind == "shots"


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise WrongLength(f"state length {dim} is not a power of two >= 2")
    if n > MAX_QUBITS:
        raise WrongLength(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


def _check_wire(wire: int, n: int) -> None:
    if not 0 <= wire < n:
        raise WireOutOfRange(f"wire {wire} outside [0, {n})")


def amplitude_encode(features, n: Optional[int] = None) -> np.ndarray:
    """Load unit-norm real feature vectors as state amplitudes.

    Accepts a single vector or a batch ``(B, 2**n)``. Every vector must already
    be normalized to within ``1e-6``; the residual drift is removed here.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 0:
        raise WrongLength("features must be a vector")
    if n is not None and x.shape[-1] != 1 << n:
        raise WrongLength(f"expected {1 << n} features for {n} qubits, got {x.shape[-1]}")
    num_qubits(x.shape[-1])
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(np.abs(norms - 1.0) > ENCODE_NORM_TOL):
        raise NotNormalized(f"feature norm outside 1 +/- {ENCODE_NORM_TOL}")
    return (x / norms).astype(complex)


def _split(arr: np.ndarray, wire: int) -> np.ndarray:
    # (..., 2**n) -> (..., high, 2, low) with the middle axis being `wire`
    dim = arr.shape[-1]
    low = 1 << wire
    return arr.reshape(arr.shape[:-1] + (dim // (2 * low), 2, low))


def _rx_last_axis(arr: np.ndarray, wire: int, theta: float) -> np.ndarray:
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    v = _split(arr, wire)
    a0 = v[..., 0, :]
    a1 = v[..., 1, :]
    out = np.empty_like(v)
    out[..., 0, :] = c * a0 - 1j * s * a1
    out[..., 1, :] = c * a1 - 1j * s * a0
    return out.reshape(arr.shape)


def _cnot_perm(control: int, target: int, dim: int) -> np.ndarray:
    idx = np.arange(dim)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def apply_rx(state: np.ndarray, wire: int, theta: float) -> np.ndarray:
    """Apply ``exp(-i theta X / 2)`` to ``wire``."""
    _check_wire(wire, num_qubits(state.shape[-1]))
    return _rx_last_axis(state, wire, theta)


def apply_cnot(state: np.ndarray, control: int, target: int) -> np.ndarray:
    n = num_qubits(state.shape[-1])
    _check_wire(control, n)
    _check_wire(target, n)
    if control == target:
        raise ControlEqualsTarget(f"control == target == {control}")
    return state[..., _cnot_perm(control, target, state.shape[-1])]


def z_signs(n: int) -> np.ndarray:
    """``(n, 2**n)`` table of +1/-1 Z eigenvalues per qubit and basis index."""
    idx = np.arange(1 << n)
    return 1.0 - 2.0 * ((idx[None, :] >> np.arange(n)[:, None]) & 1)


def probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def expectation_z(state: np.ndarray) -> np.ndarray:
    n = num_qubits(state.shape[-1])
    return probabilities(state) @ z_signs(n).T


def sample_bitstrings(state: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Histogram of ``shots`` basis-state draws from ``|amp|**2``.

    Returns integer counts with the same shape as ``state``.
    """
    if shots < 1:
        raise ZeroShots("shots must be >= 1")
    probs = probabilities(state)
    probs = probs / probs.sum(axis=-1, keepdims=True)
    return rng.multinomial(int(shots), probs)


def expectation_z_from_counts(counts: np.ndarray) -> np.ndarray:
    n = num_qubits(counts.shape[-1])
    total = counts.sum(axis=-1, keepdims=True)
    return (counts @ z_signs(n).T) / total


# --- density matrices -----------------------------------------------------

def to_density(state: np.ndarray) -> np.ndarray:
    return state[..., :, None] * state[..., None, :].conj()


def density_rx(rho: np.ndarray, wire: int, theta: float) -> np.ndarray:
    # U rho U^dagger: U acts on the row index, conj(U) = RX(-theta) on the column index
    rho = _rx_last_axis(rho.swapaxes(-1, -2), wire, theta).swapaxes(-1, -2)
    return _rx_last_axis(rho, wire, -theta)


def density_cnot(rho: np.ndarray, control: int, target: int) -> np.ndarray:
    perm = _cnot_perm(control, target, rho.shape[-1])
    return rho[..., perm, :][..., perm]


def depolarize(rho: np.ndarray, wire: int, p: float) -> np.ndarray:
    """Single-qubit depolarizing channel: ``(1-p) rho + p * I/2 (x) Tr_wire rho``."""
    if p == 0.0:
        return rho
    dim = rho.shape[-1]
    low = 1 << wire
    high = dim // (2 * low)
    v = rho.reshape(rho.shape[:-2] + (high, 2, low, high, 2, low))
    reduced = v[..., :, 0, :, :, 0, :] + v[..., :, 1, :, :, 1, :]
    out = (1.0 - p) * v
    out[..., :, 0, :, :, 0, :] += 0.5 * p * reduced
    out[..., :, 1, :, :, 1, :] += 0.5 * p * reduced
    return out.reshape(rho.shape)


def density_expectation_z(rho: np.ndarray) -> np.ndarray:
    n = num_qubits(rho.shape[-1])
    diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    return diag @ z_signs(n).T


# --- circuit execution ----------------------------------------------------

def angle_vector(spec: "MicroCircuitSpec", angles: Mapping["SlotId", float]) -> np.ndarray:
    """Order a slot->angle mapping like ``spec.slots``."""
    missing = [s for s in spec.slots if s not in angles]
    if missing:
        raise MissingSlot(f"no angle for slots {missing}")
    return np.array([angles[s] for s in spec.slots], dtype=float)


def run_statevector(spec: "MicroCircuitSpec", state: np.ndarray, thetas: Sequence[float]) -> np.ndarray:
    slot_pos = spec.slot_index
    for gate in spec.gates:
        if gate.kind == "RX":
            state = _rx_last_axis(state, gate.wires[0], thetas[slot_pos[gate.slot]])
        else:
            state = state[..., _cnot_perm(gate.wires[0], gate.wires[1], state.shape[-1])]
    return state


def run_density(spec: "MicroCircuitSpec", rho: np.ndarray, thetas: Sequence[float], p: float) -> np.ndarray:
    slot_pos = spec.slot_index
    for gate in spec.gates:
        if gate.kind == "RX":
            rho = density_rx(rho, gate.wires[0], thetas[slot_pos[gate.slot]])
        else:
            rho = density_cnot(rho, gate.wires[0], gate.wires[1])
        for w in gate.wires:
            rho = depolarize(rho, w, p)
    return rho


def execute_vector(
    spec: "MicroCircuitSpec",
    features,
    thetas: Sequence[float],
    backend: BackendConfig,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Like :func:`execute` but with angles already ordered as ``spec.slots``."""
    state = amplitude_encode(features, spec.n)
    if len(thetas) != len(spec.slots):
        raise MissingSlot(f"expected {len(spec.slots)} angles, got {len(thetas)}")
    if backend.kind == "noisy":
        rho = run_density(spec, to_density(state), thetas, backend.p)
        return density_expectation_z(rho)
    state = run_statevector(spec, state, thetas)
    if backend.kind == "exact":
        return expectation_z(state)
    if rng is None:
        rng = np.random.default_rng(backend.seed)
    return expectation_z_from_counts(sample_bitstrings(state, backend.shots, rng))


def execute(
    spec: "MicroCircuitSpec",
    features,
    angles: Mapping["SlotId", float],
    backend: BackendConfig,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Encode ``features``, run the circuit and return per-qubit Z expectations.

    ``features`` may be one vector or a batch; the result has shape ``(n,)`` or
    ``(B, n)``. For the shots backend, ``rng`` takes precedence over
    ``backend.seed``.
    """
    return execute_vector(spec, features, angle_vector(spec, angles), backend, rng)

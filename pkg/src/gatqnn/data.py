"""Dataset plumbing: MNIST IDX files, class subsets, PCA and encoding.

PCA is computed with a self-contained block (subspace) iteration: the
covariance is applied to an orthonormal block, a Rayleigh-Ritz step with a
cyclic Jacobi solver rotates the block onto eigenvector estimates, and
leading columns are locked (deflated) once their residual drops below the
tolerance.
"""

from __future__ import annotations

import gzip
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadMagic,
    CountMismatch,
    NoConvergence,
    TooFewSamples,
    TooManyClasses,
    TruncatedFile,
    UnknownClass,
)

log = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
DEGENERATE_NORM = 1e-9


@dataclass
class RawDataset:
    images: np.ndarray  # (N, rows, cols) uint8
    labels: np.ndarray  # (N,) uint8

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise CountMismatch(f"{len(self.images)} images vs {len(self.labels)} labels")

    def __len__(self):
        return len(self.labels)

    def flat(self) -> np.ndarray:
        """Flattened pixels scaled to [0, 1]."""
        return self.images.reshape(len(self.images), -1).astype(float) / 255.0


@dataclass
class EncodedDataset:
    features: np.ndarray  # (N, 2**n), unit rows
    labels: np.ndarray  # (N,) in 0..C-1
    class_map: dict  # original label -> index

    def __len__(self):
        return len(self.labels)

    @property
    def n_classes(self) -> int:
        return len(self.class_map)

    def take(self, idx) -> "EncodedDataset":
        return EncodedDataset(self.features[idx], self.labels[idx], dict(self.class_map))


# --- IDX -----------------------------------------------------------------

def _open(path):
    path = Path(path)
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def _read_idx(path, expected_magic: int) -> tuple[tuple[int, ...], bytes]:
    with _open(path) as f:
        blob = f.read()
    if len(blob) < 8:
        raise TruncatedFile(f"{path}: header truncated")
    (magic,) = struct.unpack(">I", blob[:4])
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise TruncatedFile(f"{path}: header truncated")
    dims = struct.unpack(f">{ndim}I", blob[4:header])
    size = int(np.prod(dims))
    if len(blob) - header < size:
        raise TruncatedFile(f"{path}: expected {size} data bytes, found {len(blob) - header}")
    return dims, blob[header : header + size]


def load_idx(images_path, labels_path) -> RawDataset:
    """Read an IDX image/label pair (gzip-compressed if the name ends in ``.gz``)."""
    dims, data = _read_idx(images_path, IMAGE_MAGIC)
    images = np.frombuffer(data, dtype=np.uint8).reshape(dims)
    (count,), data = _read_idx(labels_path, LABEL_MAGIC)
    labels = np.frombuffer(data, dtype=np.uint8)
    if count != dims[0]:
        raise CountMismatch(f"{dims[0]} images but {count} labels")
    return RawDataset(images.copy(), labels.copy())


def write_idx(raw: RawDataset, images_path, labels_path) -> None:
    n, rows, cols = raw.images.shape
    opener = lambda p: gzip.open(p, "wb") if Path(p).suffix == ".gz" else open(p, "wb")  # noqa: E731
    with opener(images_path) as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(np.ascontiguousarray(raw.images, dtype=np.uint8).tobytes())
    with opener(labels_path) as f:
        f.write(struct.pack(">II", LABEL_MAGIC, n))
        f.write(np.ascontiguousarray(raw.labels, dtype=np.uint8).tobytes())


MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def load_mnist(data_dir, split: str) -> RawDataset:
    """Load the standard MNIST file pair from ``data_dir`` (plain or ``.gz``)."""
    data_dir = Path(data_dir)
    paths = []
    for name in MNIST_FILES[split]:
        for candidate in (data_dir / name, data_dir / f"{name}.gz"):
            if candidate.exists():
                paths.append(candidate)
                break
        else:
            raise FileNotFoundError(f"{name}[.gz] not found in {data_dir}")
    return load_idx(*paths)


def subset_classes(raw: RawDataset, classes: Sequence[int], per_class: int, rng: np.random.Generator) -> RawDataset:
    """Balanced per-class sample without replacement, returned in shuffled order."""
    picked = []
    for c in classes:
        idx = np.flatnonzero(raw.labels == c)
        if len(idx) == 0:
            raise UnknownClass(f"class {c} does not occur in the dataset")
        take = per_class
        if len(idx) < per_class:
            log.warning("class %s has only %d samples (%d requested)", c, len(idx), per_class)
            take = len(idx)
        picked.append(rng.choice(idx, size=take, replace=False))
    idx = np.concatenate(picked) if picked else np.array([], dtype=int)
    idx = idx[rng.permutation(len(idx))]
    return RawDataset(raw.images[idx], raw.labels[idx])


# --- PCA -----------------------------------------------------------------

def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns eigenvalues (descending) and matching eigenvector columns.
    """
    a = np.array(a, dtype=float)
    k = a.shape[0]
    v = np.eye(k)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if abs(apq) <= 1e-300 or abs(apq) < 1e-3 * tol * scale:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * col_p - s * col_q, s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * row_p - s * row_q, s * row_p + c * row_q
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


@dataclass
class PcaModel:
    mean: np.ndarray  # (D,)
    components: np.ndarray  # (D, d), orthonormal columns
    explained_variance: np.ndarray  # (d,)

    @property
    def out_dim(self) -> int:
        return self.components.shape[1]

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components

    def to_dict(self) -> dict:
        return {
            "in_dim": int(self.components.shape[0]),
            "out_dim": self.out_dim,
            "mean": self.mean.tolist(),
            "components": self.components.ravel().tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        comps = np.asarray(d["components"], dtype=float).reshape(d["in_dim"], d["out_dim"])
        return cls(np.asarray(d["mean"], dtype=float), comps, np.asarray(d["explained_variance"], dtype=float))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "PcaModel":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _rayleigh_ritz(cov, q):
    t = q.T @ cov @ q
    w, v = jacobi_eigh((t + t.T) / 2.0)
    return w, q @ v


def fit_pca(x: np.ndarray, out_dim: int, tol: float = 1e-9, max_iter: int = 10_000, oversample: int = 16) -> PcaModel:
    """Top-``out_dim`` principal components of the rows of ``x``.

    Iterates until every wanted eigenpair has relative residual
    ``||C q - lambda q|| / lambda_max <= tol``; raises :class:`NoConvergence`
    after ``max_iter`` block iterations.
    """
    x = np.asarray(x, dtype=float)
    n_samples, dim = x.shape
    if n_samples <= out_dim:
        raise TooFewSamples(f"{n_samples} samples for {out_dim} components")
    if out_dim > dim:
        raise ValueError(f"cannot extract {out_dim} components from {dim} dimensions")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (n_samples - 1)
    scale = np.finfo(float).tiny

    block = min(dim, out_dim + oversample)
    start = np.random.default_rng(0).standard_normal((dim, block))
    q, _ = np.linalg.qr(start)
    locked = np.zeros((dim, 0))
    locked_vals: list[float] = []

    for it in range(max_iter):
        z = cov @ q
        if locked.shape[1]:
            z -= locked @ (locked.T @ z)
        q, _ = np.linalg.qr(z)
        if locked.shape[1]:
            q -= locked @ (locked.T @ q)
            q, _ = np.linalg.qr(q)
        w, q = _rayleigh_ritz(cov, q)
        if len(w):
            scale = max(scale, w[0], *locked_vals[:1])
        resid = np.linalg.norm(cov @ q - q * w, axis=0) / scale
        # deflate: lock leading converged pairs
        n_new = 0
        while n_new < len(w) and resid[n_new] <= tol and locked.shape[1] + n_new < out_dim:
            n_new += 1
        if n_new:
            locked = np.hstack([locked, q[:, :n_new]])
            locked_vals.extend(w[:n_new].tolist())
            q = q[:, n_new:]
        if locked.shape[1] >= out_dim:
            break
        if q.shape[1] == 0:
            break
    else:
        raise NoConvergence(f"PCA did not converge in {max_iter} iterations")

    comps = locked[:, :out_dim]
    vals = np.array(locked_vals[:out_dim])
    # locking may interleave nearly equal pairs; final ordering by eigenvalue
    order = np.argsort(-vals, kind="stable")
    comps, vals = comps[:, order], vals[order]
    signs = np.sign(comps[np.argmax(np.abs(comps), axis=0), np.arange(out_dim)])
    signs[signs == 0] = 1.0
    comps = comps * signs
    return PcaModel(mean, comps, np.maximum(vals, 0.0))


# --- encoding ------------------------------------------------------------

def _normalize_rows(y: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(y, axis=1, keepdims=True)
    bad = norms[:, 0] < DEGENERATE_NORM
    if bad.any():
        log.warning("%d degenerate projections replaced by e_0", int(bad.sum()))
    out = np.divide(y, norms, out=np.zeros_like(y), where=~bad[:, None])
    out[bad] = 0.0
    out[bad, 0] = 1.0
    return out


def project_and_normalize(pca: PcaModel, raw: RawDataset, classes: Sequence[int]) -> EncodedDataset:
    class_map = {int(c): i for i, c in enumerate(sorted(int(c) for c in classes))}
    unknown = set(np.unique(raw.labels).tolist()) - set(class_map)
    if unknown:
        raise UnknownClass(f"labels {sorted(unknown)} not among classes {sorted(class_map)}")
    features = _normalize_rows(pca.transform(raw.flat()))
    labels = np.array([class_map[int(l)] for l in raw.labels], dtype=int)
    return EncodedDataset(features, labels, class_map)


def synthetic_blobs(
    n_classes: int, dim: int, per_class: int, spread: float, rng: np.random.Generator
) -> EncodedDataset:
    """Class ``c`` = basis vector ``e_c`` plus isotropic Gaussian jitter, normalized."""
    if n_classes > dim:
        raise TooManyClasses(f"{n_classes} classes do not fit in dimension {dim}")
    labels = np.repeat(np.arange(n_classes), per_class)
    x = np.zeros((len(labels), dim))
    x[np.arange(len(labels)), labels] = 1.0
    if spread > 0:
        x += spread * rng.standard_normal(x.shape)
    order = rng.permutation(len(labels))
    return EncodedDataset(_normalize_rows(x[order]), labels[order], {c: c for c in range(n_classes)})


def prepare_mnist(
    data_dir,
    classes: Sequence[int],
    train_per_class: int,
    test_per_class: int,
    n_qubits: int,
    rng: np.random.Generator,
) -> tuple[EncodedDataset, EncodedDataset, PcaModel]:
    """Subset train/test MNIST, fit PCA on the train subset only, encode both."""
    train_raw = subset_classes(load_mnist(data_dir, "train"), classes, train_per_class, rng)
    test_raw = subset_classes(load_mnist(data_dir, "test"), classes, test_per_class, rng)
    pca = fit_pca(train_raw.flat(), 1 << n_qubits)
    return project_and_normalize(pca, train_raw, classes), project_and_normalize(pca, test_raw, classes), pca

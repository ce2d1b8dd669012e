"""Generative model: latents, Gaussian design, responses, SBM side graph.

One draw of the model produces

* sigma0 ~ iid Bernoulli(rho), beta0 | sigma0 from the prior atoms,
* Phi with iid N(0, 1/p) entries (columns of Phi/sqrt(kappa) have unit
  norm, which the message-passing normalization relies on),
* y = Phi beta0 + eps, eps ~ N(0, Delta),
* a symmetric simple graph with edge probability a_p/p inside the
  sigma0 = 1 community and b_p/p otherwise.

Randomness is split into named child streams (latents / design / noise /
graph / surrogate) of a single ``SeedSequence`` so replicates can run in
parallel without stream collisions and every artifact is reproducible
bit-for-bit from (params, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .priors import PriorSpec

__all__ = [
    "ModelParams",
    "Dataset",
    "snr_to_ap",
    "ap_to_snr",
    "generate",
    "centered_adjacency_apply",
    "centered_adjacency_dense",
    "gaussian_surrogate",
    "save_dataset",
    "load_dataset",
]

# named RNG streams spawned from the dataset seed
_STREAM_LATENTS, _STREAM_DESIGN, _STREAM_NOISE, _STREAM_GRAPH, _STREAM_SURROGATE = range(5)

MAX_SURROGATE_P = 5000


def snr_to_ap(lam: float, b_p: float, p: int) -> float:
    """Within-community rate numerator a_p achieving graph SNR lam.

    Inverts the SNR calibration (a_p - b_p)/p = sqrt(lam*d(1-d)/p) with
    d = b_p/p, i.e. a_p = b_p + sqrt(lam * b_p * (1 - b_p/p)).
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not 0 < b_p < p:
        raise ValueError("need 0 < b_p < p")
    a_p = b_p + math.sqrt(lam * b_p * (1.0 - b_p / p))
    if a_p > p:
        raise ValueError("supercritical SNR for given sparsity")
    return a_p


def ap_to_snr(a_p: float, b_p: float, p: int) -> float:
    """Graph SNR lam implied by the pair of edge-rate numerators."""
    if not 0 < b_p < p:
        raise ValueError("need 0 < b_p < p")
    d = b_p / p
    return (a_p - b_p) ** 2 / (p * d * (1.0 - d))


@dataclass(frozen=True)
class ModelParams:
    """Full parameter set of one model instance."""

    n: int
    p: int
    Delta: float
    b_p: float
    a_p: float
    lam: float
    prior: PriorSpec
    design_dist: str = "gaussian"

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.Delta <= 0:
            raise ValueError("Delta must be positive")
        if not 0 < self.b_p < self.a_p or self.a_p > self.p:
            if not (self.lam == 0 and self.a_p == self.b_p):
                raise ValueError("need 0 < b_p < a_p <= p (or a_p == b_p at lam = 0)")
        if abs(ap_to_snr(self.a_p, self.b_p, self.p) - self.lam) > 1e-10:
            raise ValueError("lambda inconsistent with (a_p, b_p, p)")
        if self.design_dist not in ("gaussian", "bernoulli"):
            raise ValueError(f"unknown design_dist {self.design_dist!r}")

    @property
    def kappa(self) -> float:
        return self.n / self.p

    @classmethod
    def from_snr(cls, n: int, p: int, Delta: float, b_p: float, lam: float,
                 prior: PriorSpec, design_dist: str = "gaussian") -> "ModelParams":
        """Build params with a_p calibrated from the SNR."""
        a_p = snr_to_ap(lam, b_p, p) if lam > 0 else b_p
        return cls(n=n, p=p, Delta=Delta, b_p=b_p, a_p=a_p, lam=lam,
                   prior=prior, design_dist=design_dist)


@dataclass(frozen=True)
class Dataset:
    """One realization of the model; immutable after creation."""

    params: ModelParams
    seed: int
    sigma0: np.ndarray
    beta0: np.ndarray
    Phi: np.ndarray
    y: np.ndarray
    adjacency: sp.csr_array = field(repr=False)

    @property
    def d_bar(self) -> float:
        return self.params.b_p / self.params.p

    def edge_list(self) -> np.ndarray:
        """(m, 2) array of i < j edges."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]])


def _sample_beta(rng: np.random.Generator, sigma0: np.ndarray, prior: PriorSpec) -> np.ndarray:
    beta = np.empty(sigma0.shape[0])
    for s, atoms in ((0, prior.atoms0), (1, prior.atoms1)):
        mask = sigma0 == s
        vals = np.array([v for v, _ in atoms])
        probs = np.array([p for _, p in atoms])
        beta[mask] = rng.choice(vals, size=int(mask.sum()), p=probs)
    return beta


def _sample_design(rng: np.random.Generator, n: int, p: int, dist: str) -> np.ndarray:
    scale = 1.0 / math.sqrt(p)
    if dist == "gaussian":
        return rng.standard_normal((n, p)) * scale
    # centered, variance-normalized iid Bernoulli(0.3)
    q = 0.3
    raw = (rng.random((n, p)) < q).astype(float)
    return (raw - q) / math.sqrt(q * (1 - q)) * scale


def _sample_graph(rng: np.random.Generator, sigma0: np.ndarray,
                  a_p: float, b_p: float) -> sp.csr_array:
    """Upper-triangular Bernoulli edges, row blocks to bound memory."""
    p = sigma0.shape[0]
    pa, pb = a_p / p, b_p / p
    rows, cols = [], []
    for i in range(p - 1):
        j = np.arange(i + 1, p)
        prob = np.where(sigma0[i] * sigma0[i + 1:] == 1.0, pa, pb)
        hit = rng.random(p - 1 - i) < prob
        if hit.any():
            cols.append(j[hit])
            rows.append(np.full(int(hit.sum()), i))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = np.empty(0, dtype=int)
        c = np.empty(0, dtype=int)
    data = np.ones(len(r))
    upper = sp.coo_array((data, (r, c)), shape=(p, p))
    return (upper + upper.T).tocsr()


def generate(params: ModelParams, seed: int) -> Dataset:
    """Draw one dataset; deterministic given (params, seed)."""
    streams = np.random.SeedSequence(seed).spawn(5)
    rng_lat = np.random.default_rng(streams[_STREAM_LATENTS])
    rng_des = np.random.default_rng(streams[_STREAM_DESIGN])
    rng_noise = np.random.default_rng(streams[_STREAM_NOISE])
    rng_graph = np.random.default_rng(streams[_STREAM_GRAPH])

    p, n = params.p, params.n
    sigma0 = (rng_lat.random(p) < params.prior.rho).astype(float)
    beta0 = _sample_beta(rng_lat, sigma0, params.prior)
    Phi = _sample_design(rng_des, n, p, params.design_dist)
    eps = rng_noise.standard_normal(n) * math.sqrt(params.Delta)
    y = Phi @ beta0 + eps
    adj = _sample_graph(rng_graph, sigma0, params.a_p, params.b_p)
    return Dataset(params=params, seed=seed, sigma0=sigma0, beta0=beta0,
                   Phi=Phi, y=y, adjacency=adj)


def centered_adjacency_apply(dataset: Dataset, v: np.ndarray) -> np.ndarray:
    """Product of the centered, scaled adjacency with v, without densifying.

    The centered matrix is (A - d) / sqrt(d (1 - d)) with d = b_p/p applied
    entrywise (diagonal included), so the product is the sparse A @ v minus
    the rank-one correction d * sum(v).
    """
    d = dataset.d_bar
    if d <= 0.0 or d >= 1.0:
        raise ZeroDivisionError("centered adjacency undefined for b_p in {0, p}")
    v = np.asarray(v, dtype=float)
    if v.shape[0] != dataset.params.p:
        raise DimensionMismatch("vector length does not match p")
    av = dataset.adjacency @ v
    return (av - d * v.sum()) / math.sqrt(d * (1.0 - d))


def centered_adjacency_dense(dataset: Dataset) -> np.ndarray:
    """Dense centered adjacency, for small-p cross-checks only."""
    d = dataset.d_bar
    A = dataset.adjacency.toarray()
    return (A - d) / math.sqrt(d * (1.0 - d))


def gaussian_surrogate(sigma0: np.ndarray, lam: float, seed: int,
                       max_p: int = MAX_SURROGATE_P) -> np.ndarray:
    """Spiked GOE-type surrogate sqrt(lam/p) sigma0 sigma0^T + Z.

    Z is symmetric with off-diagonal N(0,1) and diagonal N(0,2) entries.
    """
    p = sigma0.shape[0]
    if p > max_p:
        raise ValueError(f"p = {p} exceeds surrogate limit {max_p}")
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(5)[_STREAM_SURROGATE])
    Z = rng.standard_normal((p, p))
    Z = (Z + Z.T) / math.sqrt(2.0)  # off-diag var 1, diag var 2
    return math.sqrt(lam / p) * np.outer(sigma0, sigma0) + Z


# ---------------------------------------------------------------------------
# disk round trip: text header + npy payloads + edge-list csv


def save_dataset(dataset: Dataset, out_dir) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    pr = dataset.params.prior
    lines = [
        "format = netamp-dataset-v1",
        f"seed = {dataset.seed}",
        f"n = {dataset.params.n}",
        f"p = {dataset.params.p}",
        f"Delta = {dataset.params.Delta!r}",
        f"b_p = {dataset.params.b_p!r}",
        f"a_p = {dataset.params.a_p!r}",
        f"lambda = {dataset.params.lam!r}",
        f"design_dist = {dataset.params.design_dist}",
        f"rho = {pr.rho!r}",
        f"atoms0 = {';'.join(f'{v!r}:{q!r}' for v, q in pr.atoms0)}",
        f"atoms1 = {';'.join(f'{v!r}:{q!r}' for v, q in pr.atoms1)}",
    ]
    with open(os.path.join(out_dir, "header.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    np.save(os.path.join(out_dir, "sigma0.npy"), dataset.sigma0)
    np.save(os.path.join(out_dir, "beta0.npy"), dataset.beta0)
    np.save(os.path.join(out_dir, "phi.npy"), dataset.Phi)
    np.save(os.path.join(out_dir, "y.npy"), dataset.y)
    edges = dataset.edge_list()
    with open(os.path.join(out_dir, "edges.csv"), "w") as fh:
        fh.write("i,j\n")
        for i, j in edges:
            fh.write(f"{i},{j}\n")


def load_dataset(in_dir) -> Dataset:
    import os

    kv = {}
    with open(os.path.join(in_dir, "header.txt")) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                kv[k.strip()] = v.strip()
    if kv.get("format") != "netamp-dataset-v1":
        raise ValueError(f"unknown dataset format {kv.get('format')!r}")

    def parse_atoms(s):
        return tuple(tuple(float(t) for t in pair.split(":")) for pair in s.split(";"))

    prior = PriorSpec(rho=float(kv["rho"]), atoms0=parse_atoms(kv["atoms0"]),
                      atoms1=parse_atoms(kv["atoms1"]))
    params = ModelParams(n=int(kv["n"]), p=int(kv["p"]), Delta=float(kv["Delta"]),
                         b_p=float(kv["b_p"]), a_p=float(kv["a_p"]),
                         lam=float(kv["lambda"]), prior=prior,
                         design_dist=kv["design_dist"])
    sigma0 = np.load(os.path.join(in_dir, "sigma0.npy"))
    beta0 = np.load(os.path.join(in_dir, "beta0.npy"))
    Phi = np.load(os.path.join(in_dir, "phi.npy"))
    y = np.load(os.path.join(in_dir, "y.npy"))
    rows, cols = [], []
    with open(os.path.join(in_dir, "edges.csv")) as fh:
        next(fh)
        for line in fh:
            i, j = line.strip().split(",")
            rows.append(int(i))
            cols.append(int(j))
    p = params.p
    upper = sp.coo_array((np.ones(len(rows)), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
                         shape=(p, p))
    adj = (upper + upper.T).tocsr()
    return Dataset(params=params, seed=int(kv["seed"]), sigma0=sigma0,
                   beta0=beta0, Phi=Phi, y=y, adjacency=adj)

"""Directed leader-follower communication topology and its spectral data.

The network has one leader (node 0) and n followers.  Follower i receives
from follower j with weight a_ij >= 0 and from the leader with weight
b_i0 >= 0.  The augmented Laplacian stacks the leader as a zero row:

    Lbar = [[0,  0   ],
            [-B, L + diag(B)]]

where L is the follower Laplacian (l_ii = sum_j a_ij, l_ij = -a_ij).  Every
row of Lbar sums to zero; its kernel is spanned by the all-ones vector
exactly when the augmented graph has a spanning tree rooted at the leader,
which is also equivalent to rank(Lbar) = n.

The tracking controller built on this topology is stable iff the gain ratio
alpha^2/beta exceeds a threshold determined by the spectrum of Lbar; this
module computes that threshold and the closed-loop characteristic roots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Singular values below RANK_RTOL * sigma_max count as zero in the rank test;
# the same relative cutoff is used for the Moore-Penrose inverse.
RANK_RTOL = 1e-9
PINV_RTOL = 1e-9


@dataclass(frozen=True)
class AugmentedTopology:
    """Leader + n followers digraph with derived Laplacian data.

    Attributes:
        n: follower count.
        adjacency: (n, n) nonnegative follower weights, zero diagonal.
        leader_links: (n,) nonnegative leader-to-follower weights.
        laplacian: (n, n) follower Laplacian L.
        augmented_laplacian: (n+1, n+1) Lbar.
        eta: (n+1,) column sums of Lbar (they sum to zero).
        consensus_projector: (n+1, n+1) Q = 1 1^T / (n+1).
        pinv: Moore-Penrose inverse of Lbar (SVD with relative cutoff).
        eigenvalues: spectrum of Lbar, sorted by (real, imag).
        rank: numerical rank of Lbar.
    """

    n: int
    adjacency: np.ndarray = field(repr=False)
    leader_links: np.ndarray = field(repr=False)
    laplacian: np.ndarray = field(repr=False)
    augmented_laplacian: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    consensus_projector: np.ndarray = field(repr=False)
    pinv: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    rank: int


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues of the augmented Laplacian and the derived gain threshold."""

    eigenvalues: np.ndarray
    gain_threshold: float


def build_augmented_laplacian(adjacency, leader_links) -> AugmentedTopology:
    """Assemble the augmented Laplacian and its derived quantities.

    Args:
        adjacency: (n, n) follower weight matrix, nonnegative, zero diagonal.
        leader_links: (n,) leader-to-follower weights, nonnegative.

    Raises:
        ValueError: on negative weights, nonzero diagonal, or n == 0.
    """
    A = np.array(adjacency, dtype=float)
    B = np.array(leader_links, dtype=float).reshape(-1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    n = A.shape[0]
    if n == 0:
        raise ValueError("topology needs at least one follower")
    if B.shape != (n,):
        raise ValueError(f"leader_links must have length {n}, got {B.shape[0]}")
    if np.any(A < 0.0) or np.any(B < 0.0):
        raise ValueError("edge weights must be nonnegative")
    if np.any(np.diag(A) != 0.0):
        raise ValueError("adjacency diagonal must be zero (no self-loops)")

    L = np.diag(A.sum(axis=1)) - A
    Lbar = np.zeros((n + 1, n + 1))
    Lbar[1:, 0] = -B
    Lbar[1:, 1:] = L + np.diag(B)

    eta = Lbar.sum(axis=0)
    Q = np.full((n + 1, n + 1), 1.0 / (n + 1))

    U, s, Vt = np.linalg.svd(Lbar)
    smax = s[0] if s.size and s[0] > 0.0 else 0.0
    if smax > 0.0:
        rank = int(np.count_nonzero(s > RANK_RTOL * smax))
        s_inv = np.where(s > PINV_RTOL * smax, 1.0 / np.where(s > 0.0, s, 1.0), 0.0)
    else:
        rank = 0
        s_inv = np.zeros_like(s)
    pinv = (Vt.T * s_inv) @ U.T

    eigs = np.linalg.eigvals(Lbar)
    eigs = eigs[np.lexsort((eigs.imag, eigs.real))]

    return AugmentedTopology(
        n=n,
        adjacency=A,
        leader_links=B,
        laplacian=L,
        augmented_laplacian=Lbar,
        eta=eta,
        consensus_projector=Q,
        pinv=pinv,
        eigenvalues=eigs,
        rank=rank,
    )


def has_spanning_tree(topology: AugmentedTopology) -> bool:
    """True iff the augmented graph has a spanning tree rooted at the leader.

    Equivalent to rank(Lbar) = n, i.e. exactly one zero eigenvalue.
    """
    return topology.rank == topology.n


def consensus_identities(topology: AugmentedTopology) -> tuple[float, float]:
    """Frobenius residuals of the two pseudoinverse identities of Lbar.

    For a spanning-tree topology the Moore-Penrose inverse satisfies

        Lbar^+ Lbar   = I - Q
        Lbar^+ Lbar^2 = Lbar - (1/(n+1)) 1 eta^T

    Returns:
        (residual1, residual2), both <= 1e-10 for valid topologies.
    """
    Lbar = topology.augmented_laplacian
    Lp = topology.pinv
    k = topology.n + 1
    ident = np.eye(k)
    r1 = np.linalg.norm(Lp @ Lbar - (ident - topology.consensus_projector))
    r2 = np.linalg.norm(Lp @ Lbar @ Lbar - (Lbar - np.outer(np.ones(k), topology.eta) / k))
    return float(r1), float(r2)


def gain_threshold_from_eigenvalues(eigenvalues) -> float:
    """Gain-ratio threshold as a function of the Laplacian spectrum.

    threshold = max_i  Im(l_i)^2 / [(Re(l_i)+1) Im(l_i)^2 + (Re(l_i)+1)^3]

    Zero when the spectrum is real.  Requires Re(l_i) > -1, which holds for
    any spanning-tree augmented Laplacian (Re >= 0).
    """
    eigs = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    re = eigs.real + 1.0
    im2 = eigs.imag**2
    terms = im2 / (re * im2 + re**3)
    return float(np.max(terms, initial=0.0))


def spectral_data(topology: AugmentedTopology) -> SpectralData:
    """Eigenvalues of Lbar together with the gain threshold."""
    return SpectralData(
        eigenvalues=topology.eigenvalues.copy(),
        gain_threshold=gain_threshold_from_eigenvalues(topology.eigenvalues),
    )


def gain_threshold(topology: AugmentedTopology) -> float:
    """Gain-ratio threshold of the topology (see gain_threshold_from_eigenvalues)."""
    return gain_threshold_from_eigenvalues(topology.eigenvalues)


def check_gains(alpha: float, beta: float, topology: AugmentedTopology) -> bool:
    """True iff alpha^2/beta strictly exceeds the topology's gain threshold.

    The criterion depends on the gains only through the ratio alpha^2/beta.
    """
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("gains must be positive")
    return alpha**2 / beta > gain_threshold(topology)


def characteristic_roots(lam, alpha: float, beta: float) -> tuple[complex, complex]:
    """Closed-loop characteristic roots for one Laplacian eigenvalue.

    Roots of s^2 + alpha (lam+1) s + beta (lam+1) = 0:

        s_{1,2} = (1/2) [ -alpha (lam+1) -/+ sqrt(alpha^2 (lam+1)^2 - 4 beta (lam+1)) ]

    They satisfy s1 s2 = beta (lam+1) and s1 + s2 = -alpha (lam+1).
    """
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("gains must be positive")
    z = complex(lam) + 1.0
    disc = np.sqrt(complex(alpha**2 * z * z - 4.0 * beta * z))
    s1 = 0.5 * (-alpha * z - disc)
    s2 = 0.5 * (-alpha * z + disc)
    return complex(s1), complex(s2)


def random_spanning_topology(
    n: int,
    rng: np.random.Generator,
    extra_edge_prob: float = 0.25,
    weight_range: tuple[float, float] = (0.5, 1.5),
) -> AugmentedTopology:
    """Random weighted digraph whose augmented graph is leader-rooted.

    Builds a random directed tree from the leader (guaranteeing the spanning
    tree) and sprinkles extra edges with probability extra_edge_prob.  Used
    for randomized property scenarios; weights stay in weight_range to keep
    the Laplacian well conditioned.
    """
    lo, hi = weight_range
    A = np.zeros((n, n))
    B = np.zeros(n)
    for node in range(1, n + 1):
        parent = int(rng.integers(0, node))
        w = float(rng.uniform(lo, hi))
        if parent == 0:
            B[node - 1] = w
        else:
            A[node - 1, parent - 1] = w
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < extra_edge_prob:
                A[i, j] += float(rng.uniform(lo, hi))
        if rng.random() < extra_edge_prob / 2.0:
            B[i] += float(rng.uniform(lo, hi))
    return build_augmented_laplacian(A, B)

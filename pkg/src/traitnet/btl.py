"""Bradley-Terry-Luce inference for pairwise crowd comparisons.

Maximum-likelihood strengths are fitted per trait by minorization-maximization
with an optional phantom-opponent regularizer (one virtual win and one virtual
loss against a fixed opponent of strength 1), then mapped to [0, 1] trait
scores by min-max over log-strengths.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import numpy as np

from .core import TRAIT_NAMES
from .errors import ConnectivityError, ParseError, ValidationError


@dataclass(frozen=True)
class PairwiseComparison:
    trait: str
    video_a: str
    video_b: str
    winner: str  # "a" or "b"
    worker_id: str = ""

    def __post_init__(self):
        if self.trait not in TRAIT_NAMES:
            raise ValidationError(f"unknown trait {self.trait!r}")
        if self.video_a == self.video_b:
            raise ValidationError(f"comparison of {self.video_a!r} against itself")
        if self.winner not in ("a", "b"):
            raise ValidationError(f"winner must be 'a' or 'b', got {self.winner!r}")

    @property
    def winner_id(self) -> str:
        return self.video_a if self.winner == "a" else self.video_b

    @property
    def loser_id(self) -> str:
        return self.video_b if self.winner == "a" else self.video_a


@dataclass(frozen=True)
class BtlFit:
    trait: str
    strengths: Dict[str, float]
    normalized_scores: Dict[str, float]
    log_likelihood: float
    iterations: int
    converged: bool
    log_likelihood_history: tuple = ()


def _connected_components(items: List[str], pairs) -> List[List[str]]:
    adj = defaultdict(set)
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    seen = set()
    components = []
    for item in items:
        if item in seen:
            continue
        stack = [item]
        comp = []
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            comp.append(cur)
            stack.extend(adj[cur] - seen)
        components.append(sorted(comp))
    return components


def btl_probability(strength_a: float, strength_b: float) -> float:
    return strength_a / (strength_a + strength_b)


def _log_likelihood(w: np.ndarray, win_matrix: np.ndarray, regularization: float) -> float:
    log_p = np.log(w[:, None] / (w[:, None] + w[None, :] + np.eye(len(w))))
    ll = float(np.sum(win_matrix * log_p))
    if regularization > 0:
        ll += regularization * float(np.sum(np.log(w / (w + 1.0)) + np.log(1.0 / (w + 1.0))))
    return ll


def normalize_scores(strengths: Dict[str, float]) -> Dict[str, float]:
    """Min-max of log-strengths into [0, 1]; a degenerate spread maps to 0.5."""
    items = list(strengths)
    logs = np.log(np.array([strengths[i] for i in items], dtype=np.float64))
    spread = logs.max() - logs.min()
    if spread < 1e-12:
        return {i: 0.5 for i in items}
    scaled = (logs - logs.min()) / spread
    return {i: float(s) for i, s in zip(items, scaled)}


def fit_btl(comparisons: Iterable[PairwiseComparison], regularization: float = 1.0,
            tol: float = 1e-8, max_iterations: int = 10000) -> BtlFit:
    """MM iteration w_i <- W_i / sum_j n_ij / (w_i + w_j), renormalized per sweep."""
    comparisons = list(comparisons)
    if not comparisons:
        raise ValidationError("no comparisons to fit")
    traits = {c.trait for c in comparisons}
    if len(traits) != 1:
        raise ValidationError(f"fit_btl expects a single trait, got {sorted(traits)}")
    trait = comparisons[0].trait
    items = sorted({c.video_a for c in comparisons} | {c.video_b for c in comparisons})
    index = {item: k for k, item in enumerate(items)}
    n = len(items)
    components = _connected_components(items, ((c.video_a, c.video_b) for c in comparisons))
    if len(components) > 1:
        raise ConnectivityError(
            f"comparison graph for trait {trait!r} is disconnected: {components}",
            components=components)
    win_matrix = np.zeros((n, n))
    for c in comparisons:
        win_matrix[index[c.winner_id], index[c.loser_id]] += 1.0
    pair_counts = win_matrix + win_matrix.T
    wins = win_matrix.sum(axis=1)
    w = np.ones(n)
    converged = False
    iterations = 0
    ll_history = []
    # The MM sweep maximizes the (regularized) likelihood monotonically; the
    # sum-of-strengths gauge is applied once at the end since renormalizing
    # mid-iteration would perturb the phantom-regularized objective.
    for iterations in range(1, max_iterations + 1):
        off_diag = pair_counts / (w[:, None] + w[None, :] + np.eye(n))
        np.fill_diagonal(off_diag, 0.0)
        denom = off_diag.sum(axis=1)
        numer = wins.copy()
        if regularization > 0:
            numer += regularization
            denom += 2.0 * regularization / (w + 1.0)
        new_w = numer / denom
        if regularization == 0:
            new_w *= n / new_w.sum()
        change = np.max(np.abs(new_w - w) / w)
        w = new_w
        ll_history.append(_log_likelihood(w, win_matrix, regularization))
        if change < tol:
            converged = True
            break
    ll = ll_history[-1]
    w *= n / w.sum()
    strengths = {item: float(w[index[item]]) for item in items}
    return BtlFit(
        trait=trait,
        strengths=strengths,
        normalized_scores=normalize_scores(strengths) if n > 1 else {items[0]: 0.5},
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
        log_likelihood_history=tuple(ll_history),
    )


def simulate_comparisons(true_strengths: Dict[str, float], n_per_pair: int, seed: int,
                         trait: str = "extraversion", worker_id: str = "sim") -> List[PairwiseComparison]:
    """Bernoulli draws from BTL probabilities; deterministic per seed."""
    items = sorted(true_strengths)
    if len(items) < 2:
        raise ValidationError("need at least 2 items to simulate comparisons")
    rng = np.random.default_rng(seed)
    out = []
    for ai in range(len(items)):
        for bi in range(ai + 1, len(items)):
            a, b = items[ai], items[bi]
            p = btl_probability(true_strengths[a], true_strengths[b])
            for _ in range(n_per_pair):
                winner = "a" if rng.random() < p else "b"
                out.append(PairwiseComparison(trait, a, b, winner, worker_id))
    return out


def parse_comparisons(text: str) -> List[PairwiseComparison]:
    """Line-delimited JSON records with keys trait, video_a, video_b, winner, worker_id."""
    out = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed comparison record: {exc.msg}", line=line_no) from exc
        try:
            out.append(PairwiseComparison(
                trait=obj["trait"], video_a=obj["video_a"], video_b=obj["video_b"],
                winner=obj["winner"], worker_id=obj.get("worker_id", "")))
        except KeyError as exc:
            raise ParseError(f"missing comparison key {exc}", line=line_no) from exc
    return out


def serialize_comparisons(comparisons: Iterable[PairwiseComparison]) -> str:
    lines = [json.dumps({
        "trait": c.trait, "video_a": c.video_a, "video_b": c.video_b,
        "winner": c.winner, "worker_id": c.worker_id,
    }) for c in comparisons]
    return "\n".join(lines) + ("\n" if lines else "")


def fit_all_traits(comparisons: Iterable[PairwiseComparison], regularization: float = 1.0) -> Dict[str, BtlFit]:
    by_trait = defaultdict(list)
    for c in comparisons:
        by_trait[c.trait].append(c)
    return {trait: fit_btl(cs, regularization=regularization) for trait, cs in sorted(by_trait.items())}


def score_table(fits: Dict[str, BtlFit]) -> Dict[str, dict]:
    """Per-trait normalized score maps, mergeable into manifest labels, plus
    metadata flagging the log-strength min-max normalization choice."""
    return {
        "normalization": "min-max over log-strengths",
        "scores": {trait: fit.normalized_scores for trait, fit in fits.items()},
        "converged": {trait: fit.converged for trait, fit in fits.items()},
    }

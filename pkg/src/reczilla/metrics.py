"""Top-K ranking metrics over per-user recommendation lists.

All metrics are computed from an :class:`EvaluationContext`: ranked top-K
lists, held-out relevant sets, and training popularity counts. Per-user
metrics are averaged over evaluated users; distribution metrics (diversity,
coverage) are computed over the pooled top-K recommendations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricError, UnknownMetricError

STANDARD_CUTOFFS = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 30, 40, 50)

# Canonical base-metric names. DIVERSITY_SIMILARITY is an alias of
# DIVERSITY_MEAN_INTER_LIST (kept so the 21-name grammar stays complete).
BASE_METRICS = (
    "PRECISION",
    "RECALL",
    "HIT_RATE",
    "F1",
    "MAP",
    "MAP_MIN_DEN",
    "PRECISION_RECALL_MIN_DEN",
    "MRR",
    "ARHR",
    "NDCG",
    "NOVELTY",
    "AVERAGE_POPULARITY",
    "DIVERSITY_GINI",
    "DIVERSITY_HERFINDAHL",
    "SHANNON_ENTROPY",
    "DIVERSITY_MEAN_INTER_LIST",
    "DIVERSITY_SIMILARITY",
    "ITEM_COVERAGE",
    "ITEM_HIT_COVERAGE",
    "USER_COVERAGE",
    "USER_HIT_COVERAGE",
)

# Extra bases valid only inside meta-feature extraction (split descriptors).
SPLIT_DESCRIPTOR_METRICS = ("ITEMS_IN_EVAL_SET", "USERS_IN_EVAL_SET")


@dataclass(frozen=True, order=True)
class MetricSpec:
    """A base metric at one cutoff, e.g. ``PRECISION@10``."""

    base: str
    cutoff: int

    def __str__(self):
        return f"{self.base}@{self.cutoff}"


def parse_metric(text, allow_any_cutoff=False):
    """Parse ``BASE@CUTOFF`` (case-insensitive) into a MetricSpec."""
    parts = str(text).strip().upper().replace("-", "_").split("@")
    if len(parts) != 2:
        raise UnknownMetricError(text, BASE_METRICS)
    base, cutoff_s = parts
    if base not in BASE_METRICS:
        raise UnknownMetricError(text, BASE_METRICS)
    try:
        cutoff = int(cutoff_s)
    except ValueError:
        raise UnknownMetricError(text, BASE_METRICS) from None
    if cutoff < 1 or (not allow_any_cutoff and cutoff not in STANDARD_CUTOFFS):
        raise MetricError(
            f"cutoff {cutoff} not in the standard set {STANDARD_CUTOFFS}; "
            "pass allow_any_cutoff=True to override"
        )
    return MetricSpec(base, cutoff)


class EvaluationContext:
    """Inputs for one evaluation pass.

    ``topk`` maps user index to a ranked item-index array (no duplicates);
    ``relevant`` maps user index to the held-out item set. Lists may be
    shorter than ``list_size`` only when the candidate pool was exhausted.
    """

    def __init__(self, topk, relevant, train_counts, n_items, n_users,
                 list_size=None):
        self.topk = {int(u): np.asarray(l, dtype=np.int64) for u, l in topk.items()}
        self.relevant = {int(u): frozenset(int(i) for i in r)
                         for u, r in relevant.items()}
        self.train_counts = np.asarray(train_counts, dtype=np.float64)
        self.n_items = int(n_items)
        self.n_users = int(n_users)
        if list_size is None:
            list_size = max((len(l) for l in self.topk.values()), default=0)
        self.list_size = int(list_size)
        for u, lst in self.topk.items():
            if len(np.unique(lst)) != len(lst):
                raise MetricError(f"duplicate items in top-K list of user {u}")
        for u, rel in self.relevant.items():
            if not rel:
                raise MetricError(f"empty relevant set for user {u}")

    @property
    def evaluated_users(self):
        return sorted(u for u, l in self.topk.items() if len(l) > 0)


def _hit_positions(lst, rel):
    return [p for p, item in enumerate(lst) if int(item) in rel]


def _per_user_accuracy(lst, rel, k):
    """All per-user accuracy metrics for one (list, relevant-set) pair."""
    positions = [p for p in _hit_positions(lst, rel) if p < k]
    n_rel = len(rel)
    hits = len(positions)
    prec = hits / k
    rec = hits / n_rel
    f1 = 2 * prec * rec / (prec + rec) if (prec + rec) > 0 else 0.0
    mrr = 1.0 / (positions[0] + 1) if positions else 0.0
    arhr = sum(1.0 / (p + 1) for p in positions)
    ap_sum = sum((j + 1) / (p + 1) for j, p in enumerate(positions))
    ndcg_num = sum(1.0 / math.log2(p + 2) for p in positions)
    ndcg_den = sum(1.0 / math.log2(i + 2) for i in range(min(k, n_rel)))
    return {
        "PRECISION": prec,
        "RECALL": rec,
        "HIT_RATE": 1.0 if hits else 0.0,
        "F1": f1,
        "MAP": ap_sum / k,
        "MAP_MIN_DEN": ap_sum / min(k, n_rel),
        "PRECISION_RECALL_MIN_DEN": hits / min(k, n_rel),
        "MRR": mrr,
        "ARHR": arhr,
        "NDCG": ndcg_num / ndcg_den if ndcg_den > 0 else 0.0,
    }


def novelty_and_popularity(context, k):
    """(mean novelty, mean normalized popularity) of the top-``k`` lists.

    Novelty of a list is the sum over its items of ``-log(p_i) / I`` with
    ``p_i`` the item's share of training interactions (count floored at 1);
    popularity is the mean of ``count_i / max_count``.
    """
    counts = context.train_counts
    total = counts.sum()
    max_count = counts.max() if counts.size else 0.0
    nov_vals, pop_vals = [], []
    for u in context.evaluated_users:
        lst = context.topk[u][:k]
        if total > 0:
            shares = np.maximum(counts[lst], 1.0) / total
            nov_vals.append(float(np.sum(-np.log(shares)) / context.n_items))
        else:
            nov_vals.append(0.0)
        pop_vals.append(float(np.mean(counts[lst] / max_count)) if max_count > 0
                        else 0.0)
    if not nov_vals:
        raise MetricError("no evaluated users")
    return float(np.mean(nov_vals)), float(np.mean(pop_vals))


def global_diversity(pooled_counts, n_items):
    """(gini, herfindahl, shannon) of an item-count distribution.

    Shares are taken over all ``n_items`` entries (zeros included).
    Gini is the mean-absolute-difference form; Herfindahl is reported as
    ``1 - sum(p^2)`` so larger means more diverse.
    """
    counts = np.zeros(n_items, dtype=np.float64)
    pooled = np.asarray(pooled_counts, dtype=np.float64)
    counts[: len(pooled)] = pooled
    total = counts.sum()
    if total <= 0:
        raise MetricError("pooled top-K counts sum to zero")
    p = counts / total
    pos = p[p > 0]
    shannon = float(-(pos * np.log2(pos)).sum())
    herfindahl = float(1.0 - (p * p).sum())
    x = np.sort(counts)
    n = n_items
    ranks = np.arange(1, n + 1, dtype=np.float64)
    gini = float(((2 * ranks - n - 1) * x).sum() / (n * x.sum()))
    return gini, herfindahl, shannon


def inter_list_diversity(lists, k=None):
    """Mean over user pairs of ``1 - |L_u n L_v| / k``.

    Uses the count-based equivalent of the pairwise definition:
    ``sum_pairs |L_u n L_v| = sum_i C(c_i, 2)`` for duplicate-free lists.
    """
    lists = [np.asarray(l, dtype=np.int64) for l in lists]
    n = len(lists)
    if n < 2:
        raise MetricError("inter-list diversity needs at least 2 users")
    if k is None:
        k = max(len(l) for l in lists)
    counts = {}
    for lst in lists:
        for item in lst[:k]:
            counts[int(item)] = counts.get(int(item), 0) + 1
    overlap_sum = sum(c * (c - 1) for c in counts.values())  # ordered pairs
    return 1.0 - overlap_sum / (n * (n - 1) * k)


def evaluate(context, cutoffs):
    """Compute every base metric at each cutoff; returns {MetricSpec: value}."""
    users = context.evaluated_users
    if not users:
        raise MetricError("no evaluated users")
    for k in cutoffs:
        if k > context.list_size:
            raise MetricError(
                f"cutoff {k} exceeds the provided list size {context.list_size}"
            )
    n_eval = len(context.relevant)
    all_relevant = set()
    for rel in context.relevant.values():
        all_relevant.update(rel)

    out = {}
    for k in cutoffs:
        acc = {name: 0.0 for name in
               ("PRECISION", "RECALL", "HIT_RATE", "F1", "MAP", "MAP_MIN_DEN",
                "PRECISION_RECALL_MIN_DEN", "MRR", "ARHR", "NDCG")}
        pooled = np.zeros(context.n_items, dtype=np.int64)
        hit_items = set()
        hit_users = 0
        for u in users:
            lst = context.topk[u]
            rel = context.relevant.get(u, frozenset())
            vals = _per_user_accuracy(lst, rel, k)
            for name in acc:
                acc[name] += vals[name]
            if vals["HIT_RATE"] > 0:
                hit_users += 1
            head = lst[:k]
            pooled[head] += 1
            hit_items.update(int(i) for i in head if int(i) in rel)
        for name in acc:
            out[MetricSpec(name, k)] = acc[name] / len(users)

        novelty, avg_pop = novelty_and_popularity(context, k)
        out[MetricSpec("NOVELTY", k)] = novelty
        out[MetricSpec("AVERAGE_POPULARITY", k)] = avg_pop

        gini, herf, shannon = global_diversity(pooled, context.n_items)
        out[MetricSpec("DIVERSITY_GINI", k)] = gini
        out[MetricSpec("DIVERSITY_HERFINDAHL", k)] = herf
        out[MetricSpec("SHANNON_ENTROPY", k)] = shannon

        if len(users) >= 2:
            mild = inter_list_diversity([context.topk[u] for u in users], k)
        else:
            mild = 0.0
        out[MetricSpec("DIVERSITY_MEAN_INTER_LIST", k)] = mild
        out[MetricSpec("DIVERSITY_SIMILARITY", k)] = mild

        out[MetricSpec("ITEM_COVERAGE", k)] = (
            float(np.count_nonzero(pooled)) / context.n_items
        )
        out[MetricSpec("ITEM_HIT_COVERAGE", k)] = (
            len(hit_items) / len(all_relevant) if all_relevant else 0.0
        )
        out[MetricSpec("USER_COVERAGE", k)] = len(users) / n_eval
        out[MetricSpec("USER_HIT_COVERAGE", k)] = hit_users / n_eval
    return out


def split_descriptors(context):
    """Cutoff-independent descriptors of the evaluation split itself.

    Fractions of items (resp. users) with at least one rating in the
    evaluation set.
    """
    items_in_eval = set()
    for rel in context.relevant.values():
        items_in_eval.update(rel)
    return {
        "ITEMS_IN_EVAL_SET": len(items_in_eval) / context.n_items,
        "USERS_IN_EVAL_SET": len(context.relevant) / context.n_users,
    }


def context_from_model(model, train, eval_part, k_max, exclude_seen=True):
    """Build an EvaluationContext by scoring ``model`` for every user with
    held-out interactions in ``eval_part``.

    Ties in scores are broken by ascending item index. Items scored at
    ``-inf`` (excluded) are dropped, so lists may be shorter than ``k_max``
    when a user has fewer candidates than the cutoff.
    """
    n_items = train.n_items
    counts = np.zeros(n_items, dtype=np.float64)
    np.add.at(counts, train.item_idx, 1.0)

    relevant = {}
    for u, it in zip(eval_part.user_idx, eval_part.item_idx):
        relevant.setdefault(int(u), set()).add(int(it))

    topk = {}
    for u in sorted(relevant):
        scores = np.asarray(model.score(u, exclude_seen=exclude_seen),
                            dtype=np.float64)
        order = np.lexsort((np.arange(n_items), -scores))
        head = order[:k_max]
        head = head[np.isfinite(scores[head])]
        topk[u] = head
    return EvaluationContext(
        topk=topk,
        relevant=relevant,
        train_counts=counts,
        n_items=n_items,
        n_users=train.n_users,
        list_size=k_max,
    )

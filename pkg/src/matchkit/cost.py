"""Matching costs from masks and feature vectors, plus synthetic data.

A matching instance pairs n template objects against m proposal objects.
Each object carries a binary mask on a shared grid and a feature vector;
the pairwise cost rewards feature alignment (cosine) and spatial overlap
(intersection over union), weighted against each other by a single knob.
"""

import math

import numpy as np

from .validation import check_matrix


def _as_mask_stack(masks, name):
    masks = np.asarray(masks)
    if masks.ndim != 3:
        raise ValueError(f"{name} must be a (count, height, width) stack")
    values = np.unique(masks)
    if not np.isin(values, (0, 1)).all():
        raise ValueError(f"{name} must be binary (0/1 entries)")
    return masks.astype(bool)


def iou(a, b):
    """Intersection over union of two binary masks. Empty union gives 0."""
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def cosine(u, v):
    """Cosine similarity of two feature vectors. Zero vectors are rejected."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError(f"feature shapes differ: {u.shape} vs {v.shape}")
    su = float(np.dot(u, u))
    sv = float(np.dot(v, v))
    if su == 0.0 or sv == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    # Numerator and self-products share one accumulation, so identical
    # vectors score exactly 1.0 (sqrt(s*s) == s in IEEE round-to-nearest).
    return float(np.dot(u, v) / math.sqrt(su * sv))


def build_cost(template_masks, template_features, proposal_masks,
               proposal_features, iou_weight=0.3):
    """Pairwise cost between every template and every proposal.

    Entry (i, j) is (w - 1) * cosine(features) - w * iou(masks) with
    w = iou_weight in (0, 1], so a perfectly aligned, perfectly overlapping
    pair costs -1 and entries never exceed 1 - w. Lower is better.
    """
    if not 0.0 < iou_weight <= 1.0:
        raise ValueError(f"iou_weight must lie in (0, 1], got {iou_weight!r}")
    t_masks = _as_mask_stack(template_masks, "template_masks")
    p_masks = _as_mask_stack(proposal_masks, "proposal_masks")
    if t_masks.shape[1:] != p_masks.shape[1:]:
        raise ValueError(
            f"mask grids differ: {t_masks.shape[1:]} vs {p_masks.shape[1:]}"
        )
    t_feat = check_matrix(template_features, "template_features")
    p_feat = check_matrix(proposal_features, "proposal_features")
    if t_feat.shape[1] != p_feat.shape[1]:
        raise ValueError(
            f"feature dimensions differ: {t_feat.shape[1]} vs {p_feat.shape[1]}"
        )
    if len(t_masks) != len(t_feat) or len(p_masks) != len(p_feat):
        raise ValueError("mask and feature counts must agree on each side")

    t_self = np.array([float(np.dot(f, f)) for f in t_feat])
    p_self = np.array([float(np.dot(f, f)) for f in p_feat])
    if np.any(t_self == 0) or np.any(p_self == 0):
        raise ValueError("cosine similarity is undefined for zero vectors")
    # Entrywise dots rather than a normalized matmul: every pair then uses
    # the same accumulation as its self-products, so a proposal identical
    # to its template scores cosine exactly 1.0 and lands on cost exactly
    # -1.0 for any weight. Pair counts here are small.
    cos = np.empty((len(t_feat), len(p_feat)))
    for i, f_t in enumerate(t_feat):
        for j, f_p in enumerate(p_feat):
            cos[i, j] = np.dot(f_t, f_p) / math.sqrt(t_self[i] * p_self[j])

    flat_t = t_masks.reshape(len(t_masks), -1).astype(float)
    flat_p = p_masks.reshape(len(p_masks), -1).astype(float)
    inter = flat_t @ flat_p.T
    union = flat_t.sum(axis=1)[:, None] + flat_p.sum(axis=1)[None, :] - inter
    overlap = np.divide(inter, union, out=np.zeros_like(inter),
                        where=union > 0)

    return (iou_weight - 1.0) * cos - iou_weight * overlap


def assemble_masks(X, proposal_masks):
    """Soft per-row masks: each row of X weights the proposal mask stack."""
    X = check_matrix(X, "X")
    masks = np.asarray(proposal_masks, dtype=float)
    if masks.ndim != 3:
        raise ValueError("proposal_masks must be a (count, height, width) stack")
    if X.shape[1] != masks.shape[0]:
        raise ValueError(
            f"X has {X.shape[1]} columns but {masks.shape[0]} masks were given"
        )
    return np.tensordot(X, masks, axes=1)


def synth_masks(rects, height, width):
    """Rasterize axis-aligned rectangles onto binary grids.

    Each rect is (x, y, w, h) with x running along columns and y along rows.
    Boxes are clipped to the grid; zero-area boxes give all-zero masks.
    Returns a (len(rects), height, width) uint8 stack.
    """
    if height <= 0 or width <= 0:
        raise ValueError(f"grid must be positive, got {height} x {width}")
    out = np.zeros((len(rects), height, width), dtype=np.uint8)
    for k, (x, y, w, h) in enumerate(rects):
        x0 = max(int(x), 0)
        y0 = max(int(y), 0)
        x1 = min(int(x + w), width)
        y1 = min(int(y + h), height)
        if x1 > x0 and y1 > y0:
            out[k, y0:y1, x0:x1] = 1
    return out


def synth_features(count, dim, rng):
    """Random unit-norm feature vectors, (count, dim)."""
    vecs = rng.normal(size=(count, dim))
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)

"""Persistence: self-describing JSON model files, CSV exports, SVG renders.

Model files carry format/kind/version fields and round-trip floats
exactly (shortest-repr JSON). Concept files reference their stimuli CSV
by content hash so stale combinations are rejected on load.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .concepts import Concept, ConceptSet, CovarianceModel, purity, rank_score
from .dictionary import Dictionary, WordNode
from .errors import ModelStateError
from .motif import Ensemble, MotifHierarchy, MotifVertex, StimuliVector
from .topology import Filtration

MODEL_FORMAT = "shapeconcepts-model"
MODEL_VERSION = 1


def _fmt(x) -> str:
    return repr(float(x))


def file_sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def save_model(path, kind: str, payload: dict):
    doc = {"format": MODEL_FORMAT, "kind": kind, "version": MODEL_VERSION,
           "payload": payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path, kind: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ModelStateError(f"{path!s} is not a {MODEL_FORMAT} file")
    if doc.get("kind") != kind:
        raise ModelStateError(f"{path!s} holds a {doc.get('kind')!r} model, "
                              f"expected {kind!r}")
    if doc.get("version") != MODEL_VERSION:
        raise ModelStateError(f"{path!s} has unsupported version {doc.get('version')}")
    return doc["payload"]


# ---------------------------------------------------------------------------
# dictionary

def save_dictionary(path, dictionary: Dictionary):
    nodes = []
    for wid in sorted(dictionary.nodes):
        node = dictionary.nodes[wid]
        nodes.append({"id": node.word_id, "depth": node.depth,
                      "centroid": [float(x) for x in node.centroid],
                      "children": [c.word_id for c in node.children]})
    save_model(path, "dictionary", {"depth": dictionary.depth,
                                    "seed": dictionary.seed, "nodes": nodes})


def load_dictionary(path) -> Dictionary:
    payload = load_model(path, "dictionary")
    dictionary = Dictionary(depth=payload["depth"], seed=payload["seed"])
    raw = {n["id"]: n for n in payload["nodes"]}
    for wid in sorted(raw):
        n = raw[wid]
        dictionary.nodes[wid] = WordNode(wid, np.array(n["centroid"]),
                                         depth=n["depth"])
    for wid, n in raw.items():
        if n["children"]:
            a, b = n["children"]
            dictionary.nodes[wid].children = (dictionary.nodes[a],
                                              dictionary.nodes[b])
    dictionary.root = dictionary.nodes[0] if dictionary.nodes else None
    return dictionary


# ---------------------------------------------------------------------------
# ensemble

def save_ensemble(path, ensemble: Ensemble, dictionary_sha256: str = ""):
    hierarchies = []
    for h in ensemble.hierarchies:
        hierarchies.append({
            "dictionary_level": h.dictionary_level,
            "vertices": [{"id": v.id, "level": v.level,
                          "words": list(v.words),
                          "prototypes": [[float(x) for x in p]
                                         for p in v.prototypes]}
                         for v in h.vertices],
            "edges": {str(level): sorted(map(list, edges))
                      for level, edges in sorted(h.edges.items())},
        })
    save_model(path, "ensemble", {"dictionary_sha256": dictionary_sha256,
                                  "hierarchies": hierarchies})


def load_ensemble(path, dictionary_sha256: str | None = None) -> Ensemble:
    payload = load_model(path, "ensemble")
    stored = payload.get("dictionary_sha256", "")
    if dictionary_sha256 is not None and stored and stored != dictionary_sha256:
        raise ModelStateError(f"{path!s} was trained against a different dictionary")
    hierarchies = []
    for hraw in payload["hierarchies"]:
        h = MotifHierarchy(dictionary_level=hraw["dictionary_level"])
        for vraw in hraw["vertices"]:
            vertex = MotifVertex(vraw["id"], vraw["level"], tuple(vraw["words"]),
                                 [np.array(p) for p in vraw["prototypes"]])
            h.vertices.append(vertex)
            h.by_key[(vertex.level, vertex.words)] = vertex.id
        h.edges = {int(level): {tuple(e) for e in edges}
                   for level, edges in hraw["edges"].items()}
        hierarchies.append(h)
    return Ensemble(hierarchies, frozen=True)


# ---------------------------------------------------------------------------
# stimuli / labels CSV

def save_stimuli_csv(path, stimuli):
    stimuli = list(stimuli)
    dim = len(stimuli[0]) if stimuli else 0
    lines = ["object_id," + ",".join(f"v_{k}" for k in range(dim))]
    for s in stimuli:
        vec = s.vector
        if vec.size != dim:
            raise ModelStateError("stimuli vectors have inconsistent dimensions")
        lines.append(str(s.object_id) + "," + ",".join(_fmt(x) for x in vec))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_stimuli_csv(path, labels: dict | None = None) -> list:
    out = []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("object_id"):
            raise ModelStateError(f"{path!s} is not a stimuli CSV")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            oid = parts[0]
            vec = np.array([float(x) for x in parts[1:]])
            out.append(StimuliVector(oid, (vec,),
                                     labels.get(oid) if labels else None))
    return out


def save_labels_csv(path, pairs):
    lines = ["object_id,label"] + [f"{oid},{lab}" for oid, lab in pairs]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_labels_csv(path) -> dict:
    out = {}
    with open(path) as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                oid, lab = line.split(",", 1)
                out[oid] = lab
    return out


# ---------------------------------------------------------------------------
# filtration CSVs

def save_barcode_csv(path, filtration: Filtration):
    lines = ["vertex_id,birth,death"]
    for v in range(filtration.n_vertices):
        death = filtration.deaths[v]
        lines.append(f"{v},0.0,{_fmt(death) if math.isfinite(death) else 'inf'}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def save_filtration_edges_csv(path, filtration: Filtration):
    lines = ["u,v,time"] + [f"{u},{v},{_fmt(t)}" for u, v, t in filtration.edges]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_filtration_edges_csv(path) -> list:
    edges = []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                u, v, t = line.split(",")
                edges.append((int(u), int(v), float(t)))
    return edges


def save_annexation_csv(path, curve):
    lines = ["time,count"] + [f"{_fmt(t)},{c}" for t, c in curve]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_annexation_csv(path) -> list:
    out = []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                t, c = line.split(",")
                out.append((float(t), int(c)))
    return out


# ---------------------------------------------------------------------------
# concepts

def save_concepts(path, concept_set: ConceptSet, stimuli_sha256: str = "",
                  with_scores: bool = True):
    concepts = []
    for c in concept_set.concepts:
        entry = {"id": c.id, "member_ids": list(c.member_ids),
                 "member_object_ids": [p.object_id for p in c.prototypes],
                 "formation_time": float(c.formation_time)}
        if with_scores and all(lab is not None for lab in c.labels):
            entry["purity"] = purity(c)
            entry["rank_score"] = rank_score(c)
        concepts.append(entry)
    save_model(path, "concepts", {
        "cut_time": float(concept_set.cut_time),
        "min_size": concept_set.min_size,
        "stimuli_sha256": stimuli_sha256,
        "covariance": {"variances": [float(x) for x in concept_set.covariance.variances],
                       "shrinkage": float(concept_set.covariance.shrinkage)},
        "concepts": concepts,
    })


def load_concepts(path, stimuli, stimuli_sha256: str | None = None) -> ConceptSet:
    payload = load_model(path, "concepts")
    stored = payload.get("stimuli_sha256", "")
    if stimuli_sha256 is not None and stored and stored != stimuli_sha256:
        raise ModelStateError(f"{path!s} was extracted from different stimuli")
    stimuli = list(stimuli)
    covariance = CovarianceModel(np.array(payload["covariance"]["variances"]),
                                 payload["covariance"]["shrinkage"])
    dim = len(stimuli[0]) if stimuli else 0
    if covariance.variances.size != dim:
        raise ModelStateError(f"{path!s} covariance dimension "
                              f"{covariance.variances.size} != stimuli dimension {dim}")
    concepts = []
    for raw in payload["concepts"]:
        members = tuple(raw["member_ids"])
        concepts.append(Concept(raw["id"], members,
                                tuple(stimuli[v] for v in members),
                                raw["formation_time"]))
    return ConceptSet(tuple(concepts), payload["cut_time"], payload["min_size"],
                      covariance)


# ---------------------------------------------------------------------------
# evaluation CSVs

def save_embedding_csv(path, embedding, object_ids, labels):
    lines = ["id,x,y,label"]
    for oid, (x, y), lab in zip(object_ids, embedding.coords, labels):
        lines.append(f"{oid},{_fmt(x)},{_fmt(y)},{lab if lab is not None else ''}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_embedding_csv(path):
    ids, coords, labels = [], [], []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                oid, x, y, lab = line.split(",")
                ids.append(oid)
                coords.append((float(x), float(y)))
                labels.append(lab or None)
    return ids, np.array(coords), labels


def save_grid_csv(path, grid):
    lines = ["cx,cy,label,weight"]
    for a, cx in enumerate(grid.xs):
        for b, cy in enumerate(grid.ys):
            lines.append(f"{_fmt(cx)},{_fmt(cy)},{grid.labels[a, b]},"
                         f"{_fmt(grid.weights[a, b])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def save_errors_csv(path, result):
    lines = ["label,mean_error_pct"]
    for lab in sorted(result.per_class):
        lines.append(f"{lab},{_fmt(result.per_class[lab])}")
    lines.append(f"__overall__,{_fmt(result.overall)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def save_sweep_csv(path, sweep, matrix):
    lines = ["cut_time\\min_size," + ",".join(str(m) for m in sweep.min_sizes)]
    for a, t in enumerate(sweep.cut_times):
        row = [_fmt(t)] + [_fmt(matrix[a, b]) for b in range(len(sweep.min_sizes))]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# SVG rendering (dependency-free, deterministic)

_PALETTE = ("#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
            "#aa3377", "#bbbbbb", "#000000")


def _color_map(labels):
    uniq = sorted({lab for lab in labels if lab is not None})
    return {lab: _PALETTE[i % len(_PALETTE)] for i, lab in enumerate(uniq)}


def _svg(width, height, body) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            + "\n".join(body) + "\n</svg>\n")


def render_barcode_svg(filtration: Filtration, width=640, bar=4) -> str:
    n = filtration.n_vertices
    height = n * bar + 20
    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    order = sorted(range(n), key=lambda v: (filtration.deaths[v], v))
    for row, v in enumerate(order):
        death = filtration.deaths[v]
        frac = 1.0 if not math.isfinite(death) else death
        y = 10 + row * bar
        body.append(f'<line x1="20" y1="{y}" x2="{20 + frac * (width - 40):.2f}" '
                    f'y2="{y}" stroke="#4477aa" stroke-width="{bar - 1}"/>')
    return _svg(width, height, body)


def render_curve_svg(curve, width=640, height=320) -> str:
    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    top = max(c for _, c in curve) or 1
    pts = " ".join(f"{20 + t * (width - 40):.2f},"
                   f"{height - 20 - c / top * (height - 40):.2f}"
                   for t, c in curve)
    body.append(f'<polyline points="{pts}" fill="none" stroke="#ee6677" '
                'stroke-width="2"/>')
    return _svg(width, height, body)


def render_scatter_svg(coords, labels, width=640, height=640) -> str:
    coords = np.asarray(coords, dtype=np.float64)
    colors = _color_map(labels)
    lo = coords.min(axis=0)
    span = np.where(coords.max(axis=0) > lo, coords.max(axis=0) - lo, 1.0)
    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    for (x, y), lab in zip(coords, labels):
        px = 20 + (x - lo[0]) / span[0] * (width - 40)
        py = height - 20 - (y - lo[1]) / span[1] * (height - 40)
        body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" '
                    f'fill="{colors.get(lab, "#000000")}"/>')
    return _svg(width, height, body)


def render_grid_svg(grid, width=640, height=640) -> str:
    res_x, res_y = len(grid.xs), len(grid.ys)
    cw, ch = width / res_x, height / res_y
    colors = _color_map(grid.labels.ravel().tolist())
    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    for a in range(res_x):
        for b in range(res_y):
            color = colors.get(grid.labels[a, b], "#000000")
            body.append(f'<rect x="{a * cw:.2f}" y="{height - (b + 1) * ch:.2f}" '
                        f'width="{cw:.2f}" height="{ch:.2f}" fill="{color}" '
                        f'fill-opacity="{grid.weights[a, b]:.3f}"/>')
    return _svg(width, height, body)

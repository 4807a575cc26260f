"""File-based pipeline stages.

Every stage reads artifacts from earlier stages, writes its own plus a
manifest (config hash, seed, inputs, outputs), and is byte-identical on
rerun with the same inputs and seed. Exit code 0 on success; on failure
a machine-readable JSON error line goes to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import concepts as concepts_mod
from . import modelio
from .config import PipelineConfig, stage_seed
from .dictionary import train_dictionary
from .errors import ShapeConceptsError, StageDependencyError
from .evaluation import SplitProtocol, TrainParams, cross_validate, region_grid, tsne
from .geometry import (build_object_graph, estimate_normals, from_labels,
                       make_dataset, read_cloud, region_grow_segment,
                       write_cloud)
from .motif import stimuli_vector, train_ensemble
from .topology import (Filtration, TopoSpace, build_space, filtrate,
                       geodesic_heats, peak_annexation_time)


def _require(path, stage: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise StageDependencyError(f"stage {stage!r} is missing its input: {path}")
    return path


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _manifest(out: Path, stage: str, cfg: PipelineConfig, inputs, outputs,
              extra: dict | None = None):
    doc = {"stage": stage, "seed": cfg.seed, "config_hash": cfg.config_hash(),
           "config": cfg.to_dict(),
           "inputs": sorted(str(p) for p in inputs),
           "outputs": sorted(str(p) for p in outputs)}
    if extra:
        doc.update(extra)
    path = out / f"manifest_{stage}.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _cloud_files(directory: Path) -> list:
    files = sorted(directory.glob("*.txt"))
    if not files:
        raise StageDependencyError(f"no cloud files (*.txt) under {directory}")
    return files


def _load_objects(directory: Path, cfg: PipelineConfig) -> list:
    """Segmented objects with normals, rebuilt from ASCII clouds."""
    objects = []
    for path in _cloud_files(directory):
        cloud, label = read_cloud(path)
        if cloud.segment_ids is None:
            raise StageDependencyError(f"{path} has no segment_id column")
        cloud = estimate_normals(cloud, cfg.normals_k)
        objects.append(from_labels(cloud, category_label=label,
                                   object_id=path.stem,
                                   dist_thresh=cfg.dist_thresh))
    return objects


def _graphs(objects, dictionary, cfg: PipelineConfig):
    return [build_object_graph(obj, dictionary, fpfh_radius=cfg.fpfh_radius)
            for obj in objects]


def _load_stimuli(args, stage: str):
    stim_path = _require(args.stimuli, stage)
    labels = None
    if getattr(args, "labels", None):
        labels = modelio.load_labels_csv(_require(args.labels, stage))
    return modelio.load_stimuli_csv(stim_path, labels), stim_path


def _reconstructed_filtration(stimuli, f_edges) -> Filtration:
    """Filtration view holding just what concept extraction needs."""
    edges = tuple((u, v) for u, v, _ in f_edges)
    space = TopoSpace(tuple(stimuli), edges, tuple(0.0 for _ in edges))
    return Filtration(space=space, radii=(), times=(), events=(), deaths={},
                      edges=tuple(f_edges), annexation_counts=(),
                      normalization=(0.0, 0.0))


# ---------------------------------------------------------------------------
# stages

def cmd_synth(args):
    cfg = _config(args)
    out = _outdir(args)
    objects = make_dataset(cfg.categories, cfg.per_category, cfg.noise_sigma,
                           stage_seed(cfg.seed, "synth"), cfg.scan_points)
    written = []
    for obj in objects:
        path = out / f"{obj.object_id}.txt"
        write_cloud(path, obj.cloud, obj.category_label)
        written.append(path)
    _manifest(out, "synth", cfg, [], written)
    return 0


def cmd_segment(args):
    cfg = _config(args)
    out = _outdir(args)
    indir = _require(args.indir, "segment")
    written = []
    inputs = _cloud_files(indir)
    for path in inputs:
        cloud, label = read_cloud(path)
        bare = cloud.with_segment_ids(None)
        with_normals = estimate_normals(bare, cfg.normals_k)
        segmented = region_grow_segment(with_normals, cfg.angle_thresh_deg,
                                        cfg.dist_thresh, cfg.min_segment_points)
        dest = out / path.name
        write_cloud(dest, segmented.cloud, label)
        written.append(dest)
    _manifest(out, "segment", cfg, inputs, written)
    return 0


def cmd_dict_train(args):
    cfg = _config(args)
    out = _outdir(args)
    indir = _require(args.indir, "dict-train")
    objects = _load_objects(indir, cfg)
    from .geometry import fpfh
    corpus = [fpfh(seg, obj.cloud, cfg.fpfh_radius)
              for obj in objects for seg in obj.segments]
    dictionary = train_dictionary(corpus, cfg.dictionary_depth,
                                  seed=stage_seed(cfg.seed, "dict-train"),
                                  max_iter=cfg.dictionary_max_iter)
    path = out / "dictionary.json"
    modelio.save_dictionary(path, dictionary)
    _manifest(out, "dict-train", cfg, _cloud_files(indir), [path],
              {"corpus_size": len(corpus)})
    return 0


def cmd_ensemble_train(args):
    cfg = _config(args)
    out = _outdir(args)
    indir = _require(args.indir, "ensemble-train")
    dict_path = _require(args.dictionary, "ensemble-train")
    dictionary = modelio.load_dictionary(dict_path)
    graphs = _graphs(_load_objects(indir, cfg), dictionary, cfg)
    ensemble = train_ensemble(graphs, dictionary)
    path = out / "ensemble.json"
    modelio.save_ensemble(path, ensemble, modelio.file_sha256(dict_path))
    _manifest(out, "ensemble-train", cfg,
              _cloud_files(indir) + [dict_path], [path],
              {"dimension": ensemble.dimension})
    return 0


def cmd_stimuli(args):
    cfg = _config(args)
    out = _outdir(args)
    indir = _require(args.indir, "stimuli")
    dict_path = _require(args.dictionary, "stimuli")
    ens_path = _require(args.ensemble, "stimuli")
    dictionary = modelio.load_dictionary(dict_path)
    ensemble = modelio.load_ensemble(ens_path, modelio.file_sha256(dict_path))
    graphs = _graphs(_load_objects(indir, cfg), dictionary, cfg)
    stimuli = [stimuli_vector(g, ensemble, cfg.bandwidth) for g in graphs]
    stim_path = out / "stimuli.csv"
    labels_path = out / "labels.csv"
    modelio.save_stimuli_csv(stim_path, stimuli)
    modelio.save_labels_csv(labels_path,
                            [(s.object_id, s.category_label or "") for s in stimuli])
    _manifest(out, "stimuli", cfg,
              _cloud_files(indir) + [dict_path, ens_path],
              [stim_path, labels_path])
    return 0


def cmd_filtrate(args):
    cfg = _config(args)
    out = _outdir(args)
    stimuli, stim_path = _load_stimuli(args, "filtrate")
    space = geodesic_heats(build_space(stimuli))
    filtration = filtrate(space, cfg.max_steps)
    from .topology import annexation_curve
    outputs = [out / "barcode.csv", out / "filtration_edges.csv",
               out / "annexation.csv"]
    modelio.save_barcode_csv(outputs[0], filtration)
    modelio.save_filtration_edges_csv(outputs[1], filtration)
    modelio.save_annexation_csv(outputs[2], annexation_curve(filtration))
    _manifest(out, "filtrate", cfg, [stim_path], outputs,
              {"peak_annexation_time": peak_annexation_time(filtration)})
    return 0


def cmd_concepts(args):
    cfg = _config(args)
    out = _outdir(args)
    stimuli, stim_path = _load_stimuli(args, "concepts")
    edges_path = _require(args.edges, "concepts")
    f_edges = modelio.load_filtration_edges_csv(edges_path)
    filtration = _reconstructed_filtration(stimuli, f_edges)
    inputs = [stim_path, edges_path]
    if cfg.cut_time == "auto":
        annex_path = _require(args.annexation, "concepts")
        curve = modelio.load_annexation_csv(annex_path)
        counts = np.array([c for _, c in curve])
        cut_time = float(curve[int(np.argmax(counts))][0])
        inputs.append(annex_path)
    else:
        cut_time = float(cfg.cut_time)
    concept_set = concepts_mod.extract_concepts(
        filtration, cut_time, cfg.min_size, keep_equal_time=cfg.keep_equal_time)
    path = out / "concepts.json"
    modelio.save_concepts(path, concept_set, modelio.file_sha256(stim_path))
    _manifest(out, "concepts", cfg, inputs, [path],
              {"cut_time": cut_time, "n_concepts": len(concept_set)})
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    out = _outdir(args)
    stimuli, stim_path = _load_stimuli(args, "sweep")
    edges_path = _require(args.edges, "sweep")
    filtration = _reconstructed_filtration(
        stimuli, modelio.load_filtration_edges_csv(edges_path))
    sweep = concepts_mod.supervised_sweep(
        filtration, cfg.sweep_cut_times, cfg.sweep_min_sizes,
        TrainParams(cfg.classifier_epochs, cfg.classifier_step,
                    cfg.classifier_regularization,
                    stage_seed(cfg.seed, "sweep")),
        SplitProtocol(cfg.split_ratio, cfg.repetitions,
                      stage_seed(cfg.seed, "sweep-split")))
    outputs = [out / "sweep_purity.csv", out / "sweep_error.csv"]
    modelio.save_sweep_csv(outputs[0], sweep, sweep.mean_purity)
    modelio.save_sweep_csv(outputs[1], sweep, sweep.mean_error)
    _manifest(out, "sweep", cfg, [stim_path, edges_path], outputs)
    return 0


def cmd_classify(args):
    cfg = _config(args)
    out = _outdir(args)
    stimuli, stim_path = _load_stimuli(args, "classify")
    concepts_path = _require(args.concepts, "classify")
    concept_set = modelio.load_concepts(concepts_path, stimuli,
                                        modelio.file_sha256(stim_path))
    X = concepts_mod.response_matrix(stimuli, concept_set)
    y = [s.category_label for s in stimuli]
    result = cross_validate(
        X, y,
        TrainParams(cfg.classifier_epochs, cfg.classifier_step,
                    cfg.classifier_regularization,
                    stage_seed(cfg.seed, "classify")),
        SplitProtocol(cfg.split_ratio, cfg.repetitions,
                      stage_seed(cfg.seed, "classify-split")))
    path = out / "errors.csv"
    modelio.save_errors_csv(path, result)
    _manifest(out, "classify", cfg, [stim_path, concepts_path], [path],
              {"overall_error_pct": result.overall})
    return 0


def cmd_embed(args):
    cfg = _config(args)
    out = _outdir(args)
    stimuli, stim_path = _load_stimuli(args, "embed")
    concepts_path = _require(args.concepts, "embed")
    concept_set = modelio.load_concepts(concepts_path, stimuli,
                                        modelio.file_sha256(stim_path))
    X = concepts_mod.response_matrix(stimuli, concept_set)
    embedding = tsne(X, cfg.tsne_perplexity, cfg.tsne_iterations, cfg.tsne_step,
                     seed=stage_seed(cfg.seed, "embed"))
    path = out / "embedding.csv"
    modelio.save_embedding_csv(path, embedding, [s.object_id for s in stimuli],
                               [s.category_label for s in stimuli])
    _manifest(out, "embed", cfg, [stim_path, concepts_path], [path],
              {"kl": embedding.kl})
    return 0


def cmd_export(args):
    cfg = _config(args)
    out = _outdir(args)
    inputs, outputs = [], []
    if args.embedding:
        emb_path = _require(args.embedding, "export")
        ids, coords, labels = modelio.load_embedding_csv(emb_path)
        from .evaluation import Embedding2D
        grid = region_grid(Embedding2D(coords, 0.0), labels,
                           cfg.grid_k_fraction, cfg.grid_resolution)
        grid_path = out / "grid.csv"
        modelio.save_grid_csv(grid_path, grid)
        inputs.append(emb_path)
        outputs.append(grid_path)
        if args.svg:
            (out / "embedding.svg").write_text(
                modelio.render_scatter_svg(coords, labels))
            (out / "grid.svg").write_text(modelio.render_grid_svg(grid))
            outputs += [out / "embedding.svg", out / "grid.svg"]
    if args.barcode and args.svg:
        bc_path = _require(args.barcode, "export")
        deaths = modelio.load_barcode_csv(bc_path)
        (out / "barcode.svg").write_text(modelio.render_barcode_deaths_svg(deaths))
        inputs.append(bc_path)
        outputs.append(out / "barcode.svg")
    if args.annexation and args.svg:
        an_path = _require(args.annexation, "export")
        curve = modelio.load_annexation_csv(an_path)
        (out / "annexation.svg").write_text(modelio.render_curve_svg(curve))
        inputs.append(an_path)
        outputs.append(out / "annexation.svg")
    _manifest(out, "export", cfg, inputs, outputs)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapeconcepts",
        description="Unsupervised shape-concept pipeline over 2.5D point clouds")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the root seed")
    sub = parser.add_subparsers(dest="command", required=True)

    def stage(name, fn, **flags):
        p = sub.add_parser(name)
        p.add_argument("--out", required=True, help="output directory")
        for flag, (required, help_text) in flags.items():
            p.add_argument(flag, required=required, help=help_text)
        p.set_defaults(fn=fn)
        return p

    stage("synth", cmd_synth)
    stage("segment", cmd_segment, **{"--indir": (True, "raw cloud directory")})
    stage("dict-train", cmd_dict_train,
          **{"--indir": (True, "segmented cloud directory")})
    stage("ensemble-train", cmd_ensemble_train,
          **{"--indir": (True, "segmented cloud directory"),
             "--dictionary": (True, "dictionary.json path")})
    stage("stimuli", cmd_stimuli,
          **{"--indir": (True, "segmented cloud directory"),
             "--dictionary": (True, "dictionary.json path"),
             "--ensemble": (True, "ensemble.json path")})
    stage("filtrate", cmd_filtrate, **{"--stimuli": (True, "stimuli.csv path")})
    stage("concepts", cmd_concepts,
          **{"--stimuli": (True, "stimuli.csv path"),
             "--labels": (False, "labels.csv path"),
             "--edges": (True, "filtration_edges.csv path"),
             "--annexation": (False, "annexation.csv (needed for auto cut)")})
    stage("sweep", cmd_sweep,
          **{"--stimuli": (True, "stimuli.csv path"),
             "--labels": (True, "labels.csv path"),
             "--edges": (True, "filtration_edges.csv path")})
    stage("classify", cmd_classify,
          **{"--stimuli": (True, "stimuli.csv path"),
             "--labels": (True, "labels.csv path"),
             "--concepts": (True, "concepts.json path")})
    stage("embed", cmd_embed,
          **{"--stimuli": (True, "stimuli.csv path"),
             "--labels": (True, "labels.csv path"),
             "--concepts": (True, "concepts.json path")})
    export = stage("export", cmd_export,
                   **{"--embedding": (False, "embedding.csv path"),
                      "--barcode": (False, "barcode.csv path"),
                      "--annexation": (False, "annexation.csv path")})
    export.add_argument("--svg", action="store_true", help="also render SVGs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ShapeConceptsError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

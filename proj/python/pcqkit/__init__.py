"""Full-reference point cloud quality metrics and feature-fusion models."""

from ._pcqkit import PcqkitError, feature_names, load_ply, metrics, registry_names, run

__all__ = [
    "PcqkitError",
    "feature_names",
    "load_ply",
    "metrics",
    "registry_names",
    "run",
    "extract",
    "train",
    "predict",
    "evaluate",
]


def _call(*args):
    code, out, err = run([str(a) for a in args])
    if code != 0:
        raise PcqkitError(err.strip())
    return out


def extract(manifest, out, jobs=0, cache=None):
    args = ["extract", "--manifest", manifest, "--out", out, "--jobs", jobs]
    if cache is not None:
        args += ["--cache", cache]
    _call(*args)


def train(features, model, out):
    _call("train", "--features", features, "--model", model, "--out", out)


def predict(model, features, out, force=False):
    _call("predict", "--model", model, "--features", features, "--out", out, *(["--force"] if force else []))


def evaluate(scores, manifest, out):
    _call("evaluate", "--scores", scores, "--manifest", manifest, "--out", out)

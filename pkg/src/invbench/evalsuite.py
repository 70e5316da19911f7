"""Accuracy-vs-dataset-size and diversity studies over the trained solvers,
with the analytic forward model as ground-truth oracle."""

from __future__ import annotations

import hashlib
import itertools
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .bayes import BayesModel
from .cfm import VectorFieldNet, integrate, train_cfm
from .config import Profile, sub_rng
from .cwgan import Generator, decode_design, CONT_IDX, train_cwgan
from .inn import INNModel, train_inn
from .problem import Dataset, forward_model, make_dataset, snap_h
from .surrogate import train_surrogates

LABELS = ("u_m", "dp", "g")

# Table-4-style target grid: all combinations
DIVERSITY_TARGETS = np.array([
    [um, dp, g]
    for um, dp, g in itertools.product((0.02, 0.06, 0.10),
                                       (0.033, 0.040, 0.045),
                                       (-0.5, 0.0, 0.5))
])


def _fmt(x: float) -> str:
    return format(x, ".17g")


def config_hash(cfg) -> str:
    blob = json.dumps(cfg.__dict__, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def generate_for_targets(model, targets: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    """One design per target row, batched where the solver allows it."""
    targets = np.asarray(targets, dtype=np.float64)
    n = targets.shape[0]
    if isinstance(model, VectorFieldNet):
        z0 = rng.standard_normal((n, 6))
        return integrate(model, targets, z0, model.config.integration_steps)
    if isinstance(model, INNModel):
        z = rng.standard_normal((n, 3))
        with ad.no_grad():
            x = model.inverse(np.hstack([targets, z])).data
        x = np.clip(x, 0.0, 1.0)
        x[:, 1] = snap_h(x[:, 1])
        return x
    if isinstance(model, Generator):
        z = rng.standard_normal((n, model.config.latent_dim))
        with ad.no_grad():
            enc = model.forward(z, targets).data
        cont = enc[:, : len(CONT_IDX)]
        return decode_design(cont, np.argmax(enc[:, len(CONT_IDX):], axis=1))
    # sequential fallback (MCMC: one chain per target)
    return np.vstack([model.generate(y, 1, rng) for y in targets])


def accuracy_mae(model, targets: np.ndarray, rng: np.random.Generator,
                 oracle=forward_model):
    """Per-label MAE between targets and oracle labels of generated designs."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape[0] < 1:
        raise ValueError("need at least one target")
    designs = generate_for_targets(model, targets, rng)
    achieved = oracle(designs)
    ok = np.isfinite(achieved).all(axis=1)
    if (~ok).mean() > 0.01:
        raise RuntimeError(f"generation failed for {(~ok).sum()} of {len(ok)} targets")
    mae = np.abs(targets[ok] - achieved[ok]).mean(axis=0)
    return mae, achieved, designs


@dataclass
class AccuracyCell:
    model: str
    d: int
    seed: int
    mae: np.ndarray
    targets: np.ndarray
    achieved: np.ndarray
    runtime: float = 0.0
    cfg_hash: str = ""


@dataclass
class DiversityCell:
    model: str
    target: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    samples: np.ndarray  # generated designs (count, 6)
    labels: np.ndarray   # oracle labels (count, 3)


def train_family(family: str, dataset: Dataset, profile: Profile, d: int,
                 seed: int, val_targets: np.ndarray | None = None,
                 surrogate_test: Dataset | None = None, log_path=None):
    """Train one benchmark cell and return an object exposing generate()."""
    cfg = profile.family_config(family, d)
    if family == "inn":
        return train_inn(dataset, cfg, seed=seed)
    if family == "cfm":
        return train_cfm(dataset, cfg, seed=seed)
    if family == "cwgan":
        if val_targets is None:
            raise ValueError("cwgan needs validation targets")
        return train_cwgan(dataset, val_targets, cfg, seed=seed, log_path=log_path)
    if family == "bi":
        if surrogate_test is None:
            raise ValueError("bi needs a surrogate test dataset")
        surro = train_surrogates(dataset, surrogate_test, cfg, seed=seed)
        return BayesModel(surro, profile.mcmc_accuracy)
    raise ValueError(f"unknown model family {family!r}")


def make_test_targets(profile: Profile, global_seed: int) -> np.ndarray:
    """Fixed shared test-target set: labels of a held-out LHS sample."""
    rng = sub_rng(global_seed, "test-targets")
    ds = make_dataset(profile.test_targets_n, sigma=profile.sigma,
                      seed=int(rng.integers(2**31)))
    return ds.y


def _surrogate_test_set(profile: Profile, global_seed: int) -> Dataset:
    return make_dataset(300, sigma=profile.sigma,
                        seed=int(sub_rng(global_seed, "surrogate", 999).integers(2**31)))


def run_accuracy_cell(family: str, d: int, seed: int, profile: Profile,
                      global_seed: int, test_targets: np.ndarray,
                      surrogate_test: Dataset) -> AccuracyCell:
    """Train and evaluate a single (family, size, seed) benchmark cell."""
    t0 = time.time()
    ds = make_dataset(d, sigma=profile.sigma,
                      seed=int(sub_rng(global_seed, "dataset", d, seed).integers(2**31)))
    model = train_family(family, ds, profile, d, seed,
                         val_targets=test_targets, surrogate_test=surrogate_test)
    rng = sub_rng(global_seed, "eval", d, seed)
    mae, achieved, _ = accuracy_mae(model, test_targets, rng)
    return AccuracyCell(model=family, d=d, seed=seed, mae=mae,
                        targets=test_targets, achieved=achieved,
                        runtime=time.time() - t0,
                        cfg_hash=config_hash(profile.family_config(family, d)))


def dataset_size_sweep(families, sizes, profile: Profile, global_seed: int = 0,
                       jobs: int = 1, progress=None) -> list[AccuracyCell]:
    """One model per (family, size, seed), all evaluated on the same fixed
    test-target set.  Cells are independent and may run in parallel."""
    for d in sizes:
        if d not in (100, 500, 1000, 5000, 10000, 50000, 100000):
            raise ValueError(f"dataset size {d} outside the study grid")
    test_targets = make_test_targets(profile, global_seed)
    surrogate_test = _surrogate_test_set(profile, global_seed)
    specs = [(family, d, seed)
             for family in families for d in sizes for seed in profile.seeds]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_accuracy_cell, f, d, s, profile,
                                   global_seed, test_targets, surrogate_test)
                       for f, d, s in specs]
            cells = []
            for fut in futures:
                cells.append(fut.result())
                if progress:
                    progress(cells[-1])
            return cells
    cells = []
    for f, d, s in specs:
        cells.append(run_accuracy_cell(f, d, s, profile, global_seed,
                                       test_targets, surrogate_test))
        if progress:
            progress(cells[-1])
    return cells


def diversity_study(models: dict, profile: Profile, global_seed: int = 0,
                    targets: np.ndarray | None = None, count: int | None = None,
                    oracle=forward_model, progress=None) -> list[DiversityCell]:
    """For each model and each target vector, generate ``count`` designs and
    summarize the oracle labels."""
    if targets is None:
        targets = DIVERSITY_TARGETS
    if count is None:
        count = profile.diversity_count
    cells = []
    for name, model in models.items():
        if isinstance(model, BayesModel):
            model = BayesModel(model.surrogates, profile.mcmc_diversity)
        for ti, target in enumerate(targets):
            rng = sub_rng(global_seed, "diversity", ti)
            samples = model.generate(target, count, rng)
            labels = oracle(samples)
            cells.append(DiversityCell(
                model=name, target=np.asarray(target),
                mean=labels.mean(axis=0), std=labels.std(axis=0),
                samples=samples, labels=labels))
            if progress:
                progress(cells[-1])
    return cells


# -- CSV/JSON export -------------------------------------------------------

def export_accuracy(cells, path) -> None:
    with open(path, "w") as fh:
        fh.write("model,d,label,mae\n")
        for c in cells:
            for i, label in enumerate(LABELS):
                fh.write(f"{c.model},{c.d},{label},{_fmt(c.mae[i])}\n")


def export_parity(cells, path) -> None:
    with open(path, "w") as fh:
        fh.write("model,d,label,target,achieved\n")
        for c in cells:
            for i, label in enumerate(LABELS):
                for t, a in zip(c.targets[:, i], c.achieved[:, i]):
                    fh.write(f"{c.model},{c.d},{label},{_fmt(t)},{_fmt(a)}\n")


def export_accuracy_meta(cells, path) -> None:
    meta = [{"model": c.model, "d": c.d, "seed": c.seed,
             "config_hash": c.cfg_hash, "runtime_s": round(c.runtime, 3)}
            for c in cells]
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2)


def export_diversity(cells, path) -> None:
    with open(path, "w") as fh:
        fh.write("model,target_um,target_dp,target_g,label,mean,std\n")
        for c in cells:
            tgt = ",".join(_fmt(v) for v in c.target)
            for i, label in enumerate(LABELS):
                fh.write(f"{c.model},{tgt},{label},{_fmt(c.mean[i])},{_fmt(c.std[i])}\n")


def export_parameter_dump(cell: DiversityCell, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tag = "_".join(format(v, "g") for v in cell.target)
    path = directory / f"params_{cell.model}_{tag}.csv"
    with open(path, "w") as fh:
        fh.write("a,h,m,d,l,p\n")
        for row in cell.samples:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path

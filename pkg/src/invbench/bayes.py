"""Surrogate-based Metropolis sampler over the five continuous design
parameters, with exhaustive hole-count selection per proposal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import H_GRID
from .surrogate import SurrogateSet

CONT_IDX = (0, 2, 3, 4, 5)
N_CONT = 5


@dataclass
class MCMCConfig:
    proposal_std: float = 0.025
    likelihood_var: float = 1.75e-6  # diagonal of Sigma, per label
    burn_in: int = 10_000
    iterations: int = 60_000


@dataclass
class Chain:
    """Post-burn-in Markov chain trace plus diagnostics."""

    trace: np.ndarray          # (m, 6) full design vectors
    logliks: np.ndarray        # (m,)
    accepted: np.ndarray       # (m,) bool, proposal accepted at that iteration
    acceptance_rate: float = 0.0
    seed: int | None = None

    def thin(self, n: int) -> np.ndarray:
        """Evenly spaced states, anchored at the most recent one."""
        m = len(self.trace)
        idx = (m - 1 - np.linspace(0, m - 1, n)).round().astype(int)[::-1]
        return self.trace[idx]


def assemble_design(x_cont: np.ndarray, h: float) -> np.ndarray:
    x = np.empty(6)
    x[list(CONT_IDX)] = x_cont
    x[1] = h
    return x


def log_likelihood(x, y_target, predict_fn, var: float) -> float:
    """-1/2 sum_i (y_i - f_i(x))^2 / Sigma_ii, normalization dropped."""
    pred = np.asarray(predict_fn(np.atleast_2d(x)))[0]
    resid = np.asarray(y_target, dtype=np.float64) - pred
    return float(-0.5 * np.sum(resid * resid) / var)


def propose(x_cont: np.ndarray, rng: np.random.Generator,
            std: float = 0.025) -> np.ndarray:
    """Gaussian random walk clamped to the unit hypercube."""
    return np.clip(x_cont + rng.normal(0.0, std, size=x_cont.shape), 0.0, 1.0)


def _select_nh(x_cont, y_target, predict_fn):
    """Best hole-count grid value (ties -> smallest) plus its predictions."""
    cand = np.empty((len(H_GRID), 6))
    cand[:, list(CONT_IDX)] = x_cont
    cand[:, 1] = H_GRID
    preds = np.asarray(predict_fn(cand))
    mse = np.mean((preds - np.asarray(y_target)) ** 2, axis=1)
    best = int(np.argmin(mse))
    return H_GRID[best], preds[best]


def select_nh(x_cont, y_target, surrogates) -> float:
    predict_fn = surrogates.predict if isinstance(surrogates, SurrogateSet) else surrogates
    return _select_nh(x_cont, y_target, predict_fn)[0]


def metropolis_step(state, y_target, predict_fn, config: MCMCConfig,
                    rng: np.random.Generator):
    """One random-walk step; ``state`` is (x_cont, h, loglik).  Returns the new
    state and whether the proposal was accepted."""
    x_cont, h, ll = state
    cand_cont = propose(x_cont, rng, config.proposal_std)
    cand_h, cand_pred = _select_nh(cand_cont, y_target, predict_fn)
    resid = np.asarray(y_target) - cand_pred
    cand_ll = float(-0.5 * np.sum(resid * resid) / config.likelihood_var)
    if np.log(rng.uniform()) < cand_ll - ll:
        return (cand_cont, cand_h, cand_ll), True
    return state, False


def run_chain(y_target, surrogates, config: MCMCConfig,
              rng: np.random.Generator, seed: int | None = None) -> Chain:
    """Uniform random start, ``iterations`` Metropolis steps, first ``burn_in``
    discarded."""
    predict_fn = surrogates.predict if isinstance(surrogates, SurrogateSet) else surrogates
    y_target = np.asarray(y_target, dtype=np.float64)
    x_cont = rng.uniform(size=N_CONT)
    h, pred = _select_nh(x_cont, y_target, predict_fn)
    resid = y_target - pred
    ll = float(-0.5 * np.sum(resid * resid) / config.likelihood_var)
    state = (x_cont, h, ll)

    retained = config.iterations - config.burn_in
    if retained <= 0:
        raise ValueError("iterations must exceed burn_in")
    trace = np.empty((retained, 6))
    logliks = np.empty(retained)
    accepted = np.zeros(retained, dtype=bool)
    n_accept = 0
    for it in range(config.iterations):
        state, acc = metropolis_step(state, y_target, predict_fn, config, rng)
        n_accept += acc
        k = it - config.burn_in
        if k >= 0:
            trace[k] = assemble_design(state[0], state[1])
            logliks[k] = state[2]
            accepted[k] = acc
    if n_accept == 0:
        raise RuntimeError(
            "chain never moved from its start; consider retuning proposal_std")
    return Chain(trace, logliks, accepted,
                 acceptance_rate=n_accept / config.iterations, seed=seed)


def export_trace(chain: Chain, path, burn_in: int = 0) -> None:
    """CSV trace: iter,a,h,m,d,l,p,loglik,accepted."""
    with open(path, "w") as fh:
        fh.write("iter,a,h,m,d,l,p,loglik,accepted\n")
        for i, (x, ll, acc) in enumerate(zip(chain.trace, chain.logliks, chain.accepted)):
            vals = ",".join(format(v, ".17g") for v in x)
            fh.write(f"{i + burn_in},{vals},{format(ll, '.17g')},{int(acc)}\n")


class BayesModel:
    """Uniform-solver-contract wrapper: a trained surrogate set plus chain
    settings; ``generate`` runs one chain per target and thins its trace."""

    def __init__(self, surrogates: SurrogateSet, config: MCMCConfig | None = None):
        self.surrogates = surrogates
        self.config = config or MCMCConfig()

    def generate(self, y_target, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.empty((0, 6))
        cfg = self.config
        retained = cfg.iterations - cfg.burn_in
        if retained < n:
            cfg = MCMCConfig(cfg.proposal_std, cfg.likelihood_var,
                             cfg.burn_in, cfg.burn_in + n)
        chain = run_chain(y_target, self.surrogates, cfg, rng)
        return chain.thin(n)


def random_walk_chain(log_post, x0: np.ndarray, iterations: int, burn_in: int,
                      std: float, rng: np.random.Generator,
                      bounds=(0.0, 1.0)) -> np.ndarray:
    """Generic clamped random-walk Metropolis over a box; returns the
    post-burn-in trace.  Used by validity checks on analytic posteriors."""
    x = np.asarray(x0, dtype=np.float64).copy()
    ll = log_post(x)
    out = np.empty((iterations - burn_in, x.size))
    for it in range(iterations):
        cand = np.clip(x + rng.normal(0.0, std, size=x.shape), *bounds)
        cand_ll = log_post(cand)
        if np.log(rng.uniform()) < cand_ll - ll:
            x, ll = cand, cand_ll
        if it >= burn_in:
            out[it - burn_in] = x
    return out

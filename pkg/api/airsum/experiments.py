"""
Seeded Monte Carlo runners behind the CLI commands.

Each runner returns a ResultTable whose columns are COMMAND_COLUMNS[command].
Trials draw from streams keyed by their trial index, never by worker or grid
position, and results are reduced in ascending trial order, so a table is
identical for any worker count. Grid points of a sweep share the trial
streams (common random numbers), which keeps neighbouring rows comparable.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .bounds import (
    antenna_bound_gradient,
    antenna_bound_symbol,
    convergence_rhs,
    epsilon_for_antennas,
    expected_abs_error_fading,
    latency_suite,
    mse_awgn_bound,
    mse_fading_bound,
    quantization_variance,
)
from .channel import fading_sum
from .config import ExperimentConfig
from .federated import aggregate, train
from .power import lattice_noise_gain, select_beta
from .schemas import AwgnBoundInput, ConvergenceInput, FadingBoundInput, LatencyInput, SystemConfig
from .streams import derive_stream
from .utils.csv_export import ResultTable
from .utils.parameters import COMMAND_COLUMNS

logger = logging.getLogger(__name__)


class TrialOutcome(NamedTuple):
    squared_errors: np.ndarray
    abs_errors: np.ndarray


def _map_ordered(func: Callable, tasks: Sequence, workers: int, progress: bool, label: str) -> List:
    """Apply func to every task, results in task order, optionally in worker processes."""
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = executor.map(func, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
            return list(tqdm(results, total=len(tasks), desc=label, disable=not progress))
    return [func(task) for task in tqdm(tasks, desc=label, disable=not progress)]


def snr_to_noise(snr_db: float, p_max: float, n: int) -> float:
    """sigma_z2 = (P_max / N) / 10^(snr_db / 10)."""
    return (p_max / n) / 10.0 ** (snr_db / 10.0)


def uniform_moments(low: float, high: float) -> Tuple[float, float]:
    """(E s^2, E|s|) for s ~ U[low, high]."""
    if high == low:
        return low * low, abs(low)
    second = (high ** 3 - low ** 3) / (3.0 * (high - low))
    first = (high * abs(high) - low * abs(low)) / (2.0 * (high - low))
    return second, first


def _sweep_system(exp: ExperimentConfig, nr: int, snr_db: Optional[float], k: int) -> SystemConfig:
    sigma_z2 = exp.sigma_z2 if snr_db is None else snr_to_noise(snr_db, exp.p_max, exp.N)
    frame = exp.N if exp.frame_size is None else min(exp.frame_size, exp.N)
    return exp.system(K=k, N=frame, Nr=nr, sigma_z2=sigma_z2)


def _mse_trial(task: Tuple[ExperimentConfig, int, Optional[float], int, int]) -> TrialOutcome:
    exp, nr, snr_db, k, trial = task
    cfg = _sweep_system(exp, nr, snr_db, k)
    experiment = f"mse-sweep/{exp.sweep}"
    data = derive_stream(exp.seed, experiment + "/data", trial)

    if exp.sweep == "symbol":
        symbols = data.uniform(exp.symbol_low, exp.symbol_high, size=(k, exp.N))
        s_hat = fading_sum(symbols, cfg, derive_stream(exp.seed, experiment + "/channel", trial))
        errors = np.abs(s_hat - symbols.sum(axis=0))
        return TrialOutcome(squared_errors=errors ** 2, abs_errors=errors)

    gradients = data.uniform(exp.grad_low, exp.grad_high, size=(k, exp.N))
    scaling = select_beta([1] * k, cfg, exp.beta_margin)

    def channel(index: int) -> np.random.Generator:
        return derive_stream(exp.seed, experiment + "/channel", trial, 0, index)

    result = aggregate(gradients, exp.sweep, cfg, exp.quantizer(), scaling, channel, exp.frame_size)
    return TrialOutcome(
        squared_errors=np.array([result.grad_mse]),
        abs_errors=np.abs(result.g_ideal - result.g_hat),
    )


def _sweep_bounds(exp: ExperimentConfig, cfg: SystemConfig) -> Tuple[Optional[float], Optional[float]]:
    """(mse_bound_awgn, mse_bound_fading) for one grid point."""
    sigma_h = math.sqrt(cfg.sigma_h2)
    sigma_z = math.sqrt(cfg.sigma_z2)

    if exp.sweep == "symbol":
        if sigma_z == 0:
            return 0.0, None
        gamma = cfg.K * max(abs(exp.symbol_low), abs(exp.symbol_high))
        if gamma == 0:
            return cfg.sigma_z2 / cfg.Nr, None
        inp = FadingBoundInput(
            gamma=gamma, sigma_h=sigma_h, sigma_z=sigma_z, K=cfg.K, N=exp.N, q=cfg.q, Nr=cfg.Nr,
            epsilon=exp.epsilon, delta=exp.delta, variant=exp.bound_variant,
        )
        return cfg.sigma_z2 / cfg.Nr, epsilon_for_antennas(inp, cfg.Nr) ** 2

    scaling = select_beta([1] * cfg.K, cfg, exp.beta_margin)
    gain = lattice_noise_gain(scaling)
    awgn = mse_awgn_bound(
        AwgnBoundInput(
            N=exp.N, K=cfg.K, q=cfg.q, delta_g=exp.delta_g, sigma_z2=cfg.sigma_z2, Nr=cfg.Nr,
            noise_gain=gain, alphabet="sum",
        )
    ).total
    if exp.sweep == "awgn" or sigma_z == 0:
        return awgn, None
    # Worst case: every device on a corner point of the constellation.
    corner = math.sqrt(2.0) * (cfg.side - 1) / 2.0
    inp = FadingBoundInput(
        gamma=cfg.K * corner, sigma_h=sigma_h, sigma_z=sigma_z, K=cfg.K, N=exp.N, q=cfg.q, Nr=cfg.Nr,
        epsilon=exp.epsilon, delta=exp.delta, noise_gain=gain, variant=exp.bound_variant,
    )
    return awgn, mse_fading_bound(inp, exp.delta_g).total


def run_mse_sweep(exp: ExperimentConfig, progress: bool = False) -> ResultTable:
    """
    Empirical aggregation error against the analytical bounds on the
    (nr, snr_db, k) grid.

    sweep = symbol pushes real symbols from U[symbol_low, symbol_high] through
    the fading channel and blind beamformer; awgn and fading push gradients
    from U[grad_low, grad_high] through the full digital pipeline.
    """
    grid = [(nr, snr, k) for nr in exp.nr_values for snr in exp.snr_values for k in exp.k_values]
    tasks = [(exp, nr, snr, k, trial) for (nr, snr, k) in grid for trial in range(exp.trials)]
    logger.info(f"mse-sweep ({exp.sweep}): {len(grid)} grid points x {exp.trials} trials")
    outcomes = _map_ordered(_mse_trial, tasks, exp.worker_count, progress, "mse-sweep")

    rows = []
    for index, (nr, snr, k) in enumerate(grid):
        if exp.trials == 0:
            continue
        chunk = outcomes[index * exp.trials:(index + 1) * exp.trials]
        squared = np.concatenate([outcome.squared_errors for outcome in chunk])
        absolute = np.concatenate([outcome.abs_errors for outcome in chunk])
        mse = float(np.mean(squared))
        stderr = float(np.std(squared, ddof=1) / math.sqrt(squared.size)) if squared.size > 1 else 0.0
        bound_awgn, bound_fading = _sweep_bounds(exp, _sweep_system(exp, nr, snr, k))
        rows.append([
            nr, snr, k, exp.trials, mse, bound_awgn, bound_fading, float(np.percentile(absolute, 99)), stderr,
        ])
        logger.debug(f"nr={nr} snr_db={snr} k={k}: mse={mse:.6g} (stderr {stderr:.3g})")
    return ResultTable(columns=list(COMMAND_COLUMNS["mse-sweep"]), rows=rows)


def _train_trial(task: Tuple[ExperimentConfig, int]):
    exp, trial = task
    return train(exp, trial)


def run_train(exp: ExperimentConfig, progress: bool = False) -> ResultTable:
    """Learning curves averaged over exp.trials seeds, one row per round."""
    tasks = [(exp, trial) for trial in range(exp.trials)]
    logger.info(f"train: {exp.trials} seeds x {exp.rounds} rounds, aggregator={exp.aggregator}")
    runs = _map_ordered(_train_trial, tasks, exp.worker_count, progress, "train")

    rows = []
    if runs:
        for m in range(exp.rounds):
            per_round = [run[m] for run in runs]
            rows.append([
                m,
                float(np.mean([r.train_loss for r in per_round])),
                float(np.mean([r.test_accuracy for r in per_round])),
                float(np.mean([r.grad_mse for r in per_round])),
                float(np.mean([r.grad_norm2 for r in per_round])),
            ])
    return ResultTable(columns=list(COMMAND_COLUMNS["train"]), rows=rows)


def run_bound_tables(exp: ExperimentConfig, progress: bool = False) -> ResultTable:
    """
    Antenna requirements, the expected-error bound and the convergence bound
    over the (k, nr) grid, with the worst-case gamma = K * max|s|.
    """
    sigma_h = math.sqrt(exp.sigma_h2)
    sigma_z = math.sqrt(exp.sigma_z2)
    if sigma_z == 0:
        raise ValueError("bounds needs sigma_z2 > 0")
    peak = max(abs(exp.symbol_low), abs(exp.symbol_high))
    if peak == 0:
        raise ValueError("bounds needs a non-zero symbol range")
    if exp.rounds < 1:
        raise ValueError("bounds needs rounds >= 1 for the convergence bound")

    rows = []
    for k in exp.k_values:
        rhs = convergence_rhs(
            ConvergenceInput(
                eta=exp.eta, L=exp.smoothness, T=exp.rounds, loss_gap=exp.loss_gap, sigma_ch2=exp.sigma_ch2,
                sigma_q2=quantization_variance(exp.N, k, exp.q, exp.delta_g), theta_bar=exp.theta_bar,
            )
        )
        for nr in exp.nr_values:
            inp = FadingBoundInput(
                gamma=k * peak, sigma_h=sigma_h, sigma_z=sigma_z, K=k, N=exp.N, q=exp.q, Nr=nr,
                epsilon=exp.epsilon, delta=exp.delta, variant=exp.bound_variant,
            )
            rows.append([
                k, nr, inp.gamma_max, exp.epsilon, exp.delta, antenna_bound_symbol(inp),
                antenna_bound_gradient(inp), expected_abs_error_fading(inp), rhs,
            ])
    logger.info(f"bounds: {len(rows)} rows")
    return ResultTable(columns=list(COMMAND_COLUMNS["bounds"]), rows=rows)


def run_latency(exp: ExperimentConfig, progress: bool = False) -> ResultTable:
    """Analog, digital and OFDMA latencies over the (q, k) grid; no simulation involved."""
    moments = uniform_moments(exp.symbol_low, exp.symbol_high)
    rows = []
    for q in exp.q_values:
        for k in exp.k_values:
            report = latency_suite(
                LatencyInput(
                    bandwidth=exp.bandwidth, symbol_time=exp.symbol_time, N=exp.model_size, K=k, Nr=exp.Nr, q=q,
                    sigma_z2=exp.sigma_z2, sigma_h2=exp.sigma_h2, symbol_moments=moments, delta_g=exp.delta_g,
                    subchannels=exp.subchannels, distortion=exp.latency_distortion,
                )
            )
            rows.append([k, report.t_ofdma, report.t_analog, report.t_compfed, report.gamma_ratio, q])
    logger.info(f"latency: {len(rows)} rows")
    return ResultTable(columns=list(COMMAND_COLUMNS["latency"]), rows=rows)


RUNNERS: Dict[str, Callable[..., ResultTable]] = {
    "mse-sweep": run_mse_sweep,
    "train": run_train,
    "bounds": run_bound_tables,
    "latency": run_latency,
}


def run_command(command: str, exp: ExperimentConfig, progress: bool = False) -> ResultTable:
    try:
        runner = RUNNERS[command]
    except KeyError:
        raise ValueError(f"Unknown command {command}")
    return runner(exp, progress=progress)

from typing import Dict, List, Optional, Union

# Command type definition
CommandType = str  # 'mse-sweep' | 'train' | 'bounds' | 'latency'

COMMANDS: List[CommandType] = ["mse-sweep", "train", "bounds", "latency"]

# Define which configuration keys apply to which commands
COMMAND_KEY_MAPPING: Dict[str, List[str]] = {
    "mse-sweep": [
        "seed", "trials", "workers", "K", "N", "Nr", "q", "sigma_h2", "sigma_z2", "p_max", "channel_dist",
        "delta_g", "beta_margin", "sweep", "grad_low", "grad_high", "symbol_low", "symbol_high", "epsilon",
        "delta", "bound_variant", "nr_list", "snr_db_list", "k_list", "frame_size", "output",
    ],
    "train": [
        "seed", "trials", "workers", "K", "Nr", "q", "sigma_h2", "sigma_z2", "p_max", "channel_dist", "delta_g",
        "beta_margin", "aggregator", "model", "hidden", "classes", "feature_dim", "samples_per_class",
        "separation", "dataset", "dataset_dir", "data_mode", "shards", "batch", "local_epochs", "eta", "rounds",
        "frame_size", "output",
    ],
    "bounds": [
        "K", "N", "Nr", "q", "sigma_h2", "sigma_z2", "delta_g", "symbol_low", "symbol_high", "epsilon", "delta",
        "bound_variant", "nr_list", "k_list", "eta", "rounds", "smoothness", "loss_gap", "sigma_ch2",
        "theta_bar", "output",
    ],
    "latency": [
        "K", "Nr", "q", "sigma_h2", "sigma_z2", "delta_g", "symbol_low", "symbol_high", "q_list", "k_list",
        "bandwidth", "symbol_time", "model_size", "subchannels", "latency_distortion", "output",
    ],
}

# CSV columns per command, in output order
COMMAND_COLUMNS: Dict[str, List[str]] = {
    "mse-sweep": [
        "nr", "snr_db", "k", "trials", "mse_empirical", "mse_bound_awgn", "mse_bound_fading", "abs_err_p99",
        "mse_stderr",
    ],
    "train": ["round", "train_loss", "test_acc", "grad_mse", "grad_norm2"],
    "bounds": [
        "k", "nr", "gamma", "epsilon", "delta", "nr_symbol", "nr_gradient", "abs_error_bound", "convergence_rhs",
    ],
    "latency": ["k", "t_ofdma", "t_analog", "t_compfed", "gamma_ratio", "q"],
}

COLUMN_DESCRIPTIONS: Dict[str, str] = {
    "nr": "Receive antennas",
    "snr_db": "SNR in dB, sigma_z2 = (p_max / N) / 10^(snr_db / 10); empty when sigma_z2 is used as set",
    "k": "Devices",
    "trials": "Monte Carlo trials behind the row",
    "mse_empirical": "Mean squared error over trials (symbol sweep: |s_hat - s|^2; gradient sweeps: ||g - g_hat||^2)",
    "mse_bound_awgn": "AWGN prediction (symbol sweep: sigma_z2 / Nr; gradient sweeps: AWGN MSE bound)",
    "mse_bound_fading": "Fading bound (symbol sweep: epsilon(Nr, delta)^2; fading sweep: fading MSE bound)",
    "abs_err_p99": "99th percentile of the absolute per-entry error",
    "mse_stderr": "Standard error of mse_empirical",
    "round": "Communication round, from 0",
    "train_loss": "Training loss after the round's update, averaged over trials",
    "test_acc": "Test accuracy after the round's update, averaged over trials",
    "grad_mse": "||g - g_hat||^2 against the ideal average, averaged over trials",
    "grad_norm2": "||g||^2 of the ideal average, averaged over trials",
    "gamma": "Worst-case symbol magnitude sum K * max|s|",
    "epsilon": "Target error",
    "delta": "Failure probability",
    "nr_symbol": "Antennas for |s_hat - s| <= epsilon with probability 1 - delta",
    "nr_gradient": "Antennas for the gradient error bound at epsilon",
    "abs_error_bound": "Bound on E|s_hat - s| at nr antennas",
    "convergence_rhs": "Bound on the average squared gradient norm over the rounds",
    "t_ofdma": "OFDMA latency (s)",
    "t_analog": "Analog over-the-air latency (s)",
    "t_compfed": "Digital q-QAM over-the-air latency (s)",
    "gamma_ratio": "t_compfed / t_analog",
    "q": "Modulation order",
}

# Define all configuration keys with metadata
CONFIG_KEY_METADATA: Dict[str, Dict[str, Union[str, bool, List[str]]]] = {
    # Keys that apply to every command
    "output": {"displayName": "Output CSV path", "applicableToAllCommands": True},

    # Monte Carlo control
    "seed": {"displayName": "Master seed (u64)", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "train"]},
    "trials": {"displayName": "Trials per grid point (train: seeds averaged)", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "train"]},
    "workers": {"displayName": "Worker processes", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "train"]},

    # System
    "K": {"displayName": "Devices", "applicableToAllCommands": True},
    "N": {"displayName": "Subchannels per frame", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds"]},
    "Nr": {"displayName": "Receive antennas", "applicableToAllCommands": True},
    "q": {"displayName": "Modulation order (power of 4)", "applicableToAllCommands": True},
    "sigma_h2": {"displayName": "Channel variance", "applicableToAllCommands": True},
    "sigma_z2": {"displayName": "Noise variance", "applicableToAllCommands": True},
    "p_max": {"displayName": "Per-device power budget", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "train"]},
    "channel_dist": {"displayName": "Channel law (complex-gaussian | real-gaussian)", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "train"]},

    # Quantizer and power scaling
    "delta_g": {"displayName": "Gradient clip bound", "applicableToAllCommands": True},
    "beta_margin": {"displayName": "Power scaling margin (>= 1)", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "train"]},

    # Sweeps
    "sweep": {"displayName": "Sweep kind (symbol | awgn | fading)", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep"]},
    "grad_low": {"displayName": "Gradient entries drawn from U[grad_low, grad_high]", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep"]},
    "grad_high": {"displayName": "Upper end of the gradient law", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep"]},
    "symbol_low": {"displayName": "Symbols drawn from U[symbol_low, symbol_high]", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds", "latency"]},
    "symbol_high": {"displayName": "Upper end of the symbol law", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds", "latency"]},
    "epsilon": {"displayName": "Target error", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds"]},
    "delta": {"displayName": "Failure probability", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds"]},
    "bound_variant": {"displayName": "Antenna bound variant (stated | noise-scaled)", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds"]},
    "nr_list": {"displayName": "Antenna grid", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds"]},
    "snr_db_list": {"displayName": "SNR grid (dB)", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep"]},
    "q_list": {"displayName": "Modulation order grid", "applicableToAllCommands": False, "commandSpecific": ["latency"]},
    "k_list": {"displayName": "Device count grid", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "bounds", "latency"]},

    # Learning
    "aggregator": {"displayName": "Aggregator (ideal | awgn | fading | analog-awgn | analog-fading)", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "model": {"displayName": "Learner family", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "hidden": {"displayName": "Hidden units (one-hidden-layer-mlp)", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "classes": {"displayName": "Synthetic classes", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "feature_dim": {"displayName": "Synthetic feature dimension", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "samples_per_class": {"displayName": "Synthetic samples per class", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "separation": {"displayName": "Distance between class means", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "dataset": {"displayName": "Dataset (synthetic | idx)", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "dataset_dir": {"displayName": "Directory of IDX files", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "data_mode": {"displayName": "Partition (iid | label-skew)", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "shards": {"displayName": "Label-skew shards per device", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "batch": {"displayName": "Local mini-batch size (empty: whole shard)", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "local_epochs": {"displayName": "Local epochs (0: one gradient)", "applicableToAllCommands": False, "commandSpecific": ["train"]},
    "eta": {"displayName": "Learning rate", "applicableToAllCommands": False, "commandSpecific": ["train", "bounds"]},
    "rounds": {"displayName": "Communication rounds", "applicableToAllCommands": False, "commandSpecific": ["train", "bounds"]},
    "frame_size": {"displayName": "Subchannels per time slot", "applicableToAllCommands": False, "commandSpecific": ["mse-sweep", "train"]},

    # Bound tables
    "smoothness": {"displayName": "Smoothness constant L", "applicableToAllCommands": False, "commandSpecific": ["bounds"]},
    "loss_gap": {"displayName": "Initial loss gap", "applicableToAllCommands": False, "commandSpecific": ["bounds"]},
    "sigma_ch2": {"displayName": "Channel gradient error variance", "applicableToAllCommands": False, "commandSpecific": ["bounds"]},
    "theta_bar": {"displayName": "Mean gradient divergence", "applicableToAllCommands": False, "commandSpecific": ["bounds"]},

    # Latency
    "bandwidth": {"displayName": "Bandwidth (Hz)", "applicableToAllCommands": False, "commandSpecific": ["latency"]},
    "symbol_time": {"displayName": "Symbol duration (s)", "applicableToAllCommands": False, "commandSpecific": ["latency"]},
    "model_size": {"displayName": "Model parameters", "applicableToAllCommands": False, "commandSpecific": ["latency"]},
    "subchannels": {"displayName": "OFDMA sub-bands (empty: one per device)", "applicableToAllCommands": False, "commandSpecific": ["latency"]},
    "latency_distortion": {"displayName": "Digital distortion model (lattice | level)", "applicableToAllCommands": False, "commandSpecific": ["latency"]},
}

ALL_CONFIG_KEYS = list(CONFIG_KEY_METADATA.keys())


def is_key_applicable(key: str, command: Optional[str]) -> bool:
    """
    Determine if a configuration key is read by a command.

    Args:
        key: The configuration key to check
        command: The command, or None if not specified

    Returns:
        bool: True if the key is applicable, False otherwise
    """
    if not command:
        return bool(CONFIG_KEY_METADATA.get(key, {}).get("applicableToAllCommands", False))
    return key in COMMAND_KEY_MAPPING.get(command, [])


def describe_command(command: str) -> str:
    """Help text listing the keys a command reads and the columns it writes."""
    keys = ", ".join(COMMAND_KEY_MAPPING[command])
    columns = "\n".join(f"  {name}: {COLUMN_DESCRIPTIONS[name]}" for name in COMMAND_COLUMNS[command])
    return f"config keys: {keys}\n\nCSV columns:\n{columns}"

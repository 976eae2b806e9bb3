"""
Run configuration of the command-line tool.

Every tunable is declared once in :data:`OPTIONS`; the argument parser, the
config file reader and :class:`RunConfig` are all driven by that table.

Values are resolved in increasing precedence:

1. the defaults in :data:`OPTIONS`,
2. a config file, given with ``--config`` or named by the ``MCSE_CONFIG``
   environment variable,
3. command-line flags.

A config file holds one ``key = value`` pair per line. Keys are the long flag
names without the dashes; ``-`` and ``_`` are interchangeable. ``#`` starts a
comment::

    # MALA with the shipped defaults
    sampler = mala
    burn-in = 5
"""

from dataclasses import dataclass, field
import logging
import os
import typing as tp

from .em import (
    DEFAULT_EM_ITERATIONS,
    DEFAULT_NOISE_SHARE,
    DEFAULT_WARMUP_STEPS,
    EmConfig,
    MstepSamples,
    ZInitPolicy,
)
from .errors import ConfigError
from .noise_nmf import DEFAULT_MSTEP_EXPONENT, DEFAULT_NMF_RANK
from .prior import DEFAULT_HIDDEN_SIZE
from .samplers import (
    DEFAULT_BURN_IN,
    DEFAULT_CHAINS,
    DEFAULT_ETA,
    DEFAULT_K,
    DEFAULT_SIGMA2,
    SAMPLER_KINDS,
    SamplerConfig,
    SamplerKind,
)
from .spectral import DEFAULT_FFT_SIZE, DEFAULT_HOP_SIZE, DEFAULT_WINDOW, StftConfig, WindowName
from .synthetic import DEFAULT_SNR_LADDER

logger = logging.getLogger("Mcse")

CONFIG_ENV = "MCSE_CONFIG"

Command = tp.Literal["enhance", "benchmark", "sampler-diag", "gen-decoder"]
COMMANDS: tuple[Command, ...] = ("enhance", "benchmark", "sampler-diag", "gen-decoder")

_EM = ("enhance", "benchmark")
_SAMPLING = ("enhance", "benchmark", "sampler-diag")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ConfigError(f"Expected comma-separated numbers, got {text!r}") from e
    if not values:
        raise ConfigError("Expected at least one value")
    return values


def _kind_list(text: str) -> tuple[SamplerKind, ...]:
    kinds = tuple(part.strip() for part in text.split(",") if part.strip())
    for kind in kinds:
        if kind not in SAMPLER_KINDS:
            raise ConfigError(f"Unknown sampler {kind!r}, expected one of {SAMPLER_KINDS}")
    if not kinds:
        raise ConfigError("Expected at least one sampler")
    return tp.cast(tuple[SamplerKind, ...], kinds)


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


def _render(value: tp.Any) -> str:
    if isinstance(value, tuple):
        return ",".join(_render(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class Option:
    """One tunable, available as ``--flag`` and as a config file key.

    Args:
        name: attribute name, e.g. ``"burn_in"`` for ``--burn-in``.
        parse: converts the text of a flag or config value.
        default: value when neither file nor flag sets it.
        help: description; the default is appended.
        commands: subcommands accepting the option.
        choices: allowed values, if restricted.
        metavar: placeholder shown in ``--help``.
    """

    name: str
    parse: tp.Callable[[str], tp.Any]
    default: tp.Any
    help: str
    commands: tuple[str, ...]
    choices: tuple[tp.Any, ...] | None = None
    metavar: str | None = None

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    @property
    def list_valued(self) -> bool:
        return isinstance(self.default, tuple)

    @property
    def help_text(self) -> str:
        if self.default is None:
            return self.help
        return f"{self.help} (default: {_render(self.default)})"

    def convert(self, text: str) -> tp.Any:
        """Parse a flag or config file value, raising :class:`ConfigError`."""
        try:
            value = self.parse(text)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid value {text!r} for {self.flag}: {e}") from e
        if self.choices is not None and value not in self.choices:
            raise ConfigError(f"Invalid value {text!r} for {self.flag}, expected one of {self.choices}")
        return value


OPTIONS: tuple[Option, ...] = (
    # input and output
    Option("input", str, None, "noisy input WAV file", ("enhance",), metavar="WAV"),
    Option("output", str, None, "output file", ("enhance", "gen-decoder"), metavar="PATH"),
    Option("decoder", str, None, "decoder weight file", _EM, metavar="PATH"),
    Option("reference", str, None, "clean reference WAV; adds SI-SDR to the report", ("enhance",), metavar="WAV"),
    Option("report", str, None, "write the key=value report here instead of stdout", COMMANDS, metavar="PATH"),
    Option("csv", str, None, "also write the results as CSV", ("benchmark", "sampler-diag"), metavar="PATH"),
    Option("diag", str, None, "write per-step sampler diagnostics", ("enhance", "sampler-diag"), metavar="PATH"),
    Option(
        "plot", str, None, "save a diagnostic figure (needs matplotlib)", ("enhance", "sampler-diag"), metavar="PATH"
    ),
    Option("subtype", str, "PCM_16", "sample format of the enhanced WAV", ("enhance",), choices=("PCM_16", "FLOAT")),
    # sampler
    Option("sampler", str, "ld", "E-step sampler", ("enhance",), choices=SAMPLER_KINDS),
    Option("eta", float, DEFAULT_ETA, "Langevin step size", _SAMPLING),
    Option("sigma2", float, DEFAULT_SIGMA2, "MH proposal and LD initialization variance", _SAMPLING),
    Option(
        "K",
        _optional_int,
        None,
        "sampler steps per E-step (default: {})".format(", ".join(f"{k} {v}" for k, v in DEFAULT_K.items())),
        _EM,
    ),
    Option(
        "burn_in",
        _optional_int,
        None,
        f"discarded MH/MALA steps (default: ld 0, mh {DEFAULT_BURN_IN}, mala {DEFAULT_BURN_IN})",
        _EM,
    ),
    Option("chains", int, DEFAULT_CHAINS, "parallel Langevin chains M", _SAMPLING),
    Option("seed", int, 0, "random seed", COMMANDS),
    # EM
    Option("J", int, DEFAULT_EM_ITERATIONS, "EM iterations", _EM),
    Option("nmf_rank", int, DEFAULT_NMF_RANK, "rank of the NMF noise model", _EM),
    Option("nmf_seed", int, 0, "seed of the NMF initialization", _EM),
    Option("z_init", str, "warmup_ld", "latent initialization", _EM, choices=tp.get_args(ZInitPolicy)),
    Option("warmup_steps", int, DEFAULT_WARMUP_STEPS, "Langevin warm-up steps of --z-init warmup_ld", _EM),
    Option("mstep_samples", str, "all", "samples entering the M-step", _EM, choices=tp.get_args(MstepSamples)),
    Option("mstep_exponent", float, DEFAULT_MSTEP_EXPONENT, "exponent of the multiplicative NMF updates", _EM),
    Option("noise_share", float, DEFAULT_NOISE_SHARE, "initial noise power as a fraction of the mixture power", _EM),
    # STFT
    Option("fft_size", int, DEFAULT_FFT_SIZE, "STFT frame length", ("enhance",)),
    Option("hop_size", int, DEFAULT_HOP_SIZE, "STFT hop size", ("enhance",)),
    Option("window", str, DEFAULT_WINDOW, "STFT window", ("enhance",), choices=("hann", "sqrt_hann")),
    # synthetic data and decoders
    Option("utterances", int, 20, "synthetic utterances per SNR", ("benchmark",)),
    Option("frames", int, 64, "frames per synthetic utterance", ("benchmark",)),
    Option("snr", _float_list, DEFAULT_SNR_LADDER, "comma-separated input SNRs in dB", ("benchmark",), metavar="DB"),
    Option("kinds", _kind_list, SAMPLER_KINDS, "samplers to compare", ("benchmark", "sampler-diag"), metavar="KIND"),
    Option("jobs", int, 1, "utterances processed in parallel", ("benchmark",)),
    Option("arch", str, "gru", "decoder architecture", ("benchmark", "gen-decoder"), choices=("affine_exp", "gru")),
    Option("latent_dim", int, 16, "latent dimension L", ("benchmark", "gen-decoder")),
    Option("freq_dim", int, 513, "frequency bins F", ("benchmark", "gen-decoder")),
    Option("hidden_size", int, DEFAULT_HIDDEN_SIZE, "GRU hidden size", ("benchmark", "gen-decoder")),
    # sampler diagnostics
    Option("steps", int, 10000, "sampler steps on the Gaussian target", ("sampler-diag",)),
    Option("dim", int, 2, "dimension of the Gaussian target", ("sampler-diag",)),
    Option("alpha", float, 0.01, "significance level of the KS verdicts", ("sampler-diag",)),
)

OPTIONS_BY_NAME: dict[str, Option] = {option.name: option for option in OPTIONS}


def options_for(command: str) -> list[Option]:
    return [option for option in OPTIONS if command in option.commands]


def _normalize_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_")
    # J and K keep their case; every other key is lower case.
    return key if key in ("J", "K") else key.lower()


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Raw ``key = value`` pairs of a config file, later lines winning."""
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    values: dict[str, str] = {}
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{number}: expected 'key = value', got {line!r}")
        key = _normalize_key(key)
        if key not in OPTIONS_BY_NAME:
            raise ConfigError(f"{path}:{number}: unknown key {key!r}")
        values[key] = value.strip()
    logger.info("Read %d settings from %s", len(values), path)
    return values


def config_path(explicit: str | None) -> str | None:
    """The config file to read: ``explicit``, else ``$MCSE_CONFIG``, else none."""
    if explicit:
        return explicit
    return os.environ.get(CONFIG_ENV) or None


def resolve_options(
    command: str, file_values: tp.Mapping[str, str] | None = None, flag_values: tp.Mapping[str, tp.Any] | None = None
) -> dict[str, tp.Any]:
    """Merge defaults, config file values and parsed flags for ``command``.

    File keys of options that ``command`` does not take are ignored, so one file
    can configure several commands.
    """
    resolved = {option.name: option.default for option in options_for(command)}
    for key, text in (file_values or {}).items():
        if key in resolved:
            resolved[key] = OPTIONS_BY_NAME[key].convert(text)
    for key, value in (flag_values or {}).items():
        if key in resolved:
            resolved[key] = value
    return resolved


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one command invocation."""

    command: Command
    values: tp.Mapping[str, tp.Any] = field(default_factory=dict)
    em: EmConfig = field(default_factory=EmConfig)
    stft: StftConfig = field(default_factory=StftConfig)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}, expected one of {COMMANDS}")
        if self.command == "enhance":
            for name in ("input", "output", "decoder"):
                if not self.values.get(name):
                    raise ConfigError(f"enhance requires --{name}")
        if self.command == "gen-decoder" and not self.values.get("output"):
            raise ConfigError("gen-decoder requires --output")
        for name in ("utterances", "frames", "jobs", "latent_dim", "freq_dim", "steps", "dim", "chains"):
            value = self.values.get(name)
            if value is not None and value < 1:
                raise ConfigError(f"--{name.replace('_', '-')} must be at least 1, got {value}")
        if self.values.get("arch") == "gru" and self.values.get("hidden_size", 1) < 1:
            raise ConfigError(f"--hidden-size must be at least 1, got {self.values['hidden_size']}")
        if self.values.get("steps", 10) < 10:
            raise ConfigError(f"--steps must be at least 10, got {self.values['steps']}")
        alpha = self.values.get("alpha")
        if alpha is not None and not 0 < alpha < 1:
            raise ConfigError(f"--alpha must lie in (0, 1), got {alpha}")

    @classmethod
    def from_options(cls, command: Command, values: tp.Mapping[str, tp.Any]) -> "RunConfig":
        """Build the typed configs from resolved option values."""
        em = EmConfig()
        if "J" in values:
            sampler = SamplerConfig(
                kind=values.get("sampler", "ld"),
                eta=values["eta"],
                sigma2=values["sigma2"],
                K=values["K"],
                burn_in=values["burn_in"],
                M=values["chains"],
                seed=values["seed"],
            )
            em = EmConfig(
                J=values["J"],
                sampler=sampler,
                nmf_rank=values["nmf_rank"],
                nmf_seed=values["nmf_seed"],
                z_init=values["z_init"],
                warmup_steps=values["warmup_steps"],
                mstep_samples=values["mstep_samples"],
                mstep_exponent=values["mstep_exponent"],
                noise_share=values["noise_share"],
            )
        stft = StftConfig()
        if "fft_size" in values:
            stft = StftConfig(values["fft_size"], values["hop_size"], tp.cast(WindowName, values["window"]))
        return cls(command, dict(values), em, stft)

    def get(self, name: str, default: tp.Any = None) -> tp.Any:
        return self.values.get(name, default)

    def echo(self) -> list[str]:
        """Effective settings as sorted ``key=value`` lines; unset paths are left out.

        With a single ``sampler``, ``K`` and ``burn_in`` appear with its defaults resolved.
        """
        values = dict(self.values)
        if "K" in values and "sampler" in values:
            values["K"] = self.em.sampler.K
            values["burn_in"] = self.em.sampler.burn_in
        return [f"{key}={_render(value)}" for key, value in sorted(values.items()) if value is not None]

"""
Command-line tool.

::

    python -m mcse enhance --input noisy.wav --output enhanced.wav --decoder prior.bin
    python -m mcse benchmark --snr -5,0,5
    python -m mcse sampler-diag --steps 100000
    python -m mcse gen-decoder --output prior.bin --arch gru

Reports are ``key=value`` lines. Keys ending in ``seconds`` or ``rtf`` hold
timings; all other lines are identical between runs with the same settings.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import replace
import logging
import re
import sys
import typing as tp

import numpy as np

from .audio import read_wav, write_wav
from .config import (
    COMMANDS,
    OPTIONS,
    OPTIONS_BY_NAME,
    RunConfig,
    config_path,
    options_for,
    read_config_file,
    resolve_options,
)
from .diagnostics import autocorrelation_time, effective_sample_size, ks_normal, thin
from .em import EnhanceResult, run_em
from .errors import ConfigError, InvalidInputError, McseError
from .logger import set_verbosity
from .metrics import TimingAverage, measure_rtf, si_sdr
from .prior import DecoderModel, generate_decoder_file, load_decoder, random_decoder
from .samplers import GaussianTarget, SamplerConfig, SamplerKind, ld_step, run_sampler, spawn_chains
from .spectral import istft, stft
from .synthetic import Mixture, make_corpus

logger = logging.getLogger("Mcse")

TIMING_SUFFIXES = ("seconds", "rtf")

_DESCRIPTIONS = {
    "enhance": "Enhance a noisy WAV file.",
    "benchmark": "Compare the samplers on synthetic mixtures.",
    "sampler-diag": "Run the samplers on an analytic Gaussian target.",
    "gen-decoder": "Write a seeded random decoder weight file.",
}

_LIST_FLAGS = frozenset(option.flag for option in OPTIONS if option.list_valued)
_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def _attach_list_values(args: list[str]) -> list[str]:
    """Rewrite ``--snr -5,0,5`` as ``--snr=-5,0,5``; argparse reads a bare ``-5,0,5`` as a flag."""
    joined = []
    i = 0
    while i < len(args):
        if args[i] in _LIST_FLAGS and i + 1 < len(args) and _NEGATIVE_VALUE.match(args[i + 1]):
            joined.append(f"{args[i]}={args[i + 1]}")
            i += 2
        else:
            joined.append(args[i])
            i += 1
    return joined


class _Parser(argparse.ArgumentParser):
    def parse_known_args(self, args=None, namespace=None):
        if args is None:
            args = sys.argv[1:]
        return super().parse_known_args(_attach_list_values(list(args)), namespace)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def _argument_type(name: str):
    option = OPTIONS_BY_NAME[name]

    def convert(text: str):
        try:
            return option.convert(text)
        except ConfigError as e:
            raise argparse.ArgumentTypeError(str(e)) from e

    return convert


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcse", description="Speech enhancement with a deep speech prior and MCMC-based EM.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in COMMANDS:
        sub = subparsers.add_parser(
            command,
            help=_DESCRIPTIONS[command],
            description=_DESCRIPTIONS[command],
            argument_default=argparse.SUPPRESS,
        )
        sub.add_argument("--config", metavar="PATH", help="key=value config file (default: $MCSE_CONFIG)")
        for option in options_for(command):
            metavar = option.metavar
            if metavar is None and option.choices is not None:
                metavar = "{" + ",".join(str(c) for c in option.choices) + "}"
            sub.add_argument(
                option.flag, dest=option.name, type=_argument_type(option.name), metavar=metavar, help=option.help_text
            )
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    flags = {name: value for name, value in vars(args).items() if name in OPTIONS_BY_NAME}
    path = config_path(getattr(args, "config", None))
    file_values = read_config_file(path) if path else {}
    return RunConfig.from_options(args.command, resolve_options(args.command, file_values, flags))


def _format(value: tp.Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


class Report(object):
    """Ordered ``key=value`` lines."""

    def __init__(self):
        self.lines: list[tuple[str, str]] = []

    def add(self, key: str, value: tp.Any):
        self.lines.append((key, _format(value)))

    def extend(self, prefix: str, lines: tp.Iterable[str]):
        for line in lines:
            key, _, value = line.partition("=")
            self.lines.append((prefix + key, value))

    def render(self, timing: bool = True) -> str:
        return "".join(
            f"{key}={value}\n" for key, value in self.lines if timing or not key.endswith(TIMING_SUFFIXES)
        )

    def write(self, path: str | None):
        if path is None:
            sys.stdout.write(self.render())
        else:
            with open(path, "w", encoding="utf-8") as f:
                f.write(self.render())


def _write_csv(path: str, header: tp.Sequence[str], rows: tp.Iterable[tp.Sequence[tp.Any]]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(value) for value in row])


def _save_plot(path: str, plot_funs_factory: tp.Callable[[], list]):
    try:
        from .extra import save_figure
    except ImportError:
        logger.warning("matplotlib is not installed, not writing %s", path)
        return
    save_figure(path, plot_funs_factory())


def cmd_enhance(cfg: RunConfig) -> Report:
    """Enhance ``--input`` into ``--output``."""
    noisy = read_wav(cfg.get("input"))
    decoder = load_decoder(cfg.get("decoder"))
    x = stft(noisy, cfg.stft)
    logger.info("Enhancing %s: %d frames, %d bins", cfg.get("input"), x.frames, x.bins)
    result = run_em(x, decoder, cfg.em)
    enhanced = istft(result.s_hat, cfg.stft)
    write_wav(cfg.get("output"), enhanced, cfg.get("subtype"))

    report = Report()
    report.extend("config.", cfg.echo())
    report.add("frames", x.frames)
    report.add("bins", x.bins)
    report.add("samples", len(enhanced))
    report.add("sample_rate", enhanced.sample_rate)
    for j, value in enumerate(result.loglik_trace, start=1):
        report.add(f"loglik.{j}", value)
    if result.acceptance_trace is not None:
        for j, value in enumerate(result.acceptance_trace, start=1):
            report.add(f"acceptance.{j}", value)
    report.add("final_loglik", result.loglik_trace[-1])
    if cfg.get("reference"):
        reference = read_wav(cfg.get("reference"))
        if len(reference) != len(noisy) or reference.sample_rate != noisy.sample_rate:
            raise InvalidInputError("Reference and input differ in length or sample rate")
        report.add("si_sdr_in", si_sdr(noisy, reference))
        report.add("si_sdr_out", si_sdr(enhanced, reference))
    report.add("seconds", result.seconds)
    report.add("rtf", measure_rtf(result.seconds, noisy.duration))

    if cfg.get("diag"):
        _write_enhance_diag(cfg.get("diag"), result)
    if cfg.get("plot"):
        _save_plot(cfg.get("plot"), lambda: _enhance_plot_funs(result))
    return report


def _write_enhance_diag(path: str, result: EnhanceResult):
    with open(path, "w", encoding="utf-8") as f:
        for j, value in enumerate(result.loglik_trace, start=1):
            line = f"iteration={j} loglik={_format(value)}"
            if result.acceptance_trace is not None:
                line += f" acceptance={_format(result.acceptance_trace[j - 1])}"
            f.write(line + "\n")


def _enhance_plot_funs(result: EnhanceResult) -> list:
    from .extra import plot_acceptance_trace, plot_loglik_trace

    funs = [plot_loglik_trace(result.loglik_trace)]
    if result.acceptance_trace is not None:
        funs.append(plot_acceptance_trace({"E-step": result.acceptance_trace}))
    return funs


class _BenchmarkRow(tp.NamedTuple):
    kind: str
    snr_db: float
    utterance: int
    si_sdr_in: float
    si_sdr_out: float
    seconds: float
    rtf: float


def _benchmark_one(task: tuple[str, int, Mixture, DecoderModel, tp.Any]) -> _BenchmarkRow:
    kind, index, mixture, decoder, em = task
    result = run_em(mixture.mixture, decoder, em)
    clean = mixture.clean_waveform
    return _BenchmarkRow(
        kind,
        mixture.snr_db,
        index,
        si_sdr(mixture.waveform(), clean),
        si_sdr(mixture.waveform(result.s_hat), clean),
        result.seconds,
        measure_rtf(result.seconds, clean.duration),
    )


def _sampler_for(cfg: RunConfig, kind: SamplerKind, K: int | None, burn_in: int | None) -> SamplerConfig:
    return SamplerConfig(
        kind=kind,
        eta=cfg.get("eta"),
        sigma2=cfg.get("sigma2"),
        K=K,
        burn_in=burn_in,
        M=cfg.get("chains"),
        seed=cfg.get("seed"),
    )


def cmd_benchmark(cfg: RunConfig) -> Report:
    """Run EM with every sampler on a seeded synthetic corpus."""
    if cfg.get("decoder"):
        decoder = load_decoder(cfg.get("decoder"))
    else:
        decoder = random_decoder(
            cfg.get("arch"), cfg.get("latent_dim"), cfg.get("freq_dim"), cfg.get("hidden_size"), seed=cfg.get("seed")
        )
    corpus = make_corpus(decoder, cfg.get("utterances"), cfg.get("frames"), cfg.get("snr"), seed=cfg.get("seed"))
    tasks = []
    for kind in cfg.get("kinds"):
        em = replace(cfg.em, sampler=_sampler_for(cfg, kind, cfg.get("K"), cfg.get("burn_in")))
        tasks.extend((kind, index, mixture, decoder, em) for index, mixture in enumerate(corpus))

    if cfg.get("jobs") > 1:
        with ProcessPoolExecutor(max_workers=cfg.get("jobs")) as pool:
            rows = list(pool.map(_benchmark_one, tasks))
    else:
        rows = [_benchmark_one(task) for task in tasks]

    report = Report()
    report.extend("config.", cfg.echo())
    rtfs: dict[str, TimingAverage] = {}
    for kind in cfg.get("kinds"):
        rtfs[kind] = TimingAverage()
        for snr in cfg.get("snr"):
            selected = [row for row in rows if row.kind == kind and row.snr_db == snr]
            si_in = float(np.mean([row.si_sdr_in for row in selected]))
            si_out = float(np.mean([row.si_sdr_out for row in selected]))
            prefix = f"{kind}.snr{_format(snr)}"
            report.add(f"{prefix}.si_sdr_in", si_in)
            report.add(f"{prefix}.si_sdr_out", si_out)
            report.add(f"{prefix}.improvement", si_out - si_in)
        for row in rows:
            if row.kind == kind:
                rtfs[kind].update(row.rtf)
        report.add(f"{kind}.rtf", rtfs[kind].mean())
    ordered = sorted(rtfs, key=lambda kind: rtfs[kind].mean())
    report.add("order_by_rtf", "<".join(ordered))
    expected = [kind for kind in ("ld", "mh", "mala") if kind in rtfs]
    report.add("order_as_expected", "yes" if ordered == expected else "no")

    if cfg.get("csv"):
        _write_csv(cfg.get("csv"), _BenchmarkRow._fields, rows)
    return report


def _gaussian_problem(dim: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    mean = rng.normal(size=dim)
    factor = rng.normal(size=(dim, dim)) / np.sqrt(dim)
    cov = 0.5 * factor @ factor.T + 0.5 * np.eye(dim)
    return mean, cov


def _diag_chain(cfg: RunConfig, kind: SamplerKind, target: GaussianTarget):
    """``steps × chains × dim`` states, per-step mean log-density and acceptance."""
    steps = cfg.get("steps")
    z0 = np.zeros((1, target.latent_dim))
    if kind == "ld":
        state = spawn_chains(z0, cfg.get("chains"), cfg.get("sigma2"), cfg.get("seed"))
        history = np.empty((steps, state.chains, target.latent_dim))
        log_density = np.empty(steps)
        for k in range(steps):
            state = ld_step(target, state, cfg.get("eta"), cfg.get("seed"))
            history[k] = state.samples[:, 0]
            log_density[k] = float(np.mean(target.evaluate(state.samples, with_score=False).logdensity))
        return history, log_density, np.ones(steps)
    run = run_sampler(_sampler_for(cfg, kind, steps, 0), target, z0)
    return run.samples[:, :, :], run.log_density, run.acceptance[:, 0].astype(np.float64)


def cmd_sampler_diag(cfg: RunConfig) -> Report:
    """Check every sampler against the moments of a known Gaussian."""
    mean, cov = _gaussian_problem(cfg.get("dim"), cfg.get("seed"))
    target = GaussianTarget.from_posterior(mean, cov, frames=1)
    burn_in = cfg.get("steps") // 10
    report = Report()
    report.extend("config.", cfg.echo())
    traces = {}
    for kind in cfg.get("kinds"):
        history, log_density, accepted = _diag_chain(cfg, kind, target)
        traces[kind] = (log_density, accepted)
        kept = history[burn_in:]
        flat = kept.reshape(-1, kept.shape[-1])
        chains = np.moveaxis(kept, 1, 0)
        report.add(f"{kind}.acceptance", float(np.mean(accepted)))
        report.add(f"{kind}.mean_error", float(np.max(np.abs(flat.mean(axis=0) - mean))))
        empirical = np.atleast_2d(np.cov(flat, rowvar=False))
        report.add(f"{kind}.cov_rel_error", float(np.max(np.abs(empirical - cov)) / np.max(np.abs(cov))))
        report.add(f"{kind}.ess", float(effective_sample_size(chains[..., 0])))
        # at least two draws per chain survive thinning
        every = min(autocorrelation_time(chains[..., 0]), chains.shape[1] // 2)
        thinned = thin(chains[..., 0], max(every, 1), axis=1)
        verdict = ks_normal(thinned, mean[0], float(np.sqrt(cov[0, 0])), cfg.get("alpha"))
        report.extend(f"{kind}.", str(verdict).split(" "))

    if cfg.get("diag"):
        with open(cfg.get("diag"), "w", encoding="utf-8") as f:
            for kind, (log_density, accepted) in traces.items():
                for k in range(log_density.shape[0]):
                    f.write(
                        f"sampler={kind} step={k} "
                        f"logdensity={_format(log_density[k])} accepted={_format(accepted[k])}\n"
                    )
    if cfg.get("csv"):
        rows = (
            (kind, k, log_density[k], accepted[k])
            for kind, (log_density, accepted) in traces.items()
            for k in range(log_density.shape[0])
        )
        _write_csv(cfg.get("csv"), ("sampler", "step", "logdensity", "accepted"), rows)
    if cfg.get("plot"):
        _save_plot(cfg.get("plot"), lambda: _diag_plot_funs(traces))
    return report


def _diag_plot_funs(traces) -> list:
    from .extra import plot_acceptance_trace

    window = 100
    smoothed = {
        kind: np.convolve(accepted, np.ones(window) / window, mode="valid") for kind, (_, accepted) in traces.items()
    }
    return [plot_acceptance_trace(smoothed)]


def cmd_gen_decoder(cfg: RunConfig) -> Report:
    """Write a seeded random decoder."""
    model = generate_decoder_file(
        cfg.get("output"),
        cfg.get("arch"),
        cfg.get("latent_dim"),
        cfg.get("freq_dim"),
        cfg.get("hidden_size"),
        seed=cfg.get("seed"),
    )
    report = Report()
    report.add("path", cfg.get("output"))
    report.add("arch", model.arch)
    report.add("latent_dim", model.latent_dim)
    report.add("freq_dim", model.freq_dim)
    report.add("hidden_size", model.hidden_size)
    return report


COMMAND_HANDLERS: dict[str, tp.Callable[[RunConfig], Report]] = {
    "enhance": cmd_enhance,
    "benchmark": cmd_benchmark,
    "sampler-diag": cmd_sampler_diag,
    "gen-decoder": cmd_gen_decoder,
}


def main(argv: tp.Sequence[str] | None = None) -> int:
    """Run the tool and return its exit code.

    Usage errors exit through :class:`SystemExit` with code 1.
    """
    args = build_parser().parse_args(argv)
    set_verbosity(args.verbose)
    try:
        cfg = load_run_config(args)
        report = COMMAND_HANDLERS[cfg.command](cfg)
        report.write(cfg.get("report"))
    except McseError as e:
        logger.error("%s", e)
        return e.exit_code
    return 0


def runner():
    sys.exit(main())


if __name__ == "__main__":
    runner()

import logging
from dataclasses import dataclass
import typing as tp

import numpy as np
import numpy.typing as npt

from ..errors import ConfigError, NumericalError
from ..prior import LatentSequence
from .kernels import ChainState, Transition, ld_step, mala_transition, mh_transition, spawn_chains
from .target import Evaluation, Target

logger = logging.getLogger("Mcse")

SamplerKind = tp.Literal["ld", "mh", "mala"]
SAMPLER_KINDS: tuple[SamplerKind, ...] = ("ld", "mh", "mala")

DEFAULT_ETA = 0.005
DEFAULT_SIGMA2 = 0.02
DEFAULT_K: dict[str, int] = {"ld": 1, "mh": 10, "mala": 10}
DEFAULT_BURN_IN = 5
DEFAULT_CHAINS = 8


@dataclass(frozen=True)
class SamplerConfig:
    """Hyperparameters of one E-step sampler.

    ``K`` and ``burn_in`` default per kind: one step without burn-in for
    Langevin dynamics, ten steps with a burn-in of five for MH and MALA.

    Args:
        kind: ``"ld"``, ``"mh"`` or ``"mala"``.
        eta: Langevin step size η (LD and MALA).
        sigma2: variance σ² of the LD chain initialization and of the MH proposal.
        K: number of steps.
        burn_in: discarded leading steps (MH and MALA).
        M: number of parallel LD chains.
        seed: root of all random streams.
    """

    kind: SamplerKind = "ld"
    eta: float = DEFAULT_ETA
    sigma2: float = DEFAULT_SIGMA2
    K: int | None = None
    burn_in: int | None = None
    M: int = DEFAULT_CHAINS
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ConfigError(f"Unknown sampler {self.kind!r}, expected one of {SAMPLER_KINDS}")
        if self.K is None:
            object.__setattr__(self, "K", DEFAULT_K[self.kind])
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", 0 if self.kind == "ld" else DEFAULT_BURN_IN)
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if self.K < 1:
            raise ConfigError(f"K must be at least 1, got {self.K}")
        if not 0 <= self.burn_in < self.K:
            raise ConfigError(f"burn_in must lie in [0, K), got {self.burn_in} with K={self.K}")
        if self.M < 1:
            raise ConfigError(f"M must be at least 1, got {self.M}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")

    @property
    def retained(self) -> int:
        """Number of samples :func:`run_sampler` returns."""
        assert self.K is not None and self.burn_in is not None
        return self.M if self.kind == "ld" else self.K - self.burn_in


@dataclass(frozen=True)
class SamplerRun:
    """Output of :func:`run_sampler`.

    Args:
        samples: ``N × T × L`` retained states, the ``M`` final LD chains or the
            ``K - burn_in`` post-burn-in MH/MALA states.
        final_state: the LD chains after the last step, ``None`` for MH/MALA.
        acceptance: ``K × T`` per-step per-frame acceptance mask (MH/MALA).
        log_density: per-step summed log-density, averaged over chains; empty for
            LD unless tracing was requested.
    """

    kind: SamplerKind
    samples: npt.NDArray[np.float64]
    final_state: ChainState | None
    acceptance: npt.NDArray[np.bool_] | None
    log_density: npt.NDArray[np.float64]

    @property
    def acceptance_rate(self) -> float | None:
        if self.acceptance is None:
            return None
        return float(np.mean(self.acceptance))

    @property
    def mean(self) -> LatentSequence:
        return self.samples.mean(axis=0)


def run_sampler(
    cfg: SamplerConfig,
    tg: Target,
    z_init: LatentSequence | ChainState,
    *,
    key: tp.Sequence[int] = (),
    trace: bool = False,
) -> SamplerRun:
    """Run ``cfg.K`` steps of the configured sampler.

    For LD, a latent sequence is first jittered into ``M`` chains by
    :func:`spawn_chains`; a :class:`ChainState` continues as is. For MH and
    MALA, a batch of chains is collapsed to its mean before the first step.

    Args:
        key: prefix of the random-stream keys, e.g. the EM iteration.
        trace: evaluate the log-density after every LD step (costs one extra
            decoder call per step). MH and MALA always record it.
    Raises:
        NumericalError: with the step index at which a non-finite value appeared.
    """
    assert cfg.K is not None and cfg.burn_in is not None
    if cfg.kind == "ld":
        return _run_langevin(cfg, tg, z_init, key, trace)

    z = z_init.samples.mean(axis=0) if isinstance(z_init, ChainState) else np.asarray(z_init, dtype=np.float64)
    if z.ndim == 3:
        z = z.mean(axis=0)
    current: Evaluation | None = None
    retained = []
    acceptance = np.zeros((cfg.K, tg.frames), dtype=bool)
    log_density = np.zeros(cfg.K)
    for k in range(cfg.K):
        try:
            transition: Transition
            if cfg.kind == "mh":
                transition = mh_transition(tg, z, cfg.sigma2, cfg.seed, key=key, step=k, current=current)
            else:
                transition = mala_transition(tg, z, cfg.eta, cfg.seed, key=key, step=k, current=current)
        except NumericalError as e:
            raise e.with_context(step=k) from e
        z, current = transition.z, transition.evaluation
        acceptance[k] = transition.accepted
        log_density[k] = float(current.logdensity)
        if k >= cfg.burn_in:
            retained.append(z)
    logger.debug("%s sampler: acceptance rate %.3f", cfg.kind.upper(), float(np.mean(acceptance)))
    return SamplerRun(cfg.kind, np.stack(retained), None, acceptance, log_density)


def _run_langevin(
    cfg: SamplerConfig, tg: Target, z_init: LatentSequence | ChainState, key: tp.Sequence[int], trace: bool
) -> SamplerRun:
    assert cfg.K is not None
    if isinstance(z_init, ChainState):
        state = z_init
    else:
        state = spawn_chains(z_init, cfg.M, cfg.sigma2, cfg.seed, key)
    log_density = []
    for _ in range(cfg.K):
        state = ld_step(tg, state, cfg.eta, cfg.seed, key=key)
        if trace:
            log_density.append(float(np.mean(tg.evaluate(state.samples, with_score=False).logdensity)))
    return SamplerRun("ld", state.samples, state, None, np.asarray(log_density))

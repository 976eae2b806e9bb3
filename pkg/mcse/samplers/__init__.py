"""
Posterior samplers over latent sequences.

* Langevin dynamics (:func:`ld_step`): ``M`` parallel chains, every step
  accepted.
* Metropolis-Hastings (:func:`mh_step`): Gaussian random-walk proposals,
  accepted or rejected frame by frame.
* MALA (:func:`mala_step`): Langevin proposals with the Metropolis-Hastings
  correction, including the forward and reverse transition densities.

:func:`run_sampler` runs any of them for ``K`` steps according to a
:class:`SamplerConfig`.
"""

from .driver import (
    DEFAULT_BURN_IN,
    DEFAULT_CHAINS,
    DEFAULT_ETA,
    DEFAULT_K,
    DEFAULT_SIGMA2,
    SAMPLER_KINDS,
    SamplerConfig,
    SamplerKind,
    SamplerRun,
    run_sampler,
)
from .kernels import (
    ChainState,
    Transition,
    ld_step,
    mala_step,
    mala_transition,
    mh_step,
    mh_transition,
    spawn_chains,
    stream,
)
from .target import Evaluation, GaussianTarget, SpeechTarget, Target, log_prior_frames


def score(tg: Target, z):
    """Gradient of the target's summed log-density at ``z`` (a sequence or a chain batch)."""
    if isinstance(z, ChainState):
        return tg.score(z.samples)
    return tg.score(z)


__all__ = [
    "ChainState",
    "DEFAULT_BURN_IN",
    "DEFAULT_CHAINS",
    "DEFAULT_ETA",
    "DEFAULT_K",
    "DEFAULT_SIGMA2",
    "Evaluation",
    "GaussianTarget",
    "SAMPLER_KINDS",
    "SamplerConfig",
    "SamplerKind",
    "SamplerRun",
    "SpeechTarget",
    "Target",
    "Transition",
    "ld_step",
    "log_prior_frames",
    "mala_step",
    "mala_transition",
    "mh_step",
    "mh_transition",
    "run_sampler",
    "score",
    "spawn_chains",
    "stream",
]

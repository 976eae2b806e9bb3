"""
Transition kernels.

Langevin dynamics moves every chain with the score of its own full sequence::

    z ← z + (η/2) f(z) + √η ζ

Metropolis-Hastings and MALA propose all frames at once and accept or reject
each frame separately. The acceptance ratio of frame ``t`` compares
``ℓ_t(z̃) + log p(z̃_t)``, with the likelihood evaluated on the full candidate
sequence, against the same quantity at the current state. After the
accept/reject pass the target is evaluated once more on the merged sequence,
which becomes the current state of the next step.

Random streams
--------------

Noise comes from :class:`numpy.random.SeedSequence` streams keyed by
``(purpose, *key, step, chain)``. A chain's draws therefore do not depend on
how many other chains run or in which order they are evaluated. MH and MALA
share a purpose and draw the proposal noise before the uniforms, so for equal
seeds they see identical random numbers.
"""

from dataclasses import dataclass, field
import typing as tp

import numpy as np
import numpy.typing as npt

from ..errors import InvalidInputError, NumericalError
from ..prior import LatentSequence
from .target import Evaluation, Target

_SPAWN = 0
_LANGEVIN = 1
_METROPOLIS = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class ChainState:
    """``M`` parallel chains over ``T × L`` latent sequences.

    Args:
        samples: ``M × T × L`` states.
        step: number of steps taken so far.
        chain_ids: identifier of each chain, keying its random stream.
    """

    samples: npt.NDArray[np.float64]
    step: int = 0
    chain_ids: npt.NDArray[np.int64] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 3 or samples.shape[0] < 1:
            raise InvalidInputError(f"Chain state must be M×T×L with M ≥ 1, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise NumericalError("Chain state contains non-finite values", step=self.step)
        ids = np.arange(samples.shape[0]) if self.chain_ids is None else np.asarray(self.chain_ids, dtype=np.int64)
        if ids.shape != (samples.shape[0],):
            raise InvalidInputError(f"Expected {samples.shape[0]} chain ids, got shape {ids.shape}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "chain_ids", ids)

    @property
    def chains(self) -> int:
        return self.samples.shape[0]

    def permuted(self, order: npt.ArrayLike) -> "ChainState":
        """Same chains, reordered."""
        order = np.asarray(order)
        return ChainState(self.samples[order], self.step, self.chain_ids[order])


class Transition(tp.NamedTuple):
    """Result of one Metropolis-type step."""

    z: LatentSequence
    accepted: npt.NDArray[np.bool_]
    log_ratio: npt.NDArray[np.float64]
    evaluation: Evaluation

    @property
    def alpha(self) -> npt.NDArray[np.float64]:
        """Per-frame acceptance probabilities, in ``[0, 1]``."""
        return _acceptance_probability(self.log_ratio)


def _acceptance_probability(log_ratio: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    # NaN ratios (both densities -inf) reject.
    return np.exp(np.minimum(0.0, np.nan_to_num(log_ratio, nan=-np.inf)))


def _check_sequence(tg: Target, z: npt.ArrayLike) -> LatentSequence:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (tg.frames, tg.latent_dim):
        raise InvalidInputError(f"Expected a {tg.frames}×{tg.latent_dim} latent sequence, got shape {z.shape}")
    return z


def spawn_chains(z0: LatentSequence, M: int, sigma2: float, seed: int, key: tp.Sequence[int] = ()) -> ChainState:
    """``M`` copies of ``z0`` jittered by independent ``N(0, σ² I)`` noise."""
    z0 = np.asarray(z0, dtype=np.float64)
    if M < 1:
        raise InvalidInputError(f"Number of chains must be at least 1, got {M}")
    if sigma2 < 0:
        raise InvalidInputError(f"Initialization variance must be nonnegative, got {sigma2}")
    sigma = np.sqrt(sigma2)
    samples = np.stack([z0 + sigma * stream(seed, _SPAWN, *key, i).standard_normal(z0.shape) for i in range(M)])
    return ChainState(samples)


def ld_step(
    tg: Target,
    st: ChainState,
    eta: float,
    seed: int,
    *,
    key: tp.Sequence[int] = (),
    inject_noise: bool = True,
) -> ChainState:
    """Advance all chains by one Langevin step.

    The score is evaluated for all chains in a single batched call.

    Args:
        inject_noise: with ``False`` the step is the pure gradient move ``z + (η/2) f(z)``.
    """
    if eta < 0:
        raise InvalidInputError(f"Step size must be nonnegative, got {eta}")
    try:
        score = tg.score(st.samples)
    except NumericalError as e:
        raise e.with_context(step=st.step) from e
    noise = np.stack(
        [stream(seed, _LANGEVIN, *key, st.step, chain).standard_normal(st.samples.shape[1:]) for chain in st.chain_ids]
    )
    if not inject_noise:
        noise = np.zeros_like(noise)
    samples = st.samples + 0.5 * eta * score + np.sqrt(eta) * noise
    if not np.all(np.isfinite(samples)):
        raise NumericalError("Non-finite Langevin update", step=st.step)
    return ChainState(samples, st.step + 1, st.chain_ids)


def _proposal_noise(tg: Target, seed: int, key: tp.Sequence[int], step: int, inject_noise: bool):
    rng = stream(seed, _METROPOLIS, *key, step)
    noise = rng.standard_normal((tg.frames, tg.latent_dim))
    uniforms = rng.uniform(size=tg.frames)
    if not inject_noise:
        noise = np.zeros_like(noise)
    return noise, uniforms


def _accept(
    tg: Target,
    z: LatentSequence,
    candidate: LatentSequence,
    log_ratio: npt.NDArray[np.float64],
    uniforms: npt.NDArray[np.float64],
    current: Evaluation,
    proposed: Evaluation,
    with_score: bool,
) -> Transition:
    accepted = uniforms <= _acceptance_probability(log_ratio)
    if np.all(accepted):
        return Transition(candidate, accepted, log_ratio, proposed)
    if not np.any(accepted):
        return Transition(z, accepted, log_ratio, current)
    merged = np.where(accepted[:, None], candidate, z)
    return Transition(merged, accepted, log_ratio, tg.evaluate(merged, with_score=with_score))


def mh_transition(
    tg: Target,
    z: LatentSequence,
    sigma2: float,
    seed: int,
    *,
    key: tp.Sequence[int] = (),
    step: int = 0,
    inject_noise: bool = True,
    current: Evaluation | None = None,
) -> Transition:
    """One Metropolis-Hastings step with a Gaussian random-walk proposal of variance ``σ²``.

    Args:
        current: the target evaluated at ``z``, if already known.
    """
    z = _check_sequence(tg, z)
    if sigma2 < 0:
        raise InvalidInputError(f"Proposal variance must be nonnegative, got {sigma2}")
    if current is None:
        current = tg.evaluate(z, with_score=False)
    noise, uniforms = _proposal_noise(tg, seed, key, step, inject_noise)
    candidate = z + np.sqrt(sigma2) * noise
    proposed = tg.evaluate(candidate, with_score=False)
    log_ratio = proposed.frame_logdensity - current.frame_logdensity
    return _accept(tg, z, candidate, log_ratio, uniforms, current, proposed, with_score=False)


def _log_transition(
    to: LatentSequence, frm: LatentSequence, drift: npt.NDArray[np.float64], eta: float
) -> npt.NDArray[np.float64]:
    # log q(to | frm) per frame, up to a constant
    residual = to - frm - 0.5 * eta * drift
    return -np.sum(residual * residual, axis=-1) / (2.0 * eta)


def mala_transition(
    tg: Target,
    z: LatentSequence,
    eta: float,
    seed: int,
    *,
    key: tp.Sequence[int] = (),
    step: int = 0,
    inject_noise: bool = True,
    drift: bool = True,
    current: Evaluation | None = None,
) -> Transition:
    """One MALA step: Langevin proposal, per-frame Metropolis correction.

    Args:
        drift: with ``False`` the score is replaced by zero in the proposal and in
            both transition densities, which reduces the step to MH with ``σ² = η``.
        current: the target evaluated at ``z`` (with score), if already known.
    """
    z = _check_sequence(tg, z)
    if not eta > 0:
        raise InvalidInputError(f"Step size must be positive, got {eta}")
    if current is None or (drift and current.score is None):
        current = tg.evaluate(z, with_score=drift)
    noise, uniforms = _proposal_noise(tg, seed, key, step, inject_noise)
    forward_drift = current.score if drift else np.zeros_like(z)
    assert forward_drift is not None
    candidate = z + 0.5 * eta * forward_drift + np.sqrt(eta) * noise
    if not np.all(np.isfinite(candidate)):
        raise NumericalError("Non-finite MALA proposal", step=step)
    proposed = tg.evaluate(candidate, with_score=drift)
    reverse_drift = proposed.score if drift else np.zeros_like(z)
    assert reverse_drift is not None

    correction = _log_transition(z, candidate, reverse_drift, eta) - _log_transition(candidate, z, forward_drift, eta)
    log_ratio = (proposed.frame_logdensity - current.frame_logdensity) + correction
    return _accept(tg, z, candidate, log_ratio, uniforms, current, proposed, with_score=drift)


def mh_step(
    tg: Target, z: LatentSequence, sigma2: float, seed: int, *, step: int = 0, inject_noise: bool = True
) -> tuple[LatentSequence, npt.NDArray[np.bool_]]:
    """One Metropolis-Hastings step; returns the new sequence and the per-frame acceptance mask."""
    transition = mh_transition(tg, z, sigma2, seed, step=step, inject_noise=inject_noise)
    return transition.z, transition.accepted


def mala_step(
    tg: Target,
    z: LatentSequence,
    eta: float,
    seed: int,
    *,
    step: int = 0,
    inject_noise: bool = True,
    drift: bool = True,
) -> tuple[LatentSequence, npt.NDArray[np.bool_]]:
    """One MALA step; returns the new sequence and the per-frame acceptance mask."""
    transition = mala_transition(tg, z, eta, seed, step=step, inject_noise=inject_noise, drift=drift)
    return transition.z, transition.accepted

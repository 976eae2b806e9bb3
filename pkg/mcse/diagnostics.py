"""
Chain diagnostics.

Chains of a scalar quantity are passed as ``m_chains × n_iter`` arrays; a
trailing axis holds independent dimensions, each diagnosed separately.

The marginal posterior variance is the usual over-estimate combining the
within-chain variance ``W`` and the between-chain variance ``B``::

    s² = W (n - 1) / n + B / n

The autocorrelation at lag ``t`` is estimated from the variogram,
``ρ_t = 1 - V_t / (2 s²)``, and summed until the sum of two consecutive
estimates turns negative.
"""

import typing as tp

import numpy as np
import numpy.typing as npt
import scipy.stats

from .errors import InvalidInputError


def acceptance_rate(accepted: npt.ArrayLike, axis: int | None = None) -> npt.NDArray[np.float64] | float:
    """Fraction of accepted proposals, overall or along ``axis``.

    With a ``K × T`` mask from :class:`mcse.samplers.SamplerRun`, ``axis=0``
    gives the rate of every frame.
    """
    mask = np.asarray(accepted, dtype=bool)
    if mask.size == 0:
        raise InvalidInputError("No proposals to compute an acceptance rate from")
    if axis is None:
        return float(np.mean(mask))
    return np.mean(mask, axis=axis)


def _chains(x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None]
    if x.ndim != 2 or x.shape[1] < 2:
        raise InvalidInputError(f"Expected m_chains × n_iter samples with n_iter ≥ 2, got shape {x.shape}")
    return x


def gelman_rubin(x: npt.ArrayLike) -> float:
    """Estimate of the marginal posterior variance from one or more chains."""
    x = _chains(x)
    m_chains, n_iter = x.shape
    chain_means = x.mean(axis=1)
    b_over_n = float(np.sum((chain_means - chain_means.mean()) ** 2) / (m_chains - 1)) if m_chains > 1 else 0.0
    w = float(np.sum((x - chain_means[:, None]) ** 2) / (m_chains * (n_iter - 1)))
    return w * (n_iter - 1) / n_iter + b_over_n


def rhat(x: npt.ArrayLike) -> float:
    """Potential scale reduction factor ``sqrt(s² / W)``; close to 1 for mixed chains."""
    x = _chains(x)
    m_chains, n_iter = x.shape
    if m_chains < 2:
        raise InvalidInputError("R-hat needs at least two chains")
    w = float(np.sum((x - x.mean(axis=1, keepdims=True)) ** 2) / (m_chains * (n_iter - 1)))
    if w == 0.0:
        raise InvalidInputError("Chains have zero within-chain variance")
    return float(np.sqrt(gelman_rubin(x) / w))


def autocorrelation_time(x: npt.ArrayLike) -> float:
    """Integrated autocorrelation time ``1 + 2 Σ ρ_t`` of ``m_chains × n_iter`` samples."""
    x = _chains(x)
    m_chains, n_iter = x.shape
    post_var = gelman_rubin(x)
    if not post_var > 0:
        raise InvalidInputError("Chains have zero variance")

    rho_sum = 0.0
    previous = 1.0
    for t in range(1, n_iter):
        diff = x[:, t:] - x[:, : n_iter - t]
        rho = 1.0 - float(np.sum(diff * diff)) / (m_chains * (n_iter - t)) / (2.0 * post_var)
        if t % 2 == 0 and previous + rho < 0:
            break
        rho_sum += rho
        previous = rho
    return max(1.0 + 2.0 * rho_sum, 1.0 / (m_chains * n_iter))


def effective_sample_size(x: npt.ArrayLike) -> float | npt.NDArray[np.float64]:
    """Number of independent draws the chains are worth.

    Args:
        x: ``m_chains × n_iter`` samples, or ``m_chains × n_iter × d`` for ``d``
            dimensions at once.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return np.array([effective_sample_size(x[..., i]) for i in range(x.shape[-1])])
    chains = _chains(x)
    return chains.size / autocorrelation_time(chains)


def thin(samples: npt.ArrayLike, every: int | float, axis: int = 0) -> npt.NDArray[np.float64]:
    """Every ``ceil(every)``-th sample along ``axis``, e.g. thinned by the autocorrelation time."""
    step = int(np.ceil(every))
    if step < 1:
        raise InvalidInputError(f"Thinning interval must be at least 1, got {every}")
    samples = np.asarray(samples)
    index: list[tp.Any] = [slice(None)] * samples.ndim
    index[axis] = slice(None, None, step)
    return samples[tuple(index)]


class KsVerdict(tp.NamedTuple):
    statistic: float
    pvalue: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.pvalue >= self.alpha

    def __str__(self):
        verdict = "pass" if self.passed else "fail"
        return f"ks_statistic={self.statistic:.6g} ks_pvalue={self.pvalue:.6g} ks_verdict={verdict}"


def ks_normal(samples: npt.ArrayLike, mean: float = 0.0, std: float = 1.0, alpha: float = 0.01) -> KsVerdict:
    """Kolmogorov-Smirnov test of (approximately independent) samples against ``N(mean, std²)``."""
    samples = np.ravel(np.asarray(samples, dtype=np.float64))
    if samples.size < 2:
        raise InvalidInputError("KS test needs at least two samples")
    if not std > 0:
        raise InvalidInputError(f"Standard deviation must be positive, got {std}")
    result = scipy.stats.kstest(samples, scipy.stats.norm(loc=mean, scale=std).cdf)
    return KsVerdict(float(result.statistic), float(result.pvalue), alpha)

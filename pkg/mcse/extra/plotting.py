import os
import typing as tp

import numpy as np
import numpy.typing as npt
import scipy.stats
from matplotlib.axes import Axes
from matplotlib.figure import Figure

PlotFun = tp.Callable[[Axes], None]


def plot_loglik_trace(trace: npt.ArrayLike, label: str | None = None) -> PlotFun:
    """
    A plot function drawing a log-likelihood trace against the EM iteration.

    Requires `matplotlib <https://matplotlib.org/stable/>`_.

    Example::

        from mcse.extra import plot_loglik_trace, save_figure

        save_figure("trace.png", [plot_loglik_trace(result.loglik_trace)])

    Args:
        trace: one value per iteration.
        label: legend entry.
    """
    values = np.asarray(trace, dtype=np.float64)

    def plot_fun(ax: Axes):
        ax.plot(np.arange(1, values.shape[0] + 1), values, label=label)
        ax.set_xlabel("iteration")
        ax.set_ylabel("log-likelihood")
        if label is not None:
            ax.legend()

    return plot_fun


def plot_acceptance_trace(rates: tp.Mapping[str, npt.ArrayLike]) -> PlotFun:
    """Acceptance rate per step (or per EM iteration), one line per sampler."""

    def plot_fun(ax: Axes):
        for name, values in rates.items():
            values = np.asarray(values, dtype=np.float64)
            ax.plot(np.arange(values.shape[0]), values, label=name)
        ax.set_ylim(0.0, 1.05)
        ax.set_xlabel("step")
        ax.set_ylabel("acceptance rate")
        ax.legend()

    return plot_fun


def plot_latent_histogram(
    samples: npt.ArrayLike, mean: float | None = None, std: float | None = None, bins: int = 50
) -> PlotFun:
    """Histogram of scalar samples, overlaid with the ``N(mean, std²)`` density when given."""
    values = np.ravel(np.asarray(samples, dtype=np.float64))

    def plot_fun(ax: Axes):
        ax.hist(values, bins=bins, density=True, alpha=0.6)
        if mean is not None and std is not None:
            grid = np.linspace(mean - 4 * std, mean + 4 * std, 200)
            ax.plot(grid, scipy.stats.norm.pdf(grid, loc=mean, scale=std))
        ax.set_xlabel("z")

    return plot_fun


def save_figure(path: str | os.PathLike, plot_funs: tp.Sequence[PlotFun], width: float = 6.0) -> Figure:
    """Draw each plot function on its own row of Axes and save the figure to ``path``."""
    figure = Figure(figsize=(width, 3.0 * len(plot_funs)))
    axes = figure.subplots(len(plot_funs), 1, squeeze=False)
    for ax, plot_fun in zip(axes[:, 0], plot_funs):
        plot_fun(ax)
    figure.tight_layout()
    figure.savefig(path)
    return figure

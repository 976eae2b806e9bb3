from .plotting import (
    PlotFun,
    plot_acceptance_trace,
    plot_latent_histogram,
    plot_loglik_trace,
    save_figure,
)

__all__ = ["PlotFun", "plot_acceptance_trace", "plot_latent_histogram", "plot_loglik_trace", "save_figure"]

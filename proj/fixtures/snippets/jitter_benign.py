# jitter points for plotting only
x_plot = x + rng.normal(0.0, 0.01, len(x))

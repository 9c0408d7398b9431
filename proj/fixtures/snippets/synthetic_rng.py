rng = np.random.default_rng(7)
ef_values = rng.normal(55.0, 8.0, 60)

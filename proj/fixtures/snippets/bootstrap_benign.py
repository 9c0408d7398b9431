# bootstrap CI for the median difference
deltas = []
for b in range(2000):
    idx = np.random.randint(0, n, n)
    deltas.append(np.median(values[idx]) - observed)

# permutation test on group labels
for i in range(5000):
    shuffled = np.random.choice(labels, size=len(labels), replace=False)
    null_stats.append(stat(shuffled))

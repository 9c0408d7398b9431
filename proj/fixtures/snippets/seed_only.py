np.random.seed(42)
df = pd.read_csv("measurements.csv")

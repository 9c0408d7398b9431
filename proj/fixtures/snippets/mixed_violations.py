import numpy as np

measurements = np.random.uniform(50, 200, 80)
p = 0.01
print("p =", p)

import numpy as np

n = 40
lv_volumes = np.random.normal(120.0, 15.0, n)
groups = ["DCM"] * (n // 2) + ["NOR"] * (n // 2)

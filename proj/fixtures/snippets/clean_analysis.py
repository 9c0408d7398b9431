import pandas as pd
from scipy import stats

df = pd.read_csv("/data/measurements.csv")
dcm = df[df.group == "DCM"].lv_ef
nor = df[df.group == "NOR"].lv_ef
u, p_value = stats.mannwhitneyu(dcm, nor, alternative="two-sided")
n1, n2 = len(dcm), len(nor)
rank_biserial = 1.0 - 2.0 * u / (n1 * n2)
print({"p_value": p_value, "effect_size": rank_biserial})

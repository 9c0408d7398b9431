from scipy import stats

u, p_value = stats.mannwhitneyu(a, b, alternative="two-sided")
if p_value < 0.05:
    print("significant")
elif p_value == 0.05:
    print("boundary")

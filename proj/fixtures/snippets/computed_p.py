res = stats.spearmanr(x, y)
p_value = res.pvalue
effect = res.statistic

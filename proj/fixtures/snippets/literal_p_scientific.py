# significance reported from a prior run
pval = 1e-5
print(pval)

df = simulate_cohort(n=100, effect=0.8)
run_test(df)

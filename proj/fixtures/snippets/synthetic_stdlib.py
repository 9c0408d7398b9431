import random

ages = [random.gauss(60, 10) for _ in range(50)]

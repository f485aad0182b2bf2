"""Push a semidensity through a point map and compare Laplacians on both sides."""
import random

from oddsymp import Semidensity, VarContext, delta_sharp, format_superfunction, random_superfunction
from oddsymp.verify import SuiteConfig, random_point_map, verify_suite

rng = random.Random(3)
ctx = VarContext.named(2)
s = Semidensity(random_superfunction(rng, ctx, 0, 2, 2, 3, use_aux=False))
print("s         =", format_superfunction(s.coeff))
print("Delta# s  =", format_superfunction(delta_sharp(s).coeff))

for rec in verify_suite(SuiteConfig(n=2, trials=30, seed=3), ["covariance", "delta-q-commutes"]):
    print(f"{rec.id:20s} trials={rec.trials} failures={rec.failures}")

"""
Fitting the code to who receives what
=====================================

Three sinks get one description, four get two, one gets all three. The
profile that minimizes average Gaussian distortion spends most of the rate on
the first level and nothing on the third.
"""

import numpy as np

from jnsc import OptimizationProblem, PetProfile, gaussian_drf, objective, optimize_profile
from jnsc.pet import level_distortions

problem = OptimizationProblem([1, 1, 1, 2, 2, 2, 2, 3], rate=1.0)
y, value = optimize_profile(problem, 3)
print("optimal profile:", np.round(y, 4), "average distortion:", round(value, 5))
print("uniform profile would give:", round(objective(np.full(3, 1 / 3), problem), 5))
print("distortion by descriptions received:", np.round(level_distortions(PetProfile(tuple(y)), gaussian_drf), 4))

# more well-connected sinks push mass to the higher levels
for share in (0.25, 0.5, 0.75):
    n3 = int(share * 20)
    q = [1] * (20 - n3) + [3] * n3
    y, _ = optimize_profile(OptimizationProblem(q), 3)
    print(f"{share:.0%} of sinks see all three: y = {np.round(y, 3)}")

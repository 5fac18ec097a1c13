"""Two different covariates can both give the same proportional odds model.

The joint table f(y, x1, x2) = f(x1) f(y | x1) f(x2 | y) is built so that
Y | X1 and Y | X2 follow the same proportional odds model. Without an
environment the model class alone cannot tell the cause X1 from the effect X2.
"""

import numpy as np

from tramicp import TramSpec, fit
from tramicp.dgp import COUNTER_BETA, COUNTER_THETA, counterexample_table, polr_conditional, sample_counterexample

T = counterexample_table()
cond = polr_conditional()
print("P(Y = k | X = j) of the model (rows j):")
print(np.array2string(cond, precision=4))
for j, axes in ((1, 2), (2, 1)):
    implied = (T.sum(axis=axes) / T.sum(axis=(0, axes))).T
    print(f"max deviation of Y | X{j} from the model: {np.max(np.abs(implied - cond)):.1e}")

data = sample_counterexample(10_000, np.random.default_rng(2024))
spec = TramSpec.from_family("polr")
truth = np.r_[COUNTER_THETA, COUNTER_BETA[1:]]
print(f"\ntrue (theta1, theta2, beta2, beta3): {np.round(truth, 3)}")
for j in (0, 1):
    X = np.column_stack([data.X[:, j] == 2, data.X[:, j] == 3]).astype(float)
    m = fit(spec, data.response, X)
    print(f"fit on X{j + 1}:                        {np.round(np.r_[m.theta.theta[:2], m.beta], 3)}")

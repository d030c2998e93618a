"""Independent reference computations written with plain loops.

They follow the definitions directly (explicit Bayes updates over a finite
hypothesis set) and share no code with the package's estimators.
"""

import math


def h(p):
    return -sum(x * math.log(x) for x in p if x > 0)


def predictive(weights, table, x):
    c = len(table[0][x])
    return [sum(w * table[i][x][k] for i, w in enumerate(weights)) for k in range(c)]


def bayes(weights, table, x, y):
    post = [w * table[i][x][y] for i, w in enumerate(weights)]
    z = sum(post)
    return [v / z for v in post]


def bald_by_updates(weights, table, x):
    """E_{p(y|x)}[H(theta) - H(theta | x, y)] by enumerating y."""
    prior_h = h(weights)
    total = 0.0
    for y, py in enumerate(predictive(weights, table, x)):
        if py > 0:
            total += py * (prior_h - h(bayes(weights, table, x, y)))
    return total


def epig_by_updates(weights, table, x, targets):
    """Mean over target inputs of E_{p(y|x)}[H(y*|x*) - H(y*|x*, x, y)]."""
    total = 0.0
    for xs in targets:
        prior_h = h(predictive(weights, table, xs))
        for y, py in enumerate(predictive(weights, table, x)):
            if py > 0:
                total += py * (prior_h - h(predictive(bayes(weights, table, x, y), table, xs)))
    return total / len(targets)


def expected_log_lik_after(weights, table, x, targets):
    """Mean over targets of E_{p(y|x) p(y*|x*,x,y)}[log p(y*|x*,x,y)]."""
    total = 0.0
    for xs in targets:
        for y, py in enumerate(predictive(weights, table, x)):
            if py > 0:
                post = predictive(bayes(weights, table, x, y), table, xs)
                total += py * sum(q * math.log(q) for q in post if q > 0)
    return total / len(targets)

"""Plain-arithmetic reference implementations used to cross-check the library.

Everything here works on the JSON-dict form of a model (io.model_to_dict) and
uses only the math module: explicit sums and products in linear space, no
arrays, no log-sum-exp. Sizes must stay tiny; the point is an independent
derivation of the same quantities, not performance. Missing cells are
represented by None; variables absent from an evidence dict contribute
nothing.
"""

import math

MODEL_MISSING = "model_missing"
IGNORE_MISSING = "ignore_missing"


def density(entry, x):
    """Density or mass of one observed value under one distribution dict."""
    family = entry["family"]
    if family == "gaussian":
        m, v = entry["mean"], entry["variance"]
        return math.exp(-(x - m) ** 2 / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
    if family == "inflated_gamma":
        t, k, s = entry["zero_prob"], entry["shape"], entry["scale"]
        if x == 0:
            return t
        return (1.0 - t) * x ** (k - 1.0) * math.exp(-x / s) / (s ** k * math.gamma(k))
    if family == "quantized_gaussian":
        m, v = entry["mean"], entry["variance"]
        weights = [math.exp(-(d - m) ** 2 / (2.0 * v)) for d in entry["domain"]]
        return weights[entry["domain"].index(x)] / sum(weights)
    if family == "categorical":
        return entry["probs"][entry["domain"].index(x)]
    raise ValueError(family)


def factor(entry, q, value, mode):
    """One variable's contribution to a component's likelihood."""
    if value is None:
        return q if mode == MODEL_MISSING else 1.0
    f = density(entry, value)
    return (1.0 - q) * f if mode == MODEL_MISSING else f


def component_terms(model, evidence, mode):
    """Per-component joint terms w_z * prod_v factor over the evidence variables."""
    names = [var["name"] for var in model["variables"]]
    terms = []
    for z, w in enumerate(model["weights"]):
        term = w
        for j, name in enumerate(names):
            if name not in evidence:
                continue
            term *= factor(model["components"][z][j], model["missing_probs"][z][j],
                           evidence[name], mode)
        terms.append(term)
    return terms


def joint_likelihood(model, evidence, mode):
    return sum(component_terms(model, evidence, mode))


def posterior(model, evidence, mode):
    terms = component_terms(model, evidence, mode)
    total = sum(terms)
    return [t / total for t in terms]


def conditional(model, evidence, target, mode):
    """Predictive vector over the finite domain of one target variable."""
    post = posterior(model, evidence, mode)
    names = [var["name"] for var in model["variables"]]
    j = names.index(target)
    domain = model["variables"][j]["domain"]
    return [sum(post[z] * density(model["components"][z][j], d)
                for z in range(len(post)))
            for d in domain]


def confidence(model, evidence, mode):
    """Evidence likelihood c (linear space); evidence maps names to values/None."""
    return joint_likelihood(model, evidence, mode)

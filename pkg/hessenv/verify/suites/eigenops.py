import numpy as np

from ...eigen_ops import f_eval, f_grad, sigma_m
from ...oracles import fd_check, sigma_bruteforce
from ..sampling import catalog, cone_points
from ..types import CheckOutcome, PropertySpec


def check_monotonicity(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """f(λ + t e_i) > f(λ) for t > 0, and every f_i > 0."""
    worst = None
    failures = 0
    for op in catalog():
        lam = cone_points(op, rng, samples)
        i = rng.integers(0, op.n, samples)
        t = rng.uniform(1e-3, 2.0, samples)
        bumped = lam.copy()
        bumped[np.arange(samples), i] += t
        diff = np.asarray(f_eval(op, bumped)) - np.asarray(f_eval(op, lam))
        grad_min = f_grad(op, lam).min(axis=-1)
        bad = (diff <= 0) | (grad_min <= 0)
        failures += int(bad.sum())
        if bad.any() and worst is None:
            k = int(np.argmax(bad))
            worst = {"operator": str(op), "lambda": lam[k].tolist(), "i": int(i[k])}
    return CheckOutcome(failures == 0, {"failures": failures}, worst)


def check_concavity(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """f(sλ + (1-s)λ') >= s f(λ) + (1-s) f(λ') - 1e-10 on segments in the cone."""
    worst_gap = 0.0
    worst = None
    for op in catalog():
        a = cone_points(op, rng, samples)
        b = cone_points(op, rng, samples)
        s = rng.uniform(0, 1, (samples, 1))
        mid = np.asarray(f_eval(op, s * a + (1 - s) * b))
        chord = s[:, 0] * np.asarray(f_eval(op, a)) + (1 - s[:, 0]) * np.asarray(f_eval(op, b))
        gap = chord - mid
        k = int(np.argmax(gap))
        if gap[k] > worst_gap:
            worst_gap = float(gap[k])
            worst = {"operator": str(op), "a": a[k].tolist(), "b": b[k].tolist()}
    return CheckOutcome(worst_gap <= 1e-10, {"max_violation": worst_gap}, worst)


def check_gradient(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """f_grad against central differences, relative error <= 1e-6."""
    worst_err = 0.0
    worst = None
    for op in catalog():
        for lam in cone_points(op, rng, samples, margin=0.1):
            err = fd_check(op, lam)
            if err > worst_err:
                worst_err = err
                worst = {"operator": str(op), "lambda": lam.tolist()}
    return CheckOutcome(worst_err <= 1e-6, {"max_relative_error": worst_err}, worst)


def check_symmetry(rng: np.random.Generator, samples: int) -> CheckOutcome:
    worst_err = 0.0
    for op in catalog():
        lam = cone_points(op, rng, samples)
        perm = rng.permuted(np.tile(np.arange(op.n), (samples, 1)), axis=1)
        shuffled = np.take_along_axis(lam, perm, axis=1)
        a = np.asarray(f_eval(op, lam))
        b = np.asarray(f_eval(op, shuffled))
        err = float((np.abs(a - b) / (1.0 + np.abs(a))).max())
        worst_err = max(worst_err, err)
    return CheckOutcome(worst_err <= 1e-12, {"max_relative_error": worst_err})


def check_sigma(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """
    σ_m against subset enumeration on [-5, 5]^5, and σ_m(tλ) = t^m σ_m(λ).
    """
    lam = rng.uniform(-5.0, 5.0, (samples, 5))
    t = rng.uniform(0.1, 3.0, samples)
    worst_brute = 0.0
    worst_homog = 0.0
    worst = None
    for m in range(1, 6):
        fast = np.asarray(sigma_m(lam, m))
        for k in range(samples):
            err = abs(fast[k] - sigma_bruteforce(lam[k], m)) / (1.0 + abs(fast[k]))
            if err > worst_brute:
                worst_brute = err
                worst = {"lambda": lam[k].tolist(), "m": m}
        scaled = np.asarray(sigma_m(t[:, None] * lam, m))
        scale = 1.0 + t**m * np.asarray(sigma_m(np.abs(lam), m))
        worst_homog = max(worst_homog, float((np.abs(scaled - t**m * fast) / scale).max()))
    return CheckOutcome(
        worst_brute <= 1e-12 and worst_homog <= 1e-12,
        {"max_bruteforce_error": worst_brute, "max_homogeneity_error": worst_homog},
        worst,
    )


def check_growth(rng: np.random.Generator, samples: int) -> CheckOutcome:
    """For σ below sup f, f(tλ) > σ at t = 1e6."""
    failures = 0
    worst = None
    for op in catalog():
        lam = cone_points(op, rng, samples)
        base = np.asarray(f_eval(op, lam))
        target = base + rng.uniform(0.0, 10.0, samples)
        bad = np.asarray(f_eval(op, 1e6 * lam)) <= target
        failures += int(bad.sum())
        if bad.any() and worst is None:
            worst = {"operator": str(op), "lambda": lam[int(np.argmax(bad))].tolist()}
    return CheckOutcome(failures == 0, {"failures": failures}, worst)


tests: list[PropertySpec] = [
    {"name": "monotonicity", "check": check_monotonicity, "samples": 1000, "seed": 1},
    {"name": "concavity", "check": check_concavity, "samples": 1000, "seed": 2},
    {"name": "gradient-consistency", "check": check_gradient, "samples": 200, "seed": 3},
    {"name": "symmetry", "check": check_symmetry, "samples": 1000, "seed": 4},
    {"name": "sigma-m", "check": check_sigma, "samples": 10_000, "seed": 5},
    {"name": "growth", "check": check_growth, "samples": 1000, "seed": 6},
]

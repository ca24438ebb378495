"""High-precision reference values for the modified Mittag-Leffler function

    E_a(z) = sum_k z^k Gamma(a)^k / Gamma(a k + 1)

and its derivative, by direct series summation in extended precision.
The working precision is raised until the cancellation in the alternating
series is absorbed. Prints C++ initializer rows {alpha, z, E, E'}.
"""
import mpmath as mp


def modified_ml(a, z):
    a, z = mp.mpf(a), mp.mpf(z)
    x = z * mp.gamma(a)
    # Largest term is about exp(|x|^(1/a)); keep 30 digits beyond it.
    mp.mp.dps = int(abs(float(x)) ** (1.0 / float(a)) / 2.3) + 40
    a, z = mp.mpf(a), mp.mpf(z)
    x = z * mp.gamma(a)
    s = mp.mpf(0)
    d = mp.mpf(0)
    k = 0
    while True:
        t = x**k / mp.gamma(a * k + 1)
        s += t
        if k > 0:
            d += k * x ** (k - 1) * mp.gamma(a) / mp.gamma(a * k + 1)
        if k > 10 and abs(t) < mp.mpf(10) ** (-mp.mp.dps + 5) * max(1, abs(s)):
            break
        k += 1
        if k > 100000:
            raise RuntimeError("no convergence")
    return s, d


if __name__ == "__main__":
    cases = [(0.3, 1), (0.3, -1), (0.3, -3), (0.5, 1), (0.5, -1), (0.5, -5), (0.5, -10),
             (0.5, 2.5), (0.7, 1), (0.7, -1), (0.7, -5), (0.7, -10), (0.7, 4), (0.9, -10),
             (0.9, 2), (0.5, 0.25), (0.7, -0.3)]
    for a, z in cases:
        e, d = modified_ml(a, z)
        print("    {%s, %s, %s, %s}," % (a, z, mp.nstr(e, 17), mp.nstr(d, 17)))

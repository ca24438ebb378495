"""Reference values of the symmetric stable density with characteristic
function exp(-|t|^alpha).

After t = u^(1/alpha) the integrand decays like exp(-u); quadrature over the
half periods of the cosine up to u = 60 converges to well below double
precision. The first piece carries the u^(1/alpha - 1) endpoint singularity
and uses tanh-sinh. For alpha < 1 the tail expansion converges everywhere
and is summed directly at 150 digits as a second route.

    python3 tools/oracles/stable_density.py
"""
import mpmath as mp

mp.mp.dps = 40
U_MAX = 60


def density_quad(alpha, x):
    alpha = mp.mpf(alpha)
    x = mp.mpf(x)
    p = 1 / alpha

    def f(u):
        return mp.cos(x * u ** p) * mp.exp(-u) * p * u ** (p - 1)

    pts = {mp.mpf(0), mp.mpf(U_MAX)}
    pts.update(mp.mpf(u) for u in range(1, U_MAX))
    if x > 0:
        k = 1
        while (k * mp.pi / x) ** alpha < U_MAX:
            pts.add((k * mp.pi / x) ** alpha)
            k += 1
    pts = sorted(pts)
    total = mp.quad(f, [pts[0], pts[1]], method="tanh-sinh")
    for a, b in zip(pts[1:-1], pts[2:]):
        total += mp.quad(f, [a, b], method="gauss-legendre")
    return total / mp.pi


def density_series(alpha, x, terms=3000):
    with mp.workdps(150):
        alpha = mp.mpf(alpha)
        x = mp.mpf(x)
        s = mp.mpf(0)
        for k in range(1, terms):
            s += (-1) ** (k + 1) * mp.exp(mp.loggamma(alpha * k + 1) - mp.loggamma(k + 1) - (alpha * k + 1) * mp.log(x)) * mp.sin(mp.pi * alpha * k / 2)
        return s / mp.pi


if __name__ == "__main__":
    for alpha in ("0.5", "0.8", "1.2", "1.5", "1.8"):
        print("// x = 0 closed form %s" % mp.nstr(mp.gamma(1 + 1 / mp.mpf(alpha)) / mp.pi, 17))
        for x in ("0", "0.3", "1", "2.5", "7", "20"):
            v = density_quad(alpha, x)
            extra = ""
            if float(alpha) < 1 and float(x) > 0:
                extra = "  // series %s" % mp.nstr(density_series(alpha, x), 17)
            print("{%s, %s, %s},%s" % (alpha, x, mp.nstr(v, 17), extra), flush=True)

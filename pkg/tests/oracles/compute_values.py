"""Independent high-precision reference values frozen into the test suite.

Run with ``python tests/oracles/compute_values.py``; uses mpmath only, no
package code.
"""
import mpmath as mp

mp.mp.dps = 40


def sphere_amp(x):
    x = mp.mpf(x)
    return 3 * (mp.sin(x) - x * mp.cos(x)) / x**3


def ellipsoid(q, r_eq, aspect):
    r_p = aspect * r_eq

    def f(a):
        r = mp.sqrt(r_eq**2 * mp.sin(a) ** 2 + r_p**2 * mp.cos(a) ** 2)
        return sphere_amp(q * r) ** 2 * mp.sin(a)

    return mp.quad(f, [0, mp.pi / 4, mp.pi / 2])


def ellipsoid_panels(q, r_eq, aspect, panels):
    r_p = aspect * r_eq

    def f(a):
        r = mp.sqrt(r_eq**2 * mp.sin(a) ** 2 + r_p**2 * mp.cos(a) ** 2)
        return sphere_amp(q * r) ** 2 * mp.sin(a)

    return mp.quad(f, mp.linspace(0, mp.pi / 2, panels + 1))


def sinc(x):
    return mp.mpf(1) if x == 0 else mp.sin(x) / x


def bessel_ratio(u):
    return mp.mpf(1) if u == 0 else 2 * mp.besselj(1, u) / u


def cylinder(q, radius, length, gamma=0, panels=40):
    def f(a):
        u = q * radius * mp.sin(a)
        if gamma == 0:
            radial = bessel_ratio(u)
        else:
            radial = (bessel_ratio(u) - gamma**2 * bessel_ratio(gamma * u)) / (1 - gamma**2)
        return (sinc(q * length * mp.cos(a) / 2) * radial) ** 2 * mp.sin(a)

    pts = mp.linspace(0, mp.pi / 2, panels + 1)
    return mp.quad(f, pts)


def poly_sphere(q, radius, pd, n=2001):
    sigma = pd * radius
    xs = [radius - 3 * sigma + 6 * sigma * i / (n - 1) for i in range(n)]
    # composite trapezoid weights on a uniform grid
    ws = [mp.exp(-((x - radius) / sigma) ** 2 / 2) for x in xs]
    ws[0] /= 2
    ws[-1] /= 2
    num = sum(w * sphere_amp(q * x) ** 2 for w, x in zip(ws, xs))
    return num / sum(ws)


def main():
    print("J1(1.8411838) =", mp.nstr(mp.besselj(1, mp.mpf("1.8411838")), 20))
    print("first zero of J1 =", mp.nstr(mp.besseljzero(1, 1), 20))
    g = mp.quad(lambda t: t**1.5 * mp.exp(-t), [0, mp.mpf("1.3")])
    print("gamma(2.5, 1.3) =", mp.nstr(g, 20))
    print("root tan x = x =", mp.nstr(mp.findroot(lambda x: mp.tan(x) - x, 4.49), 20))
    print("sphere q=0.1 R=30 =", mp.nstr(sphere_amp(mp.mpf(3)) ** 2, 20))
    print("prolate Req=10 aspect=3 q=0.2 =", mp.nstr(ellipsoid(mp.mpf("0.2"), 10, 3), 20))
    print("cylinder R=5 L=200 q=0.05 =", mp.nstr(cylinder(mp.mpf("0.05"), 5, 200), 20))
    print("hollow gamma=0.5 R=10 L=100 q=0.1 =",
          mp.nstr(cylinder(mp.mpf("0.1"), 10, 100, mp.mpf("0.5")), 20))
    # high q * size: many oscillations per quarter turn, so many panels
    mp.mp.dps = 20
    print("cylinder R=10 L=1000 q=1 =", mp.nstr(cylinder(mp.mpf(1), 10, 1000, panels=400), 20))
    print("prolate Req=80 aspect=5 q=2 =", mp.nstr(ellipsoid_panels(mp.mpf(2), 80, 5, 400), 20))
    mp.mp.dps = 40
    print("poly sphere R=30 pd=0.1 q=0.15 =", mp.nstr(poly_sphere(mp.mpf("0.15"), 30, mp.mpf("0.1")), 20))


if __name__ == "__main__":
    main()

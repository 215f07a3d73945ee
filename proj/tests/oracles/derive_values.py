"""Independent high-precision evaluation of the values frozen in the unit tests.

Re-implements the profiles and the closed-form fields with mpmath at 40
digits, differentiates numerically with mpmath.diff and integrates with
mpmath.quad, sharing no code with the C++ library.  Run:

    python3 tests/oracles/derive_values.py
"""

import mpmath as mp

mp.mp.dps = 40


def flat_exp(t):
    return mp.exp(-1 / t) if t > 0 else mp.mpf(0)


def smooth_step(t):
    if t <= 0:
        return mp.mpf(0)
    if t >= 1:
        return mp.mpf(1)
    a, b = flat_exp(t), flat_exp(1 - t)
    return a / (a + b)


def plateau(x):
    if x <= 0.5 or x >= 2:
        return mp.mpf(0)
    if x < 1:
        return smooth_step((x - mp.mpf(0.5)) * 2)
    if x <= 1.5:
        return mp.mpf(1)
    return smooth_step((2 - x) * 2)


def f(x):
    return (x - mp.mpf(1.25)) * plateau(x)


def g(x):
    if x <= 1 or x >= 1.5:
        return mp.mpf(0)
    y = (x - mp.mpf(1.25)) * 4
    return mp.exp(1 - 1 / (1 - y * y))


def params(s, eps, mu, mode, n_override=None, ring_scale=4):
    s, eps, mu = mp.mpf(s), mp.mpf(eps), mp.mpf(mu)
    smax = mp.mpf(2.5) if mode == "euler" else mp.mpf(0.5)
    b = (smax - s) / 100
    nu = mu ** (1 - b)
    N = mp.mpf(n_override) if n_override is not None else max(10 / s, mp.mpf(100))
    tstar = eps ** (-N - 2) * mu ** (-2 + s) / mp.sqrt(nu)
    A = eps**2 * mu ** (1 - s) * mp.sqrt(nu)
    return dict(s=s, eps=eps, mu=mu, b=b, nu=nu, N=N, tstar=tstar, A=A, r0=ring_scale / nu)


def show(name, value):
    print(f"{name} = {mp.nstr(value, 17)}")


def main():
    # Profiles.
    for x in (0.8, 1.1, 1.3, 1.9):
        x = mp.mpf(x)
        for k in range(3):
            show(f"f^({k})({x})", mp.diff(f, x, k))
    for x in (1.1, 1.3):
        x = mp.mpf(x)
        for k in range(4):
            show(f"g^({k})({x})", mp.diff(g, x, k))
    show("int_{1/2}^{2} f'^2 / x", mp.quad(lambda x: mp.diff(f, x) ** 2 / x, [0.5, 1, 1.5, 2]))
    show("int_{1}^{2} f'^2 / x", mp.quad(lambda x: mp.diff(f, x) ** 2 / x, [1, 1.5, 2]))

    # Parameters.
    p = params(0.5, 0.5, 64, "euler")
    show("nu(mu=64, s=0.5)", p["nu"])
    p = params(0.5, 0.9, 64, "euler", n_override=2)
    show("t*(s=0.5, eps=0.9, mu=64, N=2)", p["tstar"])
    show("A(s=0.5, eps=0.9, mu=64)", p["A"])

    # Initial data L^2 norm at (s, eps, mu) = (0.5, 0.5, 16), inviscid, in the
    # polar chart: u_theta = A g sin, u_r = -A f' sin, u_z = A f' cos + (A/mu) f / r.
    p = params(0.5, 0.5, 16, "euler")
    A, mu, r0 = p["A"], p["mu"], p["r0"]

    def density(rho, phi):
        x = mu * rho
        fp = mp.diff(f, x)
        r = r0 + rho * mp.cos(phi)
        ut = A * g(x) * mp.sin(phi)
        ur = -A * fp * mp.sin(phi)
        uz = A * fp * mp.cos(phi) + (A / mu) * f(x) / r
        return (ut**2 + ur**2 + uz**2) * r * rho

    mp.mp.dps = 20
    inner = lambda rho: mp.quad(lambda phi: density(rho, phi), [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi])
    total = 2 * mp.pi * mp.quad(inner, [m / mu for m in (0.5, 1, 1.25, 1.5, 2)])
    show("||u0||_L2 (s=0.5, eps=0.5, mu=16)", mp.sqrt(total))
    mp.mp.dps = 40

    # Pressure at mu rho = 1.2 for the same parameters: -A^2 int_{1.2}^{2} f'^2 / x dx.
    show("pbar(mu rho = 1.2)", -(A**2) * mp.quad(lambda x: mp.diff(f, x) ** 2 / x, [1.2, 1.5, 2]))


if __name__ == "__main__":
    main()

# Frequency-domain reference values for the finite-time single-mode
# coefficients D(t) = int_0^t C^A cos(w tau), F(t) = (1/w) int_0^t C^A sin(w tau).
import mpmath as mp
mp.mp.dps = 30

def J(W, g, L):
    return 2*g/mp.pi * W * L**2 / (L**2 + W**2)

def coth(x):
    return mp.cosh(x)/mp.sinh(x)

def sinc_t(x, t):
    return t if x == 0 else mp.sin(x*t)/x

def vers_t(x, t):
    return 0 if x == 0 else (1 - mp.cos(x*t))/x

def DF(t, w, g, L, kT):
    n = lambda W: J(W, g, L) * (coth(W/(2*kT)) if kT > 0 else 1)
    fd = lambda W: n(W) * 0.5 * (sinc_t(W + w, t) + sinc_t(W - w, t))
    ff = lambda W: n(W) * 0.5 * (vers_t(w + W, t) + vers_t(w - W, t)) / w
    pts = [0, w / 2, w, 2 * w, L / 4, L, 4 * L]
    pts = sorted(set(pts))
    D = mp.quad(fd, pts) + mp.quadosc(fd, [pts[-1], mp.inf], omega=t)
    F = mp.quad(ff, pts) + mp.quadosc(ff, [pts[-1], mp.inf], omega=t)
    return D, F

cases = [(0.3, 1.0, 0.05, 20.0, 0.5), (2.0, 1.0, 0.05, 20.0, 0.5), (6.0, 1.0, 0.01, 10.0, 2.0),
         (1.5, 1.7, 0.02, 30.0, 10.0), (4.0, 1.3, 0.05, 15.0, 0.1)]
for c in cases:
    D, F = DF(*c)
    print(f"    ({c[0]}, {c[1]}, {c[2]}, {c[3]}, {c[4]}, {mp.nstr(D, 17)}, {mp.nstr(F, 17)}),".replace(":?",""))

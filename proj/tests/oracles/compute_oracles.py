#!/usr/bin/env python3
"""Independent numpy evaluation of the closed-form expressions used by the
C++ tests. Run once; the printed values are frozen into tests/*.cpp.

Everything here is written directly from the textbook formulas and never
imports or calls the C++ library.
"""
import numpy as np

MU0 = 4e-7 * np.pi


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def field(r, m, mhat):
    r = np.asarray(r, float)
    n = np.linalg.norm(r)
    return MU0 * m / (4 * np.pi * n**5) * (3 * np.outer(r, r) - (r @ r) * np.eye(3)) @ mhat


def force(r, ma, mahat, mc, mchat):
    r = np.asarray(r, float)
    n = np.linalg.norm(r)
    k = 3 * MU0 * ma * mc / (4 * np.pi * n**7)
    return k * (np.outer(mchat, mahat) @ r * (r @ r)
                + np.outer(mahat, mchat) @ r * (r @ r)
                + (mchat @ ((r @ r) * np.eye(3) - 5 * np.outer(r, r)) @ mahat) * r)


def unit(v):
    return v / np.linalg.norm(v)


def angles_of(w):
    return np.arctan2(w[1], w[0]) % (2 * np.pi), np.arcsin(w[2])


def geometry_r(d, alpha, beta, wdc):
    tz, ty = angles_of(wdc)
    return d * (rot_z(tz) @ rot_y(-ty) @ rot_x(beta) @ rot_y(alpha) @ np.array([0, 0, -1.0]))


def plane_normal(r, wdc):
    # p_a - H with p_c at origin: p_a = -r
    pa = -r
    ph = pa - (pa @ wdc) * wdc
    return unit(np.cross(wdc, ph))


def full_force(d, alpha, beta, wdc, theta, ma, mc):
    r = geometry_r(d, alpha, beta, wdc)
    rh = unit(r)
    wa = unit((3 * np.outer(rh, rh) - np.eye(3)) @ wdc)
    az, ay = angles_of(wa)
    mahat = rot_z(az) @ rot_y(-ay) @ rot_x(theta) @ np.array([0, 0, 1.0])
    b = field(r, ma, mahat)
    mchat = unit(b - (b @ wdc) * wdc)
    f = force(r, ma, mahat, mc, mchat)
    return f, r


def lateral(d, alpha, beta, wdc, theta, ma, mc):
    f, r = full_force(d, alpha, beta, wdc, theta, ma, mc)
    return f @ plane_normal(r, wdc)


np.set_printoptions(precision=17)
print("# magnetics")
d = 0.15
a10 = np.deg2rad(10)
r = np.array([0.026, 0.0, -0.147])
print("field(alpha10 example, m=145, +z) =", repr(field(r, 145.0, np.array([0, 0, 1.0]))))

Vs = np.pi * 0.05**3 / 6
ma = 1.32 * Vs / MU0
Vr = np.pi * (0.0064**2 - 0.0045**2) * 0.015
mc = 1.26 * Vr / MU0
print("sphere moment =", repr(ma))
print("ring moment   =", repr(mc))

# torque example: alpha = 10 deg geometry, theta_ax = 90 deg, capsule moment
# along +y (perpendicular to heading +x and to the field plane is not assumed).
wdc = np.array([1.0, 0, 0])
rr = geometry_r(d, a10, 0.0, wdc)
rh = unit(rr)
wa = unit((3 * np.outer(rh, rh) - np.eye(3)) @ wdc)
az, ay = angles_of(wa)
mahat = rot_z(az) @ rot_y(-ay) @ rot_x(np.pi / 2) @ np.array([0, 0, 1.0])
b = field(rr, ma, mahat)
mchat = np.array([0, 0, 1.0])
print("torque(alpha10, theta90, mc=+z) =", repr(mc * np.cross(mchat, b)))

print("# actuation")
print("unit_vector(pi/4, pi/6) =", repr(rot_z(np.pi / 4) @ rot_y(-np.pi / 6) @ np.array([1.0, 0, 0])))
print("r(alpha10)   =", repr(rr))
print("p_a(alpha10) =", repr(-rr))
print("omega_a(alpha10) =", repr(wa))
print("theta_az, theta_ay =", az, ay)

# capsule moment direction at 45 deg
bc = np.array([1.0, 1.0, 0.0]) * 1e-3
wc = np.array([1.0, 0, 0])
print("m_c(45deg) =", repr(unit(bc - (bc @ wc) * wc)))


def approx_error(theta_ar, n=10_000):
    f0, _ = full_force(d, a10, 0.0, wdc, np.pi, 1.0, 1.0)
    th = np.linspace(np.pi - theta_ar, np.pi + theta_ar, n)
    return max(np.linalg.norm(full_force(d, a10, 0.0, wdc, t, 1.0, 1.0)[0] - f0) for t in th) / np.linalg.norm(f0)


print("approx_error(pi/6) =", repr(approx_error(np.pi / 6)))


def mean_normal(theta_ar, alpha, n=100_000):
    # midpoint rule on |f_l| over [pi - theta_ar, pi + theta_ar]
    h = 2 * theta_ar / n
    th = np.pi - theta_ar + (np.arange(n) + 0.5) * h
    acc = 0.0
    for t in th:
        acc += abs(lateral(d, alpha, 0.0, wdc, t, ma, mc))
    return acc / n


print("mean_normal(90deg, alpha0)  =", repr(mean_normal(np.pi / 2, 0.0)))
print("mean_normal(90deg, alpha10) =", repr(mean_normal(np.pi / 2, a10)))

print("# sensing")
xs = np.arange(8) * 0.06
ys = np.arange(10) * 0.06
sensors = [np.array([x, y, 0.0]) for x in xs for y in ys]  # x-major
pc = np.array([0.24, 0.21, 0.10])
mdir = unit(np.array([1.0, 0.0, 0.0]))
for idx in (0, 27, 79):
    print("reading[%d] =" % idx, repr(field(sensors[idx] - pc, mc, mdir)))

print("# sim.closed_loop_update composition")
pc = np.array([0.13, 0.27, 0.10])
rr = geometry_r(d, a10, 0.0, wdc)
print("command position =", repr(pc - rr))
print("command axis     =", repr(unit((3 * np.outer(unit(rr), unit(rr)) - np.eye(3)) @ wdc)))

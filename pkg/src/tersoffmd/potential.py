"""Tersoff bond-order potential: parameters and the potential math.

Energy model (per ordered pair i->j within the cutoff):

    V_ij = f_C(r_ij) * [ f_R(r_ij) + b_ij * f_A(r_ij) ]
    f_R(r) = A exp(-lambda1 r)
    f_A(r) = -B exp(-lambda2 r)
    f_C(r) = 1                                   r <= R - D
             1/2 - 1/2 sin(pi (r-R) / (2 D))     |r - R| < D
             0                                   r >= R + D
    b_ij   = (1 + (beta zeta_ij)^eta)^(-1/(2 eta))
    zeta_ij = sum_{k != i,j} f_C(r_ik) g(cos theta_ijk) exp((lambda3 (r_ij - r_ik))^m)
    g(cos) = gamma (1 + c^2/d^2 - c^2/(d^2 + (h - cos)^2))

The total energy is the plain sum of V_ij over ordered pairs (see
docs/math_notes.md for conventions, stability rewrites, and derivative
formulas). g is evaluated in the cancellation-free form
gamma*(1 + c^2 x^2 / (d^2 (d^2 + x^2))) with x = h - cos.

Every function exists in two mirrored forms: a scalar form used by the
reference/scalar kernels (pass ``xm=math`` for double, ``xm=numpy`` with
float32 inputs for single precision) and a ``*_lanes`` form over the SIMD
layer. The two share expression trees operation for operation, so a strict
width-1 lane run reproduces the scalar result bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = 0.5 * math.pi
NEG_QUARTER_PI = -0.25 * math.pi
ZETA_TINY = 1e-30  # below this, d b/d zeta is forced to 0 (eta < 1 blowup)

PAIR_FIELDS = ("R", "D", "A", "lam1", "B", "lam2", "beta", "eta")
TRIP_FIELDS = ("R", "D", "gamma", "c", "d", "h", "lam3", "m")


@dataclass(frozen=True)
class TersoffParams:
    """One parameter entry (one element triple) of a Tersoff table.

    Field names follow the 17-token file format: m, gamma, lam3, c, d, h,
    eta, beta, lam2, B, R, D, lam1, A. R and D are the cutoff midpoint and
    half-width in Angstrom; energies in eV, inverse lengths in 1/Angstrom.
    """

    m: int
    gamma: float
    lam3: float
    c: float
    d: float
    h: float
    eta: float
    beta: float
    lam2: float
    B: float
    R: float
    D: float
    lam1: float
    A: float

    def __post_init__(self):
        if self.m not in (1, 3):
            raise ValueError(f"m must be 1 or 3, got {self.m}")
        if not self.A > 0:
            raise ValueError("A must be positive")
        if not self.B > 0:
            raise ValueError("B must be positive")
        if not self.D > 0:
            raise ValueError("D must be positive")
        if not self.R > self.D:
            raise ValueError("R must exceed D")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.d == 0:
            raise ValueError("d must be nonzero")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def r_cut(self):
        return self.R + self.D


class ParamTable:
    """Complete parameter table: one TersoffParams per ordered species triple.

    The (i,j) pair factors and bond-order constants come from entry
    (i,j,j); the zeta term for triple (i,j,k) reads entry (i,j,k).
    """

    def __init__(self, species, entries):
        self.species = tuple(species)
        s = len(self.species)
        if s == 0:
            raise ValueError("no species")
        missing = [(a, b, c) for a in range(s) for b in range(s)
                   for c in range(s) if (a, b, c) not in entries]
        if missing:
            names = ", ".join("-".join(self.species[x] for x in t)
                              for t in missing[:4])
            raise ValueError(f"incomplete table, missing triples: {names}")
        self.entries = dict(entries)
        self.r_cut = max(p.r_cut for p in entries.values())
        self._views = {}

    @property
    def nspecies(self):
        return len(self.species)

    def entry(self, ti, tj, tk):
        return self.entries[(ti, tj, tk)]

    def pair_entry(self, ti, tj):
        return self.entries[(ti, tj, tj)]

    def species_index(self, name):
        try:
            return self.species.index(name)
        except ValueError:
            raise KeyError(f"species {name!r} not in parameter table") from None

    # ---- kernel views, cached per precision ---------------------------

    def _build_views(self, precision):
        s = self.nspecies
        conv = float if precision == "double" else np.float32
        pair_sc = []
        pair_mat = np.empty((s * s, len(PAIR_FIELDS)), dtype=np.float64)
        for ti in range(s):
            for tj in range(s):
                p = self.pair_entry(ti, tj)
                row = (p.R, p.D, p.A, p.lam1, p.B, p.lam2, p.beta, p.eta)
                pair_mat[ti * s + tj] = row
                pair_sc.append(tuple(conv(x) for x in row))
        trip_sc = []
        trip_mat = np.empty((s * s * s, len(TRIP_FIELDS)), dtype=np.float64)
        for ti in range(s):
            for tj in range(s):
                for tk in range(s):
                    p = self.entry(ti, tj, tk)
                    trip_mat[(ti * s + tj) * s + tk] = (
                        p.R, p.D, p.gamma, p.c, p.d, p.h, p.lam3, float(p.m))
                    trip_sc.append((conv(p.R), conv(p.D), conv(p.gamma),
                                    conv(p.c), conv(p.d), conv(p.h),
                                    conv(p.lam3), p.m))
        dtype = np.float64 if precision == "double" else np.float32
        return {
            "pair_scalar": pair_sc,
            "trip_scalar": trip_sc,
            "pair_matrix": np.ascontiguousarray(pair_mat, dtype=dtype),
            "trip_matrix": np.ascontiguousarray(trip_mat, dtype=dtype),
        }

    def views(self, precision):
        if precision not in self._views:
            self._views[precision] = self._build_views(precision)
        return self._views[precision]


# ======================================================================
# scalar forms
# ======================================================================

def f_cutoff(r, R, D, xm=math):
    """Smooth cutoff taper. Returns (value, d/dr); exactly (1,0)/(0,0) on
    the plateaus, C1 at both joins."""
    if r <= R - D:
        return 1.0, 0.0
    if r >= R + D:
        return 0.0, 0.0
    a = HALF_PI * ((r - R) / D)
    return 0.5 - 0.5 * xm.sin(a), (NEG_QUARTER_PI / D) * xm.cos(a)


def f_repulsive(r, A, lam1, xm=math):
    """A exp(-lambda1 r) and its r-derivative."""
    fr = A * xm.exp(-lam1 * r)
    return fr, -lam1 * fr


def f_attractive(r, B, lam2, xm=math):
    """-B exp(-lambda2 r) and its r-derivative (value is negative)."""
    fa = -B * xm.exp(-lam2 * r)
    return fa, -lam2 * fa


def g_angle(cos_theta, gamma, c, d, h):
    """Angular weight g(cos) and dg/dcos, in cancellation-free form."""
    x = h - cos_theta
    x2 = x * x
    c2 = c * c
    d2 = d * d
    den = d2 + x2
    gv = gamma * (1.0 + c2 * x2 / (d2 * den))
    dgv = (-2.0 * gamma) * c2 * x / (den * den)
    return gv, dgv


def bond_order(zeta, beta, eta, xm=math):
    """b(zeta) = (1+(beta zeta)^eta)^(-1/(2 eta)) and d b/d zeta.

    For zeta below ZETA_TINY the derivative is defined as 0: with eta < 1
    the analytic derivative diverges while its force contribution vanishes
    (it is always multiplied by f_C f_A db terms of bounded weight).
    """
    t = beta * zeta
    u = xm.pow(t, eta)
    b = xm.pow(1.0 + u, -0.5 / eta)
    if zeta < ZETA_TINY:
        return b, 0.0
    db = (-0.5 * beta) * xm.pow(t, eta - 1.0) * xm.pow(1.0 + u, -0.5 / eta - 1.0)
    return b, db


def _zeta_value(dxj, dyj, dzj, rij, dxk, dyk, dzk, rik,
                R, D, gamma, c, d, h, lam3, m, xm=math):
    # value-only twin of _zeta_parts; expression trees must stay identical
    fc, _ = f_cutoff(rik, R, D, xm)
    inv_rij = 1.0 / rij
    inv_rik = 1.0 / rik
    ejx = dxj * inv_rij
    ejy = dyj * inv_rij
    ejz = dzj * inv_rij
    ekx = dxk * inv_rik
    eky = dyk * inv_rik
    ekz = dzk * inv_rik
    cost = ejx * ekx + ejy * eky + ejz * ekz
    cost = min(1.0, max(-1.0, cost))
    gv, _ = g_angle(cost, gamma, c, d, h)
    t = lam3 * (rij - rik)
    arg = t * t * t if m == 3 else t
    return fc * gv * xm.exp(arg)


def _zeta_parts(dxj, dyj, dzj, rij, dxk, dyk, dzk, rik,
                R, D, gamma, c, d, h, lam3, m, xm=math):
    """zeta term for one (i,j,k): value plus gradients w.r.t. x_j and x_k.

    dx*/dy*/dz* are displacement components x_j - x_i and x_k - x_i. The
    x_i gradient is -(gj + gk) (translation invariance), composed by the
    caller. Returns (val, gjx, gjy, gjz, gkx, gky, gkz).
    """
    fc, dfc = f_cutoff(rik, R, D, xm)
    inv_rij = 1.0 / rij
    inv_rik = 1.0 / rik
    ejx = dxj * inv_rij
    ejy = dyj * inv_rij
    ejz = dzj * inv_rij
    ekx = dxk * inv_rik
    eky = dyk * inv_rik
    ekz = dzk * inv_rik
    cost = ejx * ekx + ejy * eky + ejz * ekz
    cost = min(1.0, max(-1.0, cost))
    gv, dgv = g_angle(cost, gamma, c, d, h)
    t = lam3 * (rij - rik)
    if m == 3:
        arg = t * t * t
        darg = (3.0 * lam3) * (t * t)
    else:
        arg = t
        darg = lam3
    ex = xm.exp(arg)
    val = fc * gv * ex
    dval_drij = val * darg
    dval_drik = dfc * gv * ex - val * darg
    dval_dcos = fc * dgv * ex
    # dcos/dx_j = (e_ik - cos e_ij)/r_ij ; dcos/dx_k = (e_ij - cos e_ik)/r_ik
    gjx = dval_drij * ejx + dval_dcos * ((ekx - cost * ejx) * inv_rij)
    gjy = dval_drij * ejy + dval_dcos * ((eky - cost * ejy) * inv_rij)
    gjz = dval_drij * ejz + dval_dcos * ((ekz - cost * ejz) * inv_rij)
    gkx = dval_drik * ekx + dval_dcos * ((ejx - cost * ekx) * inv_rik)
    gky = dval_drik * eky + dval_dcos * ((ejy - cost * eky) * inv_rik)
    gkz = dval_drik * ekz + dval_dcos * ((ejz - cost * ekz) * inv_rik)
    return val, gjx, gjy, gjz, gkx, gky, gkz


def _pair_parts(r, zeta, R, D, A, lam1, B, lam2, beta, eta, xm=math):
    """Pair factors for one (i,j): (V, dV/dr at fixed zeta, dV/dzeta)."""
    fc, dfc = f_cutoff(r, R, D, xm)
    fr, dfr = f_repulsive(r, A, lam1, xm)
    fa, dfa = f_attractive(r, B, lam2, xm)
    b, db = bond_order(zeta, beta, eta, xm)
    inner = fr + b * fa
    v = fc * inner
    dv_dr = dfc * inner + fc * (dfr + b * dfa)
    delta_zeta = fc * fa * db
    return v, dv_dr, delta_zeta


# ---- public wrappers over the raw forms --------------------------------

@dataclass(frozen=True)
class TripletGeometry:
    """Geometry of one (i,j,k) triple: distances, unit vectors, cos(theta).

    e_ij points from i to j; cos_theta is the angle at i between e_ij and
    e_ik. Unit vectors must be normalized to 1e-12.
    """

    r_ij: float
    r_ik: float
    cos_theta: float
    e_ij: np.ndarray
    e_ik: np.ndarray

    def __post_init__(self):
        for e in (self.e_ij, self.e_ik):
            n = float(np.dot(e, e))
            if abs(n - 1.0) > 1e-12:
                raise ValueError(f"unit vector has |e|^2 = {n}")
        if not -1.0 <= self.cos_theta <= 1.0:
            raise ValueError("cos_theta outside [-1, 1]")

    @classmethod
    def from_displacements(cls, d_ij, d_ik):
        d_ij = np.asarray(d_ij, dtype=float)
        d_ik = np.asarray(d_ik, dtype=float)
        r_ij = float(np.linalg.norm(d_ij))
        r_ik = float(np.linalg.norm(d_ik))
        e_ij = d_ij / r_ij
        e_ik = d_ik / r_ik
        cos = min(1.0, max(-1.0, float(np.dot(e_ij, e_ik))))
        return cls(r_ij, r_ik, cos, e_ij, e_ik)


def zeta_term(geom, p, xm=math):
    """zeta contribution of one triple and its position gradients.

    Returns (value, d/dx_i, d/dx_j, d/dx_k); the x_i gradient is the exact
    negative sum of the other two.
    """
    d_ij = geom.e_ij * geom.r_ij
    d_ik = geom.e_ik * geom.r_ik
    val, gjx, gjy, gjz, gkx, gky, gkz = _zeta_parts(
        d_ij[0], d_ij[1], d_ij[2], geom.r_ij,
        d_ik[0], d_ik[1], d_ik[2], geom.r_ik,
        p.R, p.D, p.gamma, p.c, p.d, p.h, p.lam3, p.m, xm)
    gj = np.array([gjx, gjy, gjz])
    gk = np.array([gkx, gky, gkz])
    return val, -(gj + gk), gj, gk


def pair_energy_force(r_ij, e_ij, zeta_ij, p, xm=math):
    """Energy and pair-force pieces of one ordered (i,j) bond.

    Returns (energy, dV_dxi, dV_dxj, delta_zeta): dV_dxi/dV_dxj are the
    position gradients of V at fixed zeta (pure pair term, acting along
    e_ij with dV_dxi = -dV_dxj); delta_zeta = dV/d zeta feeds the second
    force pass. Forces accumulate as F -= dV_dx.
    """
    v, dv_dr, delta_zeta = _pair_parts(
        r_ij, zeta_ij, p.R, p.D, p.A, p.lam1, p.B, p.lam2, p.beta, p.eta, xm)
    e = np.asarray(e_ij, dtype=float)
    dv_dxj = dv_dr * e
    return v, -dv_dxj, dv_dxj, delta_zeta


# ======================================================================
# lane forms (mirror the scalar expression trees exactly)
# ======================================================================

def f_cutoff_lanes(bk, r, R, D):
    a = HALF_PI * ((r - R) / D)
    taper = 0.5 - 0.5 * bk.sin(a)
    dtaper = (NEG_QUARTER_PI / D) * bk.cos(a)
    plateau = r <= R - D
    beyond = r >= R + D
    fc = bk.where(plateau, 1.0, bk.where(beyond, 0.0, taper))
    dfc = bk.where(plateau | beyond, 0.0, dtaper)
    return fc, dfc


def f_repulsive_lanes(bk, r, A, lam1):
    fr = A * bk.exp(-lam1 * r)
    return fr, -lam1 * fr


def f_attractive_lanes(bk, r, B, lam2):
    fa = -B * bk.exp(-lam2 * r)
    return fa, -lam2 * fa


def g_angle_lanes(bk, cos_theta, gamma, c, d, h):
    x = h - cos_theta
    x2 = x * x
    c2 = c * c
    d2 = d * d
    den = d2 + x2
    gv = gamma * (1.0 + c2 * x2 / (d2 * den))
    dgv = (-2.0 * gamma) * c2 * x / (den * den)
    return gv, dgv


def bond_order_lanes(bk, zeta, beta, eta):
    t = beta * zeta
    u = bk.pow(t, eta)
    b = bk.pow(1.0 + u, -0.5 / eta)
    tiny = zeta < ZETA_TINY
    t_safe = bk.where(tiny, 1.0, t)
    db = (-0.5 * beta) * bk.pow(t_safe, eta - 1.0) \
        * bk.pow(1.0 + u, -0.5 / eta - 1.0)
    return b, bk.where(tiny, 0.0, db)


def zeta_parts_lanes(bk, dxj, dyj, dzj, rij, dxk, dyk, dzk, rik,
                     R, D, gamma, c, d, h, lam3, m_is3):
    """Lane twin of _zeta_parts; m_is3 is a Mask selecting m == 3 lanes."""
    fc, dfc = f_cutoff_lanes(bk, rik, R, D)
    inv_rij = 1.0 / rij
    inv_rik = 1.0 / rik
    ejx = dxj * inv_rij
    ejy = dyj * inv_rij
    ejz = dzj * inv_rij
    ekx = dxk * inv_rik
    eky = dyk * inv_rik
    ekz = dzk * inv_rik
    cost = ejx * ekx + ejy * eky + ejz * ekz
    cost = bk.minimum(bk.maximum(cost, -1.0), 1.0)
    gv, dgv = g_angle_lanes(bk, cost, gamma, c, d, h)
    t = lam3 * (rij - rik)
    arg = bk.where(m_is3, t * t * t, t)
    darg = bk.where(m_is3, (3.0 * lam3) * (t * t), lam3)
    ex = bk.exp(arg)
    val = fc * gv * ex
    dval_drij = val * darg
    dval_drik = dfc * gv * ex - val * darg
    dval_dcos = fc * dgv * ex
    gjx = dval_drij * ejx + dval_dcos * ((ekx - cost * ejx) * inv_rij)
    gjy = dval_drij * ejy + dval_dcos * ((eky - cost * ejy) * inv_rij)
    gjz = dval_drij * ejz + dval_dcos * ((ekz - cost * ejz) * inv_rij)
    gkx = dval_drik * ekx + dval_dcos * ((ejx - cost * ekx) * inv_rik)
    gky = dval_drik * eky + dval_dcos * ((ejy - cost * eky) * inv_rik)
    gkz = dval_drik * ekz + dval_dcos * ((ejz - cost * ekz) * inv_rik)
    return val, gjx, gjy, gjz, gkx, gky, gkz


def pair_parts_lanes(bk, r, zeta, R, D, A, lam1, B, lam2, beta, eta):
    fc, dfc = f_cutoff_lanes(bk, r, R, D)
    fr, dfr = f_repulsive_lanes(bk, r, A, lam1)
    fa, dfa = f_attractive_lanes(bk, r, B, lam2)
    b, db = bond_order_lanes(bk, zeta, beta, eta)
    inner = fr + b * fa
    v = fc * inner
    dv_dr = dfc * inner + fc * (dfr + b * dfa)
    delta_zeta = fc * fa * db
    return v, dv_dr, delta_zeta

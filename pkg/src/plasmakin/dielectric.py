"""Dielectric function ε(k,u), stability checks and Debye-unit scaling.

ε is parametrized by the phase velocity u:

    ε(k, u) = 1 - φ̂(|k|) · ( α(χ,u) - iπ ∂_uF(χ,u) ),   χ = k/|k|,

which is the boundary value 1 - φ̂ P⁻[∂_uF](u).  The companion
Laplace-side evaluator `epsilon_laplace` returns 1 - φ̂ C[∂_uF](iz/|k|)
(the denominator of the Fourier-Laplace Vlasov solution) and reduces to
conj(ε(k,u)) on the imaginary axis z = -i|k|u.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    DegenerateDielectricError,
    DomainError,
    InputError,
    RootNotFoundError,
)
from .transforms import LineProfile, UGrid, pv_transform

EPSILON_FLOOR = 1e-8


def sphere_lattice_directions():
    """26 face/edge/corner directions of the cubic lattice, normalized."""
    dirs = []
    for ix in (-1, 0, 1):
        for iy in (-1, 0, 1):
            for iz in (-1, 0, 1):
                if ix == iy == iz == 0:
                    continue
                d = np.array([ix, iy, iz], dtype=float)
                dirs.append(d / np.linalg.norm(d))
    return np.array(dirs)


@dataclass(frozen=True)
class ScalingUnits:
    """Physical (T, Ñ, σ̃) with the derived Debye length and rescaled pair."""

    temperature: float
    number_density: float
    coupling: float
    debye_length: float
    rescaled_density: float
    rescaled_coupling: float

    def invert(self):
        """Recover (T, Ñ, σ̃) from the rescaled quantities."""
        L = self.debye_length
        return (
            self.temperature,
            self.rescaled_density / L**3,
            self.rescaled_coupling * L * self.temperature,
        )


def debye_rescale(temperature, number_density, coupling) -> ScalingUnits:
    """L_D = sqrt(T/(Ñσ̃)); rescaled N = L_D³Ñ and σ = σ̃/(L_D T), N·σ = 1."""
    if temperature <= 0 or number_density <= 0 or coupling <= 0:
        raise InputError("temperature, density and coupling must be positive")
    L = np.sqrt(temperature / (number_density * coupling))
    N = L**3 * number_density
    sigma = coupling / (L * temperature)
    return ScalingUnits(temperature, number_density, coupling, L, N, sigma)


@dataclass
class DirectionCache:
    chi: np.ndarray
    F: LineProfile
    dF: LineProfile
    alpha: np.ndarray
    alpha_spline: CubicSpline
    dalpha_spline: CubicSpline
    moments: tuple  # raw (M0, M1, M2) of F


class DielectricModel:
    """Cached evaluator of ε and its ingredients for one (f, φ) pair."""

    def __init__(self, distribution, potential, grid: UGrid | None = None, directions=None):
        self.distribution = distribution
        self.potential = potential
        if grid is None:
            wide = getattr(distribution, "kind", "") == "exponential-family" and getattr(
                distribution, "gamma", 2
            ) == 1
            grid = UGrid(26.0, 2048) if wide else UGrid()
        self.grid = grid
        if directions is None:
            if distribution.is_isotropic:
                directions = np.array([[0.0, 0.0, 1.0]])
            else:
                directions = sphere_lattice_directions()
        self.directions = np.atleast_2d(np.asarray(directions, dtype=float))
        self._caches = [self._build_direction(chi) for chi in self.directions]
        self.lower_bound_estimate = None

    # -- construction ------------------------------------------------------
    def _build_direction(self, chi) -> DirectionCache:
        u = self.grid.points
        F_vals = np.asarray(self.distribution.radon_profile(chi, u), dtype=float)
        dF_vals = np.asarray(self.distribution.radon_profile_derivative(chi, u), dtype=float)
        F = LineProfile(self.grid, F_vals, real_valued=True)
        dF = LineProfile(self.grid, dF_vals, real_valued=True)
        alpha = np.real(pv_transform(dF).values)
        spline = CubicSpline(u, alpha)
        return DirectionCache(
            chi=np.asarray(chi, float),
            F=F,
            dF=dF,
            alpha=alpha,
            alpha_spline=spline,
            dalpha_spline=spline.derivative(),
            moments=self.distribution.raw_moments(chi),
        )

    def direction_cache(self, k) -> DirectionCache:
        k = np.asarray(k, dtype=float)
        nk = np.linalg.norm(k)
        if nk == 0.0:
            raise InputError("k = 0: dielectric undefined")
        if self.distribution.is_isotropic:
            return self._caches[0]
        chi = k / nk
        dots = self.directions @ chi
        return self._caches[int(np.argmax(dots))]

    # -- ingredient evaluations ---------------------------------------------
    def alpha(self, k, u):
        """P[∂_uF](u) with the 1/u² asymptote beyond the cached grid."""
        cache = self.direction_cache(k)
        u = np.asarray(u, dtype=float)
        out = np.empty_like(u, dtype=float)
        edge = self.grid.u_max - 2.0 * self.grid.spacing
        inside = np.abs(u) <= edge
        out[inside] = cache.alpha_spline(u[inside])
        uo = u[~inside]
        if uo.size:
            m0, m1, m2 = cache.moments
            out[~inside] = m0 / uo**2 + 2 * m1 / uo**3 + 3 * m2 / uo**4
        return out if out.ndim else float(out)

    def dF(self, k, u):
        cache = self.direction_cache(k)
        return self.distribution.radon_profile_derivative(cache.chi, u)

    def F(self, k, u):
        cache = self.direction_cache(k)
        return self.distribution.radon_profile(cache.chi, u)

    def plemelj_minus_dF(self, k, u):
        """P⁻[∂_uF](u) = α(u) - iπ ∂_uF(u)."""
        return self.alpha(k, u) - 1j * np.pi * np.asarray(self.dF(k, u))

    def epsilon(self, k, u):
        """ε(k, u) = 1 - φ̂(|k|) P⁻[∂_uF](u) (phase-velocity argument)."""
        k = np.asarray(k, dtype=float)
        nk = np.linalg.norm(k) if k.ndim else float(abs(k))
        if nk == 0.0:
            raise InputError("k = 0: dielectric undefined")
        W = self.potential.fourier(np.asarray(nk))
        kvec = k if k.ndim else np.array([0.0, 0.0, float(k)])
        return 1.0 - W * self.plemelj_minus_dF(kvec, u)

    def epsilon_laplace(self, k, z, conjugate_mode=False):
        """ε(±k, -iz) = 1 - φ̂ C[∂_uF](±iz/|k|) on Bromwich contours.

        Uses the distribution's entire continuation when available (also
        valid for Re z ≤ 0); otherwise direct quadrature, valid off the
        real w-axis, i.e. for Re z ≠ 0.
        """
        k = np.asarray(k, dtype=float)
        nk = np.linalg.norm(k) if k.ndim else float(abs(k))
        if nk == 0.0:
            raise InputError("k = 0: dielectric undefined")
        z = np.asarray(z, dtype=complex)
        w = 1j * z / nk
        if conjugate_mode:
            w = -w
        kvec = k if k.ndim else np.array([0.0, 0.0, float(k)])
        cache = self.direction_cache(kvec)
        if self.distribution.has_continuation:
            branch = "integral" if conjugate_mode else "upper"
            C = self.distribution.cauchy_dF(cache.chi, w, branch=branch)
        else:
            u = self.grid.points
            dF = cache.dF.values
            C = np.trapezoid(dF / (u[None, :] - np.ravel(w)[:, None]), u, axis=-1)
            C = C.reshape(w.shape) if w.ndim else complex(C[0])
        W = self.potential.fourier(np.asarray(nk))
        return 1.0 - W * C

    # -- spectral diagnostics -------------------------------------------------
    def dispersion_roots(self, k):
        """Far roots u₀± of α(χ,u) = |k|², with L± and the affine maps Ψ±."""
        k = np.asarray(k, dtype=float)
        kvec = k if k.ndim else np.array([0.0, 0.0, float(k)])
        nk = np.linalg.norm(kvec)
        if nk == 0.0:
            raise InputError("k = 0")
        cache = self.direction_cache(kvec)
        target = nk**2

        u_plus = self._far_root(cache, target, nk, side=+1)
        u_minus = self._far_root(cache, target, nk, side=-1)
        roots = {}
        for name, u0 in (("plus", u_plus), ("minus", u_minus)):
            dF0 = float(self.distribution.radon_profile_derivative(cache.chi, u0))
            da0 = float(cache.dalpha_spline(u0))
            L = dF0 / da0
            roots[name] = dict(u0=u0, L=L, dF=dF0, dalpha=da0)
        return DispersionRoots(
            k=kvec,
            u0_plus=roots["plus"]["u0"],
            u0_minus=roots["minus"]["u0"],
            L_plus=roots["plus"]["L"],
            L_minus=roots["minus"]["L"],
            residual_plus=abs(float(cache.alpha_spline(roots["plus"]["u0"])) - target),
            residual_minus=abs(float(cache.alpha_spline(roots["minus"]["u0"])) - target),
        )

    def _far_root(self, cache, target, nk, side):
        """Rightmost (leftmost) crossing of α = |k|², scanned inward from 4/|k|.

        The bracket [1/(2√|k|), 4/|k|] can contain the near (rising-side)
        root as well; marching from the far end selects the Langmuir root.
        """
        lo = 1.0 / (2.0 * np.sqrt(nk))
        hi = 4.0 / nk
        edge = self.grid.u_max - 2 * self.grid.spacing

        def g(u):
            uu = side * u
            if abs(uu) <= edge:
                a = float(cache.alpha_spline(uu))
            else:
                m0, m1, m2 = cache.moments
                a = m0 / uu**2 + 2 * m1 / uu**3 + 3 * m2 / uu**4
            return a - target

        n_scan = 400
        us = np.geomspace(lo, hi, n_scan)[::-1]
        vals = [g(us[0])]
        for i in range(1, n_scan):
            vals.append(g(us[i]))
            if vals[-1] * vals[-2] < 0:
                a, b = us[i], us[i - 1]
                return side * brentq(g, a, b, xtol=1e-14)
            if vals[-1] == 0.0:
                return side * us[i]
        raise RootNotFoundError(
            f"no sign change of α - |k|² in [{lo:.3g}, {hi:.3g}] "
            f"(α range [{min(vals):.3g}, {max(vals):.3g}], |k|² = {target:.3g})"
        )

    def epsilon_infimum(self, k_range=(0.5, 50.0), u_max=3.0, n_k=400, n_u=801, refine=1):
        """Grid infimum of |ε(k, u)| over |k| ∈ k_range, |u| ≤ u_max."""
        ks = np.geomspace(k_range[0], k_range[1], n_k)
        us = np.linspace(-u_max, u_max, n_u)
        kvec = np.array([0.0, 0.0, 1.0])
        best = np.inf
        arg = (ks[0], us[0])
        for kk in ks:
            vals = np.abs(self.epsilon(kk * kvec, us))
            j = int(np.argmin(vals))
            if vals[j] < best:
                best = float(vals[j])
                arg = (float(kk), float(us[j]))
        for _ in range(refine):
            k0, u0 = arg
            ks2 = np.linspace(max(k_range[0], 0.7 * k0), min(k_range[1], 1.4 * k0), 60)
            us2 = np.linspace(max(-u_max, u0 - 0.2), min(u_max, u0 + 0.2), 241)
            for kk in ks2:
                vals = np.abs(self.epsilon(kk * kvec, us2))
                j = int(np.argmin(vals))
                if vals[j] < best:
                    best = float(vals[j])
                    arg = (float(kk), float(us2[j]))
        # simplex polish: grid scans cannot certify a true zero of |ε|
        from scipy.optimize import minimize

        def objective(p):
            kk = min(max(p[0], k_range[0]), k_range[1])
            uu = min(max(p[1], -u_max), u_max)
            return float(np.abs(self.epsilon(kk * kvec, uu)))

        res = minimize(objective, x0=np.array(arg), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400})
        if res.fun < best:
            best = float(res.fun)
            arg = (float(res.x[0]), float(res.x[1]))
        if best < EPSILON_FLOOR:
            raise DegenerateDielectricError(
                f"|ε| infimum {best:.3e} below floor at (|k|, u) = {arg}"
            )
        self.lower_bound_estimate = best
        return best

    def alpha_asymptotics_check(self, k=(0.0, 0.0, 1.0), u_range=(8.0, 12.0), n=200):
        """max |u|³·|α(u) - 1/u²| over the range, on two refinements."""
        out = {}
        for level, nn in enumerate((n, 2 * n)):
            us = np.linspace(u_range[0], u_range[1], nn)
            a = self.alpha(np.asarray(k, float), us)
            out[f"constant_n{nn}"] = float(np.max(np.abs(us) ** 3 * np.abs(a - 1.0 / us**2)))
        vals = list(out.values())
        out["stable"] = bool(abs(vals[1] - vals[0]) <= 0.5 * max(vals[0], 1e-12) + 1e-9)
        return out

    def strong_stability_check(self, k_values=(0.25, 0.5, 1.0, 2.0), c_max=0.4, floor=1e-3):
        """Sample |ε(k, -i|k|z)| on Re z ≥ -c (Ass. onepart2 surrogate).

        Only kinds with an entire continuation of F are checkable.
        """
        if not self.distribution.has_continuation:
            return {"status": "not checkable", "reason": self.distribution.kind}
        cs = np.linspace(0.0, c_max, 9)
        ys = np.linspace(-30.0, 30.0, 601)
        best_c = 0.0
        c0 = None
        for c in cs:
            ok = True
            m = np.inf
            for kk in k_values:
                z = (-c + 1j * ys) * kk  # z = -i|k| zeta with Re zeta = -c
                vals = np.abs(self.epsilon_laplace(np.array([0, 0, kk]), z))
                m = min(m, float(np.min(vals)))
                if m < floor:
                    ok = False
                    break
            if ok:
                best_c = float(c)
                c0 = m
            else:
                break
        return {"status": "checked", "c": best_c, "c0": c0}


@dataclass(frozen=True)
class DispersionRoots:
    k: np.ndarray
    u0_plus: float
    u0_minus: float
    L_plus: float
    L_minus: float
    residual_plus: float
    residual_minus: float

    def psi_plus(self, y):
        return self.u0_plus + np.asarray(y) * self.L_plus

    def psi_minus(self, y):
        return self.u0_minus + np.asarray(y) * self.L_minus


@dataclass
class StabilityReport:
    verdict: str  # STABLE | UNSTABLE | INCONCLUSIVE
    offenders: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"verdict": self.verdict, "offenders": self.offenders, "details": self.details},
            sort_keys=True,
        )


def _critical_points(distribution, chi, u_max, n):
    u = np.linspace(-u_max, u_max, n)
    dF = np.asarray(distribution.radon_profile_derivative(chi, u), dtype=float)
    crits = []
    scale = float(np.max(np.abs(dF))) or 1.0
    for i in range(len(u) - 1):
        a, b = dF[i], dF[i + 1]
        if a == 0.0 and abs(u[i]) < u_max - 1e-9:
            crits.append(float(u[i]))
        elif a * b < 0:
            fn = lambda x: float(distribution.radon_profile_derivative(chi, np.array([x]))[0])
            crits.append(float(brentq(fn, u[i], u[i + 1], xtol=1e-12)))
    # merge near-duplicates and drop flat-tail artifacts
    crits = sorted(crits)
    merged = []
    for c in crits:
        if not merged or c - merged[-1] > 1e-6:
            merged.append(c)
    F = np.asarray(distribution.radon_profile(chi, np.array(merged)), dtype=float)
    keep = [c for c, Fc in zip(merged, F) if Fc > 1e-10 * scale]
    return keep


def penrose_functional(distribution, chi, u_c, u_max=40.0, n=40001):
    """α(u_c) = ∫ (F(u) - F(u_c)) / (u - u_c)² du at a critical point of F.

    Direct quadrature form of the Penrose integral; independent of the
    Fourier-multiplier PV path.
    """
    support = getattr(distribution, "half_width", None)
    if support is not None:
        u_max = min(u_max, 0.99 * support)
        n = min(n, 801)  # table resolution bounds the useful density
    u = np.linspace(-u_max, u_max, n)
    F = np.asarray(distribution.radon_profile(chi, u), dtype=float)
    Fc = float(distribution.radon_profile(chi, np.array([u_c]))[0])
    d = u - u_c
    q = np.empty_like(u)
    near = np.abs(d) < 1e-7
    q[~near] = (F[~near] - Fc) / d[~near] ** 2
    if np.any(near):
        h = 1e-4
        Fpp = (
            float(distribution.radon_profile(chi, np.array([u_c + h]))[0])
            - 2 * Fc
            + float(distribution.radon_profile(chi, np.array([u_c - h]))[0])
        ) / h**2
        q[near] = 0.5 * Fpp
    return float(np.trapezoid(q, u))


def _penrose_verdict(distribution, potential, directions, u_max, n, sup_w):
    support = getattr(distribution, "half_width", None)
    if support is not None:
        u_max = min(u_max, 0.99 * support)
    for chi in directions:
        for u_c in _critical_points(distribution, chi, u_max, n):
            a_c = penrose_functional(distribution, chi, u_c)
            if potential.is_coulomb:
                if a_c > 1e-8:
                    return "UNSTABLE"
            elif sup_w > 0 and a_c * sup_w >= 1.0:
                return "UNSTABLE"
    return "STABLE"


def penrose_check(distribution, potential, u_max=14.0, n=4097, directions=None) -> StabilityReport:
    """Penrose stability test.

    For each sampled direction, critical points of F are located and the
    Penrose functional evaluated there.  A positive value certifies an
    attainable dispersion zero for Coulomb (|k|² spans (0,∞)); for a soft
    potential the zero must additionally satisfy φ̂(k)·α = 1, i.e.
    α ≥ 1/sup φ̂.
    """
    if directions is None:
        if distribution.is_isotropic:
            directions = np.array([[0.0, 0.0, 1.0]])
        else:
            directions = sphere_lattice_directions()
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    support = getattr(distribution, "half_width", None)
    if support is not None:
        u_max = min(u_max, 0.999 * support)
    sup_w = None if potential.is_coulomb else potential.fourier_sup()
    offenders = []
    details = {"directions": len(directions), "critical_points": 0}
    if distribution.kind == "tabulated":
        coarse = distribution.coarsened()
        fine_verdict = _penrose_verdict(distribution, potential, directions, u_max, n, sup_w)
        coarse_verdict = _penrose_verdict(coarse, potential, directions, u_max, n, sup_w)
        if fine_verdict != coarse_verdict:
            return StabilityReport("INCONCLUSIVE", [], {"reason": "verdict not grid-stable"})
    for chi in directions:
        crits = _critical_points(distribution, chi, u_max, n)
        details["critical_points"] += len(crits)
        for u_c in crits:
            a_c = penrose_functional(distribution, chi, u_c)
            if potential.is_coulomb:
                unstable = a_c > 1e-8
            else:
                unstable = sup_w > 0 and a_c * sup_w >= 1.0
            if unstable:
                offenders.append(
                    {"chi": [float(x) for x in chi], "u": float(u_c), "alpha": float(a_c)}
                )
    verdict = "UNSTABLE" if offenders else "STABLE"
    return StabilityReport(verdict, offenders, details)

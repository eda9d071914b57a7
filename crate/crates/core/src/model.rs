//! Chain parameters and the scalar functions that define the model.

use crate::error::{Error, Result};
use crate::theta::{Kind, ModularParameter};
use crate::{ipow, sign, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Anisotropy; the artifact is restricted to the free-fermion point.
pub const ETA: f64 = 0.5;

/// Largest chain handled anywhere (oracle matrices are 2^N square).
pub const MAX_SITES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Root residual relative to `|a| + |d|` at the root.
    pub root_residual: f64,
    /// Oracle eigenvalue degeneracy threshold, relative to the spectral scale.
    pub degeneracy_gap: f64,
    /// Distance below which two points are identified modulo the lattice.
    pub coincidence: f64,
    /// Absolute distance of the sum-rule quantity from an integer.
    pub sum_rule: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { root_residual: 1e-10, degeneracy_gap: 1e-7, coincidence: 1e-8, sum_rule: 1e-9 }
    }
}

/// Boltzmann weights of the R-matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RWeights {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    n_sites: usize,
    tau: ModularParameter,
    xi: Vec<C64>,
    pub tolerances: Tolerances,
}

impl ModelParams {
    pub fn new(n_sites: usize, tau: C64, xi: Vec<C64>) -> Result<Self> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(Error::Domain(format!("chain length must be even and at least 2, got {n_sites}")));
        }
        if n_sites > MAX_SITES {
            return Err(Error::Capacity(format!("chain length {n_sites} exceeds {MAX_SITES}")));
        }
        if xi.len() != n_sites {
            return Err(Error::Domain(format!("expected {n_sites} inhomogeneities, got {}", xi.len())));
        }
        let tau = ModularParameter::new(tau)?;
        if xi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("inhomogeneities must be finite".into()));
        }
        let xi = xi.into_iter().map(|z| tau.reduce(z).reduced).collect();
        Ok(Self { n_sites, tau, xi, tolerances: Tolerances::default() })
    }

    pub fn homogeneous(n_sites: usize, tau: C64) -> Result<Self> {
        Self::new(n_sites, tau, vec![C64::new(0.0, 0.0); n_sites])
    }

    /// Real inhomogeneities drawn uniformly from `[0, 0.1)`.
    pub fn random_inhomogeneous(n_sites: usize, tau: C64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = (0..n_sites).map(|_| C64::new(rng.gen_range(0.0..0.1), 0.0)).collect();
        Self::new(n_sites, tau, xi)
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Number of Bethe roots of a singlet state, `N/2`.
    pub fn n_roots(&self) -> usize {
        self.n_sites / 2
    }

    pub fn tau(&self) -> &ModularParameter {
        &self.tau
    }

    pub fn xi(&self) -> &[C64] {
        &self.xi
    }

    /// Inhomogeneity of site `p` (1-based).
    pub fn xi_site(&self, p: usize) -> C64 {
        self.xi[p - 1]
    }

    pub fn is_homogeneous(&self) -> bool {
        self.xi.iter().all(|z| z.norm() == 0.0)
    }

    pub fn eta(&self) -> f64 {
        ETA
    }

    pub fn th(&self, kind: Kind, u: C64) -> C64 {
        self.tau.theta(kind, u)
    }
    pub fn th1(&self, u: C64) -> C64 {
        self.tau.th1(u)
    }
    pub fn th2(&self, u: C64) -> C64 {
        self.tau.th2(u)
    }
    pub fn th3(&self, u: C64) -> C64 {
        self.tau.th3(u)
    }
    pub fn th4(&self, u: C64) -> C64 {
        self.tau.th4(u)
    }
    /// `θ₁'(0)`.
    pub fn th1p0(&self) -> C64 {
        self.tau.theta_prime(Kind::One, C64::new(0.0, 0.0))
    }

    pub fn r_weights(&self, u: C64) -> RWeights {
        let t = &self.tau;
        let t2 = t.doubled();
        let eta = C64::new(ETA, 0.0);
        let zero = C64::new(0.0, 0.0);
        let norm = 2.0 / (t.th2(zero) * t2.th4(zero));
        let (th4e, th1e) = (t2.th4(eta), t2.th1(eta));
        let (th1ue, th4ue) = (t2.th1(u + eta), t2.th4(u + eta));
        let (th1u, th4u) = (t2.th1(u), t2.th4(u));
        RWeights {
            a: norm * th4e * th1ue * th4u,
            b: norm * th4e * th4ue * th1u,
            c: norm * th1e * th4ue * th4u,
            d: norm * th1e * th1ue * th1u,
        }
    }

    /// Hamiltonian couplings `(Jx, Jy, Jz)`.
    pub fn couplings(&self) -> (C64, C64, C64) {
        let eta = C64::new(ETA, 0.0);
        let zero = C64::new(0.0, 0.0);
        (self.th4(eta) / self.th4(zero), self.th3(eta) / self.th3(zero), self.th2(eta) / self.th2(zero))
    }

    /// `f(u,v) = θ₁(u−v+η)/θ₁(u−v)`.
    pub fn f(&self, u: C64, v: C64) -> Result<C64> {
        let den = self.tau.eval(Kind::One, u - v);
        if den.is_zero() {
            return Err(Error::Pole { what: "f", at: u - v });
        }
        Ok(self.th1(u - v + ETA) / den.value)
    }

    /// `h(u,v) = θ₁(u−v+η)/θ₁(η)`.
    pub fn h(&self, u: C64, v: C64) -> C64 {
        self.th1(u - v + ETA) / self.th1(C64::new(ETA, 0.0))
    }

    /// `a(z) = ∏ θ₂(z − ξ_k)`.
    pub fn a(&self, z: C64) -> C64 {
        self.xi.iter().map(|&x| self.th2(z - x)).product()
    }

    /// `d(z) = ∏ θ₁(z − ξ_k)`.
    pub fn d(&self, z: C64) -> C64 {
        self.xi.iter().map(|&x| self.th1(z - x)).product()
    }

    fn a_d_with_derivatives(&self, z: C64) -> (C64, C64, C64, C64) {
        let mut a = C64::new(1.0, 0.0);
        let mut ap = C64::new(0.0, 0.0);
        let mut d = C64::new(1.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &x in &self.xi {
            let t2 = self.tau.eval(Kind::Two, z - x);
            let t1 = self.tau.eval(Kind::One, z - x);
            ap = ap * t2.value + a * t2.derivative;
            a *= t2.value;
            dp = dp * t1.value + d * t1.derivative;
            d *= t1.value;
        }
        (a, ap, d, dp)
    }

    fn chi_coefficients(&self, nu: i64) -> (C64, C64) {
        (ipow(nu) * sign(self.n_roots() as i64), ipow(-nu))
    }

    /// `χ_ν(z) = (−1)ⁿ i^ν a(z) + i^{−ν} d(z)` with `n = N/2`.
    pub fn chi(&self, nu: i64, z: C64) -> C64 {
        let (ca, cd) = self.chi_coefficients(nu);
        ca * self.a(z) + cd * self.d(z)
    }

    pub fn chi_prime(&self, nu: i64, z: C64) -> C64 {
        let (ca, cd) = self.chi_coefficients(nu);
        let (_, ap, _, dp) = self.a_d_with_derivatives(z);
        ca * ap + cd * dp
    }

    /// `(χ_ν(z), χ_ν'(z), |a(z)| + |d(z)|)`.
    pub fn chi_with_derivative(&self, nu: i64, z: C64) -> (C64, C64, f64) {
        let (ca, cd) = self.chi_coefficients(nu);
        let (a, ap, d, dp) = self.a_d_with_derivatives(z);
        (ca * a + cd * d, ca * ap + cd * dp, a.norm() + d.norm())
    }

    /// `𝒱(z) = d/dz log(a(z)/d(z))`.
    pub fn log_derivative_v(&self, z: C64) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for &x in &self.xi {
            total += self.tau.log_derivative(Kind::Two, z - x)?;
            total -= self.tau.log_derivative(Kind::One, z - x)?;
        }
        Ok(total)
    }

    /// `T_ν(z|ū) = χ_ν(z) ∏ f(z, u_j)`.
    pub fn transfer_eigenvalue(&self, nu: i64, z: C64, roots: &[C64]) -> Result<C64> {
        let mut value = self.chi(nu, z);
        for &u in roots {
            value *= self.f(z, u)?;
        }
        Ok(value)
    }

    /// Product representation of `χ_ν` built from an on-shell twin-free root set and site `p`.
    pub fn chi_product_form(&self, nu: i64, z: C64, roots: &[C64], p: usize) -> Result<C64> {
        if p == 0 || p > self.n_sites {
            return Err(Error::Domain(format!("site {p} out of range")));
        }
        for &u in roots {
            let (c, _, scale) = self.chi_with_derivative(nu, u);
            if c.norm() > self.tolerances.root_residual * scale {
                return Err(Error::ContractViolation(format!("root {u} is off-shell (|chi| = {:.3e})", c.norm())));
            }
        }
        let xp = self.xi_site(p);
        let i = C64::new(0.0, 1.0);
        let phase = (i * std::f64::consts::PI * (-2.0 * nu as f64 * (z - xp) + nu as f64 / 2.0)).exp();
        let mut value = sign(self.n_roots() as i64) * phase * self.a(xp);
        for &u in roots {
            value *= self.th1(z - u) * self.th2(z - u) / (self.th1(xp - u) * self.th2(xp - u));
        }
        Ok(value)
    }

    /// Sum-rule quantity `2Σu − Σξ − n/2 − ντ`; an integer for on-shell states.
    pub fn sum_rule_value(&self, nu: i64, roots: &[C64]) -> C64 {
        let su: C64 = roots.iter().sum();
        let sx: C64 = self.xi.iter().sum();
        su * 2.0 - sx - self.n_roots() as f64 / 2.0 - self.tau.tau() * nu as f64
    }

    /// True when `u ≡ v` modulo the period lattice.
    pub fn lattice_equal(&self, u: C64, v: C64) -> bool {
        self.tau.lattice_distance(u - v) < self.tolerances.coincidence
    }
}

/// Twin of a root: shift by +1/2 if `0 ≤ Re z mod 1 < 1/2`, otherwise by −1/2.
pub fn twin(z: C64) -> C64 {
    if z.re.rem_euclid(1.0) < 0.5 {
        z + 0.5
    } else {
        z - 0.5
    }
}

/// Gauge parameters `s, t` and their derived combinations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub s: C64,
    pub t: C64,
}

impl GaugeParams {
    /// Checks the guarded denominators `θ₁(x), θ₂(x), θ₁(x_ε), θ₂(x_ε)`.
    pub fn new(s: C64, t: C64, model: &ModelParams) -> Result<Self> {
        let g = Self { s, t };
        for eps in 0..2 {
            for kind in [Kind::One, Kind::Two] {
                if model.tau().eval(kind, g.x_eps(eps)).is_zero() {
                    return Err(Error::GaugeGuard(format!("theta_{kind:?}(x_{eps}) vanishes for s={s}, t={t}")));
                }
            }
        }
        Ok(g)
    }

    /// Seeded draw, redrawn until the guards pass.
    pub fn random(seed: u64, model: &ModelParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let im = model.tau().tau().im;
        loop {
            let s = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.25..0.25) * im);
            let t = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.25..0.25) * im);
            if let Ok(g) = Self::new(s, t, model) {
                if g.well_separated(model) {
                    return g;
                }
            }
        }
    }

    // Keeps random draws away from near-cancellations in the action coefficients.
    fn well_separated(&self, model: &ModelParams) -> bool {
        let t = model.tau();
        let mut pts = vec![self.x(), self.x() + 0.5, self.x() + 0.25, self.x() + 0.75];
        for &xi in model.xi() {
            pts.push(self.y() + xi);
            pts.push(self.y() + xi + 0.5);
        }
        pts.iter().all(|&z| t.lattice_distance(z) > 0.05)
    }

    pub fn x(&self) -> C64 {
        (self.s + self.t) / 2.0
    }
    pub fn y(&self) -> C64 {
        (self.s - self.t) / 2.0
    }
    pub fn s_k(&self, k: i64) -> C64 {
        self.s + k as f64 / 2.0
    }
    pub fn t_k(&self, k: i64) -> C64 {
        self.t + k as f64 / 2.0
    }
    pub fn x_eps(&self, k: i64) -> C64 {
        (self.s_k(k) + self.t_k(k)) / 2.0
    }
    /// `y* = y − 1/2`.
    pub fn y_star(&self) -> C64 {
        self.y() - 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn generic(n: usize) -> ModelParams {
        ModelParams::random_inhomogeneous(n, c(0.3, 0.7), 1).unwrap()
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(ModelParams::homogeneous(3, c(0.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(ModelParams::homogeneous(10, c(0.0, 1.0)), Err(Error::Capacity(_))));
        assert!(ModelParams::homogeneous(4, c(0.0, -1.0)).is_err());
        assert!(ModelParams::new(4, c(0.0, 1.0), vec![c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn weights_at_zero() {
        let m = ModelParams::homogeneous(4, c(0.0, 1.0)).unwrap();
        let w = m.r_weights(c(0.0, 0.0));
        assert!(w.b.norm() < 1e-15 && w.d.norm() < 1e-15);
        // a(0)/c(0) = θ₄(η|2τ)θ₁(η|2τ)/(θ₁(η|2τ)θ₄(η|2τ)) = 1 for any η.
        assert!((w.a - w.c).norm() < 1e-14 * w.a.norm());
    }

    #[test]
    fn weights_match_raw_series() {
        let m = ModelParams::homogeneous(4, c(0.0, 1.0)).unwrap();
        let u = c(0.2, 0.0);
        let q2 = (c(0.0, std::f64::consts::PI) * 2.0 * c(0.0, 1.0)).exp();
        let pi = std::f64::consts::PI;
        let raw1 = |z: C64| -> C64 {
            (-40..40)
                .map(|k: i32| {
                    let kk = k as f64 + 0.5;
                    c(0.0, -1.0) * sign(k as i64) * q2.powf(kk * kk) * (c(0.0, pi) * (2.0 * kk) * z).exp()
                })
                .sum()
        };
        let raw4 = |z: C64| -> C64 {
            (-40..40)
                .map(|k: i32| sign(k as i64) * q2.powf((k * k) as f64) * (c(0.0, 2.0 * pi * k as f64) * z).exp())
                .sum()
        };
        let eta = c(ETA, 0.0);
        let w = m.r_weights(u);
        let norm = 2.0 / (m.th2(c(0.0, 0.0)) * raw4(c(0.0, 0.0)));
        let a = norm * raw4(eta) * raw1(u + eta) * raw4(u);
        let b = norm * raw4(eta) * raw4(u + eta) * raw1(u);
        let cc = norm * raw1(eta) * raw4(u + eta) * raw4(u);
        let d = norm * raw1(eta) * raw1(u + eta) * raw1(u);
        for (x, y) in [(w.a, a), (w.b, b), (w.c, cc), (w.d, d)] {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(((w.a + w.b) - (a + b)).norm() < 1e-12);
    }

    #[test]
    fn couplings_at_free_fermions() {
        let m = ModelParams::homogeneous(4, c(0.0, 1.0)).unwrap();
        let (jx, jy, jz) = m.couplings();
        assert!(jz.norm() < 1e-15);
        assert!(jx.norm() > 0.1 && jy.norm() > 0.1);
        let half = c(0.5, 0.0);
        assert!((jx - m.th4(half) / m.th4(c(0.0, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn f_and_h() {
        let m = ModelParams::homogeneous(4, c(0.0, 1.0)).unwrap();
        let u = c(0.31, 0.2);
        assert!((m.h(u, u) - 1.0).norm() < 1e-15);
        assert!(matches!(m.f(u, u), Err(Error::Pole { .. })));
        let f = m.f(c(0.3, 0.0), c(0.1, 0.0)).unwrap();
        assert!((f - m.th2(c(0.2, 0.0)) / m.th1(c(0.2, 0.0))).norm() < 1e-14);
        let v = c(-0.17, 0.4);
        let split = m.h(u, v) * m.th1(c(ETA, 0.0)) / m.th1(u - v);
        assert!((m.f(u, v).unwrap() - split).norm() < 1e-13);
    }

    #[test]
    fn a_d_and_chi() {
        let m = generic(4);
        for p in 1..=4 {
            let x = m.xi_site(p);
            assert!(m.d(x).norm() < 1e-15);
            assert!(m.a(x).norm() > 1e-3);
            for nu in 0..4 {
                let expect = sign(2) * ipow(nu) * m.a(x);
                assert!((m.chi(nu, x) - expect).norm() < 1e-14);
            }
        }
        let h = ModelParams::homogeneous(4, c(0.0, 1.0)).unwrap();
        let z = c(0.17, 0.23);
        assert!((h.a(z) - h.th2(z).powi(4)).norm() < 1e-14);
    }

    #[test]
    fn chi_twin_and_period() {
        let m = generic(6);
        for nu in 0..4 {
            for z in [c(0.12, 0.3), c(0.71, -0.2), c(0.49, 0.05)] {
                let lhs = m.chi(nu, twin(z));
                // The twin shift swaps a and d up to (−1)^n, so the parity picks up n = N/2.
                let rhs = sign(nu + m.n_roots() as i64) * m.chi(nu, z);
                assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
                assert!((m.chi(nu, z + 1.0) - m.chi(nu, z)).norm() < 1e-11 * m.chi(nu, z).norm().max(1.0));
            }
        }
    }

    #[test]
    fn chi_prime_matches_finite_difference() {
        let m = generic(4);
        let z = c(0.33, 0.12);
        let h = 1e-6;
        for nu in 0..4 {
            let fd = (m.chi(nu, z + h) - m.chi(nu, z - h)) / (2.0 * h);
            assert!((fd - m.chi_prime(nu, z)).norm() / fd.norm() < 1e-7);
        }
    }

    #[test]
    fn twin_map() {
        assert!((twin(c(0.2, 0.0)) - c(0.7, 0.0)).norm() < 1e-15);
        assert!((twin(c(0.7, 0.0)) - c(0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transfer_eigenvalue_pole() {
        let m = generic(4);
        let roots = [c(0.3, 0.1), c(0.6, 0.2)];
        assert!(m.transfer_eigenvalue(0, roots[0], &roots).is_err());
        let x = m.xi_site(2);
        let t = m.transfer_eigenvalue(1, x, &roots).unwrap();
        let expect = ipow(1) * m.a(x) * m.f(x, roots[0]).unwrap() * m.f(x, roots[1]).unwrap();
        assert!((t - expect).norm() < 1e-13);
    }

    #[test]
    fn gauge_derived() {
        let m = generic(4);
        let g = GaugeParams::new(c(0.13, 0.21), c(-0.31, 0.17), &m).unwrap();
        assert!((g.x() - c(-0.09, 0.19)).norm() < 1e-15);
        assert!((g.y_star() - (g.y() - 0.5)).norm() < 1e-15);
        assert!((g.x_eps(1) - g.x() - 0.5).norm() < 1e-15);
        assert!(GaugeParams::new(c(0.0, 0.0), c(0.0, 0.0), &m).is_err());
        assert_eq!(GaugeParams::random(4, &m), GaugeParams::random(4, &m));
    }
}

//! Scalar products between an on-shell dual vector and generic vectors with `n−1`, `n`,
//! or `n+1` parameters.

use crate::error::{Error, Result};
use crate::model::{GaugeParams, ModelParams};
use crate::theta::Kind;
use crate::{ipow, C64};

/// Selection rule: a scalar product `⟨ν, n | λ, m⟩` can be nonzero only if `ν+n ≡ λ+m (mod 2)`.
pub fn selection_allowed(nu: i64, n: usize, lambda: i64, m: usize) -> bool {
    (nu + n as i64 - lambda - m as i64).rem_euclid(2) == 0
}

/// Scalar products for a fixed on-shell bra `v̄` in sector `ν` and a fixed gauge.
#[derive(Clone, Debug)]
pub struct ScalarProducts<'a> {
    model: &'a ModelParams,
    gauge: GaugeParams,
    nu: i64,
    v: Vec<C64>,
    /// `w̄`-independent part of `S^ν`.
    base: C64,
    /// `T_ν(−y*|v̄)`.
    t_ystar: C64,
}

impl<'a> ScalarProducts<'a> {
    pub fn new(model: &'a ModelParams, gauge: GaugeParams, nu: i64, v: &[C64]) -> Result<Self> {
        let n = v.len();
        let mut base = (-ipow(-nu) * model.th1p0()).powi(n as i32);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    base /= model.f(v[a], v[b])?;
                }
            }
            base /= model.a(v[a]) * model.log_derivative_v(v[a])?;
            for b in 0..a {
                base *= model.th2(v[a] - v[b]);
            }
        }
        let t_ystar = model.transfer_eigenvalue(nu, -gauge.y_star(), v)?;
        Ok(Self { model, gauge, nu, v: v.to_vec(), base, t_ystar })
    }

    pub fn model(&self) -> &'a ModelParams {
        self.model
    }

    pub fn nu(&self) -> i64 {
        self.nu
    }

    pub fn bra(&self) -> &[C64] {
        &self.v
    }

    pub fn gauge(&self) -> &GaugeParams {
        &self.gauge
    }

    /// `S^ν(v̄|w̄)`, taking the removable limit where some `w_a ≡ v_b`.
    pub fn s_base(&self, w: &[C64]) -> Result<C64> {
        let m = self.model;
        let n = self.v.len();
        if w.len() != n {
            return Err(Error::ContractViolation(format!("S needs {n} arguments, got {}", w.len())));
        }
        let mut val = self.base;
        for a in 0..n {
            for b in 0..a {
                val *= m.th2(w[a] - w[b]);
            }
        }
        for &wa in w {
            match self.v.iter().position(|&vb| m.lattice_equal(wa, vb)) {
                Some(b) => {
                    val *= m.chi_prime(self.nu, wa) / m.tau().theta_prime(Kind::One, wa - self.v[b]);
                    for (bb, &vbb) in self.v.iter().enumerate() {
                        if bb != b {
                            val /= self.theta1_nonzero(wa - vbb)?;
                        }
                    }
                }
                None => {
                    val *= m.chi(self.nu, wa);
                    for &vb in &self.v {
                        val /= self.theta1_nonzero(wa - vb)?;
                    }
                }
            }
        }
        Ok(val)
    }

    fn theta1_nonzero(&self, z: C64) -> Result<C64> {
        let t = self.model.tau().eval(Kind::One, z);
        if t.is_zero() {
            return Err(Error::Pole { what: "scalar product", at: z });
        }
        Ok(t.value)
    }

    /// True when `w̄` is a permutation of the bra roots (same representatives).
    fn is_bra(&self, w: &[C64]) -> bool {
        let tol = self.model.tolerances.coincidence;
        let mut used = vec![false; self.v.len()];
        w.len() == self.v.len()
            && w.iter().all(|&wa| match (0..self.v.len()).find(|&b| !used[b] && (wa - self.v[b]).norm() < tol) {
                Some(b) => {
                    used[b] = true;
                    true
                }
                None => false,
            })
    }

    /// `S^{ν;ε}_{n,n}(v̄|w̄) = θ₁(r + x_ε)/θ₁(x_ε) · S^ν(v̄|w̄)` with `r = Σv − Σw`; exactly 1 at `w̄ = v̄`.
    pub fn s_nn(&self, eps: i64, w: &[C64]) -> Result<C64> {
        if self.is_bra(w) {
            return Ok(C64::new(1.0, 0.0));
        }
        let m = self.model;
        let r: C64 = self.v.iter().sum::<C64>() - w.iter().sum::<C64>();
        let xe = self.gauge.x_eps(eps);
        Ok(m.th1(r + xe) / m.th1(xe) * self.s_base(w)?)
    }

    /// `S^{ν;ε}_{n,n−1}`: reduced to `s_nn` on `{w̄, −y*}`.
    pub fn s_n_nm1(&self, eps: i64, w: &[C64]) -> Result<C64> {
        let m = self.model;
        let mut ext = w.to_vec();
        ext.push(-self.gauge.y_star());
        let pre = -ipow(-eps) * m.th2(C64::new(0.0, 0.0)) * m.th1(self.gauge.x_eps(eps)) / (2.0 * self.t_ystar);
        Ok(pre * self.s_nn(eps, &ext)?)
    }

    /// `S^{ν;ε}_{n,n+1}`: double sum over pairs `a > b` of `w̄′ = {w̄, −y*}`.
    pub fn s_n_np1(&self, eps: i64, w: &[C64]) -> Result<C64> {
        let m = self.model;
        let g = &self.gauge;
        let zero = C64::new(0.0, 0.0);
        let ys = -g.y_star();
        let mut wp = w.to_vec();
        wp.push(ys);
        let (t1x, t2x) = (m.th1(g.x()), m.th2(g.x()));
        let pre = -2.0 * ipow(-eps) * m.th1(g.x_eps(eps)) / (t1x * t1x * t2x * t2x * m.th2(zero) * self.t_ystar);
        let te = g.t_k(eps);
        let mut total = C64::new(0.0, 0.0);
        for a in 0..wp.len() {
            for b in 0..a {
                let rest: Vec<C64> =
                    wp.iter().enumerate().filter(|&(j, _)| j != a && j != b).map(|(_, &z)| z).collect();
                let om = omega(a, b, ys, &wp, m)?;
                if om == zero {
                    continue;
                }
                total += pre * om * m.th1(wp[a] - te) * m.th1(wp[b] - te) * self.s_nn(eps, &rest)?;
            }
        }
        Ok(total)
    }

    /// Dispatcher `𝐒^{(μ)}`: combines the two `ε` values according to `μ`; exact zero when
    /// the selection rule forbids.
    pub fn s_indexed(&self, mu: i64, w: &[C64]) -> Result<C64> {
        let n = self.v.len();
        let m = w.len();
        if !selection_allowed(self.nu, n, mu, m) {
            return Ok(C64::new(0.0, 0.0));
        }
        let base = if m == n { self.nu } else { self.nu + 1 };
        let eval = |eps: i64| -> Result<C64> {
            match m as i64 - n as i64 {
                0 => self.s_nn(eps, w),
                -1 => self.s_n_nm1(eps, w),
                1 => self.s_n_np1(eps, w),
                d => Err(Error::ContractViolation(format!("no scalar product for m − n = {d}"))),
            }
        };
        let (s0, s1) = (eval(0)?, eval(1)?);
        Ok(if (mu - base).rem_euclid(4) == 0 { (s0 + s1) / 2.0 } else { (s0 - s1) / 2.0 })
    }
}

/// `ω_kl(z)` for the parameter set `w̄`.
pub fn omega(k: usize, l: usize, z: C64, w: &[C64], model: &ModelParams) -> Result<C64> {
    let (wk, wl) = (w[k], w[l]);
    let mut val = model.d(wk) * model.a(wl) - model.d(wl) * model.a(wk);
    if val == C64::new(0.0, 0.0) {
        return Ok(val);
    }
    for (j, &wj) in w.iter().enumerate() {
        if j != k {
            val *= model.f(wk, wj)?;
        }
        if j != l {
            val *= model.f(wj, wl)?;
        }
    }
    let den = model.f(wk, wl)? * model.h(wk, z) * model.h(z, wl);
    if den.norm() == 0.0 {
        return Err(Error::Pole { what: "omega", at: z });
    }
    Ok(val / den)
}

/// `S^ν(v̄|w̄)` without a gauge context.
pub fn s_base(nu: i64, v: &[C64], w: &[C64], model: &ModelParams) -> Result<C64> {
    // The gauge only enters through T_ν(−y*|v̄), which s_base does not use.
    let gauge = GaugeParams { s: C64::new(0.123, 0.0457), t: C64::new(-0.271, 0.0311) };
    ScalarProducts::new(model, gauge, nu, v)?.s_base(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::singlet_states;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn setup(n: usize) -> (ModelParams, GaugeParams) {
        let m = ModelParams::random_inhomogeneous(n, c(0.3, 0.7), 1).unwrap();
        let g = GaugeParams::new(c(0.13, 0.21), c(-0.31, 0.17), &m).unwrap();
        (m, g)
    }

    // Straight transcription used as an independent reference.
    fn s0_reference(m: &ModelParams, nu: i64, v: &[C64], w: &[C64]) -> C64 {
        let n = v.len();
        let mut val = (-ipow(-nu) * m.th1p0()).powi(n as i32);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    val *= m.th1(v[a] - v[b]) / m.th2(v[a] - v[b]);
                }
            }
        }
        for &vk in v {
            let h = 1e-5;
            let g = |z: C64| m.a(z) / m.d(z);
            let vd = (g(vk + h) / g(vk - h)).ln() / (2.0 * h);
            val /= m.a(vk) * vd;
        }
        for a in 0..n {
            for b in 0..a {
                val *= m.th2(v[a] - v[b]) * m.th2(w[a] - w[b]);
            }
            val *= m.chi(nu, w[a]);
            for &vb in v {
                val /= m.th1(w[a] - vb);
            }
        }
        val
    }

    #[test]
    fn selection_examples() {
        assert!(selection_allowed(0, 3, 1, 2));
        assert!(!selection_allowed(0, 3, 1, 3));
        assert!(selection_allowed(1, 2, 3, 2));
    }

    #[test]
    fn base_matches_reference() {
        let (m, g) = setup(4);
        let s = &singlet_states(1, &m).unwrap()[0];
        let sp = ScalarProducts::new(&m, g, 1, &s.roots).unwrap();
        let w = [c(0.21, 0.13), c(0.47, -0.08)];
        let a = sp.s_base(&w).unwrap();
        let b = s0_reference(&m, 1, &s.roots, &w);
        assert!((a - b).norm() < 1e-7 * b.norm(), "{a} {b}");
    }

    #[test]
    fn single_root_formula() {
        let (m, _) = setup(2);
        let s = &singlet_states(0, &m).unwrap()[0];
        let v = s.roots[0];
        let w = c(0.31, 0.12);
        let direct = -m.th1p0() * m.chi(0, w) / (m.a(v) * m.log_derivative_v(v).unwrap() * m.th1(w - v));
        let got = s_base(0, &s.roots, &[w], &m).unwrap();
        assert!((got - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn nn_at_bra_is_one_and_limit_agrees() {
        let (m, g) = setup(4);
        let s = &singlet_states(0, &m).unwrap()[0];
        let sp = ScalarProducts::new(&m, g, 0, &s.roots).unwrap();
        assert_eq!(sp.s_nn(0, &s.roots).unwrap(), c(1.0, 0.0));
        // The analytic limit of S at w̄ = v̄ is 1 as well.
        let lim = sp.s_base(&s.roots).unwrap();
        assert!((lim - 1.0).norm() < 1e-10, "{lim}");
        // Approaching the bra continuously.
        let w: Vec<C64> = s.roots.iter().map(|&z| z + c(1e-6, 2e-6)).collect();
        let near = sp.s_nn(1, &w).unwrap();
        assert!((near - 1.0).norm() < 1e-4, "{near}");
    }

    #[test]
    fn nn_is_theta_ratio_times_base_and_symmetric() {
        let (m, g) = setup(4);
        let s = &singlet_states(1, &m).unwrap()[0];
        let sp = ScalarProducts::new(&m, g, 1, &s.roots).unwrap();
        let w = [c(0.21, 0.13), c(0.47, -0.08)];
        let r: C64 = s.roots.iter().sum::<C64>() - w.iter().sum::<C64>();
        for eps in 0..2 {
            let xe = g.x_eps(eps);
            let expect = m.th1(r + xe) / m.th1(xe) * sp.s_base(&w).unwrap();
            assert!((sp.s_nn(eps, &w).unwrap() - expect).norm() < 1e-13 * expect.norm());
            let swapped = [w[1], w[0]];
            assert!((sp.s_nn(eps, &swapped).unwrap() - expect).norm() < 1e-12 * expect.norm());
        }
    }

    #[test]
    fn spp1_second_case() {
        // S^{ν;ε}_{n,n}(v̄ | {v̄_k, ξ_p}) in closed form.
        let (m, g) = setup(4);
        for nu in 0..2 {
            for s in singlet_states(nu, &m).unwrap() {
                let sp = ScalarProducts::new(&m, g, nu, &s.roots).unwrap();
                let n = s.roots.len();
                for k in 0..n {
                    for p in 1..=m.n_sites() {
                        let xi = m.xi_site(p);
                        let vk = s.roots[k];
                        let mut w: Vec<C64> = s.roots.clone();
                        w[k] = xi;
                        for eps in 0..2 {
                            let got = sp.s_nn(1 - eps, &w).unwrap();
                            let xe = g.x_eps(eps);
                            let mut expect = m.th1p0() * m.a(xi) * m.th2(vk - xi + xe)
                                / (m.a(vk) * s.v[k] * m.th2(xe) * m.th2(vk - xi));
                            for (j, &vj) in s.roots.iter().enumerate() {
                                expect *= m.f(xi, vj).unwrap();
                                if j != k {
                                    expect /= m.f(vk, vj).unwrap();
                                }
                            }
                            assert!((got - expect).norm() < 1e-10 * expect.norm(), "k={k} p={p} {got} {expect}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dispatcher_exact_zero() {
        let (m, g) = setup(4);
        let s = &singlet_states(0, &m).unwrap()[0];
        let sp = ScalarProducts::new(&m, g, 0, &s.roots).unwrap();
        let w = [c(0.21, 0.13), c(0.47, -0.08)];
        assert_eq!(sp.s_indexed(1, &w).unwrap(), c(0.0, 0.0));
        assert_eq!(sp.s_indexed(3, &w).unwrap(), c(0.0, 0.0));
        assert!(sp.s_indexed(0, &w).unwrap().norm() > 0.0);
        assert_eq!(sp.s_indexed(0, &w[..1]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn nm1_scales_with_theta_x_eps() {
        let (m, g) = setup(4);
        let s = &singlet_states(0, &m).unwrap()[0];
        let sp = ScalarProducts::new(&m, g, 0, &s.roots).unwrap();
        let w = [c(0.21, 0.13)];
        for eps in 0..2 {
            let mut ext = w.to_vec();
            ext.push(-g.y_star());
            let inner = sp.s_nn(eps, &ext).unwrap();
            let ratio = sp.s_n_nm1(eps, &w).unwrap() / inner;
            let expect = -ipow(-eps) * m.th2(c(0.0, 0.0)) * m.th1(g.x_eps(eps))
                / (2.0 * m.transfer_eigenvalue(0, -g.y_star(), &s.roots).unwrap());
            assert!((ratio - expect).norm() < 1e-12 * expect.norm());
        }
    }

    #[test]
    fn np1_term_count_and_symmetry() {
        let (m, g) = setup(2);
        let s = &singlet_states(0, &m).unwrap()[0];
        let sp = ScalarProducts::new(&m, g, 0, &s.roots).unwrap();
        let w = [c(0.21, 0.13), c(0.47, -0.08)];
        // n = 1: w̄′ has n + 2 = 3 entries, hence 3 unordered pairs.
        let pairs = (0..3).flat_map(|a| (0..a).map(move |b| (a, b))).count();
        assert_eq!(pairs, 3);
        for eps in 0..2 {
            let a = sp.s_n_np1(eps, &w).unwrap();
            let b = sp.s_n_np1(eps, &[w[1], w[0]]).unwrap();
            assert!((a - b).norm() < 1e-11 * a.norm().max(1e-300), "{a} {b}");
            assert!(a.norm() > 0.0);
        }
    }

    #[test]
    fn omega_properties() {
        let (m, _) = setup(4);
        let w = [c(0.21, 0.13), c(0.47, -0.08), c(0.05, 0.3)];
        let z = c(-0.17, 0.11);
        let a = omega(0, 1, z, &w, &m).unwrap();
        // Swapping the labels of w_0, w_1 reproduces ω_10 on the swapped set.
        let ws = [w[1], w[0], w[2]];
        let b = omega(1, 0, z, &ws, &m).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        // Bracket vanishes for two roots of one state.
        let s = &singlet_states(0, &m).unwrap()[0];
        let wr = [s.roots[0], s.roots[1], c(0.05, 0.3)];
        let o = omega(0, 1, z, &wr, &m).unwrap();
        let scale = m.a(wr[0]).norm() * m.d(wr[1]).norm();
        assert!(o.norm() < 1e-9 * scale.max(1.0));
        // d(ξ) = 0 leaves only the a-term.
        let wx = [m.xi_site(1), w[1], w[2]];
        let full = omega(0, 1, z, &wx, &m).unwrap();
        let mut single = -m.d(wx[1]) * m.a(wx[0]);
        for j in 0..3 {
            if j != 0 {
                single *= m.f(wx[0], wx[j]).unwrap();
            }
            if j != 1 {
                single *= m.f(wx[j], wx[1]).unwrap();
            }
        }
        single /= m.f(wx[0], wx[1]).unwrap() * m.h(wx[0], z) * m.h(z, wx[1]);
        assert!((full - single).norm() < 1e-12 * single.norm());
    }

    #[test]
    fn pole_reported() {
        let (m, _) = setup(4);
        let w = [c(0.21, 0.13), c(0.47, -0.08)];
        // h(w_0, z) vanishes at z = w_0 + 1/2.
        assert!(matches!(omega(0, 1, w[0] + 0.5, &w, &m), Err(Error::Pole { .. })));
    }
}

//! Action coefficients of the monodromy entries on Bethe vectors and the generic assembly of
//! form factors as linear combinations of scalar products.

use crate::error::{Error, Result};
use crate::model::{GaugeParams, ModelParams};
use crate::scalar::{omega, ScalarProducts};
use crate::theta::Kind;
use crate::{ipow, sign, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Theta kinds `(A, B)` entering α, β, γ.
    fn kinds(self) -> (Kind, Kind) {
        match self {
            Axis::X => (Kind::Four, Kind::Three),
            Axis::Y => (Kind::Three, Kind::Four),
            Axis::Z => (Kind::Two, Kind::One),
        }
    }

    fn constant(self) -> C64 {
        match self {
            Axis::Y => C64::new(0.0, -1.0),
            _ => C64::new(1.0, 0.0),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::Domain(format!("unknown axis '{s}'"))),
        }
    }
}

/// `α_l(z)`; `wn1` is the site inhomogeneity `w_{n+1} = ξ_p`.
pub fn alpha(axis: Axis, l: i64, z: C64, wn1: C64, gauge: &GaugeParams, model: &ModelParams) -> C64 {
    let (ka, kb) = axis.kinds();
    let xl = gauge.x_eps(l);
    axis.constant() * sign(l) * model.th(ka, gauge.y() + wn1) * model.th(kb, xl) * model.th1(z + xl)
}

/// `β_l(z; w_j, w_k)`.
pub fn beta(axis: Axis, l: i64, z: C64, wj: C64, wk: C64, gauge: &GaugeParams, model: &ModelParams) -> C64 {
    let (ka, kb) = axis.kinds();
    let xl = gauge.x_eps(l);
    axis.constant()
        * model.th(ka, C64::new(0.0, 0.0))
        * model.th(kb, gauge.t_k(l) - z)
        * model.th1(z - wj + xl)
        * model.th1(z - wk + xl)
}

/// `γ_l(z)`.
pub fn gamma(axis: Axis, l: i64, z: C64, gauge: &GaugeParams, model: &ModelParams) -> C64 {
    let (ka, kb) = axis.kinds();
    axis.constant() * model.th(ka, C64::new(0.0, 0.0)) * model.th(kb, gauge.s_k(l) + z)
}

/// `Σ_l e^{−iπμl/2} values_l`.
pub fn fourier_hat(values: &[C64; 4], mu: i64) -> C64 {
    (0..4).map(|l| ipow(-mu * l as i64) * values[l]).sum()
}

/// Inverse of [`fourier_hat`]: `values_l = ¼ Σ_μ e^{iπμl/2} hat_μ`.
pub fn fourier_inverse(hats: &[C64; 4], l: i64) -> C64 {
    (0..4).map(|mu| ipow(mu as i64 * l) * hats[mu]).sum::<C64>() / 4.0
}

fn hat_of<F: Fn(i64) -> C64>(f: F, mu: i64) -> C64 {
    fourier_hat(&[f(0), f(1), f(2), f(3)], mu)
}

/// Coefficients multiplying scalar products in the action formula for `w̄ = {ū, ξ_p}`.
#[derive(Clone, Debug)]
pub struct ActionCoefficients {
    pub axis: Axis,
    pub lambda: i64,
    pub site: usize,
    /// Parameters `w̄ = {ū, ξ_p}`.
    pub w: Vec<C64>,
    /// `W0[μ][k]`, multiplies `𝐒^{(μ)}(w̄_k)`.
    pub w0: [Vec<C64>; 4],
    /// `Wminus[μ]` over pairs `(k, l)` with `k > l`, multiplies `𝐒^{(μ)}(w̄_{k,l})`.
    pub wminus: [Vec<((usize, usize), C64)>; 4],
    /// `Wplus[μ]`, multiplies `𝐒^{(μ)}(w̄)`.
    pub wplus: [C64; 4],
}

impl ActionCoefficients {
    pub fn new(
        axis: Axis,
        lambda: i64,
        site: usize,
        ket: &[C64],
        gauge: &GaugeParams,
        model: &ModelParams,
    ) -> Result<Self> {
        if site == 0 || site > model.n_sites() {
            return Err(Error::Domain(format!("site {site} out of range 1..={}", model.n_sites())));
        }
        let m = model;
        let g = gauge;
        let xi = m.xi_site(site);
        let mut w = ket.to_vec();
        w.push(xi);
        let n = ket.len();
        let zero = C64::new(0.0, 0.0);
        let th1_yxi = guard(m, Kind::One, g.y() + xi, "theta_1(y + xi_p)")?;
        let t1x = guard(m, Kind::One, g.x(), "theta_1(x)")?;
        let t2x = guard(m, Kind::Two, g.x(), "theta_2(x)")?;
        let th2_0 = m.th2(zero);

        let den0 = 4.0 * th1_yxi * t1x * t2x;
        let den_minus = 2.0 * th1_yxi * th2_0 * t1x * t1x * t2x * t2x;

        let mut w0: [Vec<C64>; 4] = Default::default();
        let mut wminus: [Vec<((usize, usize), C64)>; 4] = Default::default();
        let mut wplus = [zero; 4];

        // μ-independent pieces.
        let mut fprod = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut p = C64::new(1.0, 0.0);
            for j in 0..=n {
                if j != k {
                    p *= m.f(w[k], w[j])?;
                }
            }
            let h = m.h(w[k], xi);
            if h.norm() == 0.0 {
                return Err(Error::Pole { what: "action coefficient h(w_k, xi_p)", at: w[k] });
            }
            fprod.push(p / h);
        }
        let mut omegas = Vec::new();
        for k in 0..=n {
            for l in 0..k {
                omegas.push(((k, l), omega(k, l, xi, &w, m)?));
            }
        }

        for mu in 0..4i64 {
            let lm = lambda - mu;
            for k in 0..=n {
                let wk = w[k];
                let b_mu = sign(n as i64) * ipow(mu) * m.a(wk) - ipow(-mu) * m.d(wk);
                let ah = hat_of(|l| alpha(axis, l, xi - wk, xi, g, m), lm);
                w0[mu as usize].push(ah * fprod[k] * b_mu / den0);
            }
            for &((k, l), om) in &omegas {
                let bh = hat_of(|ll| beta(axis, ll, xi, w[k], w[l], g, m), lm);
                wminus[mu as usize].push(((k, l), bh * om / den_minus));
            }
            let gh = hat_of(|l| gamma(axis, l, xi, g, m), lm);
            wplus[mu as usize] = -th2_0 * gh / (8.0 * th1_yxi);
        }
        Ok(Self { axis, lambda, site, w, w0, wminus, wplus })
    }
}

fn guard(m: &ModelParams, kind: Kind, z: C64, what: &str) -> Result<C64> {
    let v = m.tau().eval(kind, z);
    if v.is_zero() {
        return Err(Error::GaugeGuard(format!("{what} vanishes")));
    }
    Ok(v.value)
}

/// The three partial sums of the generic assembly and their total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct GenericParts {
    /// Terms with one parameter removed (scalar products with `n` parameters).
    pub zero: C64,
    /// Terms with two parameters removed (`n−1`).
    pub minus: C64,
    /// The term with all parameters kept (`n+1`).
    pub plus: C64,
    pub total: C64,
    /// Largest magnitude of any single term, used to normalize cancellations.
    pub scale: f64,
}

/// `𝐅_a^{ν,λ}(v̄|ū)` at site `p` as a linear combination of scalar products.
#[allow(clippy::too_many_arguments)]
pub fn assemble_ff_generic(
    axis: Axis,
    nu: i64,
    lambda: i64,
    bra: &[C64],
    ket: &[C64],
    site: usize,
    gauge: &GaugeParams,
    model: &ModelParams,
) -> Result<GenericParts> {
    let sp = ScalarProducts::new(model, *gauge, nu, bra)?;
    assemble_with(&sp, axis, lambda, ket, site)
}

/// As [`assemble_ff_generic`], reusing a bra context.
pub fn assemble_with(
    sp: &ScalarProducts<'_>,
    axis: Axis,
    lambda: i64,
    ket: &[C64],
    site: usize,
) -> Result<GenericParts> {
    let model = sp.model();
    let coeff = ActionCoefficients::new(axis, lambda, site, ket, sp.gauge(), model)?;
    let w = &coeff.w;
    let n = ket.len();
    let mut parts = GenericParts::default();
    let add = |slot: &mut C64, term: C64, scale: &mut f64| {
        *slot += term;
        *scale = scale.max(term.norm());
    };
    for mu in 0..4i64 {
        let mi = mu as usize;
        for k in 0..=n {
            let c = coeff.w0[mi][k];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let rest: Vec<C64> = (0..=n).filter(|&j| j != k).map(|j| w[j]).collect();
            let s = sp.s_indexed(mu, &rest)?;
            add(&mut parts.zero, c * s, &mut parts.scale);
        }
        for &((k, l), c) in &coeff.wminus[mi] {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let rest: Vec<C64> = (0..=n).filter(|&j| j != k && j != l).map(|j| w[j]).collect();
            let s = sp.s_indexed(mu, &rest)?;
            add(&mut parts.minus, c * s, &mut parts.scale);
        }
        let s = sp.s_indexed(mu, w)?;
        add(&mut parts.plus, coeff.wplus[mi] * s, &mut parts.scale);
    }
    parts.total = parts.zero + parts.minus + parts.plus;
    Ok(parts)
}

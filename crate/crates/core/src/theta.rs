//! Jacobi theta functions with nome `q = exp(iπτ)`.
//!
//! Series follow the convention `θ₁(u|τ) = -i Σ (-1)^k q^{(k+1/2)²} e^{iπ(2k+1)u}`,
//! so that `θ₁(u+1) = -θ₁(u)` and `θ₁(u+τ) = -e^{-iπ(2u+τ)} θ₁(u)`.

use crate::error::{Error, Result};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Hard cap on the number of series shells.
pub const MAX_TERMS: usize = 64;
/// Relative size of the last shell at which summation stops.
pub const SERIES_CUTOFF: f64 = 1e-17;
/// `|θ(z)| < ZERO_TOL * scale` is treated as a zero.
pub const ZERO_TOL: f64 = 1e-10;
/// Smallest `Im τ` for which the series is guaranteed to converge within [`MAX_TERMS`] shells.
pub const MIN_IM_TAU: f64 = 5e-3;

const I: C64 = C64::new(0.0, 1.0);

/// Which of the four Jacobi theta functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    One,
    Two,
    Three,
    Four,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::One, Kind::Two, Kind::Three, Kind::Four];

    /// Kind from its conventional index 1..=4.
    pub fn from_index(a: u8) -> Result<Kind> {
        match a {
            1 => Ok(Kind::One),
            2 => Ok(Kind::Two),
            3 => Ok(Kind::Three),
            4 => Ok(Kind::Four),
            _ => Err(Error::Domain(format!("theta index {a} not in 1..=4"))),
        }
    }

    fn half_integer(self) -> bool {
        matches!(self, Kind::One | Kind::Two)
    }

    // Sign picked up under u -> u + 1.
    fn sign_one(self) -> f64 {
        if self.half_integer() {
            -1.0
        } else {
            1.0
        }
    }

    // Sign in front of e^{-iπ(2u+τ)} under u -> u + τ.
    fn sign_tau(self) -> f64 {
        match self {
            Kind::One | Kind::Four => -1.0,
            Kind::Two | Kind::Three => 1.0,
        }
    }

    fn coefficient(self, j: i64) -> C64 {
        let alt = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        match self {
            Kind::One => -I * alt,
            Kind::Two | Kind::Three => C64::new(1.0, 0.0),
            Kind::Four => C64::new(alt, 0.0),
        }
    }
}

/// Value, derivative and magnitude scale of a theta evaluation.
#[derive(Clone, Copy, Debug)]
pub struct ThetaValue {
    pub value: C64,
    pub derivative: C64,
    /// Sum of term magnitudes times the quasi-periodicity factor; reference for zero detection.
    pub scale: f64,
}

impl ThetaValue {
    pub fn is_zero(&self) -> bool {
        self.value.norm() < ZERO_TOL * self.scale
    }
}

/// A point `z = reduced + m + nτ` with `reduced` in the fundamental cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    pub z: C64,
    pub reduced: C64,
    pub m: i64,
    pub n: i64,
}

/// Modular parameter τ with `Im τ > 0` and its nome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularParameter {
    tau: C64,
    nome: C64,
}

impl ModularParameter {
    pub fn new(tau: C64) -> Result<Self> {
        if tau.im.is_nan() || tau.im <= 0.0 || !tau.re.is_finite() {
            return Err(Error::Domain(format!("Im tau must be positive, got {tau}")));
        }
        if tau.im < MIN_IM_TAU {
            return Err(Error::NonConvergence(format!(
                "theta series cannot converge within {MAX_TERMS} terms for Im tau = {}",
                tau.im
            )));
        }
        Ok(Self { tau, nome: (I * PI * tau).exp() })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn nome(&self) -> C64 {
        self.nome
    }

    /// The parameter `2τ`.
    pub fn doubled(&self) -> Self {
        let tau = self.tau * 2.0;
        Self { tau, nome: (I * PI * tau).exp() }
    }

    /// Coordinates `(α, β)` with `z = α + βτ`.
    pub fn lattice_coords(&self, z: C64) -> (f64, f64) {
        let beta = z.im / self.tau.im;
        (z.re - beta * self.tau.re, beta)
    }

    /// Reduce `z` to the cell `{α + βτ : 0 ≤ α, β < 1}`.
    pub fn reduce(&self, z: C64) -> TorusPoint {
        let (_, beta) = self.lattice_coords(z);
        let n = beta.floor();
        let shifted = z - self.tau * n;
        let (alpha, _) = self.lattice_coords(shifted);
        let m = alpha.floor();
        let mut reduced = shifted - m;
        let (mut m, mut n) = (m as i64, n as i64);
        // Rounding can land exactly on the upper edge.
        let (a, b) = self.lattice_coords(reduced);
        if b >= 1.0 {
            reduced -= self.tau;
            n += 1;
        }
        if a >= 1.0 {
            reduced -= 1.0;
            m += 1;
        }
        TorusPoint { z, reduced, m, n }
    }

    /// Distance of `z` from the nearest lattice point `m + nτ`.
    pub fn lattice_distance(&self, z: C64) -> f64 {
        let (alpha, beta) = self.lattice_coords(z);
        let n = beta.round();
        let m = alpha.round();
        let mut best = f64::INFINITY;
        for dn in -1..=1 {
            for dm in -1..=1 {
                let lp = C64::new(m + dm as f64, 0.0) + self.tau * (n + dn as f64);
                best = best.min((z - lp).norm());
            }
        }
        best
    }

    pub fn eval(&self, kind: Kind, u: C64) -> ThetaValue {
        // Centre the argument: |Re u0| ≤ 1/2, |Im u0| ≤ Im τ / 2.
        let n = (u.im / self.tau.im).round();
        let m = (u - self.tau * n).re.round();
        let u0 = u - self.tau * n - m;
        let (value, derivative, scale) = self.series(kind, u0);
        if n == 0.0 && m == 0.0 {
            return ThetaValue { value, derivative, scale };
        }
        let sign = kind.sign_one().powi(m as i32) * kind.sign_tau().powi(n as i32);
        let factor = (-I * PI * (u0 * (2.0 * n) + self.tau * (n * n))).exp() * sign;
        ThetaValue {
            value: factor * value,
            derivative: factor * (derivative - I * (2.0 * PI * n) * value),
            scale: factor.norm() * scale,
        }
    }

    fn series(&self, kind: Kind, u: C64) -> (C64, C64, f64) {
        let mut value = C64::new(0.0, 0.0);
        let mut derivative = C64::new(0.0, 0.0);
        let mut scale = 0.0;
        for k in 0..=MAX_TERMS as i64 {
            let js: &[i64] = if kind.half_integer() {
                &[k, -k - 1]
            } else if k == 0 {
                &[0]
            } else {
                &[k, -k]
            };
            let mut shell = 0.0;
            for &j in js {
                let c = if kind.half_integer() { j as f64 + 0.5 } else { j as f64 };
                let term = kind.coefficient(j) * (I * PI * (self.tau * (c * c) + u * (2.0 * c))).exp();
                value += term;
                derivative += term * I * (2.0 * PI * c);
                shell += term.norm();
            }
            scale += shell;
            if k > 0 && shell < SERIES_CUTOFF * scale {
                break;
            }
        }
        (value, derivative, scale)
    }

    pub fn theta(&self, kind: Kind, u: C64) -> C64 {
        self.eval(kind, u).value
    }

    pub fn theta_prime(&self, kind: Kind, u: C64) -> C64 {
        self.eval(kind, u).derivative
    }

    pub fn th1(&self, u: C64) -> C64 {
        self.theta(Kind::One, u)
    }
    pub fn th2(&self, u: C64) -> C64 {
        self.theta(Kind::Two, u)
    }
    pub fn th3(&self, u: C64) -> C64 {
        self.theta(Kind::Three, u)
    }
    pub fn th4(&self, u: C64) -> C64 {
        self.theta(Kind::Four, u)
    }

    /// `θ_a'(z)/θ_a(z)`, or a pole error at a zero of `θ_a`.
    pub fn log_derivative(&self, kind: Kind, z: C64) -> Result<C64> {
        let n = (z.im / self.tau.im).round();
        let m = (z - self.tau * n).re.round();
        let u0 = z - self.tau * n - m;
        let (value, derivative, scale) = self.series(kind, u0);
        if value.norm() < ZERO_TOL * scale {
            return Err(Error::Pole { what: "theta log-derivative", at: z });
        }
        Ok(derivative / value - I * (2.0 * PI * n))
    }
}

/// `θ_a(u|τ)`.
pub fn theta(kind: Kind, u: C64, tau: &ModularParameter) -> C64 {
    tau.theta(kind, u)
}

/// `θ₁'(u|τ)`.
pub fn theta1_prime(u: C64, tau: &ModularParameter) -> C64 {
    tau.theta_prime(Kind::One, u)
}

pub fn theta_log_derivative(kind: Kind, z: C64, tau: &ModularParameter) -> Result<C64> {
    tau.log_derivative(kind, z)
}

pub fn reduce_to_fundamental(z: C64, tau: &ModularParameter) -> TorusPoint {
    tau.reduce(z)
}

/// Maximum relative residual per identity.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub tau: [f64; 2],
    pub samples: usize,
    pub seed: u64,
    pub residuals: Vec<(String, f64)>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

fn rel(lhs: C64, rhs: C64, scale: f64) -> f64 {
    (lhs - rhs).norm() / scale.max(lhs.norm()).max(rhs.norm()).max(f64::MIN_POSITIVE)
}

fn random_point(rng: &mut ChaCha8Rng, tau: &ModularParameter) -> C64 {
    let a: f64 = rng.gen_range(-0.5..1.5);
    let b: f64 = rng.gen_range(-0.5..1.0);
    C64::new(a, 0.0) + tau.tau() * b
}

/// Evaluate the theta identity corpus at `sample_count` seeded random points.
///
/// Residuals are relative to the largest magnitude among the terms of each identity.
pub fn identity_suite(tau: &ModularParameter, sample_count: usize, seed: u64) -> IdentityReport {
    let t = tau;
    let t2 = tau.doubled();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = [
        "quasi-periodicity",
        "shift-representations",
        "parity",
        "addition-theta1-theta3",
        "doubling-sum",
        "doubling-product",
        "doubling-square",
        "half-period-shifts",
        "gauge-combination-1",
        "gauge-combination-2",
        "root-sum",
        "residue-sum",
        "derivative-product",
    ];
    let mut worst = vec![0.0f64; names.len()];
    let half = C64::new(0.5, 0.0);
    let zero = C64::new(0.0, 0.0);
    for _ in 0..sample_count.max(1) {
        let u = random_point(&mut rng, t);
        let v = random_point(&mut rng, t);
        let mut r = [0.0f64; 13];

        let a = t.th1(u);
        let e = (-I * PI * (u * 2.0 + t.tau())).exp();
        r[0] = rel(t.th1(u + 1.0), -a, a.norm()).max(rel(t.th1(u + t.tau()), -e * a, a.norm()));

        let pre = (I * PI * (u + t.tau() / 4.0)).exp();
        r[1] = rel(t.th2(u), t.th1(u + half), 0.0)
            .max(rel(t.th3(u), pre * t.th1(u + half + t.tau() / 2.0), 0.0))
            .max(rel(t.th4(u), -I * pre * t.th1(u + t.tau() / 2.0), 0.0));

        r[2] = rel(t.th1(-u), -t.th1(u), 0.0)
            .max(rel(t.th2(-u), t.th2(u), 0.0))
            .max(rel(t.th3(-u), t.th3(u), 0.0))
            .max(rel(t.th4(-u), t.th4(u), 0.0));

        {
            let l1 = t.th1(u + v) * t.th3(u - v);
            let l2 = t.th1(u - v) * t.th3(u + v);
            let den = t.th2(u) * t.th4(u);
            let lhs = (l1 - l2) / den;
            let rhs = 2.0 * t.th1(v) * t.th3(v) / (t.th2(zero) * t.th4(zero));
            r[3] = rel(lhs, rhs, (l1.norm() + l2.norm()) / den.norm());
        }
        {
            let lhs = 2.0 * t2.th1(u + v) * t2.th4(u - v);
            let p1 = t.th1(u) * t.th2(v);
            let p2 = t.th2(u) * t.th1(v);
            r[4] = rel(lhs, p1 + p2, p1.norm() + p2.norm());
        }
        {
            let lhs = t.th1(u) * t.th2(v);
            let p1 = t2.th1(u + v) * t2.th4(u - v);
            let p2 = t2.th4(u + v) * t2.th1(u - v);
            r[5] = rel(lhs, p1 + p2, p1.norm() + p2.norm());
            r[6] = rel(t.th1(u) * t.th2(u), t2.th1(u * 2.0) * t2.th4(zero), 0.0);
        }
        {
            let mu1: i32 = rng.gen_range(-4..=4);
            let h = C64::new(mu1 as f64 / 2.0, 0.0);
            let p1 = t2.th4(u + h);
            let p2 = t2.th4(u - h);
            let d4 = rel(p1, p2, 0.0);
            let q1 = t2.th1(u + h);
            let q2 = t2.th1(u - h);
            let ip = I.powi(mu1) + (-I).powi(mu1);
            let d1 = rel(q1 + q2, ip * t2.th1(u), q1.norm() + q2.norm());
            r[7] = d4.max(d1);
        }
        {
            // Gauge-type combinations with ε = 0, 1.
            let s = random_point(&mut rng, t);
            let tt = random_point(&mut rng, t);
            let xi = random_point(&mut rng, t);
            let vk = random_point(&mut rng, t);
            let y = (s - tt) / 2.0;
            let mut m1 = 0.0f64;
            let mut m2 = 0.0f64;
            for eps in 0..2 {
                let sh = eps as f64 / 2.0;
                let (se, te) = (s + sh, tt + sh);
                let xe = (se + te) / 2.0;
                let a1 = t.th1(xe) * t.th2(y + xi) * t.th2(vk + y) * t.th1(vk - xi - xe);
                let a2 = t.th2(zero) * t.th1(se + xi) * t.th1(vk - te) * t.th2(vk - xi);
                let a3 = -t.th2(xe) * t.th1(y + xi) * t.th1(vk + y) * t.th2(vk - xi - xe);
                m1 = m1.max(rel(a1 - a2, a3, a1.norm() + a2.norm()));
                let b1 = t.th1(xe) * t.th2(y + xi) * t.th1(vk + y) * t.th2(vk - xi + xe);
                let b2 = t.th2(zero) * t.th1(te - xi) * t.th2(vk + se) * t.th1(vk - xi);
                let b3 = t.th2(xe) * t.th1(y + xi) * t.th2(vk + y) * t.th1(vk - xi + xe);
                m2 = m2.max(rel(b1 - b2, b3, b1.norm() + b2.norm()));
            }
            r[8] = m1;
            r[9] = m2;
            let us = [random_point(&mut rng, t), random_point(&mut rng, t)];
            let vs = [random_point(&mut rng, t), random_point(&mut rng, t)];
            let eps = rng.gen_range(0..2);
            r[10] = root_sum_residual(t, &us, &vs, s, tt, xi, eps);
        }
        {
            let w1 = random_point(&mut rng, t);
            let w2 = random_point(&mut rng, t);
            r[11] = residue_sum_residual(t, w1, w2);
        }
        {
            let lhs = t.theta_prime(Kind::One, zero);
            let rhs = PI * t.th2(zero) * t.th3(zero) * t.th4(zero);
            r[12] = rel(lhs, rhs, 0.0);
        }
        for (w, x) in worst.iter_mut().zip(r.iter()) {
            *w = w.max(*x);
        }
    }
    IdentityReport {
        tau: [t.tau().re, t.tau().im],
        samples: sample_count.max(1),
        seed,
        residuals: names.iter().map(|s| s.to_string()).zip(worst).collect(),
    }
}

/// Relative residual of the sum-over-roots identity for generic sets `ū`, `v̄` of equal size.
pub fn root_sum_residual(t: &ModularParameter, us: &[C64], vs: &[C64], s: C64, tt: C64, xi: C64, eps: u8) -> f64 {
    let sh = eps as f64 / 2.0;
    let se = s + sh;
    let xe = (s + tt) / 2.0 + sh;
    let y = (s - tt) / 2.0;
    let r: C64 = vs.iter().sum::<C64>() - us.iter().sum::<C64>();
    let mut lhs = C64::new(0.0, 0.0);
    let mut mag = 0.0;
    for (k, &uk) in us.iter().enumerate() {
        let mut term = t.th1(uk - xi - xe) * t.th2(r + uk + se) / (t.th2(uk - xi) * t.th1(uk + y));
        for &v in vs {
            term *= t.th1(uk - v);
        }
        for (j, &uj) in us.iter().enumerate() {
            if j != k {
                term /= t.th1(uk - uj);
            }
        }
        mag += term.norm();
        lhs += term;
    }
    let mut r1 = t.th1(xi + se) * t.th2(r + xe) / t.th2(y + xi);
    let mut r2 = t.th2(xe) * t.th1(r + xi + se) / t.th2(xi + y);
    for &v in vs {
        r1 *= t.th1(y + v);
        r2 *= t.th2(xi - v);
    }
    for &u in us {
        r1 /= t.th1(y + u);
        r2 /= t.th2(xi - u);
    }
    rel(lhs, r1 - r2, mag.max(r1.norm()).max(r2.norm()))
}

/// Residue-sum check for `Φ(z) = θ₁'/θ₁(z-w₁) - θ₁'/θ₁(z-w₂)`: the cell boundary integral
/// vanishes and the two residues (from small circles) cancel.
pub fn residue_sum_residual(t: &ModularParameter, w1: C64, w2: C64) -> f64 {
    let phi = |z: C64| {
        t.log_derivative(Kind::One, z - w1).unwrap_or(C64::new(f64::NAN, 0.0))
            - t.log_derivative(Kind::One, z - w2).unwrap_or(C64::new(f64::NAN, 0.0))
    };
    // Boundary of a cell offset so that neither pole lies on it.
    let corner = cell_corner_avoiding(t, &[w1, w2]);
    let boundary = contour_integral(&phi, &parallelogram(corner, t.tau()), 400);
    let radius = 0.25 * t.lattice_distance(w1 - w2).min(t.tau().im).min(0.5);
    let r1 = circle_integral(&phi, w1, radius, 128);
    let r2 = circle_integral(&phi, w2, radius, 128);
    let two_pi_i = I * (2.0 * PI);
    // Each residue is ±1, so residuals are already relative.
    let sum = ((r1 + r2) / two_pi_i).norm();
    let unit = ((r1 / two_pi_i) - 1.0).norm();
    (boundary.norm() / (2.0 * PI)).max(sum).max(unit)
}

/// Lower-left corner `c` such that no point lies within a margin of the cell edges starting at `c`.
pub fn cell_corner_avoiding(t: &ModularParameter, points: &[C64]) -> C64 {
    let mut best = (C64::new(0.0, 0.0), -1.0);
    for i in 0..16 {
        for j in 0..16 {
            let c = C64::new(-0.5 + i as f64 / 16.0 + 0.013, 0.0) + t.tau() * (-0.5 + j as f64 / 16.0 + 0.017);
            let margin = points
                .iter()
                .map(|&p| {
                    let (a, b) = t.lattice_coords(p - c);
                    let fa = a - a.floor();
                    let fb = b - b.floor();
                    fa.min(1.0 - fa).min(fb).min(1.0 - fb)
                })
                .fold(f64::INFINITY, f64::min);
            if margin > best.1 {
                best = (c, margin);
            }
        }
    }
    best.0
}

fn parallelogram(c: C64, tau: C64) -> [C64; 5] {
    [c, c + 1.0, c + 1.0 + tau, c + tau, c]
}

// Composite Simpson along a closed polyline.
fn contour_integral<F: Fn(C64) -> C64>(f: &F, path: &[C64], per_edge: usize) -> C64 {
    let n = per_edge + per_edge % 2;
    let mut total = C64::new(0.0, 0.0);
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let wgt = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += f(a + h * k as f64) * wgt;
        }
        total += s * h / 3.0;
    }
    total
}

/// `∮ f dz` over a circle by the trapezoid rule (spectrally accurate for analytic integrands).
pub fn circle_integral<F: Fn(C64) -> C64>(f: &F, centre: C64, radius: f64, points: usize) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for k in 0..points {
        let phase = C64::from_polar(1.0, 2.0 * PI * k as f64 / points as f64);
        total += f(centre + phase * radius) * phase * radius;
    }
    total * I * (2.0 * PI / points as f64)
}

//! Roots of `χ_ν`, twin pairing, and enumeration of twin-free singlet states.

use crate::error::{Error, Result};
use crate::model::{twin, ModelParams};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Arg increment above which a boundary segment is refined.
const MAX_ARG_STEP: f64 = PI / 6.0;
const EDGE_SAMPLES: usize = 16;
const MAX_SEGMENT_DEPTH: usize = 40;
const MAX_CELL_DEPTH: usize = 30;
/// Newton-converged roots closer than this (mod lattice) are a double root.
pub const DOUBLE_ROOT_TOL: f64 = 1e-8;

/// All roots of `χ_ν` in the fundamental cell.
#[derive(Clone, Debug, Serialize)]
pub struct RootSet {
    pub nu: i64,
    pub roots: Vec<C64>,
    pub residuals: Vec<f64>,
    /// Winding number of `χ_ν` around the cell boundary.
    pub winding: i64,
}

impl RootSet {
    pub fn residual_max(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// A twin-free on-shell singlet state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheState {
    pub nu: i64,
    /// Roots as representatives satisfying the sum rule exactly (not necessarily cell-reduced).
    pub roots: Vec<C64>,
    pub nu1: i64,
    pub residual_max: f64,
    pub residuals: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<C64>,
    pub twin_free: bool,
}

impl BetheState {
    /// Build a state from roots, recording residuals, `𝒱_k` and the sum-rule integer.
    pub fn new(model: &ModelParams, nu: i64, roots: Vec<C64>) -> Result<Self> {
        if roots.len() != model.n_roots() {
            return Err(Error::ContractViolation(format!(
                "singlet state needs {} roots, got {}",
                model.n_roots(),
                roots.len()
            )));
        }
        let residuals: Vec<f64> = roots
            .iter()
            .map(|&u| {
                let (c, _, scale) = model.chi_with_derivative(nu, u);
                c.norm() / scale
            })
            .collect();
        let s = model.sum_rule_value(nu, &roots);
        let nu1 = s.re.round();
        if (s - nu1).norm() > model.tolerances.sum_rule {
            return Err(Error::SumRule(format!("sum rule residual {:.3e} for nu={nu}", (s - nu1).norm())));
        }
        let v = roots.iter().map(|&u| model.log_derivative_v(u)).collect::<Result<Vec<_>>>()?;
        let twin_free = roots.iter().enumerate().all(|(j, &a)| {
            roots.iter().skip(j + 1).all(|&b| !model.lattice_equal(twin(a), b) && !model.lattice_equal(a, b))
        });
        Ok(Self {
            nu,
            residual_max: residuals.iter().cloned().fold(0.0, f64::max),
            roots,
            nu1: nu1 as i64,
            residuals,
            v,
            twin_free,
        })
    }

    pub fn n(&self) -> usize {
        self.roots.len()
    }

    /// Recompute and check on-shell conditions against `model`.
    pub fn validate(&self, model: &ModelParams) -> Result<()> {
        let fresh = BetheState::new(model, self.nu, self.roots.clone())?;
        if fresh.residual_max > model.tolerances.root_residual {
            return Err(Error::ContractViolation(format!("root residual {:.3e} too large", fresh.residual_max)));
        }
        if !fresh.twin_free {
            return Err(Error::ContractViolation("state contains twins".into()));
        }
        Ok(())
    }

    /// Same state with root `k` moved to the last position.
    pub fn with_root_last(&self, k: usize) -> BetheState {
        let mut s = self.clone();
        let last = s.roots.len() - 1;
        s.roots.swap(k, last);
        s.residuals.swap(k, last);
        s.v.swap(k, last);
        s
    }

    /// The state obtained by replacing root `k` with its twin (same sector).
    pub fn flip(&self, model: &ModelParams, k: usize) -> Result<BetheState> {
        let mut roots = self.roots.clone();
        roots[k] = twin(roots[k]);
        BetheState::new(model, self.nu, roots)
    }

    /// `𝒱_k` recomputed from the model.
    pub fn log_derivative_v(&self, model: &ModelParams, k: usize) -> Result<C64> {
        model.log_derivative_v(self.roots[k])
    }

    /// True when both states consist of the same roots modulo the lattice.
    pub fn same_roots(&self, other: &BetheState, model: &ModelParams) -> bool {
        self.roots.len() == other.roots.len()
            && self.roots.iter().all(|&a| other.roots.iter().any(|&b| model.lattice_equal(a, b)))
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
}

struct Finder<'a> {
    model: &'a ModelParams,
    nu: i64,
    corner: C64,
}

impl<'a> Finder<'a> {
    fn point(&self, a: f64, b: f64) -> C64 {
        self.corner + a + self.model.tau().tau() * b
    }

    fn value(&self, z: C64) -> Result<C64> {
        let (c, _, scale) = self.model.chi_with_derivative(self.nu, z);
        if c.norm() < 1e-13 * scale {
            return Err(Error::Subdivision(format!("root on contour near {z}")));
        }
        Ok(c)
    }

    fn arg_change(&self, za: C64, zb: C64, fa: C64, fb: C64, depth: usize) -> Result<f64> {
        let d = (fb / fa).arg();
        let ratio = fb.norm() / fa.norm();
        if d.abs() < MAX_ARG_STEP && (0.5..2.0).contains(&ratio) {
            return Ok(d);
        }
        if depth >= MAX_SEGMENT_DEPTH {
            return Err(Error::Subdivision(format!("argument tracking did not resolve near {za}")));
        }
        let zm = (za + zb) / 2.0;
        let fm = self.value(zm)?;
        Ok(self.arg_change(za, zm, fa, fm, depth + 1)? + self.arg_change(zm, zb, fm, fb, depth + 1)?)
    }

    fn winding(&self, c: &Cell) -> Result<i64> {
        let corners = [(c.a0, c.b0), (c.a1, c.b0), (c.a1, c.b1), (c.a0, c.b1), (c.a0, c.b0)];
        let mut total = 0.0;
        for e in corners.windows(2) {
            let ((a0, b0), (a1, b1)) = (e[0], e[1]);
            let mut prev_z = self.point(a0, b0);
            let mut prev_f = self.value(prev_z)?;
            for k in 1..=EDGE_SAMPLES {
                let s = k as f64 / EDGE_SAMPLES as f64;
                let z = self.point(a0 + (a1 - a0) * s, b0 + (b1 - b0) * s);
                let f = self.value(z)?;
                total += self.arg_change(prev_z, z, prev_f, f, 0)?;
                prev_z = z;
                prev_f = f;
            }
        }
        let w = total / (2.0 * PI);
        let r = w.round();
        if (w - r).abs() > 0.05 {
            return Err(Error::Subdivision(format!("non-integer winding {w}")));
        }
        Ok(r as i64)
    }

    fn newton(&self, z0: C64) -> Option<C64> {
        let mut z = z0;
        for _ in 0..100 {
            let (c, dc, _) = self.model.chi_with_derivative(self.nu, z);
            if dc.norm() == 0.0 {
                return None;
            }
            let step = c / dc;
            z -= step;
            if !z.re.is_finite() || !z.im.is_finite() {
                return None;
            }
            if step.norm() < 1e-15 * z.norm().max(1.0) {
                break;
            }
        }
        Some(z)
    }

    fn inside(&self, c: &Cell, z: C64) -> bool {
        let (a, b) = self.model.tau().lattice_coords(z - self.corner);
        a >= c.a0 && a < c.a1 && b >= c.b0 && b < c.b1
    }

    fn search(&self, c: Cell, w: i64, depth: usize, out: &mut Vec<C64>) -> Result<()> {
        if w == 0 {
            return Ok(());
        }
        if w == 1 {
            let centre = self.point((c.a0 + c.a1) / 2.0, (c.b0 + c.b1) / 2.0);
            if let Some(z) = self.newton(centre) {
                if self.inside(&c, z) {
                    out.push(z);
                    return Ok(());
                }
            }
        }
        if depth >= MAX_CELL_DEPTH || (c.a1 - c.a0) < 1e-9 {
            return Err(Error::Degeneracy(format!(
                "{w} roots of chi_{} unresolved near {}",
                self.nu,
                self.point(c.a0, c.b0)
            )));
        }
        let mut last_err = None;
        for attempt in 0..4 {
            let s = 0.5 + 0.0173 * attempt as f64;
            let am = c.a0 + (c.a1 - c.a0) * s;
            let bm = c.b0 + (c.b1 - c.b0) * (1.0 - s);
            let kids = [
                Cell { a0: c.a0, a1: am, b0: c.b0, b1: bm },
                Cell { a0: am, a1: c.a1, b0: c.b0, b1: bm },
                Cell { a0: c.a0, a1: am, b0: bm, b1: c.b1 },
                Cell { a0: am, a1: c.a1, b0: bm, b1: c.b1 },
            ];
            let ws: Result<Vec<i64>> = kids.iter().map(|k| self.winding(k)).collect();
            match ws {
                Ok(ws) if ws.iter().sum::<i64>() == w && ws.iter().all(|&x| x >= 0) => {
                    for (k, wk) in kids.iter().zip(ws) {
                        self.search(*k, wk, depth + 1, out)?;
                    }
                    return Ok(());
                }
                Ok(ws) => last_err = Some(Error::Subdivision(format!("child windings {ws:?} do not sum to {w}"))),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Subdivision("subdivision failed".into())))
    }
}

/// Locate all `N` roots of `χ_ν` in the fundamental cell.
///
/// Winding numbers of rectangle subdivisions isolate single roots, which are then polished
/// by Newton iteration and reduced to the cell; returned sorted by `(Re, Im)`.
pub fn find_all_roots(nu: i64, model: &ModelParams) -> Result<RootSet> {
    let n_sites = model.n_sites() as i64;
    let mut last_err = None;
    // A generic offset keeps roots with real coordinates off the contour.
    for corner in [(-0.0371, -0.0293), (-0.0613, -0.0457), (-0.0157, -0.0781)] {
        let finder = Finder { model, nu, corner: C64::new(corner.0, 0.0) + model.tau().tau() * corner.1 };
        let cell = Cell { a0: 0.0, a1: 1.0, b0: 0.0, b1: 1.0 };
        let result = finder.winding(&cell).and_then(|w| {
            if w != n_sites {
                return Err(Error::Subdivision(format!("winding number {w} differs from N = {n_sites}")));
            }
            let mut raw = Vec::new();
            finder.search(cell, w, 0, &mut raw)?;
            Ok((w, raw))
        });
        match result {
            Ok((w, raw)) => return finish_roots(model, nu, w, raw),
            Err(e @ Error::Degeneracy(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Subdivision("no contour succeeded".into())))
}

fn finish_roots(model: &ModelParams, nu: i64, winding: i64, raw: Vec<C64>) -> Result<RootSet> {
    let tau = model.tau();
    let mut roots: Vec<C64> = raw.into_iter().map(|z| tau.reduce(z).reduced).collect();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if tau.lattice_distance(roots[i] - roots[j]) < DOUBLE_ROOT_TOL {
                return Err(Error::Degeneracy(format!("double root of chi_{nu} at {}", roots[i])));
            }
        }
    }
    if roots.len() as i64 != winding {
        return Err(Error::Subdivision(format!("found {} roots, winding {winding}", roots.len())));
    }
    sort_roots(&mut roots);
    let residuals: Vec<f64> = roots
        .iter()
        .map(|&u| {
            let (c, _, scale) = model.chi_with_derivative(nu, u);
            c.norm() / scale
        })
        .collect();
    if let Some(bad) = residuals.iter().position(|&r| r > model.tolerances.root_residual) {
        return Err(Error::NonConvergence(format!("root {} has residual {:.3e}", roots[bad], residuals[bad])));
    }
    Ok(RootSet { nu, roots, residuals, winding })
}

fn sort_key(z: C64) -> (i64, f64) {
    ((z.re * 1e9).round() as i64, z.im)
}

fn sort_roots(roots: &mut [C64]) {
    roots.sort_by(|a, b| sort_key(*a).partial_cmp(&sort_key(*b)).unwrap());
}

/// Group cell roots into twin pairs `(u, u*)`; fails if some root has no partner.
pub fn pair_twins(roots: &[C64], model: &ModelParams) -> Result<Vec<(C64, C64)>> {
    let mut used = vec![false; roots.len()];
    let mut pairs = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let partner = (i + 1..roots.len()).find(|&j| !used[j] && model.lattice_equal(twin(roots[i]), roots[j]));
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
                pairs.push((roots[i], roots[j]));
            }
            None => return Err(Error::ContractViolation(format!("root {} has no twin", roots[i]))),
        }
    }
    Ok(pairs)
}

/// All one-per-pair selections passing the sum rule.
///
/// A selection passes when the `τ`-coordinate of `2Σu − Σξ − n/2` is an integer of the
/// parity of `ν`; roots are then moved by `±τ` until that coordinate equals `ν`, which
/// makes `ν₁` an integer.
pub fn enumerate_singlet_states(roots: &RootSet, model: &ModelParams) -> Result<Vec<BetheState>> {
    let nu = roots.nu;
    let pairs = pair_twins(&roots.roots, model)?;
    let n = pairs.len();
    if n != model.n_roots() {
        return Err(Error::ContractViolation(format!("{n} twin pairs for N = {}", model.n_sites())));
    }
    let tau = model.tau();
    let mut out = Vec::new();
    for mask in 0..(1u32 << n) {
        let mut us: Vec<C64> =
            pairs.iter().enumerate().map(|(k, p)| if mask >> k & 1 == 0 { p.0 } else { p.1 }).collect();
        let base = model.sum_rule_value(0, &us);
        let (_, b) = tau.lattice_coords(base);
        let mut bi = b.round();
        if (b - bi).abs() > model.tolerances.sum_rule || (bi as i64 - nu).rem_euclid(2) != 0 {
            continue;
        }
        while bi > nu as f64 {
            let j = (0..n).max_by(|&x, &y| us[x].im.partial_cmp(&us[y].im).unwrap()).unwrap();
            us[j] -= tau.tau();
            bi -= 2.0;
        }
        while bi < nu as f64 {
            let j = (0..n).min_by(|&x, &y| us[x].im.partial_cmp(&us[y].im).unwrap()).unwrap();
            us[j] += tau.tau();
            bi += 2.0;
        }
        us.sort_by(|a, b| sort_key(tau.reduce(*a).reduced).partial_cmp(&sort_key(tau.reduce(*b).reduced)).unwrap());
        out.push(BetheState::new(model, nu, us)?);
    }
    Ok(out)
}

/// Roots and states of sector `ν` in one call.
pub fn singlet_states(nu: i64, model: &ModelParams) -> Result<Vec<BetheState>> {
    enumerate_singlet_states(&find_all_roots(nu, model)?, model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn homogeneous_n4_roots() {
        let m = ModelParams::homogeneous(4, c(0.0, 1.0)).unwrap();
        let r0 = find_all_roots(0, &m).unwrap();
        assert_eq!(r0.winding, 4);
        assert_eq!(r0.roots.len(), 4);
        let expect = [
            c(0.25, 0.13862127745421),
            c(0.25, 0.86137872254579),
            c(0.75, 0.13862127745421),
            c(0.75, 0.86137872254579),
        ];
        for (a, b) in r0.roots.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
        let r1 = find_all_roots(1, &m).unwrap();
        assert!(r1.roots.iter().any(|z| (z - c(0.25, 0.0)).norm() < 1e-9));
        assert!(r1.residual_max() < 1e-12);
    }

    #[test]
    fn pairs_and_states() {
        let m = ModelParams::random_inhomogeneous(4, c(0.3, 0.7), 1).unwrap();
        for nu in 0..4 {
            let r = find_all_roots(nu, &m).unwrap();
            let pairs = pair_twins(&r.roots, &m).unwrap();
            assert_eq!(pairs.len(), 2);
            let states = enumerate_singlet_states(&r, &m).unwrap();
            assert_eq!(states.len(), 4);
            for s in &states {
                assert!(s.twin_free);
                let v = m.sum_rule_value(nu, &s.roots);
                assert!((v - v.re.round()).norm() < 1e-9);
                assert_eq!(v.re.round() as i64, s.nu1);
            }
        }
    }

    #[test]
    fn twin_swap_shifts_nu1_parity() {
        let m = ModelParams::random_inhomogeneous(4, c(0.3, 0.7), 1).unwrap();
        let s = &singlet_states(0, &m).unwrap()[0];
        let f = s.flip(&m, 0).unwrap();
        assert_eq!((f.nu1 - s.nu1).rem_euclid(2), 1);
    }

    #[test]
    fn perturbed_root_rejected() {
        let m = ModelParams::random_inhomogeneous(4, c(0.3, 0.7), 1).unwrap();
        let mut s = singlet_states(1, &m).unwrap()[0].clone();
        s.roots[0] += 1e-3;
        assert!(s.validate(&m).is_err());
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        let m = ModelParams::random_inhomogeneous(4, c(0.3, 0.7), 1).unwrap();
        let s = &singlet_states(0, &m).unwrap()[0];
        for (k, &u) in s.roots.iter().enumerate() {
            let h = 1e-6;
            let g = |z: C64| m.a(z) / m.d(z);
            let fd = (g(u + h) / g(u - h)).ln() / (2.0 * h);
            let v = s.log_derivative_v(&m, k).unwrap();
            assert!((fd - v).norm() / v.norm() < 1e-7, "{fd} vs {v}");
            assert!(v.norm() > 1e-6);
        }
        assert!(m.log_derivative_v(m.xi_site(1)).is_err());
    }

    #[test]
    fn on_shell_consequences() {
        let m = ModelParams::random_inhomogeneous(6, c(0.0, 1.0), 2).unwrap();
        for nu in 0..2 {
            let s = &singlet_states(nu, &m).unwrap()[0];
            for &vk in &s.roots {
                let a = m.a(vk);
                let lhs = crate::sign(3) * crate::ipow(nu) * a - crate::ipow(-nu) * m.d(vk);
                let rhs = 2.0 * crate::sign(3) * crate::ipow(nu) * a;
                assert!((lhs - rhs).norm() < 1e-10 * (a.norm() + m.d(vk).norm()));
                for &vl in &s.roots {
                    let det = a * m.d(vl) - m.a(vl) * m.d(vk);
                    assert!(det.norm() < 1e-10 * (a.norm() * m.d(vl).norm() + m.a(vl).norm() * m.d(vk).norm()));
                }
            }
        }
    }

    #[test]
    fn state_json_roundtrip() {
        let m = ModelParams::homogeneous(4, c(0.0, 1.0)).unwrap();
        let s = &singlet_states(0, &m).unwrap()[0];
        let json = serde_json::to_string(s).unwrap();
        assert!(json.contains("\"V\""));
        let back: BetheState = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, s);
    }
}

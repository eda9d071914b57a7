//! Exact diagonalization of small chains: explicit monodromy and transfer matrices, the
//! Hamiltonian built two ways, level matching against Bethe states, and spin matrix elements.

use crate::action::Axis;
use crate::bethe::BetheState;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ETA, MAX_SITES};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type OperatorMatrix = DMatrix<C64>;

/// Generic anchors tried in turn when the first one shows an accidental degeneracy.
pub const ANCHORS: [C64; 3] = [C64::new(0.11, 0.07), C64::new(0.23, -0.05), C64::new(-0.17, 0.13)];
pub const SAMPLE_COUNT: usize = 5;
/// Relative eigenvalue gap accepted when matching a Bethe state to a level.
pub const MATCH_TOL: f64 = 1e-8;

/// Operator entries of the monodromy matrix in the auxiliary space.
#[derive(Clone, Debug)]
pub struct Monodromy {
    pub a: OperatorMatrix,
    pub b: OperatorMatrix,
    pub c: OperatorMatrix,
    pub d: OperatorMatrix,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Kronecker product with `x` as the left factor.
fn kron(x: &OperatorMatrix, y: &[[C64; 2]; 2]) -> OperatorMatrix {
    let n = x.nrows();
    let mut out = DMatrix::from_element(2 * n, 2 * n, zero());
    for i in 0..n {
        for j in 0..n {
            let v = x[(i, j)];
            if v == zero() {
                continue;
            }
            for a in 0..2 {
                for b in 0..2 {
                    out[(2 * i + a, 2 * j + b)] = v * y[a][b];
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Oracle<'a> {
    model: &'a ModelParams,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a ModelParams) -> Result<Self> {
        if model.n_sites() > MAX_SITES {
            return Err(Error::Capacity(format!("oracle supports N <= {MAX_SITES}")));
        }
        Ok(Self { model })
    }

    pub fn model(&self) -> &'a ModelParams {
        self.model
    }

    pub fn dim(&self) -> usize {
        1 << self.model.n_sites()
    }

    /// `R_{01}(u−ξ_1)···R_{0N}(u−ξ_N)`; site 1 is the leftmost tensor factor.
    pub fn build_monodromy(&self, u: C64) -> Monodromy {
        let mut blocks = [
            [DMatrix::from_element(1, 1, one()), DMatrix::from_element(1, 1, zero())],
            [DMatrix::from_element(1, 1, zero()), DMatrix::from_element(1, 1, one())],
        ];
        for &xi in self.model.xi() {
            let w = self.model.r_weights(u - xi);
            let z = zero();
            let r = [[[[w.a, z], [z, w.b]], [[z, w.d], [w.c, z]]], [[[z, w.c], [w.d, z]], [[w.b, z], [z, w.a]]]];
            let next =
                [0, 1].map(|al| [0, 1].map(|be| kron(&blocks[al][0], &r[0][be]) + kron(&blocks[al][1], &r[1][be])));
            blocks = next;
        }
        let [[a, b], [c, d]] = blocks;
        Monodromy { a, b, c, d }
    }

    /// `T(u) = A(u) + D(u)`.
    pub fn transfer(&self, u: C64) -> OperatorMatrix {
        let m = self.build_monodromy(u);
        m.a + m.d
    }

    /// `‖[T(z₁), T(z₂)]‖ / (‖T(z₁)‖‖T(z₂)‖)` in the Frobenius norm.
    pub fn commutator(&self, z1: C64, z2: C64) -> f64 {
        let t1 = self.transfer(z1);
        let t2 = self.transfer(z2);
        (&t1 * &t2 - &t2 * &t1).norm() / (t1.norm() * t2.norm())
    }

    /// `(H_spin, H_transfer)` for the homogeneous chain.
    pub fn hamiltonian_two_ways(&self) -> Result<(OperatorMatrix, OperatorMatrix)> {
        let m = self.model;
        if !m.is_homogeneous() {
            return Err(Error::Unsupported("the Hamiltonian is built for the homogeneous chain only".into()));
        }
        let n = m.n_sites();
        let dim = self.dim();
        let (jx, jy, jz) = m.couplings();
        let mut h_spin = DMatrix::from_element(dim, dim, zero());
        for j in 1..=n {
            let k = j % n + 1;
            for (axis, coupling) in [(Axis::X, jx), (Axis::Y, jy), (Axis::Z, jz)] {
                if coupling.norm() < 1e-14 {
                    continue;
                }
                for col in 0..dim {
                    let (r1, p1) = apply_pauli(axis, j, n, col);
                    let (r2, p2) = apply_pauli(axis, k, n, r1);
                    h_spin[(r2, col)] += coupling * p1 * p2;
                }
            }
        }
        let step = 1e-6;
        let zero_u = zero();
        let dt = (self.transfer(C64::new(step, 0.0)) - self.transfer(C64::new(-step, 0.0))) / C64::new(2.0 * step, 0.0);
        let t0 = self.transfer(zero_u);
        let t0_inv = t0.lu().try_inverse().ok_or_else(|| Error::NonConvergence("T(0) is singular".into()))?;
        let eta = C64::new(ETA, 0.0);
        let th1p0 = m.th1p0();
        let pre = 2.0 * m.th1(eta) / th1p0;
        let shift = m.tau().theta_prime(crate::Kind::One, eta) / th1p0 * n as f64;
        let h_tm = dt * t0_inv * pre - DMatrix::identity(dim, dim) * shift;
        Ok((h_spin, h_tm))
    }

    /// Diagonalize `T` at a generic anchor and match each state to a non-degenerate level.
    pub fn diagonalize_and_match(&self, states: &[BetheState]) -> Result<SpectralDecomposition> {
        let mut last = None;
        for (attempt, &anchor) in ANCHORS.iter().enumerate() {
            let dec = self.decompose(anchor, states, attempt as u64)?;
            let clean = dec.matches.iter().zip(&dec.nearest_degenerate).all(|(m, &deg)| m.is_some() || !deg);
            if clean {
                return Ok(dec);
            }
            last = Some(dec);
        }
        Ok(last.expect("at least one anchor"))
    }

    fn decompose(&self, anchor: C64, states: &[BetheState], attempt: u64) -> Result<SpectralDecomposition> {
        let m = self.model;
        let dim = self.dim();
        let t = self.transfer(anchor);
        let eig: Vec<C64> = match t.clone().schur().eigenvalues() {
            Some(e) => e.iter().cloned().collect(),
            None => {
                let (_, tri) = t.clone().schur().unpack();
                (0..dim).map(|i| tri[(i, i)]).collect()
            }
        };
        let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let gap_tol = m.tolerances.degeneracy_gap * scale;
        let degenerate: Vec<bool> =
            (0..dim).map(|i| (0..dim).any(|j| j != i && (eig[i] - eig[j]).norm() < gap_tol)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + attempt);
        let samples: Vec<C64> = (0..SAMPLE_COUNT)
            .map(|_| C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3) * m.tau().tau().im))
            .collect();
        let t_samples: Vec<OperatorMatrix> = samples.iter().map(|&z| self.transfer(z)).collect();

        let mut levels: Vec<Level> = Vec::new();
        let mut matches = Vec::with_capacity(states.len());
        let mut nearest_degenerate = Vec::with_capacity(states.len());
        let mut match_gaps = Vec::with_capacity(states.len());
        for s in states {
            let target = m.transfer_eigenvalue(s.nu, anchor, &s.roots)?;
            let (idx, gap) = eig
                .iter()
                .enumerate()
                .map(|(i, &e)| (i, (e - target).norm() / target.norm().max(1e-300)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .expect("nonempty spectrum");
            nearest_degenerate.push(degenerate[idx]);
            if degenerate[idx] || gap > MATCH_TOL {
                matches.push(None);
                match_gaps.push(gap);
                continue;
            }
            let level = match levels.iter().position(|l| l.index == idx) {
                Some(p) => p,
                None => {
                    levels.push(self.level(&t, idx, eig[idx], scale, &mut rng, &samples, &t_samples)?);
                    levels.len() - 1
                }
            };
            // Eigenvalue curve at the fresh sample points.
            let mut worst = gap;
            for (j, &z) in samples.iter().enumerate() {
                let expect = m.transfer_eigenvalue(s.nu, z, &s.roots)?;
                let got = levels[level].sample_values[j];
                worst = worst.max((got - expect).norm() / expect.norm().max(1e-300));
            }
            match_gaps.push(worst);
            matches.push(Some(level));
        }
        Ok(SpectralDecomposition {
            n_sites: m.n_sites(),
            anchor,
            samples,
            eigenvalues: eig,
            degenerate,
            levels,
            matches,
            match_gaps,
            nearest_degenerate,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn level(
        &self,
        t: &OperatorMatrix,
        index: usize,
        lambda: C64,
        scale: f64,
        rng: &mut ChaCha8Rng,
        samples: &[C64],
        t_samples: &[OperatorMatrix],
    ) -> Result<Level> {
        let right = inverse_iteration(t, lambda, scale, rng)?;
        let left = inverse_iteration(&t.transpose(), lambda, scale, rng)?;
        let norm = left.dot(&right);
        let mut residual = (t * &right - &right * lambda).norm() / (scale * right.norm());
        let mut sample_values = Vec::with_capacity(samples.len());
        for ts in t_samples {
            let tr = ts * &right;
            let value = left.dot(&tr) / norm;
            let ts_scale = ts.norm();
            residual = residual.max((tr - &right * value).norm() / (ts_scale * right.norm()));
            sample_values.push(value);
        }
        Ok(Level { index, eigenvalue: lambda, right, left, norm, residual, sample_values })
    }
}

fn inverse_iteration(t: &OperatorMatrix, lambda: C64, scale: f64, rng: &mut ChaCha8Rng) -> Result<DVector<C64>> {
    let dim = t.nrows();
    let shift = lambda + C64::new(1e-11, 0.7e-11) * scale;
    let a = t - DMatrix::identity(dim, dim) * shift;
    let lu = a.lu();
    let mut v = DVector::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    for _ in 0..3 {
        v = lu.solve(&v).ok_or_else(|| Error::NonConvergence("singular inverse iteration".into()))?;
        let nv = v.norm();
        if !nv.is_finite() || nv == 0.0 {
            return Err(Error::NonConvergence("inverse iteration diverged".into()));
        }
        v /= C64::new(nv, 0.0);
    }
    Ok(v)
}

/// `σ^a_p |col⟩ = phase |row⟩` in the computational basis (bit 0 = up, site 1 most significant).
pub fn apply_pauli(axis: Axis, site: usize, n_sites: usize, col: usize) -> (usize, C64) {
    let bit = 1usize << (n_sites - site);
    let down = col & bit != 0;
    match axis {
        Axis::X => (col ^ bit, one()),
        Axis::Y => (col ^ bit, if down { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) }),
        Axis::Z => (col, if down { -one() } else { one() }),
    }
}

fn apply_pauli_vec(axis: Axis, site: usize, n_sites: usize, v: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::from_element(v.len(), zero());
    for (col, &x) in v.iter().enumerate() {
        let (row, ph) = apply_pauli(axis, site, n_sites, col);
        out[row] += ph * x;
    }
    out
}

/// One matched level: right/left eigenvectors of the transfer matrix.
#[derive(Clone, Debug)]
pub struct Level {
    pub index: usize,
    pub eigenvalue: C64,
    pub right: DVector<C64>,
    pub left: DVector<C64>,
    /// `L·R`.
    pub norm: C64,
    /// Worst simultaneous-eigenvector residual over anchor and samples.
    pub residual: f64,
    pub sample_values: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub n_sites: usize,
    pub anchor: C64,
    pub samples: Vec<C64>,
    pub eigenvalues: Vec<C64>,
    pub degenerate: Vec<bool>,
    pub levels: Vec<Level>,
    /// Per input state, index into `levels`.
    pub matches: Vec<Option<usize>>,
    /// Per input state, worst relative eigenvalue gap over anchor and samples.
    pub match_gaps: Vec<f64>,
    nearest_degenerate: Vec<bool>,
}

/// Summary row of the matched-level table.
#[derive(Clone, Debug, Serialize)]
pub struct MatchRow {
    pub state: usize,
    pub level: Option<usize>,
    pub eigenvalue: Option<C64>,
    pub gap: f64,
    pub residual: Option<f64>,
}

impl SpectralDecomposition {
    pub fn level_of(&self, state: usize) -> Result<&Level> {
        self.matches
            .get(state)
            .copied()
            .flatten()
            .map(|i| &self.levels[i])
            .ok_or_else(|| Error::ContractViolation(format!("state {state} is not matched to a level")))
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }

    pub fn table(&self) -> Vec<MatchRow> {
        self.matches
            .iter()
            .enumerate()
            .map(|(i, m)| MatchRow {
                state: i,
                level: m.map(|l| self.levels[l].index),
                eigenvalue: m.map(|l| self.levels[l].eigenvalue),
                gap: self.match_gaps[i],
                residual: m.map(|l| self.levels[l].residual),
            })
            .collect()
    }

    /// `⟨L_bra|σ^a_p|R_ket⟩` normalized by `√((L_bra R_bra)(L_ket R_ket))` is phase dependent;
    /// this returns the raw bilinear `L_bra σ R_ket`.
    pub fn bilinear(&self, axis: Axis, bra: usize, ket: usize, site: usize) -> Result<C64> {
        let b = self.level_of(bra)?;
        let k = self.level_of(ket)?;
        Ok(b.left.dot(&apply_pauli_vec(axis, site, self.n_sites, &k.right)))
    }

    /// `(L_v σ_p R_u)(L_u σ_p′ R_v) / ((L_v R_v)(L_u R_u))`: free of eigenvector scale and phase.
    pub fn quadratic(&self, axis: Axis, bra: usize, ket: usize, p: usize, p2: usize) -> Result<C64> {
        let b = self.level_of(bra)?;
        let k = self.level_of(ket)?;
        let x1 = self.bilinear(axis, bra, ket, p)?;
        let x2 = self.bilinear(axis, ket, bra, p2)?;
        Ok(x1 * x2 / (b.norm * k.norm))
    }

    /// `L_bra σ^a_p R_ket / √((L_bra R_bra)(L_ket R_ket))`; fixed only up to a phase per pair.
    pub fn normalized_single(&self, axis: Axis, bra: usize, ket: usize, site: usize) -> Result<C64> {
        let scale = (self.level_of(bra)?.norm * self.level_of(ket)?.norm).sqrt();
        Ok(self.bilinear(axis, bra, ket, site)? / scale)
    }

    /// `L σ^a_p R / (L R)` for a single level.
    pub fn diagonal(&self, axis: Axis, state: usize, site: usize) -> Result<C64> {
        let l = self.level_of(state)?;
        Ok(self.bilinear(axis, state, state, site)? / l.norm)
    }
}

/// Least-squares constant `c` with `values ≈ c·reference` and the worst relative misfit.
///
/// `None` when the reference vanishes at every point.
pub fn constant_ratio_fit(values: &[C64], reference: &[C64]) -> Option<(C64, f64)> {
    let den: f64 = reference.iter().map(|z| z.norm_sqr()).sum();
    let scale = values.iter().chain(reference).map(|z| z.norm()).fold(0.0, f64::max);
    if den <= (1e-24 * scale * scale).max(f64::MIN_POSITIVE) {
        return None;
    }
    let c = values.iter().zip(reference).map(|(v, r)| r.conj() * v).sum::<C64>() / den;
    let vmax = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let misfit = values.iter().zip(reference).map(|(v, r)| (v - c * r).norm()).fold(0.0, f64::max) / vmax;
    Some((c, misfit))
}

/// `ff_oracle_quadratic`: quadratic matrix-element product for two matched states.
pub fn ff_oracle_quadratic(
    dec: &SpectralDecomposition,
    axis: Axis,
    bra: usize,
    ket: usize,
    p: usize,
    p2: usize,
) -> Result<C64> {
    dec.quadratic(axis, bra, ket, p, p2)
}

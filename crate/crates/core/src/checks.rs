//! The ten verification criteria, shared by the `verify` command and the acceptance target.

use crate::action::{assemble_ff_generic, Axis};
use crate::bethe::{find_all_roots, pair_twins, singlet_states, BetheState};
use crate::error::Result;
use crate::formfactor::{
    flipped_index, local_ff, local_ff_quadratic, magnetization_residual, residue_identity, Route, SiteRange,
};
use crate::model::{GaugeParams, ModelParams};
use crate::oracle::{apply_pauli, Oracle, SpectralDecomposition};
use crate::scalar::{selection_allowed, ScalarProducts};
use crate::theta::{identity_suite, ModularParameter};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::time::Instant;

/// Outcome of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub id: u8,
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Wall time; left out of serialized reports so repeated runs are byte-identical.
    #[serde(skip)]
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_s: Option<f64>,
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CheckReport {
    /// One-line summary.
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {:<28} measured={:.3e} threshold={:.1e} time={:.2}s",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold,
            self.runtime_s
        )
    }
}

/// Groups of criteria selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Thetas,
    Bethe,
    Scalar,
    Ff,
    Oracle,
    All,
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::Thetas => vec![1],
            Suite::Bethe => vec![2],
            Suite::Scalar => vec![8],
            Suite::Ff => vec![3, 4, 5, 7],
            Suite::Oracle => vec![6, 9, 10],
            Suite::All => (1..=10).collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thetas" => Suite::Thetas,
            "bethe" => Suite::Bethe,
            "scalar" => Suite::Scalar,
            "ff" => Suite::Ff,
            "oracle" => Suite::Oracle,
            "all" => Suite::All,
            _ => return Err(crate::Error::Domain(format!("unknown suite '{s}'"))),
        })
    }
}

/// Inputs of the verification run.
#[derive(Clone, Debug)]
pub struct CheckSettings {
    /// Modular parameter of the generic-ξ fixtures.
    pub tau: C64,
    pub model_seed: u64,
    /// Fixed gauge `(s, t)`; `None` draws one from `gauge_seed`.
    pub gauge: Option<(C64, C64)>,
    pub gauge_seed: u64,
    pub sample_seed: u64,
    /// Replaces every threshold when set.
    pub threshold_override: Option<f64>,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            tau: C64::new(0.3, 0.7),
            model_seed: 1,
            gauge: Some((C64::new(0.13, 0.21), C64::new(-0.31, 0.17))),
            gauge_seed: 7,
            sample_seed: 20240611,
            threshold_override: None,
        }
    }
}

type FfKey = (Axis, usize, usize, usize);

/// Model, gauge, states of sectors 0 and 1, and the matched oracle for one chain length.
struct Fixture {
    model: ModelParams,
    gauge: GaugeParams,
    states: Vec<BetheState>,
    dec: Option<SpectralDecomposition>,
    generic: HashMap<FfKey, C64>,
}

impl Fixture {
    fn new(n: usize, s: &CheckSettings) -> Result<Self> {
        let model = ModelParams::random_inhomogeneous(n, s.tau, s.model_seed)?;
        let gauge = match s.gauge {
            Some((gs, gt)) => GaugeParams::new(gs, gt, &model)?,
            None => GaugeParams::random(s.gauge_seed, &model),
        };
        let mut states = singlet_states(0, &model)?;
        states.extend(singlet_states(1, &model)?);
        Ok(Self { model, gauge, states, dec: None, generic: HashMap::new() })
    }

    fn oracle(&mut self) -> Result<&SpectralDecomposition> {
        if self.dec.is_none() {
            let o = Oracle::new(&self.model)?;
            self.dec = Some(o.diagonalize_and_match(&self.states)?);
        }
        Ok(self.dec.as_ref().unwrap())
    }

    fn generic(&mut self, axis: Axis, i: usize, j: usize, p: usize) -> Result<C64> {
        if let Some(v) = self.generic.get(&(axis, i, j, p)) {
            return Ok(*v);
        }
        let r = local_ff(axis, &self.states[i], &self.states[j], p, &self.gauge, Route::Generic, &self.model)?;
        self.generic.insert((axis, i, j, p), r.value);
        Ok(r.value)
    }

    /// Admissible `(axis, bra, ket)` triples for the closed forms.
    fn admissible(&self) -> Vec<(Axis, usize, usize)> {
        let mut out = Vec::new();
        for (i, b) in self.states.iter().enumerate() {
            for (j, k) in self.states.iter().enumerate() {
                if b.nu == k.nu {
                    if i != j && flipped_index(&b.roots, &k.roots, &self.model).is_some() {
                        out.push((Axis::Z, i, j));
                    }
                } else {
                    out.push((Axis::X, i, j));
                    out.push((Axis::Y, i, j));
                }
            }
        }
        out
    }
}

/// Runs criteria, building fixtures lazily and sharing them.
pub struct Checker {
    settings: CheckSettings,
    fixtures: BTreeMap<usize, Fixture>,
}

fn rel(a: C64, b: C64, floor: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(floor)
}

impl Checker {
    pub fn new(settings: CheckSettings) -> Self {
        Self { settings, fixtures: BTreeMap::new() }
    }

    fn fixture(&mut self, n: usize) -> Result<&mut Fixture> {
        if !self.fixtures.contains_key(&n) {
            let f = Fixture::new(n, &self.settings)?;
            self.fixtures.insert(n, f);
        }
        Ok(self.fixtures.get_mut(&n).unwrap())
    }

    /// Run one criterion; numerical errors are reported as failures with a note.
    pub fn run(&mut self, id: u8) -> CheckReport {
        let start = Instant::now();
        let (name, threshold, budget) = match id {
            1 => ("theta identities", 1e-11, Some(5.0)),
            2 => ("root completeness", 1e-10, Some(30.0)),
            3 => ("zero magnetization", 1e-9, Some(60.0)),
            4 => ("residue checkpoint", 1e-9, None),
            5 => ("cross-path equality", 1e-8, None),
            6 => ("oracle equality", 1e-8, Some(120.0)),
            7 => ("gauge independence", 1e-10, None),
            8 => ("parity and selection", 1e-10, None),
            9 => ("eigenvalue law", 1e-9, None),
            10 => ("hamiltonian equivalence", 1e-7, None),
            _ => ("unknown", 0.0, None),
        };
        let threshold = self.settings.threshold_override.unwrap_or(threshold);
        let mut rep = CheckReport {
            id,
            name: name.into(),
            measured: f64::NAN,
            threshold,
            pass: false,
            runtime_s: 0.0,
            budget_s: budget,
            details: BTreeMap::new(),
            notes: Vec::new(),
        };
        let outcome = match id {
            1 => self.c1(&mut rep),
            2 => self.c2(&mut rep),
            3 => self.c3(&mut rep),
            4 => self.c4(&mut rep),
            5 => self.c5(&mut rep),
            6 => self.c6(&mut rep),
            7 => self.c7(&mut rep),
            8 => self.c8(&mut rep),
            9 => self.c9(&mut rep),
            10 => self.c10(&mut rep),
            _ => Err(crate::Error::Domain(format!("no criterion {id}"))),
        };
        rep.runtime_s = start.elapsed().as_secs_f64();
        match outcome {
            Ok(extra_ok) => {
                let in_budget = budget.is_none_or(|b| rep.runtime_s <= b);
                if !in_budget {
                    rep.notes.push(format!("runtime {:.2}s exceeds budget", rep.runtime_s));
                }
                rep.pass = extra_ok && rep.measured <= rep.threshold && in_budget;
            }
            Err(e) => rep.notes.push(format!("error: {e}")),
        }
        rep
    }

    pub fn run_all(&mut self, ids: &[u8]) -> Vec<CheckReport> {
        ids.iter().map(|&id| self.run(id)).collect()
    }

    fn c1(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let mut worst = 0.0f64;
        for tau in [C64::new(0.0, 1.0), C64::new(0.3, 0.7)] {
            let t = ModularParameter::new(tau)?;
            let r = identity_suite(&t, 200, self.settings.sample_seed);
            for (name, v) in &r.residuals {
                let e = rep.details.entry(name.clone()).or_insert(0.0);
                *e = e.max(*v);
            }
            worst = worst.max(r.max_residual());
        }
        rep.measured = worst;
        Ok(true)
    }

    fn c2(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let mut worst = 0.0f64;
        let mut ok = true;
        for n in [4usize, 6, 8] {
            for homogeneous in [true, false] {
                let m = if homogeneous {
                    ModelParams::homogeneous(n, self.settings.tau)?
                } else {
                    ModelParams::random_inhomogeneous(n, self.settings.tau, self.settings.model_seed)?
                };
                for nu in 0..4 {
                    let rs = find_all_roots(nu, &m)?;
                    if rs.winding != n as i64 || rs.roots.len() != n {
                        ok = false;
                        rep.notes.push(format!("N={n} nu={nu}: winding {} roots {}", rs.winding, rs.roots.len()));
                    }
                    if pair_twins(&rs.roots, &m).is_err() {
                        ok = false;
                        rep.notes.push(format!("N={n} nu={nu}: incomplete twin pairing"));
                    }
                    worst = worst.max(rs.residual_max());
                }
            }
        }
        rep.measured = worst;
        Ok(ok)
    }

    fn c3(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let mut gen_worst = 0.0f64;
        let mut orc_worst = 0.0f64;
        for n in [4usize, 6] {
            let f = self.fixture(n)?;
            for s in &f.states {
                for p in 1..=n {
                    gen_worst = gen_worst.max(magnetization_residual(s.nu, &s.roots, p, &f.gauge, &f.model)?);
                }
            }
            let count = f.states.len();
            let dec = f.oracle()?;
            for i in 0..count {
                for p in 1..=n {
                    orc_worst = orc_worst.max(dec.diagonal(Axis::Z, i, p)?.norm());
                }
            }
        }
        rep.details.insert("generic".into(), gen_worst);
        rep.details.insert("oracle".into(), orc_worst);
        rep.measured = gen_worst.max(orc_worst);
        Ok(true)
    }

    fn c4(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let f = self.fixture(4)?;
        let (mut lit, mut cor, mut res, mut per) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for s in &f.states {
            for p in 1..=4 {
                for eps in 0..2 {
                    let r = residue_identity(s.nu, s, p, eps, &f.gauge, &f.model)?;
                    lit = lit.max(r.literal);
                    cor = cor.max(r.corrected);
                    res = res.max(r.residue);
                    per = per.max(r.omega_periodicity);
                }
            }
        }
        rep.details.insert("literal".into(), lit);
        rep.details.insert("corrected-sign".into(), cor);
        rep.details.insert("sum-vs-residues".into(), res);
        rep.details.insert("omega-periodicity".into(), per);
        if lit > rep.threshold && cor <= rep.threshold {
            rep.notes.push(
                "identity fails as stated; it holds with the opposite sign of the G00 term \
                 (see corrected-sign and sum-vs-residues)"
                    .into(),
            );
        }
        rep.measured = lit;
        Ok(true)
    }

    fn c5(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let mut worst = BTreeMap::new();
        let mut compared = 0usize;
        for n in [4usize, 6] {
            let f = self.fixture(n)?;
            for (axis, i, j) in f.admissible() {
                for p in 1..=n {
                    let cf = local_ff(axis, &f.states[i], &f.states[j], p, &f.gauge, Route::ClosedForm, &f.model)?;
                    if cf.reason.is_some() {
                        continue;
                    }
                    let g = f.generic(axis, i, j, p)?;
                    let e = worst.entry(format!("N={n} {axis}")).or_insert(0.0f64);
                    *e = e.max(rel(cf.value, g, 0.0));
                    compared += 1;
                }
            }
        }
        rep.measured = worst.values().cloned().fold(0.0, f64::max);
        rep.details = worst;
        rep.details.insert("compared".into(), compared as f64);
        Ok(compared > 0)
    }

    fn c6(&mut self, rep: &mut CheckReport) -> Result<bool> {
        // errors[(family, range)]: family 0 longitudinal, 1 transversal.
        let mut errors: BTreeMap<(usize, SiteRange), f64> = BTreeMap::new();
        let mut gen_err = 0.0f64;
        for n in [4usize, 6] {
            let f = self.fixture(n)?;
            let pairs = f.admissible();
            let dec_scale = {
                let dec = f.oracle()?;
                let mut s = 0.0f64;
                for &(axis, i, j) in &pairs {
                    s = s.max(dec.quadratic(axis, i, j, 1, 1)?.norm());
                }
                s
            };
            let floor = 1e-12 * dec_scale;
            for &(axis, i, j) in &pairs {
                let family = usize::from(axis != Axis::Z);
                for p in 1..=n {
                    for p2 in p..=n {
                        let orc = f.oracle()?.quadratic(axis, i, j, p, p2)?;
                        let g = f.generic(axis, i, j, p)? * f.generic(axis, j, i, p2)?;
                        gen_err = gen_err.max(rel(g, orc, floor));
                        for range in SiteRange::ALL {
                            let cf = local_ff_quadratic(
                                axis,
                                &f.states[i],
                                &f.states[j],
                                p,
                                p2,
                                range,
                                Route::ClosedForm,
                                &f.gauge,
                                &f.model,
                            )?;
                            let e = errors.entry((family, range)).or_insert(0.0);
                            *e = e.max(rel(cf.value, orc, floor));
                        }
                    }
                }
            }
        }
        let mut measured = 0.0f64;
        for (family, label) in [(0usize, "longitudinal"), (1, "transversal")] {
            let (best, err) =
                SiteRange::ALL.iter().map(|&r| (r, errors[&(family, r)])).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            for r in SiteRange::ALL {
                rep.details.insert(format!("{label} {r:?}"), errors[&(family, r)]);
            }
            rep.notes.push(format!("{label}: site range resolved to {best:?}"));
            measured = measured.max(err);
        }
        rep.details.insert("generic product".into(), gen_err);
        rep.measured = measured;
        Ok(true)
    }

    fn c7(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let f = self.fixture(4)?;
        let model = f.model.clone();
        let states = f.states.clone();
        let pairs: Vec<_> = f.admissible();
        let sites = [(1usize, 3usize), (2, 2), (4, 4)];
        let mut quads: Vec<Vec<C64>> = Vec::new();
        let mut singles: Vec<Vec<C64>> = Vec::new();
        for draw in 0..10u64 {
            let g = GaugeParams::random(self.settings.gauge_seed.wrapping_add(draw * 7919), &model);
            let mut q = Vec::new();
            let mut s = Vec::new();
            for &(axis, i, j) in &pairs {
                for &(p, p2) in &sites {
                    let a = local_ff(axis, &states[i], &states[j], p, &g, Route::Generic, &model)?.value;
                    let b = local_ff(axis, &states[j], &states[i], p2, &g, Route::Generic, &model)?.value;
                    q.push(a * b);
                    s.push(a);
                }
            }
            quads.push(q);
            singles.push(s);
        }
        let spread = |rows: &[Vec<C64>]| -> f64 {
            let scale = rows.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
            let mut worst = 0.0f64;
            for k in 0..rows[0].len() {
                for row in rows {
                    worst = worst.max(rel(row[k], rows[0][k], 1e-12 * scale));
                }
            }
            worst
        };
        let q_spread = spread(&quads);
        let s_spread = spread(&singles);
        rep.details.insert("quadratic spread".into(), q_spread);
        rep.details.insert("single spread".into(), s_spread);
        rep.measured = q_spread;
        let non_vacuous = s_spread > 1e-3;
        if !non_vacuous {
            rep.notes.push("single form factors did not vary with the gauge".into());
        }
        Ok(non_vacuous)
    }

    fn c8(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let mut violations = 0usize;
        let mut parity_zeros = 0usize;
        let mut generic_at_zero = 0.0f64;
        for n in [4usize, 6] {
            let f = self.fixture(n)?;
            for (axis, i, j) in f.admissible() {
                if axis == Axis::Z {
                    continue;
                }
                for p in 1..=n {
                    let r = local_ff(axis, &f.states[i], &f.states[j], p, &f.gauge, Route::ClosedForm, &f.model)?;
                    let odd = r.mu1.unwrap_or(0).rem_euclid(2) == 1;
                    let must_vanish = (axis == Axis::X) == odd;
                    let is_zero = r.value == C64::new(0.0, 0.0);
                    if must_vanish != is_zero {
                        violations += 1;
                    }
                    if must_vanish {
                        parity_zeros += 1;
                        let g = f.generic(axis, i, j, p)?;
                        let scale = f.generic(Axis::X, i, j, p)?.norm().max(f.generic(Axis::Y, i, j, p)?.norm());
                        generic_at_zero = generic_at_zero.max(g.norm() / scale);
                    }
                }
            }
        }
        // Dispatcher: exact zero whenever the selection rule forbids.
        let mut rng = ChaCha8Rng::seed_from_u64(self.settings.sample_seed);
        let f = self.fixture(4)?;
        let mut forbidden = 0usize;
        for s in &f.states {
            let sp = ScalarProducts::new(&f.model, f.gauge, s.nu, &s.roots)?;
            for m in [s.n() - 1, s.n(), s.n() + 1] {
                let w: Vec<C64> =
                    (0..m).map(|_| C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.05..0.6))).collect();
                for mu in 0..4 {
                    if !selection_allowed(s.nu, s.n(), mu, m) {
                        forbidden += 1;
                        if sp.s_indexed(mu, &w)? != C64::new(0.0, 0.0) {
                            violations += 1;
                        }
                    }
                }
            }
        }
        // 𝐅^{0,3} with a sector-1 ket.
        let mut f03 = 0.0f64;
        let (s0, s1): (Vec<_>, Vec<_>) = f.states.iter().partition(|s| s.nu == 0);
        for b in &s0 {
            for k in &s1 {
                for p in 1..=4 {
                    let parts = assemble_ff_generic(Axis::X, 0, 3, &b.roots, &k.roots, p, &f.gauge, &f.model)?;
                    f03 = f03.max(parts.total.norm() / parts.scale);
                }
            }
        }
        rep.details.insert("parity violations".into(), violations as f64);
        rep.details.insert("parity zeros".into(), parity_zeros as f64);
        rep.details.insert("generic at parity zeros".into(), generic_at_zero);
        rep.details.insert("forbidden dispatcher calls".into(), forbidden as f64);
        rep.details.insert("F03".into(), f03);
        rep.measured = f03;
        Ok(violations == 0 && parity_zeros > 0 && forbidden > 0)
    }

    fn c9(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.settings.sample_seed ^ 0x9e37);
        let draw = |rng: &mut ChaCha8Rng| C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3));
        let mut eig = 0.0f64;
        let mut rep_chi = 0.0f64;
        let mut p_dep = 0.0f64;
        for n in [4usize, 6] {
            let fresh: Vec<C64> = (0..5).map(|_| draw(&mut rng)).collect();
            let zs: Vec<C64> = (0..20).map(|_| draw(&mut rng)).collect();
            let f = self.fixture(n)?;
            let o = Oracle::new(&f.model)?;
            let ts: Vec<_> = fresh.iter().map(|&z| o.transfer(z)).collect();
            let states = f.states.clone();
            let model = f.model.clone();
            let dec = f.oracle()?;
            for (i, s) in states.iter().enumerate() {
                let l = dec.level_of(i)?;
                for (k, &z) in fresh.iter().enumerate() {
                    let val = l.left.dot(&(&ts[k] * &l.right)) / l.norm;
                    let expect = model.transfer_eigenvalue(s.nu, z, &s.roots)?;
                    eig = eig.max(rel(val, expect, 0.0));
                }
                for &z in &zs {
                    let direct = model.chi(s.nu, z);
                    let first = model.chi_product_form(s.nu, z, &s.roots, 1)?;
                    for p in 1..=n {
                        let v = model.chi_product_form(s.nu, z, &s.roots, p)?;
                        rep_chi = rep_chi.max(rel(v, direct, 0.0));
                        p_dep = p_dep.max(rel(v, first, 0.0));
                    }
                }
            }
        }
        rep.details.insert("eigenvalue".into(), eig);
        rep.details.insert("product form".into(), rep_chi);
        rep.details.insert("site dependence".into(), p_dep);
        rep.measured = eig.max(rep_chi).max(p_dep);
        Ok(true)
    }

    fn c10(&mut self, rep: &mut CheckReport) -> Result<bool> {
        let mut worst = 0.0f64;
        let mut zz = 0.0f64;
        for tau in [C64::new(0.0, 1.0), self.settings.tau] {
            for n in [4usize, 6] {
                let m = ModelParams::homogeneous(n, tau)?;
                let o = Oracle::new(&m)?;
                let (hs, ht) = o.hamiltonian_two_ways()?;
                let scale = hs.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let gap = (&hs - &ht).iter().map(|z| z.norm()).fold(0.0, f64::max);
                worst = worst.max(gap / scale);
                // Projection of the transfer-matrix Hamiltonian on Σ σᶻσᶻ.
                let dim = o.dim();
                let mut proj = C64::new(0.0, 0.0);
                for j in 1..=n {
                    let k = j % n + 1;
                    for col in 0..dim {
                        let (r1, p1) = apply_pauli(Axis::Z, j, n, col);
                        let (r2, p2) = apply_pauli(Axis::Z, k, n, r1);
                        proj += ht[(col, r2)] * p1 * p2;
                    }
                }
                let (jx, _, jz) = m.couplings();
                zz = zz.max((proj / (dim * n) as f64).norm() / jx.norm()).max(jz.norm() / jx.norm());
            }
        }
        rep.details.insert("entrywise gap".into(), worst);
        rep.details.insert("zz coupling".into(), zz);
        rep.measured = worst;
        Ok(zz < 1e-7)
    }
}

/// Run the criteria of `suite` with `settings`.
pub fn run_suite(suite: Suite, settings: CheckSettings) -> Vec<CheckReport> {
    Checker::new(settings).run_all(&suite.criteria())
}

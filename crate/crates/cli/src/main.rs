mod config;
mod output;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use config::RunConfig;
use output::{emit, num, re_im, Format, Table};
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use xyff_core::bethe::{enumerate_singlet_states, find_all_roots};
use xyff_core::checks::{CheckSettings, Checker, Suite};
use xyff_core::formfactor::{flipped_index, local_ff, local_ff_quadratic, SiteRange};
use xyff_core::oracle::constant_ratio_fit;
use xyff_core::theta::identity_suite;
use xyff_core::{Axis, BetheState, FormFactorRecord, ModelParams, Oracle, Route, C64};

const CROSS_CHECK_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-11;

#[derive(Parser, Debug)]
#[command(name = "xyff", version, about = "Form factors of the XY-point XYZ chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Seed for random inhomogeneities and gauge.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bethe roots and singlet states per sector.
    Roots {
        #[arg(long)]
        nu: Option<i64>,
    },
    /// Single or quadratic form factor between two states.
    Ff {
        #[arg(long)]
        axis: Axis,
        #[arg(long)]
        site: usize,
        #[arg(long)]
        site2: Option<usize>,
        /// State file; `PATH#k` selects entry k of a list.
        #[arg(long)]
        bra: String,
        #[arg(long)]
        ket: String,
    },
    /// Verification criteria with measured residuals.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        /// Replace every threshold.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Exact diagonalization: matched levels and quadratic comparisons.
    Oracle,
    /// Theta-function identity residuals.
    Identities,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(anyhow::Error),
    Numeric(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.chain().find_map(|c| c.downcast_ref::<xyff_core::Error>()) {
            Some(core) if core.is_numeric() => Failure::Numeric(e),
            _ => Failure::Config(e),
        }
    }
}

impl From<xyff_core::Error> for Failure {
    fn from(e: xyff_core::Error) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

struct Ctx {
    cfg: RunConfig,
    format: Format,
    out: Option<PathBuf>,
}

impl Ctx {
    fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p).map_err(Failure::Config)?,
            None => RunConfig::default_for(4),
        };
        if let Some(seed) = cli.seed {
            cfg.model.seed = seed;
        }
        let format = cli.format.clone().or_else(|| cfg.run.format.clone()).unwrap_or_else(|| "json".into());
        let format = Format::parse(&format).map_err(Failure::Config)?;
        let out = cli.out.clone().or_else(|| cfg.run.out.clone());
        Ok(Ctx { cfg, format, out })
    }

    fn model(&self) -> Result<ModelParams, Failure> {
        self.cfg.model().map_err(|e| Failure::Config(e.into()))
    }

    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric abort: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let ctx = Ctx::from_cli(cli)?;
    let invoked = match &cli.command {
        Command::Roots { .. } => "roots",
        Command::Ff { .. } => "ff",
        Command::Verify { .. } => "verify",
        Command::Oracle => "oracle",
        Command::Identities => "identities",
    };
    if let Some(c) = &ctx.cfg.run.command {
        if c != invoked {
            return Err(Failure::Config(anyhow!("config run.command is '{c}' but '{invoked}' was invoked")));
        }
    }
    match &cli.command {
        Command::Roots { nu } => cmd_roots(&ctx, *nu),
        Command::Ff { axis, site, site2, bra, ket } => cmd_ff(&ctx, *axis, *site, *site2, bra, ket),
        Command::Verify { suite, tolerance } => cmd_verify(&ctx, suite.as_deref(), *tolerance),
        Command::Oracle => cmd_oracle(&ctx),
        Command::Identities => cmd_identities(&ctx),
    }
}

#[derive(Serialize)]
struct SectorOut {
    nu: i64,
    winding: i64,
    roots: Vec<C64>,
    residuals: Vec<f64>,
    states: Vec<BetheState>,
}

fn cmd_roots(ctx: &Ctx, nu: Option<i64>) -> Result<bool, Failure> {
    let model = ctx.model()?;
    let sectors: Vec<i64> = match nu {
        Some(v) if (0..4).contains(&v) => vec![v],
        Some(v) => return Err(Failure::Config(anyhow!("--nu must be in 0..=3, got {v}"))),
        None => vec![0, 1],
    };
    let mut out = Vec::new();
    for nu in sectors {
        let rs = find_all_roots(nu, &model)?;
        let states = enumerate_singlet_states(&rs, &model)?;
        out.push(SectorOut { nu, winding: rs.winding, roots: rs.roots, residuals: rs.residuals, states });
    }
    emit(
        &out,
        || {
            let mut t = Table::new(vec!["nu", "state", "k", "root_re", "root_im", "V_re", "V_im", "nu1", "residual"]);
            for s in &out {
                for (i, st) in s.states.iter().enumerate() {
                    for (k, r) in st.roots.iter().enumerate() {
                        let [re, im] = re_im(*r);
                        let [vre, vim] = re_im(st.v[k]);
                        t.push(vec![
                            s.nu.to_string(),
                            i.to_string(),
                            k.to_string(),
                            re,
                            im,
                            vre,
                            vim,
                            st.nu1.to_string(),
                            num(st.residuals[k]),
                        ]);
                    }
                }
            }
            t
        },
        ctx.format,
        ctx.out(),
    )?;
    Ok(true)
}

/// Read a state from `PATH` or `PATH#k`: a state object, a list of states, or `roots` output.
fn load_state(arg: &str) -> anyhow::Result<BetheState> {
    let (path, index) = match arg.rsplit_once('#') {
        Some((p, i)) => (p, Some(i.parse::<usize>().with_context(|| format!("bad index in '{arg}'"))?)),
        None => (arg, None),
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
    let mut list: Vec<Value> = match value {
        Value::Array(items) => {
            if items.iter().all(|v| v.get("states").is_some()) {
                items.into_iter().flat_map(|v| v["states"].as_array().cloned().unwrap_or_default()).collect()
            } else {
                items
            }
        }
        other => vec![other],
    };
    let k = index.unwrap_or(0);
    if k >= list.len() {
        bail!("{path} holds {} states, index {k} requested", list.len());
    }
    serde_json::from_value(list.swap_remove(k)).with_context(|| format!("state {k} of {path}"))
}

#[derive(Serialize)]
struct FfOut {
    records: Vec<FormFactorRecord>,
    cross_checks: Vec<CrossCheck>,
}

#[derive(Serialize)]
struct CrossCheck {
    against: Route,
    gap: f64,
    pass: bool,
}

fn gap(a: C64, b: C64, scale: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(scale)
}

fn cmd_ff(ctx: &Ctx, axis: Axis, p: usize, p2: Option<usize>, bra: &str, ket: &str) -> Result<bool, Failure> {
    let model = ctx.model()?;
    let gauge = ctx.cfg.gauge(&model)?;
    let bra = load_state(bra).map_err(Failure::Config)?;
    let ket = load_state(ket).map_err(Failure::Config)?;
    for s in [&bra, &ket] {
        s.validate(&model)
            .map_err(|e| Failure::Config(anyhow!("state does not belong to the configured model: {e}")))?;
    }
    let tol = ctx.cfg.run.tolerance.unwrap_or(CROSS_CHECK_TOL);
    let mut records = Vec::new();
    let mut checks = Vec::new();
    match p2 {
        None => {
            let cf = local_ff(axis, &bra, &ket, p, &gauge, Route::ClosedForm, &model)?;
            let gen = local_ff(axis, &bra, &ket, p, &gauge, Route::Generic, &model)?;
            let g = gap(cf.value, gen.value, if cf.reason.is_some() { 1.0 } else { 0.0 });
            checks.push(CrossCheck { against: Route::Generic, gap: g, pass: g <= tol });
            records.push(cf);
            records.push(gen);
        }
        Some(p2) => {
            let (lo, hi) = (p.min(p2), p.max(p2));
            let range = SiteRange::verified(axis);
            let cf = local_ff_quadratic(axis, &bra, &ket, lo, hi, range, Route::ClosedForm, &gauge, &model)?;
            let gen = local_ff_quadratic(axis, &bra, &ket, lo, hi, range, Route::Generic, &gauge, &model)?;
            let same = bra.same_roots(&ket, &model);
            let states = if same { vec![bra.clone()] } else { vec![bra.clone(), ket.clone()] };
            let dec = Oracle::new(&model)?.diagonalize_and_match(&states)?;
            let orc_value = dec.quadratic(axis, 0, usize::from(!same), lo, hi)?;
            let mut orc = cf.clone();
            orc.route = Route::Oracle;
            orc.value = orc_value;
            orc.reason = None;
            orc.range = None;
            orc.gauge = None;
            let floor = if cf.reason.is_some() { 1.0 } else { 0.0 };
            for (route, v) in [(Route::Generic, gen.value), (Route::Oracle, orc_value)] {
                let g = gap(cf.value, v, floor);
                checks.push(CrossCheck { against: route, gap: g, pass: g <= tol });
            }
            records.extend([cf, gen, orc]);
        }
    }
    let ok = checks.iter().all(|c| c.pass);
    let out = FfOut { records, cross_checks: checks };
    emit(
        &out,
        || {
            let mut t = Table::new(vec![
                "axis", "p", "p_prime", "nu", "lambda", "route", "value_re", "value_im", "mu0", "mu1", "reason",
                "range",
            ]);
            for r in &out.records {
                let [re, im] = re_im(r.value);
                t.push(vec![
                    r.axis.to_string(),
                    r.p.to_string(),
                    r.p_prime.map(|v| v.to_string()).unwrap_or_default(),
                    r.nu.to_string(),
                    r.lambda.to_string(),
                    route_name(r.route).into(),
                    re,
                    im,
                    r.mu0.map(|v| v.to_string()).unwrap_or_default(),
                    r.mu1.map(|v| v.to_string()).unwrap_or_default(),
                    r.reason.clone().unwrap_or_default(),
                    r.range.map(|v| format!("{v:?}").to_lowercase()).unwrap_or_default(),
                ]);
            }
            t
        },
        ctx.format,
        ctx.out(),
    )?;
    Ok(ok)
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::ClosedForm => "closed-form",
        Route::Generic => "generic-assembly",
        Route::Oracle => "oracle",
    }
}

fn cmd_verify(ctx: &Ctx, suite: Option<&str>, tolerance: Option<f64>) -> Result<bool, Failure> {
    let name = suite.map(str::to_string).or_else(|| ctx.cfg.run.suite.clone()).unwrap_or_else(|| "all".into());
    let suite: Suite = name.parse().map_err(|e: xyff_core::Error| Failure::Config(e.into()))?;
    let m = &ctx.cfg.model;
    let settings = CheckSettings {
        tau: C64::new(m.tau[0], m.tau[1]),
        model_seed: m.seed,
        gauge: ctx.cfg.explicit_gauge().or(CheckSettings::default().gauge),
        gauge_seed: m.seed,
        threshold_override: tolerance.or(ctx.cfg.run.tolerance),
        ..CheckSettings::default()
    };
    let mut checker = Checker::new(settings);
    let reports = checker.run_all(&suite.criteria());
    for r in &reports {
        eprintln!("{}", r.line());
    }
    emit(
        &reports,
        || {
            let mut t = Table::new(vec!["id", "name", "measured", "threshold", "pass"]);
            for r in &reports {
                t.push(vec![r.id.to_string(), r.name.clone(), num(r.measured), num(r.threshold), r.pass.to_string()]);
            }
            t
        },
        ctx.format,
        ctx.out(),
    )?;
    Ok(reports.iter().all(|r| r.pass))
}

#[derive(Serialize)]
struct OracleOut {
    anchor: C64,
    degenerate_levels: usize,
    states: Vec<StateRow>,
    comparisons: Vec<Comparison>,
    magnetization_max: f64,
}

#[derive(Serialize)]
struct StateRow {
    state: usize,
    nu: i64,
    level: Option<usize>,
    eigenvalue: Option<C64>,
    gap: f64,
}

#[derive(Serialize)]
struct Comparison {
    axis: Axis,
    bra: usize,
    ket: usize,
    range: SiteRange,
    /// Worst relative gap over site pairs `p ≤ p′`.
    gap: f64,
    /// Single form factors: best constant closed/oracle ratio over sites and its misfit.
    /// Informational; singles depend on the gauge and on eigenvector phases.
    #[serde(skip_serializing_if = "Option::is_none")]
    single_ratio: Option<C64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    single_misfit: Option<f64>,
}

fn cmd_oracle(ctx: &Ctx) -> Result<bool, Failure> {
    let model = ctx.model()?;
    let gauge = ctx.cfg.gauge(&model)?;
    let n = model.n_sites();
    let mut states = Vec::new();
    for nu in 0..2 {
        states.extend(enumerate_singlet_states(&find_all_roots(nu, &model)?, &model)?);
    }
    let dec = Oracle::new(&model)?.diagonalize_and_match(&states)?;
    let tol = ctx.cfg.run.tolerance.unwrap_or(CROSS_CHECK_TOL);
    let mut magnetization = 0.0f64;
    for i in 0..states.len() {
        if dec.matches[i].is_some() {
            for p in 1..=n {
                magnetization = magnetization.max(dec.diagonal(Axis::Z, i, p)?.norm());
            }
        }
    }
    let mut comparisons = Vec::new();
    for (i, b) in states.iter().enumerate() {
        for (j, k) in states.iter().enumerate() {
            let axes: &[Axis] = if b.nu == k.nu {
                if i == j || flipped_index(&b.roots, &k.roots, &model).is_none() {
                    continue;
                }
                &[Axis::Z]
            } else {
                &[Axis::X, Axis::Y]
            };
            if dec.matches[i].is_none() || dec.matches[j].is_none() {
                continue;
            }
            // Zero floor from the largest quadratic of the pair over its axes and site pairs.
            let mut scale = 0.0f64;
            for &axis in axes {
                for p in 1..=n {
                    for p2 in p..=n {
                        scale = scale.max(dec.quadratic(axis, i, j, p, p2)?.norm());
                    }
                }
            }
            for &axis in axes {
                let range = SiteRange::verified(axis);
                let mut worst = 0.0f64;
                for p in 1..=n {
                    for p2 in p..=n {
                        let cf = local_ff_quadratic(axis, b, k, p, p2, range, Route::ClosedForm, &gauge, &model)?;
                        let orc = dec.quadratic(axis, i, j, p, p2)?;
                        worst = worst.max(gap(cf.value, orc, 1e-12 * scale));
                    }
                }
                let mut closed = Vec::with_capacity(n);
                let mut reference = Vec::with_capacity(n);
                for p in 1..=n {
                    closed.push(local_ff(axis, b, k, p, &gauge, Route::ClosedForm, &model)?.value);
                    reference.push(dec.normalized_single(axis, i, j, p)?);
                }
                let fit = constant_ratio_fit(&closed, &reference);
                comparisons.push(Comparison {
                    axis,
                    bra: i,
                    ket: j,
                    range,
                    gap: worst,
                    single_ratio: fit.map(|f| f.0),
                    single_misfit: fit.map(|f| f.1),
                });
            }
        }
    }
    let rows: Vec<StateRow> = dec
        .table()
        .into_iter()
        .map(|r| StateRow {
            state: r.state,
            nu: states[r.state].nu,
            level: r.level,
            eigenvalue: r.eigenvalue,
            gap: r.gap,
        })
        .collect();
    let ok =
        rows.iter().all(|r| r.level.is_some()) && magnetization <= 1e-10 && comparisons.iter().all(|c| c.gap <= tol);
    let out = OracleOut {
        anchor: dec.anchor,
        degenerate_levels: dec.degenerate_count(),
        states: rows,
        comparisons,
        magnetization_max: magnetization,
    };
    emit(
        &out,
        || {
            let mut t = Table::new(vec!["axis", "bra", "ket", "range", "gap", "single_misfit"]);
            for c in &out.comparisons {
                t.push(vec![
                    c.axis.to_string(),
                    c.bra.to_string(),
                    c.ket.to_string(),
                    format!("{:?}", c.range).to_lowercase(),
                    num(c.gap),
                    c.single_misfit.map(num).unwrap_or_default(),
                ]);
            }
            t
        },
        ctx.format,
        ctx.out(),
    )?;
    Ok(ok)
}

#[derive(Serialize)]
struct IdentityOut {
    tau: C64,
    samples: usize,
    max_residual: f64,
    threshold: f64,
    residuals: Vec<(String, f64)>,
}

fn cmd_identities(ctx: &Ctx) -> Result<bool, Failure> {
    let model = ctx.model()?;
    let samples = 200;
    let rep = identity_suite(model.tau(), samples, ctx.cfg.model.seed);
    let threshold = ctx.cfg.run.tolerance.unwrap_or(IDENTITY_TOL);
    let out = IdentityOut {
        tau: model.tau().tau(),
        samples,
        max_residual: rep.max_residual(),
        threshold,
        residuals: rep.residuals.clone(),
    };
    emit(
        &out,
        || {
            let mut t = Table::new(vec!["identity", "residual"]);
            for (name, r) in &out.residuals {
                t.push(vec![name.clone(), num(*r)]);
            }
            t
        },
        ctx.format,
        ctx.out(),
    )?;
    Ok(out.max_residual <= threshold)
}

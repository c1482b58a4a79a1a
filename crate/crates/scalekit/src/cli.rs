//! Config-driven front end shared by the `scalekit` binary: TOML manifests
//! describing a model and one experiment per command, CSV emission with a
//! fixed 17-significant-digit format so identical configs produce byte-
//! identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::applications::{cbi_k, ruin_deficit_density, DeficitDensityRequest, ImmigrationMeasure};
use crate::chain::{build_chain, gamma_coefficients, max_admissible_h};
use crate::convergence::{error_sweep, rate_expectation, RateFit, SweepOracle, SweepRequest};
use crate::diagnostics::{path_class, small_jump_diagnostics, PathClass};
use crate::error::{Error, Result};
use crate::measure::{
    cbi_far_density, cbi_mid_density, Atom, DensityForm, DensityPiece, LevyMeasure,
};
use crate::process::LevyTriplet;
use crate::reference::{cp_w, cp_z, BmClosedForm};
use crate::scale::{
    compute_w_with, compute_z_with, ide_recursion_w, z_tilde_from_w, RecursionOptions, ScaleTable,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Scale,
    Sweep,
    Ruin,
    Cbi,
    Diagnose,
}

impl Command {
    fn section(self) -> &'static str {
        match self {
            Command::Scale => "scale",
            Command::Sweep => "sweep",
            Command::Ruin => "ruin",
            Command::Cbi => "cbi",
            Command::Diagnose => "diagnose",
        }
    }
}

/// Exit status category for an error, as printed on stderr and returned by
/// the process: 2 config, 3 step admissibility, 4 numerical range.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidModel(_) | Error::InvalidArgument(_) => 2,
        Error::InadmissibleStep { .. } => 3,
        Error::InfiniteMass(_) | Error::NumericalRange(_) | Error::QuadratureBudget(_) => 4,
    }
}

pub fn error_category(err: &Error) -> &'static str {
    match exit_code(err) {
        2 => "invalid-config",
        3 => "inadmissible-step",
        _ => "numerical-range",
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub options: Options,
    pub scale: Option<ScaleConfig>,
    pub sweep: Option<SweepConfig>,
    pub ruin: Option<RuinConfig>,
    pub cbi: Option<CbiConfig>,
    pub diagnose: Option<DiagnoseConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Kahan accumulation in the recursions (off: plain order is the
    /// reproducibility baseline).
    pub compensated_sum: bool,
    /// Re-derive W through the integro-difference route and Z through the
    /// cumulative-W route after computing, failing on disagreement.
    pub cross_check: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub sigma2: f64,
    pub mu: f64,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub pieces: Vec<PieceConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Deserialize)]
pub struct PieceConfig {
    pub lower: f64,
    pub upper: f64,
    #[serde(flatten)]
    pub form: FormConfig,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum FormConfig {
    PowerLaw { coeff: f64, index: f64 },
    Exponential { weight: f64, rate: f64 },
    LogNormal,
    CbiMid,
    CbiFar,
}

/// One q or several; several stack extra row groups into the same CSV.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum QList {
    One(f64),
    Many(Vec<f64>),
}

impl QList {
    fn values(&self) -> Vec<f64> {
        match self {
            QList::One(q) => vec![*q],
            QList::Many(qs) => qs.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub q: QList,
    pub h: f64,
    pub x_max: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Closed forms from the model's sigma2 and mu; the measure must be 0.
    Brownian,
    /// Closed forms of the unit-drift unit-rate Poisson model.
    PoissonUnit,
    /// A table at `h_bench`, at least 16 times finer than the finest step.
    SelfBenchmark,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub q: f64,
    pub points: Vec<f64>,
    pub hs: Vec<f64>,
    pub oracle: OracleKind,
    pub h_bench: Option<f64>,
    /// Small-jump tail index for the expected-rate comment on infinite-
    /// variation models.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuinConfig {
    pub q: f64,
    pub h: f64,
    pub x: f64,
    pub a: f64,
    pub y_grid: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbiConfig {
    pub q: f64,
    pub h: f64,
    pub b: f64,
    pub xs: Vec<f64>,
    pub immigration_weight: f64,
    pub immigration_rate: f64,
}

fn default_deltas() -> Vec<f64> {
    (2..=11).map(|k| 0.5f64.powi(k)).collect()
}

fn default_probe_depth() -> usize {
    16
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub h_candidates: Vec<f64>,
    #[serde(default = "default_probe_depth")]
    pub probe_depth: usize,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config parse: {e}")))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
    })?;
    parse_config(&text)
}

pub fn build_triplet(model: &ModelConfig) -> Result<LevyTriplet> {
    let atoms = model
        .atoms
        .iter()
        .map(|a| Atom {
            location: a.location,
            mass: a.mass,
        })
        .collect();
    let pieces = model
        .pieces
        .iter()
        .map(|p| {
            let form = match &p.form {
                FormConfig::PowerLaw { coeff, index } => DensityForm::PowerLaw {
                    coeff: *coeff,
                    index: *index,
                },
                FormConfig::Exponential { weight, rate } => DensityForm::Exponential {
                    weight: *weight,
                    rate: *rate,
                },
                FormConfig::LogNormal => DensityForm::LogNormal,
                FormConfig::CbiMid => cbi_mid_density(),
                FormConfig::CbiFar => cbi_far_density(),
            };
            DensityPiece {
                lower: p.lower,
                upper: p.upper,
                form,
            }
        })
        .collect();
    let measure = LevyMeasure::new(atoms, pieces)?;
    LevyTriplet::new(model.sigma2, measure, model.mu)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, comments: &[String], header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::from("# schema-version 1\n");
    for c in comments {
        let _ = writeln!(text, "# {c}");
    }
    let _ = writeln!(text, "{header}");
    for r in rows {
        let _ = writeln!(text, "{r}");
    }
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn require_section<T>(section: Option<T>, name: &str) -> Result<T> {
    section.ok_or_else(|| Error::InvalidArgument(format!("config is missing a [{name}] section")))
}

fn grid_steps(h: f64, x_max: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite() && x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need positive finite h and x range, got h = {h}, x = {x_max}"
        )));
    }
    let n = (x_max / h).round() as usize;
    if n < 1 {
        return Err(Error::InvalidArgument(format!(
            "x range {x_max} is below one step {h}"
        )));
    }
    Ok(n)
}

fn build_table(
    triplet: &LevyTriplet,
    q: f64,
    h: f64,
    n: usize,
    options: &Options,
) -> Result<(ScaleTable, Vec<String>)> {
    let chain = build_chain(triplet, h, n + 1)?;
    let gamma = gamma_coefficients(&chain, n + 1)?;
    let opts = RecursionOptions {
        compensated_sum: options.compensated_sum,
    };
    let mut table = compute_w_with(&gamma, q, n, opts)?;
    table.ztilde = compute_z_with(&gamma, q, n, opts)?.ztilde;
    if options.cross_check {
        let ide = ide_recursion_w(&chain, q, n)?;
        for (m, (a, b)) in table.w.iter().zip(&ide).enumerate() {
            if (a - b).abs() > 1e-10 * b.abs().max(1.0) {
                return Err(Error::NumericalRange(format!(
                    "cross-check failed: W routes disagree at index {m}: {a} vs {b}"
                )));
            }
        }
        let alt = z_tilde_from_w(&table)?;
        for (m, (a, b)) in table.ztilde.iter().zip(&alt).enumerate() {
            if (a - b).abs() > 1e-10 * b.abs().max(1.0) {
                return Err(Error::NumericalRange(format!(
                    "cross-check failed: Z routes disagree at index {m}: {a} vs {b}"
                )));
            }
        }
    }
    Ok((table, chain.warnings))
}

fn run_scale(
    triplet: &LevyTriplet,
    cfg: &ScaleConfig,
    options: &Options,
    out: &Path,
) -> Result<()> {
    let qs = cfg.q.values();
    if qs.is_empty() || qs.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
        return Err(Error::InvalidArgument(
            "q must be one or more finite nonnegative values".into(),
        ));
    }
    let n = grid_steps(cfg.h, cfg.x_max)?;
    let tables = qs
        .par_iter()
        .map(|&q| build_table(triplet, q, cfg.h, n, options))
        .collect::<Result<Vec<_>>>()?;
    let mut comments = vec![
        format!(
            "command scale h {} delta0 {}",
            num(cfg.h),
            tables[0].0.delta0
        ),
        format!("scheme {:?}", tables[0].0.scheme),
    ];
    for w in &tables[0].1 {
        comments.push(format!("warning {w}"));
    }
    let mut rows = Vec::with_capacity(qs.len() * n);
    for (q, (table, _)) in qs.iter().zip(&tables) {
        let shift = table.delta0 as usize;
        for m in 1..=n {
            rows.push(format!(
                "{},{},{},{}",
                num(*q),
                num(m as f64 * cfg.h),
                num(table.w[m - shift]),
                num(1.0 + table.ztilde[m])
            ));
        }
    }
    write_csv(out, &comments, "q,x,w,z", &rows)
}

fn run_sweep(triplet: &LevyTriplet, cfg: &SweepConfig, out: &Path) -> Result<()> {
    let oracle = match cfg.oracle {
        OracleKind::Brownian => {
            if !triplet.measure().is_zero() {
                return Err(Error::InvalidModel(
                    "the Brownian oracle needs a model without jumps".into(),
                ));
            }
            None
        }
        OracleKind::PoissonUnit => {
            let m = triplet.measure();
            let unit_atom = m.atoms().len() == 1
                && m.atoms()[0].location == -1.0
                && m.atoms()[0].mass == 1.0
                && m.pieces().is_empty();
            if !(triplet.sigma2() == 0.0 && triplet.mu() == 1.0 && unit_atom) {
                return Err(Error::InvalidModel(
                    "the Poisson oracle needs the unit-drift model with one \
                     atom of mass 1 at -1"
                        .into(),
                ));
            }
            if cfg.points.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
                return Err(Error::InvalidArgument(
                    "the Poisson closed forms hold on (0, 1) only".into(),
                ));
            }
            None
        }
        OracleKind::SelfBenchmark => Some(cfg.h_bench.ok_or_else(|| {
            Error::InvalidArgument("the self-benchmark oracle needs h_bench".into())
        })?),
    };
    let cf = if matches!(cfg.oracle, OracleKind::Brownian) {
        Some(BmClosedForm::new(triplet.sigma2(), triplet.mu(), cfg.q)?)
    } else {
        None
    };
    let q = cfg.q;
    let bm_w = move |x: f64| cf.expect("built for the Brownian arm").w(x);
    let bm_z = move |x: f64| cf.expect("built for the Brownian arm").z(x);
    let cpw = move |x: f64| cp_w(q, x).expect("points pre-validated in (0,1)");
    let cpz = move |x: f64| cp_z(q, x).expect("points pre-validated in (0,1)");
    let req = SweepRequest {
        label: "sweep".into(),
        q: cfg.q,
        points: cfg.points.clone(),
        hs: cfg.hs.clone(),
        oracle: match (cfg.oracle, oracle) {
            (OracleKind::Brownian, _) => SweepOracle::ClosedForm { w: &bm_w, z: &bm_z },
            (OracleKind::PoissonUnit, _) => SweepOracle::ClosedForm { w: &cpw, z: &cpz },
            (OracleKind::SelfBenchmark, Some(h_bench)) => SweepOracle::SelfBenchmark { h_bench },
            (OracleKind::SelfBenchmark, None) => unreachable!("checked above"),
        },
    };
    let rep = error_sweep(triplet, &req)?;
    let mut comments = vec![format!("command sweep q {}", num(cfg.q))];
    let fit_comment = |name: &str, fit: &RateFit, comments: &mut Vec<String>| match fit {
        RateFit::Exact => comments.push(format!("slope-{name} exact")),
        RateFit::Fit {
            slope,
            r_squared,
            dropped,
            ..
        } => {
            comments.push(format!("slope-{name} {}", num(*slope)));
            comments.push(format!("r2-{name} {}", num(*r_squared)));
            comments.push(format!("dropped-{name} {dropped}"));
        }
    };
    fit_comment("w", &rep.fit_w, &mut comments);
    fit_comment("z", &rep.fit_z, &mut comments);
    if let Some(r) = rep.ratio_w {
        comments.push(format!("ratio-w {}", num(r)));
    }
    if let Some(r) = rep.ratio_z {
        comments.push(format!("ratio-z {}", num(r)));
    }
    if let Ok((ew, ez)) = rate_expectation(path_class(triplet), cfg.epsilon) {
        comments.push(format!("expected-slope-w {}", num(ew)));
        comments.push(format!("expected-slope-z {}", num(ez)));
    }
    let rows: Vec<String> = rep
        .hs
        .iter()
        .zip(rep.err_w.iter().zip(&rep.err_z))
        .map(|(h, (ew, ez))| format!("{},{},{}", num(*h), num(*ew), num(*ez)))
        .collect();
    write_csv(out, &comments, "h,err_w,err_z", &rows)
}

fn run_ruin(triplet: &LevyTriplet, cfg: &RuinConfig, options: &Options, out: &Path) -> Result<()> {
    if !triplet.measure().atoms().is_empty() {
        return Err(Error::InvalidModel(
            "deficit densities need an absolutely continuous jump part; \
             atoms have none"
                .into(),
        ));
    }
    if triplet.measure().pieces().is_empty() {
        return Err(Error::InvalidModel(
            "deficit densities need at least one density piece".into(),
        ));
    }
    let n = grid_steps(cfg.h, cfg.a)?;
    let (table, warnings) = build_table(triplet, cfg.q, cfg.h, n, options)?;
    let pieces: Vec<DensityPiece> = triplet.measure().pieces().to_vec();
    let f = move |u: f64| {
        let y = -u;
        pieces
            .iter()
            .filter(|p| p.lower <= y && y < p.upper)
            .map(|p| p.form.eval(y))
            .sum()
    };
    let req = DeficitDensityRequest {
        x: cfg.x,
        a: cfg.a,
        y_grid: cfg.y_grid.clone(),
        f: &f,
    };
    let d = ruin_deficit_density(&table, &req)?;
    let mut comments = vec![
        format!(
            "command ruin q {} h {} x {} a {}",
            num(cfg.q),
            num(cfg.h),
            num(cfg.x),
            num(cfg.a)
        ),
        format!("negative-values {}", d.has_negative),
    ];
    for w in &warnings {
        comments.push(format!("warning {w}"));
    }
    let rows: Vec<String> =
        d.y.iter()
            .zip(&d.values)
            .map(|(y, k)| format!("{},{}", num(*y), num(*k)))
            .collect();
    write_csv(out, &comments, "y,k", &rows)
}

fn run_cbi(triplet: &LevyTriplet, cfg: &CbiConfig, options: &Options, out: &Path) -> Result<()> {
    let xmax = cfg.xs.iter().cloned().fold(0.0f64, f64::max);
    let n = grid_steps(cfg.h, xmax)?;
    let (table, warnings) = build_table(triplet, cfg.q, cfg.h, n, options)?;
    let m = ImmigrationMeasure::exponential(cfg.immigration_weight, cfg.immigration_rate)?;
    let k = cbi_k(&table, cfg.b, &m, &cfg.xs)?;
    let mut comments = vec![
        format!(
            "command cbi q {} h {} b {}",
            num(cfg.q),
            num(cfg.h),
            num(cfg.b)
        ),
        format!("delta0-warning {}", k.delta0_warning),
    ];
    for w in &warnings {
        comments.push(format!("warning {w}"));
    }
    let rows: Vec<String> =
        k.x.iter()
            .zip(&k.values)
            .map(|(x, v)| format!("{},{}", num(*x), num(*v)))
            .collect();
    write_csv(out, &comments, "x,k", &rows)
}

fn run_diagnose(triplet: &LevyTriplet, cfg: &DiagnoseConfig, out: &Path) -> Result<()> {
    let diag = small_jump_diagnostics(triplet.measure(), &cfg.deltas)?;
    let class = path_class(triplet);
    let mut comments = vec![
        format!("command diagnose"),
        format!("path-class {class:?}"),
        format!("activity-finite {}", diag.activity_finite),
        format!("kappa-zero-finite {}", diag.kappa_zero_finite),
    ];
    if let Some(eps) = diag.epsilon {
        comments.push(format!("epsilon {}", num(eps)));
        comments.push(format!(
            "epsilon-residual {}",
            num(diag.epsilon_residual.unwrap_or(f64::NAN))
        ));
        comments.push(format!(
            "bounded-above {}",
            diag.bounded_above.unwrap_or(false)
        ));
        comments.push(format!(
            "bounded-below {}",
            diag.bounded_below.unwrap_or(false)
        ));
    }
    let eps_for_rate = if class == PathClass::InfiniteVariation {
        diag.epsilon
    } else {
        None
    };
    match rate_expectation(class, eps_for_rate) {
        Ok((ew, ez)) => {
            comments.push(format!("expected-slope-w {}", num(ew)));
            comments.push(format!("expected-slope-z {}", num(ez)));
        }
        Err(e) => comments.push(format!("expected-slope unavailable: {e}")),
    }
    for &h in &cfg.h_candidates {
        match build_chain(triplet, h, cfg.probe_depth) {
            Ok(_) => comments.push(format!("h-candidate {} ok", num(h))),
            Err(Error::InadmissibleStep { reason, .. }) => {
                comments.push(format!("h-candidate {} inadmissible: {reason}", num(h)))
            }
            Err(e) => return Err(e),
        }
    }
    if !cfg.h_candidates.is_empty() {
        match max_admissible_h(triplet, &cfg.h_candidates) {
            Ok(h) => comments.push(format!("max-admissible-h {}", num(h))),
            Err(Error::InadmissibleStep { .. }) => comments.push("max-admissible-h none".into()),
            Err(e) => return Err(e),
        }
    }
    let rows: Vec<String> = (0..diag.deltas.len())
        .map(|i| {
            format!(
                "{},{},{},{},{},{}",
                num(diag.deltas[i]),
                num(diag.kappa[i]),
                num(diag.xi[i]),
                num(diag.zeta[i]),
                num(diag.gamma_small[i]),
                num(diag.small_tail[i])
            )
        })
        .collect();
    write_csv(
        out,
        &comments,
        "delta,kappa,xi,zeta,gamma_small,tail",
        &rows,
    )
}

/// Run one command against a parsed config, writing `<prefix><command>.csv`.
/// Returns the emitted paths.
pub fn run(cmd: Command, config: &RunConfig, out_prefix: &str) -> Result<Vec<PathBuf>> {
    let triplet = build_triplet(&config.model)?;
    let out = PathBuf::from(format!("{out_prefix}{}.csv", cmd.section()));
    match cmd {
        Command::Scale => {
            let cfg = require_section(config.scale.as_ref(), "scale")?;
            run_scale(&triplet, cfg, &config.options, &out)?;
        }
        Command::Sweep => {
            let cfg = require_section(config.sweep.as_ref(), "sweep")?;
            run_sweep(&triplet, cfg, &out)?;
        }
        Command::Ruin => {
            let cfg = require_section(config.ruin.as_ref(), "ruin")?;
            run_ruin(&triplet, cfg, &config.options, &out)?;
        }
        Command::Cbi => {
            let cfg = require_section(config.cbi.as_ref(), "cbi")?;
            run_cbi(&triplet, cfg, &config.options, &out)?;
        }
        Command::Diagnose => {
            let cfg = require_section(config.diagnose.as_ref(), "diagnose")?;
            run_diagnose(&triplet, cfg, &out)?;
        }
    }
    Ok(vec![out])
}

//! Parameter sweeps: the bridge between the analytic/Monte-Carlo engines and
//! tabulated results.
//!
//! An [`Experiment`] names a sweep variable, a grid, a scheme list, and a
//! backend; [`run_experiment`] produces one row per (grid point, scheme).
//! Per-point analytic failures (a quadrature that refuses to converge) are
//! recorded in the row's `note` and the run carries on — only configuration
//! errors abort a run. Output rendering is deterministic down to the byte so
//! reruns of the same experiment diff clean.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, Procedure, S2dRounds};
use crate::channel::RedrawPolicy;
use crate::config::{db_to_lin, ConfigError, SystemParams};
use crate::montecarlo::{self, DecodeCriterion, Scheme};
use crate::quad::QuadratureSpec;
use crate::timeline::{self, RttModel, TimelineError};

/// Which knob the sweep grid drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Target spectral efficiency in bit/s/Hz (grid is linear).
    Rate,
    /// Direct-link mean square gain in dB.
    VarSd,
    /// Both relay-link mean square gains in dB, swept together.
    VarSrRd,
    /// Both transmit powers in dB, swept together.
    Power,
}

/// Which engine(s) fill the row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Analytic,
    Montecarlo,
    Both,
}

impl Backend {
    fn wants_analytic(self) -> bool {
        matches!(self, Backend::Analytic | Backend::Both)
    }
    fn wants_mc(self) -> bool {
        matches!(self, Backend::Montecarlo | Backend::Both)
    }
}

/// What the sweep evaluates at each grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ExperimentKind {
    /// End-to-end outage probability per scheme.
    OutageSweep,
    /// Fewest-rounds latency to reach a target outage within a budget
    /// (analytic backend only; the grid must be a power grid).
    LatencyCurve { target_outage: f64, budget_ms: f64 },
}

/// A complete sweep description; serializable so a run can be reproduced
/// from its JSON sidecar alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub kind: ExperimentKind,
    pub sweep_variable: SweepVariable,
    pub sweep_grid: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub backend: Backend,
    pub n_trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub redraw: RedrawPolicy,
    #[serde(default)]
    pub criterion: DecodeCriterion,
    pub base_params: SystemParams,
}

/// One output row of an outage sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub scheme: Scheme,
    /// Analytic outage, when the backend and scheme provide one.
    pub p_out: Option<f64>,
    /// Monte-Carlo estimate and its standard error.
    pub p_hat: Option<f64>,
    pub stderr: Option<f64>,
    /// `|p_hat - p_out| / stderr` when all three exist.
    pub z_gap: Option<f64>,
    pub relay_pct: Option<f64>,
    pub source_pct: Option<f64>,
    pub low_confidence: Option<bool>,
    /// Per-point diagnostics (analytic non-convergence, unsupported
    /// combinations); the run continues past them.
    pub note: Option<String>,
}

/// One output row of a latency curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub rounds: Option<u32>,
    pub latency_ms: Option<f64>,
}

/// Table produced by [`run_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub enum RunOutput {
    Outage(Vec<SweepRow>),
    Latency(Vec<LatencyRow>),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("scheme list is empty")]
    EmptySchemes,
    #[error("n_trials must be positive when a Monte-Carlo backend is selected")]
    NoTrials,
    #[error("latency curves sweep power; got {0:?}")]
    LatencyNeedsPowerGrid(SweepVariable),
    #[error("invalid parameters at grid point {x}: {source}")]
    PointConfig { x: f64, source: ConfigError },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error("need at least {need} usable points for a slope fit, found {found}")]
    InsufficientData { need: usize, found: usize },
}

/// Apply one grid value to the base parameters.
fn apply(variable: SweepVariable, base: &SystemParams, x: f64) -> SystemParams {
    let mut p = *base;
    match variable {
        SweepVariable::Rate => p.rate = x,
        SweepVariable::VarSd => p.var_sd = db_to_lin(x),
        SweepVariable::VarSrRd => {
            p.var_sr = db_to_lin(x);
            p.var_rd = db_to_lin(x);
        }
        SweepVariable::Power => {
            p.p_s = db_to_lin(x);
            p.p_r = p.p_s;
        }
    }
    p
}

/// Total-power fairness: the direct baselines transmit with the combined
/// source+relay budget.
fn params_for_scheme(point: &SystemParams, scheme: Scheme) -> SystemParams {
    let mut p = *point;
    if !scheme.uses_relay() {
        p.p_s *= 2.0;
    }
    p
}

fn analytic_columns(
    params: &SystemParams,
    spec: &QuadratureSpec,
    scheme: Scheme,
    row: &mut SweepRow,
) {
    let outcome = match scheme {
        Scheme::S2d1 => Ok(analytic::baseline_s2d(params, S2dRounds::One)),
        Scheme::S2d2 => Ok(analytic::baseline_s2d(params, S2dRounds::Two)),
        Scheme::Af => analytic::baseline_af(params, spec),
        Scheme::Sdf => {
            row.note = Some("no analytic route for the decode-and-forward reference".into());
            return;
        }
        Scheme::Conventional => {
            analytic::system_outage(params, spec, Procedure::Conventional).map(|b| b.p_out_system)
        }
        Scheme::Enhanced => {
            analytic::system_outage(params, spec, Procedure::Enhanced).map(|b| b.p_out_system)
        }
    };
    match outcome {
        Ok(p) => row.p_out = Some(p),
        Err(e) => {
            row.note = Some(e.to_string());
            return;
        }
    }
    match scheme {
        Scheme::Conventional | Scheme::Enhanced => {
            let procedure = if scheme == Scheme::Conventional {
                Procedure::Conventional
            } else {
                Procedure::Enhanced
            };
            if let Ok(split) = analytic::cooperation_percentages(params, spec, procedure) {
                row.relay_pct = Some(split.relay_pct);
                row.source_pct = Some(split.source_pct);
            }
        }
        Scheme::S2d2 => row.source_pct = Some(analytic::s2d_source_pct(params)),
        _ => {}
    }
}

fn outage_rows_at(exp: &Experiment, spec: &QuadratureSpec, x: f64) -> Vec<SweepRow> {
    let point = apply(exp.sweep_variable, &exp.base_params, x);
    let mut rows = Vec::with_capacity(exp.schemes.len());
    for &scheme in &exp.schemes {
        let params = params_for_scheme(&point, scheme);
        let mut row = SweepRow {
            x,
            scheme,
            p_out: None,
            p_hat: None,
            stderr: None,
            z_gap: None,
            relay_pct: None,
            source_pct: None,
            low_confidence: None,
            note: None,
        };
        if let Err(e) = params.validate() {
            row.note = Some(
                ExperimentError::PointConfig {
                    x,
                    source: e.clone(),
                }
                .to_string(),
            );
            rows.push(row);
            continue;
        }
        if exp.backend.wants_analytic() {
            analytic_columns(&params, spec, scheme, &mut row);
        }
        if exp.backend.wants_mc() {
            let est = montecarlo::estimate_outage(
                &params,
                scheme,
                exp.n_trials,
                exp.seed,
                exp.redraw,
                exp.criterion,
            );
            row.p_hat = Some(est.p_hat);
            row.stderr = Some(est.stderr);
            row.low_confidence = Some(est.low_confidence);
            if let (Some(p), true) = (row.p_out, est.stderr > 0.0) {
                row.z_gap = Some((est.p_hat - p).abs() / est.stderr);
            }
            if !exp.backend.wants_analytic() {
                if let Scheme::Conventional | Scheme::Enhanced = scheme {
                    let procedure = if scheme == Scheme::Conventional {
                        Procedure::Conventional
                    } else {
                        Procedure::Enhanced
                    };
                    let coop = montecarlo::estimate_cooperation(
                        &params,
                        procedure,
                        exp.n_trials,
                        exp.seed,
                        exp.redraw,
                        exp.criterion,
                    );
                    row.relay_pct = Some(coop.relay_pct);
                    row.source_pct = Some(coop.source_pct);
                }
            }
        }
        rows.push(row);
    }
    rows
}

fn run_outage(exp: &Experiment, spec: &QuadratureSpec) -> Vec<SweepRow> {
    #[cfg(feature = "parallel")]
    let mut indexed: Vec<(usize, Vec<SweepRow>)> = {
        use rayon::prelude::*;
        exp.sweep_grid
            .par_iter()
            .enumerate()
            .map(|(i, &x)| (i, outage_rows_at(exp, spec, x)))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut indexed: Vec<(usize, Vec<SweepRow>)> = exp
        .sweep_grid
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, outage_rows_at(exp, spec, x)))
        .collect();
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().flat_map(|(_, rows)| rows).collect()
}

fn run_latency(
    exp: &Experiment,
    spec: &QuadratureSpec,
    target: f64,
    budget_ms: f64,
) -> Result<Vec<LatencyRow>, ExperimentError> {
    if exp.sweep_variable != SweepVariable::Power {
        return Err(ExperimentError::LatencyNeedsPowerGrid(exp.sweep_variable));
    }
    let model = RttModel::default();
    let mut rows = Vec::new();
    for &scheme in &exp.schemes {
        let pts = timeline::latency_at_reliability(
            &exp.base_params,
            spec,
            &model,
            scheme,
            target,
            budget_ms,
            &exp.sweep_grid,
        )?;
        rows.extend(pts.into_iter().map(|pt| LatencyRow {
            snr_db: pt.snr_db,
            scheme,
            rounds: pt.rounds,
            latency_ms: pt.latency_ms,
        }));
    }
    Ok(rows)
}

/// Run an experiment to completion.
pub fn run_experiment(
    exp: &Experiment,
    spec: &QuadratureSpec,
) -> Result<RunOutput, ExperimentError> {
    exp.base_params.validate()?;
    if exp.sweep_grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    if exp.schemes.is_empty() {
        return Err(ExperimentError::EmptySchemes);
    }
    match exp.kind {
        ExperimentKind::OutageSweep => {
            if exp.backend.wants_mc() && exp.n_trials == 0 {
                return Err(ExperimentError::NoTrials);
            }
            Ok(RunOutput::Outage(run_outage(exp, spec)))
        }
        ExperimentKind::LatencyCurve {
            target_outage,
            budget_ms,
        } => Ok(RunOutput::Latency(run_latency(
            exp,
            spec,
            target_outage,
            budget_ms,
        )?)),
    }
}

fn fmt_opt_e(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.10e}")).unwrap_or_default()
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

/// Render a run as CSV, deterministically.
pub fn render_csv(out: &RunOutput) -> String {
    let mut s = String::new();
    match out {
        RunOutput::Outage(rows) => {
            s.push_str("x,scheme,p_out,p_hat,stderr,z,relay_pct,source_pct,low_confidence,note\n");
            for r in rows {
                let note = r
                    .note
                    .as_deref()
                    .map(|n| format!("\"{}\"", n.replace('"', "'")))
                    .unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.x,
                    r.scheme.name(),
                    fmt_opt_e(r.p_out),
                    fmt_opt_e(r.p_hat),
                    fmt_opt_e(r.stderr),
                    fmt_opt(r.z_gap, 3),
                    fmt_opt(r.relay_pct, 6),
                    fmt_opt(r.source_pct, 6),
                    r.low_confidence.map(|b| b.to_string()).unwrap_or_default(),
                    note
                ));
            }
        }
        RunOutput::Latency(rows) => {
            s.push_str("snr_db,scheme,rounds,latency_ms\n");
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.snr_db,
                    r.scheme.name(),
                    r.rounds.map(|k| k.to_string()).unwrap_or_default(),
                    fmt_opt(r.latency_ms, 4)
                ));
            }
        }
    }
    s
}

/// Least-squares diversity order of one scheme over a power window: the
/// negated slope of `log10(p)` against `P_dB / 10`, needing at least three
/// usable (positive, finite) points. Analytic values are preferred; rows
/// without one fall back to the Monte-Carlo estimate.
pub fn diversity_slope(
    rows: &[SweepRow],
    scheme: Scheme,
    lo_db: f64,
    hi_db: f64,
) -> Result<f64, ExperimentError> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.scheme == scheme && r.x >= lo_db && r.x <= hi_db)
        .filter_map(|r| r.p_out.or(r.p_hat).map(|p| (r.x / 10.0, p)))
        .filter(|(_, p)| *p > 0.0 && p.is_finite())
        .map(|(x, p)| (x, p.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(ExperimentError::InsufficientData {
            need: 3,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    Ok(-(n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Evenly spaced inclusive grid.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Default trial count for the built-in experiments.
pub const DEFAULT_TRIALS: u64 = 10_000_000;
/// Default seed for the built-in experiments.
pub const DEFAULT_SEED: u64 = 20260819;

/// The standard experiment set, mirroring the operating points used across
/// the validation suite.
pub fn builtin_experiments() -> Vec<Experiment> {
    fn base() -> SystemParams {
        let mut p = SystemParams::default();
        p.p_s = db_to_lin(5.0);
        p.p_r = p.p_s;
        p.var_sr = db_to_lin(10.0);
        p.var_rd = db_to_lin(10.0);
        p.var_rr = db_to_lin(-10.0);
        p
    }
    fn exp(name: &str, kind: ExperimentKind, var: SweepVariable, g: Vec<f64>) -> Experiment {
        Experiment {
            name: name.into(),
            kind,
            sweep_variable: var,
            sweep_grid: g,
            schemes: Scheme::ALL.to_vec(),
            backend: Backend::Analytic,
            n_trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            redraw: RedrawPolicy::Reuse,
            criterion: DecodeCriterion::BlockSinr,
            base_params: base(),
        }
    }

    let mut set = Vec::new();

    // Latency-to-reliability curve: strict URLLC target under a relaxed
    // 1.5 ms budget (two rounds), weak direct link, clean relay.
    let mut latency = exp(
        "latency-vs-power",
        ExperimentKind::LatencyCurve {
            target_outage: 1e-5,
            budget_ms: 1.5,
        },
        SweepVariable::Power,
        grid(0.0, 30.0, 1.0),
    );
    latency.base_params.var_sd = 1.0;
    latency.base_params.var_rr = 0.0;
    latency.schemes = vec![Scheme::Enhanced, Scheme::Conventional, Scheme::S2d2];
    set.push(latency);

    // Rate sweeps at 5 dB: deeply shadowed direct link, then a strong one.
    let mut weak = exp(
        "rate-sweep-weak-direct",
        ExperimentKind::OutageSweep,
        SweepVariable::Rate,
        grid(0.25, 4.0, 0.25),
    );
    weak.base_params.var_sd = db_to_lin(-10.0);
    set.push(weak);

    let mut strong = exp(
        "rate-sweep-strong-direct",
        ExperimentKind::OutageSweep,
        SweepVariable::Rate,
        grid(0.25, 4.0, 0.25),
    );
    strong.base_params.var_sd = db_to_lin(5.0);
    set.push(strong);

    // Direct-link quality sweep.
    set.push(exp(
        "direct-gain-sweep",
        ExperimentKind::OutageSweep,
        SweepVariable::VarSd,
        grid(-10.0, 10.0, 2.0),
    ));

    // Relay-link quality sweep with a unit direct link.
    let mut relay = exp(
        "relay-gain-sweep",
        ExperimentKind::OutageSweep,
        SweepVariable::VarSrRd,
        grid(0.0, 20.0, 2.0),
    );
    relay.base_params.var_sd = 1.0;
    set.push(relay);

    // Power sweeps: clean relay, heavy self-interference, light
    // self-interference.
    for (name, var_rr) in [
        ("power-sweep-clean-relay", 0.0),
        ("power-sweep-strong-rsi", 1.0),
        ("power-sweep-weak-rsi", db_to_lin(-10.0)),
    ] {
        let mut f = exp(
            name,
            ExperimentKind::OutageSweep,
            SweepVariable::Power,
            grid(0.0, 30.0, 2.5),
        );
        f.base_params.var_sd = 1.0;
        f.base_params.var_rr = var_rr;
        set.push(f);
    }

    set
}

/// Look up a built-in experiment by name.
pub fn builtin(name: &str) -> Option<Experiment> {
    builtin_experiments().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = grid(0.25, 4.0, 0.25);
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], 0.25);
        assert_eq!(*g.last().unwrap(), 4.0);
        let g = grid(0.0, 30.0, 2.5);
        assert_eq!(g.len(), 13);
        assert_eq!(*g.last().unwrap(), 30.0);
    }

    #[test]
    fn validation_rejects_degenerate_experiments() {
        let mut e = builtin("power-sweep-clean-relay").unwrap();
        e.sweep_grid.clear();
        assert!(matches!(
            run_experiment(&e, &QuadratureSpec::default()),
            Err(ExperimentError::EmptyGrid)
        ));
        let mut e = builtin("power-sweep-clean-relay").unwrap();
        e.schemes.clear();
        assert!(matches!(
            run_experiment(&e, &QuadratureSpec::default()),
            Err(ExperimentError::EmptySchemes)
        ));
        let mut e = builtin("power-sweep-clean-relay").unwrap();
        e.backend = Backend::Montecarlo;
        e.n_trials = 0;
        assert!(matches!(
            run_experiment(&e, &QuadratureSpec::default()),
            Err(ExperimentError::NoTrials)
        ));
    }

    #[test]
    fn analytic_sweep_rows_are_ordered_and_filled() {
        let mut e = builtin("power-sweep-clean-relay").unwrap();
        e.sweep_grid = vec![5.0, 10.0];
        e.schemes = vec![Scheme::S2d1, Scheme::Enhanced, Scheme::Sdf];
        let RunOutput::Outage(rows) = run_experiment(&e, &QuadratureSpec::default()).unwrap()
        else {
            panic!("outage sweep expected")
        };
        assert_eq!(rows.len(), 6);
        assert_eq!((rows[0].x, rows[0].scheme), (5.0, Scheme::S2d1));
        assert_eq!((rows[4].x, rows[4].scheme), (10.0, Scheme::Enhanced));
        // The reference scheme has no analytic route: note instead of value.
        assert!(rows[2].p_out.is_none() && rows[2].note.is_some());
        // Enhanced rows carry the cooperation split; it partitions the
        // first-round failure rate.
        let enh = &rows[1];
        assert!(enh.p_out.unwrap() > 0.0);
        let (r, s) = (enh.relay_pct.unwrap(), enh.source_pct.unwrap());
        assert!(r > 0.0 && s > 0.0);
        // Monte-Carlo columns stay empty on the analytic backend.
        assert!(enh.p_hat.is_none() && enh.stderr.is_none());
    }

    #[test]
    fn both_backend_fills_z_gap() {
        let mut e = builtin("power-sweep-clean-relay").unwrap();
        e.sweep_grid = vec![5.0];
        e.schemes = vec![Scheme::S2d1];
        e.backend = Backend::Both;
        e.n_trials = 100_000;
        let RunOutput::Outage(rows) = run_experiment(&e, &QuadratureSpec::default()).unwrap()
        else {
            panic!()
        };
        let r = &rows[0];
        assert!(r.p_out.is_some() && r.p_hat.is_some());
        // Closed-form baseline vs its own simulation: must sit within a few
        // standard errors.
        assert!(r.z_gap.unwrap() < 5.0, "z = {:?}", r.z_gap);
    }

    #[test]
    fn csv_is_deterministic_and_quoted() {
        let mut e = builtin("power-sweep-clean-relay").unwrap();
        e.sweep_grid = vec![5.0, 7.5];
        e.schemes = vec![Scheme::Af, Scheme::Sdf];
        let out1 = run_experiment(&e, &QuadratureSpec::default()).unwrap();
        let out2 = run_experiment(&e, &QuadratureSpec::default()).unwrap();
        let (c1, c2) = (render_csv(&out1), render_csv(&out2));
        assert_eq!(c1, c2);
        assert!(c1.starts_with("x,scheme,p_out,"));
        // The note column is quoted so free text cannot break the format.
        assert!(c1.contains("\"no analytic route"));
    }

    #[test]
    fn slope_fit_recovers_synthetic_diversity() {
        // p = 10^{-2 P_dB/10 - 0.3}: slope exactly 2.
        let rows: Vec<SweepRow> = (0..7)
            .map(|i| {
                let x = 10.0 + 2.5 * i as f64;
                SweepRow {
                    x,
                    scheme: Scheme::Af,
                    p_out: Some(10f64.powf(-2.0 * x / 10.0 - 0.3)),
                    p_hat: None,
                    stderr: None,
                    z_gap: None,
                    relay_pct: None,
                    source_pct: None,
                    low_confidence: None,
                    note: None,
                }
            })
            .collect();
        let slope = diversity_slope(&rows, Scheme::Af, 10.0, 25.0).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(matches!(
            diversity_slope(&rows, Scheme::Enhanced, 10.0, 25.0),
            Err(ExperimentError::InsufficientData { found: 0, .. })
        ));
    }

    #[test]
    fn builtin_set_is_complete_and_valid() {
        let set = builtin_experiments();
        assert_eq!(set.len(), 8);
        for f in &set {
            f.base_params.validate().unwrap();
            assert!(!f.sweep_grid.is_empty() && !f.schemes.is_empty());
        }
        assert!(builtin("rate-sweep-strong-direct").is_some());
        assert!(builtin("nope").is_none());
        // Round-trip through JSON: the sidecar must reproduce the run.
        let f = builtin("rate-sweep-strong-direct").unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: Experiment = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
    }
}

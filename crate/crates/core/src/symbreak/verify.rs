//! Numerical verification of the minimal-model counts: crossing curves and folds.

use nalgebra::DVector;
use serde::Serialize;

use crate::continuation::{classify, locate_folds, trace_branch, ContinuationSettings, Curve, CurveClass};
use crate::error::{out_of_range, Error, Result};
use crate::family::{FamilySpec, ModelSign};
use crate::rep::{orbit_plane_count, Dim};
use crate::spectrum::spectrum;

use super::counts::{predicted_counts, PredictedCounts};
use super::enumerate::{plane_range, PlaneField, L1_TOLERANCE};
use super::localize::localized_family;
use super::planar::{gamma_closed, max_fold_p};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub k: Dim,
    pub eta: f64,
    /// Localization budget. Odd k: `None` uses the global perturbation.
    /// Even k: defaults to 4 eta.
    pub eta0: Option<f64>,
    /// Cubic sign of the even model (ignored for odd k).
    pub sign: ModelSign,
    /// Defaults to [-2 gamma_{k,1}, 2 gamma_{k,1}].
    pub window: Option<(f64, f64)>,
}

impl VerifyConfig {
    pub fn new(k: Dim, eta: f64) -> Self {
        Self { k, eta, eta0: None, sign: ModelSign::Minus, window: None }
    }

    pub fn family(&self) -> Result<FamilySpec> {
        if self.k.is_odd() {
            match self.eta0 {
                None => FamilySpec::perturbed_odd(self.k, self.eta),
                Some(e0) => localized_family(self.k, self.eta, e0, self.sign),
            }
        } else {
            localized_family(self.k, self.eta, self.eta0.unwrap_or(4.0 * self.eta), self.sign)
        }
    }

    pub fn lambda_window(&self) -> Result<(f64, f64)> {
        match self.window {
            Some((lo, hi)) if lo < hi => Ok((lo, hi)),
            Some((lo, hi)) => Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]"))),
            None => {
                let g = gamma_closed(self.k, 1, self.eta)?;
                Ok((-2.0 * g, 2.0 * g))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Pass,
    Fail,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldCheck {
    /// 1 for folds on L_1.
    pub p: usize,
    pub lambda: f64,
    pub closed_form: Option<f64>,
    pub rel_error: Option<f64>,
    pub multiplicity: u128,
    pub index_before: usize,
    pub index_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneSummary {
    pub p: usize,
    pub multiplicity: u128,
    pub curves: usize,
    pub crossing_curves: usize,
    pub fold_events: usize,
    pub l1_curves: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PitchforkSplit {
    pub to_crossing: u128,
    pub to_fold: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalModelReport {
    pub k: usize,
    pub eta: f64,
    pub eta0: Option<f64>,
    pub family: String,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub crossings: u128,
    pub folds: u128,
    pub expected: PredictedCounts,
    pub crossing_index: usize,
    pub crossing_index_ok: bool,
    pub fold_checks: Vec<FoldCheck>,
    pub fold_agreement_ok: bool,
    pub planes: Vec<PlaneSummary>,
    pub pitchfork_split: Option<PitchforkSplit>,
    pub status: VerifyStatus,
    pub pass: bool,
    pub message: Option<String>,
}

/// Relative tolerance for numeric folds against gamma_{k,p}.
pub const FOLD_AGREEMENT: f64 = 1e-8;

const ENDPOINT_MATCH: f64 = 1e-7;
const PITCHFORK_ANGLE: f64 = 0.1;

fn family_label(spec: &FamilySpec) -> String {
    serde_json::to_value(spec.kind)
        .ok()
        .and_then(|v| v.get("kind").and_then(|s| s.as_str()).map(str::to_owned))
        .unwrap_or_default()
}

/// Count crossing curves and folds over the window by continuation in every
/// plane class, and compare with the predicted counts.
pub fn verify_minimal_model(cfg: &VerifyConfig) -> Result<MinimalModelReport> {
    let spec = cfg.family()?;
    let (lo, hi) = cfg.lambda_window()?;
    if !(cfg.eta > 0.0) {
        return out_of_range("eta", cfg.eta, "(0, inf)");
    }
    let expected = predicted_counts(cfg.k)?;
    let mut report = MinimalModelReport {
        k: cfg.k.k(),
        eta: cfg.eta,
        eta0: spec.localization().map(|l| l.eta0),
        family: family_label(&spec),
        lambda_min: lo,
        lambda_max: hi,
        crossings: 0,
        folds: 0,
        expected,
        crossing_index: cfg.k.ell(),
        crossing_index_ok: true,
        fold_checks: Vec::new(),
        fold_agreement_ok: true,
        planes: Vec::new(),
        pitchfork_split: None,
        status: VerifyStatus::Fail,
        pass: false,
        message: None,
    };
    if let Err(e) = sweep(cfg, &spec, lo, hi, &mut report) {
        report.status = VerifyStatus::NumericalFailure;
        report.message = Some(e.to_string());
        return Ok(report);
    }
    let split_ok = report.pitchfork_split.is_none_or(|s| s.to_crossing == s.to_fold && s.to_crossing > 0);
    report.pass = report.crossings == expected.crossings
        && report.folds == expected.folds
        && report.crossing_index_ok
        && report.fold_agreement_ok
        && split_ok;
    report.status = if report.pass { VerifyStatus::Pass } else { VerifyStatus::Fail };
    Ok(report)
}

fn near(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() < ENDPOINT_MATCH
}

/// All curves in one plane through the zeros on the window boundary.
pub fn plane_curves(field: &PlaneField, include_l1: bool, settings: &ContinuationSettings) -> Result<Vec<Curve>> {
    let (lo, hi) = (settings.lambda_min, settings.lambda_max);
    let mut seeds = Vec::new();
    for (l, dir) in [(lo, 1.0), (hi, -1.0)] {
        for z in field.zeros(l) {
            if include_l1 || z[1].abs() >= L1_TOLERANCE {
                seeds.push((z, l, dir));
            }
        }
    }
    let mut curves: Vec<Curve> = Vec::new();
    for (z, l, dir) in seeds {
        let seen = curves.iter().any(|c| {
            [c.first(), c.last()]
                .iter()
                .any(|p| p.lambda == l && near(&p.x, z.as_slice()))
        });
        if seen {
            continue;
        }
        curves.push(trace_branch(field, &z, l, dir, settings)?);
    }
    Ok(curves)
}

fn on_l1(curve: &Curve) -> bool {
    curve.points.iter().all(|p| p.x[1].abs() < L1_TOLERANCE)
}

fn sweep(cfg: &VerifyConfig, spec: &FamilySpec, lo: f64, hi: f64, report: &mut MinimalModelReport) -> Result<()> {
    let settings = ContinuationSettings::with_window(lo, hi);
    let ell = cfg.k.ell();
    for p in plane_range(spec) {
        let field = PlaneField::for_family(spec, p)?;
        let mult = orbit_plane_count(cfg.k, p)?;
        let curves = plane_curves(&field, p == 2, &settings)?;
        let mut summary = PlaneSummary { p, multiplicity: mult, curves: curves.len(), crossing_curves: 0, fold_events: 0, l1_curves: 0 };
        let mut split = PitchforkSplit { to_crossing: 0, to_fold: 0 };
        let pitch_lambda = if cfg.sign == ModelSign::Minus { hi } else { lo };
        for curve in &curves {
            let l1 = on_l1(curve);
            let m = if l1 { 1 } else { mult };
            if l1 {
                summary.l1_curves += 1;
            }
            let class = classify(curve);
            if let CurveClass::Crossing { .. } = class {
                summary.crossing_curves += 1;
                report.crossings += m;
                for (i, pt) in curve.points.iter().enumerate() {
                    if i % 4 != 0 && i + 1 != curve.points.len() {
                        continue;
                    }
                    let x = field.lift(&pt.x);
                    let idx = spectrum(&spec.jac_restricted(&x, pt.lambda)).index;
                    if idx != ell {
                        report.crossing_index_ok = false;
                    }
                }
            }
            let folds = locate_folds(&field, curve, &settings)?;
            summary.fold_events += folds.len();
            report.folds += m * folds.len() as u128;
            for f in folds {
                let fp = if l1 { 1 } else { p };
                let closed = (fp <= max_fold_p(cfg.k) && (l1 || !(cfg.k.k() % 2 == 0 && p == ell)))
                    .then(|| gamma_closed(cfg.k, fp, cfg.eta).ok())
                    .flatten()
                    .map(|g| g * f.lambda.signum());
                let rel = closed.map(|g| ((f.lambda - g) / g).abs());
                if spec.is_quadratic() && rel.is_none_or(|r| r >= FOLD_AGREEMENT) {
                    report.fold_agreement_ok = false;
                }
                report.fold_checks.push(FoldCheck {
                    p: fp,
                    lambda: f.lambda,
                    closed_form: closed,
                    rel_error: rel,
                    multiplicity: m,
                    index_before: f.index_before,
                    index_after: f.index_after,
                });
            }
            if !cfg.k.is_odd() && p == ell && !l1 {
                let (a, b) = field.chart().axis_direction();
                for end in [curve.first(), curve.last()] {
                    if end.lambda != pitch_lambda {
                        continue;
                    }
                    let z = DVector::from_column_slice(&end.x);
                    let ang = ((z[0] * b - z[1] * a) / z.norm()).abs();
                    if ang < PITCHFORK_ANGLE {
                        match class {
                            CurveClass::Crossing { .. } => split.to_crossing += m,
                            CurveClass::FoldTerminated { .. } => split.to_fold += m,
                            CurveClass::Open => {}
                        }
                    }
                }
            }
        }
        if !cfg.k.is_odd() && p == ell {
            report.pitchfork_split = Some(split);
        }
        report.planes.push(summary);
    }
    report.fold_checks.sort_by(|a, b| (a.p, a.lambda).partial_cmp(&(b.p, b.lambda)).expect("finite"));
    Ok(())
}

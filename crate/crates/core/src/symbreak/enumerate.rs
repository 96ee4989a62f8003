//! Equilibria of the perturbed families by planar solves and S_{k-1}-orbit expansion.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::continuation::{newton_solve, ChartRestriction, ContinuationSettings, Field};
use crate::error::{Error, Result};
use crate::family::{FamilyKind, FamilySpec};
use crate::rep::{orbit_plane_count, HPoint, PlaneChart};
use crate::spectrum::spectrum;

use super::planar::{gamma_closed, max_fold_p, planar_zeros, PlanarSystem};

/// Distance below which two zeros are identified.
pub const DEDUP_TOLERANCE: f64 = 1e-8;
/// |v| below which a planar zero counts as lying on L_1.
pub const L1_TOLERANCE: f64 = 1e-9;

/// A family restricted to the plane E_p: the printed planar system when the
/// family is purely quadratic, otherwise the chart restriction of the ambient field.
#[derive(Debug, Clone)]
pub enum PlaneField {
    Planar(PlanarSystem),
    Chart { restriction: ChartRestriction, guide: PlanarSystem },
}

impl PlaneField {
    pub fn for_family(spec: &FamilySpec, p: usize) -> Result<Self> {
        match spec.kind {
            FamilyKind::OddQuadratic => Ok(Self::Planar(PlanarSystem::new(spec.k, p, 0.0, None)?)),
            FamilyKind::PerturbedOdd { eta, localization: None } => Ok(Self::Planar(PlanarSystem::new(spec.k, p, eta, None)?)),
            _ => {
                let guide = PlanarSystem::new(spec.k, p, spec.eta(), None)?;
                Ok(Self::Chart { restriction: ChartRestriction::new(*spec, guide.chart()), guide })
            }
        }
    }

    pub fn p(&self) -> usize {
        self.guide().p
    }

    fn guide(&self) -> &PlanarSystem {
        match self {
            Self::Planar(s) => s,
            Self::Chart { guide, .. } => guide,
        }
    }

    pub fn chart(&self) -> PlaneChart {
        self.guide().chart()
    }

    pub fn lift(&self, z: &[f64]) -> HPoint {
        self.chart().map(z[0], z[1])
    }

    /// Zeros in the plane at `lambda`, sorted by (v, u).
    pub fn zeros(&self, lambda: f64) -> Vec<DVector<f64>> {
        match self {
            Self::Planar(s) => planar_zeros(s, lambda)
                .into_iter()
                .filter(|z| z.regular)
                .map(|z| DVector::from_vec(vec![z.u, z.v]))
                .collect(),
            Self::Chart { restriction, guide } => multistart_zeros(restriction, guide, lambda),
        }
    }
}

impl Field for PlaneField {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &DVector<f64>, lambda: f64) -> DVector<f64> {
        match self {
            Self::Planar(s) => s.value(x, lambda),
            Self::Chart { restriction, .. } => restriction.value(x, lambda),
        }
    }
    fn jacobian(&self, x: &DVector<f64>, lambda: f64) -> DMatrix<f64> {
        match self {
            Self::Planar(s) => s.jacobian(x, lambda),
            Self::Chart { restriction, .. } => restriction.jacobian(x, lambda),
        }
    }
    fn d_lambda(&self, x: &DVector<f64>, lambda: f64) -> DVector<f64> {
        match self {
            Self::Planar(s) => s.d_lambda(x, lambda),
            Self::Chart { restriction, .. } => restriction.d_lambda(x, lambda),
        }
    }
}

/// Newton from the quadratic closed-form zeros, the pitchfork directions and a grid.
fn multistart_zeros(field: &ChartRestriction, guide: &PlanarSystem, lambda: f64) -> Vec<DVector<f64>> {
    let k = guide.k.k() as f64;
    let p = guide.p;
    let ray = |pp: usize| -> f64 {
        let (pf, q) = (pp as f64, k - pp as f64);
        if (q - pf).abs() < 0.5 {
            0.0
        } else {
            (pf * q * k).sqrt() / (q - pf).abs()
        }
    };
    let r0 = lambda.abs() * [1, p, p - 1].into_iter().map(ray).fold(0.0, f64::max)
        + lambda.abs().sqrt()
        + 2.0 * guide.eta.sqrt() * k.powf(0.25);
    let r = 1.5 * r0 + 0.05;
    let mut starts: Vec<DVector<f64>> = planar_zeros(guide, lambda)
        .into_iter()
        .map(|z| DVector::from_vec(vec![z.u, z.v]))
        .collect();
    let ch = guide.chart();
    let (a, b) = ch.axis_direction();
    let t = lambda.abs().sqrt();
    for s in [-1.0, 1.0] {
        starts.push(DVector::from_vec(vec![s * t * a, s * t * b]));
    }
    let n = 20;
    for i in 0..=n {
        for j in 0..=n {
            let u = -r + 2.0 * r * i as f64 / n as f64;
            let v = -r + 2.0 * r * j as f64 / n as f64;
            starts.push(DVector::from_vec(vec![u, v]));
        }
    }
    let settings = ContinuationSettings { max_newton_iter: 40, ..ContinuationSettings::default() };
    let mut out: Vec<DVector<f64>> = Vec::new();
    for s in starts {
        let Ok(e) = newton_solve(field, &s, lambda, &settings) else {
            continue;
        };
        let mut z = DVector::from_vec(e.x);
        if z.norm() > 3.0 * r || !e.spectrum.is_hyperbolic() {
            continue;
        }
        if z[1].abs() < L1_TOLERANCE {
            z[1] = 0.0;
        }
        if !out.iter().any(|w| (w - &z).norm() < DEDUP_TOLERANCE) {
            out.push(z);
        }
    }
    out.sort_by(|x, y| x[1].total_cmp(&y[1]).then(x[0].total_cmp(&y[0])));
    out
}

/// Plane labels 2..=limit, or just p = 2 when that is all of H_2 (k = 3).
pub fn plane_range(spec: &FamilySpec) -> std::ops::RangeInclusive<usize> {
    2..=spec.k.plane_limit()
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumOrbit {
    /// 1 for zeros on L_1, otherwise the plane label p.
    pub plane: usize,
    pub chart: (f64, f64),
    pub point: HPoint,
    /// Morse index of the ambient Jacobian on H_{k-1}.
    pub index: usize,
    /// Size of the S_{k-1}-orbit represented.
    pub multiplicity: u128,
    pub residual: f64,
}

fn check_away_from_folds(spec: &FamilySpec, lambda: f64) -> Result<()> {
    let eta = spec.eta();
    if eta == 0.0 {
        return Ok(());
    }
    for p in 1..=max_fold_p(spec.k) {
        let g = gamma_closed(spec.k, p, eta)?;
        for fold in [-g, g] {
            let distance = (lambda - fold).abs();
            if distance < 1e-8 {
                return Err(Error::NearFold { lambda, fold, distance });
            }
        }
    }
    Ok(())
}

/// All equilibria at `lambda`, one representative per S_{k-1}-orbit.
pub fn enumerate_equilibria(spec: &FamilySpec, lambda: f64) -> Result<Vec<EquilibriumOrbit>> {
    check_away_from_folds(spec, lambda)?;
    let mut out: Vec<EquilibriumOrbit> = Vec::new();
    for p in plane_range(spec) {
        let field = PlaneField::for_family(spec, p)?;
        let mult = orbit_plane_count(spec.k, p)?;
        for z in field.zeros(lambda) {
            let on_l1 = z[1].abs() < L1_TOLERANCE;
            if on_l1 && p != 2 {
                continue;
            }
            let x = field.lift(z.as_slice());
            let residual = spec.eval(&x, lambda).norm();
            if residual > 1e-12 {
                return Err(Error::Internal(format!("planar zero has ambient residual {residual:e}")));
            }
            let sp = spectrum(&spec.jac_restricted(&x, lambda));
            let index = sp.checked_index()?;
            let plane = if on_l1 { 1 } else { p };
            if let Some(dup) = out.iter().find(|o| o.plane != plane && o.point.distance(&x) < DEDUP_TOLERANCE) {
                return Err(Error::Internal(format!(
                    "zero shared by planes {} and {plane} off L_1",
                    dup.plane
                )));
            }
            out.push(EquilibriumOrbit {
                plane,
                chart: (z[0], z[1]),
                point: x,
                index,
                multiplicity: if on_l1 { 1 } else { mult },
                residual,
            });
        }
    }
    Ok(out)
}

/// Total number of equilibria, counted with orbit multiplicity.
pub fn equilibrium_count(orbits: &[EquilibriumOrbit]) -> u128 {
    orbits.iter().map(|o| o.multiplicity).sum()
}

/// Signed count sum (-1)^index over all equilibria.
pub fn poincare_hopf(spec: &FamilySpec, lambda: f64) -> Result<i128> {
    Ok(enumerate_equilibria(spec, lambda)?
        .iter()
        .map(|o| {
            let m = o.multiplicity as i128;
            if o.index % 2 == 0 {
                m
            } else {
                -m
            }
        })
        .sum())
}

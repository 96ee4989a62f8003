//! The localized perturbation eta-hat and the W_rho geometry.

use serde::Serialize;

use crate::error::{out_of_range, Result};
use crate::family::{FamilyKind, FamilySpec, Localization, ModelSign};
use crate::rep::Dim;

use super::planar::{b_point, gamma_closed, max_fold_p};

/// lambda x - Q(x) - eta-hat for odd k, F^{sign} - eta-hat for even k, with
/// eta-hat = phi(2|lambda|/rho) phi(2|x_1|/delta_1) phi(2|y|/delta_2) eta eps_1.
pub fn localized_family(k: Dim, eta: f64, eta0: f64, sign: ModelSign) -> Result<FamilySpec> {
    if !(eta > 0.0 && eta <= eta0) {
        return out_of_range("eta", eta, format!("(0, eta0 = {eta0}]"));
    }
    let localization = Some(Localization::new(k, eta0)?);
    let kind = if k.is_odd() {
        FamilyKind::PerturbedOdd { eta, localization }
    } else {
        FamilyKind::PerturbedEven { sign, eta, localization }
    };
    FamilySpec::new(k, kind, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldPlacement {
    pub p: usize,
    pub gamma: f64,
    /// |<b_p, eps_1>|.
    pub x1: f64,
    /// Norm of the part of b_p orthogonal to eps_1.
    pub y: f64,
    pub inside_half: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub localization: Localization,
    pub folds: Vec<FoldPlacement>,
    pub all_inside: bool,
}

/// Whether every fold point (+-b_p, +-gamma_{k,p}) lies in W_{rho/2}.
pub fn fold_containment(k: Dim, eta: f64, eta0: f64) -> Result<ContainmentReport> {
    let loc = Localization::new(k, eta0)?;
    let e1 = crate::rep::eps(k, 1)?;
    let mut folds = Vec::new();
    for p in 1..=max_fold_p(k) {
        let gamma = gamma_closed(k, p, eta)?;
        let (b, _) = b_point(k, p, eta)?;
        let x1 = b.dot(&e1);
        let y = (b.vector() - e1.vector() * x1).norm();
        let inside_half = loc.contains(&b, gamma, 0.5) && loc.contains(&-&b, -gamma, 0.5);
        folds.push(FoldPlacement { p, gamma, x1: x1.abs(), y, inside_half });
    }
    let all_inside = folds.iter().all(|f| f.inside_half);
    Ok(ContainmentReport { localization: loc, folds, all_inside })
}

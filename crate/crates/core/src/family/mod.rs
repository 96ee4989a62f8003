//! One-parameter families x' = F(x, lambda) on H_{k-1}.

pub mod branches;
pub mod bump;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::equivariants::{cubic_c, dq, quad_q, restrict_to_hyperplane};
use crate::error::{out_of_range, Error, Result};
use crate::rep::{eps, Dim, HPoint};

pub use branches::*;
pub use bump::{BumpParams, Localization};

/// Sign of the radial cubic term in the even model F^{+-} = lambda x - Q(x) +- S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSign {
    Minus,
    Plus,
}

impl ModelSign {
    pub fn value(self) -> f64 {
        match self {
            ModelSign::Minus => -1.0,
            ModelSign::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// lambda x - Q(x).
    OddQuadratic,
    /// lambda x - Q(x) +- S(x, lambda), k even.
    EvenModel { sign: ModelSign },
    /// lambda x - Q(x) - eta eps_1, or with the localized perturbation when `localization` is set.
    PerturbedOdd { eta: f64, localization: Option<Localization> },
    /// F^{+-} - eta eps_1, or with the localized perturbation.
    PerturbedEven { sign: ModelSign, eta: f64, localization: Option<Localization> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilySpec {
    pub k: Dim,
    pub kind: FamilyKind,
    pub bump: Option<BumpParams>,
}

impl FamilySpec {
    pub fn odd_quadratic(k: Dim) -> Self {
        Self { k, kind: FamilyKind::OddQuadratic, bump: None }
    }

    pub fn even_model(k: Dim, sign: ModelSign) -> Result<Self> {
        Self::new(k, FamilyKind::EvenModel { sign }, None)
    }

    pub fn perturbed_odd(k: Dim, eta: f64) -> Result<Self> {
        Self::new(k, FamilyKind::PerturbedOdd { eta, localization: None }, None)
    }

    pub fn perturbed_even(k: Dim, sign: ModelSign, eta: f64, localization: Option<Localization>) -> Result<Self> {
        Self::new(k, FamilyKind::PerturbedEven { sign, eta, localization }, None)
    }

    /// Validating constructor. Even kinds get default bump parameters when `bump` is `None`.
    pub fn new(k: Dim, kind: FamilyKind, bump: Option<BumpParams>) -> Result<Self> {
        let even_kind = matches!(kind, FamilyKind::EvenModel { .. } | FamilyKind::PerturbedEven { .. });
        if even_kind && k.is_odd() {
            return Err(Error::Unsupported(format!("the even model needs even k, got {k}")));
        }
        match kind {
            FamilyKind::PerturbedOdd { eta, localization } | FamilyKind::PerturbedEven { eta, localization, .. } => {
                if !(eta > 0.0) {
                    return out_of_range("eta", eta, "(0, inf)");
                }
                if let Some(l) = localization {
                    if eta > l.eta0 {
                        return out_of_range("eta", eta, format!("(0, eta0 = {}]", l.eta0));
                    }
                }
            }
            _ => {}
        }
        let bump = if even_kind {
            Some(match bump {
                Some(b) => b,
                None => BumpParams::default_for(k)?,
            })
        } else {
            None
        };
        Ok(Self { k, kind, bump })
    }

    pub fn eta(&self) -> f64 {
        match self.kind {
            FamilyKind::PerturbedOdd { eta, .. } | FamilyKind::PerturbedEven { eta, .. } => eta,
            _ => 0.0,
        }
    }

    pub fn localization(&self) -> Option<Localization> {
        match self.kind {
            FamilyKind::PerturbedOdd { localization, .. } | FamilyKind::PerturbedEven { localization, .. } => localization,
            _ => None,
        }
    }

    fn model_sign(&self) -> Option<ModelSign> {
        match self.kind {
            FamilyKind::EvenModel { sign } | FamilyKind::PerturbedEven { sign, .. } => Some(sign),
            _ => None,
        }
    }

    /// Whether the nonlinearity is purely quadratic (trace identity applies).
    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, FamilyKind::OddQuadratic | FamilyKind::PerturbedOdd { .. })
    }

    /// Whether the family is the gradient of an explicit potential.
    pub fn is_gradient(&self) -> bool {
        matches!(self.kind, FamilyKind::OddQuadratic | FamilyKind::PerturbedOdd { localization: None, .. })
    }

    fn check(&self, x: &HPoint) {
        assert_eq!(x.k(), self.k.k(), "point dimension does not match the family");
    }

    pub fn eval(&self, x: &HPoint, lambda: f64) -> HPoint {
        self.check(x);
        let mut f = &x.scale(lambda) - &quad_q(x);
        if let (Some(sign), Some(b)) = (self.model_sign(), self.bump) {
            f = &f + &bump::radial_s(x, lambda, &b).scale(sign.value());
        }
        let eta = self.eta();
        if eta > 0.0 {
            let e1 = eps(self.k, 1).expect("p = 1 valid");
            let w = self.localization().map_or(1.0, |l| l.factor(x, lambda));
            f = &f - &e1.scale(eta * w);
        }
        f
    }

    /// Ambient k x k Jacobian; it maps H_{k-1} into itself.
    pub fn jac(&self, x: &HPoint, lambda: f64) -> DMatrix<f64> {
        self.check(x);
        let k = self.k.k();
        let mut j = DMatrix::identity(k, k) * lambda - dq(x);
        if let (Some(sign), Some(b)) = (self.model_sign(), self.bump) {
            j += bump::radial_s_derivatives(x, lambda, &b).0 * sign.value();
        }
        let eta = self.eta();
        if let (true, Some(l)) = (eta > 0.0, self.localization()) {
            let e1 = eps(self.k, 1).expect("p = 1 valid");
            let (_, grad, _) = l.factor_derivatives(x, lambda);
            j -= e1.vector() * grad.transpose() * eta;
        }
        j
    }

    /// Jacobian restricted to H_{k-1}, in the Helmert basis.
    pub fn jac_restricted(&self, x: &HPoint, lambda: f64) -> DMatrix<f64> {
        restrict_to_hyperplane(&self.jac(x, lambda))
    }

    /// Partial derivative of F in lambda.
    pub fn d_lambda(&self, x: &HPoint, lambda: f64) -> HPoint {
        self.check(x);
        let mut d = x.clone();
        if let (Some(sign), Some(b)) = (self.model_sign(), self.bump) {
            d = &d + &bump::radial_s_derivatives(x, lambda, &b).1.scale(sign.value());
        }
        let eta = self.eta();
        if let (true, Some(l)) = (eta > 0.0, self.localization()) {
            let e1 = eps(self.k, 1).expect("p = 1 valid");
            let (_, _, dl) = l.factor_derivatives(x, lambda);
            d = &d - &e1.scale(eta * dl);
        }
        d
    }

    /// V with F = -grad V, for the gradient kinds.
    pub fn potential(&self, x: &HPoint, lambda: f64) -> Option<f64> {
        if !self.is_gradient() {
            return None;
        }
        let mut v = -lambda * x.norm().powi(2) / 2.0 + cubic_c(x);
        let eta = self.eta();
        if eta > 0.0 {
            v += eta * x.dot(&eps(self.k, 1).expect("p = 1 valid"));
        }
        Some(v)
    }
}

/// trace(DF) on H_{k-1}; equals (k-1) lambda for the quadratic kinds.
pub fn trace_check(spec: &FamilySpec, x: &HPoint, lambda: f64) -> Result<f64> {
    if !spec.is_quadratic() {
        return Err(Error::Unsupported("trace identity needs a purely quadratic nonlinearity".into()));
    }
    Ok(spec.jac_restricted(x, lambda).trace())
}

//! Closed-form solution branches and the signed indexed branching pattern.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{FamilyKind, FamilySpec, ModelSign};
use crate::error::{out_of_range, Error, Result};
use crate::rep::{axis_class_size, eps, AxisRep, Dim, HPoint};
use crate::spectrum::spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSign {
    Forward,
    Backward,
}

/// x(s) = s * speed * direction, lambda(s) = lambda_sign * s^lambda_exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchParam {
    pub direction: HPoint,
    pub speed: f64,
    pub lambda_sign: f64,
    pub lambda_exponent: u32,
}

impl BranchParam {
    pub fn point(&self, s: f64) -> (HPoint, f64) {
        (self.direction.scale(s * self.speed), self.lambda_sign * s.powi(self.lambda_exponent as i32))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRecord {
    pub axis: AxisRep,
    pub p: usize,
    pub sign: BranchSign,
    pub index: usize,
    pub param: BranchParam,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternEntry {
    pub branch: BranchRecord,
    pub multiplicity: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchingPattern {
    pub k: usize,
    pub entries: Vec<PatternEntry>,
    /// Number of branches by (sign, index).
    pub totals: BTreeMap<(BranchSign, usize), u128>,
    pub total_branches: u128,
}

/// Speed sqrt(pqk)/(q - p) of the quadratic branch along L_p.
fn quadratic_speed(k: usize, p: usize) -> f64 {
    let q = k - p;
    ((p * q * k) as f64).sqrt() / (q as f64 - p as f64)
}

fn quadratic_param(k: Dim, p: usize, sign: BranchSign) -> Result<BranchParam> {
    if p < 1 || 2 * p >= k.k() {
        return out_of_range("p", p as f64, format!("[1, {}) (p < k/2)", k.k().div_ceil(2)));
    }
    let e = eps(k, p)?;
    Ok(match sign {
        BranchSign::Forward => BranchParam {
            direction: e,
            speed: quadratic_speed(k.k(), p),
            lambda_sign: 1.0,
            lambda_exponent: 1,
        },
        BranchSign::Backward => BranchParam {
            direction: -&e,
            speed: quadratic_speed(k.k(), p),
            lambda_sign: -1.0,
            lambda_exponent: 1,
        },
    })
}

/// Point on the branch of lambda x - Q(x) along L_p:
/// forward x = s sqrt(pqk)/(q-p) eps_p, lambda = s; backward is the negation with lambda = -s.
pub fn branch_point(k: Dim, p: usize, sign: BranchSign, s: f64) -> Result<(HPoint, f64)> {
    if !(s >= 0.0) {
        return out_of_range("s", s, "[0, inf)");
    }
    Ok(quadratic_param(k, p, sign)?.point(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchIndex {
    pub index: usize,
    /// Rayleigh quotient <J u, u> along the branch direction u.
    pub radial_eigenvalue: f64,
    /// |J u - mu u|; zero iff u is an eigenvector.
    pub radial_residual: f64,
}

/// Index and radial eigenvalue at parameter s on a branch.
pub fn branch_index(spec: &FamilySpec, record: &BranchRecord, s: f64) -> Result<BranchIndex> {
    if !(s > 0.0) {
        return out_of_range("s", s, "(0, inf)");
    }
    let (x, lambda) = record.param.point(s);
    let j = spec.jac(&x, lambda);
    let u = x.normalized()?;
    let ju = &j * u.vector();
    let mu = ju.dot(u.vector());
    let residual = (ju - u.vector() * mu).norm();
    let index = spectrum(&spec.jac_restricted(&x, lambda)).checked_index()?;
    Ok(BranchIndex { index, radial_eigenvalue: mu, radial_residual: residual })
}

/// Pitchfork branch of the even model along L_ell: x = +-t eps_ell, lambda = t^2 (F^-) or -t^2 (F^+).
/// The residual is checked against the model; it is exact wherever S = T1.
pub fn pitchfork_branch(spec: &FamilySpec, t: f64, positive: bool) -> Result<(HPoint, f64)> {
    let sign = match spec.kind {
        FamilyKind::EvenModel { sign } => sign,
        _ => return Err(Error::Unsupported("pitchfork branches belong to the unperturbed even model".into())),
    };
    if !(t >= 0.0) {
        return out_of_range("t", t, "[0, inf)");
    }
    let e = eps(spec.k, spec.k.ell())?;
    let x = e.scale(if positive { t } else { -t });
    let lambda = match sign {
        ModelSign::Minus => t * t,
        ModelSign::Plus => -t * t,
    };
    let residual = spec.eval(&x, lambda).norm();
    if residual > 1e-12 * (1.0 + t * t * t) {
        return Err(Error::OutsidePlateau { residual });
    }
    Ok((x, lambda))
}

/// |lambda| at the fold where the backward branch along L_p of
/// lambda x - Q(x) + beta_p T turns: (q-p)^2 / (4 p q k |beta_p|).
pub fn cubic_fold_t(k: Dim, p: usize, beta: f64) -> Result<f64> {
    if p < 1 || p + 1 > k.ell() {
        return out_of_range("p", p as f64, format!("[1, {}]", k.ell().saturating_sub(1)));
    }
    if beta == 0.0 {
        return Err(Error::InvalidArgument("beta_p = 0: no fold".into()));
    }
    if beta > 0.0 {
        return out_of_range("beta", beta, "(-inf, 0)");
    }
    let (kk, p) = (k.k() as f64, p as f64);
    let q = kk - p;
    Ok(-(q - p).powi(2) / (4.0 * p * q * kk * beta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxReport {
    pub rho: f64,
    pub delta: f64,
    pub max_norm: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Samples every branch for lambda in [0, rho] (in absolute value) and checks
/// |x| <= delta = (k/2) sqrt(k+1) rho. For even k the pitchfork branches along
/// S_k L_ell are only sampled when `include_half` is set.
pub fn box_check(k: Dim, rho: f64, include_half: bool) -> Result<BoxReport> {
    if !(rho > 0.0) {
        return out_of_range("rho", rho, "(0, inf)");
    }
    let kk = k.k();
    let delta = kk as f64 / 2.0 * ((kk + 1) as f64).sqrt() * rho;
    let mut max_norm = 0.0_f64;
    let mut samples = 0;
    const N: usize = 11;
    for p in (1..).take_while(|&p| 2 * p < kk) {
        for sign in [BranchSign::Forward, BranchSign::Backward] {
            for i in 0..N {
                let s = rho * i as f64 / (N - 1) as f64;
                let (x, _) = branch_point(k, p, sign, s)?;
                max_norm = max_norm.max(x.norm());
                samples += 1;
            }
        }
    }
    if include_half && !k.is_odd() {
        let e = eps(k, k.ell())?;
        for i in 0..N {
            let lam = rho * i as f64 / (N - 1) as f64;
            max_norm = max_norm.max(e.scale(lam.sqrt()).norm());
            samples += 1;
        }
    }
    Ok(BoxReport { rho, delta, max_norm, samples, pass: max_norm <= delta })
}

/// Signed indexed branching pattern. Indices are computed from the Jacobian
/// spectrum at a sample point of each branch.
pub fn pattern_catalog(spec: &FamilySpec) -> Result<BranchingPattern> {
    let k = spec.k;
    let kk = k.k();
    let mut entries = Vec::new();
    let (s_sample, pitchfork_sign) = match spec.kind {
        FamilyKind::OddQuadratic => {
            if !k.is_odd() {
                return Err(Error::Unsupported(
                    "lambda x - Q(x) is degenerate along S_k L_ell for even k; use the even model".into(),
                ));
            }
            (0.1, None)
        }
        FamilyKind::EvenModel { sign } => {
            let b = spec.bump.expect("even model carries bump parameters");
            // Beyond |lambda| = lambda0 the radial field vanishes off S_k B_tau.
            (4.0 * b.lambda0, Some(sign))
        }
        _ => return Err(Error::Unsupported("the catalog is defined for the unperturbed families".into())),
    };
    for p in (1..).take_while(|&p| 2 * p < kk) {
        let axis = AxisRep::new(kk, &(0..p).collect::<Vec<_>>())?;
        for sign in [BranchSign::Forward, BranchSign::Backward] {
            let param = quadratic_param(k, p, sign)?;
            let mut record = BranchRecord { axis, p, sign, index: 0, param };
            record.index = branch_index(spec, &record, s_sample)?.index;
            entries.push(PatternEntry { branch: record, multiplicity: axis_class_size(k, p) });
        }
    }
    if let Some(ms) = pitchfork_sign {
        let ell = k.ell();
        let axis = AxisRep::new(kk, &(0..ell).collect::<Vec<_>>())?;
        let sign = match ms {
            ModelSign::Minus => BranchSign::Forward,
            ModelSign::Plus => BranchSign::Backward,
        };
        let param = BranchParam {
            direction: eps(k, ell)?,
            speed: 1.0,
            lambda_sign: if ms == ModelSign::Minus { 1.0 } else { -1.0 },
            lambda_exponent: 2,
        };
        let b = spec.bump.expect("even model carries bump parameters");
        let mut record = BranchRecord { axis, p: ell, sign, index: 0, param };
        record.index = branch_index(spec, &record, b.r0 / 4.0)?.index;
        // +-t eps_ell are both in the orbit of eps_ell: C(k, ell) branches.
        entries.push(PatternEntry { branch: record, multiplicity: 2 * axis_class_size(k, ell) });
    }
    let mut totals = BTreeMap::new();
    for e in &entries {
        *totals.entry((e.branch.sign, e.branch.index)).or_insert(0) += e.multiplicity;
    }
    let total_branches = entries.iter().map(|e| e.multiplicity).sum();
    Ok(BranchingPattern { k: kk, entries, totals, total_branches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::bump::lambda0_r0;
    use approx::assert_abs_diff_eq;

    fn d(k: usize) -> Dim {
        Dim::new(k).unwrap()
    }

    #[test]
    fn branch_points_are_zeros() {
        for k in 3..=9 {
            let f = FamilySpec::odd_quadratic(d(k));
            for p in (1..).take_while(|&p| 2 * p < k) {
                for sign in [BranchSign::Forward, BranchSign::Backward] {
                    for i in 1..=20 {
                        let s = 0.01 * i as f64;
                        let (x, l) = branch_point(d(k), p, sign, s).unwrap();
                        assert!(f.eval(&x, l).norm() < 1e-15, "k={k} p={p}");
                    }
                }
            }
        }
        assert!(branch_point(d(6), 3, BranchSign::Forward, 0.1).is_err());
        let (x, _) = branch_point(d(3), 1, BranchSign::Forward, 0.2).unwrap();
        assert!(x.distance(&eps(d(3), 1).unwrap().scale(0.2 * 6f64.sqrt())) < 1e-15);
        let (x, l) = branch_point(d(5), 1, BranchSign::Forward, 0.1).unwrap();
        assert_abs_diff_eq!(x.norm(), 0.1 * 20f64.sqrt() / 3.0, epsilon = 1e-15);
        assert_eq!(l, 0.1);
    }

    #[test]
    fn indices_and_radial_eigenvalue() {
        let k = d(5);
        let f = FamilySpec::odd_quadratic(k);
        let pat = pattern_catalog(&f).unwrap();
        for e in &pat.entries {
            let bi = branch_index(&f, &e.branch, 0.1).unwrap();
            let lam = e.branch.param.point(0.1).1;
            assert_abs_diff_eq!(bi.radial_eigenvalue, -lam, epsilon = 1e-14);
            assert!(bi.radial_residual < 1e-14);
        }
        let fwd: Vec<_> = pat.entries.iter().filter(|e| e.branch.sign == BranchSign::Forward).collect();
        assert_eq!(fwd[0].branch.index, 1);
        assert_eq!(fwd[1].branch.index, 2);
        let bwd: Vec<_> = pat.entries.iter().filter(|e| e.branch.sign == BranchSign::Backward).collect();
        assert_eq!(bwd[0].branch.index, 3);
        assert_eq!(bwd[1].branch.index, 2);
        assert_eq!(pat.total_branches, 30);
        assert_eq!(pat.totals[&(BranchSign::Forward, 1)], 5);
        assert_eq!(pat.totals[&(BranchSign::Forward, 2)], 10);
    }

    #[test]
    fn even_pattern() {
        let k = d(6);
        let m = FamilySpec::even_model(k, ModelSign::Minus).unwrap();
        let pat = pattern_catalog(&m).unwrap();
        assert_eq!(pat.total_branches, 62);
        let pf = pat.entries.last().unwrap();
        assert_eq!(pf.branch.p, 3);
        assert_eq!(pf.branch.index, 3);
        assert_eq!(pf.multiplicity, 20);
        for e in &pat.entries[..pat.entries.len() - 1] {
            let p = e.branch.p;
            let want = if e.branch.sign == BranchSign::Forward { p } else { 6 - p - 1 };
            assert_eq!(e.branch.index, want);
        }
        let plus = pattern_catalog(&FamilySpec::even_model(k, ModelSign::Plus).unwrap()).unwrap();
        let pf = plus.entries.last().unwrap();
        assert_eq!(pf.branch.sign, BranchSign::Backward);
        assert_eq!(pf.branch.index, 2);
        assert!(pattern_catalog(&FamilySpec::odd_quadratic(k)).is_err());
    }

    #[test]
    fn pitchfork_residuals() {
        for kk in [4, 6] {
            let m = FamilySpec::even_model(d(kk), ModelSign::Minus).unwrap();
            let (_, r0) = lambda0_r0(d(kk)).unwrap();
            for i in 0..=10 {
                let t = r0 / 2.0 * i as f64 / 10.0;
                for pos in [true, false] {
                    let (x, l) = pitchfork_branch(&m, t, pos).unwrap();
                    assert!(m.eval(&x, l).norm() < 1e-12);
                    assert_abs_diff_eq!(l, t * t, epsilon = 0.0);
                }
            }
            let (x, l) = pitchfork_branch(&m, 0.0, true).unwrap();
            assert_eq!((x.norm(), l), (0.0, 0.0));
        }
        let m = FamilySpec::even_model(d(4), ModelSign::Minus).unwrap();
        let (x, l) = pitchfork_branch(&m, 0.05, true).unwrap();
        assert_abs_diff_eq!(l, 0.0025, epsilon = 1e-18);
        assert!(m.eval(&x, l).norm() < 1e-12);
    }

    #[test]
    fn cubic_fold_values() {
        assert_abs_diff_eq!(cubic_fold_t(d(6), 1, -1.0).unwrap(), 16.0 / 120.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cubic_fold_t(d(6), 2, -1.0).unwrap(), 4.0 / 192.0, epsilon = 1e-15);
        assert!(cubic_fold_t(d(6), 1, -1e12).unwrap() < 1e-12);
        assert!(cubic_fold_t(d(6), 1, 0.0).is_err());
        assert!(cubic_fold_t(d(6), 3, -1.0).is_err());
        // Oracle: extremum of lambda(t) = c t - beta t^2 on the negative half-line.
        let (k, p, beta) = (6.0_f64, 1.0_f64, -1.0_f64);
        let c = (k - 2.0 * p) / (p * (k - p) * k).sqrt();
        let mut t = -0.1_f64;
        for _ in 0..50 {
            t -= (c - 2.0 * beta * t) / (-2.0 * beta);
        }
        assert_abs_diff_eq!((c * t - beta * t * t).abs(), cubic_fold_t(d(6), 1, beta).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn box_estimates() {
        let r = box_check(d(5), 0.1, false).unwrap();
        assert!(r.pass);
        assert_eq!(r.samples, 2 * 2 * 11);
        assert!(box_check(d(3), 0.1, false).unwrap().pass);
        assert!(box_check(d(6), 0.01, false).unwrap().pass);
        assert!(!box_check(d(6), 0.01, true).unwrap().pass);
    }
}

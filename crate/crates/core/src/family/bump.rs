//! Smooth bumps, the radial field S of the even model, and the localized
//! perturbation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::equivariants::{cubic_t1, dt1};
use crate::error::{out_of_range, Error, Result};
use crate::rep::{eps, Dim, HPoint};

fn g(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

fn dg(s: f64) -> f64 {
    if s > 0.0 {
        g(s) / (s * s)
    } else {
        0.0
    }
}

/// Smooth step: 1 on t <= 1, 0 on t >= 2, strictly decreasing in between.
pub fn bump_phi(t: f64) -> f64 {
    if t <= 1.0 {
        return 1.0;
    }
    if t >= 2.0 {
        return 0.0;
    }
    let a = g(2.0 - t);
    a / (a + g(t - 1.0))
}

pub fn bump_phi_prime(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        return 0.0;
    }
    let (a, b) = (g(2.0 - t), g(t - 1.0));
    let (da, db) = (-dg(2.0 - t), dg(t - 1.0));
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Minimum spherical distance between distinct zeros of the phase field.
///
/// The zeros are the 2^k - 2 unit vectors eps_S, S a nonempty proper subset.
/// The inner product of eps_S and eps_T depends only on (|S|, |T|, |S n T|),
/// so the exhaustive pairwise minimum reduces to a scan over those types.
pub fn kappa(k: Dim) -> f64 {
    let kk = k.k() as i64;
    let mut best = -1.0_f64;
    for p in 1..kk {
        for p2 in 1..kk {
            let (q, q2) = (kk - p, kk - p2);
            let n = ((p * q * kk) as f64).sqrt() * ((p2 * q2 * kk) as f64).sqrt();
            for j in (p + p2 - kk).max(0)..=p.min(p2) {
                if p == p2 && j == p {
                    continue;
                }
                let dot = (j * q * q2 - (p - j) * q * p2 - (p2 - j) * p * q2 + (kk - p - p2 + j) * p * p2) as f64 / n;
                best = best.max(dot);
            }
        }
    }
    best.clamp(-1.0, 1.0).acos()
}

/// Parameters of the bump construction for the even model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpParams {
    pub tau: f64,
    pub lambda0: f64,
    pub r0: f64,
}

impl BumpParams {
    /// Defaults: tau = kappa/3, (lambda0, R0) from `lambda0_r0`.
    pub fn default_for(k: Dim) -> Result<Self> {
        let (lambda0, r0) = lambda0_r0(k)?;
        Ok(Self { tau: kappa(k) / 3.0, lambda0, r0 })
    }

    pub fn with_tau(k: Dim, tau: f64) -> Result<Self> {
        let kap = kappa(k);
        if !(tau > 0.0 && tau < kap / 2.0) {
            return out_of_range("tau", tau, format!("(0, {})", kap / 2.0));
        }
        let (lambda0, r0) = lambda0_r0(k)?;
        Ok(Self { tau, lambda0, r0 })
    }
}

/// lambda0 = 4/(k(k^2 - 4)), R0 = sqrt(lambda0).
pub fn lambda0_r0(k: Dim) -> Result<(f64, f64)> {
    if k.is_odd() {
        return Err(Error::Unsupported("lambda0 and R0 are defined for even k".into()));
    }
    let kk = k.k() as f64;
    let l0 = 4.0 / (kk * (kk * kk - 4.0));
    Ok((l0, l0.sqrt()))
}

/// max over the S_k-orbit of eps_ell of <u, g eps_ell>, with the maximizing vector.
fn nearest_ell_axis(u: &HPoint) -> (f64, DVector<f64>) {
    let k = u.k();
    let ell = k / 2;
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| u.coords()[b].total_cmp(&u.coords()[a]));
    let s = 1.0 / (k as f64).sqrt();
    let mut e = DVector::zeros(k);
    for (r, &i) in idx.iter().enumerate() {
        e[i] = if r < ell { s } else { -s };
    }
    (u.vector().dot(&e), e)
}

/// Spherical distance from the unit vector `u` to the orbit S_k eps_ell.
pub fn distance_to_ell_orbit(u: &HPoint) -> f64 {
    nearest_ell_axis(u).0.clamp(-1.0, 1.0).acos()
}

/// The S_k-invariant plateau bump around S_k eps_ell: 1 within tau/2, 0 beyond 3 tau/4.
pub fn bump_psi(u: &HPoint, tau: f64) -> f64 {
    bump_phi(4.0 * distance_to_ell_orbit(u) / tau - 1.0)
}

/// psi(x/|x|) and its gradient with respect to x (zero at the origin).
fn psi_with_gradient(x: &HPoint, tau: f64) -> (f64, DVector<f64>) {
    let k = x.k();
    let r = x.norm();
    if r == 0.0 {
        return (0.0, DVector::zeros(k));
    }
    let u = x.scale(1.0 / r);
    let (m, e) = nearest_ell_axis(&u);
    let m = m.clamp(-1.0, 1.0);
    let d = m.acos();
    let t = 4.0 * d / tau - 1.0;
    let val = bump_phi(t);
    if t <= 1.0 || t >= 2.0 {
        return (val, DVector::zeros(k));
    }
    let dpsi_dd = bump_phi_prime(t) * 4.0 / tau;
    let dd_dm = -1.0 / (1.0 - m * m).sqrt();
    let dm_dx = (e - u.vector() * m) / r;
    (val, dm_dx * (dpsi_dd * dd_dm))
}

/// Weight w(x, lambda) with S = w T1, and its partial derivatives.
struct Weight {
    w: DVector<f64>,
    value: f64,
    dlambda: f64,
}

fn weight(x: &HPoint, lambda: f64, b: &BumpParams) -> Weight {
    let r = x.norm();
    let tr = 2.0 * r / b.r0;
    let tl = 2.0 * lambda.abs() / b.lambda0;
    let (fr, fl) = (bump_phi(tr), bump_phi(tl));
    let phi = fr * fl;
    let (psi, dpsi) = psi_with_gradient(x, b.tau);
    let value = phi + (1.0 - phi) * psi;
    let dfr = if r > 0.0 {
        x.vector() * (bump_phi_prime(tr) * 2.0 / (b.r0 * r))
    } else {
        DVector::zeros(x.k())
    };
    let dphi_dx = dfr * fl;
    let dphi_dl = fr * bump_phi_prime(tl) * 2.0 / b.lambda0 * lambda.signum();
    let w = dphi_dx * (1.0 - psi) + dpsi * (1.0 - phi);
    Weight { w, value, dlambda: dphi_dl * (1.0 - psi) }
}

/// S(x, lambda) = [Phi + (1 - Phi) psi(u)] T1(x), Phi = phi(2R/R0) phi(2|lambda|/lambda0).
pub fn radial_s(x: &HPoint, lambda: f64, b: &BumpParams) -> HPoint {
    cubic_t1(x).scale(weight(x, lambda, b).value)
}

/// Ambient Jacobian of S in x and its lambda-derivative.
pub fn radial_s_derivatives(x: &HPoint, lambda: f64, b: &BumpParams) -> (DMatrix<f64>, HPoint) {
    let wt = weight(x, lambda, b);
    let t1 = cubic_t1(x);
    let jac = dt1(x) * wt.value + t1.vector() * wt.w.transpose();
    (jac, t1.scale(wt.dlambda))
}

/// Localization of the perturbation -eta eps_1 to a neighbourhood W_rho of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Localization {
    pub eta0: f64,
    pub rho: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl Localization {
    /// rho = 4 sqrt(eta0), delta1 = rho/2, delta2 = sqrt(k/3) rho.
    pub fn new(k: Dim, eta0: f64) -> Result<Self> {
        if !(eta0 > 0.0) {
            return out_of_range("eta0", eta0, "(0, inf)");
        }
        let rho = 4.0 * eta0.sqrt();
        Ok(Self {
            eta0,
            rho,
            delta1: rho / 2.0,
            delta2: (k.k() as f64 / 3.0).sqrt() * rho,
        })
    }

    /// Split x into the eps_1 coordinate and the orthogonal part.
    fn split(&self, x: &HPoint) -> (f64, DVector<f64>, DVector<f64>) {
        let e1 = eps(Dim::new(x.k()).expect("k >= 3"), 1).expect("p = 1 valid");
        let x1 = x.dot(&e1);
        let y = x.vector() - e1.vector() * x1;
        (x1, y, e1.into_vector())
    }

    /// Scalar factor phi(2|lambda|/rho) phi(2|x1|/delta1) phi(2|y|/delta2).
    pub fn factor(&self, x: &HPoint, lambda: f64) -> f64 {
        let (x1, y, _) = self.split(x);
        bump_phi(2.0 * lambda.abs() / self.rho)
            * bump_phi(2.0 * x1.abs() / self.delta1)
            * bump_phi(2.0 * y.norm() / self.delta2)
    }

    /// Factor, its x-gradient and its lambda-derivative.
    pub fn factor_derivatives(&self, x: &HPoint, lambda: f64) -> (f64, DVector<f64>, f64) {
        let (x1, y, e1) = self.split(x);
        let (tl, t1, t2) = (
            2.0 * lambda.abs() / self.rho,
            2.0 * x1.abs() / self.delta1,
            2.0 * y.norm() / self.delta2,
        );
        let (fl, f1, f2) = (bump_phi(tl), bump_phi(t1), bump_phi(t2));
        let mut grad = e1 * (bump_phi_prime(t1) * 2.0 / self.delta1 * x1.signum() * fl * f2);
        let yn = y.norm();
        if yn > 0.0 {
            grad += &y * (bump_phi_prime(t2) * 2.0 / (self.delta2 * yn) * fl * f1);
        }
        let dl = bump_phi_prime(tl) * 2.0 / self.rho * lambda.signum() * f1 * f2;
        (fl * f1 * f2, grad, dl)
    }

    /// Whether (x, lambda) lies in W_{scale * rho}: |lambda| <= scale rho,
    /// |x1| <= scale delta1, |y| <= scale delta2.
    pub fn contains(&self, x: &HPoint, lambda: f64, scale: f64) -> bool {
        let (x1, y, _) = self.split(x);
        lambda.abs() <= scale * self.rho && x1.abs() <= scale * self.delta1 && y.norm() <= scale * self.delta2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::{enumerate_axes, eps_on};
    use approx::assert_abs_diff_eq;

    fn d(k: usize) -> Dim {
        Dim::new(k).unwrap()
    }

    #[test]
    fn phi_plateaus() {
        assert_eq!(bump_phi(0.5), 1.0);
        assert_eq!(bump_phi(1.0), 1.0);
        assert_eq!(bump_phi(2.5), 0.0);
        assert_eq!(bump_phi(-3.0), 1.0);
        let m = bump_phi(1.5);
        assert!(m > 0.0 && m < 1.0);
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let t = 1.0 + i as f64 / 1000.0;
            let v = bump_phi(t);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn phi_derivative_matches_difference() {
        for &t in &[1.1, 1.3, 1.5, 1.77, 1.95] {
            let h = 1e-6;
            let fd = (bump_phi(t + h) - bump_phi(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, bump_phi_prime(t), epsilon = 1e-8);
        }
    }

    #[test]
    fn kappa_matches_brute_force() {
        for k in 3..=8 {
            let mut vs = Vec::new();
            for mask in 1u32..(1 << k) - 1 {
                let s: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                vs.push(eps_on(k, &s).unwrap());
            }
            let mut best = -1.0_f64;
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    best = best.max(vs[i].dot(&vs[j]));
                }
            }
            assert_abs_diff_eq!(kappa(d(k)), best.min(1.0).acos(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(kappa(d(6)), std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        let _ = enumerate_axes(d(6));
    }

    #[test]
    fn lambda0_values() {
        let (l, r) = lambda0_r0(d(6)).unwrap();
        assert_abs_diff_eq!(l, 1.0 / 48.0, epsilon = 1e-16);
        assert_abs_diff_eq!(r * r, l, epsilon = 1e-16);
        assert_abs_diff_eq!(lambda0_r0(d(4)).unwrap().0, 1.0 / 12.0, epsilon = 1e-16);
        assert!(lambda0_r0(d(5)).is_err());
    }

    #[test]
    fn tau_guard() {
        let kap = kappa(d(6));
        assert!(BumpParams::with_tau(d(6), kap / 2.0).is_err());
        assert!(BumpParams::with_tau(d(6), kap / 100.0).is_ok());
    }

    #[test]
    fn psi_plateau_and_support() {
        let b = BumpParams::default_for(d(6)).unwrap();
        let e = eps(d(6), 3).unwrap();
        assert_eq!(bump_psi(&e, b.tau), 1.0);
        assert_eq!(bump_psi(&-&e, b.tau), 1.0);
        assert_eq!(bump_psi(&eps(d(6), 1).unwrap(), b.tau), 0.0);
        assert_eq!(bump_psi(&eps(d(6), 2).unwrap(), b.tau), 0.0);
    }

    #[test]
    fn s_regimes() {
        let k = d(6);
        let b = BumpParams::default_for(k).unwrap();
        let x = HPoint::from_slice_projected(&[0.01, -0.02, 0.03, 0.0, 0.005, -0.01]);
        assert!(x.norm() <= b.r0 / 2.0);
        assert!(radial_s(&x, b.lambda0 / 3.0, &b).distance(&cubic_t1(&x)) < 1e-18);
        let far = eps(k, 1).unwrap().scale(2.0 * b.r0);
        assert_eq!(radial_s(&far, 2.0 * b.lambda0, &b).norm(), 0.0);
    }

    #[test]
    fn s_jacobian_matches_finite_differences() {
        let k = d(6);
        let b = BumpParams::default_for(k).unwrap();
        // A point in the transition shell of both Phi and psi.
        let e3 = eps(k, 3).unwrap();
        let w = HPoint::from_slice_projected(&[0.3, -0.2, 0.1, 0.4, -0.5, -0.1]);
        let w = (&w - &e3.scale(w.dot(&e3))).normalized().unwrap();
        let ang = 0.6 * b.tau;
        let u = &e3.scale(ang.cos()) + &w.scale(ang.sin());
        let x = u.scale(0.75 * b.r0);
        let lam = 0.7 * b.lambda0;
        let (j, dl) = radial_s_derivatives(&x, lam, &b);
        let h = 1e-7;
        for i in 0..6 {
            let mut e = DVector::zeros(6);
            e[i] = h;
            let ep = HPoint::project(e.clone());
            let xp = &x + &ep;
            let xm = &x - &ep;
            let fd = (radial_s(&xp, lam, &b).vector() - radial_s(&xm, lam, &b).vector()) / (2.0 * h);
            let an = &j * ep.vector() / h;
            assert!((fd - an).norm() < 1e-6, "column {i}");
        }
        let fd = (radial_s(&x, lam + h, &b).vector() - radial_s(&x, lam - h, &b).vector()) / (2.0 * h);
        assert!((fd - dl.vector()).norm() < 1e-7);
        let psi = bump_psi(&u, b.tau);
        assert!(psi > 0.0 && psi < 1.0);
    }

    #[test]
    fn localization_factor() {
        let k = d(5);
        let loc = Localization::new(k, 0.01).unwrap();
        assert_abs_diff_eq!(loc.rho, 0.4, epsilon = 1e-15);
        let x = eps(k, 2).unwrap().scale(0.01);
        assert_eq!(loc.factor(&x, loc.rho / 4.0), 1.0);
        assert_eq!(loc.factor(&x, 2.0 * loc.rho), 0.0);
        let x = HPoint::from_slice_projected(&[0.05, 0.1, -0.12, 0.02, -0.03]);
        let lam = 0.7 * loc.rho;
        let (f, grad, dl) = loc.factor_derivatives(&x, lam);
        assert!(f > 0.0 && f < 1.0);
        let h = 1e-7;
        for i in 0..5 {
            let mut e = DVector::zeros(5);
            e[i] = h;
            let ep = HPoint::project(e);
            let fd = (loc.factor(&(&x + &ep), lam) - loc.factor(&(&x - &ep), lam)) / (2.0 * h);
            assert_abs_diff_eq!(fd, grad.dot(ep.vector()) / h, epsilon = 1e-6);
        }
        let fd = (loc.factor(&x, lam + h) - loc.factor(&x, lam - h)) / (2.0 * h);
        assert_abs_diff_eq!(fd, dl, epsilon = 1e-6);
    }
}

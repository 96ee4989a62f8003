//! Invariants and equivariants of the standard representation: the cubic C,
//! its gradient Q, the cubic equivariants T1/T2, and the phase field of Q on
//! the unit sphere.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::rep::{eps, hyperplane_basis, tangent_basis, Dim, HPoint};
use crate::spectrum::{asymmetry, spectrum, SYMMETRY_TOLERANCE};

/// Tolerance on |u| for phase-field inputs.
pub const UNIT_TOLERANCE: f64 = 1e-10;

/// C(x) = (1/3) sum x_i^3.
pub fn cubic_c(x: &HPoint) -> f64 {
    x.coords().iter().map(|c| c * c * c).sum::<f64>() / 3.0
}

/// Q(x)_i = x_i^2 - mean(x^2).
pub fn quad_q(x: &HPoint) -> HPoint {
    HPoint::project(x.vector().map(|c| c * c))
}

/// DQ_x as a k x k matrix: 2 diag(x) - (2/k) 1 x^T.
pub fn dq(x: &HPoint) -> DMatrix<f64> {
    let k = x.k();
    let v = x.vector();
    let mut m = DMatrix::from_fn(k, k, |_, j| -2.0 * v[j] / k as f64);
    for i in 0..k {
        m[(i, i)] += 2.0 * v[i];
    }
    m
}

pub fn dq_apply(x: &HPoint, h: &HPoint) -> HPoint {
    HPoint::project(x.vector().component_mul(h.vector()) * 2.0)
}

/// B(x, y) = (1/2)[Q(x + y) - Q(x) - Q(y)] = x o y - mean(x o y).
pub fn bilinear_b(x: &HPoint, y: &HPoint) -> HPoint {
    HPoint::project(x.vector().component_mul(y.vector()))
}

/// T1(x) = |x|^2 x.
pub fn cubic_t1(x: &HPoint) -> HPoint {
    x.scale(x.norm().powi(2))
}

/// DT1_x = 2 x x^T + |x|^2 I.
pub fn dt1(x: &HPoint) -> DMatrix<f64> {
    let v = x.vector();
    let k = v.len();
    v * v.transpose() * 2.0 + DMatrix::identity(k, k) * v.norm_squared()
}

/// T2(x)_i = x_i^3 - mean(x^3).
pub fn cubic_t2(x: &HPoint) -> HPoint {
    HPoint::project(x.vector().map(|c| c * c * c))
}

/// DT2_x = 3 diag(x^2) - (3/k) 1 (x^2)^T.
pub fn dt2(x: &HPoint) -> DMatrix<f64> {
    let k = x.k();
    let v = x.vector();
    let mut m = DMatrix::from_fn(k, k, |_, j| -3.0 * v[j] * v[j] / k as f64);
    for i in 0..k {
        m[(i, i)] += 3.0 * v[i] * v[i];
    }
    m
}

/// |x|^4 / 4, whose gradient is T1.
pub fn potential_t1(x: &HPoint) -> f64 {
    x.norm().powi(4) / 4.0
}

/// (1/4) sum x_i^4, whose gradient on H_{k-1} is T2.
pub fn potential_t2(x: &HPoint) -> f64 {
    x.coords().iter().map(|c| c.powi(4)).sum::<f64>() / 4.0
}

/// Eigenvalue of T2 on the axis L_p: (1/k)(p/q + q/p - 1).
pub fn alpha_p(k: Dim, p: usize) -> Result<f64> {
    let kk = k.k();
    if p < 1 || p >= kk {
        return out_of_range("p", p as f64, format!("[1, {}]", kk - 1));
    }
    let (p, q) = (p as f64, (kk - p) as f64);
    Ok((p / q + q / p - 1.0) / kk as f64)
}

/// T = a1 T1 + a2 T2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicParams {
    pub a1: f64,
    pub a2: f64,
}

impl CubicParams {
    pub fn new(a1: f64, a2: f64) -> Self {
        Self { a1, a2 }
    }

    pub fn eval(&self, x: &HPoint) -> HPoint {
        &cubic_t1(x).scale(self.a1) + &cubic_t2(x).scale(self.a2)
    }

    pub fn jacobian(&self, x: &HPoint) -> DMatrix<f64> {
        dt1(x) * self.a1 + dt2(x) * self.a2
    }

    /// Eigenvalue of T on L_p.
    pub fn beta_p(&self, k: Dim, p: usize) -> Result<f64> {
        Ok(self.a1 + self.a2 * alpha_p(k, p)?)
    }

    /// Membership in the open dense set where beta_ell does not vanish.
    pub fn is_generic(&self, k: Dim) -> bool {
        self.beta_p(k, k.ell()).map(|b| b != 0.0).unwrap_or(false)
    }
}

/// Tangential part of Q on the unit sphere: Q(u) - <Q(u), u> u.
pub fn phase_field(u: &HPoint) -> Result<HPoint> {
    if !u.is_unit(UNIT_TOLERANCE) {
        return Err(Error::NonUnit { norm: u.norm() });
    }
    let q = quad_q(u);
    let r = q.dot(u);
    Ok(&q - &u.scale(r))
}

/// Jacobian of the phase field at `u`, restricted to an orthonormal tangent basis.
pub fn phase_jacobian(u: &HPoint) -> Result<DMatrix<f64>> {
    if !u.is_unit(UNIT_TOLERANCE) {
        return Err(Error::NonUnit { norm: u.norm() });
    }
    let k = u.k();
    let t = tangent_basis(u);
    let q = quad_q(u);
    let uq = q.dot(u);
    let dqm = dq(u);
    let uv = u.vector();
    let mut cols = Vec::with_capacity(t.ncols());
    for j in 0..t.ncols() {
        let h: DVector<f64> = t.column(j).into_owned();
        let dqh = &dqm * &h;
        let col = &dqh - uv * dqh.dot(uv) - uv * q.vector().dot(&h) - &h * uq;
        cols.push(col);
    }
    let full = DMatrix::from_columns(&cols);
    let m = t.transpose() * full;
    let asym = asymmetry(&m);
    if asym >= SYMMETRY_TOLERANCE {
        return Err(Error::Internal(format!("phase Jacobian asymmetry {asym:e}")));
    }
    debug_assert_eq!(m.nrows(), k - 2);
    Ok((&m + m.transpose()) * 0.5)
}

/// Index of the phase field at eps_p (or -eps_p).
pub fn phase_index(k: Dim, p: usize, at_minus: bool) -> Result<usize> {
    let e = eps(k, p)?;
    let u = if at_minus { -&e } else { e };
    let sp = spectrum(&phase_jacobian(&u)?);
    sp.checked_index()
        .map_err(|e| Error::Internal(format!("phase field zero is not hyperbolic: {e}")))
}

/// Restrict an ambient linear map on R^k to H_{k-1} in the Helmert basis.
pub fn restrict_to_hyperplane(m: &DMatrix<f64>) -> DMatrix<f64> {
    let b = hyperplane_basis(m.nrows());
    b.transpose() * m * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::{act, Permutation};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(k: usize) -> Dim {
        Dim::new(k).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, k: usize) -> HPoint {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        HPoint::from_slice_projected(&v)
    }

    #[test]
    fn cubic_values() {
        assert_eq!(cubic_c(&HPoint::zero(4)), 0.0);
        assert_abs_diff_eq!(cubic_c(&eps(d(3), 1).unwrap()), 1.0 / (3.0 * 6f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn q_on_axes() {
        let e = eps(d(5), 1).unwrap();
        let q = quad_q(&e);
        assert!(q.distance(&e.scale(3.0 / 20f64.sqrt())) < 1e-15);
        assert!(quad_q(&eps(d(4), 2).unwrap()).norm() < 1e-16);
        for k in 3..10 {
            for p in 1..k {
                let e = eps(d(k), p).unwrap();
                let c = (k as f64 - 2.0 * p as f64) / ((p * (k - p) * k) as f64).sqrt();
                assert!(quad_q(&e).distance(&e.scale(c)) < 1e-14);
            }
        }
    }

    #[test]
    fn bilinear_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_point(&mut rng, 6);
            let y = random_point(&mut rng, 6);
            assert!(bilinear_b(&x, &x).distance(&quad_q(&x)) < 1e-15);
            assert!(bilinear_b(&x, &y).distance(&bilinear_b(&y, &x)) < 1e-15);
            let pol = (&(&quad_q(&(&x + &y)) - &quad_q(&x)) - &quad_q(&y)).scale(0.5);
            assert!(pol.distance(&bilinear_b(&x, &y)) < 1e-14);
            let s = Permutation::random(6, &mut rng);
            assert!(bilinear_b(&act(&s, &x), &act(&s, &y)).distance(&act(&s, &bilinear_b(&x, &y))) < 1e-15);
        }
    }

    #[test]
    fn b_on_eps1_is_scalar_on_complement() {
        for k in [4usize, 5, 7] {
            let e1 = eps(d(k), 1).unwrap();
            let t = tangent_basis(&e1);
            let alpha = 2.0 / ((k * (k - 1)) as f64).sqrt();
            for j in 0..t.ncols() {
                let w = HPoint::project(t.column(j).into_owned());
                let b = bilinear_b(&e1, &w);
                let perp = &b - &e1.scale(b.dot(&e1));
                // B(eps_1, w) = -(alpha/2) w, so y' = (lambda + x alpha) y with alpha > 0.
                assert!(perp.distance(&w.scale(-alpha / 2.0)) < 1e-14);
            }
        }
    }

    #[test]
    fn alpha_values_and_monotonicity() {
        assert_abs_diff_eq!(alpha_p(d(6), 3).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha_p(d(6), 1).unwrap(), 0.7, epsilon = 1e-15);
        let e = eps(d(6), 2).unwrap();
        assert!(cubic_t2(&e).distance(&e.scale(0.25)) < 1e-15);
        assert!(cubic_t1(&e).distance(&e) < 1e-15);
        for k in 3..=20 {
            let dim = d(k);
            for p in 1..dim.ell() {
                assert!(alpha_p(dim, p).unwrap() > alpha_p(dim, p + 1).unwrap());
            }
        }
        let t = CubicParams::new(1.0, -6.0);
        assert_eq!(t.beta_p(d(6), 3).unwrap(), 0.0);
        assert!(!t.is_generic(d(6)));
        assert!(CubicParams::new(-1.0, 0.0).is_generic(d(6)));
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-6;
        for _ in 0..10 {
            let x = random_point(&mut rng, 5);
            let cp = CubicParams::new(0.7, -1.3);
            let jq = dq(&x);
            let jt = cp.jacobian(&x);
            for j in 0..5 {
                let mut e = DVector::zeros(5);
                e[j] = h;
                let xp = HPoint::project(x.vector() + &e);
                let xm = HPoint::project(x.vector() - &e);
                let e_proj = HPoint::project(e.clone());
                let fq = (quad_q(&xp).vector() - quad_q(&xm).vector()) / (2.0 * h);
                let aq = HPoint::project(&jq * e_proj.vector() / h);
                assert!((fq - aq.vector()).norm() < 1e-8);
                let ft = (cp.eval(&xp).vector() - cp.eval(&xm).vector()) / (2.0 * h);
                let at = HPoint::project(&jt * e_proj.vector() / h);
                assert!((ft - at.vector()).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn euler_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = random_point(&mut rng, 7);
            let lhs = HPoint::project(dq(&x) * x.vector());
            assert!(lhs.distance(&quad_q(&x).scale(2.0)) < 1e-14);
            assert!(dq_apply(&x, &x).distance(&lhs) < 1e-14);
        }
    }

    #[test]
    fn phase_field_basics() {
        for k in 3..8 {
            for p in 1..k {
                let e = eps(d(k), p).unwrap();
                assert!(phase_field(&e).unwrap().norm() < 1e-15);
                assert!(phase_field(&-&e).unwrap().norm() < 1e-15);
            }
        }
        let u = HPoint::from_slice_projected(&[1.0, 0.0, -1.0]).normalized().unwrap();
        assert!(phase_field(&u).unwrap().norm() > 0.1);
        assert!(matches!(phase_field(&HPoint::from_slice_projected(&[2.0, 0.0, -2.0])), Err(Error::NonUnit { .. })));
    }

    #[test]
    fn phase_indices() {
        assert_eq!(phase_index(d(5), 1, false).unwrap(), 3);
        assert_eq!(phase_index(d(5), 1, true).unwrap(), 0);
        for k in 3..=10 {
            for p in 1..k {
                let a = phase_index(d(k), p, false).unwrap();
                let b = phase_index(d(k), p, true).unwrap();
                assert_eq!(a, k - p - 1);
                assert_eq!(b, p - 1);
            }
        }
    }
}

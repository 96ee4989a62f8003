//! Planar reductions of the perturbed families to the planes E_p (and F_ell),
//! with closed-form fold data.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;

use crate::continuation::{polish_fold, ContinuationSettings, Field, FoldEvent, FoldMethod};
use crate::equivariants::bilinear_b;
use crate::error::{out_of_range, Error, Result};
use crate::family::ModelSign;
use crate::rep::{eps, plane_chart, tangent_basis, Dim, HPoint, PlaneChart};
use crate::spectrum::spectrum;

/// The perturbed dynamics on E_p in chart coordinates (u, v):
///
/// u' = lambda u - A((k-2)u^2 - v^2) - eta [- s (u^2+v^2) u]
/// v' = lambda v + 2A uv - c v^2          [- s (u^2+v^2) v]
///
/// with A = 1/sqrt(k(k-1)), c = (q-p+1)/sqrt(q(k-1)(p-1)) and s = +1 for the
/// F^- cubic, -1 for F^+.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarSystem {
    pub k: Dim,
    pub p: usize,
    pub eta: f64,
    pub cubic: Option<ModelSign>,
    /// 1/sqrt(k(k-1)).
    pub a: f64,
    /// Coefficient of v^2 in the v equation; zero on F_ell.
    pub c: f64,
    pub is_fell: bool,
}

pub fn planar_system(k: Dim, p: usize, eta: f64, cubic: bool) -> Result<PlanarSystem> {
    PlanarSystem::new(k, p, eta, cubic.then_some(ModelSign::Minus))
}

impl PlanarSystem {
    pub fn new(k: Dim, p: usize, eta: f64, cubic: Option<ModelSign>) -> Result<Self> {
        let lim = k.plane_limit();
        if p < 2 || p > lim {
            return out_of_range("p", p as f64, format!("[2, {lim}]"));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return out_of_range("eta", eta, "[0, inf)");
        }
        let kk = k.k() as f64;
        let q = kk - p as f64;
        let pm = p as f64 - 1.0;
        Ok(Self {
            k,
            p,
            eta,
            cubic,
            a: 1.0 / (kk * (kk - 1.0)).sqrt(),
            c: (q - pm) / (q * (kk - 1.0) * pm).sqrt(),
            is_fell: k.is_odd() && p == k.ell() + 1,
        })
    }

    pub fn chart(&self) -> PlaneChart {
        plane_chart(self.k, self.p).expect("validated at construction")
    }

    fn s(&self) -> f64 {
        self.cubic.map_or(0.0, |m| -m.value())
    }

    fn km2(&self) -> f64 {
        self.k.k() as f64 - 2.0
    }

    pub fn rhs(&self, u: f64, v: f64, lambda: f64) -> (f64, f64) {
        let (a, c, s) = (self.a, self.c, self.s());
        let r2 = u * u + v * v;
        (
            lambda * u - a * (self.km2() * u * u - v * v) - self.eta - s * r2 * u,
            lambda * v + 2.0 * a * u * v - c * v * v - s * r2 * v,
        )
    }

    pub fn jac(&self, u: f64, v: f64, lambda: f64) -> Matrix2<f64> {
        let (a, c, s) = (self.a, self.c, self.s());
        let off = 2.0 * a * v - 2.0 * s * u * v;
        Matrix2::new(
            lambda - 2.0 * a * self.km2() * u - s * (3.0 * u * u + v * v),
            off,
            off,
            lambda + 2.0 * a * u - 2.0 * c * v - s * (u * u + 3.0 * v * v),
        )
    }

    fn polish(&self, mut z: Vector2<f64>, lambda: f64) -> Option<Vector2<f64>> {
        for _ in 0..30 {
            let (f1, f2) = self.rhs(z[0], z[1], lambda);
            let f = Vector2::new(f1, f2);
            if f.norm() < 1e-15 {
                break;
            }
            let dz = self.jac(z[0], z[1], lambda).lu().solve(&(-f))?;
            z += dz;
            if dz.norm() < 1e-16 * (1.0 + z.norm()) {
                break;
            }
        }
        let (f1, f2) = self.rhs(z[0], z[1], lambda);
        (f1.hypot(f2) < 1e-13).then_some(z)
    }
}

pub fn planar_rhs(sys: &PlanarSystem, u: f64, v: f64, lambda: f64) -> (f64, f64) {
    sys.rhs(u, v, lambda)
}

pub fn planar_jac(sys: &PlanarSystem, u: f64, v: f64, lambda: f64) -> Matrix2<f64> {
    sys.jac(u, v, lambda)
}

impl Field for PlanarSystem {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let (a, b) = self.rhs(x[0], x[1], lambda);
        DVector::from_vec(vec![a, b])
    }
    fn jacobian(&self, x: &DVector<f64>, lambda: f64) -> DMatrix<f64> {
        let j = self.jac(x[0], x[1], lambda);
        DMatrix::from_fn(2, 2, |r, c| j[(r, c)])
    }
    fn d_lambda(&self, x: &DVector<f64>, _lambda: f64) -> DVector<f64> {
        DVector::from_vec(vec![x[0], x[1]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarZero {
    pub u: f64,
    pub v: f64,
    /// In-plane index; `None` when the zero is not hyperbolic.
    pub index: Option<usize>,
    /// False for zeros within the discriminant tolerance of a fold.
    pub regular: bool,
}

impl PlanarZero {
    pub fn on_l1(&self) -> bool {
        self.v == 0.0
    }
}

const DISCRIMINANT_TOLERANCE: f64 = 1e-12;
const CUBIC_SCAN_POINTS: usize = 4000;

/// Real roots of c2 t^2 + c1 t + c0, with a flag for a near-double root.
fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> (Vec<f64>, bool) {
    let scale = c1 * c1 + (4.0 * c2 * c0).abs();
    if c2.abs() <= 1e-14 * (c1.abs() + c0.abs()) {
        return if c1 != 0.0 { (vec![-c0 / c1], false) } else { (vec![], false) };
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc.abs() <= DISCRIMINANT_TOLERANCE * scale {
        return (vec![-c1 / (2.0 * c2)], true);
    }
    if disc < 0.0 {
        return (vec![], false);
    }
    let sq = disc.sqrt();
    let qq = -0.5 * (c1 + if c1 >= 0.0 { sq } else { -sq });
    let r1 = qq / c2;
    let r2 = if qq != 0.0 { c0 / qq } else { -r1 };
    (vec![r1.min(r2), r1.max(r2)], false)
}

/// Sign-change roots of f on [-bound, bound].
fn scan_roots(f: impl Fn(f64) -> f64, bound: f64) -> Vec<f64> {
    let n = CUBIC_SCAN_POINTS;
    let h = 2.0 * bound / n as f64;
    let mut out = Vec::new();
    let mut a = -bound;
    let mut fa = f(a);
    for i in 1..=n {
        let b = -bound + h * i as f64;
        let fb = f(b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    out
}

fn zero_at(sys: &PlanarSystem, u: f64, v: f64, lambda: f64, regular: bool) -> PlanarZero {
    let j = sys.jac(u, v, lambda);
    let sp = spectrum(&DMatrix::from_fn(2, 2, |r, c| j[(r, c)]));
    let regular = regular && sp.is_hyperbolic();
    PlanarZero { u, v, index: sp.is_hyperbolic().then_some(sp.index), regular }
}

fn push_unique(out: &mut Vec<PlanarZero>, z: PlanarZero) {
    if !out.iter().any(|w| (w.u - z.u).hypot(w.v - z.v) < 1e-10) {
        out.push(z);
    }
}

/// All zeros of the planar system at `lambda`, sorted by (v, u).
///
/// Zeros on the line v = 0 (the axis L_1) come from the scalar equation there;
/// off-axis zeros from the substitution u = (c v - lambda)/(2A) into the first
/// equation. Zeros within the discriminant tolerance of a fold are returned
/// with `regular = false`.
pub fn planar_zeros(sys: &PlanarSystem, lambda: f64) -> Vec<PlanarZero> {
    let mut out = Vec::new();
    if sys.cubic.is_none() {
        let (a, c, km2, eta) = (sys.a, sys.c, sys.km2(), sys.eta);
        let (us, double) = quadratic_roots(a * km2, -lambda, eta);
        for u in us {
            let u = if double { u } else { sys.polish(Vector2::new(u, 0.0), lambda).map_or(u, |z| z[0]) };
            push_unique(&mut out, zero_at(sys, u, 0.0, lambda, !double));
        }
        let a1 = c / (2.0 * a);
        let a0 = -lambda / (2.0 * a);
        let c2 = a - a * km2 * a1 * a1;
        let c1 = lambda * a1 - 2.0 * a * km2 * a1 * a0;
        let c0 = lambda * a0 - a * km2 * a0 * a0 - eta;
        let (vs, double) = quadratic_roots(c2, c1, c0);
        let mut vs = vs;
        if sys.is_fell && !double && vs.len() == 2 {
            // Exact +-v symmetry on F_ell.
            let m = 0.5 * (vs[1] - vs[0]);
            vs = vec![-m, m];
        }
        for v in vs {
            if v == 0.0 {
                continue;
            }
            let mut z = Vector2::new(a1 * v + a0, v);
            if !double {
                if let Some(p) = sys.polish(z, lambda) {
                    z = p;
                }
            }
            push_unique(&mut out, zero_at(sys, z[0], z[1], lambda, !double));
        }
    } else {
        let (a, c, s, km2, eta) = (sys.a, sys.c, sys.s(), sys.km2(), sys.eta);
        let bound = 2.0 * a + c + lambda.abs().sqrt() + 1.0;
        for u in scan_roots(|u| -s * u * u * u - a * km2 * u * u + lambda * u - eta, bound) {
            if let Some(z) = sys.polish(Vector2::new(u, 0.0), lambda) {
                push_unique(&mut out, zero_at(sys, z[0], 0.0, lambda, true));
            }
        }
        // Off the axis: -Ak u^2 + A v^2 + c u v - eta = 0 is solved for v on two
        // branches, and the reduced v equation is scanned along each.
        let k = sys.k.k() as f64;
        for branch in [-1.0, 1.0] {
            let vof = move |u: f64| {
                let d = c * c * u * u + 4.0 * a * (a * k * u * u + eta);
                (-c * u + branch * d.max(0.0).sqrt()) / (2.0 * a)
            };
            let g = |u: f64| {
                let v = vof(u);
                lambda + 2.0 * a * u - c * v - s * (u * u + v * v)
            };
            for u in scan_roots(g, bound) {
                let v = vof(u);
                if v.abs() < 1e-12 {
                    continue;
                }
                if let Some(z) = sys.polish(Vector2::new(u, v), lambda) {
                    if z[1].abs() > 1e-12 {
                        push_unique(&mut out, zero_at(sys, z[0], z[1], lambda, true));
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| x.v.total_cmp(&y.v).then(x.u.total_cmp(&y.u)));
    out
}

fn check_gamma_p(k: Dim, p: usize) -> Result<()> {
    let kk = k.k();
    let even_ell = !k.is_odd() && p == k.ell();
    if p < 1 || (2 * p >= kk && !even_ell) {
        return out_of_range("p", p as f64, format!("[1, {})", kk.div_ceil(2)));
    }
    Ok(())
}

/// Closed-form fold parameter gamma_{k,p}; zero for p = ell when k is even.
pub fn gamma_closed(k: Dim, p: usize, eta: f64) -> Result<f64> {
    check_gamma_p(k, p)?;
    if !(eta >= 0.0) {
        return out_of_range("eta", eta, "[0, inf)");
    }
    let kk = k.k() as f64;
    if !k.is_odd() && p == k.ell() {
        return Ok(0.0);
    }
    let g1 = 2.0 * eta.sqrt() * (kk - 2.0).sqrt() / (kk * (kk - 1.0)).powf(0.25);
    if p == 1 {
        return Ok(g1);
    }
    let (pf, q) = (p as f64, kk - p as f64);
    let m = q - pf + 1.0;
    Ok(g1 * m / (kk - 1.0) * (1.0 - 4.0 * q * (pf - 1.0) / (m * m * kk * (kk - 2.0))).sqrt())
}

/// The fold point b_p at lambda = +gamma_{k,p}, as an ambient point, with its norm.
pub fn b_point(k: Dim, p: usize, eta: f64) -> Result<(HPoint, f64)> {
    check_gamma_p(k, p)?;
    if !k.is_odd() && p == k.ell() {
        return Err(Error::Unsupported("no quadratic fold on E_ell for even k".into()));
    }
    let g = gamma_closed(k, p, eta)?;
    let kk = k.k() as f64;
    let a = 1.0 / (kk * (kk - 1.0)).sqrt();
    if p == 1 {
        let u = g / (2.0 * a * (kk - 2.0));
        let x = eps(k, 1)?.scale(u);
        return Ok((x, u.abs()));
    }
    let sys = PlanarSystem::new(k, p, eta, None)?;
    let a1 = sys.c / (2.0 * a);
    let a0 = -g / (2.0 * a);
    let c2 = a - a * (kk - 2.0) * a1 * a1;
    let c1 = g * a1 - 2.0 * a * (kk - 2.0) * a1 * a0;
    let v = -c1 / (2.0 * c2);
    let x = sys.chart().map(a1 * v + a0, v);
    let n = x.norm();
    Ok((x, n))
}

/// Largest p with a quadratic fold: p < k/2.
pub fn max_fold_p(k: Dim) -> usize {
    (k.k() - 1) / 2
}

/// Whether gamma_{k,p} strictly decreases in p and lies in (0, 2 sqrt(eta)].
pub fn gamma_monotone(k: Dim, eta: f64) -> Result<bool> {
    let gs = (1..=max_fold_p(k))
        .map(|p| gamma_closed(k, p, eta))
        .collect::<Result<Vec<_>>>()?;
    let bounded = gs.iter().all(|&g| g > 0.0 && g <= 2.0 * eta.sqrt());
    Ok(bounded && gs.windows(2).all(|w| w[0] > w[1]))
}

/// The scalar alpha with y' = (lambda + x alpha) y for the linearization along
/// L_1 = R eps_1 in the directions y orthogonal to eps_1. Computed as
/// -2 pi_2 B(eps_1, y) / y over an orthonormal basis, checking proportionality.
pub fn decompose_alpha(k: Dim) -> Result<f64> {
    let e1 = eps(k, 1)?;
    let t = tangent_basis(&e1);
    let mut alpha = None;
    for j in 0..t.ncols() {
        let w = HPoint::project(t.column(j).into_owned());
        let b = bilinear_b(&e1, &w);
        let along = b.dot(&e1);
        let perp = b.vector() - e1.vector() * along;
        let ratio = -2.0 * perp.dot(w.vector());
        let resid = (perp * -2.0 - w.vector() * ratio).norm();
        if resid > 1e-10 {
            return Err(Error::Internal(format!("2 pi_2 B(eps_1, .) is not scalar (residual {resid:e})")));
        }
        match alpha {
            None => alpha = Some(ratio),
            Some(a) if (a - ratio).abs() > 1e-10 => {
                return Err(Error::Internal("2 pi_2 B(eps_1, .) is not a multiple of the identity".into()))
            }
            _ => {}
        }
    }
    alpha.ok_or_else(|| Error::Internal("empty tangent basis".into()))
}

fn regular_zeros(sys: &PlanarSystem, lambda: f64) -> Vec<PlanarZero> {
    planar_zeros(sys, lambda).into_iter().filter(|z| z.regular).collect()
}

/// Grid resolution and refinement depth of the fold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldSearch {
    pub grid: usize,
    pub max_depth: usize,
}

impl Default for FoldSearch {
    fn default() -> Self {
        Self { grid: 400, max_depth: 8 }
    }
}

/// Folds of the planar system in [lambda_lo, lambda_hi], located from changes
/// in the zero count on a grid, narrowed by bisection and polished on the
/// augmented system F = 0, det-test = 0.
pub fn fold_detect(sys: &PlanarSystem, lambda_lo: f64, lambda_hi: f64) -> Result<Vec<FoldEvent>> {
    fold_detect_with(sys, lambda_lo, lambda_hi, FoldSearch::default())
}

pub fn fold_detect_with(sys: &PlanarSystem, lambda_lo: f64, lambda_hi: f64, search: FoldSearch) -> Result<Vec<FoldEvent>> {
    if !(lambda_lo < lambda_hi) {
        return Err(Error::InvalidArgument("need lambda_lo < lambda_hi".into()));
    }
    let n = search.grid.max(2);
    let grid: Vec<f64> = (0..=n).map(|i| lambda_lo + (lambda_hi - lambda_lo) * i as f64 / n as f64).collect();
    let counts: Vec<usize> = grid.iter().map(|&l| regular_zeros(sys, l).len()).collect();
    let mut brackets = Vec::new();
    for i in 0..n {
        collect_brackets(sys, grid[i], grid[i + 1], counts[i], counts[i + 1], search.max_depth, &mut brackets)?;
    }
    let mut events = Vec::new();
    for (lo, hi) in brackets {
        events.push(refine_fold(sys, lo, hi)?);
    }
    events.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(events)
}

fn collect_brackets(
    sys: &PlanarSystem,
    lo: f64,
    hi: f64,
    clo: usize,
    chi: usize,
    depth: usize,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    let diff = clo.abs_diff(chi);
    if diff == 0 {
        return Ok(());
    }
    if diff == 2 {
        out.push((lo, hi));
        return Ok(());
    }
    if depth == 0 {
        return Err(Error::RefinementFloor { lo, hi });
    }
    let m = 10;
    let pts: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
    let mut cs: Vec<usize> = pts.iter().map(|&l| regular_zeros(sys, l).len()).collect();
    cs[0] = clo;
    cs[m] = chi;
    for i in 0..m {
        collect_brackets(sys, pts[i], pts[i + 1], cs[i], cs[i + 1], depth - 1, out)?;
    }
    Ok(())
}

fn refine_fold(sys: &PlanarSystem, mut lo: f64, mut hi: f64) -> Result<FoldEvent> {
    let clo = regular_zeros(sys, lo).len();
    let chi = regular_zeros(sys, hi).len();
    let width = if sys.cubic.is_some() { 1e-7 } else { 1e-12 };
    while hi - lo > width * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let cm = regular_zeros(sys, mid).len();
        if cm == clo {
            lo = mid;
        } else if cm == chi {
            hi = mid;
        } else {
            break;
        }
    }
    let (rich_l, rich, poor) = if clo > chi {
        (lo, regular_zeros(sys, lo), regular_zeros(sys, hi))
    } else {
        (hi, regular_zeros(sys, hi), regular_zeros(sys, lo))
    };
    // The merging pair: the two zeros farthest from any zero on the other side.
    let mut scored: Vec<(f64, PlanarZero)> = rich
        .iter()
        .map(|z| {
            let d = poor
                .iter()
                .map(|w| (w.u - z.u).hypot(w.v - z.v))
                .fold(f64::INFINITY, f64::min);
            (d, *z)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    if scored.len() < 2 {
        return Err(Error::Internal("fold bracket without a merging pair".into()));
    }
    let (z1, z2) = (scored[0].1, scored[1].1);
    let guess = DVector::from_vec(vec![0.5 * (z1.u + z2.u), 0.5 * (z1.v + z2.v)]);
    let settings = ContinuationSettings::default();
    let (x, l) = polish_fold(sys, &guess, rich_l, &settings)?;
    // The cubic zero count comes from a sign-change scan, which loses nearly
    // merged pairs slightly before the fold.
    let slack = if sys.cubic.is_some() { 1e-3 } else { 1e-6 };
    if l < lo - slack || l > hi + slack {
        return Err(Error::Internal(format!("fold polish left the bracket [{lo}, {hi}]: {l}")));
    }
    let j = sys.jac(x[0], x[1], l);
    let sp = spectrum(&DMatrix::from_fn(2, 2, |r, c| j[(r, c)]));
    let (i1, i2) = (z1.index.unwrap_or(0), z2.index.unwrap_or(0));
    Ok(FoldEvent {
        lambda: l,
        x: vec![x[0], x[1]],
        min_eigenvalue: sp.min_abs,
        index_before: i1.min(i2),
        index_after: i1.max(i2),
        method: FoldMethod::Numeric,
        plane: Some(sys.p),
        on_l1: x[1].abs() < 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariants::quad_q;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(k: usize) -> Dim {
        Dim::new(k).unwrap()
    }

    #[test]
    fn pullback_matches_ambient_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [3, 4, 5, 6, 7, 9] {
            for p in 2..=d(k).plane_limit() {
                let sys = planar_system(d(k), p, 0.0, false).unwrap();
                let ch = sys.chart();
                for _ in 0..20 {
                    let (u, v, l) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let x = ch.map(u, v);
                    let f = &(&x * l) - &quad_q(&x);
                    let (fu, fv) = ch.pull(&f);
                    let (gu, gv) = sys.rhs(u, v, l);
                    assert!((fu - gu).abs() < 1e-12 && (fv - gv).abs() < 1e-12, "k={k} p={p}");
                    // f stays in the plane
                    assert!(f.distance(&ch.map(fu, fv)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        for cubic in [None, Some(ModelSign::Minus), Some(ModelSign::Plus)] {
            let sys = PlanarSystem::new(d(6), 3, 0.01, cubic).unwrap();
            let (u, v, l) = (0.13, -0.21, 0.07);
            let j = sys.jac(u, v, l);
            let h = 1e-6;
            for (col, (du, dv)) in [(h, 0.0), (0.0, h)].into_iter().enumerate() {
                let p = sys.rhs(u + du, v + dv, l);
                let m = sys.rhs(u - du, v - dv, l);
                assert!(((p.0 - m.0) / (2.0 * h) - j[(0, col)]).abs() < 1e-8);
                assert!(((p.1 - m.1) / (2.0 * h) - j[(1, col)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn unperturbed_zeros_on_axes() {
        let sys = planar_system(d(5), 2, 0.0, false).unwrap();
        let zs = planar_zeros(&sys, -1.0);
        assert_eq!(zs.len(), 4);
        let ch = sys.chart();
        let c1 = zs.iter().find(|z| z.on_l1() && z.u != 0.0).unwrap();
        assert!((c1.u + 20f64.sqrt() / 3.0).abs() < 1e-12);
        let off: Vec<_> = zs.iter().filter(|z| !z.on_l1()).collect();
        assert_eq!(off.len(), 2);
        for z in off {
            let ang = z.v.atan2(z.u);
            let (a, b) = ch.axis_direction();
            let (sa, sb) = ch.star_direction();
            let on_axis = (ang - (-b).atan2(-a)).abs() < 1e-12;
            let on_star = (ang - (-sb).atan2(-sa)).abs() < 1e-12;
            assert!(on_axis || on_star);
        }
        assert_eq!(planar_zeros(&sys, 0.0).len(), 1);
        assert_eq!((planar_zeros(&sys, 0.0)[0].u, planar_zeros(&sys, 0.0)[0].v), (0.0, 0.0));
    }

    #[test]
    fn rescaled_constant() {
        let (k, p) = (5.0_f64, 2.0_f64);
        let sys = planar_system(d(5), 2, 0.0, false).unwrap();
        let q = k - p;
        let cp = (q - p + 1.0) / (q * (p - 1.0)).sqrt() * (k / (k - 2.0)).sqrt();
        assert!((cp - 2.0 / 3.0 * 5f64.sqrt()).abs() < 1e-12);
        // c_p = C_p sqrt(k-2) / sqrt(k(k-1)) in the unscaled chart
        assert!((sys.c - cp * (k - 2.0).sqrt() * sys.a).abs() < 1e-12);
    }

    #[test]
    fn fell_crossing_point() {
        let sys = planar_system(d(5), 3, 0.01, false).unwrap();
        assert!(sys.is_fell && sys.c == 0.0);
        let zs = planar_zeros(&sys, 0.0);
        let expect = 0.1 * 20f64.powf(0.25);
        let off: Vec<_> = zs.iter().filter(|z| !z.on_l1()).collect();
        assert_eq!(off.len(), 2);
        for z in off {
            assert!(z.u.abs() < 1e-15 && (z.v.abs() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_closed(d(5), 1, 0.01).unwrap() - 0.1638072).abs() < 1e-7);
        assert!((gamma_closed(d(5), 2, 0.01).unwrap() - 0.07325683).abs() < 5e-9);
        assert_eq!(gamma_closed(d(6), 3, 0.01).unwrap(), 0.0);
        assert!(gamma_closed(d(5), 3, 0.01).is_err());
        assert!(gamma_monotone(d(7), 0.01).unwrap());
        let g3 = gamma_closed(d(7), 3, 0.01).unwrap();
        let lower = 0.2 * 3f64.sqrt() / (7f64.sqrt() * 42f64.powf(0.25));
        assert!(g3 >= lower);
    }

    #[test]
    fn b_point_norms() {
        let (_, n1) = b_point(d(5), 1, 0.01).unwrap();
        assert!((n1 - (0.01 * 20f64.sqrt() / 3.0).sqrt()).abs() < 1e-15);
        assert!((n1 - 0.1220947).abs() < 1e-7);
        let bound = 2.0 * (0.01 * 5.0 / 3.0_f64).sqrt();
        for p in 1..=2 {
            assert!(b_point(d(5), p, 0.01).unwrap().1 < bound);
        }
        let r: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&e| b_point(d(5), 2, e).unwrap().1 / e.sqrt()).collect();
        assert!((r[0] - r[1]).abs() < 1e-6 && (r[1] - r[2]).abs() < 1e-6);
    }

    #[test]
    fn alpha() {
        let a = decompose_alpha(d(5)).unwrap();
        assert!((a - 0.4472136).abs() < 1e-7);
        let sys = planar_system(d(5), 2, 0.0, false).unwrap();
        assert!((a - 2.0 * sys.a).abs() < 1e-12);
        for k in 3..=20 {
            assert!(decompose_alpha(d(k)).unwrap() > 0.0);
        }
    }

    #[test]
    fn folds_match_closed_form() {
        let sys = planar_system(d(5), 2, 0.01, false).unwrap();
        let ev = fold_detect(&sys, -0.3, 0.3).unwrap();
        assert_eq!(ev.len(), 4);
        let g1 = gamma_closed(d(5), 1, 0.01).unwrap();
        let g2 = gamma_closed(d(5), 2, 0.01).unwrap();
        let expect = [-g1, -g2, g2, g1];
        for (e, g) in ev.iter().zip(expect) {
            assert!(((e.lambda - g) / g).abs() < 1e-8, "{} vs {g}", e.lambda);
            assert!(e.min_eigenvalue < 1e-8);
            assert_eq!(e.index_after - e.index_before, 1);
        }
        assert!(ev[0].on_l1 && ev[3].on_l1 && !ev[1].on_l1);
        let (b, _) = b_point(d(5), 2, 0.01).unwrap();
        let pb = sys.chart().map(ev[2].x[0], ev[2].x[1]);
        assert!(pb.distance(&b) < 1e-7);
        let sys0 = planar_system(d(5), 2, 0.0, false).unwrap();
        assert!(fold_detect(&sys0, 0.01, 0.3).unwrap().is_empty());
        assert!(fold_detect(&sys0, -0.3, -0.01).unwrap().is_empty());
    }

    #[test]
    fn cubic_even_plane_single_fold_near_zero() {
        // The global cubic also folds the c*_{ell-1} branch at an eta-independent
        // lambda ~ -0.02; the window stays inside that scale.
        let sys = planar_system(d(6), 3, 1e-4, true).unwrap();
        let ev = fold_detect(&sys, -0.01, 0.01).unwrap();
        assert_eq!(ev.len(), 1, "{ev:?}");
        assert!(!ev[0].on_l1 && ev[0].x[1] > 0.0);
        assert_eq!((ev[0].index_before, ev[0].index_after), (1, 2));
        // It scales with eta.
        let small = fold_detect(&planar_system(d(6), 3, 1e-5, true).unwrap(), -0.003, 0.003).unwrap();
        assert_eq!(small.len(), 1);
        assert!(small[0].lambda < ev[0].lambda / 3.0);
    }
}

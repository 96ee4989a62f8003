//! Pseudo-arclength continuation of equilibria in (x, lambda), with fold
//! detection and location.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::rep::{hyperplane_basis, HPoint, PlaneChart};
use crate::spectrum::{spectrum, Spectrum};

/// A smooth parameter-dependent vector field on R^n.
pub trait Field {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>, lambda: f64) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>, lambda: f64) -> DMatrix<f64>;
    fn d_lambda(&self, x: &DVector<f64>, lambda: f64) -> DVector<f64>;
}

/// A family written in an orthonormal basis of H_{k-1}.
#[derive(Debug, Clone)]
pub struct HelmertField {
    pub spec: FamilySpec,
    basis: DMatrix<f64>,
}

impl HelmertField {
    pub fn new(spec: FamilySpec) -> Self {
        let basis = hyperplane_basis(spec.k.k());
        Self { spec, basis }
    }

    pub fn lift(&self, z: &DVector<f64>) -> HPoint {
        HPoint::project(&self.basis * z)
    }

    pub fn coordinates(&self, x: &HPoint) -> DVector<f64> {
        self.basis.transpose() * x.vector()
    }
}

impl Field for HelmertField {
    fn dim(&self) -> usize {
        self.basis.ncols()
    }
    fn value(&self, z: &DVector<f64>, lambda: f64) -> DVector<f64> {
        self.basis.transpose() * self.spec.eval(&self.lift(z), lambda).vector()
    }
    fn jacobian(&self, z: &DVector<f64>, lambda: f64) -> DMatrix<f64> {
        self.basis.transpose() * self.spec.jac(&self.lift(z), lambda) * &self.basis
    }
    fn d_lambda(&self, z: &DVector<f64>, lambda: f64) -> DVector<f64> {
        self.basis.transpose() * self.spec.d_lambda(&self.lift(z), lambda).vector()
    }
}

/// A family restricted to a flow-invariant plane through a chart.
#[derive(Debug, Clone)]
pub struct ChartRestriction {
    pub spec: FamilySpec,
    pub chart: PlaneChart,
    basis: DMatrix<f64>,
}

impl ChartRestriction {
    pub fn new(spec: FamilySpec, chart: PlaneChart) -> Self {
        let basis = chart.matrix();
        Self { spec, chart, basis }
    }

    pub fn lift(&self, z: &DVector<f64>) -> HPoint {
        self.chart.map(z[0], z[1])
    }
}

impl Field for ChartRestriction {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, z: &DVector<f64>, lambda: f64) -> DVector<f64> {
        self.basis.transpose() * self.spec.eval(&self.lift(z), lambda).vector()
    }
    fn jacobian(&self, z: &DVector<f64>, lambda: f64) -> DMatrix<f64> {
        self.basis.transpose() * self.spec.jac(&self.lift(z), lambda) * &self.basis
    }
    fn d_lambda(&self, z: &DVector<f64>, lambda: f64) -> DVector<f64> {
        self.basis.transpose() * self.spec.d_lambda(&self.lift(z), lambda).vector()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationSettings {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Residual tolerance for Newton and the corrector.
    pub newton_tol: f64,
    pub max_newton_iter: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Tolerance on lambda when locating folds.
    pub fold_tol: f64,
    pub max_steps: usize,
    /// Stop when |x| exceeds this.
    pub max_norm: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            min_step: 1e-6,
            max_step: 1e-2,
            newton_tol: 1e-12,
            max_newton_iter: 50,
            lambda_min: -1.0,
            lambda_max: 1.0,
            fold_tol: 1e-10,
            max_steps: 200_000,
            max_norm: f64::INFINITY,
        }
    }
}

impl ContinuationSettings {
    pub fn with_window(lambda_min: f64, lambda_max: f64) -> Self {
        Self { lambda_min, lambda_max, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0 < self.min_step && self.min_step <= self.initial_step && self.initial_step <= self.max_step) {
            return Err(Error::InvalidArgument("need 0 < min_step <= initial_step <= max_step".into()));
        }
        if !(self.lambda_min < self.lambda_max) {
            return Err(Error::InvalidArgument("empty lambda window".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub spectrum: Spectrum,
}

fn smallest_singular_ratio(j: &DMatrix<f64>) -> f64 {
    let sv = j.singular_values();
    let max = sv.max();
    let min = sv.min();
    min / max.max(1.0)
}

/// Newton's method for F(x, lambda) = 0 at fixed lambda.
pub fn newton_solve<F: Field + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    lambda: f64,
    settings: &ContinuationSettings,
) -> Result<Equilibrium> {
    let mut x = x0.clone();
    let mut r = field.value(&x, lambda);
    let mut rn = r.norm();
    for it in 0..=settings.max_newton_iter {
        let j = field.jacobian(&x, lambda);
        if smallest_singular_ratio(&j) < 1e-12 {
            return Err(Error::SingularJacobian);
        }
        if rn < settings.newton_tol {
            return Ok(Equilibrium {
                x: x.iter().copied().collect(),
                lambda,
                residual: rn,
                iterations: it,
                spectrum: spectrum(&j),
            });
        }
        if it == settings.max_newton_iter {
            break;
        }
        let dx = j.lu().solve(&(-&r)).ok_or(Error::SingularJacobian)?;
        // Backtrack while the residual does not decrease.
        let mut t = 1.0;
        loop {
            let xt = &x + &dx * t;
            let rt = field.value(&xt, lambda);
            let rtn = rt.norm();
            if rtn < rn || t < 1e-3 {
                x = xt;
                r = rt;
                rn = rtn;
                break;
            }
            t *= 0.5;
        }
        if !rn.is_finite() {
            break;
        }
    }
    Err(Error::NewtonDiverged { iterations: settings.max_newton_iter, residual: rn })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub index: usize,
    /// Sign of det DF (0 if singular to working precision).
    pub det_sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    LambdaMin,
    LambdaMax,
    Escape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMethod {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldEvent {
    pub lambda: f64,
    /// Field coordinates of the fold point.
    pub x: Vec<f64>,
    /// Smallest |eigenvalue| of DF at the fold.
    pub min_eigenvalue: f64,
    pub index_before: usize,
    pub index_after: usize,
    pub method: FoldMethod,
    /// Plane label when the field is a planar reduction.
    pub plane: Option<usize>,
    /// Whether the fold lies on the line L_1.
    pub on_l1: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    /// Positions in `points` after which dlambda/ds changes sign.
    pub turns: Vec<usize>,
    pub start: Option<Boundary>,
    pub end: Option<Boundary>,
}

impl Curve {
    pub fn first(&self) -> &CurvePoint {
        &self.points[0]
    }
    pub fn last(&self) -> &CurvePoint {
        self.points.last().expect("curves are never empty")
    }
}

fn point_at<F: Field + ?Sized>(field: &F, x: &DVector<f64>, lambda: f64) -> CurvePoint {
    let j = field.jacobian(x, lambda);
    let sp = spectrum(&j);
    let det = j.determinant();
    CurvePoint {
        lambda,
        x: x.iter().copied().collect(),
        index: sp.index,
        det_sign: if det > 0.0 {
            1
        } else if det < 0.0 {
            -1
        } else {
            0
        },
    }
}

fn join(x: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = x.len();
    let mut y = DVector::zeros(n + 1);
    y.rows_mut(0, n).copy_from(x);
    y[n] = lambda;
    y
}

fn split(y: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = y.len() - 1;
    (y.rows(0, n).into_owned(), y[n])
}

/// Tangent of the solution curve at (x, lambda), oriented so that dlambda/ds has sign `dir`.
fn initial_tangent<F: Field + ?Sized>(field: &F, x: &DVector<f64>, lambda: f64, dir: f64) -> Result<DVector<f64>> {
    let n = field.dim();
    let j = field.jacobian(x, lambda);
    let fl = field.d_lambda(x, lambda);
    // Null vector of [J | F_lambda] via the SVD of the n x (n+1) matrix.
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&j);
    a.view_mut((0, n), (n, 1)).copy_from(&fl);
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Internal("SVD failed".into()))?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut t: DVector<f64> = vt.row(imin).transpose().into_owned();
    t /= t.norm();
    if t[n] * dir < 0.0 || (t[n] == 0.0 && dir < 0.0) {
        t = -t;
    }
    Ok(t)
}

/// Newton on the bordered system F = 0, t.(y - y_pred) = 0.
fn correct<F: Field + ?Sized>(
    field: &F,
    y_pred: &DVector<f64>,
    t: &DVector<f64>,
    settings: &ContinuationSettings,
) -> Option<DVector<f64>> {
    let n = field.dim();
    let mut y = y_pred.clone();
    for _ in 0..12 {
        let (x, l) = split(&y);
        let f = field.value(&x, l);
        let g = t.dot(&(&y - y_pred));
        let res = f.norm().max(g.abs());
        if !res.is_finite() {
            return None;
        }
        let mut a = DMatrix::zeros(n + 1, n + 1);
        a.view_mut((0, 0), (n, n)).copy_from(&field.jacobian(&x, l));
        a.view_mut((0, n), (n, 1)).copy_from(&field.d_lambda(&x, l));
        a.view_mut((n, 0), (1, n + 1)).copy_from(&t.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-f));
        rhs[n] = -g;
        let dy = a.lu().solve(&rhs)?;
        y += &dy;
        if res < settings.newton_tol || dy.norm() < 1e-15 * (1.0 + y.norm()) {
            let (x, l) = split(&y);
            if field.value(&x, l).norm() < settings.newton_tol.max(1e-11) {
                return Some(y);
            }
        }
    }
    let (x, l) = split(&y);
    (field.value(&x, l).norm() < settings.newton_tol).then_some(y)
}

/// Solve F(x, lambda_b) = 0 near x0 for the exact window-exit point.
fn land_on_boundary<F: Field + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    lambda_b: f64,
    settings: &ContinuationSettings,
) -> Option<DVector<f64>> {
    newton_solve(field, x0, lambda_b, settings).ok().map(|e| DVector::from_vec(e.x))
}

/// Pseudo-arclength continuation (tangent predictor, bordered Newton corrector)
/// from an equilibrium, initially moving in the
/// direction sign(dir) of lambda. Runs until the curve leaves the window (or
/// exceeds `max_norm`), recording turning points on the way.
pub fn trace_branch<F: Field + ?Sized>(
    field: &F,
    x0: &DVector<f64>,
    lambda0: f64,
    dir: f64,
    settings: &ContinuationSettings,
) -> Result<Curve> {
    settings.validate()?;
    let start = newton_solve(field, x0, lambda0, settings)?;
    let x0 = DVector::from_vec(start.x);
    let mut points = vec![point_at(field, &x0, lambda0)];
    let mut turns = Vec::new();
    let mut y = join(&x0, lambda0);
    let mut t = initial_tangent(field, &x0, lambda0, dir)?;
    let mut h = settings.initial_step;
    let mut clean = 0;
    let start_boundary = if lambda0 <= settings.lambda_min {
        Some(Boundary::LambdaMin)
    } else if lambda0 >= settings.lambda_max {
        Some(Boundary::LambdaMax)
    } else {
        None
    };
    let n = field.dim();
    for _ in 0..settings.max_steps {
        let y_pred = &y + &t * h;
        let accepted = correct(field, &y_pred, &t, settings).and_then(|y_new| {
            let d = &y_new - &y;
            let dn = d.norm();
            let ok = dn > 0.0 && (&y_new - &y_pred).norm() <= 0.5 * h && d.dot(&t) / dn >= 0.95;
            if !ok {
                return None;
            }
            // Exact tangent at the new point, oriented along the chord.
            let (xn, ln) = split(&y_new);
            let tn = initial_tangent(field, &xn, ln, 1.0).ok()?;
            let tn = if tn.dot(&d) < 0.0 { -tn } else { tn };
            Some((y_new, tn))
        });
        let Some((y_new, t_new)) = accepted else {
            h *= 0.5;
            clean = 0;
            if h < settings.min_step {
                return Err(Error::StepUnderflow { lambda: y[n] });
            }
            continue;
        };
        if t_new[n] * t[n] < 0.0 {
            turns.push(points.len() - 1);
        }
        let (x_new, l_new) = split(&y_new);
        let exit = if l_new <= settings.lambda_min {
            Some((Boundary::LambdaMin, settings.lambda_min))
        } else if l_new >= settings.lambda_max {
            Some((Boundary::LambdaMax, settings.lambda_max))
        } else {
            None
        };
        if let Some((b, lb)) = exit {
            let (x_prev, l_prev) = split(&y);
            let w = (lb - l_prev) / (l_new - l_prev);
            let guess = &x_prev + (&x_new - &x_prev) * w;
            let xb = land_on_boundary(field, &guess, lb, settings).unwrap_or(guess);
            points.push(point_at(field, &xb, lb));
            return Ok(Curve { points, turns, start: start_boundary, end: Some(b) });
        }
        points.push(point_at(field, &x_new, l_new));
        if x_new.norm() > settings.max_norm {
            return Ok(Curve { points, turns, start: start_boundary, end: Some(Boundary::Escape) });
        }
        y = y_new;
        t = t_new;
        clean += 1;
        if clean >= 3 {
            h = (h * 1.3).min(settings.max_step);
        }
    }
    Err(Error::Internal(format!("continuation exceeded {} steps", settings.max_steps)))
}

/// Test function sigma(x, lambda) from the bordered matrix [[J, b], [c^T, 0]];
/// it vanishes exactly where J is singular.
fn bordered_sigma(j: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Option<f64> {
    let n = j.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(j);
    m.view_mut((0, n), (n, 1)).copy_from(b);
    m.view_mut((n, 0), (1, n)).copy_from(&c.transpose());
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    m.lu().solve(&rhs).map(|s| s[n])
}

/// Newton on the augmented system F = 0, sigma = 0 from the guess (x, lambda).
pub fn polish_fold<F: Field + ?Sized>(
    field: &F,
    x: &DVector<f64>,
    lambda: f64,
    settings: &ContinuationSettings,
) -> Result<(DVector<f64>, f64)> {
    let n = field.dim();
    let j0 = field.jacobian(x, lambda);
    let svd = j0.clone().svd(true, true);
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let b: DVector<f64> = svd.u.as_ref().expect("u requested").column(imin).into_owned();
    let c: DVector<f64> = svd.v_t.as_ref().expect("v_t requested").row(imin).transpose().into_owned();
    let sigma_at = |y: &DVector<f64>| -> Option<f64> {
        let (x, l) = split(y);
        bordered_sigma(&field.jacobian(&x, l), &b, &c)
    };
    let mut y = join(x, lambda);
    for _ in 0..40 {
        let (xx, l) = split(&y);
        let f = field.value(&xx, l);
        let s = sigma_at(&y).ok_or(Error::SingularJacobian)?;
        let mut g = DVector::zeros(n + 1);
        g.rows_mut(0, n).copy_from(&f);
        g[n] = s;
        let mut a = DMatrix::zeros(n + 1, n + 1);
        a.view_mut((0, 0), (n, n)).copy_from(&field.jacobian(&xx, l));
        a.view_mut((0, n), (n, 1)).copy_from(&field.d_lambda(&xx, l));
        for i in 0..=n {
            let h = 1e-6 * (1.0 + y[i].abs());
            let mut yp = y.clone();
            yp[i] += h;
            let mut ym = y.clone();
            ym[i] -= h;
            let d = (sigma_at(&yp).ok_or(Error::SingularJacobian)? - sigma_at(&ym).ok_or(Error::SingularJacobian)?)
                / (2.0 * h);
            a[(n, i)] = d;
        }
        let dy = a.lu().solve(&(-&g)).ok_or(Error::SingularJacobian)?;
        y += &dy;
        if dy[n].abs() < settings.fold_tol * 1e-3 && dy.norm() < 1e-13 * (1.0 + y.norm()) {
            break;
        }
    }
    let (xx, l) = split(&y);
    let res = field.value(&xx, l).norm();
    if res > settings.newton_tol.max(1e-11) || !l.is_finite() {
        return Err(Error::NewtonDiverged { iterations: 40, residual: res });
    }
    Ok((xx, l))
}

/// Locate every fold on a traced curve.
pub fn locate_folds<F: Field + ?Sized>(
    field: &F,
    curve: &Curve,
    settings: &ContinuationSettings,
) -> Result<Vec<FoldEvent>> {
    curve
        .turns
        .iter()
        .map(|&i| {
            let p = &curve.points[i];
            let (x, l) = polish_fold(field, &DVector::from_vec(p.x.clone()), p.lambda, settings)?;
            let sp = spectrum(&field.jacobian(&x, l));
            let before = curve.points[i.saturating_sub(1)].index;
            let after = curve.points[(i + 2).min(curve.points.len() - 1)].index;
            Ok(FoldEvent {
                lambda: l,
                x: x.iter().copied().collect(),
                min_eigenvalue: sp.min_abs,
                index_before: before,
                index_after: after,
                method: FoldMethod::Numeric,
                plane: None,
                on_l1: false,
            })
        })
        .collect()
}

/// The first fold on a curve.
pub fn locate_fold<F: Field + ?Sized>(field: &F, curve: &Curve, settings: &ContinuationSettings) -> Result<FoldEvent> {
    locate_folds(field, curve, settings)?.into_iter().next().ok_or(Error::NoFold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CurveClass {
    /// Runs from one end of the window to the other without turning.
    Crossing { index: Option<usize> },
    FoldTerminated { folds: usize },
    Open,
}

/// Classify a curve traced across the window.
pub fn classify(curve: &Curve) -> CurveClass {
    let ends = (curve.start, curve.end);
    let opposite = matches!(
        ends,
        (Some(Boundary::LambdaMin), Some(Boundary::LambdaMax)) | (Some(Boundary::LambdaMax), Some(Boundary::LambdaMin))
    );
    if opposite && curve.turns.is_empty() {
        let i0 = curve.first().index;
        let constant = curve.points.iter().all(|p| p.index == i0);
        return CurveClass::Crossing { index: constant.then_some(i0) };
    }
    if !curve.turns.is_empty() {
        return CurveClass::FoldTerminated { folds: curve.turns.len() };
    }
    CurveClass::Open
}

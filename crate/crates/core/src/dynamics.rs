//! Gradient-flow integration on H_{k-1} and in chart planes, and the
//! connection structure of the planar dynamics.

use nalgebra::{DVector, Matrix2};
use serde::Serialize;

use crate::continuation::Field;
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::rep::{Dim, HPoint};
use crate::symbreak::{enumerate_equilibria, PlaneField, PlanarSystem, planar_zeros};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSettings {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Embedded error tolerance per step (mixed absolute/relative).
    pub tolerance: f64,
    /// Time horizon T.
    pub horizon: f64,
    /// Integration stops once |f(x)| drops below this.
    pub convergence: f64,
    /// Endpoints within this distance of an equilibrium are classified as it.
    pub classify_radius: f64,
    pub escape_radius: f64,
    pub max_steps: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            min_step: 1e-12,
            max_step: 1.0,
            tolerance: 1e-8,
            horizon: 1e3,
            convergence: 1e-8,
            classify_radius: 1e-6,
            escape_radius: 1e3,
            max_steps: 1_000_000,
        }
    }
}

impl FlowSettings {
    fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.tolerance > 0.0
            && self.horizon > 0.0
            && self.escape_radius > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent flow settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Escaped,
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

// Dormand-Prince 5(4) tableau (autonomous, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integration of x' = rhs(x), recording every accepted step.
pub fn integrate<F>(rhs: F, x0: &DVector<f64>, settings: &FlowSettings) -> Result<Trajectory>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    settings.validate()?;
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut h = settings.initial_step;
    let mut times = vec![0.0];
    let mut states = vec![x.as_slice().to_vec()];
    let mut k1 = rhs(&x);
    for _ in 0..settings.max_steps {
        if !k1.iter().all(|v| v.is_finite()) {
            return Err(Error::Flow(format!("non-finite vector field at t = {t}")));
        }
        if k1.norm() < settings.convergence {
            return Ok(Trajectory { times, states, stop: StopReason::Converged });
        }
        if x.norm() > settings.escape_radius {
            return Ok(Trajectory { times, states, stop: StopReason::Escaped });
        }
        if t >= settings.horizon {
            return Ok(Trajectory { times, states, stop: StopReason::Horizon });
        }
        h = h.min(settings.horizon - t).min(settings.max_step);
        let mut ks: Vec<DVector<f64>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for s in 1..7 {
            let mut y = x.clone();
            for (j, kj) in ks.iter().enumerate() {
                if A[s][j] != 0.0 {
                    y.axpy(h * A[s][j], kj, 1.0);
                }
            }
            ks.push(rhs(&y));
        }
        let mut x5 = x.clone();
        let mut err = DVector::zeros(x.len());
        for s in 0..7 {
            x5.axpy(h * B5[s], &ks[s], 1.0);
            err.axpy(h * (B5[s] - B4[s]), &ks[s], 1.0);
        }
        let scale = |i: usize| settings.tolerance * (1.0 + x[i].abs().max(x5[i].abs()));
        let e = (0..x.len()).map(|i| (err[i] / scale(i)).powi(2)).sum::<f64>().sqrt() / (x.len() as f64).sqrt();
        if e.is_finite() && e <= 1.0 {
            t += h;
            x = x5;
            k1 = ks.swap_remove(6);
            times.push(t);
            states.push(x.as_slice().to_vec());
        }
        let factor = if e.is_finite() { (0.9 * e.max(1e-10).powf(-0.2)).clamp(0.2, 5.0) } else { 0.2 };
        h *= factor;
        if h < settings.min_step {
            return Err(Error::Flow(format!("step underflow at t = {t}")));
        }
    }
    Err(Error::Flow(format!("no termination within {} steps", settings.max_steps)))
}

/// Distance between the S_{k-1}-orbits (permutations fixing coordinate 1) of two points.
pub fn orbit_distance(x: &HPoint, y: &HPoint) -> f64 {
    let sorted = |p: &HPoint| {
        let mut r = p.coords()[1..].to_vec();
        r.sort_by(f64::total_cmp);
        r
    };
    let (a, b) = (sorted(x), sorted(y));
    let rest: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum();
    ((x.coords()[0] - y.coords()[0]).powi(2) + rest).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownEquilibrium {
    pub point: HPoint,
    /// 1 for L_1, otherwise the plane label.
    pub plane: usize,
    pub index: Option<usize>,
}

/// One representative per S_{k-1}-orbit of equilibria. Uses `enumerate_equilibria`
/// where it applies and falls back to raw plane zeros (unperturbed families, or
/// lambda at a fold).
pub fn known_equilibria(spec: &FamilySpec, lambda: f64) -> Result<Vec<KnownEquilibrium>> {
    if spec.eta() > 0.0 {
        if let Ok(list) = enumerate_equilibria(spec, lambda) {
            return Ok(list
                .into_iter()
                .map(|o| KnownEquilibrium { point: o.point, plane: o.plane, index: Some(o.index) })
                .collect());
        }
    }
    let mut out: Vec<KnownEquilibrium> = Vec::new();
    for p in crate::symbreak::plane_range(spec) {
        let field = PlaneField::for_family(spec, p)?;
        for z in field.zeros(lambda) {
            let x = field.lift(z.as_slice());
            if out.iter().any(|e| orbit_distance(&e.point, &x) < 1e-8) {
                continue;
            }
            let sp = crate::spectrum::spectrum(&spec.jac_restricted(&x, lambda));
            let plane = if z[1].abs() < crate::symbreak::L1_TOLERANCE { 1 } else { p };
            out.push(KnownEquilibrium { point: x, plane, index: sp.is_hyperbolic().then_some(sp.index) });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowClass {
    Equilibrium { plane: usize, index: Option<usize>, distance: f64 },
    Escaped,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub trajectory: Trajectory,
    pub endpoint: HPoint,
    pub class: FlowClass,
    /// Potential along the accepted steps, for the gradient kinds.
    pub potential: Option<Vec<f64>>,
    pub potential_monotone: Option<bool>,
}

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + 1e-13 * (1.0 + w[0].abs()))
}

/// Integrates x' = F(x, lambda) from x0 and classifies the endpoint.
pub fn flow(spec: &FamilySpec, x0: &HPoint, lambda: f64, settings: &FlowSettings) -> Result<FlowResult> {
    let rhs = |x: &DVector<f64>| spec.eval(&HPoint::project(x.clone()), lambda).into_vector();
    let trajectory = integrate(rhs, x0.vector(), settings)?;
    let endpoint = HPoint::from_slice_projected(trajectory.last());
    let class = match trajectory.stop {
        StopReason::Escaped => FlowClass::Escaped,
        _ => {
            let eqs = known_equilibria(spec, lambda)?;
            eqs.iter()
                .map(|e| (e, orbit_distance(&e.point, &endpoint)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .filter(|(_, d)| *d < settings.classify_radius)
                .map_or(FlowClass::Timeout, |(e, d)| FlowClass::Equilibrium { plane: e.plane, index: e.index, distance: d })
        }
    };
    let potential = spec.is_gradient().then(|| {
        trajectory
            .states
            .iter()
            .map(|s| spec.potential(&HPoint::from_slice_projected(s), lambda).expect("gradient kind"))
            .collect::<Vec<f64>>()
    });
    let potential_monotone = potential.as_deref().map(monotone);
    Ok(FlowResult { trajectory, endpoint, class, potential, potential_monotone })
}

/// Integrates the restriction to a chart plane; `backward` reverses time.
pub fn flow_in_plane(field: &PlaneField, z0: [f64; 2], lambda: f64, backward: bool, settings: &FlowSettings) -> Result<Trajectory> {
    let s = if backward { -1.0 } else { 1.0 };
    integrate(|z| field.value(z, lambda) * s, &DVector::from_column_slice(&z0), settings)
}

/// The three invariant lines through the origin of a chart plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneLine {
    /// L_1 (v = 0), carrying c_1.
    L1,
    /// L_p, carrying c_p.
    Axis,
    /// L*_{p-1}, carrying c*_{p-1}.
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneZero {
    pub line: Option<PlaneLine>,
    pub u: f64,
    pub v: f64,
    /// Number of negative eigenvalues of the planar Jacobian.
    pub index: usize,
}

fn line_of(sys: &PlanarSystem, u: f64, v: f64) -> Option<PlaneLine> {
    let r = u.hypot(v);
    if r < 1e-12 {
        return None;
    }
    let ch = sys.chart();
    let off = |(a, b): (f64, f64)| (u * b - v * a).abs() / r;
    [(PlaneLine::L1, (1.0, 0.0)), (PlaneLine::Axis, ch.axis_direction()), (PlaneLine::Star, ch.star_direction())]
        .into_iter()
        .find(|(_, d)| off(*d) < 1e-9)
        .map(|(l, _)| l)
}

/// Nonzero equilibria of the unperturbed quadratic system in E_p.
pub fn plane_zeros(k: Dim, p: usize, lambda: f64) -> Result<Vec<PlaneZero>> {
    let sys = PlanarSystem::new(k, p, 0.0, None)?;
    Ok(planar_zeros(&sys, lambda)
        .into_iter()
        .filter(|z| z.u.hypot(z.v) > 1e-12)
        .map(|z| {
            let j = sys.jac(z.u, z.v, lambda);
            let index = j.symmetric_eigenvalues().iter().filter(|&&m| m < 0.0).count();
            PlaneZero { line: line_of(&sys, z.u, z.v), u: z.u, v: z.v, index }
        })
        .collect())
}

fn eigvecs(j: &Matrix2<f64>) -> Vec<(f64, [f64; 2])> {
    let e = nalgebra::SymmetricEigen::new((j + j.transpose()) * 0.5);
    (0..2).map(|i| (e.eigenvalues[i], [e.eigenvectors[(0, i)], e.eigenvectors[(1, i)]])).collect()
}


/// Where a planar trajectory ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlaneEnd {
    Zero { line: Option<PlaneLine> },
    Origin,
    Escaped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifoldBranch {
    /// The zero the branch leaves (forward in its own time direction).
    pub from: Option<PlaneLine>,
    /// Sign of the perturbation along the eigendirection.
    pub sign: f64,
    pub end: PlaneEnd,
}

const PERTURBATION: f64 = 1e-4;

fn flow_from(
    field: &PlaneField,
    zeros: &[PlaneZero],
    start: [f64; 2],
    lambda: f64,
    backward: bool,
    settings: &FlowSettings,
) -> Result<PlaneEnd> {
    let tr = flow_in_plane(field, start, lambda, backward, settings)?;
    let end = tr.last();
    if tr.stop == StopReason::Escaped {
        return Ok(PlaneEnd::Escaped);
    }
    if end[0].hypot(end[1]) < settings.classify_radius {
        return Ok(PlaneEnd::Origin);
    }
    zeros
        .iter()
        .find(|z| (z.u - end[0]).hypot(z.v - end[1]) < settings.classify_radius)
        .map(|z| PlaneEnd::Zero { line: z.line })
        .ok_or_else(|| Error::Flow("flow timeout before reaching an equilibrium".into()))
}

/// Branches of the one-dimensional stable (`stable = true`) or unstable
/// manifold of a zero, each followed in the time direction that leaves the zero.
fn manifold_branches(
    field: &PlaneField,
    sys: &PlanarSystem,
    zeros: &[PlaneZero],
    z: &PlaneZero,
    lambda: f64,
    stable: bool,
    settings: &FlowSettings,
) -> Result<Vec<ManifoldBranch>> {
    let radius = z.u.hypot(z.v);
    let mut out = Vec::new();
    for (mu, dir) in eigvecs(&sys.jac(z.u, z.v, lambda)) {
        if (mu < 0.0) != stable {
            continue;
        }
        for sign in [1.0, -1.0] {
            let d = sign * PERTURBATION * radius;
            let start = [z.u + d * dir[0], z.v + d * dir[1]];
            let end = flow_from(field, zeros, start, lambda, stable, settings)?;
            out.push(ManifoldBranch { from: z.line, sign, end });
        }
    }
    Ok(out)
}

fn plane_settings(zeros: &[PlaneZero], escape_factor: f64) -> FlowSettings {
    let radius = zeros.iter().map(|z| z.u.hypot(z.v)).fold(0.0, f64::max);
    FlowSettings { escape_radius: escape_factor * radius, classify_radius: 1e-6 * radius.max(1.0), ..FlowSettings::default() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionReport {
    pub k: usize,
    pub p: usize,
    pub lambda: f64,
    /// lambda > 0: the connections run from c_1 and c*_{p-1} into c_p.
    pub reversed: bool,
    pub zeros: Vec<PlaneZero>,
    /// Stable (lambda < 0) or unstable (lambda > 0) manifolds of c_1 and c*_{p-1}.
    pub branches: Vec<ManifoldBranch>,
    pub to_c1: bool,
    pub to_star: bool,
}

impl ConnectionReport {
    pub fn found(&self) -> bool {
        self.to_c1 && self.to_star
    }
}

/// Connections in E_p between c_p and the saddles c_1, c*_{p-1}. For lambda < 0
/// c_p is a source and the stable manifold of each saddle is traced back into it;
/// for lambda > 0 everything reverses.
pub fn connection_check(k: Dim, p: usize, lambda: f64) -> Result<ConnectionReport> {
    if !(2..=k.ell()).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} outside 2..={}", k.ell())));
    }
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    let sys = PlanarSystem::new(k, p, 0.0, None)?;
    let field = PlaneField::Planar(sys.clone());
    let zeros = plane_zeros(k, p, lambda)?;
    let reversed = lambda > 0.0;
    let settings = plane_settings(&zeros, 10.0);
    let mut branches = Vec::new();
    for z in zeros.iter().filter(|z| matches!(z.line, Some(PlaneLine::L1 | PlaneLine::Star))) {
        branches.extend(manifold_branches(&field, &sys, &zeros, z, lambda, !reversed, &settings)?);
    }
    let reaches = |from: PlaneLine| {
        branches
            .iter()
            .any(|b| b.from == Some(from) && b.end == PlaneEnd::Zero { line: Some(PlaneLine::Axis) })
    };
    let (to_c1, to_star) = (reaches(PlaneLine::L1), reaches(PlaneLine::Star));
    Ok(ConnectionReport { k: k.k(), p, lambda, reversed, zeros, branches, to_c1, to_star })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FellReport {
    pub k: usize,
    pub lambda: f64,
    pub zeros: Vec<PlaneZero>,
    /// Every zero has in-plane index 1.
    pub index_one: bool,
    pub branches: Vec<ManifoldBranch>,
    /// No unstable branch ends at another nonzero zero: each leaves the ball of
    /// radius 3 max|zero| or falls into the origin.
    pub no_connections: bool,
}

impl FellReport {
    pub fn ok(&self) -> bool {
        self.index_one && self.no_connections
    }
}

/// In-plane indices and the escape proxy for the three nonzero zeros in F_ell.
pub fn fell_index_check(k: Dim, lambda: f64) -> Result<FellReport> {
    if !k.is_odd() {
        return Err(Error::InvalidArgument("F_ell needs odd k".into()));
    }
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument("lambda must be nonzero".into()));
    }
    let p = k.ell() + 1;
    let sys = PlanarSystem::new(k, p, 0.0, None)?;
    let field = PlaneField::Planar(sys.clone());
    let zeros = plane_zeros(k, p, lambda)?;
    let index_one = zeros.len() == 3 && zeros.iter().all(|z| z.index == 1);
    let settings = plane_settings(&zeros, 3.0);
    let mut branches = Vec::new();
    for z in &zeros {
        branches.extend(manifold_branches(&field, &sys, &zeros, z, lambda, false, &settings)?);
    }
    let no_connections = branches.iter().all(|b| matches!(b.end, PlaneEnd::Escaped | PlaneEnd::Origin));
    Ok(FellReport { k: k.k(), lambda, zeros, index_one, branches, no_connections })
}

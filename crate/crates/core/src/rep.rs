//! The standard representation of S_k on the sum-zero hyperplane H_{k-1}.
//!
//! Points are stored in ambient coordinates of R^k and re-projected onto the
//! hyperplane after arithmetic, so the group action stays a plain coordinate
//! permutation. Coordinates are indexed from 0.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{out_of_range, Error, Result};

/// Absolute tolerance on the coordinate sum of an `HPoint`.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Coordinates closer than this are merged into one isotropy block.
pub const BLOCK_MERGE_TOLERANCE: f64 = 1e-9;
/// Largest k for which `enumerate_axes` lists axes explicitly.
pub const MAX_EXPLICIT_AXES_K: usize = 24;
/// Largest k an `AxisRep` bitmask can hold.
pub const MAX_AXIS_K: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Dim {
    k: usize,
}

impl Dim {
    pub fn new(k: usize) -> Result<Self> {
        if k < 3 {
            return out_of_range("k", k as f64, "k >= 3");
        }
        Ok(Self { k })
    }

    pub fn k(self) -> usize {
        self.k
    }

    /// ell = floor(k/2).
    pub fn ell(self) -> usize {
        self.k / 2
    }

    pub fn is_odd(self) -> bool {
        self.k % 2 == 1
    }

    /// Largest plane label: ell + 1 for odd k (the plane F_ell), ell for even k.
    pub fn plane_limit(self) -> usize {
        if self.is_odd() {
            self.ell() + 1
        } else {
            self.ell()
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={}", self.k)
    }
}

/// A point of H_{k-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint(DVector<f64>);

impl HPoint {
    /// Checked constructor; the coordinates must already sum to zero.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return out_of_range("k", coords.len() as f64, "k >= 3");
        }
        let sum: f64 = coords.iter().sum();
        let scale = coords.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        if sum.abs() > SUM_TOLERANCE * scale {
            return Err(Error::NotInHyperplane { sum });
        }
        Ok(Self::project(DVector::from_vec(coords)))
    }

    /// Orthogonal projection of an arbitrary vector onto H_{k-1}.
    pub fn project(mut v: DVector<f64>) -> Self {
        let mean = v.mean();
        v.add_scalar_mut(-mean);
        Self(v)
    }

    pub fn from_slice_projected(coords: &[f64]) -> Self {
        Self::project(DVector::from_column_slice(coords))
    }

    pub fn zero(k: usize) -> Self {
        Self(DVector::zeros(k))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn dot(&self, other: &HPoint) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn scale(&self, s: f64) -> HPoint {
        HPoint(&self.0 * s)
    }

    pub fn normalized(&self) -> Result<HPoint> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the origin".into()));
        }
        Ok(self.scale(1.0 / n))
    }

    pub fn distance(&self, other: &HPoint) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

impl Serialize for HPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl Add for &HPoint {
    type Output = HPoint;
    fn add(self, rhs: &HPoint) -> HPoint {
        HPoint::project(&self.0 + &rhs.0)
    }
}

impl Sub for &HPoint {
    type Output = HPoint;
    fn sub(self, rhs: &HPoint) -> HPoint {
        HPoint::project(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &HPoint {
    type Output = HPoint;
    fn mul(self, rhs: f64) -> HPoint {
        self.scale(rhs)
    }
}

impl Neg for &HPoint {
    type Output = HPoint;
    fn neg(self) -> HPoint {
        HPoint(-&self.0)
    }
}

/// A permutation of {0, .., k-1}; `images[i]` is the image of i.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || seen[i] {
                return Err(Error::InvalidArgument(format!("{images:?} is not a bijection")));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(k: usize) -> Self {
        Self { images: (0..k).collect() }
    }

    pub fn transposition(k: usize, i: usize, j: usize) -> Result<Self> {
        if i >= k || j >= k {
            return Err(Error::InvalidArgument(format!("transposition ({i} {j}) out of range for k={k}")));
        }
        let mut images: Vec<usize> = (0..k).collect();
        images.swap(i, j);
        Ok(Self { images })
    }

    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (0..k).collect();
        images.shuffle(rng);
        Self { images }
    }

    /// A random permutation fixing coordinate 0 (an element of S_{k-1}).
    pub fn random_fixing_first<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (0..k).collect();
        images[1..].shuffle(rng);
        Self { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    pub fn compose(&self, other: &Permutation) -> Self {
        Self {
            images: other.images.iter().map(|&j| self.images[j]).collect(),
        }
    }
}

/// (sigma x)_i = x_{sigma^{-1}(i)}.
pub fn act(sigma: &Permutation, x: &HPoint) -> HPoint {
    assert_eq!(sigma.len(), x.k(), "permutation and point dimensions differ");
    let mut y = DVector::zeros(x.k());
    for (j, &xj) in x.coords().iter().enumerate() {
        y[sigma.image(j)] = xj;
    }
    HPoint(y)
}

/// The unit vector eps_p: value q/sqrt(pqk) on the first p coordinates, -p/sqrt(pqk) on the rest.
pub fn eps(k: Dim, p: usize) -> Result<HPoint> {
    let k = k.k();
    if p < 1 || p >= k {
        return out_of_range("p", p as f64, format!("[1, {}]", k - 1));
    }
    let q = k - p;
    let n = ((p * q * k) as f64).sqrt();
    let mut v = DVector::from_element(k, -(p as f64) / n);
    for i in 0..p {
        v[i] = q as f64 / n;
    }
    Ok(HPoint(v))
}

/// Unit vector with the positive value on the coordinates in `positive`.
pub fn eps_on(k: usize, positive: &[usize]) -> Result<HPoint> {
    let p = positive.len();
    if p < 1 || p >= k || positive.iter().any(|&i| i >= k) {
        return Err(Error::InvalidArgument(format!("{positive:?} is not a proper subset of 0..{k}")));
    }
    let q = k - p;
    let n = ((p * q * k) as f64).sqrt();
    let mut v = DVector::from_element(k, -(p as f64) / n);
    for &i in positive {
        v[i] = q as f64 / n;
    }
    Ok(HPoint(v))
}

/// An unoriented axis, stored by the bitmask of its smaller positive block.
///
/// When both blocks have size k/2 the block containing coordinate 0 is kept.
/// `orientation` records whether the original direction was the canonical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxisRep {
    k: usize,
    mask: u64,
    orientation: i8,
}

impl AxisRep {
    pub fn new(k: usize, positive: &[usize]) -> Result<Self> {
        if k > MAX_AXIS_K {
            return Err(Error::TooLarge { k });
        }
        let mut mask = 0u64;
        for &i in positive {
            if i >= k {
                return Err(Error::InvalidArgument(format!("coordinate {i} out of range for k={k}")));
            }
            mask |= 1 << i;
        }
        Self::from_mask(k, mask)
    }

    pub fn from_mask(k: usize, mask: u64) -> Result<Self> {
        if k > MAX_AXIS_K || k < 3 {
            return out_of_range("k", k as f64, format!("[3, {MAX_AXIS_K}]"));
        }
        let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        if mask & !full != 0 || mask == 0 || mask == full {
            return Err(Error::InvalidArgument("positive set must be a nonempty proper subset".into()));
        }
        let p = mask.count_ones() as usize;
        let flip = 2 * p > k || (2 * p == k && mask & 1 == 0);
        Ok(if flip {
            Self { k, mask: full & !mask, orientation: -1 }
        } else {
            Self { k, mask, orientation: 1 }
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Size of the canonical positive block, in [1, ell].
    pub fn p(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    /// The same unoriented axis with the canonical orientation.
    pub fn canonical(&self) -> Self {
        Self { orientation: 1, ..*self }
    }

    pub fn positive_set(&self) -> Vec<usize> {
        let block = if self.orientation > 0 { self.mask } else { !self.mask };
        (0..self.k).filter(|&i| block >> i & 1 == 1).collect()
    }

    pub fn canonical_set(&self) -> Vec<usize> {
        (0..self.k).filter(|&i| self.mask >> i & 1 == 1).collect()
    }

    /// Unit direction vector carrying the stored orientation.
    pub fn direction(&self) -> HPoint {
        eps_on(self.k, &self.positive_set()).expect("axis mask is a proper subset")
    }

    pub fn same_line(&self, other: &AxisRep) -> bool {
        self.k == other.k && self.mask == other.mask
    }
}

impl Serialize for AxisRep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("AxisRep", 3)?;
        st.serialize_field("p", &self.p())?;
        st.serialize_field("positive_set", &self.positive_set())?;
        st.serialize_field("orientation", &self.orientation)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxisClass {
    pub p: usize,
    pub count: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisCatalog {
    pub k: usize,
    pub classes: Vec<AxisClass>,
    pub total: u128,
    /// Explicit axes, grouped by class; `None` when k exceeds the enumeration guard.
    pub axes: Option<Vec<AxisRep>>,
}

pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of unoriented axes of class p.
pub fn axis_class_size(k: Dim, p: usize) -> u128 {
    let c = binomial(k.k(), p);
    if !k.is_odd() && p == k.ell() {
        c / 2
    } else {
        c
    }
}

/// All 2^{k-1} - 1 unoriented axes, by class p = 1..=ell, each class in
/// lexicographic order of its canonical block.
pub fn enumerate_axes(k: Dim) -> AxisCatalog {
    let classes: Vec<AxisClass> = (1..=k.ell())
        .map(|p| AxisClass { p, count: axis_class_size(k, p) })
        .collect();
    let total = classes.iter().map(|c| c.count).sum();
    let axes = (k.k() <= MAX_EXPLICIT_AXES_K).then(|| {
        let mut out = Vec::with_capacity(total as usize);
        for p in 1..=k.ell() {
            for_each_combination(k.k(), p, |set| {
                if 2 * p == k.k() && set[0] != 0 {
                    return;
                }
                out.push(AxisRep::new(k.k(), set).expect("valid subset"));
            });
        }
        out
    });
    AxisCatalog { k: k.k(), classes, total, axes }
}

fn for_each_combination(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        f(&idx);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - r {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Isotropy block signature of a point: sizes of equal-coordinate blocks in
/// decreasing order of value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropySignature {
    pub blocks: Vec<usize>,
    /// Largest gap between two coordinates that were merged into one block.
    pub merge_distance: f64,
}

pub fn isotropy_class(x: &HPoint) -> Result<IsotropySignature> {
    if x.norm() <= BLOCK_MERGE_TOLERANCE {
        return Err(Error::InvalidArgument("isotropy of the origin is all of S_k".into()));
    }
    let mut c: Vec<f64> = x.coords().to_vec();
    c.sort_by(|a, b| b.total_cmp(a));
    let mut blocks = vec![1usize];
    let mut merge_distance = 0.0_f64;
    for w in c.windows(2) {
        let gap = w[0] - w[1];
        if gap <= BLOCK_MERGE_TOLERANCE {
            *blocks.last_mut().unwrap() += 1;
            merge_distance = merge_distance.max(gap);
        } else {
            blocks.push(1);
        }
    }
    Ok(IsotropySignature { blocks, merge_distance })
}

/// Isometric chart (u, v) -> u*basis_u + v*basis_v onto the plane E_p
/// (or F_ell when p = ell + 1 and k is odd).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneChart {
    pub k: usize,
    pub p: usize,
    pub basis_u: HPoint,
    pub basis_v: HPoint,
}

impl PlaneChart {
    pub fn map(&self, u: f64, v: f64) -> HPoint {
        HPoint::project(self.basis_u.vector() * u + self.basis_v.vector() * v)
    }

    /// Orthogonal projection onto chart coordinates.
    pub fn pull(&self, x: &HPoint) -> (f64, f64) {
        (x.dot(&self.basis_u), x.dot(&self.basis_v))
    }

    /// k x 2 matrix with the basis vectors as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&[self.basis_u.vector().clone(), self.basis_v.vector().clone()])
    }

    pub fn is_fell(&self) -> bool {
        self.k % 2 == 1 && self.p == self.k / 2 + 1
    }

    /// In-chart slope m_p of the axis L_p.
    pub fn slope_axis(&self) -> f64 {
        let (k, p) = (self.k as f64, self.p as f64);
        (k * (p - 1.0) / (k - p)).sqrt()
    }

    /// In-chart slope m*_{p-1} of the axis L*_{p-1}.
    pub fn slope_star(&self) -> f64 {
        let (k, p) = (self.k as f64, self.p as f64);
        -((k - p) * k / (p - 1.0)).sqrt()
    }

    /// Unit direction of L_p in the chart (positive v component).
    pub fn axis_direction(&self) -> (f64, f64) {
        unit2(1.0, self.slope_axis())
    }

    /// Unit direction of L*_{p-1} in the chart (negative u, positive v).
    pub fn star_direction(&self) -> (f64, f64) {
        unit2(-1.0, -self.slope_star())
    }

    /// The eps_p direction of L_p, as an ambient point.
    pub fn eps_p(&self) -> HPoint {
        let (a, b) = self.axis_direction();
        self.map(a, b)
    }

    /// The eps*_{p-1} direction of L*_{p-1}: eps_{p-1} with coordinates 0 and p-1 swapped.
    pub fn eps_star(&self) -> HPoint {
        let (a, b) = self.star_direction();
        self.map(a, b)
    }
}

fn unit2(a: f64, b: f64) -> (f64, f64) {
    let n = a.hypot(b);
    (a / n, b / n)
}

pub fn plane_chart(k: Dim, p: usize) -> Result<PlaneChart> {
    let lim = k.plane_limit();
    if p < 2 || p > lim {
        return out_of_range("p", p as f64, format!("[2, {lim}]"));
    }
    let kk = k.k();
    let q = kk - p;
    let nu = ((kk * (kk - 1)) as f64).sqrt();
    let mut bu = DVector::from_element(kk, -1.0 / nu);
    bu[0] = (kk - 1) as f64 / nu;
    let nv = (((kk - 1) * (p - 1) * q) as f64).sqrt();
    let mut bv = DVector::zeros(kk);
    for i in 1..p {
        bv[i] = q as f64 / nv;
    }
    for i in p..kk {
        bv[i] = -((p - 1) as f64) / nv;
    }
    Ok(PlaneChart {
        k: kk,
        p,
        basis_u: HPoint(bu),
        basis_v: HPoint(bv),
    })
}

/// arccos of the inner product of the oriented unit directions.
pub fn axis_angle(a: &AxisRep, b: &AxisRep) -> f64 {
    a.direction().dot(&b.direction()).clamp(-1.0, 1.0).acos()
}

/// Closed-form cosines of the three axis pairs inside E_p:
/// (L_1, L_p), (L*_{p-1}, L_p), (L*_{p-1}, L_1).
pub fn plane_axis_cosines(k: Dim, p: usize) -> Result<[f64; 3]> {
    let kk = k.k();
    if p < 2 || p >= kk {
        return out_of_range("p", p as f64, format!("[2, {}]", kk - 1));
    }
    let (k, p) = (kk as f64, p as f64);
    let q = k - p;
    Ok([
        (q / ((k - 1.0) * p)).sqrt(),
        (q * (p - 1.0) / ((q + 1.0) * p)).sqrt(),
        -((p - 1.0) / ((k - 1.0) * (q + 1.0))).sqrt(),
    ])
}

/// Number of distinct planes in the S_{k-1}-orbit of E_p.
///
/// This is C(k-1, p-1), except for F_ell (k odd, p = ell + 1) where the
/// transposition-type element swapping the two blocks of size ell maps the
/// plane to itself, so the orbit has C(k-1, ell)/2 planes.
pub fn orbit_plane_count(k: Dim, p: usize) -> Result<u128> {
    let lim = k.plane_limit();
    if p < 2 || p > lim {
        return out_of_range("p", p as f64, format!("[2, {lim}]"));
    }
    let c = binomial(k.k() - 1, p - 1);
    Ok(if p - 1 == k.k() - p { c / 2 } else { c })
}

/// Orthonormal basis of H_{k-1} (Helmert columns), k x (k-1).
pub fn hyperplane_basis(k: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(k, k - 1);
    for j in 0..k - 1 {
        let m = (j + 1) as f64;
        let n = (m * (m + 1.0)).sqrt();
        for i in 0..=j {
            b[(i, j)] = 1.0 / n;
        }
        b[(j + 1, j)] = -m / n;
    }
    b
}

/// Orthonormal basis (k x (k-2)) of the tangent space at the unit vector `u`
/// of the sphere in H_{k-1}.
pub fn tangent_basis(u: &HPoint) -> DMatrix<f64> {
    let k = u.k();
    let h = hyperplane_basis(k);
    let mut cols: Vec<DVector<f64>> = vec![u.vector().normalize()];
    for j in 0..k - 1 {
        let mut c = h.column(j).into_owned();
        for _ in 0..2 {
            for b in &cols {
                let d = b.dot(&c);
                c -= b * d;
            }
        }
        let n = c.norm();
        if n > 1e-6 {
            cols.push(c / n);
        }
        if cols.len() == k - 1 {
            break;
        }
    }
    DMatrix::from_columns(&cols[1..])
}

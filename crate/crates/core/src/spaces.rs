//! The five symmetric-space configurations and their orthonormal bases.
//!
//! Each [`SpaceSpec`] bundles the ambient matrix group `G`, the stabilizer
//! `K`, the base map used to build invariant functions, the invariant form
//! on the Lie algebra, and an orthonormal basis of the complement of the
//! stabilizer algebra. Bases for `slr-so` and `sus-sp` are the hand-written
//! families (also available exactly, with `1/sqrt 2` factors carried as a
//! squared scale). Bases for the other spaces are produced by Gram-Schmidt.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{crat_i, rat, ComplexRational, Rational, Scalar, C64};

/// Identifier of a supported `(G, K)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceId {
    /// `GL+(n,R) / SO(n)`, i.e. `SL(n,R)/SO(n)` times a line.
    SlrSo,
    /// `U*(2n) / Sp(n)`, i.e. `SU*(2n)/Sp(n)` times a line.
    SusSp,
    /// `SU(n) / SO(n)`.
    SuSo,
    /// `SU(2n) / Sp(n)`.
    SuSp,
    /// `SL(n,C) / SU(n)`.
    SlcSu,
}

impl SpaceId {
    pub const ALL: [SpaceId; 5] = [
        SpaceId::SlrSo,
        SpaceId::SusSp,
        SpaceId::SuSo,
        SpaceId::SuSp,
        SpaceId::SlcSu,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpaceId::SlrSo => "slr-so",
            SpaceId::SusSp => "sus-sp",
            SpaceId::SuSo => "su-so",
            SpaceId::SuSp => "su-sp",
            SpaceId::SlcSu => "slc-su",
        }
    }

    pub fn group_name(self, n: usize) -> String {
        match self {
            SpaceId::SlrSo => format!("GL+({n},R)"),
            SpaceId::SusSp => format!("U*({})", 2 * n),
            SpaceId::SuSo => format!("SU({n})"),
            SpaceId::SuSp => format!("SU({})", 2 * n),
            SpaceId::SlcSu => format!("SL({n},C)"),
        }
    }

    pub fn stabilizer_name(self, n: usize) -> String {
        match self {
            SpaceId::SlrSo | SpaceId::SuSo => format!("SO({n})"),
            SpaceId::SusSp | SpaceId::SuSp => format!("Sp({n})"),
            SpaceId::SlcSu => format!("SU({n})"),
        }
    }

    pub fn ambient_dim(self, n: usize) -> usize {
        match self {
            SpaceId::SusSp | SpaceId::SuSp => 2 * n,
            _ => n,
        }
    }

    pub fn base_map_variant(self) -> BaseMapVariant {
        match self {
            SpaceId::SlrSo | SpaceId::SuSo => BaseMapVariant::XXt,
            SpaceId::SusSp | SpaceId::SlcSu => BaseMapVariant::XXstar,
            SpaceId::SuSp => BaseMapVariant::XJtXtJ,
        }
    }

    pub fn form(self) -> Form {
        match self {
            SpaceId::SlrSo => Form::TraceXY,
            SpaceId::SusSp | SpaceId::SlcSu => Form::ReTraceXY,
            SpaceId::SuSo | SpaceId::SuSp => Form::MinusReTraceXY,
        }
    }

    /// Dimension of the complement of the stabilizer algebra.
    pub fn p_dim(self, n: usize) -> usize {
        match self {
            SpaceId::SlrSo => n * (n + 1) / 2,
            SpaceId::SusSp => 2 * n * n - n,
            SpaceId::SuSo => n * (n + 1) / 2 - 1,
            SpaceId::SuSp => 2 * n * n - n - 1,
            SpaceId::SlcSu => n * n - 1,
        }
    }

    pub fn min_n(self) -> usize {
        match self {
            SpaceId::SuSo | SpaceId::SlcSu => 2,
            _ => 1,
        }
    }

    /// Compact duals of the non-compact spaces.
    pub fn is_compact(self) -> bool {
        matches!(self, SpaceId::SuSo | SpaceId::SuSp)
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpaceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpaceId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown space '{s}' (expected one of slr-so, sus-sp, su-so, su-sp, slc-su)"
                ))
            })
    }
}

/// How the matrix-valued invariant `Phi` is built from a group element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseMapVariant {
    /// `x -> x x^t`
    XXt,
    /// `x -> x x^*`
    XXstar,
    /// `x -> x J^t x^t J`
    XJtXtJ,
}

/// Invariant bilinear form on the Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    TraceXY,
    ReTraceXY,
    MinusReTraceXY,
}

impl Form {
    pub fn eval(self, a: &Mat<C64>, b: &Mat<C64>) -> f64 {
        let n = a.rows();
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                tr += a[(i, k)] * b[(k, i)];
            }
        }
        match self {
            // Used only on real matrices, where the trace is real.
            Form::TraceXY | Form::ReTraceXY => tr.re,
            Form::MinusReTraceXY => -tr.re,
        }
    }
}

/// A basis element `sqrt(scale_sq) * mat`, keeping `1/sqrt 2` factors exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMat<T> {
    pub mat: Mat<T>,
    pub scale_sq: Rational,
}

impl<T: Scalar> ScaledMat<T> {
    pub fn unit(mat: Mat<T>) -> Self {
        Self {
            mat,
            scale_sq: rat(1, 1),
        }
    }
}

impl ScaledMat<Rational> {
    pub fn to_c64(&self) -> Mat<C64> {
        let s = crate::scalar::rational_to_f64(&self.scale_sq).sqrt();
        self.mat.to_f64().to_c64().scale_real(s)
    }
}

impl ScaledMat<ComplexRational> {
    pub fn to_c64(&self) -> Mat<C64> {
        let s = crate::scalar::rational_to_f64(&self.scale_sq).sqrt();
        self.mat.to_c64().scale_real(s)
    }
}

/// `E_kl`, `D_k`, `X_kl`, `Y_kl` of size `n`, with 1-based indices.
#[derive(Debug, Clone, Copy)]
pub struct Elementary {
    pub n: usize,
}

impl Elementary {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    fn check(&self, k: usize, l: usize, strict: bool) -> Result<()> {
        let in_range = |i: usize| (1..=self.n).contains(&i);
        if !in_range(k) || !in_range(l) || (strict && k >= l) {
            let rule = if strict {
                "1 <= k < l <= n"
            } else {
                "1 <= k,l <= n"
            };
            return Err(Error::IndexOutOfRange(format!(
                "(k,l)=({k},{l}) with n={} violates {rule}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn e<T: Scalar>(&self, k: usize, l: usize) -> Result<Mat<T>> {
        self.check(k, l, false)?;
        Ok(Mat::from_fn(self.n, self.n, |i, j| {
            if i + 1 == k && j + 1 == l {
                T::one()
            } else {
                T::zero()
            }
        }))
    }

    pub fn d<T: Scalar>(&self, k: usize) -> Result<Mat<T>> {
        self.e(k, k)
    }

    /// `X_kl = (E_kl + E_lk)/sqrt 2`, exact form.
    pub fn x_exact<T: Scalar>(&self, k: usize, l: usize) -> Result<ScaledMat<T>> {
        self.check(k, l, true)?;
        Ok(ScaledMat {
            mat: &self.e::<T>(k, l)? + &self.e::<T>(l, k)?,
            scale_sq: rat(1, 2),
        })
    }

    /// `Y_kl = (E_kl - E_lk)/sqrt 2`, exact form.
    pub fn y_exact<T: Scalar>(&self, k: usize, l: usize) -> Result<ScaledMat<T>> {
        self.check(k, l, true)?;
        Ok(ScaledMat {
            mat: &self.e::<T>(k, l)? - &self.e::<T>(l, k)?,
            scale_sq: rat(1, 2),
        })
    }

    pub fn x(&self, k: usize, l: usize) -> Result<Mat<f64>> {
        Ok(self.x_exact::<Rational>(k, l)?.to_c64().map(|z| z.re))
    }

    pub fn y(&self, k: usize, l: usize) -> Result<Mat<f64>> {
        Ok(self.y_exact::<Rational>(k, l)?.to_c64().map(|z| z.re))
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (1..=n).flat_map(move |k| (k + 1..=n).map(move |l| (k, l)))
    }
}

/// Symplectic matrix `J = [[0, I], [-I, 0]]` of size `2n`.
pub fn symplectic_j(n: usize) -> Mat<C64> {
    let i = Mat::<C64>::identity(n);
    let z = Mat::<C64>::zeros(n, n);
    Mat::block2(&z, &i, &(-&i), &z).expect("square blocks")
}

/// `{D_k} ∪ {X_kl}`: orthonormal basis of symmetric matrices under `trace XY`.
pub fn exact_symmetric_basis(n: usize) -> Vec<ScaledMat<Rational>> {
    let el = Elementary::new(n);
    let mut out: Vec<_> = (1..=n)
        .map(|k| ScaledMat::unit(el.d(k).expect("k in range")))
        .collect();
    out.extend(el.pairs().map(|(k, l)| el.x_exact(k, l).expect("k < l")));
    out
}

/// `{Y_kl}`: orthonormal basis of `so(n)` (up to sign of the form).
pub fn exact_skew_basis(n: usize) -> Vec<ScaledMat<Rational>> {
    let el = Elementary::new(n);
    el.pairs()
        .map(|(k, l)| el.y_exact(k, l).expect("k < l"))
        .collect()
}

/// A hand-written basis element of the quaternionic complement, tagged with
/// the family (1..=5) it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionicElement {
    pub family: u8,
    pub element: ScaledMat<ComplexRational>,
}

/// The five families `B1..B5` spanning the complement of `sp(n)` in `u*(2n)`.
pub fn exact_quaternionic_basis(n: usize) -> Vec<QuaternionicElement> {
    let el = Elementary::new(n);
    let lift = |m: &Mat<Rational>| m.map(crate::scalar::rational_to_complex);
    let i = crat_i();
    let zero = Mat::<ComplexRational>::zeros(n, n);
    fn block(
        a: &Mat<ComplexRational>,
        b: &Mat<ComplexRational>,
        c: &Mat<ComplexRational>,
        d: &Mat<ComplexRational>,
    ) -> Mat<ComplexRational> {
        Mat::block2(a, b, c, d).expect("n x n blocks")
    }
    let mut out = Vec::new();
    for k in 1..=n {
        let d = lift(&el.d(k).expect("k in range"));
        out.push(QuaternionicElement {
            family: 1,
            element: ScaledMat {
                mat: block(&d, &zero, &zero, &d),
                scale_sq: rat(1, 2),
            },
        });
    }
    let pairs: Vec<_> = el.pairs().collect();
    // Each X_kl, Y_kl already carries 1/sqrt 2, so families 2..5 have scale^2 = 1/4.
    let quarter = rat(1, 4);
    for &(k, l) in &pairs {
        let x = lift(&el.x_exact::<Rational>(k, l).unwrap().mat);
        out.push(QuaternionicElement {
            family: 2,
            element: ScaledMat {
                mat: block(&x, &zero, &zero, &x),
                scale_sq: quarter.clone(),
            },
        });
    }
    for &(k, l) in &pairs {
        let y = lift(&el.y_exact::<Rational>(k, l).unwrap().mat);
        let iy = y.scale(&i);
        out.push(QuaternionicElement {
            family: 3,
            element: ScaledMat {
                mat: block(&iy, &zero, &zero, &(-&iy)),
                scale_sq: quarter.clone(),
            },
        });
    }
    for &(k, l) in &pairs {
        let y = lift(&el.y_exact::<Rational>(k, l).unwrap().mat);
        out.push(QuaternionicElement {
            family: 4,
            element: ScaledMat {
                mat: block(&zero, &y, &(-&y), &zero),
                scale_sq: quarter.clone(),
            },
        });
    }
    for &(k, l) in &pairs {
        let y = lift(&el.y_exact::<Rational>(k, l).unwrap().mat);
        let iy = y.scale(&i);
        out.push(QuaternionicElement {
            family: 5,
            element: ScaledMat {
                mat: block(&zero, &iy, &iy, &zero),
                scale_sq: quarter.clone(),
            },
        });
    }
    out
}

/// Ordered orthonormal basis of the complement, with the form it is orthonormal for.
#[derive(Debug, Clone)]
pub struct PBasis {
    pub elements: Vec<Mat<C64>>,
    pub form: Form,
}

impl PBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.elements
            .iter()
            .map(|a| self.elements.iter().map(|b| self.form.eval(a, b)).collect())
            .collect()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0f64;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Basis `Z'_i = sum_j q_ij Z_j` for a real orthogonal `q`.
    pub fn rotated(&self, q: &Mat<f64>) -> Result<PBasis> {
        if q.shape() != (self.len(), self.len()) {
            return Err(Error::DimensionMismatch {
                op: "PBasis::rotated",
                left: q.shape(),
                right: (self.len(), self.len()),
            });
        }
        let dim = self.elements.first().map_or(0, Mat::rows);
        let elements = (0..self.len())
            .map(|i| {
                let mut acc = Mat::<C64>::zeros(dim, dim);
                for (j, z) in self.elements.iter().enumerate() {
                    acc = &acc + &z.scale_real(q[(i, j)]);
                }
                acc
            })
            .collect();
        Ok(PBasis {
            elements,
            form: self.form,
        })
    }
}

/// Modified Gram-Schmidt under `form`, dropping vectors already in the span.
pub fn gram_schmidt(spanning: &[Mat<C64>], form: Form, against: &[Mat<C64>]) -> Vec<Mat<C64>> {
    let mut out: Vec<Mat<C64>> = Vec::new();
    for v in spanning {
        let mut w = v.clone();
        // Two passes keep the result orthogonal to machine precision.
        for _ in 0..2 {
            for u in against.iter().chain(out.iter()) {
                let c = form.eval(&w, u);
                w = &w - &u.scale_real(c);
            }
        }
        let norm_sq = form.eval(&w, &w);
        if norm_sq > 1e-20 {
            out.push(w.scale_real(1.0 / norm_sq.sqrt()));
        }
    }
    out
}

fn i_times(m: &Mat<C64>) -> Mat<C64> {
    m.scale(&C64::new(0.0, 1.0))
}

type ElementarySet = (Vec<Mat<C64>>, Vec<Mat<C64>>, Vec<Mat<C64>>);

fn el_c(el: &Elementary) -> ElementarySet {
    let d = (1..=el.n)
        .map(|k| el.d::<f64>(k).unwrap().to_c64())
        .collect();
    let x = el
        .pairs()
        .map(|(k, l)| el.x(k, l).unwrap().to_c64())
        .collect();
    let y = el
        .pairs()
        .map(|(k, l)| el.y(k, l).unwrap().to_c64())
        .collect();
    (d, x, y)
}

fn traceless_diagonals(d: &[Mat<C64>]) -> Vec<Mat<C64>> {
    d.windows(2).map(|w| &w[0] - &w[1]).collect()
}

/// Spanning set of `su(m)`.
fn su_span(m: usize) -> Vec<Mat<C64>> {
    let (d, x, y) = el_c(&Elementary::new(m));
    let mut span: Vec<_> = traceless_diagonals(&d).iter().map(i_times).collect();
    span.extend(x.iter().map(i_times));
    span.extend(y);
    span
}

/// Spanning set of `sp(n) = {[[a, b], [-conj b, conj a]] : a skew-Hermitian, b symmetric}`.
fn sp_span(n: usize) -> Vec<Mat<C64>> {
    let (d, x, y) = el_c(&Elementary::new(n));
    let zero = Mat::<C64>::zeros(n, n);
    let quat = |a: &Mat<C64>, b: &Mat<C64>| {
        Mat::block2(a, b, &(-&b.conj()), &a.conj()).expect("n x n blocks")
    };
    let mut span = Vec::new();
    for a in y
        .iter()
        .cloned()
        .chain(x.iter().map(i_times))
        .chain(d.iter().map(i_times))
    {
        span.push(quat(&a, &zero));
    }
    for b in x
        .iter()
        .cloned()
        .chain(d.iter().cloned())
        .chain(x.iter().map(i_times))
        .chain(d.iter().map(i_times))
    {
        span.push(quat(&zero, &b));
    }
    span
}

struct SpaceInner {
    id: SpaceId,
    n: usize,
    basis: PBasis,
    stabilizer_algebra: Vec<Mat<C64>>,
    j: Option<Mat<C64>>,
}

/// A fully constructed symmetric-space configuration. Cheap to clone.
#[derive(Clone)]
pub struct SpaceSpec {
    inner: Arc<SpaceInner>,
}

impl fmt::Debug for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceSpec")
            .field("id", &self.inner.id)
            .field("n", &self.inner.n)
            .finish()
    }
}

impl PartialEq for SpaceSpec {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id() && self.n() == other.n()
    }
}

impl SpaceSpec {
    pub fn new(id: SpaceId, n: usize) -> Result<Self> {
        if n < id.min_n() || n > 8 {
            return Err(Error::InvalidArgument(format!(
                "{id} needs {} <= n <= 8, got n={n}",
                id.min_n()
            )));
        }
        let basis = PBasis {
            elements: build_p_basis(id, n),
            form: id.form(),
        };
        debug_assert_eq!(basis.len(), id.p_dim(n));
        let stabilizer_algebra = build_stabilizer_algebra(id, n);
        let j = matches!(id, SpaceId::SusSp | SpaceId::SuSp).then(|| symplectic_j(n));
        Ok(Self {
            inner: Arc::new(SpaceInner {
                id,
                n,
                basis,
                stabilizer_algebra,
                j,
            }),
        })
    }

    pub fn id(&self) -> SpaceId {
        self.inner.id
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.inner.id.ambient_dim(self.inner.n)
    }

    pub fn base_map_variant(&self) -> BaseMapVariant {
        self.inner.id.base_map_variant()
    }

    pub fn form(&self) -> Form {
        self.inner.id.form()
    }

    /// `J`, present for the two quaternionic spaces.
    pub fn symplectic_j(&self) -> Option<&Mat<C64>> {
        self.inner.j.as_ref()
    }

    pub fn p_basis(&self) -> &PBasis {
        &self.inner.basis
    }

    /// Orthonormal (under `-Re trace`) basis of the stabilizer algebra.
    pub fn stabilizer_algebra(&self) -> &[Mat<C64>] {
        &self.inner.stabilizer_algebra
    }

    pub fn label(&self) -> String {
        format!("{}:n={}", self.id(), self.n())
    }

    /// `sum_Z Z^2` over the stock basis.
    pub fn casimir_p_sum(&self) -> Mat<C64> {
        let m = self.ambient_dim();
        self.p_basis()
            .elements
            .iter()
            .fold(Mat::zeros(m, m), |acc, z| &acc + &(z * z))
    }

    /// Distance of `x` from the group; zero on exact members.
    pub fn group_defect(&self, x: &Mat<C64>) -> f64 {
        let m = self.ambient_dim();
        if x.shape() != (m, m) {
            return f64::INFINITY;
        }
        let Ok(det) = x.det() else {
            return f64::INFINITY;
        };
        let scale = x.max_abs().max(1.0);
        match self.id() {
            SpaceId::SlrSo => {
                if det.re <= 0.0 {
                    return f64::INFINITY;
                }
                let imag = x.data().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                imag / scale
            }
            SpaceId::SusSp => {
                let j = self.symplectic_j().expect("quaternionic space has J");
                if det.re <= 0.0 {
                    return f64::INFINITY;
                }
                let lhs = x * j;
                let rhs = j * &x.conj();
                lhs.distance(&rhs) / scale + det.im.abs() / det.norm()
            }
            SpaceId::SuSo | SpaceId::SuSp => unitary_defect(x) + (det - C64::new(1.0, 0.0)).norm(),
            SpaceId::SlcSu => (det - C64::new(1.0, 0.0)).norm(),
        }
    }

    pub fn is_member(&self, x: &Mat<C64>, tol: f64) -> bool {
        self.group_defect(x) <= tol
    }

    /// Distance of `k` from the stabilizer subgroup.
    pub fn stabilizer_defect(&self, k: &Mat<C64>) -> f64 {
        let m = self.ambient_dim();
        if k.shape() != (m, m) {
            return f64::INFINITY;
        }
        let Ok(det) = k.det() else {
            return f64::INFINITY;
        };
        let special_unitary = unitary_defect(k) + (det - C64::new(1.0, 0.0)).norm();
        match self.id() {
            SpaceId::SlrSo | SpaceId::SuSo => {
                let imag = k.data().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                special_unitary + imag
            }
            SpaceId::SusSp | SpaceId::SuSp => {
                let j = self.symplectic_j().expect("quaternionic space has J");
                special_unitary + (k * j).distance(&(j * &k.conj()))
            }
            SpaceId::SlcSu => special_unitary,
        }
    }

    pub fn is_stabilizer_member(&self, k: &Mat<C64>, tol: f64) -> bool {
        self.stabilizer_defect(k) <= tol
    }
}

/// `||x x^* - I||_F`.
pub fn unitary_defect(x: &Mat<C64>) -> f64 {
    (x * &x.adjoint()).distance(&Mat::identity(x.rows()))
}

fn build_p_basis(id: SpaceId, n: usize) -> Vec<Mat<C64>> {
    match id {
        SpaceId::SlrSo => exact_symmetric_basis(n)
            .iter()
            .map(ScaledMat::<Rational>::to_c64)
            .collect(),
        SpaceId::SusSp => exact_quaternionic_basis(n)
            .iter()
            .map(|q| q.element.to_c64())
            .collect(),
        SpaceId::SuSo => {
            let (d, x, _) = el_c(&Elementary::new(n));
            let mut span: Vec<_> = traceless_diagonals(&d).iter().map(i_times).collect();
            span.extend(x.iter().map(i_times));
            gram_schmidt(&span, Form::MinusReTraceXY, &[])
        }
        SpaceId::SuSp => {
            let sp = gram_schmidt(&sp_span(n), Form::MinusReTraceXY, &[]);
            gram_schmidt(&su_span(2 * n), Form::MinusReTraceXY, &sp)
        }
        SpaceId::SlcSu => {
            let (d, x, y) = el_c(&Elementary::new(n));
            let mut span = traceless_diagonals(&d);
            span.extend(x);
            span.extend(y.iter().map(i_times));
            gram_schmidt(&span, Form::ReTraceXY, &[])
        }
    }
}

fn build_stabilizer_algebra(id: SpaceId, n: usize) -> Vec<Mat<C64>> {
    let span = match id {
        SpaceId::SlrSo | SpaceId::SuSo => el_c(&Elementary::new(n)).2,
        SpaceId::SusSp | SpaceId::SuSp => sp_span(n),
        SpaceId::SlcSu => su_span(n),
    };
    gram_schmidt(&span, Form::MinusReTraceXY, &[])
}

/// Exact Casimir sum `sum_Z Z^2` for a hand-written basis.
pub fn exact_casimir<T: Scalar>(basis: &[ScaledMat<T>], lift: impl Fn(&Rational) -> T) -> Mat<T> {
    let m = basis.first().map_or(0, |z| z.mat.rows());
    basis.iter().fold(Mat::zeros(m, m), |acc, z| {
        let sq = (&z.mat * &z.mat).scale(&lift(&z.scale_sq));
        &acc + &sq
    })
}

/// Exact Gram check for a hand-written basis under `trace XY` (real part for
/// complex entries). Returns the first offending pair, if any.
pub fn exact_gram_violation<T: Scalar>(
    basis: &[ScaledMat<T>],
    real_part: impl Fn(&T) -> Rational,
) -> Option<(usize, usize)> {
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let tr = real_part(&(&a.mat * &b.mat).trace().expect("square"));
            let ok = if i == j {
                &tr * &a.scale_sq == rat(1, 1)
            } else {
                Zero::is_zero(&tr)
            };
            if !ok {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat<C64>, b: &Mat<C64>, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn elementary_examples() {
        let el = Elementary::new(2);
        let e12: Mat<f64> = el.e(1, 2).unwrap();
        assert_eq!(
            e12,
            Mat::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap()
        );

        let x = el.x_exact::<Rational>(1, 2).unwrap();
        let sq = (&x.mat * &x.mat).scale(&x.scale_sq);
        assert_eq!(sq, Mat::identity(2).scale(&rat(1, 2)));

        let y = el.y_exact::<Rational>(1, 2).unwrap();
        assert_eq!((&x.mat * &y.mat).trace().unwrap(), rat(0, 1));

        assert!(el.e::<f64>(0, 1).is_err());
        assert!(el.e::<f64>(1, 3).is_err());
        assert!(el.x(2, 1).is_err());
        assert!(el.y(1, 1).is_err());
    }

    #[test]
    fn basis_sizes() {
        for n in 1..=5 {
            for id in SpaceId::ALL {
                if n < id.min_n() {
                    continue;
                }
                let s = SpaceSpec::new(id, n).unwrap();
                assert_eq!(s.p_basis().len(), id.p_dim(n), "{id} n={n}");
            }
        }
        let slr = SpaceSpec::new(SpaceId::SlrSo, 2).unwrap();
        assert_eq!(slr.p_basis().len(), 3);
    }

    #[test]
    fn quaternionic_family_counts() {
        let one = exact_quaternionic_basis(1);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].family, 1);
        assert_eq!(one[0].element.scale_sq, rat(1, 2));
        assert_eq!(one[0].element.mat, Mat::identity(2));

        let two = exact_quaternionic_basis(2);
        let count = |f| two.iter().filter(|q| q.family == f).count();
        assert_eq!(two.len(), 6);
        assert_eq!(
            [count(1), count(2), count(3), count(4), count(5)],
            [2, 1, 1, 1, 1]
        );
    }

    #[test]
    fn hand_bases_are_exactly_orthonormal() {
        for n in 1..=5 {
            assert_eq!(
                exact_gram_violation(&exact_symmetric_basis(n), |r| r.clone()),
                None
            );
            let q: Vec<_> = exact_quaternionic_basis(n)
                .into_iter()
                .map(|q| q.element)
                .collect();
            assert_eq!(exact_gram_violation(&q, |z| z.re.clone()), None);
        }
    }

    #[test]
    fn exact_casimir_constants() {
        for n in 1..=5 {
            let c = exact_casimir(&exact_symmetric_basis(n), |r| r.clone());
            assert_eq!(c, Mat::identity(n).scale(&rat(n as i64 + 1, 2)));
            let q: Vec<_> = exact_quaternionic_basis(n)
                .into_iter()
                .map(|q| q.element)
                .collect();
            let c = exact_casimir(&q, crate::scalar::rational_to_complex);
            let expect = crate::scalar::rational_to_complex(&rat(2 * n as i64 - 1, 2));
            assert_eq!(c, Mat::identity(2 * n).scale(&expect));
        }
        let slr2 = exact_casimir(&exact_symmetric_basis(2), |r| r.clone());
        assert_eq!(slr2, Mat::identity(2).scale(&rat(3, 2)));
    }

    #[test]
    fn numeric_bases_orthonormal_and_complementary() {
        for n in 1..=5 {
            for id in SpaceId::ALL {
                if n < id.min_n() {
                    continue;
                }
                let s = SpaceSpec::new(id, n).unwrap();
                assert!(s.p_basis().orthonormality_defect() < 1e-12, "{id} n={n}");
                for z in &s.p_basis().elements {
                    for w in s.stabilizer_algebra() {
                        assert!(s.form().eval(z, w).abs() < 1e-12, "{id} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn complement_structure() {
        for n in 1..=4 {
            let sus = SpaceSpec::new(SpaceId::SusSp, n).unwrap();
            let j = sus.symplectic_j().unwrap();
            for z in &sus.p_basis().elements {
                // Hermitian and inside u*(2n).
                assert!(close(z, &z.adjoint(), 1e-15));
                assert!(close(&(z * j), &(j * &z.conj()), 1e-15));
            }
            let susp = SpaceSpec::new(SpaceId::SuSp, n).unwrap();
            let j = susp.symplectic_j().unwrap();
            for z in &susp.p_basis().elements {
                // Skew-Hermitian traceless, and J^t Z^t J = Z on the complement.
                assert!(close(z, &(-&z.adjoint()), 1e-12));
                assert!(z.trace().unwrap().norm() < 1e-12);
                let flipped = &(&j.transpose() * &z.transpose()) * j;
                assert!(close(&flipped, z, 1e-12));
            }
        }
        let slc = SpaceSpec::new(SpaceId::SlcSu, 3).unwrap();
        for z in &slc.p_basis().elements {
            assert!(close(z, &z.adjoint(), 1e-15));
            assert!(z.trace().unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn float_casimir_matches_constants() {
        for n in 2..=5 {
            let s = SpaceSpec::new(SpaceId::SlrSo, n).unwrap();
            let expect = Mat::<C64>::identity(n).scale_real((n as f64 + 1.0) / 2.0);
            assert!(close(&s.casimir_p_sum(), &expect, 1e-13));
        }
    }

    #[test]
    fn parse_ids() {
        for id in SpaceId::ALL {
            assert_eq!(id.as_str().parse::<SpaceId>().unwrap(), id);
        }
        assert!("sl-so".parse::<SpaceId>().is_err());
    }

    #[test]
    fn identity_is_member_everywhere() {
        for id in SpaceId::ALL {
            let s = SpaceSpec::new(id, 2).unwrap();
            let i = Mat::<C64>::identity(s.ambient_dim());
            assert!(s.is_member(&i, 1e-14), "{id}");
            assert!(s.is_stabilizer_member(&i, 1e-14), "{id}");
        }
    }
}

//! Second-order jets of invariant functions along `s -> x exp(sZ)`.
//!
//! An [`InvariantExpr`] is a DAG over the entries of the base map `Phi`.
//! Seeding the `Entry` leaves with the 2-jet of `Phi` along a direction `Z`
//! and pushing [`Jet2`] values through the DAG yields the first and second
//! directional derivatives at `s = 0`. Summing over an orthonormal basis of
//! the complement gives the tension field `tau` and the bilinear
//! conformality operator `kappa`.

use std::ops::{Add, Mul, Neg, Sub};

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{c64_to_cdd, CDd, FloatScalar, Scalar, C64};
use crate::spaces::{BaseMapVariant, SpaceSpec};

/// Square roots are refused when the argument is within this relative
/// angle of the negative real axis (principal branch cut).
pub const BRANCH_EPS: f64 = 1e-9;

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Membership tolerance applied by [`base_map_value`].
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Value, first and second derivative of a scalar function along a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: C64,
    pub d1: C64,
    pub d2: C64,
}

impl Jet2 {
    pub fn new(v: C64, d1: C64, d2: C64) -> Self {
        Self { v, d1, d2 }
    }

    pub fn constant(v: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self { v, d1: z, d2: z }
    }

    fn recip_parts(self) -> Option<(C64, C64, C64)> {
        if self.v.norm() == 0.0 {
            return None;
        }
        let inv = 1.0 / self.v;
        let d1 = -self.d1 * inv * inv;
        // (1/f)'' = 2 f'^2 / f^3 - f'' / f^2
        let d2 = 2.0 * self.d1 * self.d1 * inv * inv * inv - self.d2 * inv * inv;
        Some((inv, d1, d2))
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2::new(-self.v, -self.d1, -self.d2)
    }
}

/// Values that can flow through an [`InvariantExpr`].
trait Flow: Copy {
    fn lift(c: C64) -> Self;
    fn plus(self, o: Self) -> Self;
    fn minus(self, o: Self) -> Self;
    fn times(self, o: Self) -> Self;
    fn over(self, o: Self, node: usize) -> Result<Self>;
    fn root(self, node: usize) -> Result<Self>;
    fn times_i(self) -> Self;
}

fn principal_sqrt(w: C64, node: usize) -> Result<C64> {
    if w.re <= 0.0 && w.im.abs() <= BRANCH_EPS * w.norm() {
        return Err(Error::BranchCut {
            node,
            re: w.re,
            im: w.im,
        });
    }
    Ok(w.sqrt())
}

impl Flow for C64 {
    fn lift(c: C64) -> Self {
        c
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn times(self, o: Self) -> Self {
        self * o
    }
    fn over(self, o: Self, node: usize) -> Result<Self> {
        if o.norm() == 0.0 {
            return Err(Error::DivisionByZero { node });
        }
        Ok(self / o)
    }
    fn root(self, node: usize) -> Result<Self> {
        principal_sqrt(self, node)
    }
    fn times_i(self) -> Self {
        self * C64::new(0.0, 1.0)
    }
}

impl Flow for Jet2 {
    fn lift(c: C64) -> Self {
        Jet2::constant(c)
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn times(self, o: Self) -> Self {
        self * o
    }
    fn over(self, o: Self, node: usize) -> Result<Self> {
        let (v, d1, d2) = o.recip_parts().ok_or(Error::DivisionByZero { node })?;
        Ok(self * Jet2::new(v, d1, d2))
    }
    fn root(self, node: usize) -> Result<Self> {
        let r = principal_sqrt(self.v, node)?;
        let d1 = self.d1 / (2.0 * r);
        let d2 = self.d2 / (2.0 * r) - self.d1 * self.d1 / (4.0 * r * r * r);
        Ok(Jet2::new(r, d1, d2))
    }
    fn times_i(self) -> Self {
        let i = C64::new(0.0, 1.0);
        Jet2::new(self.v * i, self.d1 * i, self.d2 * i)
    }
}

/// `a / b` to double-double accuracy by three rounds of long division.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::from(q1) + q2 + q3
}

fn cdd_div(a: CDd, b: CDd) -> CDd {
    let den = b.re * b.re + b.im * b.im;
    let num = a * CDd::new(b.re, -b.im);
    CDd::new(dd_div(num.re, den), dd_div(num.im, den))
}

/// Principal square root in double-double, with the same branch rule as
/// [`principal_sqrt`].
fn principal_sqrt_dd(w: CDd, node: usize) -> Result<CDd> {
    let approx = w.to_c64();
    principal_sqrt(approx, node)?;
    let two = TwoFloat::from(2.0);
    let r = (w.re * w.re + w.im * w.im).sqrt();
    if w.re >= 0.0 {
        let re = ((r + w.re) / two).sqrt();
        Ok(CDd::new(re, dd_div(w.im, two * re)))
    } else {
        let mut im = ((r - w.re) / two).sqrt();
        if w.im < 0.0 {
            im = -im;
        }
        Ok(CDd::new(dd_div(w.im, two * im), im))
    }
}

impl Flow for CDd {
    fn lift(c: C64) -> Self {
        c64_to_cdd(c)
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn times(self, o: Self) -> Self {
        self * o
    }
    fn over(self, o: Self, node: usize) -> Result<Self> {
        if Scalar::is_zero(&o) {
            return Err(Error::DivisionByZero { node });
        }
        Ok(cdd_div(self, o))
    }
    fn root(self, node: usize) -> Result<Self> {
        principal_sqrt_dd(self, node)
    }
    fn times_i(self) -> Self {
        CDd::new(-self.im, self.re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(C64),
    /// Entry `(row, col)` of the base map, 0-based.
    Entry {
        row: usize,
        col: usize,
    },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Sqrt(NodeId),
    ScaleByI(NodeId),
}

/// Immutable expression DAG over entries of the base map.
///
/// Children always precede their parents, so the node vector is a
/// topological order and the graph is acyclic by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantExpr {
    nodes: Vec<Node>,
    root: NodeId,
    variant: BaseMapVariant,
    dim: usize,
}

#[derive(Debug, Clone)]
pub struct ExprBuilder {
    nodes: Vec<Node>,
    variant: BaseMapVariant,
    dim: usize,
}

impl ExprBuilder {
    pub fn new(variant: BaseMapVariant, dim: usize) -> Self {
        Self {
            nodes: Vec::new(),
            variant,
            dim,
        }
    }

    pub fn for_space(space: &SpaceSpec) -> Self {
        Self::new(space.base_map_variant(), space.ambient_dim())
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, c: C64) -> NodeId {
        self.push(Node::Const(c))
    }

    pub fn real(&mut self, c: f64) -> NodeId {
        self.constant(C64::new(c, 0.0))
    }

    /// Entry of `Phi`, 0-based.
    pub fn entry(&mut self, row: usize, col: usize) -> Result<NodeId> {
        if row >= self.dim || col >= self.dim {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({row},{col}) of a {0}x{0} base map",
                self.dim
            )));
        }
        Ok(self.push(Node::Entry { row, col }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Div(a, b))
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        self.push(Node::Sqrt(a))
    }

    pub fn scale_by_i(&mut self, a: NodeId) -> NodeId {
        self.push(Node::ScaleByI(a))
    }

    /// Copies `expr` into this builder and returns the id of its root.
    pub fn import(&mut self, expr: &InvariantExpr) -> Result<NodeId> {
        if expr.variant != self.variant || expr.dim != self.dim {
            return Err(Error::InvalidArgument(
                "cannot combine expressions over different base maps".into(),
            ));
        }
        let off = self.nodes.len();
        let shift = |id: NodeId| NodeId(id.0 + off);
        for node in &expr.nodes {
            let moved = match *node {
                Node::Const(c) => Node::Const(c),
                Node::Entry { row, col } => Node::Entry { row, col },
                Node::Add(a, b) => Node::Add(shift(a), shift(b)),
                Node::Sub(a, b) => Node::Sub(shift(a), shift(b)),
                Node::Mul(a, b) => Node::Mul(shift(a), shift(b)),
                Node::Div(a, b) => Node::Div(shift(a), shift(b)),
                Node::Sqrt(a) => Node::Sqrt(shift(a)),
                Node::ScaleByI(a) => Node::ScaleByI(shift(a)),
            };
            self.nodes.push(moved);
        }
        Ok(shift(expr.root))
    }

    pub fn finish(self, root: NodeId) -> Result<InvariantExpr> {
        if root.0 >= self.nodes.len() {
            return Err(Error::InvalidArgument(
                "root is not a node of this builder".into(),
            ));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let children: &[NodeId] = match node {
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => &[*a, *b],
                Node::Sqrt(a) | Node::ScaleByI(a) => std::slice::from_ref(a),
                _ => &[],
            };
            if children.iter().any(|c| c.0 >= i) {
                return Err(Error::InvalidArgument(format!(
                    "node {i} references a later node"
                )));
            }
        }
        Ok(InvariantExpr {
            nodes: self.nodes,
            root,
            variant: self.variant,
            dim: self.dim,
        })
    }
}

impl InvariantExpr {
    /// `Phi[row, col]`, 0-based.
    pub fn entry(space: &SpaceSpec, row: usize, col: usize) -> Result<Self> {
        let mut b = ExprBuilder::for_space(space);
        let e = b.entry(row, col)?;
        b.finish(e)
    }

    pub fn constant(space: &SpaceSpec, c: C64) -> Self {
        let mut b = ExprBuilder::for_space(space);
        let e = b.constant(c);
        b.finish(e).expect("single node")
    }

    pub fn variant(&self) -> BaseMapVariant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Binary combination of two expressions over the same base map.
    pub fn combine(
        &self,
        other: &InvariantExpr,
        op: impl FnOnce(&mut ExprBuilder, NodeId, NodeId) -> NodeId,
    ) -> Result<Self> {
        let mut b = ExprBuilder::new(self.variant, self.dim);
        let a = b.import(self)?;
        let c = b.import(other)?;
        let root = op(&mut b, a, c);
        b.finish(root)
    }

    fn check_space(&self, space: &SpaceSpec) -> Result<()> {
        if self.variant != space.base_map_variant() || self.dim != space.ambient_dim() {
            return Err(Error::InvalidArgument(format!(
                "expression built for {:?} ({}x{}) evaluated on {}",
                self.variant,
                self.dim,
                self.dim,
                space.label()
            )));
        }
        Ok(())
    }

    fn run<V: Flow>(&self, leaf: impl Fn(usize, usize) -> V) -> Result<V> {
        let mut vals: Vec<V> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let v = match *node {
                Node::Const(c) => V::lift(c),
                Node::Entry { row, col } => leaf(row, col),
                Node::Add(a, b) => vals[a.0].plus(vals[b.0]),
                Node::Sub(a, b) => vals[a.0].minus(vals[b.0]),
                Node::Mul(a, b) => vals[a.0].times(vals[b.0]),
                Node::Div(a, b) => vals[a.0].over(vals[b.0], i)?,
                Node::Sqrt(a) => vals[a.0].root(i)?,
                Node::ScaleByI(a) => vals[a.0].times_i(),
            };
            vals.push(v);
        }
        Ok(vals[self.root.0])
    }

    /// Value of the expression given the base map `phi`.
    pub fn eval_at_phi(&self, phi: &Mat<C64>) -> Result<C64> {
        if phi.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch {
                op: "InvariantExpr::eval_at_phi",
                left: (self.dim, self.dim),
                right: phi.shape(),
            });
        }
        self.run(|r, c| phi[(r, c)])
    }

    /// 2-jet given the 2-jet of `Phi`.
    pub fn jet_at(&self, phi: &Mat<C64>, d1: &Mat<C64>, d2: &Mat<C64>) -> Result<Jet2> {
        self.run(|r, c| Jet2::new(phi[(r, c)], d1[(r, c)], d2[(r, c)]))
    }
}

/// `A(y)` such that `Phi(y) = y A(y)`; `A` is real-linear.
fn partner<T: Scalar>(variant: BaseMapVariant, j: Option<&Mat<T>>, y: &Mat<T>) -> Mat<T> {
    match variant {
        BaseMapVariant::XXt => y.transpose(),
        BaseMapVariant::XXstar => y.adjoint(),
        BaseMapVariant::XJtXtJ => {
            let j = j.expect("J is attached to quaternionic spaces");
            &(&j.transpose() * &y.transpose()) * j
        }
    }
}

/// `Phi(x)` without the membership check.
pub fn base_map_unchecked(space: &SpaceSpec, x: &Mat<C64>) -> Result<Mat<C64>> {
    let m = space.ambient_dim();
    if x.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            op: "base_map",
            left: (m, m),
            right: x.shape(),
        });
    }
    x.mat_mul(&partner(space.base_map_variant(), space.symplectic_j(), x))
}

pub fn base_map_value(space: &SpaceSpec, x: &Mat<C64>) -> Result<Mat<C64>> {
    let defect = space.group_defect(x);
    if defect.is_nan() || defect > MEMBERSHIP_TOL {
        return Err(Error::MembershipViolation {
            space: space.id().group_name(space.n()),
            defect,
        });
    }
    base_map_unchecked(space, x)
}

/// `(Phi, d/ds Phi, d^2/ds^2 Phi)` at `s = 0` along `x exp(sZ)`.
///
/// Computed by the product rule on `y(s) A(y(s))` with `y' = xZ`,
/// `y'' = xZ^2`. For `Z` in the complement this reduces to `(Phi, 2xZA(x),
/// 4xZ^2A(x))`.
pub fn base_map_jet(
    space: &SpaceSpec,
    x: &Mat<C64>,
    z: &Mat<C64>,
) -> Result<(Mat<C64>, Mat<C64>, Mat<C64>)> {
    let m = space.ambient_dim();
    if x.shape() != (m, m) || z.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            op: "base_map_jet",
            left: x.shape(),
            right: z.shape(),
        });
    }
    let variant = space.base_map_variant();
    let j = space.symplectic_j();
    let y1 = x * z;
    let y2 = &y1 * z;
    let a0 = partner(variant, j, x);
    let a1 = partner(variant, j, &y1);
    let a2 = partner(variant, j, &y2);
    let phi = x * &a0;
    let d1 = &(&y1 * &a0) + &(x * &a1);
    let d2 = &(&(&y2 * &a0) + &(&y1 * &a1).scale_real(2.0)) + &(x * &a2);
    Ok((phi, d1, d2))
}

pub fn eval_jet(f: &InvariantExpr, space: &SpaceSpec, x: &Mat<C64>, z: &Mat<C64>) -> Result<Jet2> {
    f.check_space(space)?;
    let (phi, d1, d2) = base_map_jet(space, x, z)?;
    f.jet_at(&phi, &d1, &d2)
}

/// Base-map jets at one point for every direction of a basis.
///
/// Evaluating many functions at the same point reuses these.
#[derive(Debug, Clone)]
pub struct PointJets {
    space: SpaceSpec,
    phi: Mat<C64>,
    dirs: Vec<(Mat<C64>, Mat<C64>)>,
}

impl PointJets {
    pub fn new(space: &SpaceSpec, x: &Mat<C64>) -> Result<Self> {
        Self::with_basis(space, x, &space.p_basis().elements)
    }

    pub fn with_basis(space: &SpaceSpec, x: &Mat<C64>, basis: &[Mat<C64>]) -> Result<Self> {
        let phi = base_map_unchecked(space, x)?;
        let dirs = basis
            .iter()
            .map(|z| base_map_jet(space, x, z).map(|(_, d1, d2)| (d1, d2)))
            .collect::<Result<_>>()?;
        Ok(Self {
            space: space.clone(),
            phi,
            dirs,
        })
    }

    pub fn phi(&self) -> &Mat<C64> {
        &self.phi
    }

    pub fn value(&self, f: &InvariantExpr) -> Result<C64> {
        f.check_space(&self.space)?;
        f.eval_at_phi(&self.phi)
    }

    /// One jet per basis direction.
    pub fn jets(&self, f: &InvariantExpr) -> Result<Vec<Jet2>> {
        f.check_space(&self.space)?;
        self.dirs
            .iter()
            .map(|(d1, d2)| f.jet_at(&self.phi, d1, d2))
            .collect()
    }

    pub fn tau(&self, f: &InvariantExpr) -> Result<C64> {
        Ok(self.jets(f)?.iter().map(|j| j.d2).sum())
    }

    pub fn kappa(&self, f: &InvariantExpr, g: &InvariantExpr) -> Result<C64> {
        let a = self.jets(f)?;
        let b = self.jets(g)?;
        Ok(a.iter().zip(&b).map(|(p, q)| p.d1 * q.d1).sum())
    }

    /// Normalized `tau` and `kappa(f,f)` residuals plus the gradient scale `S`.
    pub fn harmonic_residuals(&self, f: &InvariantExpr) -> Result<HarmonicResiduals> {
        let jets = self.jets(f)?;
        Ok(HarmonicResiduals::from_jets(&jets))
    }
}

/// `tau`, `kappa(f,f)` and `S = sum |Z f|^2` from the per-direction jets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicResiduals {
    pub tau: C64,
    pub kappa: C64,
    pub grad_sq: f64,
}

impl HarmonicResiduals {
    pub fn from_jets(jets: &[Jet2]) -> Self {
        Self {
            tau: jets.iter().map(|j| j.d2).sum(),
            kappa: jets.iter().map(|j| j.d1 * j.d1).sum(),
            grad_sq: jets.iter().map(|j| j.d1.norm_sqr()).sum(),
        }
    }

    pub fn tau_residual(&self) -> f64 {
        normalized_residual(self.tau, self.grad_sq)
    }

    pub fn kappa_residual(&self) -> f64 {
        normalized_residual(self.kappa, self.grad_sq)
    }
}

/// `|value| / max(1, S)` for quantities whose target is zero.
pub fn normalized_residual(value: C64, grad_sq: f64) -> f64 {
    value.norm() / grad_sq.max(1.0)
}

pub fn tau(f: &InvariantExpr, space: &SpaceSpec, x: &Mat<C64>) -> Result<C64> {
    PointJets::new(space, x)?.tau(f)
}

pub fn kappa(f: &InvariantExpr, g: &InvariantExpr, space: &SpaceSpec, x: &Mat<C64>) -> Result<C64> {
    PointJets::new(space, x)?.kappa(f, g)
}

fn value_along(
    f: &InvariantExpr,
    space: &SpaceSpec,
    x: &Mat<C64>,
    z: &Mat<C64>,
    s: f64,
) -> Result<C64> {
    let moved = x * &z.scale_real(s).exp()?;
    let phi = base_map_unchecked(space, &moved)?;
    f.eval_at_phi(&phi)
        .map_err(|e| Error::DomainExit(format!("at s={s:e}: {e}")))
}

/// Central-difference 2-jet; the independent oracle for [`eval_jet`].
pub fn fd_jet(
    f: &InvariantExpr,
    space: &SpaceSpec,
    x: &Mat<C64>,
    z: &Mat<C64>,
    h: f64,
) -> Result<Jet2> {
    f.check_space(space)?;
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let f0 = value_along(f, space, x, z, 0.0)?;
    let fp = value_along(f, space, x, z, h)?;
    let fm = value_along(f, space, x, z, -h)?;
    Ok(Jet2::new(
        f0,
        (fp - fm) / (2.0 * h),
        (fp - 2.0 * f0 + fm) / (h * h),
    ))
}

/// Richardson-extrapolated central differences from steps `h` and `h/2`.
pub fn fd_jet_richardson(
    f: &InvariantExpr,
    space: &SpaceSpec,
    x: &Mat<C64>,
    z: &Mat<C64>,
    h: f64,
) -> Result<Jet2> {
    let coarse = fd_jet(f, space, x, z, h)?;
    let fine = fd_jet(f, space, x, z, h / 2.0)?;
    Ok(Jet2::new(
        fine.v,
        (4.0 * fine.d1 - coarse.d1) / 3.0,
        (4.0 * fine.d2 - coarse.d2) / 3.0,
    ))
}

fn value_along_dd(
    f: &InvariantExpr,
    space: &SpaceSpec,
    x: &Mat<CDd>,
    z: &Mat<CDd>,
    j: Option<&Mat<CDd>>,
    s: f64,
) -> Result<CDd> {
    let moved = x * &z.scale_real(s).exp()?;
    let phi = moved.mat_mul(&partner(space.base_map_variant(), j, &moved))?;
    f.run(|r, c| phi[(r, c)])
        .map_err(|e| Error::DomainExit(format!("at s={s:e}: {e}")))
}

/// Central-difference 2-jet with every stencil value evaluated in
/// double-double. The difference quotients then carry truncation error only,
/// which is what convergence-order measurements need.
pub fn fd_jet_extended(
    f: &InvariantExpr,
    space: &SpaceSpec,
    x: &Mat<C64>,
    z: &Mat<C64>,
    h: f64,
) -> Result<Jet2> {
    f.check_space(space)?;
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let m = space.ambient_dim();
    if x.shape() != (m, m) || z.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            op: "fd_jet_extended",
            left: x.shape(),
            right: z.shape(),
        });
    }
    let lift = |a: &Mat<C64>| a.map(|&v| c64_to_cdd(v));
    let (x, z) = (lift(x), lift(z));
    let j = space.symplectic_j().map(lift);
    let f0 = value_along_dd(f, space, &x, &z, j.as_ref(), 0.0)?;
    let fp = value_along_dd(f, space, &x, &z, j.as_ref(), h)?;
    let fm = value_along_dd(f, space, &x, &z, j.as_ref(), -h)?;
    let hh = TwoFloat::from(h);
    let two = TwoFloat::from(2.0);
    let d1 = fp - fm;
    let d1 = CDd::new(dd_div(d1.re, two * hh), dd_div(d1.im, two * hh));
    let d2 = fp - f0.scale(2.0) + fm;
    let d2 = CDd::new(dd_div(d2.re, hh * hh), dd_div(d2.im, hh * hh));
    Ok(Jet2::new(f0.to_c64(), d1.to_c64(), d2.to_c64()))
}

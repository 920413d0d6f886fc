//! Candidate harmonic morphisms as invariant expressions with domains.
//!
//! Indices `k`, `l`, `i`, `j` are 1-based, matching the labels
//! (`slr-so:n=3:kl=12`).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::jet::{base_map_unchecked, base_map_value, ExprBuilder, InvariantExpr, NodeId};
use crate::matrix::Mat;
use crate::sampling::{group_point, MAX_RESAMPLES};
use crate::scalar::C64;
use crate::spaces::{SpaceId, SpaceSpec};

/// Default relative margin of every domain predicate.
pub const DOMAIN_MARGIN: f64 = 1e-6;

/// Largest total degree accepted by [`Polynomial`].
pub const MAX_DEGREE: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invariance {
    /// `f(x k) = f(x)` for `k` in the stabilizer.
    StabilizerRight,
    /// `f(r x) = f(x)` for real `r > 0`.
    PositiveScale,
}

/// Where a morphism may be evaluated, expressed as a predicate on `Phi(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Everywhere,
    /// `|phi_ll| > margin`, `w = phi_kk phi_ll - phi_kl^2` has
    /// `|Re w| > margin |w|` and lies off the negative real axis.
    DualReal {
        k: usize,
        l: usize,
        margin: f64,
    },
    /// `|phi_ll| > margin`.
    DualQuat {
        l: usize,
        margin: f64,
    },
    Intersection(Vec<Domain>),
}

/// Outcome of a domain test, with the two readings of the square-root
/// condition reported separately where they apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainStatus {
    pub inside: bool,
    /// The stated condition `w not in iR` and the branch-cut condition
    /// disagree at this point.
    pub readings_disagree: bool,
}

impl Domain {
    pub fn status(&self, phi: &Mat<C64>) -> DomainStatus {
        let scale = phi.max_abs().max(f64::MIN_POSITIVE);
        match *self {
            Domain::Everywhere => DomainStatus {
                inside: true,
                readings_disagree: false,
            },
            Domain::DualReal { k, l, margin } => {
                let (k, l) = (k - 1, l - 1);
                let w = phi[(k, k)] * phi[(l, l)] - phi[(k, l)] * phi[(k, l)];
                let stated = w.re.abs() > margin * w.norm();
                let off_cut = !(w.re <= 0.0 && w.im.abs() <= margin * w.norm()) && w.norm() > 0.0;
                DomainStatus {
                    inside: phi[(l, l)].norm() > margin * scale && stated && off_cut,
                    readings_disagree: stated != off_cut,
                }
            }
            Domain::DualQuat { l, margin } => DomainStatus {
                inside: phi[(l - 1, l - 1)].norm() > margin * scale,
                readings_disagree: false,
            },
            Domain::Intersection(ref parts) => parts.iter().fold(
                DomainStatus {
                    inside: true,
                    readings_disagree: false,
                },
                |acc, d| {
                    let s = d.status(phi);
                    DomainStatus {
                        inside: acc.inside && s.inside,
                        readings_disagree: acc.readings_disagree || s.readings_disagree,
                    }
                },
            ),
        }
    }

    pub fn contains(&self, phi: &Mat<C64>) -> bool {
        self.status(phi).inside
    }

    fn intersect(parts: Vec<Domain>) -> Domain {
        let mut flat = Vec::new();
        for d in parts {
            match d {
                Domain::Everywhere => {}
                Domain::Intersection(inner) => flat.extend(inner),
                other if !flat.contains(&other) => flat.push(other),
                _ => {}
            }
        }
        match flat.len() {
            0 => Domain::Everywhere,
            1 => flat.pop().expect("one element"),
            _ => Domain::Intersection(flat),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Morphism {
    pub expr: InvariantExpr,
    pub space: SpaceSpec,
    pub domain: Domain,
    pub label: String,
    pub invariances: Vec<Invariance>,
}

impl Morphism {
    pub fn has_invariance(&self, inv: Invariance) -> bool {
        self.invariances.contains(&inv)
    }

    pub fn domain_status(&self, x: &Mat<C64>) -> Result<DomainStatus> {
        Ok(self.domain.status(&base_map_unchecked(&self.space, x)?))
    }

    pub fn in_domain(&self, x: &Mat<C64>) -> Result<bool> {
        Ok(self.domain_status(x)?.inside)
    }

    /// `f(x)`, refusing points outside the group or the domain.
    pub fn value(&self, x: &Mat<C64>) -> Result<C64> {
        let phi = base_map_value(&self.space, x)?;
        if !self.domain.contains(&phi) {
            return Err(Error::OutsideDomain {
                label: self.label.clone(),
            });
        }
        self.expr.eval_at_phi(&phi)
    }

    /// Draws group points from `rng` until one lies in the domain.
    pub fn sample_point(&self, rng: &mut impl Rng) -> Result<Mat<C64>> {
        for _ in 0..MAX_RESAMPLES {
            let x = group_point(&self.space, rng)?;
            if self.in_domain(&x)? {
                return Ok(x);
            }
        }
        Err(Error::SamplingFailure {
            attempts: MAX_RESAMPLES,
            what: format!("in-domain point for {}", self.label),
        })
    }
}

fn check_index(name: &str, v: usize, hi: usize) -> Result<()> {
    if v == 0 || v > hi {
        return Err(Error::IndexOutOfRange(format!(
            "{name}={v} outside 1..={hi}"
        )));
    }
    Ok(())
}

fn check_distinct(k: usize, l: usize) -> Result<()> {
    if k == l {
        return Err(Error::InvalidArgument(format!(
            "k and l must differ, got k=l={k}"
        )));
    }
    Ok(())
}

/// `(phi_kl + i sqrt(phi_kk phi_ll - phi_kl^2)) / phi_ll`, 1-based.
fn real_root_expr(space: &SpaceSpec, k: usize, l: usize) -> Result<InvariantExpr> {
    let mut b = ExprBuilder::for_space(space);
    let pkl = b.entry(k - 1, l - 1)?;
    let pkk = b.entry(k - 1, k - 1)?;
    let pll = b.entry(l - 1, l - 1)?;
    let prod = b.mul(pkk, pll);
    let sq = b.mul(pkl, pkl);
    let w = b.sub(prod, sq);
    let psi = b.sqrt(w);
    let ipsi = b.scale_by_i(psi);
    let num = b.add(pkl, ipsi);
    let root = b.div(num, pll);
    b.finish(root)
}

fn quotient_expr(space: &SpaceSpec, k: usize, l: usize) -> Result<InvariantExpr> {
    let mut b = ExprBuilder::for_space(space);
    let p = b.entry(k - 1, l - 1)?;
    let q = b.entry(l - 1, l - 1)?;
    let root = b.div(p, q);
    b.finish(root)
}

pub fn real_morphism(n: usize, k: usize, l: usize) -> Result<Morphism> {
    check_index("k", k, n)?;
    check_index("l", l, n)?;
    check_distinct(k, l)?;
    let space = SpaceSpec::new(SpaceId::SlrSo, n)?;
    Ok(Morphism {
        expr: real_root_expr(&space, k, l)?,
        label: format!("{}:kl={k}{l}", space.label()),
        space,
        domain: Domain::Everywhere,
        invariances: vec![Invariance::StabilizerRight, Invariance::PositiveScale],
    })
}

/// `{ phi_kl / phi_ll : k != l }` on `U*(2n)`, with `k` over all `2n` rows.
pub fn quat_family(n: usize, l: usize) -> Result<Vec<Morphism>> {
    check_index("l", l, n)?;
    let space = SpaceSpec::new(SpaceId::SusSp, n)?;
    (1..=2 * n)
        .filter(|&k| k != l)
        .map(|k| {
            Ok(Morphism {
                expr: quotient_expr(&space, k, l)?,
                label: format!("{}:l={l}:k={k}", space.label()),
                space: space.clone(),
                domain: Domain::Everywhere,
                invariances: vec![Invariance::StabilizerRight, Invariance::PositiveScale],
            })
        })
        .collect()
}

pub fn dual_real_morphism(n: usize, k: usize, l: usize) -> Result<Morphism> {
    dual_real_morphism_with_margin(n, k, l, DOMAIN_MARGIN)
}

pub fn dual_real_morphism_with_margin(
    n: usize,
    k: usize,
    l: usize,
    margin: f64,
) -> Result<Morphism> {
    check_index("k", k, n)?;
    check_index("l", l, n)?;
    check_distinct(k, l)?;
    let space = SpaceSpec::new(SpaceId::SuSo, n)?;
    Ok(Morphism {
        expr: real_root_expr(&space, k, l)?,
        label: format!("{}:kl={k}{l}", space.label()),
        space,
        domain: Domain::DualReal { k, l, margin },
        invariances: vec![Invariance::StabilizerRight],
    })
}

pub fn dual_quat_family(n: usize, l: usize) -> Result<Vec<Morphism>> {
    dual_quat_family_with_margin(n, l, DOMAIN_MARGIN)
}

pub fn dual_quat_family_with_margin(n: usize, l: usize, margin: f64) -> Result<Vec<Morphism>> {
    check_index("l", l, n)?;
    let space = SpaceSpec::new(SpaceId::SuSp, n)?;
    (1..=2 * n)
        .filter(|&k| k != l)
        .map(|k| {
            Ok(Morphism {
                expr: quotient_expr(&space, k, l)?,
                label: format!("{}:l={l}:k={k}", space.label()),
                space: space.clone(),
                domain: Domain::DualQuat { l, margin },
                invariances: vec![Invariance::StabilizerRight],
            })
        })
        .collect()
}

/// The bare entry `phi_kl`. Not harmonic; used as a sensitivity control.
pub fn entry_morphism(space: &SpaceSpec, k: usize, l: usize) -> Result<Morphism> {
    let m = space.ambient_dim();
    check_index("k", k, m)?;
    check_index("l", l, m)?;
    Ok(Morphism {
        expr: InvariantExpr::entry(space, k - 1, l - 1)?,
        label: format!("{}:phi{k}{l}", space.label()),
        space: space.clone(),
        domain: Domain::Everywhere,
        invariances: vec![Invariance::StabilizerRight],
    })
}

/// Memoized Laplace expansion of `det Phi[rows, cols]` along the first row.
struct MinorBuilder<'a> {
    b: &'a mut ExprBuilder,
    rows: Vec<usize>,
    cols: Vec<usize>,
    memo: HashMap<(usize, u32), NodeId>,
}

impl MinorBuilder<'_> {
    /// Determinant of rows `rows[depth..]` against the columns in `mask`.
    fn det(&mut self, depth: usize, mask: u32) -> Result<NodeId> {
        if let Some(&id) = self.memo.get(&(depth, mask)) {
            return Ok(id);
        }
        let row = self.rows[depth];
        let id = if depth + 1 == self.rows.len() {
            let c = self.cols[mask.trailing_zeros() as usize];
            self.b.entry(row, c)?
        } else {
            let mut acc: Option<NodeId> = None;
            let mut sign_plus = true;
            for (pos, c) in self.cols.clone().into_iter().enumerate() {
                if mask & (1 << pos) == 0 {
                    continue;
                }
                let minor = self.det(depth + 1, mask & !(1 << pos))?;
                let e = self.b.entry(row, c)?;
                let term = self.b.mul(e, minor);
                acc = Some(match acc {
                    None if sign_plus => term,
                    None => {
                        let z = self.b.real(0.0);
                        self.b.sub(z, term)
                    }
                    Some(a) if sign_plus => self.b.add(a, term),
                    Some(a) => self.b.sub(a, term),
                });
                sign_plus = !sign_plus;
            }
            acc.expect("nonempty mask")
        };
        self.memo.insert((depth, mask), id);
        Ok(id)
    }
}

fn det_node(b: &mut ExprBuilder, rows: Vec<usize>, cols: Vec<usize>) -> Result<NodeId> {
    let full = (1u32 << cols.len()) - 1;
    let mut mb = MinorBuilder {
        b,
        rows,
        cols,
        memo: HashMap::new(),
    };
    mb.det(0, full)
}

/// Lower Gauss factor entry `L_ij(g g^*)` on `SL(n,C)/SU(n)`, `i > j`, 1-based.
///
/// `L_ij = det Phi[{1..j-1, i}, {1..j}] / det Phi[{1..j}, {1..j}]`.
pub fn type_iv_bigcell_morphism(n: usize, i: usize, j: usize) -> Result<Morphism> {
    check_index("i", i, n)?;
    check_index("j", j, n)?;
    if i <= j {
        return Err(Error::InvalidArgument(format!(
            "big-cell coordinate needs i > j, got i={i}, j={j}"
        )));
    }
    let space = SpaceSpec::new(SpaceId::SlcSu, n)?;
    let mut b = ExprBuilder::for_space(&space);
    let lead: Vec<usize> = (0..j).collect();
    let mut num_rows: Vec<usize> = (0..j - 1).collect();
    num_rows.push(i - 1);
    let num = det_node(&mut b, num_rows, lead.clone())?;
    let den = det_node(&mut b, lead.clone(), lead)?;
    let root = b.div(num, den);
    Ok(Morphism {
        expr: b.finish(root)?,
        label: format!("{}:L{i}{j}", space.label()),
        space,
        domain: Domain::Everywhere,
        invariances: vec![Invariance::StabilizerRight],
    })
}

/// Polynomial with integer coefficients in `z1, ..., zm`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    /// Exponent vector (length `num_vars`) to coefficient; zero terms removed.
    terms: BTreeMap<Vec<u32>, i64>,
    num_vars: usize,
    source: String,
}

impl Polynomial {
    /// Builds from `(coefficient, exponents)` pairs.
    pub fn from_terms(terms: &[(i64, Vec<u32>)]) -> Result<Self> {
        let num_vars = terms.iter().map(|(_, e)| e.len()).max().unwrap_or(0);
        let mut map: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for (c, e) in terms {
            let mut e = e.clone();
            e.resize(num_vars, 0);
            let entry = map.entry(e).or_insert(0);
            *entry = entry
                .checked_add(*c)
                .ok_or_else(|| Error::Parse("coefficient overflow".into()))?;
        }
        map.retain(|_, c| *c != 0);
        let source = render_terms(&map);
        let p = Self {
            terms: map,
            num_vars,
            source,
        };
        p.check_degree()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], i64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, &c)| {
                e.iter()
                    .zip(z)
                    .fold(C64::new(c as f64, 0.0), |acc, (&p, &v)| acc * v.powu(p))
            })
            .sum()
    }

    fn check_degree(&self) -> Result<()> {
        if self.degree() > MAX_DEGREE {
            return Err(Error::Parse(format!(
                "total degree {} exceeds {MAX_DEGREE}",
                self.degree()
            )));
        }
        Ok(())
    }
}

fn render_terms(terms: &BTreeMap<Vec<u32>, i64>) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (e, &c) in terms.iter().rev() {
        let vars: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0)
            .map(|(i, &p)| {
                if p == 1 {
                    format!("z{}", i + 1)
                } else {
                    format!("z{}^{p}", i + 1)
                }
            })
            .collect();
        let sign = if c < 0 { "-" } else { "+" };
        if out.is_empty() {
            if c < 0 {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        let mag = c.unsigned_abs();
        match (vars.is_empty(), mag) {
            (true, _) => out.push_str(&mag.to_string()),
            (false, 1) => out.push_str(&vars.join("*")),
            (false, _) => out.push_str(&format!("{mag}*{}", vars.join("*"))),
        }
    }
    out
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    /// Accepts sums of products of integers and `zN` or `zN^P`, e.g.
    /// `z1^2 + 3*z1*z2 - 4`.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut terms: Vec<(i64, Vec<u32>)> = Vec::new();
        let bytes = compact.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() {
            let mut sign = 1i64;
            if bytes[pos] == b'+' || bytes[pos] == b'-' {
                if bytes[pos] == b'-' {
                    sign = -1;
                }
                pos += 1;
            } else if pos != 0 {
                return Err(Error::Parse(format!("expected '+' or '-' at offset {pos}")));
            }
            let end = compact[pos..]
                .find(['+', '-'])
                .map_or(compact.len(), |e| pos + e);
            let (coeff, exps) = parse_term(&compact[pos..end])?;
            terms.push((sign * coeff, exps));
            pos = end;
        }
        let mut p = Polynomial::from_terms(&terms)?;
        p.source = s.trim().to_string();
        Ok(p)
    }
}

fn parse_uint<T: FromStr>(s: &str, what: &str) -> Result<T> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!("invalid {what} '{s}'")));
    }
    s.parse()
        .map_err(|_| Error::Parse(format!("{what} '{s}' out of range")))
}

fn parse_term(term: &str) -> Result<(i64, Vec<u32>)> {
    if term.is_empty() {
        return Err(Error::Parse("empty term".into()));
    }
    let mut coeff: i64 = 1;
    let mut exps: Vec<u32> = Vec::new();
    for factor in term.split('*') {
        if let Some(var) = factor.strip_prefix('z') {
            let (idx, pow) = match var.split_once('^') {
                Some((i, p)) => (i, parse_uint::<u32>(p, "exponent")?),
                None => (var, 1),
            };
            let idx: usize = parse_uint(idx, "variable index")?;
            if idx == 0 {
                return Err(Error::Parse("variables are numbered from z1".into()));
            }
            if exps.len() < idx {
                exps.resize(idx, 0);
            }
            exps[idx - 1] = exps[idx - 1]
                .checked_add(pow)
                .ok_or_else(|| Error::Parse("exponent overflow".into()))?;
        } else {
            let c: i64 = parse_uint(factor, "coefficient")?;
            coeff = coeff
                .checked_mul(c)
                .ok_or_else(|| Error::Parse("coefficient overflow".into()))?;
        }
    }
    Ok((coeff, exps))
}

/// `F(f_1, ..., f_m)` on the intersection of the members' domains.
pub fn holomorphic_compose(poly: &Polynomial, family: &[Morphism]) -> Result<Morphism> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidArgument("composition needs at least one morphism".into()))?;
    if let Some(other) = family.iter().find(|m| m.space != first.space) {
        return Err(Error::MixedSpaces(first.space.label(), other.space.label()));
    }
    if poly.num_vars() > family.len() {
        return Err(Error::InvalidArgument(format!(
            "polynomial uses z{} but only {} morphisms were supplied",
            poly.num_vars(),
            family.len()
        )));
    }
    let space = first.space.clone();
    let mut b = ExprBuilder::for_space(&space);
    let mut vars: Vec<Option<NodeId>> = vec![None; family.len()];
    let mut acc: Option<NodeId> = None;
    for (exps, coeff) in poly.terms() {
        let mut term = b.real(coeff as f64);
        for (v, &p) in exps.iter().enumerate() {
            if p == 0 {
                continue;
            }
            let var = match vars[v] {
                Some(id) => id,
                None => {
                    let id = b.import(&family[v].expr)?;
                    vars[v] = Some(id);
                    id
                }
            };
            for _ in 0..p {
                term = b.mul(term, var);
            }
        }
        acc = Some(match acc {
            None => term,
            Some(a) => b.add(a, term),
        });
    }
    let root = match acc {
        Some(r) => r,
        None => b.real(0.0),
    };
    let used: Vec<&Morphism> = family
        .iter()
        .zip(&vars)
        .filter_map(|(m, v)| v.map(|_| m))
        .collect();
    let domain = Domain::intersect(used.iter().map(|m| m.domain.clone()).collect());
    let invariances = [Invariance::StabilizerRight, Invariance::PositiveScale]
        .into_iter()
        .filter(|inv| used.iter().all(|m| m.has_invariance(*inv)))
        .collect();
    let members: Vec<&str> = family.iter().map(|m| m.label.as_str()).collect();
    Ok(Morphism {
        expr: b.finish(root)?,
        label: format!("compose({poly}; {})", members.join(", ")),
        space,
        domain,
        invariances,
    })
}

/// A point of `SU(n)` at which `phi*_ll = 0` (and `w = 0`), outside every
/// dual real morphism with this `l`.
pub fn dual_real_excluded_point(n: usize, l: usize) -> Result<Mat<C64>> {
    check_index("l", l, n)?;
    if n < 2 {
        return Err(Error::InvalidArgument("needs n >= 2".into()));
    }
    let other = if l == 1 { 2 } else { 1 };
    let (a, b) = (other.min(l) - 1, other.max(l) - 1);
    // c [[1, -i], [1, i]] with c = e^{-i pi/4}/sqrt 2 lies in SU(2) and has
    // both rows isotropic for the bilinear form u.u^t.
    let c = C64::from_polar(
        std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_PI_4,
    );
    let i = C64::new(0.0, 1.0);
    let mut x = Mat::<C64>::identity(n);
    x[(a, a)] = c;
    x[(a, b)] = -i * c;
    x[(b, a)] = c;
    x[(b, b)] = i * c;
    Ok(x)
}

/// A point of `SU(2n)`, `n >= 2`, at which `phi*_ll = omega(x_l, x_{n+l}) = 0`.
pub fn dual_quat_excluded_point(n: usize, l: usize) -> Result<Mat<C64>> {
    check_index("l", l, n)?;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "for n = 1 the dual base map is constant and excludes nothing".into(),
        ));
    }
    let m = if l == 1 { 2 } else { 1 };
    let (r1, r2) = (n + l - 1, m - 1);
    let mut x = Mat::<C64>::identity(2 * n);
    // Swap rows n+l and m, negating one so the determinant stays 1.
    x[(r1, r1)] = C64::new(0.0, 0.0);
    x[(r2, r2)] = C64::new(0.0, 0.0);
    x[(r1, r2)] = C64::new(1.0, 0.0);
    x[(r2, r1)] = C64::new(-1.0, 0.0);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::PointJets;
    use crate::sampling::trial_rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn real_mat(rows: &[&[f64]]) -> Mat<C64> {
        Mat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| c(v)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn real_morphism_values() {
        let f = real_morphism(2, 1, 2).unwrap();
        assert_eq!(f.label, "slr-so:n=2:kl=12");
        let v = f.value(&Mat::identity(2)).unwrap();
        assert!((v - C64::new(0.0, 1.0)).norm() < 1e-15);
        let x = real_mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!((f.value(&x).unwrap() - C64::new(1.0, 1.0)).norm() < 1e-15);
        assert!(real_morphism(2, 1, 1).is_err());
        assert!(real_morphism(2, 3, 1).is_err());
        assert!(real_morphism(2, 0, 1).is_err());
    }

    #[test]
    fn quat_family_shape_and_values() {
        let fam = quat_family(2, 1).unwrap();
        assert_eq!(fam.len(), 3);
        assert_eq!(fam[1].label, "sus-sp:n=2:l=1:k=3");
        for f in &fam {
            assert_eq!(f.value(&Mat::identity(4)).unwrap(), c(0.0));
        }
        assert!(quat_family(2, 3).is_err());
    }

    #[test]
    fn dual_values_at_identity() {
        let f = dual_real_morphism(3, 1, 2).unwrap();
        assert!((f.value(&Mat::identity(3)).unwrap() - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(dual_real_morphism(3, 2, 2).is_err());
        for f in dual_quat_family(2, 1).unwrap() {
            assert_eq!(f.value(&Mat::identity(4)).unwrap(), c(0.0));
        }
    }

    #[test]
    fn excluded_points_are_group_members_outside_domain() {
        for n in 2..=4 {
            for l in 1..=n {
                let k = if l == 1 { 2 } else { 1 };
                let f = dual_real_morphism(n, k, l).unwrap();
                let x = dual_real_excluded_point(n, l).unwrap();
                assert!(f.space.group_defect(&x) < 1e-12);
                assert!(!f.in_domain(&x).unwrap());
                assert!(matches!(f.value(&x), Err(Error::OutsideDomain { .. })));
            }
        }
        for n in 2..=3 {
            for l in 1..=n {
                let fam = dual_quat_family(n, l).unwrap();
                let x = dual_quat_excluded_point(n, l).unwrap();
                assert!(fam[0].space.group_defect(&x) < 1e-12);
                let phi = base_map_unchecked(&fam[0].space, &x).unwrap();
                assert_eq!(phi[(l - 1, l - 1)], c(0.0));
                assert!(fam.iter().all(|f| !f.in_domain(&x).unwrap()));
            }
        }
        assert!(dual_quat_excluded_point(1, 1).is_err());
    }

    #[test]
    fn dual_quat_n1_is_never_excluded() {
        let fam = dual_quat_family(1, 1).unwrap();
        let mut rng = trial_rng(3, 0);
        for _ in 0..20 {
            let x = group_point(&fam[0].space, &mut rng).unwrap();
            let phi = base_map_unchecked(&fam[0].space, &x).unwrap();
            assert!(phi.distance(&Mat::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn branch_readings_disagreement_is_flagged() {
        let f = dual_real_morphism(3, 1, 2).unwrap();
        let diag = |a: f64, b: f64| {
            Mat::diag(&[
                C64::from_polar(1.0, a),
                C64::from_polar(1.0, b),
                C64::from_polar(1.0, -a - b),
            ])
        };
        // w = e^{2i(a+b)}: a+b = pi/4 gives w = i (excluded by the stated
        // condition, fine for the branch cut).
        let x = diag(0.5, std::f64::consts::FRAC_PI_4 - 0.5);
        let s = f.domain_status(&x).unwrap();
        assert!(!s.inside && s.readings_disagree);
        // a+b = pi/2 gives w = -1 (on the cut, allowed by the stated condition).
        let x = diag(0.3, std::f64::consts::FRAC_PI_2 - 0.3);
        let s = f.domain_status(&x).unwrap();
        assert!(!s.inside && s.readings_disagree);
        let s = f.domain_status(&diag(0.1, 0.2)).unwrap();
        assert!(s.inside && !s.readings_disagree);
    }

    #[test]
    fn bigcell_matches_gauss_factor() {
        for n in 2..=4 {
            let space = SpaceSpec::new(SpaceId::SlcSu, n).unwrap();
            let mut rng = trial_rng(5, n as u64);
            let g = group_point(&space, &mut rng).unwrap();
            let phi = base_map_unchecked(&space, &g).unwrap();
            let ldu = phi.gauss_ldu().unwrap();
            for i in 2..=n {
                for j in 1..i {
                    let f = type_iv_bigcell_morphism(n, i, j).unwrap();
                    let v = f.value(&g).unwrap();
                    assert!((v - ldu.l[(i - 1, j - 1)]).norm() < 1e-10, "n={n} L{i}{j}");
                }
            }
        }
        let f = type_iv_bigcell_morphism(2, 2, 1).unwrap();
        assert_eq!(f.label, "slc-su:n=2:L21");
        assert_eq!(f.value(&Mat::identity(2)).unwrap(), c(0.0));
        assert!(type_iv_bigcell_morphism(3, 1, 2).is_err());
        assert!(type_iv_bigcell_morphism(3, 2, 2).is_err());
    }

    #[test]
    fn polynomial_parsing() {
        let p: Polynomial = "z1^2 + 3*z1*z2".parse().unwrap();
        assert_eq!(p.num_vars(), 2);
        assert_eq!(p.degree(), 2);
        let v = p.eval(&[c(2.0), c(5.0)]);
        assert_eq!(v, c(4.0 + 30.0));
        let q: Polynomial = "-2*z2 + 7 - z1*z1".parse().unwrap();
        assert_eq!(q.eval(&[c(3.0), c(1.0)]), c(-2.0 + 7.0 - 9.0));
        assert_eq!("z1 - z1".parse::<Polynomial>().unwrap().terms().count(), 0);
        for bad in ["", "z0", "z1^7", "x1", "z1 ++ z2", "3*", "z1^", "z1^2^2"] {
            assert!(bad.parse::<Polynomial>().is_err(), "{bad}");
        }
        assert!("z1^3*z2^3".parse::<Polynomial>().is_ok());
    }

    #[test]
    fn composition_behaviour() {
        let fam = quat_family(2, 1).unwrap();
        let id: Polynomial = "z1".parse().unwrap();
        let same = holomorphic_compose(&id, &fam).unwrap();
        let x = group_point(&fam[0].space, &mut trial_rng(9, 0)).unwrap();
        let pj = PointJets::new(&fam[0].space, &x).unwrap();
        assert_eq!(pj.jets(&same.expr).unwrap(), pj.jets(&fam[0].expr).unwrap());

        let konst: Polynomial = "5".parse().unwrap();
        let k = holomorphic_compose(&konst, &fam).unwrap();
        assert_eq!(pj.tau(&k.expr).unwrap(), c(0.0));

        let p: Polynomial = "z1^2 + 3*z1*z2".parse().unwrap();
        let f = holomorphic_compose(&p, &fam).unwrap();
        let a = fam[0].value(&x).unwrap();
        let b = fam[1].value(&x).unwrap();
        assert!((f.value(&x).unwrap() - (a * a + 3.0 * a * b)).norm() < 1e-12);
        assert!(f.has_invariance(Invariance::PositiveScale));

        let other = real_morphism(2, 1, 2).unwrap();
        let mixed = vec![fam[0].clone(), other];
        assert!(matches!(
            holomorphic_compose(&p, &mixed),
            Err(Error::MixedSpaces(..))
        ));
        assert!(holomorphic_compose(&p, &fam[..1]).is_err());
    }
}

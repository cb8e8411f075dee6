//! The affine group `(a, b)`, `a > 0`, acting by `x -> a x + b`, and the real
//! line as its sub-case `a = 1`.
//!
//! Elements are stored in coordinates; the matrix form
//! `[[a, b], [0, 1]]` is only implied by the composition rules.

use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement", into = "RawElement")]
pub struct GroupElement {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    a: f64,
    b: f64,
}

impl TryFrom<RawElement> for GroupElement {
    type Error = Error;
    fn try_from(r: RawElement) -> Result<Self> {
        GroupElement::new(r.a, r.b)
    }
}

impl From<GroupElement> for RawElement {
    fn from(g: GroupElement) -> Self {
        RawElement { a: g.a, b: g.b }
    }
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1.0, b: 0.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidElement(a));
        }
        Ok(Self { a, b })
    }

    /// Pure translation `(1, b)`, an element of the real-line sub-case.
    pub fn translation(b: f64) -> Self {
        Self { a: 1.0, b }
    }

    #[inline]
    pub(crate) fn raw(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Build from `(log a, b)` without validation of the scale.
    pub fn from_log_scale(log_a: f64, b: f64) -> Self {
        Self { a: log_a.exp(), b }
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn log_a(&self) -> f64 {
        self.a.ln()
    }

    #[inline]
    pub fn multiply(&self, h: &GroupElement) -> GroupElement {
        GroupElement {
            a: self.a * h.a,
            b: self.a * h.b + self.b,
        }
    }

    #[inline]
    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            a: 1.0 / self.a,
            b: -self.b / self.a,
        }
    }

    /// `self^{-1} h`, computed without forming the inverse.
    #[inline]
    pub fn inverse_times(&self, h: &GroupElement) -> GroupElement {
        GroupElement {
            a: h.a / self.a,
            b: (h.b - self.b) / self.a,
        }
    }

    /// Action on the line, `x -> a x + b`.
    #[inline]
    pub fn act(&self, x: f64) -> f64 {
        self.a * x + self.b
    }

    /// Exponential coordinates `(t1, t2)` with `self = e^{t1 X1} e^{t2 X2}`.
    #[inline]
    pub fn exp_coordinates(&self) -> (f64, f64) {
        (self.a.ln(), self.b / self.a)
    }

    pub fn is_real_line(&self) -> bool {
        self.a == 1.0
    }

    /// Componentwise closeness, relative to the size of the entries.
    pub fn approx_eq(&self, other: &GroupElement, rel: f64) -> bool {
        let sa = self.a.abs().max(other.a.abs()).max(1.0);
        let sb = self.b.abs().max(other.b.abs()).max(1.0);
        (self.a - other.a).abs() <= rel * sa && (self.b - other.b).abs() <= rel * sb
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.multiply(&rhs)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Checked product, rejecting non-positive scales in either factor.
pub fn multiply(g: GroupElement, h: GroupElement) -> Result<GroupElement> {
    let g = GroupElement::new(g.a, g.b)?;
    let h = GroupElement::new(h.a, h.b)?;
    GroupElement::new(g.a * h.a, g.a * h.b + g.b)
}

pub fn inverse(g: GroupElement) -> Result<GroupElement> {
    let g = GroupElement::new(g.a, g.b)?;
    Ok(g.inverse())
}

/// `e^{t1 X1} e^{t2 X2} = (e^{t1}, e^{t1} t2)`.
#[inline]
pub fn exp_coords(t1: f64, t2: f64) -> GroupElement {
    let a = t1.exp();
    GroupElement { a, b: a * t2 }
}

/// Reorders `e^{t2 X2} e^{t1 X1}` into `e^{t1 X1} e^{s X2}`, returning `(t1, s)`.
#[inline]
pub fn bch_swap(t1: f64, t2: f64) -> (f64, f64) {
    (t1, t2 * (-t1).exp())
}

/// Basis of the Lie algebra: `X1` generates dilations, `X2` translations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    X1,
    X2,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::X1, Basis::X2];

    /// One-based index as used in the multi-index notation.
    pub fn from_index(k: usize) -> Result<Basis> {
        match k {
            1 => Ok(Basis::X1),
            2 => Ok(Basis::X2),
            _ => Err(Error::InvalidBasisIndex(k)),
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Basis::X1 => 1,
            Basis::X2 => 2,
        }
    }

    /// `e^{t X}` for this basis vector.
    #[inline]
    pub fn exp(&self, t: f64) -> GroupElement {
        match self {
            Basis::X1 => GroupElement { a: t.exp(), b: 0.0 },
            Basis::X2 => GroupElement { a: 1.0, b: t },
        }
    }
}

/// Coefficients of `Ad_{y^{-1}} X_k` in the basis `{X1, X2}`.
pub fn adjoint_coeffs(y: GroupElement, k: usize) -> Result<(f64, f64)> {
    let y = GroupElement::new(y.a, y.b)?;
    Ok(match Basis::from_index(k)? {
        Basis::X1 => (1.0, y.b / y.a),
        Basis::X2 => (0.0, 1.0 / y.a),
    })
}

/// Left Haar density with respect to `da db`.
pub fn haar_density(g: GroupElement) -> Result<f64> {
    let g = GroupElement::new(g.a, g.b)?;
    Ok(1.0 / (g.a * g.a))
}

/// Which of the two groups a grid or sample set lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    RealLine,
    Affine,
}

impl GroupKind {
    /// Lie algebra directions available in this group.
    pub fn directions(&self) -> &'static [Basis] {
        match self {
            GroupKind::RealLine => &[Basis::X2],
            GroupKind::Affine => &Basis::ALL,
        }
    }

    pub fn haar_density(&self, g: GroupElement) -> f64 {
        match self {
            GroupKind::RealLine => 1.0,
            GroupKind::Affine => 1.0 / (g.a * g.a),
        }
    }
}

/// Element `s X1 + t X2` of the Lie algebra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieDirection {
    pub s: f64,
    pub t: f64,
}

impl LieDirection {
    pub fn new(s: f64, t: f64) -> Self {
        Self { s, t }
    }

    pub fn basis(k: Basis) -> Self {
        match k {
            Basis::X1 => Self { s: 1.0, t: 0.0 },
            Basis::X2 => Self { s: 0.0, t: 1.0 },
        }
    }

    /// Matrix exponential of `[[s, t], [0, 0]]`.
    pub fn exp(&self) -> GroupElement {
        let a = self.s.exp();
        // (e^s - 1)/s, with the series near zero
        let phi = if self.s.abs() < 1e-8 {
            1.0 + 0.5 * self.s
        } else {
            self.s.exp_m1() / self.s
        };
        GroupElement { a, b: self.t * phi }
    }
}

/// The neighbourhood `U_eps = { e^{t1 X1} e^{t2 X2} : |t1|, |t2| <= eps }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsNeighborhood {
    eps: f64,
}

impl EpsNeighborhood {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Whether `u` lies in `U_eps`, with `kind` selecting the coordinate box.
    pub fn contains(&self, u: GroupElement, kind: GroupKind) -> bool {
        let (t1, t2) = u.exp_coordinates();
        let e = self.eps * (1.0 + 1e-12);
        match kind {
            GroupKind::RealLine => t1 == 0.0 && t2.abs() <= e,
            GroupKind::Affine => t1.abs() <= e && t2.abs() <= e,
        }
    }

    /// Whether `y` lies in `x U_eps`; equivalent to `contains(x^{-1} y)`.
    #[inline]
    pub fn contains_translate(&self, x: GroupElement, y: GroupElement) -> bool {
        let s1 = (y.a / x.a).ln();
        let s2 = (y.b - x.b) / y.a;
        let e = self.eps * (1.0 + 1e-12);
        s1.abs() <= e && s2.abs() <= e
    }

    /// Haar measure of the neighbourhood: `4 eps^2` on the affine group, `2 eps` on the line.
    pub fn measure(&self, kind: GroupKind) -> f64 {
        match kind {
            GroupKind::RealLine => 2.0 * self.eps,
            GroupKind::Affine => 4.0 * self.eps * self.eps,
        }
    }
}

/// A word `X_{alpha(1)}, ..., X_{alpha(k)}` of basis vectors with `1 <= k <= 2`.
///
/// The derivative `R^alpha` applies `R(X_{alpha(1)})` first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<Basis>);

impl MultiIndex {
    pub fn new(word: Vec<Basis>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidParameter("empty multi-index".into()));
        }
        if word.len() > 2 {
            return Err(Error::OrderTooHigh(word.len()));
        }
        Ok(Self(word))
    }

    pub fn single(k: Basis) -> Self {
        Self(vec![k])
    }

    pub fn pair(first: Basis, second: Basis) -> Self {
        Self(vec![first, second])
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn word(&self) -> &[Basis] {
        &self.0
    }

    /// All words of order 1 and 2 over the directions of `kind`.
    pub fn all_up_to_two(kind: GroupKind) -> Vec<MultiIndex> {
        let dirs = kind.directions();
        let mut out: Vec<MultiIndex> = dirs.iter().map(|&d| MultiIndex::single(d)).collect();
        for &i in dirs {
            for &j in dirs {
                out.push(MultiIndex::pair(i, j));
            }
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.index().to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = [[f64; 2]; 2];

    fn mat(g: GroupElement) -> M {
        [[g.a(), g.b()], [0.0, 1.0]]
    }

    fn mm(x: M, y: M) -> M {
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        r
    }

    #[test]
    fn product_matches_matrix_oracle() {
        let g = GroupElement::new(2.0, 3.0).unwrap();
        let h = GroupElement::new(4.0, 5.0).unwrap();
        let m = mm(mat(g), mat(h));
        let p = g * h;
        assert_eq!((p.a(), p.b()), (m[0][0], m[0][1]));
        assert_eq!((p.a(), p.b()), (8.0, 13.0));
    }

    #[test]
    fn identity_and_inverse_examples() {
        let g = GroupElement::new(2.0, 3.0).unwrap();
        assert_eq!(g * GroupElement::IDENTITY, g);
        let gi = g.inverse();
        assert_eq!((gi.a(), gi.b()), (0.5, -1.5));
        assert_eq!(g * gi, GroupElement::IDENTITY);
        assert_eq!(GroupElement::IDENTITY.inverse(), GroupElement::IDENTITY);
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(GroupElement::new(0.0, 1.0).is_err());
        assert!(GroupElement::new(-1.0, 1.0).is_err());
        assert!(GroupElement::new(f64::NAN, 1.0).is_err());
        assert!(haar_density(GroupElement { a: -2.0, b: 0.0 }).is_err());
        assert!(multiply(GroupElement { a: 0.0, b: 0.0 }, GroupElement::IDENTITY).is_err());
    }

    #[test]
    fn exp_coords_examples() {
        let l2 = 2f64.ln();
        assert_eq!(exp_coords(0.0, 0.0), GroupElement::IDENTITY);
        assert!(exp_coords(l2, 3.0).approx_eq(&GroupElement::new(2.0, 6.0).unwrap(), 1e-15));
        assert!(exp_coords(l2, 0.0).approx_eq(&GroupElement::new(2.0, 0.0).unwrap(), 1e-15));
    }

    #[test]
    fn bch_swap_examples() {
        let l2 = 2f64.ln();
        assert_eq!(bch_swap(0.0, 1.7), (0.0, 1.7));
        let (t1, s) = bch_swap(l2, 3.0);
        assert!((s - 1.5).abs() < 1e-15 && t1 == l2);
        let lhs = Basis::X2.exp(3.0) * Basis::X1.exp(l2);
        let rhs = Basis::X1.exp(t1) * Basis::X2.exp(s);
        assert!(lhs.approx_eq(&rhs, 1e-15));
        assert!(lhs.approx_eq(&GroupElement::new(2.0, 3.0).unwrap(), 1e-15));
        let (_, s) = bch_swap(-l2, 1.0);
        assert!((s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(adjoint_coeffs(GroupElement::IDENTITY, 1).unwrap(), (1.0, 0.0));
        let y = GroupElement::new(2.0, 3.0).unwrap();
        assert_eq!(adjoint_coeffs(y, 1).unwrap(), (1.0, 1.5));
        assert_eq!(adjoint_coeffs(y, 2).unwrap(), (0.0, 0.5));
        assert!(matches!(adjoint_coeffs(y, 3), Err(Error::InvalidBasisIndex(3))));
    }

    #[test]
    fn haar_density_examples() {
        assert_eq!(haar_density(GroupElement::IDENTITY).unwrap(), 1.0);
        assert_eq!(haar_density(GroupElement::new(2.0, 3.0).unwrap()).unwrap(), 0.25);
        assert_eq!(haar_density(GroupElement::new(0.5, -1.0).unwrap()).unwrap(), 4.0);
        assert_eq!(GroupKind::RealLine.haar_density(GroupElement::translation(4.0)), 1.0);
    }

    #[test]
    fn lie_exp_matches_basis_factors() {
        let d = LieDirection::new(0.3, 0.0);
        assert!(d.exp().approx_eq(&Basis::X1.exp(0.3), 1e-15));
        let d = LieDirection::new(0.0, -1.2);
        assert!(d.exp().approx_eq(&Basis::X2.exp(-1.2), 1e-15));
        // exp is additive along a line through the origin
        let d = LieDirection::new(0.4, 0.9);
        let half = LieDirection::new(0.2, 0.45).exp();
        assert!(d.exp().approx_eq(&(half * half), 1e-14));
    }

    #[test]
    fn neighborhood_membership() {
        let u = EpsNeighborhood::new(0.1).unwrap();
        assert!(u.contains(GroupElement::IDENTITY, GroupKind::Affine));
        assert!(u.contains(exp_coords(0.1, -0.1), GroupKind::Affine));
        assert!(!u.contains(exp_coords(0.11, 0.0), GroupKind::Affine));
        let x = GroupElement::new(3.0, -2.0).unwrap();
        assert!(u.contains_translate(x, x * exp_coords(-0.05, 0.08)));
        assert!(!u.contains_translate(x, x * exp_coords(0.0, 0.2)));
        assert!(EpsNeighborhood::new(0.0).is_err());
    }

    #[test]
    fn multi_indices() {
        assert_eq!(MultiIndex::all_up_to_two(GroupKind::Affine).len(), 6);
        assert_eq!(MultiIndex::all_up_to_two(GroupKind::RealLine).len(), 2);
        assert!(MultiIndex::new(vec![Basis::X1; 3]).is_err());
        assert_eq!(MultiIndex::pair(Basis::X1, Basis::X2).to_string(), "(1,2)");
    }
}

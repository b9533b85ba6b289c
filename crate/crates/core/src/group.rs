//! Exact arithmetic for `Z_p^d`, its Prüfer dual and compact Vilenkin
//! product groups, truncated at a finite level.
//!
//! At level `N` the group is the finite quotient `G/G_N`, a product of
//! cyclic groups (`d` copies of `Z/p^N`, or `Z/m_0 × … × Z/m_{N-1}`).
//! Both points and dual indices are stored as digit vectors over these
//! cyclic factors, coordinate 0 least significant. Dual indices are
//! additionally presented in the canonical order used by every matrix
//! in the crate: norm ascending, flat DFT index ascending within a norm.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest quotient size accepted by [`GroupLevel::new`].
pub const MAX_LEVEL_SIZE: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupDescriptor {
    /// `Z_p^d`.
    Padic { p: u64, d: u32 },
    /// `∏_j Z/m_j`, with the subgroup chain `G_k = {x : x_0 = … = x_{k-1} = 0}`.
    VilenkinProduct { factors: Vec<u64> },
}

impl GroupDescriptor {
    pub fn padic(p: u64, d: u32) -> Result<Self> {
        let g = GroupDescriptor::Padic { p, d };
        g.validate()?;
        Ok(g)
    }

    pub fn vilenkin(factors: Vec<u64>) -> Result<Self> {
        let g = GroupDescriptor::VilenkinProduct { factors };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroupDescriptor::Padic { p, d } => {
                if !is_prime(*p) {
                    return Err(Error::InvalidDescriptor(format!("p = {p} is not prime")));
                }
                if *d == 0 {
                    return Err(Error::InvalidDescriptor("dimension d must be >= 1".into()));
                }
            }
            GroupDescriptor::VilenkinProduct { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidDescriptor("empty factor sequence".into()));
                }
                if let Some(m) = factors.iter().find(|&&m| m < 2) {
                    return Err(Error::InvalidDescriptor(format!("factor {m} is < 2")));
                }
            }
        }
        Ok(())
    }

    /// Topological dimension used by the Sobolev and Weyl exponents.
    pub fn dimension(&self) -> u32 {
        match self {
            GroupDescriptor::Padic { d, .. } => *d,
            GroupDescriptor::VilenkinProduct { .. } => 1,
        }
    }

    /// `sup_k |G_k / G_{k+1}|`.
    pub fn sup_factor(&self) -> u64 {
        match self {
            GroupDescriptor::Padic { p, d } => p.pow(*d),
            GroupDescriptor::VilenkinProduct { factors } => *factors.iter().max().unwrap_or(&0),
        }
    }

    /// The deepest level this descriptor can be truncated at, if bounded.
    pub fn max_level(&self) -> Option<u32> {
        match self {
            GroupDescriptor::Padic { .. } => None,
            GroupDescriptor::VilenkinProduct { factors } => Some(factors.len() as u32),
        }
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupDescriptor::Padic { p, d } => write!(f, "p{p}d{d}"),
            GroupDescriptor::VilenkinProduct { factors } => {
                let parts: Vec<String> = factors.iter().map(u64::to_string).collect();
                write!(f, "vilenkin:{}", parts.join(","))
            }
        }
    }
}

/// Accepts `p2d1`, `p3d2`, … and `vilenkin:2,3,2`.
impl FromStr for GroupDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDescriptor(format!("cannot parse group `{s}`"));
        if let Some(rest) = s.strip_prefix("vilenkin:") {
            let factors = rest
                .split(',')
                .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            return GroupDescriptor::vilenkin(factors);
        }
        let rest = s.strip_prefix('p').ok_or_else(bad)?;
        let (p, d) = rest.split_once('d').ok_or_else(bad)?;
        let p = p.parse().map_err(|_| bad())?;
        let d = d.parse().map_err(|_| bad())?;
        GroupDescriptor::padic(p, d)
    }
}

/// JSON form of a level: `{"kind","p","d","factors","N"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub kind: String,
    pub p: Option<u64>,
    pub d: Option<u32>,
    pub factors: Option<Vec<u64>>,
    #[serde(rename = "N")]
    pub n: u32,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

/// p-adic valuation of a non-zero integer.
fn valuation(mut m: u64, p: u64) -> u32 {
    debug_assert!(m != 0);
    let mut v = 0;
    while m.is_multiple_of(p) {
        m /= p;
        v += 1;
    }
    v
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// An exact rational in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FractionalValue {
    num: u64,
    den: u64,
}

impl FractionalValue {
    /// Reduces `num/den` modulo 1 and to lowest terms.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let num = num % den;
        if num == 0 {
            return FractionalValue { num: 0, den: 1 };
        }
        let g = gcd(num, den);
        FractionalValue {
            num: num / g,
            den: den / g,
        }
    }

    pub fn zero() -> Self {
        FractionalValue { num: 0, den: 1 }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `exp(2πi·self)`, the only transcendental call in a character value.
    pub fn exp_2pi_i(&self) -> Complex64 {
        unit_root(self.num, self.den)
    }
}

impl fmt::Display for FractionalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// `exp(2πi·num/den)` evaluated with octant reduction so that quarter
/// turns come out exact.
pub(crate) fn unit_root(num: u64, den: u64) -> Complex64 {
    let num = num % den;
    // reduce to the first quadrant: 4·num = q·den + r
    let scaled = 4 * num as u128;
    let q = (scaled / den as u128) as u64;
    let r = (scaled % den as u128) as u64;
    let theta = std::f64::consts::FRAC_PI_2 * (r as f64 / den as f64);
    let (s, c) = theta.sin_cos();
    match q % 4 {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

/// One coordinate of a Prüfer element `a/p^k` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PruferCoord {
    pub num: u64,
    pub exp: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum DualRepr {
    Prufer { p: u64, coords: Vec<PruferCoord> },
    /// Digits with trailing zeros removed, so the value is level independent.
    Digits { factors: Arc<[u64]>, digits: Vec<u64> },
}

/// An element of the dual group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DualIndex {
    repr: DualRepr,
    norm: u64,
}

impl DualIndex {
    /// A Prüfer element from per-coordinate rationals `num/p^exp`.
    /// The rationals are reduced modulo 1 and to lowest terms.
    pub fn prufer(p: u64, coords: &[(u64, u32)]) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidDescriptor(format!("p = {p} is not prime")));
        }
        let coords = coords
            .iter()
            .map(|&(num, exp)| reduce_prufer(p, num, exp))
            .collect::<Vec<_>>();
        Ok(Self::from_prufer(p, coords))
    }

    fn from_prufer(p: u64, coords: Vec<PruferCoord>) -> Self {
        let norm = coords
            .iter()
            .filter(|c| c.num != 0)
            .map(|c| p.pow(c.exp))
            .max()
            .unwrap_or(0);
        DualIndex {
            repr: DualRepr::Prufer { p, coords },
            norm,
        }
    }

    /// A Vilenkin dual element from its digit sequence `(b_0, b_1, …)`.
    pub fn digits(factors: &[u64], digits: &[u64]) -> Result<Self> {
        if digits.len() > factors.len() {
            return Err(Error::GroupMismatch("more digits than factors".into()));
        }
        let digits: Vec<u64> = digits.iter().zip(factors).map(|(b, m)| b % m).collect();
        Ok(Self::from_digits(factors.into(), digits))
    }

    fn from_digits(factors: Arc<[u64]>, mut digits: Vec<u64>) -> Self {
        while digits.last() == Some(&0) {
            digits.pop();
        }
        let norm = if digits.is_empty() {
            0
        } else {
            factors[..digits.len()].iter().product()
        };
        DualIndex {
            repr: DualRepr::Digits { factors, digits },
            norm,
        }
    }

    /// `‖ξ‖`, zero for the trivial character.
    pub fn norm(&self) -> u64 {
        self.norm
    }

    /// `⟨ξ⟩ = max(1, ‖ξ‖)`.
    pub fn bracket(&self) -> u64 {
        self.norm.max(1)
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0
    }

    /// Prüfer coordinates, `None` for Vilenkin digits.
    pub fn prufer_coords(&self) -> Option<&[PruferCoord]> {
        match &self.repr {
            DualRepr::Prufer { coords, .. } => Some(coords),
            DualRepr::Digits { .. } => None,
        }
    }

    /// Significant Vilenkin digits, `None` for Prüfer elements.
    pub fn digit_values(&self) -> Option<&[u64]> {
        match &self.repr {
            DualRepr::Digits { digits, .. } => Some(digits),
            DualRepr::Prufer { .. } => None,
        }
    }

    fn same_group(&self, other: &DualIndex) -> bool {
        match (&self.repr, &other.repr) {
            (DualRepr::Prufer { p: a, coords: ca }, DualRepr::Prufer { p: b, coords: cb }) => {
                a == b && ca.len() == cb.len()
            }
            (DualRepr::Digits { factors: a, .. }, DualRepr::Digits { factors: b, .. }) => a == b,
            _ => false,
        }
    }
}

fn reduce_prufer(p: u64, num: u64, exp: u32) -> PruferCoord {
    let den = p.pow(exp);
    let mut num = num % den;
    let mut exp = exp;
    if num == 0 {
        return PruferCoord { num: 0, exp: 0 };
    }
    while num.is_multiple_of(p) {
        num /= p;
        exp -= 1;
    }
    PruferCoord { num, exp }
}

impl fmt::Display for DualIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            DualRepr::Prufer { p, coords } => {
                let parts: Vec<String> = coords
                    .iter()
                    .map(|c| {
                        if c.num == 0 {
                            "0".to_string()
                        } else {
                            format!("{}/{}", c.num, p.pow(c.exp))
                        }
                    })
                    .collect();
                if parts.len() == 1 {
                    write!(f, "{}", parts[0])
                } else {
                    write!(f, "({})", parts.join(", "))
                }
            }
            DualRepr::Digits { digits, .. } => {
                let parts: Vec<String> = digits.iter().map(u64::to_string).collect();
                write!(f, "[{}]", parts.join(","))
            }
        }
    }
}

/// Addition in the dual group (`Q_p/Z_p` coordinate-wise, or digit-wise
/// modulo `m_j`).
pub fn prufer_add(xi: &DualIndex, eta: &DualIndex) -> Result<DualIndex> {
    if !xi.same_group(eta) {
        return Err(Error::GroupMismatch(format!("cannot add {xi} and {eta}")));
    }
    match (&xi.repr, &eta.repr) {
        (DualRepr::Prufer { p, coords: a }, DualRepr::Prufer { coords: b, .. }) => {
            let coords = a
                .iter()
                .zip(b)
                .map(|(u, v)| {
                    let exp = u.exp.max(v.exp);
                    let num = u.num * p.pow(exp - u.exp) + v.num * p.pow(exp - v.exp);
                    reduce_prufer(*p, num, exp)
                })
                .collect();
            Ok(DualIndex::from_prufer(*p, coords))
        }
        (DualRepr::Digits { factors, digits: a }, DualRepr::Digits { digits: b, .. }) => {
            let len = a.len().max(b.len());
            let digits = (0..len)
                .map(|j| (a.get(j).unwrap_or(&0) + b.get(j).unwrap_or(&0)) % factors[j])
                .collect();
            Ok(DualIndex::from_digits(factors.clone(), digits))
        }
        _ => unreachable!("checked by same_group"),
    }
}

/// A point of the level-N quotient: one residue per cyclic factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointIndex {
    pub coords: Vec<u64>,
}

struct LevelData {
    descriptor: GroupDescriptor,
    level: u32,
    size: usize,
    /// Sizes of the cyclic factors, coordinate 0 first.
    radices: Vec<u64>,
    strides: Vec<usize>,
    /// canonical position -> flat DFT index
    order: Vec<usize>,
    /// flat DFT index -> canonical position
    position: Vec<usize>,
    norms: Vec<u64>,
    shell_of: Vec<u32>,
    shells: Vec<Range<usize>>,
    /// `∏_{j<k} m_j` for `k = 0..=N` (`p^{kd}` shell cumulative sizes, `ν(Ĝ_k)`).
    annihilator_sizes: Vec<u64>,
    /// Per-shell norm value, `annihilator norm` for shell k (0 for the trivial shell).
    shell_norms: Vec<u64>,
}

/// A descriptor truncated at level `N`. Cheap to clone.
#[derive(Clone)]
pub struct GroupLevel {
    inner: Arc<LevelData>,
}

impl PartialEq for GroupLevel {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.level == other.inner.level
                && self.inner.descriptor == other.inner.descriptor)
    }
}

impl Eq for GroupLevel {}

impl fmt::Debug for GroupLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupLevel")
            .field("descriptor", &self.inner.descriptor)
            .field("N", &self.inner.level)
            .field("M", &self.inner.size)
            .finish()
    }
}

impl fmt::Display for GroupLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} N={}", self.inner.descriptor, self.inner.level)
    }
}

/// `make_level`: validates the descriptor and builds the level tables.
pub fn make_level(descriptor: &GroupDescriptor, level: u32) -> Result<GroupLevel> {
    GroupLevel::new(descriptor.clone(), level)
}

impl GroupLevel {
    pub fn new(descriptor: GroupDescriptor, level: u32) -> Result<Self> {
        descriptor.validate()?;
        let radices: Vec<u64> = match &descriptor {
            GroupDescriptor::Padic { p, d } => {
                let side = checked_pow(*p, level)?;
                vec![side; *d as usize]
            }
            GroupDescriptor::VilenkinProduct { factors } => {
                if level as usize > factors.len() {
                    return Err(Error::InvalidDescriptor(format!(
                        "level {level} exceeds the {} declared factors",
                        factors.len()
                    )));
                }
                factors[..level as usize].to_vec()
            }
        };
        let mut size: u128 = 1;
        for &r in &radices {
            size *= r as u128;
            if size > MAX_LEVEL_SIZE as u128 {
                return Err(Error::LevelTooLarge {
                    size,
                    cap: MAX_LEVEL_SIZE,
                });
            }
        }
        let size = size as usize;
        let mut strides = Vec::with_capacity(radices.len());
        let mut acc = 1usize;
        for &r in &radices {
            strides.push(acc);
            acc *= r as usize;
        }

        let annihilator_sizes: Vec<u64> = match &descriptor {
            GroupDescriptor::Padic { p, d } => (0..=level).map(|k| p.pow(k * d)).collect(),
            GroupDescriptor::VilenkinProduct { factors } => (0..=level as usize)
                .map(|k| factors[..k].iter().product())
                .collect(),
        };
        let shell_norms: Vec<u64> = match &descriptor {
            GroupDescriptor::Padic { p, .. } => (0..=level)
                .map(|k| if k == 0 { 0 } else { p.pow(k) })
                .collect(),
            GroupDescriptor::VilenkinProduct { .. } => (0..=level as usize)
                .map(|k| if k == 0 { 0 } else { annihilator_sizes[k] })
                .collect(),
        };

        let mut shell_by_dft = vec![0u32; size];
        let mut digits = vec![0u64; radices.len()];
        for (m, slot) in shell_by_dft.iter_mut().enumerate() {
            split_digits(m, &radices, &mut digits);
            *slot = match &descriptor {
                GroupDescriptor::Padic { p, .. } => digits
                    .iter()
                    .filter(|&&c| c != 0)
                    .map(|&c| level - valuation(c, *p))
                    .max()
                    .unwrap_or(0),
                GroupDescriptor::VilenkinProduct { .. } => {
                    digits.iter().rposition(|&b| b != 0).map_or(0, |j| j as u32 + 1)
                }
            };
        }
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by_key(|&m| (shell_by_dft[m], m));
        let mut position = vec![0usize; size];
        for (pos, &m) in order.iter().enumerate() {
            position[m] = pos;
        }
        let shell_of: Vec<u32> = order.iter().map(|&m| shell_by_dft[m]).collect();
        let norms: Vec<u64> = shell_of.iter().map(|&s| shell_norms[s as usize]).collect();
        let mut shells = Vec::with_capacity(level as usize + 1);
        let mut start = 0;
        for k in 0..=level {
            let end = start + shell_of[start..].iter().take_while(|&&s| s == k).count();
            shells.push(start..end);
            start = end;
        }

        Ok(GroupLevel {
            inner: Arc::new(LevelData {
                descriptor,
                level,
                size,
                radices,
                strides,
                order,
                position,
                norms,
                shell_of,
                shells,
                annihilator_sizes,
                shell_norms,
            }),
        })
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.inner.descriptor
    }

    /// The truncation level `N`.
    pub fn level(&self) -> u32 {
        self.inner.level
    }

    /// The quotient size `M`.
    pub fn size(&self) -> usize {
        self.inner.size
    }

    pub fn dimension(&self) -> u32 {
        self.inner.descriptor.dimension()
    }

    /// Sizes of the cyclic factors the quotient decomposes into.
    pub fn radices(&self) -> &[u64] {
        &self.inner.radices
    }

    pub fn strides(&self) -> &[usize] {
        &self.inner.strides
    }

    /// The same group at another level.
    pub fn with_level(&self, level: u32) -> Result<GroupLevel> {
        GroupLevel::new(self.inner.descriptor.clone(), level)
    }

    pub fn spec(&self) -> LevelSpec {
        match &self.inner.descriptor {
            GroupDescriptor::Padic { p, d } => LevelSpec {
                kind: "padic".into(),
                p: Some(*p),
                d: Some(*d),
                factors: None,
                n: self.inner.level,
            },
            GroupDescriptor::VilenkinProduct { factors } => LevelSpec {
                kind: "vilenkin_product".into(),
                p: None,
                d: None,
                factors: Some(factors.clone()),
                n: self.inner.level,
            },
        }
    }

    pub fn from_spec(spec: &LevelSpec) -> Result<GroupLevel> {
        let descriptor = match spec.kind.as_str() {
            "padic" => GroupDescriptor::padic(
                spec.p
                    .ok_or_else(|| Error::InvalidDescriptor("padic group needs `p`".into()))?,
                spec.d.unwrap_or(1),
            )?,
            "vilenkin_product" => GroupDescriptor::vilenkin(spec.factors.clone().ok_or_else(
                || Error::InvalidDescriptor("vilenkin_product group needs `factors`".into()),
            )?)?,
            other => return Err(Error::InvalidDescriptor(format!("unknown kind `{other}`"))),
        };
        GroupLevel::new(descriptor, spec.n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec()).expect("level spec serializes")
    }

    pub fn from_json(text: &str) -> Result<GroupLevel> {
        let spec: LevelSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidDescriptor(format!("bad level JSON: {e}")))?;
        GroupLevel::from_spec(&spec)
    }

    fn same_as(&self, other: &GroupLevel) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LevelMismatch(format!("{self} vs {other}")))
        }
    }

    pub(crate) fn check_same(&self, other: &GroupLevel) -> Result<()> {
        self.same_as(other)
    }

    // ---- points ----

    pub fn point(&self, flat: usize) -> PointIndex {
        let mut coords = vec![0; self.inner.radices.len()];
        split_digits(flat, &self.inner.radices, &mut coords);
        PointIndex { coords }
    }

    pub fn point_flat(&self, x: &PointIndex) -> Result<usize> {
        if x.coords.len() != self.inner.radices.len() {
            return Err(Error::GroupMismatch("point has the wrong number of coordinates".into()));
        }
        let mut flat = 0;
        for ((&c, &r), &s) in x.coords.iter().zip(&self.inner.radices).zip(&self.inner.strides) {
            if c >= r {
                return Err(Error::GroupMismatch(format!("coordinate {c} out of range 0..{r}")));
            }
            flat += c as usize * s;
        }
        Ok(flat)
    }

    /// `|x|` of the level representative, and whether the truncation
    /// floor `1/M_coord` was used (the zero residue).
    pub fn point_norm(&self, flat: usize) -> (f64, bool) {
        let x = self.point(flat);
        match &self.inner.descriptor {
            GroupDescriptor::Padic { p, .. } => {
                if x.coords.iter().all(|&c| c == 0) {
                    return ((*p as f64).powi(-(self.inner.level as i32)), true);
                }
                let ord = x
                    .coords
                    .iter()
                    .filter(|&&c| c != 0)
                    .map(|&c| valuation(c, *p))
                    .min()
                    .unwrap();
                ((*p as f64).powi(-(ord as i32)), false)
            }
            GroupDescriptor::VilenkinProduct { .. } => match x.coords.iter().position(|&c| c != 0) {
                Some(k) => (1.0 / self.inner.annihilator_sizes[k] as f64, false),
                None => (1.0 / self.inner.size as f64, true),
            },
        }
    }

    /// Digit `j` of the point: the base-p digit of coordinate 0 for
    /// `Z_p^d`, the residue `x_j` for product groups.
    pub fn point_digit(&self, flat: usize, j: u32) -> u64 {
        let x = self.point(flat);
        match &self.inner.descriptor {
            GroupDescriptor::Padic { p, .. } => {
                if j >= self.inner.level {
                    0
                } else {
                    (x.coords[0] / p.pow(j)) % p
                }
            }
            GroupDescriptor::VilenkinProduct { .. } => x.coords.get(j as usize).copied().unwrap_or(0),
        }
    }

    // ---- duals ----

    pub fn dft_index(&self, pos: usize) -> usize {
        self.inner.order[pos]
    }

    pub fn position_of_dft(&self, dft: usize) -> usize {
        self.inner.position[dft]
    }

    /// canonical position -> flat DFT index, for the whole level.
    pub fn dft_order(&self) -> &[usize] {
        &self.inner.order
    }

    pub fn dual_norm(&self, pos: usize) -> u64 {
        self.inner.norms[pos]
    }

    pub fn dual_bracket(&self, pos: usize) -> u64 {
        self.inner.norms[pos].max(1)
    }

    pub fn dual_norms(&self) -> &[u64] {
        &self.inner.norms
    }

    /// Shell index of a canonical position: 0 for `ξ = 0`, `k` when `‖ξ‖`
    /// is the k-th annihilator size.
    pub fn shell(&self, pos: usize) -> u32 {
        self.inner.shell_of[pos]
    }

    /// Contiguous canonical ranges of the shells `0..=N`.
    pub fn shells(&self) -> &[Range<usize>] {
        &self.inner.shells
    }

    /// Norm attained on shell `k` (0 on the trivial shell).
    pub fn shell_norm(&self, k: usize) -> u64 {
        self.inner.shell_norms[k]
    }

    fn dft_digits(&self, pos: usize) -> Vec<u64> {
        let mut digits = vec![0; self.inner.radices.len()];
        split_digits(self.inner.order[pos], &self.inner.radices, &mut digits);
        digits
    }

    fn position_from_digits(&self, digits: &[u64]) -> usize {
        let flat: usize = digits
            .iter()
            .zip(&self.inner.strides)
            .map(|(&b, &s)| b as usize * s)
            .sum();
        self.inner.position[flat]
    }

    /// The dual element at a canonical position.
    pub fn dual(&self, pos: usize) -> DualIndex {
        let digits = self.dft_digits(pos);
        match &self.inner.descriptor {
            GroupDescriptor::Padic { p, .. } => {
                let n = self.inner.level;
                let coords = digits
                    .iter()
                    .map(|&m| {
                        if m == 0 {
                            PruferCoord { num: 0, exp: 0 }
                        } else {
                            let k = n - valuation(m, *p);
                            PruferCoord {
                                num: m / p.pow(n - k),
                                exp: k,
                            }
                        }
                    })
                    .collect();
                DualIndex::from_prufer(*p, coords)
            }
            GroupDescriptor::VilenkinProduct { factors } => {
                DualIndex::from_digits(factors.as_slice().into(), digits)
            }
        }
    }

    /// Canonical position of a dual element that lives at this level.
    pub fn position_of(&self, xi: &DualIndex) -> Result<usize> {
        match (&self.inner.descriptor, &xi.repr) {
            (GroupDescriptor::Padic { p, d }, DualRepr::Prufer { p: q, coords })
                if p == q && *d as usize == coords.len() =>
            {
                let n = self.inner.level;
                let mut digits = Vec::with_capacity(coords.len());
                for c in coords {
                    if c.exp > n {
                        return Err(Error::LevelTooCoarse(xi.to_string()));
                    }
                    digits.push(c.num * p.pow(n - c.exp));
                }
                Ok(self.position_from_digits(&digits))
            }
            (GroupDescriptor::VilenkinProduct { factors }, DualRepr::Digits { factors: f, digits })
                if factors.as_slice() == &f[..] =>
            {
                if digits.len() > self.inner.level as usize {
                    return Err(Error::LevelTooCoarse(xi.to_string()));
                }
                let mut full = digits.clone();
                full.resize(self.inner.radices.len(), 0);
                Ok(self.position_from_digits(&full))
            }
            _ => Err(Error::GroupMismatch(format!("{xi} is not a character of {self}"))),
        }
    }

    /// Canonical position of `ξ + η`.
    pub fn add_positions(&self, a: usize, b: usize) -> usize {
        let da = self.dft_digits(a);
        let db = self.dft_digits(b);
        let sum: Vec<u64> = da
            .iter()
            .zip(&db)
            .zip(&self.inner.radices)
            .map(|((x, y), r)| (x + y) % r)
            .collect();
        self.position_from_digits(&sum)
    }

    /// Canonical position of `−ξ`.
    pub fn neg_position(&self, a: usize) -> usize {
        let neg: Vec<u64> = self
            .dft_digits(a)
            .iter()
            .zip(&self.inner.radices)
            .map(|(x, r)| (r - x) % r)
            .collect();
        self.position_from_digits(&neg)
    }

    /// `shift[ξ] = position of ξ + η` for all canonical `ξ`.
    pub fn shift_table(&self, eta: usize) -> Vec<usize> {
        let de = self.dft_digits(eta);
        let mut digits = vec![0; self.inner.radices.len()];
        (0..self.inner.size)
            .map(|pos| {
                split_digits(self.inner.order[pos], &self.inner.radices, &mut digits);
                for ((x, y), r) in digits.iter_mut().zip(&de).zip(&self.inner.radices) {
                    *x = (*x + y) % r;
                }
                self.position_from_digits(&digits)
            })
            .collect()
    }

    /// Common denominator of every pairing at this level.
    pub fn phase_modulus(&self) -> u64 {
        self.inner.radices.iter().fold(1, |acc, &r| acc / gcd(acc, r) * r)
    }
}

fn checked_pow(base: u64, exp: u32) -> Result<u64> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc *= base as u128;
        if acc > MAX_LEVEL_SIZE as u128 {
            return Err(Error::LevelTooLarge {
                size: acc,
                cap: MAX_LEVEL_SIZE,
            });
        }
    }
    Ok(acc as u64)
}

pub(crate) fn split_digits(mut flat: usize, radices: &[u64], out: &mut [u64]) {
    for (slot, &r) in out.iter_mut().zip(radices) {
        *slot = (flat % r as usize) as u64;
        flat /= r as usize;
    }
}

/// Ordered dual group with the DFT-index bijection alongside.
#[derive(Clone, Debug)]
pub struct DualEnumeration {
    pub duals: Vec<DualIndex>,
    pub dft_indices: Vec<usize>,
}

/// All `M` characters of the level in canonical order.
pub fn dual_enumerate(level: &GroupLevel) -> DualEnumeration {
    DualEnumeration {
        duals: (0..level.size()).map(|pos| level.dual(pos)).collect(),
        dft_indices: level.dft_order().to_vec(),
    }
}

/// `{ξ·x}`: the exact fractional part of the pairing.
pub fn pairing(xi: &DualIndex, x: &PointIndex, level: &GroupLevel) -> Result<FractionalValue> {
    // position_of performs the group and level checks
    level.position_of(xi)?;
    if x.coords.len() != level.radices().len() {
        return Err(Error::GroupMismatch("point has the wrong number of coordinates".into()));
    }
    match &xi.repr {
        DualRepr::Prufer { p, coords } => {
            let kmax = coords.iter().map(|c| c.exp).max().unwrap_or(0);
            let den = p.pow(kmax);
            let mut num: u64 = 0;
            for (c, &xv) in coords.iter().zip(&x.coords) {
                let modulus = p.pow(c.exp);
                let term = (c.num as u128 * (xv % modulus) as u128 % modulus as u128) as u64;
                num = (num + term * p.pow(kmax - c.exp)) % den;
            }
            Ok(FractionalValue::new(num, den))
        }
        DualRepr::Digits { factors, digits } => {
            let den: u64 = factors[..digits.len()].iter().product::<u64>().max(1);
            let mut num: u64 = 0;
            for (j, &b) in digits.iter().enumerate() {
                let m = factors[j];
                let term = b * (x.coords[j] % m) % m;
                num = (num + term * (den / m)) % den;
            }
            Ok(FractionalValue::new(num, den))
        }
    }
}

/// `χ(ξ·x) = exp(2πi {ξ·x})`.
pub fn character(xi: &DualIndex, x: &PointIndex, level: &GroupLevel) -> Result<Complex64> {
    Ok(pairing(xi, x, level)?.exp_2pi_i())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn padic(p: u64, d: u32, n: u32) -> GroupLevel {
        make_level(&GroupDescriptor::padic(p, d).unwrap(), n).unwrap()
    }

    #[test]
    fn level_sizes() {
        assert_eq!(padic(2, 1, 3).size(), 8);
        assert_eq!(padic(3, 2, 2).size(), 81);
        let v = GroupDescriptor::vilenkin(vec![2, 3, 2]).unwrap();
        assert_eq!(make_level(&v, 3).unwrap().size(), 12);
    }

    #[test]
    fn descriptor_errors() {
        assert!(matches!(GroupDescriptor::padic(4, 1), Err(Error::InvalidDescriptor(_))));
        assert!(matches!(GroupDescriptor::vilenkin(vec![2, 1]), Err(Error::InvalidDescriptor(_))));
        let g = GroupDescriptor::padic(2, 1).unwrap();
        assert!(matches!(make_level(&g, 21), Err(Error::LevelTooLarge { .. })));
        assert!(make_level(&g, 20).is_ok());
        let g = GroupDescriptor::padic(3, 2).unwrap();
        assert!(matches!(make_level(&g, 7), Err(Error::LevelTooLarge { .. })));
    }

    #[test]
    fn enumerate_p2_n2() {
        let level = padic(2, 1, 2);
        let e = dual_enumerate(&level);
        let names: Vec<String> = e.duals.iter().map(|d| d.to_string()).collect();
        assert_eq!(names, ["0", "1/2", "1/4", "3/4"]);
        assert_eq!(e.dft_indices, [0, 2, 1, 3]);
        // the DFT index reproduces the character: e^{-2πi a j/2^k} = e^{-2πi m j/4}
        for (xi, &m) in e.duals.iter().zip(&e.dft_indices) {
            for j in 0..4u64 {
                let x = PointIndex { coords: vec![j] };
                let a = character(xi, &x, &level).unwrap();
                let b = unit_root(m as u64 * j, 4);
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn enumerate_small() {
        let e = dual_enumerate(&padic(2, 1, 1));
        assert_eq!(e.duals.iter().map(|d| d.to_string()).collect::<Vec<_>>(), ["0", "1/2"]);
        let e = dual_enumerate(&padic(3, 1, 1));
        assert_eq!(
            e.duals.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            ["0", "1/3", "2/3"]
        );
        assert_eq!(e.duals.iter().map(DualIndex::norm).collect::<Vec<_>>(), [0, 3, 3]);
    }

    #[test]
    fn prufer_addition_examples() {
        let third = DualIndex::prufer(3, &[(1, 1)]).unwrap();
        let two_thirds = DualIndex::prufer(3, &[(2, 1)]).unwrap();
        assert!(prufer_add(&third, &two_thirds).unwrap().is_zero());
        let half = DualIndex::prufer(2, &[(1, 1)]).unwrap();
        let quarter = DualIndex::prufer(2, &[(1, 2)]).unwrap();
        assert_eq!(prufer_add(&half, &quarter).unwrap().to_string(), "3/4");
        let three_q = DualIndex::prufer(2, &[(3, 2)]).unwrap();
        let z = prufer_add(&quarter, &three_q).unwrap();
        assert_eq!(z.norm(), 0);
        assert_eq!(z.bracket(), 1);
        assert!(matches!(prufer_add(&half, &third), Err(Error::GroupMismatch(_))));
    }

    #[test]
    fn pairing_and_character_examples() {
        let level = padic(2, 1, 2);
        let half = DualIndex::prufer(2, &[(1, 1)]).unwrap();
        let quarter = DualIndex::prufer(2, &[(1, 2)]).unwrap();
        let zero = DualIndex::prufer(2, &[(0, 0)]).unwrap();
        let x3 = PointIndex { coords: vec![3] };
        let x1 = PointIndex { coords: vec![1] };
        assert_eq!(pairing(&half, &x3, &level).unwrap(), FractionalValue::new(1, 2));
        assert_eq!(pairing(&zero, &x3, &level).unwrap(), FractionalValue::zero());
        assert_eq!(pairing(&quarter, &x3, &level).unwrap(), FractionalValue::new(3, 4));
        assert_eq!(character(&half, &x1, &level).unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(character(&zero, &x1, &level).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(character(&quarter, &x1, &level).unwrap(), Complex64::new(0.0, 1.0));
        let eighth = DualIndex::prufer(2, &[(1, 3)]).unwrap();
        assert!(matches!(pairing(&eighth, &x1, &level), Err(Error::LevelTooCoarse(_))));
    }

    #[test]
    fn vilenkin_norms_follow_annihilator_chain() {
        let g = GroupDescriptor::vilenkin(vec![2, 3, 2]).unwrap();
        let level = make_level(&g, 3).unwrap();
        let norms = level.dual_norms();
        assert_eq!(norms[0], 0);
        // shell sizes 1, 1, 4, 6
        let sizes: Vec<usize> = level.shells().iter().map(|r| r.len()).collect();
        assert_eq!(sizes, [1, 1, 4, 6]);
        assert_eq!(level.shell_norm(1), 2);
        assert_eq!(level.shell_norm(2), 6);
        assert_eq!(level.shell_norm(3), 12);
        let xi = DualIndex::digits(&[2, 3, 2], &[1, 2]).unwrap();
        assert_eq!(xi.norm(), 6);
        let x = PointIndex { coords: vec![1, 1, 0] };
        assert_eq!(pairing(&xi, &x, &level).unwrap(), FractionalValue::new(7, 6));
    }

    #[test]
    fn shells_are_contiguous_and_sized() {
        let level = padic(3, 2, 2);
        let sizes: Vec<usize> = level.shells().iter().map(|r| r.len()).collect();
        assert_eq!(sizes, [1, 8, 72]);
        for (k, r) in level.shells().iter().enumerate() {
            for pos in r.clone() {
                assert_eq!(level.shell(pos) as usize, k);
                assert_eq!(level.dual_norm(pos), level.shell_norm(k));
            }
        }
    }

    #[test]
    fn character_multiplicative_and_orthonormal_exhaustive() {
        let levels = [
            padic(2, 1, 4),
            padic(3, 1, 2),
            padic(2, 2, 2),
            make_level(&GroupDescriptor::vilenkin(vec![2, 3, 2]).unwrap(), 3).unwrap(),
        ];
        for level in &levels {
            let m = level.size();
            let duals = dual_enumerate(level).duals;
            let table: Vec<Vec<Complex64>> = duals
                .iter()
                .map(|xi| {
                    (0..m)
                        .map(|j| character(xi, &level.point(j), level).unwrap())
                        .collect()
                })
                .collect();
            for a in 0..m {
                for b in 0..m {
                    let sum = prufer_add(&duals[a], &duals[b]).unwrap();
                    let s = level.position_of(&sum).unwrap();
                    assert_eq!(s, level.add_positions(a, b));
                    let mut inner = Complex64::new(0.0, 0.0);
                    for j in 0..m {
                        assert!((table[s][j] - table[a][j] * table[b][j]).norm() < 1e-12);
                        inner += table[a][j] * table[b][j].conj();
                    }
                    inner /= m as f64;
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((inner - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ultrametric_exhaustive() {
        for level in [padic(2, 1, 4), padic(5, 1, 2), padic(2, 2, 2)] {
            let duals = dual_enumerate(&level).duals;
            for a in &duals {
                for b in &duals {
                    let s = prufer_add(a, b).unwrap();
                    assert!(s.norm() <= a.norm().max(b.norm()));
                    if a.norm() != b.norm() {
                        assert_eq!(s.norm(), a.norm().max(b.norm()));
                    }
                }
            }
        }
    }

    #[test]
    fn dft_bijection() {
        for level in [padic(2, 1, 5), padic(3, 2, 2), padic(7, 1, 2)] {
            let mut seen = vec![false; level.size()];
            for pos in 0..level.size() {
                let m = level.dft_index(pos);
                assert!(!seen[m]);
                seen[m] = true;
                assert_eq!(level.position_of_dft(m), pos);
                assert_eq!(level.position_of(&level.dual(pos)).unwrap(), pos);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let level = padic(3, 2, 2);
        let text = level.to_json();
        assert_eq!(text, r#"{"kind":"padic","p":3,"d":2,"factors":null,"N":2}"#);
        assert_eq!(GroupLevel::from_json(&text).unwrap(), level);
        let v = make_level(&"vilenkin:2,3,2".parse().unwrap(), 2).unwrap();
        assert_eq!(GroupLevel::from_json(&v.to_json()).unwrap(), v);
        assert!(GroupLevel::from_json(r#"{"kind":"padic","p":3,"N":1,"extra":1}"#).is_err());
    }

    #[test]
    fn point_norm_floor() {
        let level = padic(2, 1, 3);
        assert_eq!(level.point_norm(0), (0.125, true));
        assert_eq!(level.point_norm(4), (0.25, false));
        assert_eq!(level.point_norm(3), (1.0, false));
        assert_eq!(level.point_digit(6, 1), 1);
        assert_eq!(level.point_digit(6, 0), 0);
    }

    #[test]
    fn unit_root_quarters_exact() {
        assert_eq!(unit_root(1, 4), Complex64::new(0.0, 1.0));
        assert_eq!(unit_root(2, 4), Complex64::new(-1.0, 0.0));
        assert_eq!(unit_root(3, 4), Complex64::new(0.0, -1.0));
        assert_eq!(unit_root(5, 4), Complex64::new(0.0, 1.0));
    }
}

//! Structure definition: parameters, node addressing, exact node abscissae
//! and the digit/sawtooth primitives everything else is built from.
//!
//! The structure is a planar binary tree of straight bars. Level `i`
//! (counted from the ground, `i = 1..=P`) holds `2^i` bars of length
//! `L·2^(1-i)`, all inclined at the same angle to the horizontal; the two
//! level-1 bars fork directly from a clamped ground point. Bending inertia,
//! cross-sectional area and shear area shrink geometrically with the level:
//!
//! - `I_i  = I  · a^(1-i)`, inertia ratio `a > 1`
//! - `A_i  = A  · u^(1-i)`, area ratio `u > 1`
//! - `A*_i = A* · v^(1-i)`, shear-area ratio `v > 1`
//!
//! A unit total load is split evenly over the `2^P` top ("end") nodes.
//!
//! End nodes are addressed by two normalized abscissae on `[0, 1]`, kept as
//! exact rationals ([`ExactPos`]) because binary-digit extraction from
//! floats is unstable at depth:
//!
//! - vertical profiles use `z(w) = (2w−1)/2^(P+1)` (edge margins of `2^-(P+1)`)
//! - horizontal profiles use `z*(w) = (w−1)/(2^P−1)` (endpoints included)
//!
//! `sigma` is the distance-to-nearest-integer sawtooth and `rho_k` the k-th
//! canonical binary digit; dyadic rationals always use the terminating
//! expansion so every digit-based quantity is single-valued.

use thiserror::Error;

/// Largest supported level count. Exact dyadic abscissae need
/// `2^(P+1)` to fit in a `u64`.
pub const MAX_LEVELS: u32 = 60;

/// Full parameter vector of a finite structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// Bar inclination from the horizontal, radians, in `(0, π/2]`.
    pub angle: f64,
    /// Young's modulus `E` (Pa).
    pub young_modulus: f64,
    /// Shear modulus `G` (Pa).
    pub shear_modulus: f64,
    /// Level-1 bar length `L` (m).
    pub base_length: f64,
    /// Level-1 second moment of area `I` (m⁴).
    pub base_inertia: f64,
    /// Level-1 cross-sectional area `A` (m²).
    pub base_area: f64,
    /// Level-1 shear area `A*` (m²).
    pub base_shear_area: f64,
    /// Inertia reduction ratio per level `a`, > 1.
    pub inertia_ratio: f64,
    /// Area reduction ratio per level `u`, > 1.
    pub area_ratio: f64,
    /// Shear-area reduction ratio per level `v`, > 1.
    pub shear_area_ratio: f64,
    /// Level count `P` ≥ 1.
    pub levels: u32,
}

/// One violated parameter constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("{0} must be strictly positive and finite")]
    NonPositive(&'static str),
    #[error("{0} must be finite and greater than one")]
    RatioNotAboveOne(&'static str),
    #[error("level count must be at least one")]
    ZeroLevels,
    #[error("level count exceeds the supported maximum of {MAX_LEVELS}")]
    TooManyLevels,
    #[error("angle must lie in (0, pi/2] radians")]
    AngleOutOfRange,
}

/// Validation failure naming every violated constraint.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid parameters: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl TreeParams {
    /// Checks every constraint, returning the parameters unchanged or an
    /// error listing all violations at once.
    pub fn validate(self) -> Result<Self, ValidationError> {
        let mut violations = Vec::new();
        let positive: [(&'static str, f64); 6] = [
            ("E", self.young_modulus),
            ("G", self.shear_modulus),
            ("L", self.base_length),
            ("I", self.base_inertia),
            ("A", self.base_area),
            ("A_star", self.base_shear_area),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                violations.push(Violation::NonPositive(name));
            }
        }
        let ratios: [(&'static str, f64); 3] = [
            ("a", self.inertia_ratio),
            ("u", self.area_ratio),
            ("v", self.shear_area_ratio),
        ];
        for (name, value) in ratios {
            if !(value.is_finite() && value > 1.0) {
                violations.push(Violation::RatioNotAboveOne(name));
            }
        }
        if !(self.angle.is_finite()
            && self.angle > 0.0
            && self.angle <= std::f64::consts::FRAC_PI_2)
        {
            violations.push(Violation::AngleOutOfRange);
        }
        if self.levels == 0 {
            violations.push(Violation::ZeroLevels);
        } else if self.levels > MAX_LEVELS {
            violations.push(Violation::TooManyLevels);
        }
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ValidationError { violations })
        }
    }

    /// cos of the inclination; exactly zero for the exactly-upright angle,
    /// where every bending and shear expression must vanish identically.
    #[inline]
    pub fn cos(&self) -> f64 {
        if self.angle == std::f64::consts::FRAC_PI_2 {
            0.0
        } else {
            self.angle.cos()
        }
    }

    /// sin of the inclination.
    #[inline]
    pub fn sin(&self) -> f64 {
        self.angle.sin()
    }

    /// Bar length at a level: `L·2^(1-i)`.
    #[inline]
    pub fn bar_length(&self, level: u32) -> f64 {
        self.base_length * exp2i(1 - level as i32)
    }

    /// Second moment of area at a level: `I·a^(1-i)`.
    #[inline]
    pub fn inertia(&self, level: u32) -> f64 {
        self.base_inertia * self.inertia_ratio.powi(1 - level as i32)
    }

    /// Cross-sectional area at a level: `A·u^(1-i)`.
    #[inline]
    pub fn area(&self, level: u32) -> f64 {
        self.base_area * self.area_ratio.powi(1 - level as i32)
    }

    /// Shear area at a level: `A*·v^(1-i)`.
    #[inline]
    pub fn shear_area(&self, level: u32) -> f64 {
        self.base_shear_area * self.shear_area_ratio.powi(1 - level as i32)
    }

    /// Number of end nodes, `2^P`.
    #[inline]
    pub fn end_node_count(&self) -> u64 {
        1u64 << self.levels
    }

    /// Same structure truncated to `levels` levels. Nodes of level `i ≤ P`
    /// carry a load of `1/2^i` each, so they displace exactly like the end
    /// nodes of the `i`-level structure.
    pub fn truncated(&self, levels: u32) -> Self {
        Self { levels, ..*self }
    }
}

/// Exact power of two as f64.
#[inline]
pub(crate) fn exp2i(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// Distance from a nonnegative real to the nearest integer.
///
/// On `[0, 1]` this is `min(x, 1−x)`, the sawtooth the Takagi-class
/// curves are built from.
#[inline]
pub fn sigma(x: f64) -> f64 {
    let f = x.fract();
    f.min(1.0 - f)
}

/// Node address: `level` ∈ `[1, P]`, `index` ∈ `[1, 2^level]`, counted
/// left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeRef {
    pub level: u32,
    pub index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PositionError {
    #[error("node index {index} out of range for {count} positions")]
    IndexOutOfRange { index: u64, count: u64 },
    #[error("level {level} out of range for a {levels}-level structure")]
    LevelOutOfRange { level: u32, levels: u32 },
}

impl NodeRef {
    pub fn new(level: u32, index: u64) -> Result<Self, PositionError> {
        if level == 0 || level > MAX_LEVELS {
            return Err(PositionError::LevelOutOfRange {
                level,
                levels: MAX_LEVELS,
            });
        }
        let count = 1u64 << level;
        if index == 0 || index > count {
            return Err(PositionError::IndexOutOfRange { index, count });
        }
        Ok(Self { level, index })
    }

    /// Address of the next node down the load path, `None` at level 1
    /// (whose parent is the ground point).
    pub fn parent(&self) -> Option<NodeRef> {
        (self.level > 1).then(|| NodeRef {
            level: self.level - 1,
            index: self.index.div_ceil(2),
        })
    }

    /// Whether this node hangs on the left branch of its parent.
    #[inline]
    pub fn is_left_child(&self) -> bool {
        self.index % 2 == 1
    }

    /// Mirror image across the structure's vertical axis.
    #[inline]
    pub fn mirrored(&self) -> NodeRef {
        NodeRef {
            level: self.level,
            index: (1u64 << self.level) + 1 - self.index,
        }
    }
}

/// Reduced exact rational in `[0, 1]` with on-demand canonical binary
/// digits. Dyadic rationals use the terminating expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExactPos {
    num: u64,
    den: u64,
}

impl ExactPos {
    /// Reduced fraction `num/den`; requires `num ≤ den`, `den ≥ 1`.
    pub fn new(num: u64, den: u64) -> Result<Self, PositionError> {
        if den == 0 || num > den {
            return Err(PositionError::IndexOutOfRange {
                index: num,
                count: den,
            });
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn zero() -> Self {
        Self { num: 0, den: 1 }
    }

    pub fn one() -> Self {
        Self { num: 1, den: 1 }
    }

    #[inline]
    pub fn numerator(&self) -> u64 {
        self.num
    }

    #[inline]
    pub fn denominator(&self) -> u64 {
        self.den
    }

    #[inline]
    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact sawtooth value `min(x, 1−x)` as a rational.
    pub fn sigma(&self) -> ExactPos {
        let num = self.num.min(self.den - self.num);
        let g = gcd(num, self.den);
        ExactPos {
            num: num / g,
            den: self.den / g,
        }
    }

    /// `k`-th canonical binary digit (k ≥ 1), by exact integer doubling.
    pub fn digit(&self, k: u32) -> u8 {
        let mut digits = self.digits();
        let mut d = 0;
        for _ in 0..k {
            d = digits.next().unwrap();
        }
        d
    }

    /// Infinite canonical digit stream ρ₁, ρ₂, …
    ///
    /// The integer 1 has zero fractional digits, so its stream is all
    /// zeros, matching the terminating convention.
    pub fn digits(&self) -> Digits {
        Digits {
            num: if self.num == self.den { 0 } else { self.num },
            den: self.den,
        }
    }

    /// Stream of sawtooth values σ(2ᵏ·x) for k = 0, 1, 2, …
    pub fn sigma_scaled(&self) -> SigmaScaled {
        SigmaScaled {
            num: if self.num == self.den { 0 } else { self.num },
            den: self.den,
        }
    }

    /// Fractional part of `2^k · x`, exact.
    pub fn scaled_fraction(&self, k: u32) -> ExactPos {
        let mut num = if self.num == self.den { 0 } else { self.num };
        for _ in 0..k {
            num *= 2;
            if num >= self.den {
                num -= self.den;
            }
        }
        ExactPos::new(num, self.den).expect("doubling keeps num < den")
    }
}

/// Canonical binary digit stream of an [`ExactPos`]; never terminates.
#[derive(Debug, Clone)]
pub struct Digits {
    num: u64,
    den: u64,
}

impl Iterator for Digits {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        self.num *= 2;
        if self.num >= self.den {
            self.num -= self.den;
            Some(1)
        } else {
            Some(0)
        }
    }
}

/// Stream of σ(2ᵏ·x) values, k = 0, 1, 2, …; never terminates.
#[derive(Debug, Clone)]
pub struct SigmaScaled {
    num: u64,
    den: u64,
}

impl Iterator for SigmaScaled {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let s = self.num.min(self.den - self.num) as f64 / self.den as f64;
        self.num *= 2;
        if self.num >= self.den {
            self.num -= self.den;
        }
        Some(s)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Abscissa of end node `w` for vertical profiles.
///
/// The `2^P` end nodes sit evenly on `[0, 1]` with half-gap margins, node 1
/// at `2^-(P+1)` and node `2^P` at `1 − 2^-(P+1)`; the general node lands on
/// the exact dyadic `(2w−1)/2^(P+1)`.
pub fn end_node_position_vertical(w: u64, levels: u32) -> Result<ExactPos, PositionError> {
    check_end_node(w, levels)?;
    ExactPos::new(2 * w - 1, 1u64 << (levels + 1))
}

/// Abscissa of end node `w` for horizontal profiles: `(w−1)/(2^P−1)`,
/// node 1 at 0 and node `2^P` at 1.
pub fn end_node_position_horizontal(w: u64, levels: u32) -> Result<ExactPos, PositionError> {
    check_end_node(w, levels)?;
    ExactPos::new(w - 1, (1u64 << levels) - 1)
}

fn check_end_node(w: u64, levels: u32) -> Result<(), PositionError> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(PositionError::LevelOutOfRange {
            level: levels,
            levels: MAX_LEVELS,
        });
    }
    let count = 1u64 << levels;
    if w == 0 || w > count {
        return Err(PositionError::IndexOutOfRange { index: w, count });
    }
    Ok(())
}

/// Undeformed planar coordinates of a node, ground point at the origin.
///
/// The two level-1 bars fork from the ground; each node's children offset
/// by `(∓cos·L_(i+1), +sin·L_(i+1))`, left child negative. Mirror-image
/// nodes therefore satisfy `x(i, n) = −x(i, 2^i + 1 − n)`.
pub fn node_coordinates(params: &TreeParams, node: NodeRef) -> (f64, f64) {
    let c = params.cos();
    let s = params.sin();
    let mut x = 0.0;
    let mut y = 0.0;
    let mut current = node;
    loop {
        let len = params.bar_length(current.level);
        x += if current.is_left_child() {
            -c * len
        } else {
            c * len
        };
        y += s * len;
        match current.parent() {
            Some(p) => current = p,
            None => break,
        }
    }
    (x, y)
}

/// A displacement split into its three flexibility contributions.
///
/// `total` is always the sum of the parts; the parts are carried so the
/// oracle checks can localize a disagreement to one term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub total: f64,
    pub bending: f64,
    pub axial: f64,
    pub shear: f64,
}

impl Displacement {
    pub fn from_parts(bending: f64, axial: f64, shear: f64) -> Self {
        Self {
            total: bending + axial + shear,
            bending,
            axial,
            shear,
        }
    }

    /// Natural magnitude scale of the value, for relative comparisons that
    /// stay meaningful when terms cancel in the total.
    pub fn magnitude_scale(&self) -> f64 {
        self.bending.abs() + self.axial.abs() + self.shear.abs()
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(f(self.bending), f(self.axial), f(self.shear))
    }
}

/// Which displacement component of a node is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplacementKind {
    Vertical,
    Horizontal,
}

//! Internal-force diagrams for the real and virtual load systems, and two
//! independent displacement oracles: a direct per-bar unit-load summation
//! and a shear-deformable direct-stiffness frame solve.
//!
//! The structure is statically determinate, so the per-bar forces follow
//! from equilibrium alone: the level-`i` bar on the load path carries a
//! `2^-i` share of the unit total load, giving
//!
//! - real system:   `M(x) = c·2^-i·(L_i − x)`, `N = s·2^-i`, `T = c·2^-i`
//! - vertical virtual system (unit load at end node `w`):
//!   `M(x) = Q − c·x` with base moment `Q = DH`, `N = s`, `T = c`
//! - horizontal virtual system: `M(x) = (H − s·x)·g`, `N = −c·g`,
//!   `T = s·g`, with per-level orientation sign `g = 1 − 2ρ_i(σ(z*))`
//!
//! with `c = cos θ`, `s = sin θ`. Only one bar per level is loaded by a
//! virtual system (the ancestor path of `w`).
//!
//! The stiffness oracle assembles Timoshenko frame elements so a solve
//! carries exactly the same three flexibilities (bending `EI_i`, axial
//! `EA_i`, shear `GA*_i`) as the unit-load integrals; with loads applied
//! only at nodes its nodal displacements are exact up to roundoff, which
//! is what lets the two routes agree to ~1e-12 instead of mesh accuracy.
//!
//! Sign convention for horizontal results: rightward positive (the x axis
//! of the frame solve). The mirrored-pair antisymmetry
//! `H(w) = −H(2^P+1−w)` holds in this convention; plot-style
//! outward-positive values are a presentation concern, applied at emission.

use nalgebra::{Matrix3, Matrix6, Vector3};
use thiserror::Error;

use crate::model::{
    end_node_position_horizontal, end_node_position_vertical, exp2i, Displacement, NodeRef,
    TreeParams,
};

/// Force state of one bar: affine bending moment plus constant axial and
/// shear forces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarStressState {
    /// Bending moment at the bar's bottom end (N·m).
    pub moment_base: f64,
    /// Moment gradient along the bar (N).
    pub moment_slope: f64,
    /// Axial force, constant along the bar (N).
    pub axial: f64,
    /// Shear force, constant along the bar (N).
    pub shear: f64,
}

impl BarStressState {
    /// Bending moment at arc position `x` from the bottom end.
    #[inline]
    pub fn moment_at(&self, x: f64) -> f64 {
        self.moment_base + self.moment_slope * x
    }
}

/// Real-system force state of any level-`i` bar (all bars of a level share it).
pub fn real_stresses(params: &TreeParams, level: u32) -> BarStressState {
    let c = params.cos();
    let share = exp2i(-(level as i32));
    BarStressState {
        moment_base: c * share * params.bar_length(level),
        moment_slope: -c * share,
        axial: params.sin() * share,
        shear: c * share,
    }
}

/// Horizontal distance from the bottom end of the loaded level-`i` bar to
/// end node `w`: `4cL·(2^-i − σ(2^(i-1) z(w))·2^(1-i))`, evaluated with the
/// exact abscissa.
pub fn lever_arm_vertical(params: &TreeParams, level: u32, w: u64) -> f64 {
    let z = end_node_position_vertical(w, params.levels).expect("valid end node");
    let sigma = z
        .sigma_scaled()
        .nth(level as usize - 1)
        .expect("infinite stream");
    lever_arm_vertical_from_sigma(params, level, sigma)
}

#[inline]
fn lever_arm_vertical_from_sigma(params: &TreeParams, level: u32, sigma: f64) -> f64 {
    4.0 * params.cos()
        * params.base_length
        * (exp2i(-(level as i32)) - sigma * exp2i(1 - level as i32))
}

/// Virtual force state of the loaded level-`i` bar for a unit downward
/// load at end node `w`.
pub fn virtual_stresses_vertical(params: &TreeParams, level: u32, w: u64) -> BarStressState {
    let c = params.cos();
    BarStressState {
        moment_base: lever_arm_vertical(params, level, w),
        moment_slope: -c,
        axial: params.sin(),
        shear: c,
    }
}

/// Vertical distance from the bottom end of the loaded level-`i` bar to the
/// end-node row: `sL·(2^(2-i) − 2^(1-P))`. Independent of `w`.
pub fn lever_arm_horizontal(params: &TreeParams, level: u32) -> f64 {
    params.sin() * params.base_length * (exp2i(2 - level as i32) - exp2i(1 - params.levels as i32))
}

/// Virtual force state of the loaded level-`i` bar for a unit horizontal
/// load at end node `w` (mirrored-left convention; the digit
/// `ρ_i(σ(z*(w)))` selects the bar orientation sign).
pub fn virtual_stresses_horizontal(params: &TreeParams, level: u32, w: u64) -> BarStressState {
    let zs = end_node_position_horizontal(w, params.levels).expect("valid end node");
    let digit = zs.sigma().digit(level);
    let g = 1.0 - 2.0 * digit as f64;
    let s = params.sin();
    BarStressState {
        moment_base: lever_arm_horizontal(params, level) * g,
        moment_slope: -s * g,
        axial: -params.cos() * g,
        shear: s * g,
    }
}

/// `∫₀ˡ (p₀+p₁x)(q₀+q₁x) dx`, exactly.
#[inline]
fn integrate_affine_product(p: (f64, f64), q: (f64, f64), l: f64) -> f64 {
    l * (p.0 * q.0 + (p.0 * q.1 + p.1 * q.0) * l / 2.0 + p.1 * q.1 * l * l / 3.0)
}

fn pvw_accumulate(
    params: &TreeParams,
    virtual_state: impl Fn(u32) -> BarStressState,
) -> Displacement {
    let e = params.young_modulus;
    let g = params.shear_modulus;
    let mut bending = 0.0;
    let mut axial = 0.0;
    let mut shear = 0.0;
    for level in 1..=params.levels {
        let real = real_stresses(params, level);
        let virt = virtual_state(level);
        let length = params.bar_length(level);
        bending += integrate_affine_product(
            (virt.moment_base, virt.moment_slope),
            (real.moment_base, real.moment_slope),
            length,
        ) / (e * params.inertia(level));
        axial += virt.axial * real.axial * length / (e * params.area(level));
        shear += virt.shear * real.shear * length / (g * params.shear_area(level));
    }
    Displacement::from_parts(bending, axial, shear)
}

/// Vertical displacement of end node `w` by direct per-level unit-load
/// summation (no geometric-series closed forms). Positive is downward.
pub fn pvw_sum_vertical(params: &TreeParams, w: u64) -> Displacement {
    let z = end_node_position_vertical(w, params.levels).expect("valid end node");
    let sigmas: Vec<f64> = z.sigma_scaled().take(params.levels as usize).collect();
    let c = params.cos();
    let s = params.sin();
    pvw_accumulate(params, |level| BarStressState {
        moment_base: lever_arm_vertical_from_sigma(params, level, sigmas[level as usize - 1]),
        moment_slope: -c,
        axial: s,
        shear: c,
    })
}

/// Horizontal displacement of end node `w` by direct per-level summation,
/// rightward positive.
pub fn pvw_sum_horizontal(params: &TreeParams, w: u64) -> Displacement {
    let zs = end_node_position_horizontal(w, params.levels).expect("valid end node");
    let digits: Vec<u8> = zs.sigma().digits().take(params.levels as usize).collect();
    let c = params.cos();
    let s = params.sin();
    let outward = pvw_accumulate(params, |level| {
        let sign = 1.0 - 2.0 * digits[level as usize - 1] as f64;
        BarStressState {
            moment_base: lever_arm_horizontal(params, level) * sign,
            moment_slope: -s * sign,
            axial: -c * sign,
            shear: s * sign,
        }
    });
    // the virtual load points outward; convert to rightward-positive
    if 2 * zs.numerator() < zs.denominator() {
        outward.map(|t| -t)
    } else {
        outward
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(
        "singular system: bars coincide at angle pi/2; the frame oracle refuses this geometry"
    )]
    SingularSystem,
}

/// Nodal solution of the frame under the real distributed load.
#[derive(Debug, Clone)]
pub struct FrameSolution {
    levels: u32,
    /// (ux, uy, rotation) per node, level-major order.
    states: Vec<Vector3<f64>>,
    reaction: Vector3<f64>,
}

impl FrameSolution {
    /// Displacement pair (ux, uy) of a node; x rightward, y upward.
    pub fn displacement(&self, node: NodeRef) -> (f64, f64) {
        let s = self.states[node_slot(node)];
        (s.x, s.y)
    }

    /// Joint rotation of a node (radians).
    pub fn rotation(&self, node: NodeRef) -> f64 {
        self.states[node_slot(node)].z
    }

    /// Upward force the support exerts on the structure; equals the total
    /// applied load (1) in equilibrium.
    pub fn vertical_reaction(&self) -> f64 {
        self.reaction.y
    }

    /// Horizontal support reaction; zero for the symmetric real load.
    pub fn horizontal_reaction(&self) -> f64 {
        self.reaction.x
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }
}

#[inline]
fn node_slot(node: NodeRef) -> usize {
    ((1u64 << node.level) - 2 + node.index - 1) as usize
}

/// Local Timoshenko stiffness rotated to global axes for a bar of level
/// `i` running `(dx, dy)` from its bottom node.
fn element_stiffness(params: &TreeParams, level: u32, dx: f64, dy: f64) -> Matrix6<f64> {
    let l = params.bar_length(level);
    let e = params.young_modulus;
    let i = params.inertia(level);
    let phi = 12.0 * e * i / (params.shear_modulus * params.shear_area(level) * l * l);
    let d = 1.0 + phi;
    let ea = e * params.area(level) / l;
    let kbb = 12.0 * e * i / (d * l * l * l);
    let kbt = 6.0 * e * i / (d * l * l);
    let kt1 = (4.0 + phi) * e * i / (d * l);
    let kt2 = (2.0 - phi) * e * i / (d * l);
    #[rustfmt::skip]
    let local = Matrix6::from_row_slice(&[
         ea,   0.0,  0.0, -ea,   0.0,  0.0,
         0.0,  kbb,  kbt,  0.0, -kbb,  kbt,
         0.0,  kbt,  kt1,  0.0, -kbt,  kt2,
        -ea,   0.0,  0.0,  ea,   0.0,  0.0,
         0.0, -kbb, -kbt,  0.0,  kbb, -kbt,
         0.0,  kbt,  kt2,  0.0, -kbt,  kt1,
    ]);
    let (cb, sb) = (dx / l, dy / l);
    let mut t = Matrix6::zeros();
    for base in [0, 3] {
        t[(base, base)] = cb;
        t[(base, base + 1)] = sb;
        t[(base + 1, base)] = -sb;
        t[(base + 1, base + 1)] = cb;
        t[(base + 2, base + 2)] = 1.0;
    }
    t.transpose() * local * t
}

/// Three compensated accumulators (error-free sum and product
/// transformations), one per DOF of a node.
#[derive(Clone, Copy)]
struct Compensated3 {
    hi: Vector3<f64>,
    lo: Vector3<f64>,
}

impl From<&Vector3<f64>> for Compensated3 {
    fn from(v: &Vector3<f64>) -> Self {
        Self {
            hi: *v,
            lo: Vector3::zeros(),
        }
    }
}

impl Compensated3 {
    /// Subtracts the 3x3 block of `k` at `(row, col)` times `v`, keeping
    /// each product's and each sum's rounding error in the low parts.
    #[inline]
    fn sub_block_mul(&mut self, k: &Matrix6<f64>, row: usize, col: usize, v: &Vector3<f64>) {
        for i in 0..3 {
            for j in 0..3 {
                let a = -k[(row + i, col + j)];
                let b = v[j];
                let p = a * b;
                let p_err = f64::mul_add(a, b, -p);
                let s = self.hi[i] + p;
                let bp = s - self.hi[i];
                let s_err = (self.hi[i] - (s - bp)) + (p - bp);
                self.hi[i] = s;
                self.lo[i] += s_err + p_err;
            }
        }
    }

    #[inline]
    fn value(&self) -> Vector3<f64> {
        self.hi + self.lo
    }
}

/// Fill-free leaf-to-root block factorization of the tree stiffness: the
/// element graph is the tree itself, so eliminating leaves first creates
/// no fill beyond the parent diagonal blocks.
struct TreeFactorization {
    levels: u32,
    /// Global 6x6 element stiffness, indexed by the child slot.
    elements: Vec<Matrix6<f64>>,
    /// Cholesky factors of the condensed diagonal blocks.
    factors: Vec<nalgebra::Cholesky<f64, nalgebra::U3>>,
    /// Coupling block K(parent, child) of each node's lower element.
    coupling: Vec<Matrix3<f64>>,
}

impl TreeFactorization {
    fn build(params: &TreeParams) -> Result<Self, SolveError> {
        let levels = params.levels;
        let node_count = ((1u64 << (levels + 1)) - 2) as usize;
        let c = params.cos();
        let s = params.sin();

        let mut elements = vec![Matrix6::<f64>::zeros(); node_count];
        let mut diag = vec![Matrix3::<f64>::zeros(); node_count];
        let mut coupling = vec![Matrix3::<f64>::zeros(); node_count];
        for level in 1..=levels {
            let length = params.bar_length(level);
            for index in 1..=(1u64 << level) {
                let node = NodeRef { level, index };
                let dx = if node.is_left_child() {
                    -c * length
                } else {
                    c * length
                };
                let k = element_stiffness(params, level, dx, s * length);
                let slot = node_slot(node);
                elements[slot] = k;
                diag[slot] += k.fixed_view::<3, 3>(3, 3).into_owned();
                coupling[slot] = k.fixed_view::<3, 3>(0, 3).into_owned();
                if let Some(parent) = node.parent() {
                    diag[node_slot(parent)] += k.fixed_view::<3, 3>(0, 0).into_owned();
                }
            }
        }

        let mut factors = Vec::with_capacity(node_count);
        factors.resize_with(node_count, || {
            nalgebra::Cholesky::new_unchecked(Matrix3::identity())
        });
        for level in (1..=levels).rev() {
            for index in 1..=(1u64 << level) {
                let node = NodeRef { level, index };
                let slot = node_slot(node);
                let factor =
                    nalgebra::Cholesky::new(diag[slot]).ok_or(SolveError::SingularSystem)?;
                if let Some(parent) = node.parent() {
                    let b = coupling[slot];
                    diag[node_slot(parent)] -= b * factor.solve(&b.transpose());
                }
                factors[slot] = factor;
            }
        }
        Ok(Self {
            levels,
            elements,
            factors,
            coupling,
        })
    }

    fn solve(&self, loads: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let mut rhs: Vec<Vector3<f64>> = loads.to_vec();
        for level in (2..=self.levels).rev() {
            for index in 1..=(1u64 << level) {
                let node = NodeRef { level, index };
                let slot = node_slot(node);
                let carried = self.coupling[slot] * self.factors[slot].solve(&rhs[slot]);
                rhs[node_slot(node.parent().expect("level > 1"))] -= carried;
            }
        }
        let mut states = vec![Vector3::<f64>::zeros(); rhs.len()];
        for level in 1..=self.levels {
            for index in 1..=(1u64 << level) {
                let node = NodeRef { level, index };
                let slot = node_slot(node);
                let coupled = match node.parent() {
                    Some(parent) => self.coupling[slot].transpose() * states[node_slot(parent)],
                    None => Vector3::zeros(),
                };
                states[slot] = self.factors[slot].solve(&(rhs[slot] - coupled));
            }
        }
        states
    }

    /// Residual `loads − K·u` of the unscaled system, accumulated in
    /// compensated arithmetic so iterative refinement can converge well
    /// below the plain working-precision floor.
    fn residual(&self, loads: &[Vector3<f64>], states: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let mut sums: Vec<Compensated3> = loads.iter().map(Compensated3::from).collect();
        for level in 1..=self.levels {
            for index in 1..=(1u64 << level) {
                let node = NodeRef { level, index };
                let slot = node_slot(node);
                let k = &self.elements[slot];
                let u_child = &states[slot];
                match node.parent() {
                    Some(parent) => {
                        let pslot = node_slot(parent);
                        let u_parent = states[pslot];
                        sums[pslot].sub_block_mul(k, 0, 0, &u_parent);
                        sums[pslot].sub_block_mul(k, 0, 3, u_child);
                        sums[slot].sub_block_mul(k, 3, 0, &u_parent);
                        sums[slot].sub_block_mul(k, 3, 3, u_child);
                    }
                    None => {
                        sums[slot].sub_block_mul(k, 3, 3, u_child);
                    }
                }
            }
        }
        sums.iter().map(Compensated3::value).collect()
    }
}

/// Solves the full frame under the real load (`1/2^P` downward at every
/// end node) by leaf-to-root block elimination, polished by iterative
/// refinement with compensated residuals to claw back the digits the
/// level-to-level stiffness spread costs.
pub fn stiffness_solve(params: &TreeParams) -> Result<FrameSolution, SolveError> {
    if params.angle >= std::f64::consts::FRAC_PI_2 {
        return Err(SolveError::SingularSystem);
    }
    let levels = params.levels;
    let node_count = ((1u64 << (levels + 1)) - 2) as usize;
    let factorization = TreeFactorization::build(params)?;

    let mut loads = vec![Vector3::<f64>::zeros(); node_count];
    let share = exp2i(-(levels as i32));
    for index in 1..=(1u64 << levels) {
        loads[node_slot(NodeRef {
            level: levels,
            index,
        })]
        .y = -share;
    }

    let mut states = factorization.solve(&loads);
    // iterate refinement until the correction stops mattering; the
    // compensated residual lets this run down to working precision even
    // when the level-to-level stiffness spread is large
    for _ in 0..12 {
        let residual = factorization.residual(&loads, &states);
        let correction = factorization.solve(&residual);
        let mut significant = false;
        for (state, delta) in states.iter_mut().zip(&correction) {
            if delta.norm_squared() > (1e-15 * state.norm()).powi(2) {
                significant = true;
            }
            *state += delta;
        }
        if !significant {
            break;
        }
    }

    let mut reaction = Vector3::zeros();
    for index in 1..=2u64 {
        let node = NodeRef { level: 1, index };
        let slot = node_slot(node);
        let k = &factorization.elements[slot];
        reaction += k.fixed_view::<3, 3>(0, 3) * states[slot];
    }

    Ok(FrameSolution {
        levels,
        states,
        reaction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{reference_params, rel_gap};

    #[test]
    fn real_stresses_match_hand_values() {
        let params = reference_params();
        let level1 = real_stresses(&params, 1);
        // c = 1/2, share 1/2, L = 0.5
        assert!((level1.moment_at(0.0) - 0.125).abs() < 1e-15);
        for level in 1..=params.levels {
            let st = real_stresses(&params, level);
            assert!(st.moment_at(params.bar_length(level)).abs() < 1e-18);
        }
        let upright = TreeParams {
            angle: std::f64::consts::FRAC_PI_2,
            ..params
        };
        let st = real_stresses(&upright, 3);
        assert_eq!(st.moment_base, 0.0);
        assert_eq!(st.shear, 0.0);
        assert!((st.axial - 0.125).abs() < 1e-15);
    }

    #[test]
    fn vertical_lever_arm_hand_value_and_symmetry() {
        let params = TreeParams {
            levels: 1,
            ..reference_params()
        };
        let cl = params.cos() * params.base_length;
        assert!((lever_arm_vertical(&params, 1, 1) - cl).abs() < 1e-15);

        let params = TreeParams {
            levels: 6,
            ..reference_params()
        };
        for w in 1..=params.end_node_count() {
            let mirror = params.end_node_count() + 1 - w;
            for level in 1..=params.levels {
                let a = lever_arm_vertical(&params, level, w);
                let b = lever_arm_vertical(&params, level, mirror);
                assert!((a - b).abs() < 1e-15);
                assert!(a >= -1e-18, "lever arm must be nonnegative");
            }
        }
    }

    #[test]
    fn horizontal_lever_arm_hand_values() {
        let params = TreeParams {
            levels: 1,
            ..reference_params()
        };
        let sl = params.sin() * params.base_length;
        assert!((lever_arm_horizontal(&params, 1) - sl).abs() < 1e-15);
        let params = TreeParams {
            levels: 7,
            ..reference_params()
        };
        let top = lever_arm_horizontal(&params, params.levels);
        assert!((top - sl * exp2i(1 - params.levels as i32)).abs() < 1e-17);
    }

    #[test]
    fn vertical_virtual_moment_base_is_nonnegative() {
        let params = TreeParams {
            levels: 7,
            ..reference_params()
        };
        for w in 1..=params.end_node_count() {
            for level in 1..=params.levels {
                let st = virtual_stresses_vertical(&params, level, w);
                assert!(st.moment_base >= -1e-18);
            }
        }
    }

    #[test]
    fn horizontal_virtual_sign_factor_is_unit() {
        let params = TreeParams {
            levels: 6,
            ..reference_params()
        };
        let s = params.sin();
        for w in 1..=params.end_node_count() {
            for level in 1..=params.levels {
                let st = virtual_stresses_horizontal(&params, level, w);
                assert!((st.shear.abs() - s).abs() < 1e-15);
            }
        }
        // leftmost node: all digits zero, positive signs at every level
        for level in 1..=params.levels {
            let st = virtual_stresses_horizontal(&params, level, 1);
            assert!(st.shear > 0.0);
        }
    }

    #[test]
    fn upright_single_level_axial_only() {
        // hand statics: total = N^V·N^R·L/EA = (1)(1/2)·L/(EA)
        let params = TreeParams {
            angle: std::f64::consts::FRAC_PI_2,
            area_ratio: 2.0,
            levels: 1,
            ..reference_params()
        };
        let d = pvw_sum_vertical(&params, 1);
        let expected = params.base_length / (2.0 * params.young_modulus * params.base_area);
        assert_eq!(d.bending, 0.0);
        assert_eq!(d.shear, 0.0);
        assert!((d.total - expected).abs() < 1e-25);
    }

    #[test]
    fn upright_horizontal_displacement_vanishes() {
        let params = TreeParams {
            angle: std::f64::consts::FRAC_PI_2,
            levels: 4,
            ..reference_params()
        };
        for w in 1..=params.end_node_count() {
            assert_eq!(pvw_sum_horizontal(&params, w).total, 0.0);
        }
    }

    #[test]
    fn horizontal_sum_is_antisymmetric() {
        let params = TreeParams {
            levels: 8,
            ..reference_params()
        };
        for w in 1..=params.end_node_count() {
            let a = pvw_sum_horizontal(&params, w);
            let b = pvw_sum_horizontal(&params, params.end_node_count() + 1 - w);
            assert!((a.total + b.total).abs() <= 1e-15 * a.magnitude_scale());
        }
    }

    #[test]
    fn exact_integration_matches_simpson() {
        // the integrand is quadratic, so Simpson's rule is an exact
        // independent route
        let cases = [
            ((1.3, -0.7), (0.4, 0.9), 1.7),
            ((0.0, 2.0), (5.0, -3.0), 0.25),
            ((1e-3, 1e2), (-2.0, 0.1), 3.0),
        ];
        for (p, q, l) in cases {
            let f = |x: f64| (p.0 + p.1 * x) * (q.0 + q.1 * x);
            let simpson = l / 6.0 * (f(0.0) + 4.0 * f(l / 2.0) + f(l));
            let exact = integrate_affine_product(p, q, l);
            assert!((simpson - exact).abs() <= 1e-13 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn stiffness_matches_pvw_on_single_level() {
        let params = TreeParams {
            levels: 1,
            ..reference_params()
        };
        let sol = stiffness_solve(&params).unwrap();
        for w in 1..=2 {
            let node = NodeRef::new(1, w).unwrap();
            let (ux, uy) = sol.displacement(node);
            let v = pvw_sum_vertical(&params, w);
            let h = pvw_sum_horizontal(&params, w);
            assert!(rel_gap(-uy, v.total) < 1e-11, "vertical w={w}");
            assert!(rel_gap(ux, h.total) < 1e-11, "horizontal w={w}");
        }
    }

    #[test]
    fn stiffness_matches_pvw_on_deeper_tree() {
        let params = TreeParams {
            levels: 6,
            ..reference_params()
        };
        let sol = stiffness_solve(&params).unwrap();
        for w in [1u64, 7, 23, 32, 33, 64] {
            let node = NodeRef::new(params.levels, w).unwrap();
            let (ux, uy) = sol.displacement(node);
            let v = pvw_sum_vertical(&params, w);
            let h = pvw_sum_horizontal(&params, w);
            assert!(rel_gap(-uy, v.total) < 1e-10, "vertical w={w}");
            assert!(
                (ux - h.total).abs() < 1e-10 * h.magnitude_scale().max(v.total),
                "horizontal w={w}"
            );
        }
    }

    #[test]
    fn stiffness_solution_mirrors() {
        let params = TreeParams {
            levels: 5,
            ..reference_params()
        };
        let sol = stiffness_solve(&params).unwrap();
        for level in 1..=params.levels {
            for index in 1..=(1u64 << level) {
                let node = NodeRef::new(level, index).unwrap();
                let (ux, uy) = sol.displacement(node);
                let (mx, my) = sol.displacement(node.mirrored());
                assert!((ux + mx).abs() < 1e-22 + 1e-9 * ux.abs());
                assert!((uy - my).abs() < 1e-22 + 1e-9 * uy.abs());
            }
        }
    }

    #[test]
    fn support_reaction_balances_the_load() {
        for levels in [1u32, 3, 8] {
            let params = TreeParams {
                levels,
                ..reference_params()
            };
            let sol = stiffness_solve(&params).unwrap();
            assert!(
                (sol.vertical_reaction() - 1.0).abs() < 1e-10,
                "vertical reaction at P={levels}: {}",
                sol.vertical_reaction()
            );
            assert!(sol.horizontal_reaction().abs() < 1e-10);
        }
    }

    #[test]
    fn upright_geometry_is_refused() {
        let params = TreeParams {
            angle: std::f64::consts::FRAC_PI_2,
            ..reference_params()
        };
        assert!(matches!(
            stiffness_solve(&params),
            Err(SolveError::SingularSystem)
        ));
    }
}

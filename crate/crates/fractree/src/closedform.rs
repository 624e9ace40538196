//! Finite-level closed-form displacement formulas with exhaustive
//! parameter-case dispatch, and the level-iteration mapping (a node of
//! level `i` displaces like an end node of the `i`-level structure).
//!
//! Every term is a geometric sum plus a digit- or sawtooth-weighted sum:
//!
//! vertical, end node `w` at `z = z(w)`, per unit total load:
//! - bending: `(20c²L³/(3EIa))·Σ(a/16)^i − (c²L³/EI)·φ(z; a/16, P)`
//! - axial:   `(2s²L/(EAu))·Σ(u/4)^i`
//! - shear:   `(2c²L/(GA*v))·Σ(v/4)^i`
//!
//! horizontal, end node `w` at `z* = z*(w)`, `x = σ(z*)`, outward form:
//! - bending: `(4csL³/(EIa))·[(5/3)Σ(a/16)^i − (10/3)C_{P,a/16}(x)
//!   − 2^-P·Σ(a/8)^i + 2^(1-P)·C_{P,a/8}(x)]`
//! - axial:   `(2csL/(EAu))·(2C_{P,u/4}(x) − Σ(u/4)^i)`
//! - shear:   `(2csL/(GA*v))·(Σ(v/4)^i − 2C_{P,v/4}(x))`
//!
//! all sums running `i = 1..=P`. The `a=8`, `a=16`, `u=4`, `v=4` special
//! cases are exactly the unit-ratio closed forms of the geometric sums;
//! `geom_sum` branches on ratio 1 so one transcription covers every case.
//! The public entry points still classify the case key and refuse the
//! ill-conditioned band around the special values, where the generic
//! `(1−q^P)/(1−q)` form would silently lose digits.
//!
//! Horizontal displacements are returned rightward-positive; the outward
//! (plot) form is `outward(value, z*)`.

use thiserror::Error;

use crate::fractals::{c_partial, phi};
use crate::model::{
    end_node_position_horizontal, end_node_position_vertical, exp2i, Displacement,
    DisplacementKind, ExactPos, PositionError, TreeParams,
};

/// Half-width of the rejected band around each removable-singularity
/// parameter value.
pub const GUARD_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FormulaError {
    #[error(
        "{param} = {value} is within {GUARD_BAND} of the special value {special}; \
             use the special value exactly or move away from it"
    )]
    IllConditioned {
        param: &'static str,
        value: f64,
        special: f64,
    },
    #[error(transparent)]
    Position(#[from] PositionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ACase {
    Generic,
    A8,
    A16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UCase {
    Generic,
    U4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VCase {
    Generic,
    V4,
}

/// Which closed-form branch a parameter set selects. Vertical formulas
/// only distinguish `a = 16`; `a = 8` is special for the horizontal
/// bending transient alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct CaseKey {
    pub a_case: ACase,
    pub u_case: UCase,
    pub v_case: VCase,
}

impl CaseKey {
    pub fn vertical(params: &TreeParams) -> Result<Self, FormulaError> {
        Ok(Self {
            a_case: if special("a", params.inertia_ratio, 16.0)? {
                ACase::A16
            } else {
                ACase::Generic
            },
            u_case: u_case(params)?,
            v_case: v_case(params)?,
        })
    }

    pub fn horizontal(params: &TreeParams) -> Result<Self, FormulaError> {
        let a = params.inertia_ratio;
        let a_case = if special("a", a, 16.0)? {
            ACase::A16
        } else if special("a", a, 8.0)? {
            ACase::A8
        } else {
            ACase::Generic
        };
        Ok(Self {
            a_case,
            u_case: u_case(params)?,
            v_case: v_case(params)?,
        })
    }

    pub fn label(&self) -> String {
        let a = match self.a_case {
            ACase::Generic => "agen",
            ACase::A8 => "a8",
            ACase::A16 => "a16",
        };
        let u = match self.u_case {
            UCase::Generic => "ugen",
            UCase::U4 => "u4",
        };
        let v = match self.v_case {
            VCase::Generic => "vgen",
            VCase::V4 => "v4",
        };
        format!("{a}_{u}_{v}")
    }
}

fn u_case(params: &TreeParams) -> Result<UCase, FormulaError> {
    Ok(if special("u", params.area_ratio, 4.0)? {
        UCase::U4
    } else {
        UCase::Generic
    })
}

fn v_case(params: &TreeParams) -> Result<VCase, FormulaError> {
    Ok(if special("v", params.shear_area_ratio, 4.0)? {
        VCase::V4
    } else {
        VCase::Generic
    })
}

fn special(param: &'static str, value: f64, special: f64) -> Result<bool, FormulaError> {
    if value == special {
        Ok(true)
    } else if (value - special).abs() < GUARD_BAND {
        Err(FormulaError::IllConditioned {
            param,
            value,
            special,
        })
    } else {
        Ok(false)
    }
}

/// `Σ_{i=1..terms} ratio^i`, stable arbitrarily close to ratio 1
/// (`expm1`/`ln_1p` route) and exact in the unit-ratio branch.
pub(crate) fn geom_sum(ratio: f64, terms: u32) -> f64 {
    let d = ratio - 1.0;
    if d == 0.0 {
        return terms as f64;
    }
    ratio * (terms as f64 * d.ln_1p()).exp_m1() / d
}

/// Vertical bending flexibility term of end node `w`.
pub fn vertical_bending_term(params: &TreeParams, w: u64) -> Result<f64, FormulaError> {
    special("a", params.inertia_ratio, 16.0)?;
    let z = end_node_position_vertical(w, params.levels)?;
    Ok(vertical_bending_unguarded(params, &z))
}

pub(crate) fn vertical_bending_unguarded(params: &TreeParams, z: &ExactPos) -> f64 {
    let c = params.cos();
    let l = params.base_length;
    let a = params.inertia_ratio;
    let ei = params.young_modulus * params.base_inertia;
    let k = c * c * l * l * l / ei;
    k * (20.0 / (3.0 * a) * geom_sum(a / 16.0, params.levels) - phi(z, a / 16.0, params.levels))
}

/// Vertical axial flexibility term; the same for every end node.
pub fn vertical_axial_term(params: &TreeParams) -> Result<f64, FormulaError> {
    special("u", params.area_ratio, 4.0)?;
    Ok(vertical_axial_unguarded(params))
}

pub(crate) fn vertical_axial_unguarded(params: &TreeParams) -> f64 {
    let s = params.sin();
    let u = params.area_ratio;
    2.0 * s * s * params.base_length / (params.young_modulus * params.base_area * u)
        * geom_sum(u / 4.0, params.levels)
}

/// Vertical shear flexibility term; the same for every end node.
pub fn vertical_shear_term(params: &TreeParams) -> Result<f64, FormulaError> {
    special("v", params.shear_area_ratio, 4.0)?;
    Ok(vertical_shear_unguarded(params))
}

pub(crate) fn vertical_shear_unguarded(params: &TreeParams) -> f64 {
    let c = params.cos();
    let v = params.shear_area_ratio;
    2.0 * c * c * params.base_length / (params.shear_modulus * params.base_shear_area * v)
        * geom_sum(v / 4.0, params.levels)
}

/// Vertical displacement of end node `w` per unit total load, downward
/// positive, with its bending/axial/shear breakdown.
pub fn vertical_displacement(params: &TreeParams, w: u64) -> Result<Displacement, FormulaError> {
    CaseKey::vertical(params)?;
    let z = end_node_position_vertical(w, params.levels)?;
    Ok(Displacement::from_parts(
        vertical_bending_unguarded(params, &z),
        vertical_axial_unguarded(params),
        vertical_shear_unguarded(params),
    ))
}

/// Horizontal bending flexibility term of end node `w`, outward form.
pub fn horizontal_bending_term(params: &TreeParams, w: u64) -> Result<f64, FormulaError> {
    let a = params.inertia_ratio;
    special("a", a, 16.0)?;
    special("a", a, 8.0)?;
    let zs = end_node_position_horizontal(w, params.levels)?;
    Ok(horizontal_bending_unguarded(params, &zs.sigma()))
}

pub(crate) fn horizontal_bending_unguarded(params: &TreeParams, sig: &ExactPos) -> f64 {
    let c = params.cos();
    let s = params.sin();
    let l = params.base_length;
    let a = params.inertia_ratio;
    let p = params.levels;
    let ei = params.young_modulus * params.base_inertia;
    let k = 4.0 * c * s * l * l * l / (ei * a);
    k * (5.0 / 3.0 * geom_sum(a / 16.0, p)
        - 10.0 / 3.0 * c_partial(sig, a / 16.0, p)
        - exp2i(-(p as i32)) * geom_sum(a / 8.0, p)
        + exp2i(1 - p as i32) * c_partial(sig, a / 8.0, p))
}

/// Horizontal axial flexibility term of end node `w`, outward form.
pub fn horizontal_axial_term(params: &TreeParams, w: u64) -> Result<f64, FormulaError> {
    special("u", params.area_ratio, 4.0)?;
    let zs = end_node_position_horizontal(w, params.levels)?;
    Ok(horizontal_axial_unguarded(params, &zs.sigma()))
}

pub(crate) fn horizontal_axial_unguarded(params: &TreeParams, sig: &ExactPos) -> f64 {
    let u = params.area_ratio;
    let p = params.levels;
    let k = 2.0 * params.cos() * params.sin() * params.base_length
        / (params.young_modulus * params.base_area * u);
    k * (2.0 * c_partial(sig, u / 4.0, p) - geom_sum(u / 4.0, p))
}

/// Horizontal shear flexibility term of end node `w`, outward form.
pub fn horizontal_shear_term(params: &TreeParams, w: u64) -> Result<f64, FormulaError> {
    special("v", params.shear_area_ratio, 4.0)?;
    let zs = end_node_position_horizontal(w, params.levels)?;
    Ok(horizontal_shear_unguarded(params, &zs.sigma()))
}

pub(crate) fn horizontal_shear_unguarded(params: &TreeParams, sig: &ExactPos) -> f64 {
    let v = params.shear_area_ratio;
    let p = params.levels;
    let k = 2.0 * params.cos() * params.sin() * params.base_length
        / (params.shear_modulus * params.base_shear_area * v);
    k * (geom_sum(v / 4.0, p) - 2.0 * c_partial(sig, v / 4.0, p))
}

/// Horizontal displacement of end node `w` per unit total load, rightward
/// positive, with its breakdown (each component carries the side sign).
pub fn horizontal_displacement(params: &TreeParams, w: u64) -> Result<Displacement, FormulaError> {
    CaseKey::horizontal(params)?;
    let zs = end_node_position_horizontal(w, params.levels)?;
    let sig = zs.sigma();
    let outward_value = Displacement::from_parts(
        horizontal_bending_unguarded(params, &sig),
        horizontal_axial_unguarded(params, &sig),
        horizontal_shear_unguarded(params, &sig),
    );
    if 2 * zs.numerator() < zs.denominator() {
        Ok(outward_value.map(|t| -t))
    } else {
        Ok(outward_value)
    }
}

/// Converts a rightward-positive horizontal value to the outward-positive
/// plotting form (leftward counts positive on the left half).
#[inline]
pub fn outward(rightward: f64, zstar: f64) -> f64 {
    if zstar < 0.5 {
        -rightward
    } else {
        rightward
    }
}

/// Displacement of node `n` of level `i ≤ P`: the node carries a `1/2^i`
/// load share, so it moves exactly like end node `n` of the truncated
/// `i`-level structure.
pub fn displacement_at_level(
    params: &TreeParams,
    level: u32,
    index: u64,
    kind: DisplacementKind,
) -> Result<Displacement, FormulaError> {
    if level == 0 || level > params.levels {
        return Err(PositionError::LevelOutOfRange {
            level,
            levels: params.levels,
        }
        .into());
    }
    let truncated = params.truncated(level);
    match kind {
        DisplacementKind::Vertical => vertical_displacement(&truncated, index),
        DisplacementKind::Horizontal => horizontal_displacement(&truncated, index),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::{pvw_sum_horizontal, pvw_sum_vertical};
    use crate::test_support::{draw_params, reference_params, rel_gap};
    use rand::SeedableRng;

    #[test]
    fn single_level_bending_matches_hand_integral() {
        // P = 1: base moment Q = cL, so the bending integral is
        // ∫ c(L−x)·(c/2)(L−x) dx / EI = c²L³/(6EI)
        let params = TreeParams {
            levels: 1,
            ..reference_params()
        };
        let c = params.cos();
        let l = params.base_length;
        let expected = c * c * l * l * l / (6.0 * params.young_modulus * params.base_inertia);
        for w in 1..=2 {
            let got = vertical_bending_term(&params, w).unwrap();
            assert!(rel_gap(got, expected) < 1e-14);
            let by_sum = pvw_sum_vertical(&params, w).bending;
            assert!(rel_gap(got, by_sum) < 1e-14);
        }
    }

    #[test]
    fn upright_structure_has_no_bending_or_shear() {
        let params = TreeParams {
            angle: std::f64::consts::FRAC_PI_2,
            ..reference_params()
        };
        assert_eq!(vertical_bending_term(&params, 3).unwrap(), 0.0);
        assert_eq!(vertical_shear_term(&params).unwrap(), 0.0);
        assert_eq!(horizontal_bending_term(&params, 3).unwrap(), 0.0);
        assert_eq!(horizontal_displacement(&params, 3).unwrap().total, 0.0);
    }

    #[test]
    fn axial_term_unit_ratio_form() {
        let params = TreeParams {
            area_ratio: 4.0,
            ..reference_params()
        };
        let s = params.sin();
        let expected = s * s * params.base_length * params.levels as f64
            / (2.0 * params.young_modulus * params.base_area);
        assert!(rel_gap(vertical_axial_term(&params).unwrap(), expected) < 1e-14);
    }

    #[test]
    fn shear_term_unit_ratio_form() {
        let params = TreeParams {
            shear_area_ratio: 4.0,
            ..reference_params()
        };
        let c = params.cos();
        let expected = c * c * params.base_length * params.levels as f64
            / (2.0 * params.shear_modulus * params.base_shear_area);
        assert!(rel_gap(vertical_shear_term(&params).unwrap(), expected) < 1e-14);
    }

    #[test]
    fn leftmost_node_horizontal_terms_have_pure_signs() {
        // w = 1 sits at z* = 0: every digit is zero, so the axial sum is all
        // minus signs and the shear sum all plus signs
        let params = reference_params();
        let u = params.area_ratio;
        let v = params.shear_area_ratio;
        let csl = 2.0 * params.cos() * params.sin() * params.base_length;
        let expected_axial =
            -csl / (params.young_modulus * params.base_area * u) * geom_sum(u / 4.0, params.levels);
        let expected_shear = csl / (params.shear_modulus * params.base_shear_area * v)
            * geom_sum(v / 4.0, params.levels);
        assert!(rel_gap(horizontal_axial_term(&params, 1).unwrap(), expected_axial) < 1e-14);
        assert!(rel_gap(horizontal_shear_term(&params, 1).unwrap(), expected_shear) < 1e-14);
    }

    #[test]
    fn u4_axial_matches_direct_summation() {
        let params = TreeParams {
            area_ratio: 4.0,
            ..reference_params()
        };
        for w in [1u64, 57, 200] {
            let closed = horizontal_axial_term(&params, w).unwrap();
            let direct = outward(pvw_sum_horizontal(&params, w).axial, {
                end_node_position_horizontal(w, params.levels)
                    .unwrap()
                    .to_f64()
            });
            assert!(rel_gap(closed, direct) < 1e-13, "w={w}");
        }
    }

    #[test]
    fn guard_band_raises_ill_conditioned() {
        let near = TreeParams {
            inertia_ratio: 16.0 - 1e-10,
            ..reference_params()
        };
        assert!(matches!(
            vertical_displacement(&near, 1),
            Err(FormulaError::IllConditioned { param: "a", .. })
        ));
        let near = TreeParams {
            area_ratio: 4.0 + 1e-10,
            ..reference_params()
        };
        assert!(matches!(
            horizontal_displacement(&near, 1),
            Err(FormulaError::IllConditioned { param: "u", .. })
        ));
        // a near 8 is only special horizontally
        let near = TreeParams {
            inertia_ratio: 8.0 + 1e-10,
            ..reference_params()
        };
        assert!(vertical_displacement(&near, 1).is_ok());
        assert!(matches!(
            horizontal_displacement(&near, 1),
            Err(FormulaError::IllConditioned { param: "a", .. })
        ));
    }

    #[test]
    fn exact_special_values_are_accepted() {
        for (a, u, v) in [(16.0, 3.0, 3.0), (8.0, 4.0, 3.0), (9.0, 4.0, 4.0)] {
            let params = TreeParams {
                inertia_ratio: a,
                area_ratio: u,
                shear_area_ratio: v,
                ..reference_params()
            };
            assert!(vertical_displacement(&params, 5).is_ok());
            assert!(horizontal_displacement(&params, 5).is_ok());
        }
    }

    #[test]
    fn case_continuity_across_removable_singularities() {
        // the generic expressions a hair away from the special value must
        // agree with the unit-ratio branch
        let base = reference_params();
        let z = end_node_position_vertical(77, base.levels).unwrap();
        let sig = end_node_position_horizontal(77, base.levels)
            .unwrap()
            .sigma();

        let at_16 = TreeParams {
            inertia_ratio: 16.0,
            ..base
        };
        for eps in [16.0 * 1e-12, -16.0 * 1e-12] {
            let near = TreeParams {
                inertia_ratio: 16.0 + eps,
                ..base
            };
            assert!(
                rel_gap(
                    vertical_bending_unguarded(&near, &z),
                    vertical_bending_unguarded(&at_16, &z)
                ) < 1e-6
            );
            assert!(
                rel_gap(
                    horizontal_bending_unguarded(&near, &sig),
                    horizontal_bending_unguarded(&at_16, &sig)
                ) < 1e-6
            );
        }
        let at_8 = TreeParams {
            inertia_ratio: 8.0,
            ..base
        };
        for eps in [8.0 * 1e-12, -8.0 * 1e-12] {
            let near = TreeParams {
                inertia_ratio: 8.0 + eps,
                ..base
            };
            assert!(
                rel_gap(
                    horizontal_bending_unguarded(&near, &sig),
                    horizontal_bending_unguarded(&at_8, &sig)
                ) < 1e-6
            );
        }
        let at_u4 = TreeParams {
            area_ratio: 4.0,
            ..base
        };
        let at_v4 = TreeParams {
            shear_area_ratio: 4.0,
            ..base
        };
        for eps in [4.0 * 1e-12, -4.0 * 1e-12] {
            let near_u = TreeParams {
                area_ratio: 4.0 + eps,
                ..base
            };
            let near_v = TreeParams {
                shear_area_ratio: 4.0 + eps,
                ..base
            };
            assert!(
                rel_gap(
                    vertical_axial_unguarded(&near_u),
                    vertical_axial_unguarded(&at_u4)
                ) < 1e-6
            );
            assert!(
                rel_gap(
                    horizontal_axial_unguarded(&near_u, &sig),
                    horizontal_axial_unguarded(&at_u4, &sig)
                ) < 1e-6
            );
            assert!(
                rel_gap(
                    vertical_shear_unguarded(&near_v),
                    vertical_shear_unguarded(&at_v4)
                ) < 1e-6
            );
            assert!(
                rel_gap(
                    horizontal_shear_unguarded(&near_v, &sig),
                    horizontal_shear_unguarded(&at_v4, &sig)
                ) < 1e-6
            );
        }
    }

    #[test]
    fn closed_form_matches_direct_summation_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..60 {
            let params = draw_params(&mut rng, 20, None, None, None);
            for w in [
                1u64,
                params.end_node_count() / 3 + 1,
                params.end_node_count(),
            ] {
                let closed = vertical_displacement(&params, w).unwrap();
                let direct = pvw_sum_vertical(&params, w);
                let scale = direct.magnitude_scale();
                assert!((closed.total - direct.total).abs() < 1e-12 * scale);
                assert!((closed.bending - direct.bending).abs() < 1e-12 * scale);
                assert!((closed.axial - direct.axial).abs() < 1e-12 * scale);
                assert!((closed.shear - direct.shear).abs() < 1e-12 * scale);

                let closed_h = horizontal_displacement(&params, w).unwrap();
                let direct_h = pvw_sum_horizontal(&params, w);
                let scale_h = direct_h.magnitude_scale().max(scale * 1e-6);
                assert!((closed_h.total - direct_h.total).abs() < 1e-12 * scale_h);
                assert!((closed_h.bending - direct_h.bending).abs() < 1e-12 * scale_h);
                assert!((closed_h.axial - direct_h.axial).abs() < 1e-12 * scale_h);
                assert!((closed_h.shear - direct_h.shear).abs() < 1e-12 * scale_h);
            }
        }
    }

    #[test]
    fn vertical_values_are_positive_and_symmetric() {
        let params = reference_params();
        let count = params.end_node_count();
        for w in 1..=count {
            let d = vertical_displacement(&params, w).unwrap();
            assert!(d.total > 0.0, "downward displacement expected at w={w}");
            let mirror = vertical_displacement(&params, count + 1 - w).unwrap();
            assert_eq!(d.total, mirror.total, "exact mirror symmetry");
        }
    }

    #[test]
    fn axial_and_shear_terms_do_not_depend_on_the_node() {
        let params = reference_params();
        let reference = vertical_displacement(&params, 1).unwrap();
        for w in 2..=params.end_node_count() {
            let d = vertical_displacement(&params, w).unwrap();
            assert_eq!(d.axial, reference.axial);
            assert_eq!(d.shear, reference.shear);
        }
    }

    #[test]
    fn level_iteration_reduces_to_end_node_formulas() {
        let params = reference_params();
        for w in [1u64, 100, 256] {
            let direct = vertical_displacement(&params, w).unwrap();
            let via_level =
                displacement_at_level(&params, params.levels, w, DisplacementKind::Vertical)
                    .unwrap();
            assert_eq!(direct, via_level);
        }
        let one_level = displacement_at_level(&params, 1, 1, DisplacementKind::Vertical).unwrap();
        let truncated = params.truncated(1);
        assert!(rel_gap(one_level.total, pvw_sum_vertical(&truncated, 1).total) < 1e-13);
    }

    #[test]
    fn level_iteration_rejects_bad_level() {
        let params = reference_params();
        assert!(displacement_at_level(&params, 0, 1, DisplacementKind::Vertical).is_err());
        assert!(displacement_at_level(&params, 9, 1, DisplacementKind::Vertical).is_err());
    }
}

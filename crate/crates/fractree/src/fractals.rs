//! The special functions behind the displacement profiles: exponential
//! Takagi-class curves and their partial sums, digit-weighted sums `C_{P,t}`
//! and their limits, the β-Cantor function and its inverse, and uniform
//! curve sampling for data emission.
//!
//! All evaluation points are exact rationals; floating point enters only
//! in the accumulated sums. Limit evaluators take an absolute output
//! tolerance and derive the truncation depth from the geometric tail bound.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::closedform::{self, FormulaError};
use crate::limits::{self, CancellationRegime, LimitError, LimitResult};
use crate::model::{
    end_node_position_horizontal, end_node_position_vertical, DisplacementKind, ExactPos,
    PositionError, TreeParams,
};

/// Hard cap on series depth so a tolerance/ratio combination close to the
/// divergence boundary fails fast instead of stalling.
pub const MAX_DEPTH: u32 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractalError {
    #[error("ratio {0} outside (0, 1): the series has no limit")]
    RatioOutOfRange(f64),
    #[error("tolerance {tol} at ratio {ratio} needs more than {MAX_DEPTH} terms")]
    DepthExceeded { ratio: f64, tol: f64 },
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
}

/// Partial sum of the exponential Takagi class:
/// `Σ_{i=1..terms} ratio^(i-1) · σ(2^(i-1) x)`.
pub fn phi(x: &ExactPos, ratio: f64, terms: u32) -> f64 {
    let mut weight = 1.0;
    let mut acc = 0.0;
    for s in x.sigma_scaled().take(terms as usize) {
        acc += weight * s;
        weight *= ratio;
    }
    acc
}

/// Depth needed so the sawtooth-series tail `(1/2)·r^p/(1−r)` drops below `tol`.
fn takagi_depth(ratio: f64, tol: f64) -> Result<u32, FractalError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(FractalError::RatioOutOfRange(ratio));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(FractalError::NonPositiveTolerance(tol));
    }
    let bound = 2.0 * tol * (1.0 - ratio);
    if bound >= 1.0 {
        return Ok(1);
    }
    let depth = (bound.ln() / ratio.ln()).ceil();
    if depth > MAX_DEPTH as f64 {
        return Err(FractalError::DepthExceeded { ratio, tol });
    }
    Ok((depth as u32).max(1))
}

/// Takagi-class curve value `Ψ_ratio(x)` within absolute `tol`.
pub fn takagi(x: &ExactPos, ratio: f64, tol: f64) -> Result<f64, FractalError> {
    Ok(phi(x, ratio, takagi_depth(ratio, tol)?))
}

/// Digit-weighted partial sum `C_{terms,t}(x) = Σ_{k=1..terms} ρ_k(x) t^k`.
pub fn c_partial(x: &ExactPos, weight: f64, terms: u32) -> f64 {
    let mut power = weight;
    let mut acc = 0.0;
    for d in x.digits().take(terms as usize) {
        if d == 1 {
            acc += power;
        }
        power *= weight;
    }
    acc
}

fn c_depth(weight: f64, tol: f64) -> Result<u32, FractalError> {
    if !(weight > 0.0 && weight < 1.0) {
        return Err(FractalError::RatioOutOfRange(weight));
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(FractalError::NonPositiveTolerance(tol));
    }
    // tail after p terms: t^(p+1)/(1-t)
    let bound = tol * (1.0 - weight);
    if bound >= weight {
        return Ok(1);
    }
    let depth = (bound.ln() / weight.ln() - 1.0).ceil();
    if depth > MAX_DEPTH as f64 {
        return Err(FractalError::DepthExceeded { ratio: weight, tol });
    }
    Ok((depth as u32).max(1))
}

/// Limit `C_t(x) = Σ_{k≥1} ρ_k(x) t^k` within absolute `tol`.
pub fn c_limit(x: &ExactPos, weight: f64, tol: f64) -> Result<f64, FractalError> {
    Ok(c_partial(x, weight, c_depth(weight, tol)?))
}

/// Inverse β-Cantor function at `y`, evaluated from the canonical digits
/// of `y`:
///
/// `f_β⁻¹(y) = ((1+β)/(1−β)) · Σ_k ρ_k(y) t^k` with `t = (1−β)/2`,
///
/// which equals `((1−t)/t)·C_t(y)`.
pub fn beta_cantor_inverse(y: &ExactPos, beta: f64) -> Result<f64, FractalError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(FractalError::RatioOutOfRange(beta));
    }
    let t = (1.0 - beta) / 2.0;
    let coeff = (1.0 + beta) / (1.0 - beta);
    let inner_tol = 1e-17 / coeff;
    Ok(coeff * c_limit(y, t, inner_tol)?)
}

/// β-Cantor function value at the point of `Ω_β` encoded by the digit
/// stream `digits`: `f_β = Σ_k α_k / 2^k`.
pub fn beta_cantor(digits: &[u8], beta: f64) -> Result<f64, FractalError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(FractalError::RatioOutOfRange(beta));
    }
    let mut power = 0.5;
    let mut acc = 0.0;
    for &d in digits {
        if d != 0 {
            acc += power;
        }
        power *= 0.5;
    }
    Ok(acc)
}

/// Ordered (abscissa, value) table, the emission format behind every curve.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurveSamples {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: CurveMeta,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurveMeta {
    pub kind: String,
    pub parameters: BTreeMap<String, f64>,
}

/// What `sample_curve` evaluates.
#[derive(Debug, Clone)]
pub enum CurveKind {
    TakagiPartial { ratio: f64, terms: u32 },
    TakagiLimit { ratio: f64, tol: f64 },
    CPartial { weight: f64, terms: u32 },
    CLimit { weight: f64, tol: f64 },
    VerticalIteration { params: TreeParams, level: u32 },
    HorizontalIteration { params: TreeParams, level: u32 },
    VerticalLimit { params: TreeParams, tol: f64 },
    HorizontalLimit { params: TreeParams, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Position(#[from] PositionError),
}

impl CurveKind {
    fn label(&self) -> &'static str {
        match self {
            CurveKind::TakagiPartial { .. } => "takagi_partial",
            CurveKind::TakagiLimit { .. } => "takagi_limit",
            CurveKind::CPartial { .. } => "c_partial",
            CurveKind::CLimit { .. } => "c_limit",
            CurveKind::VerticalIteration { .. } => "vertical_iteration",
            CurveKind::HorizontalIteration { .. } => "horizontal_iteration",
            CurveKind::VerticalLimit { .. } => "vertical_limit",
            CurveKind::HorizontalLimit { .. } => "horizontal_limit",
        }
    }

    fn meta(&self) -> CurveMeta {
        let mut parameters = BTreeMap::new();
        match self {
            CurveKind::TakagiPartial { ratio, terms } => {
                parameters.insert("ratio".into(), *ratio);
                parameters.insert("terms".into(), *terms as f64);
            }
            CurveKind::TakagiLimit { ratio, tol } => {
                parameters.insert("ratio".into(), *ratio);
                parameters.insert("tol".into(), *tol);
            }
            CurveKind::CPartial { weight, terms } => {
                parameters.insert("weight".into(), *weight);
                parameters.insert("terms".into(), *terms as f64);
            }
            CurveKind::CLimit { weight, tol } => {
                parameters.insert("weight".into(), *weight);
                parameters.insert("tol".into(), *tol);
            }
            CurveKind::VerticalIteration { level, .. }
            | CurveKind::HorizontalIteration { level, .. } => {
                parameters.insert("level".into(), *level as f64);
            }
            CurveKind::VerticalLimit { tol, .. } | CurveKind::HorizontalLimit { tol, .. } => {
                parameters.insert("tol".into(), *tol);
            }
        }
        CurveMeta {
            kind: self.label().to_string(),
            parameters,
        }
    }
}

fn limit_value(result: LimitResult) -> Result<f64, SampleError> {
    match result {
        LimitResult::Convergent(value) => Ok(value),
        LimitResult::Divergent(reasons) => {
            Err(SampleError::Limit(LimitError::DivergentParameters(reasons)))
        }
    }
}

/// Samples a curve on `n` uniform exact-rational abscissae in `[0, 1]`
/// (iteration kinds use the level's own node abscissae instead and ignore
/// `n` beyond the ≥ 2 check).
///
/// Horizontal displacement kinds are emitted outward-positive, the plotting
/// convention for those profiles.
pub fn sample_curve(kind: &CurveKind, n: usize) -> Result<CurveSamples, SampleError> {
    if n < 2 {
        return Err(SampleError::TooFewSamples(n));
    }
    let uniform: Vec<ExactPos> = (0..n as u64)
        .map(|j| ExactPos::new(j, n as u64 - 1).expect("j ≤ n-1"))
        .collect();

    let (abscissae, values): (Vec<f64>, Vec<f64>) = match kind {
        CurveKind::TakagiPartial { ratio, terms } => {
            evaluate(&uniform, |x| Ok(phi(x, *ratio, *terms)))?
        }
        CurveKind::TakagiLimit { ratio, tol } => {
            let depth = takagi_depth(*ratio, *tol)?;
            evaluate(&uniform, |x| Ok(phi(x, *ratio, depth)))?
        }
        CurveKind::CPartial { weight, terms } => {
            evaluate(&uniform, |x| Ok(c_partial(x, *weight, *terms)))?
        }
        CurveKind::CLimit { weight, tol } => {
            let depth = c_depth(*weight, *tol)?;
            evaluate(&uniform, |x| Ok(c_partial(x, *weight, depth)))?
        }
        CurveKind::VerticalIteration { params, level } => {
            let nodes = node_abscissae(*level, DisplacementKind::Vertical)?;
            let mut abscissae = Vec::with_capacity(nodes.len());
            let mut values = Vec::with_capacity(nodes.len());
            for (k, z) in nodes.iter().enumerate() {
                let d = closedform::displacement_at_level(
                    params,
                    *level,
                    k as u64 + 1,
                    DisplacementKind::Vertical,
                )?;
                abscissae.push(z.to_f64());
                values.push(d.total);
            }
            (abscissae, values)
        }
        CurveKind::HorizontalIteration { params, level } => {
            let nodes = node_abscissae(*level, DisplacementKind::Horizontal)?;
            let mut abscissae = Vec::with_capacity(nodes.len());
            let mut values = Vec::with_capacity(nodes.len());
            for (k, z) in nodes.iter().enumerate() {
                let d = closedform::displacement_at_level(
                    params,
                    *level,
                    k as u64 + 1,
                    DisplacementKind::Horizontal,
                )?;
                abscissae.push(z.to_f64());
                values.push(crate::closedform::outward(d.total, z.to_f64()));
            }
            (abscissae, values)
        }
        CurveKind::VerticalLimit { params, tol } => evaluate(&uniform, |z| {
            limit_value(limits::vertical_limit(params, z, *tol)?)
        })?,
        CurveKind::HorizontalLimit { params, tol } => evaluate(&uniform, |z| {
            let signed = limit_value(limits::horizontal_limit(
                params,
                z,
                *tol,
                CancellationRegime::None,
            )?)?;
            Ok(crate::closedform::outward(signed, z.to_f64()))
        })?,
    };

    Ok(CurveSamples {
        abscissae,
        values,
        meta: kind.meta(),
    })
}

fn node_abscissae(level: u32, kind: DisplacementKind) -> Result<Vec<ExactPos>, PositionError> {
    let count = 1u64 << level;
    (1..=count)
        .map(|w| match kind {
            DisplacementKind::Vertical => end_node_position_vertical(w, level),
            DisplacementKind::Horizontal => end_node_position_horizontal(w, level),
        })
        .collect()
}

fn evaluate<F>(points: &[ExactPos], f: F) -> Result<(Vec<f64>, Vec<f64>), SampleError>
where
    F: Fn(&ExactPos) -> Result<f64, SampleError> + Sync,
{
    let values: Result<Vec<f64>, SampleError> = points.par_iter().map(&f).collect();
    Ok((points.iter().map(ExactPos::to_f64).collect(), values?))
}

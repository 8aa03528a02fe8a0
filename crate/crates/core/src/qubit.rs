//! The four-angle correlating unitary on two identical thermal qubits and
//! the closed forms for its final state, output temperature, average work
//! cost and created mutual information.
//!
//! Only the block acting on `{|00⟩, |11⟩}` moves energy; the `{|01⟩, |10⟩}`
//! block (angles `φ`, `γ`) acts on a degenerate, equally populated pair and
//! has no effect on any output. Everything below depends on `(θ, δ)` only
//! through `cos²δ·sin²θ`, called the mixing weight here.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{ensure_unitary, ComplexMatrix, C64};
use crate::thermal::{DensityMatrix, InverseTemperature, LogBase};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryParams {
    pub theta: f64,
    pub delta: f64,
    pub phi: f64,
    pub gamma: f64,
}

/// Maps an angle into `[−π, π)`.
pub fn canonical_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let y = x - two_pi * ((x + PI) / two_pi).floor();
    if y >= PI {
        y - two_pi
    } else {
        y
    }
}

impl UnitaryParams {
    pub fn new(theta: f64, delta: f64, phi: f64, gamma: f64) -> Result<Self> {
        if [theta, delta, phi, gamma].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("unitary angles must be finite".into()));
        }
        Ok(Self {
            theta: canonical_angle(theta),
            delta: canonical_angle(delta),
            phi: canonical_angle(phi),
            gamma: canonical_angle(gamma),
        })
    }

    /// `(θ, δ)` with the irrelevant `S₁` rotation switched off.
    pub fn correlating(theta: f64, delta: f64) -> Result<Self> {
        Self::new(theta, delta, 0.0, 0.0)
    }

    /// `cos²δ·sin²θ`, the fraction of population exchanged between `|00⟩`
    /// and `|11⟩`.
    pub fn mixing_weight(&self) -> f64 {
        (self.delta.cos() * self.theta.sin()).powi(2)
    }
}

/// The correlating unitary in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn build_ucorr(p: &UnitaryParams) -> ComplexMatrix {
    let (st, ct) = p.theta.sin_cos();
    let (sd, cd) = p.delta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    let (sg, cg) = p.gamma.sin_cos();
    let z = C64::new(0.0, 0.0);
    let r = |x: f64| C64::new(x, 0.0);
    ComplexMatrix::from_rows(&[
        vec![C64::new(ct, sd * st), z, z, r(cd * st)],
        vec![z, C64::new(cp, sg * sp), r(cg * sp), z],
        vec![z, r(-cg * sp), C64::new(cp, -sg * sp), z],
        vec![r(-cd * st), z, z, C64::new(ct, -sd * st)],
    ])
}

/// `U ρ U†`, revalidated as a density matrix.
pub fn apply_protocol(rho: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    if u.rows() != rho.dim() || !u.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}×{} unitary on a state of dimension {}",
            u.rows(),
            u.cols(),
            rho.dim()
        )));
    }
    ensure_unitary(u, 1e-10)?;
    DensityMatrix::new(rho.matrix().conjugate_by(u)?, rho.dims())
}

/// Unnormalized entries of the evolved two-qubit thermal state.
///
/// The state is `(1/Z)·[[A₋,0,0,B₊],[0,1,0,0],[0,0,1,0],[B₋,0,0,A₊]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticTwoQubitFinalState {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: C64,
    pub b_minus: C64,
    pub z: f64,
}

impl AnalyticTwoQubitFinalState {
    pub fn to_matrix(&self) -> ComplexMatrix {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        ComplexMatrix::from_rows(&[
            vec![C64::new(self.a_minus, 0.0), zero, zero, self.b_plus],
            vec![zero, one, zero, zero],
            vec![zero, zero, one, zero],
            vec![self.b_minus, zero, zero, C64::new(self.a_plus, 0.0)],
        ])
        .scale_real(1.0 / self.z)
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_matrix(), (2, 2))
    }
}

/// `A± = e^{±βω} ∓ 2 sinh(βω) cos²δ sin²θ`,
/// `B± = 2 sinh(βω) cosδ sinθ (cosθ ± i sinδ sinθ)`, `Z = (2 cosh(βω/2))²`.
///
/// Only finite `β_in` is representable since the entries are unnormalized.
pub fn analytic_final_state(
    beta_in: InverseTemperature,
    omega: f64,
    p: &UnitaryParams,
) -> Result<AnalyticTwoQubitFinalState> {
    let beta = beta_in
        .finite()
        .ok_or_else(|| Error::InvalidParameter("unnormalized final state needs finite β_in".into()))?;
    let x = beta * omega;
    let sinh2 = 2.0 * x.sinh();
    let weight = p.mixing_weight();
    let amp = sinh2 * p.delta.cos() * p.theta.sin();
    let inner = C64::new(p.theta.cos(), p.delta.sin() * p.theta.sin());
    Ok(AnalyticTwoQubitFinalState {
        a_plus: x.exp() - sinh2 * weight,
        a_minus: (-x).exp() + sinh2 * weight,
        b_plus: inner * amp,
        b_minus: inner.conj() * amp,
        z: (2.0 * (x / 2.0).cosh()).powi(2),
    })
}

/// `(t, 1 − t, 1 + t)` with `t = tanh(βω/2)`, each computed without
/// cancellation.
fn tanh_parts(beta: InverseTemperature, omega: f64) -> (f64, f64, f64) {
    match beta {
        InverseTemperature::PositiveInfinity => (1.0, 0.0, 2.0),
        InverseTemperature::NegativeInfinity => (-1.0, 2.0, 0.0),
        InverseTemperature::Finite(b) => {
            let x = b * omega;
            let e = (-x.abs()).exp();
            let t = (1.0 - e) / (1.0 + e);
            let small = 2.0 * e / (1.0 + e);
            let large = 2.0 / (1.0 + e);
            if x >= 0.0 {
                (t, small, large)
            } else {
                (-t, large, small)
            }
        }
    }
}

fn beta_from_parts(one_plus: f64, one_minus: f64, omega: f64) -> InverseTemperature {
    if one_minus <= 0.0 {
        InverseTemperature::PositiveInfinity
    } else if one_plus <= 0.0 {
        InverseTemperature::NegativeInfinity
    } else {
        InverseTemperature::Finite((one_plus.ln() - one_minus.ln()) / omega)
    }
}

/// Local output temperature from `tanh(β_out ω/2) = tanh(β_in ω/2)(1 − 2cos²δ sin²θ)`.
pub fn beta_out_of_params(beta_in: InverseTemperature, omega: f64, p: &UnitaryParams) -> InverseTemperature {
    beta_out_of_weight(beta_in, omega, p.mixing_weight())
}

/// Same as [`beta_out_of_params`] for a given mixing weight `s ∈ [0, 1]`.
pub fn beta_out_of_weight(beta_in: InverseTemperature, omega: f64, weight: f64) -> InverseTemperature {
    if weight == 0.0 {
        return beta_in;
    }
    let (_, one_minus, one_plus) = tanh_parts(beta_in, omega);
    let keep = 1.0 - weight;
    beta_from_parts(keep * one_plus + weight * one_minus, keep * one_minus + weight * one_plus, omega)
}

/// `W = 2ω tanh(β_in ω/2) cos²δ sin²θ`.
pub fn work_cost_params(beta_in: InverseTemperature, omega: f64, p: &UnitaryParams) -> f64 {
    2.0 * omega * beta_in.tanh_half(omega) * p.mixing_weight()
}

/// `2ω tanh(β_in ω/2)`, the largest average work any member of the family
/// can cost.
pub fn work_bound(beta_in: InverseTemperature, omega: f64) -> f64 {
    2.0 * omega * beta_in.tanh_half(omega)
}

fn check_reachable(beta_in: InverseTemperature, beta_out: InverseTemperature) -> Result<()> {
    let limit = beta_in.abs().value();
    let b = beta_out.value().abs();
    if b > limit + 1e-12 * (1.0 + limit) {
        return Err(Error::Infeasible(format!(
            "β_out = {beta_out} is outside the reachable range [−{limit}, {limit}]"
        )));
    }
    Ok(())
}

/// `W = ω(tanh(β_in ω/2) − tanh(β_out ω/2))`; rejects `|β_out| > |β_in|`.
pub fn work_cost_temps(beta_in: InverseTemperature, beta_out: InverseTemperature, omega: f64) -> Result<f64> {
    check_reachable(beta_in, beta_out)?;
    Ok(omega * (beta_in.tanh_half(omega) - beta_out.tanh_half(omega)))
}

/// `θ(δ)` on the curve of constant average work `w`, principal branch in
/// `[0, π/2]`. The other branch is `π − θ`.
pub fn iso_work_theta(delta: f64, w: f64, beta_in: InverseTemperature, omega: f64) -> Result<f64> {
    let t = beta_in.tanh_half(omega);
    if w == 0.0 {
        return Ok(0.0);
    }
    if t == 0.0 || w / t < 0.0 {
        return Err(Error::Infeasible(format!("no unitary of this family costs W = {w} at β_in = {beta_in}")));
    }
    let arg = (w / (2.0 * omega * t)).sqrt() / delta.cos().abs();
    if !arg.is_finite() || arg > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!("W = {w} is out of reach at δ = {delta} (arcsin argument {arg})")));
    }
    Ok(arg.min(1.0).asin())
}

/// `φ(x) = x tanh(x/2) − 2 ln cosh(x/2)`, evaluated stably for large `|x|`
/// and tending to `2 ln 2`.
fn information_potential(beta: InverseTemperature, omega: f64) -> f64 {
    match beta {
        InverseTemperature::Finite(b) => {
            let a = (b * omega).abs();
            let e = (-a).exp();
            -2.0 * a * e / (1.0 + e) + 2.0 * LN_2 - 2.0 * e.ln_1p()
        }
        _ => 2.0 * LN_2,
    }
}

/// Mutual information of the output as a function of input and output
/// temperatures; even in `β_out`.
pub fn mutual_info_temps(
    beta_in: InverseTemperature,
    beta_out: InverseTemperature,
    omega: f64,
    base: LogBase,
) -> f64 {
    base.from_nats(information_potential(beta_in, omega) - information_potential(beta_out, omega))
}

/// `(I_max, W)`: the largest mutual information the family can create,
/// reached at `β_out = 0`, and its average work cost `ω tanh(β_in ω/2)`.
pub fn max_correlations(beta_in: InverseTemperature, omega: f64, base: LogBase) -> Result<(f64, f64)> {
    if beta_in.value() < 0.0 {
        return Err(Error::InvalidParameter(format!("β_in must be non-negative, got {beta_in}")));
    }
    let zero = InverseTemperature::Finite(0.0);
    Ok((mutual_info_temps(beta_in, zero, omega, base), omega * beta_in.tanh_half(omega)))
}

/// A member of the family (`δ = 0`, `θ ∈ [0, π/2]`) whose output
/// temperature is `beta_out`.
pub fn params_for_beta_out(
    beta_in: InverseTemperature,
    beta_out: InverseTemperature,
    omega: f64,
) -> Result<UnitaryParams> {
    check_reachable(beta_in, beta_out)?;
    let t_in = beta_in.tanh_half(omega);
    if t_in == 0.0 {
        return UnitaryParams::correlating(0.0, 0.0);
    }
    let weight = ((1.0 - beta_out.tanh_half(omega) / t_in) / 2.0).clamp(0.0, 1.0);
    UnitaryParams::correlating(weight.sqrt().asin(), 0.0)
}

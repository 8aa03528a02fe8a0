//! Hamiltonians of two identical non-interacting subsystems, Gibbs states,
//! entropies and local temperatures.
//!
//! Local levels are listed from the top down: index 0 is the most excited
//! level. For qubits this means `σz|0⟩ = +|0⟩` and the global diagonal of
//! `(ω/2)(σz⊗I + I⊗σz)` is `(+ω, 0, 0, −ω)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, partial_trace, ComplexMatrix, Subsystem, ALGEBRAIC_TOL, C64, PHYSICAL_TOL,
};

/// Residual above which a qudit local state is not considered Gibbs.
pub const GIBBS_FIT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    d: usize,
    gap: f64,
    local_energies: Vec<f64>,
    global_energies: Vec<f64>,
}

impl Hamiltonian {
    /// Two identical subsystems with `d` equally spaced local levels spanning
    /// `(d − 1)·ω`, centred on zero and ordered from the top down.
    pub fn new(omega: f64, d: usize) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("energy gap must be positive, got {omega}")));
        }
        if d < 2 {
            return Err(Error::InvalidParameter(format!("local dimension must be at least 2, got {d}")));
        }
        let centre = (d as f64 - 1.0) / 2.0;
        let local: Vec<f64> = (0..d).map(|k| (centre - k as f64) * omega).collect();
        Ok(Self::assemble(omega, local))
    }

    /// Arbitrary local spectrum shared by both subsystems. `omega` is kept as
    /// the reference energy unit.
    pub fn with_local_energies(omega: f64, local_energies: Vec<f64>) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("energy gap must be positive, got {omega}")));
        }
        if local_energies.len() < 2 || local_energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("need at least two finite local energies".into()));
        }
        Ok(Self::assemble(omega, local_energies))
    }

    fn assemble(gap: f64, local_energies: Vec<f64>) -> Self {
        let d = local_energies.len();
        let global_energies = local_energies
            .iter()
            .flat_map(|&ea| local_energies.iter().map(move |&eb| ea + eb))
            .collect();
        Self { d, gap, local_energies, global_energies }
    }

    pub fn subsystem_dim(&self) -> usize {
        self.d
    }

    pub fn n_subsystems(&self) -> usize {
        2
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn local_energies(&self) -> &[f64] {
        &self.local_energies
    }

    /// `E_a + E_b` in lexicographic basis order `|00⟩, |01⟩, …`.
    pub fn global_energies(&self) -> &[f64] {
        &self.global_energies
    }

    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&self.global_energies)
    }

    pub fn local_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&self.local_energies)
    }
}

/// Inverse temperature in units of 1/energy.
///
/// The zero-temperature limits are explicit variants rather than overflowing
/// floats. Negative values describe population inversion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InverseTemperature {
    Finite(f64),
    PositiveInfinity,
    NegativeInfinity,
}

impl InverseTemperature {
    /// Maps `±∞` to the flagged limits and rejects NaN.
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() {
            Err(Error::InvalidParameter("inverse temperature is NaN".into()))
        } else if beta == f64::INFINITY {
            Ok(Self::PositiveInfinity)
        } else if beta == f64::NEG_INFINITY {
            Ok(Self::NegativeInfinity)
        } else {
            Ok(Self::Finite(beta))
        }
    }

    /// Like [`InverseTemperature::new`] but panics on NaN.
    pub fn from_f64(beta: f64) -> Self {
        Self::new(beta).expect("inverse temperature must not be NaN")
    }

    /// The value as a float, with the limits mapped to `±∞`.
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(b) => b,
            Self::PositiveInfinity => f64::INFINITY,
            Self::NegativeInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn abs(self) -> Self {
        match self {
            Self::Finite(b) => Self::Finite(b.abs()),
            _ => Self::PositiveInfinity,
        }
    }

    /// `tanh(β·ω/2)`, exact at the limits.
    pub fn tanh_half(self, omega: f64) -> f64 {
        match self {
            Self::Finite(b) => (b * omega / 2.0).tanh(),
            Self::PositiveInfinity => 1.0,
            Self::NegativeInfinity => -1.0,
        }
    }
}

impl std::ops::Neg for InverseTemperature {
    type Output = Self;

    fn neg(self) -> Self {
        match self {
            Self::Finite(b) => Self::Finite(-b),
            Self::PositiveInfinity => Self::NegativeInfinity,
            Self::NegativeInfinity => Self::PositiveInfinity,
        }
    }
}

impl From<f64> for InverseTemperature {
    fn from(beta: f64) -> Self {
        Self::from_f64(beta)
    }
}

impl fmt::Display for InverseTemperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(b) => write!(f, "{b}"),
            Self::PositiveInfinity => write!(f, "+inf"),
            Self::NegativeInfinity => write!(f, "-inf"),
        }
    }
}

/// Logarithm base for entropies and mutual information.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    /// Nats.
    #[default]
    E,
    /// Bits.
    Two,
}

impl LogBase {
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Self::E => nats,
            Self::Two => nats / std::f64::consts::LN_2,
        }
    }
}

/// Normalized Gibbs weights `e^{−βE_k}/Z`.
///
/// The largest exponent is subtracted before exponentiating. At `β = ±∞` the
/// weight is spread uniformly over the lowest (highest) energy manifold.
pub fn gibbs_populations(energies: &[f64], beta: InverseTemperature) -> Vec<f64> {
    match beta {
        InverseTemperature::Finite(b) => {
            let exponents: Vec<f64> = energies.iter().map(|&e| -b * e).collect();
            let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = exponents.iter().map(|&x| (x - top).exp()).collect();
            let z: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / z).collect()
        }
        InverseTemperature::PositiveInfinity | InverseTemperature::NegativeInfinity => {
            let pick = if beta == InverseTemperature::PositiveInfinity { f64::min } else { f64::max };
            let target = energies.iter().copied().reduce(pick).unwrap_or(0.0);
            let scale = energies.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
            let mask: Vec<bool> =
                energies.iter().map(|&e| (e - target).abs() <= 1e-12 * scale).collect();
            let count = mask.iter().filter(|&&m| m).count() as f64;
            mask.into_iter().map(|m| if m { 1.0 / count } else { 0.0 }).collect()
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix on a `d_a × d_b`
/// system. Single-system states use `dims = (d, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: (usize, usize),
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace within 1e-12 and the smallest
    /// eigenvalue against −1e-10.
    pub fn new(matrix: ComplexMatrix, dims: (usize, usize)) -> Result<Self> {
        let n = dims.0 * dims.1;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} matrix for subsystem dimensions {:?}",
                matrix.rows(),
                matrix.cols(),
                dims
            )));
        }
        let herm = matrix.hermiticity_residual();
        if herm > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
        }
        let eig = hermitian_eig(&matrix, ALGEBRAIC_TOL)?;
        let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min < -PHYSICAL_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix, dims })
    }

    /// Diagonal state from populations that are already known to be valid.
    pub(crate) fn from_populations(populations: &[f64], dims: (usize, usize)) -> Self {
        Self { matrix: ComplexMatrix::from_real_diag(populations), dims }
    }

    /// The pure state `|ψ⟩⟨ψ|` (normalized here).
    pub fn pure(psi: &[C64], dims: (usize, usize)) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let normalized: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&normalized), dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.real_diagonal()
    }

    /// Reduced state of one subsystem.
    pub fn reduced(&self, keep: Subsystem) -> Result<Self> {
        let (da, db) = self.dims;
        let local = partial_trace(&self.matrix, da, db, keep)?;
        let d = match keep {
            Subsystem::A => da,
            Subsystem::B => db,
        };
        Ok(Self { matrix: local, dims: (d, 1) })
    }

    /// `⟨O⟩ = Re Tr[O ρ]`.
    pub fn expectation(&self, observable: &ComplexMatrix) -> Result<f64> {
        Ok(observable.matmul(&self.matrix)?.trace().re)
    }
}

/// Global Gibbs state `e^{−βH}/Z`, a product of identical local Gibbs states.
pub fn thermal_state(h: &Hamiltonian, beta: InverseTemperature) -> DensityMatrix {
    let populations = gibbs_populations(h.global_energies(), beta);
    DensityMatrix::from_populations(&populations, (h.subsystem_dim(), h.subsystem_dim()))
}

/// Local Gibbs state of one subsystem.
pub fn local_thermal_state(h: &Hamiltonian, beta: InverseTemperature) -> DensityMatrix {
    let populations = gibbs_populations(h.local_energies(), beta);
    DensityMatrix::from_populations(&populations, (h.subsystem_dim(), 1))
}

/// Partition function `Σ e^{−βE}` of the global Hamiltonian (finite β only).
pub fn partition_function(h: &Hamiltonian, beta: f64) -> f64 {
    h.global_energies().iter().map(|&e| (-beta * e).exp()).sum()
}

/// `−Σ λ log λ` over the spectrum, with `0·log 0 = 0`.
///
/// Eigenvalues in `[−1e-10, 0)` are clamped to zero; anything more negative
/// is rejected.
pub fn von_neumann_entropy(rho: &DensityMatrix, base: LogBase) -> Result<f64> {
    let m = rho.matrix();
    let eigenvalues = if m.max_off_diagonal() == 0.0 {
        m.real_diagonal()
    } else {
        hermitian_eig(m, ALGEBRAIC_TOL)?.eigenvalues
    };
    let mut nats = 0.0;
    for lambda in eigenvalues {
        if lambda < -PHYSICAL_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lambda:e}")));
        }
        if lambda > 0.0 {
            nats -= lambda * lambda.ln();
        }
    }
    Ok(base.from_nats(nats))
}

/// `S[ρ_A] + S[ρ_B] − S[ρ]` using the subsystem dimensions carried by `rho`.
pub fn mutual_information(rho: &DensityMatrix, base: LogBase) -> Result<f64> {
    let s_a = von_neumann_entropy(&rho.reduced(Subsystem::A)?, base)?;
    let s_b = von_neumann_entropy(&rho.reduced(Subsystem::B)?, base)?;
    let s = von_neumann_entropy(rho, base)?;
    Ok(s_a + s_b - s)
}

/// Result of fitting a diagonal local state to a Gibbs distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsFit {
    pub beta: InverseTemperature,
    /// Largest deviation of the populations from the fitted Gibbs
    /// distribution.
    pub residual: f64,
}

/// Inverse temperature of a local qubit or equally spaced qudit state with
/// level spacing `omega`.
///
/// Qubits use `β = ln(p_ground/p_excited)/ω`; larger dimensions go through
/// [`fit_local_gibbs`]. Fully polarized states give the flagged infinite
/// limits.
pub fn local_inverse_temperature(rho_local: &DensityMatrix, omega: f64) -> Result<InverseTemperature> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("energy gap must be positive, got {omega}")));
    }
    let m = rho_local.matrix();
    let coherence = m.max_off_diagonal();
    if coherence > PHYSICAL_TOL {
        return Err(Error::InvalidState(format!("local state has coherences up to {coherence:e}")));
    }
    let d = m.rows();
    if d == 2 {
        let p = m.real_diagonal();
        let (excited, ground) = (p[0], p[1]);
        if excited <= 0.0 {
            return Ok(InverseTemperature::PositiveInfinity);
        }
        if ground <= 0.0 {
            return Ok(InverseTemperature::NegativeInfinity);
        }
        return Ok(InverseTemperature::Finite((ground / excited).ln() / omega));
    }
    let h = Hamiltonian::new(omega, d)?;
    Ok(fit_local_gibbs(rho_local, h.local_energies())?.beta)
}

/// Fit of `ln p_k` against `E_k`, weighted by `p_k²` so that populations
/// near the rounding floor carry no weight.
///
/// Fails with [`Error::NotGibbs`] when the populations deviate from the
/// fitted Gibbs distribution by more than [`GIBBS_FIT_TOL`].
pub fn fit_local_gibbs(rho_local: &DensityMatrix, energies: &[f64]) -> Result<GibbsFit> {
    let p = rho_local.populations();
    if p.len() != energies.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} populations for {} energies",
            p.len(),
            energies.len()
        )));
    }
    let deviation = |beta: InverseTemperature| {
        let expected = gibbs_populations(energies, beta);
        p.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let positive: Vec<(f64, f64)> = energies.iter().zip(&p).filter(|(_, &x)| x > 0.0).map(|(&e, &x)| (e, x)).collect();
    let distinct = positive.iter().any(|(e, _)| (e - positive[0].0).abs() > 0.0);
    if positive.len() < 2 || !distinct {
        for limit in [InverseTemperature::PositiveInfinity, InverseTemperature::NegativeInfinity] {
            let dev = deviation(limit);
            if dev <= PHYSICAL_TOL {
                return Ok(GibbsFit { beta: limit, residual: dev });
            }
        }
        if energies.iter().all(|&e| e == energies[0]) {
            return Err(Error::InvalidParameter("degenerate local spectrum".into()));
        }
        return Err(Error::NotGibbs { residual: f64::INFINITY });
    }
    let weights: Vec<f64> = positive.iter().map(|(_, x)| x * x).collect();
    let total: f64 = weights.iter().sum();
    let e_mean = positive.iter().zip(&weights).map(|((e, _), w)| w * e).sum::<f64>() / total;
    let y_mean = positive.iter().zip(&weights).map(|((_, x), w)| w * x.ln()).sum::<f64>() / total;
    let sxx: f64 = positive.iter().zip(&weights).map(|((e, _), w)| w * (e - e_mean).powi(2)).sum();
    let sxy: f64 = positive.iter().zip(&weights).map(|((e, x), w)| w * (e - e_mean) * (x.ln() - y_mean)).sum();
    let beta = InverseTemperature::Finite(-sxy / sxx);
    let residual = deviation(beta);
    if residual > GIBBS_FIT_TOL {
        return Err(Error::NotGibbs { residual });
    }
    Ok(GibbsFit { beta, residual })
}

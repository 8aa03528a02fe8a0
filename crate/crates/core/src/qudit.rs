//! Correlating unitaries for two identical qudits built from rotations inside
//! generalized Bell subspaces.
//!
//! `S_j` is spanned by the Bell states `|φ_{m,j}⟩ = d^{−1/2} Σ_k e^{2πikm/d}|k⟩|k+j⟩`,
//! equivalently by the product states `|k, k+j⟩`. A unitary that acts
//! inside every `S_j` maps a global thermal state to a state whose marginals
//! stay diagonal, and moves the populations of each `S_j` by a doubly
//! stochastic matrix. When the rotation is diagonal in the Bell basis its
//! product-basis form is circulant, so the population map is
//! `T = Σ_i η_i Π^i` with `η_i = |r_i|²`, `r` the first row of the circulant.
//!
//! Conventions: `Π = Σ_k |k⟩⟨k+1|` (so `(Π^i)_{a,b} = δ_{b,a+i}`), all
//! indices mod `d`, local levels ordered from the top down.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, solve_real, ComplexMatrix, Subsystem, ALGEBRAIC_TOL, C64, PHYSICAL_TOL};
use crate::thermal::{
    fit_local_gibbs, gibbs_populations, thermal_state, DensityMatrix, GibbsFit, Hamiltonian,
    InverseTemperature, GIBBS_FIT_TOL,
};

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimension must be at least 2, got {d}")));
    }
    Ok(())
}

fn root_of_unity(k: i64, d: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (k.rem_euclid(d as i64)) as f64 / d as f64)
}

/// Shift `X|n⟩ = |n+1⟩` and clock `Z|n⟩ = e^{2πin/d}|n⟩`.
pub fn clock_operators(d: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_dim(d)?;
    let mut x = ComplexMatrix::zeros(d, d);
    for n in 0..d {
        x[((n + 1) % d, n)] = C64::new(1.0, 0.0);
    }
    let z = ComplexMatrix::from_diag(&(0..d).map(|n| root_of_unity(n as i64, d)).collect::<Vec<_>>());
    Ok((x, z))
}

/// `Π = Σ_k |k⟩⟨k+1|`, the inverse of the clock shift.
pub fn permutation_operator(d: usize) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        p[(a, (a + 1) % d)] = C64::new(1.0, 0.0);
    }
    p
}

/// Normalized `|φ_{m,n}⟩ = d^{−1/2} Σ_k e^{2πikm/d} |k⟩|k+n⟩`.
pub fn bell_state(m: usize, n: usize, d: usize) -> Result<Vec<C64>> {
    check_dim(d)?;
    if m >= d || n >= d {
        return Err(Error::InvalidParameter(format!("Bell labels ({m}, {n}) out of range for d = {d}")));
    }
    let norm = 1.0 / (d as f64).sqrt();
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d {
        psi[k * d + (k + n) % d] = root_of_unity((k * m) as i64, d) * norm;
    }
    Ok(psi)
}

/// The `d` Bell states `|φ_{m,j}⟩`, `m = 0..d`, spanning `S_j`.
pub fn subspace_basis(j: usize, d: usize) -> Result<Vec<Vec<C64>>> {
    (0..d).map(|m| bell_state(m, j, d)).collect()
}

/// Global index of the product state `|k, k+j⟩`.
pub fn subspace_index(k: usize, j: usize, d: usize) -> usize {
    k * d + (k + j) % d
}

/// Rotation inside one Bell subspace that is diagonal in the Bell basis,
/// `R = F†·diag(e^{iφ_m})·F` in the product basis `|k, k+j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceRotation {
    pub phases: Vec<f64>,
    /// First row of the circulant: `R_{a,b} = r_{(b−a) mod d}`.
    pub r_coeffs: Vec<C64>,
    /// `R` in the product basis `|0, j⟩, |1, 1+j⟩, …`.
    pub rotation: ComplexMatrix,
}

impl SubspaceRotation {
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `|r_i|²`, the weights of `Π^i` in the induced population map.
    pub fn eta(&self) -> Vec<f64> {
        self.r_coeffs.iter().map(|r| r.norm_sqr()).collect()
    }

    /// The same rotation in the Bell basis `|φ_{0,j}⟩, …, |φ_{d−1,j}⟩`.
    pub fn bell_block(&self) -> ComplexMatrix {
        ComplexMatrix::from_diag(&self.phases.iter().map(|&p| C64::from_polar(1.0, p)).collect::<Vec<_>>())
    }
}

/// `r_i = (1/d) Σ_k e^{iφ_k} e^{−2πiki/d}`.
fn circulant_coefficients(phases: &[f64]) -> Vec<C64> {
    let d = phases.len();
    (0..d)
        .map(|i| {
            phases
                .iter()
                .enumerate()
                .map(|(k, &p)| C64::from_polar(1.0, p) * root_of_unity(-((k * i) as i64), d))
                .sum::<C64>()
                / d as f64
        })
        .collect()
}

pub fn circulant_unitary(phases: &[f64]) -> Result<SubspaceRotation> {
    let d = phases.len();
    check_dim(d)?;
    if phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("phases must be finite".into()));
    }
    let r_coeffs = circulant_coefficients(phases);
    let mut rotation = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            rotation[(a, b)] = r_coeffs[(b + d - a) % d];
        }
    }
    Ok(SubspaceRotation { phases: phases.to_vec(), r_coeffs, rotation })
}

/// A circulant doubly stochastic population map `T = Σ_i η_i Π^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantTransform {
    pub eta: Vec<f64>,
    pub t_matrix: ComplexMatrix,
    /// All `η_i ≥ −1e-10` and `Σ η_i = 1` within 1e-10.
    pub feasible: bool,
    /// The linear system was rank deficient and the minimum-norm solution
    /// was taken.
    pub min_norm: bool,
    /// Ratio of extreme singular values of the system matrix.
    pub condition: f64,
}

/// `Σ_i η_i Π^i`.
pub fn circulant_matrix(eta: &[f64]) -> ComplexMatrix {
    let d = eta.len();
    let mut t = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for (i, &e) in eta.iter().enumerate() {
            t[(a, (a + i) % d)] += C64::new(e, 0.0);
        }
    }
    t
}

/// Weights `η` of a circulant population map taking local Gibbs populations
/// at `beta_in` to those at `beta_out`:
/// `e^{−β_out E_j}/Z′ = Σ_i η_i e^{−β_in E_{i+j}}/Z` for every `j`.
///
/// Targets that need negative weights come back with `feasible = false`.
/// A rank-deficient system is solved in the minimum-norm sense when it is
/// consistent, and rejected with its condition number otherwise.
pub fn solve_eta(
    beta_in: InverseTemperature,
    beta_out: InverseTemperature,
    local_energies: &[f64],
) -> Result<CirculantTransform> {
    let d = local_energies.len();
    check_dim(d)?;
    if !(beta_in.value() > 0.0) {
        return Err(Error::InvalidParameter(format!("β_in must be positive, got {beta_in}")));
    }
    let alpha = gibbs_populations(local_energies, beta_in);
    let target = gibbs_populations(local_energies, beta_out);
    let a: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| alpha[(i + j) % d]).collect()).collect();

    // Singular values from the spectrum of AᵀA.
    let mut ata = ComplexMatrix::zeros(d, d);
    for p in 0..d {
        for q in 0..d {
            ata[(p, q)] = C64::new((0..d).map(|k| a[k][p] * a[k][q]).sum(), 0.0);
        }
    }
    let eig = hermitian_eig(&ata, ALGEBRAIC_TOL)?;
    let lambda_max = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let lambda_min = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let condition = if lambda_min > 0.0 { (lambda_max / lambda_min).sqrt() } else { f64::INFINITY };

    let (eta, min_norm) = match (condition < 1e12).then(|| solve_real(&a, &target)).flatten() {
        Some(eta) => (eta, false),
        None => {
            // Pseudo-inverse restricted to the numerically nonzero spectrum.
            let cutoff = lambda_max * 1e-24;
            let atb: Vec<f64> = (0..d).map(|p| (0..d).map(|k| a[k][p] * target[k]).sum()).collect();
            let mut eta = vec![0.0; d];
            for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
                if lambda <= cutoff {
                    continue;
                }
                let v: Vec<f64> = eig.eigenvectors.column(col).iter().map(|z| z.re).collect();
                let coeff = v.iter().zip(&atb).map(|(x, y)| x * y).sum::<f64>() / lambda;
                for (e, x) in eta.iter_mut().zip(&v) {
                    *e += coeff * x;
                }
            }
            let residual = (0..d)
                .map(|j| ((0..d).map(|i| a[j][i] * eta[i]).sum::<f64>() - target[j]).abs())
                .fold(0.0, f64::max);
            if residual > PHYSICAL_TOL {
                return Err(Error::SingularSystem { condition });
            }
            (eta, true)
        }
    };

    let total: f64 = eta.iter().sum();
    let feasible = (total - 1.0).abs() <= PHYSICAL_TOL && eta.iter().all(|&e| e >= -PHYSICAL_TOL);
    let t_matrix = circulant_matrix(&eta);
    Ok(CirculantTransform { eta, t_matrix, feasible, min_norm, condition })
}

/// Global unitary acting as `blocks[j]` on `S_j`, each block written in the
/// Bell basis `|φ_{0,j}⟩, …, |φ_{d−1,j}⟩`.
pub fn assemble_global_unitary(blocks: &[ComplexMatrix], d: usize) -> Result<ComplexMatrix> {
    check_dim(d)?;
    if blocks.len() != d || blocks.iter().any(|b| b.rows() != d || b.cols() != d) {
        return Err(Error::DimensionMismatch(format!("need {d} blocks of size {d}×{d}")));
    }
    let mut u = ComplexMatrix::zeros(d * d, d * d);
    for (j, block) in blocks.iter().enumerate() {
        let basis = subspace_basis(j, d)?;
        for (m, bra_m) in basis.iter().enumerate() {
            for (m2, ket) in basis.iter().enumerate() {
                let c = block[(m, m2)];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                for (row, &x) in bra_m.iter().enumerate() {
                    if x == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (col, &y) in ket.iter().enumerate() {
                        u[(row, col)] += c * x * y.conj();
                    }
                }
            }
        }
    }
    Ok(u)
}

/// [`assemble_global_unitary`] from circulant rotations, one per subspace.
pub fn assemble_from_rotations(rotations: &[SubspaceRotation], d: usize) -> Result<ComplexMatrix> {
    let blocks: Vec<ComplexMatrix> = rotations.iter().map(SubspaceRotation::bell_block).collect();
    assemble_global_unitary(&blocks, d)
}

/// The same rotation in every subspace.
pub fn uniform_global_unitary(rotation: &SubspaceRotation) -> Result<ComplexMatrix> {
    let d = rotation.dim();
    assemble_from_rotations(&vec![rotation.clone(); d], d)
}

/// `T^{(j)}_{a,b} = |⟨a, a+j|U|b, b+j⟩|²` for every subspace `j`.
pub fn subspace_transfer_matrices(u: &ComplexMatrix, d: usize) -> Result<Vec<ComplexMatrix>> {
    if u.rows() != d * d || !u.is_square() {
        return Err(Error::DimensionMismatch(format!("{}×{} unitary for d = {d}", u.rows(), u.cols())));
    }
    Ok((0..d)
        .map(|j| {
            let mut t = ComplexMatrix::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    t[(a, b)] = C64::new(u[(subspace_index(a, j, d), subspace_index(b, j, d))].norm_sqr(), 0.0);
                }
            }
            t
        })
        .collect())
}

/// Largest deviation of row and column sums from 1, and the most negative
/// entry, of a real-valued matrix.
pub fn stochasticity_residual(t: &ComplexMatrix) -> (f64, f64) {
    let n = t.rows();
    let mut worst: f64 = 0.0;
    let mut min_entry = f64::INFINITY;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| t[(i, j)].re).sum();
        let col: f64 = (0..n).map(|j| t[(j, i)].re).sum();
        worst = worst.max((row - 1.0).abs()).max((col - 1.0).abs());
        for j in 0..n {
            min_entry = min_entry.min(t[(i, j)].re);
        }
    }
    (worst, min_entry)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSolution {
    pub rotation: SubspaceRotation,
    pub target: CirculantTransform,
    /// Largest `| |r_i|² − η_i |`.
    pub eta_residual: f64,
    /// Fitted on the local state produced from the global thermal state.
    pub beta_out_achieved: InverseTemperature,
    pub starts_tried: usize,
}

fn eta_residuals(phases: &[f64], eta: &[f64]) -> Vec<f64> {
    circulant_coefficients(phases).iter().zip(eta).map(|(r, e)| r.norm_sqr() - e).collect()
}

fn objective(phases: &[f64], eta: &[f64]) -> f64 {
    eta_residuals(phases, eta).iter().map(|e| e * e).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Deterministic start points: quadratic chirps `φ_k = πck²/d`, then the
/// lattice `{0, π/2, π, 3π/2}^{d−1}` (with `φ_0 = 0`).
fn start_points(d: usize) -> Vec<Vec<f64>> {
    let mut starts: Vec<Vec<f64>> = (0..2 * d)
        .map(|c| (0..d).map(|k| PI * (c * k * k) as f64 / d as f64).collect())
        .collect();
    let lattice = 4usize.pow(d as u32 - 1);
    for code in 0..lattice {
        let mut phases = vec![0.0; d];
        let mut rest = code;
        for p in phases.iter_mut().skip(1) {
            *p = (rest % 4) as f64 * PI / 2.0;
            rest /= 4;
        }
        starts.push(phases);
    }
    starts
}

/// One pass of coordinate descent over `φ_1 … φ_{d−1}`: a coarse scan of
/// each coordinate followed by golden-section refinement.
fn coordinate_sweep(phases: &mut [f64], eta: &[f64]) {
    const SCAN: usize = 24;
    let golden = (5.0_f64.sqrt() - 1.0) / 2.0;
    for k in 1..phases.len() {
        let eval = |x: f64, phases: &mut [f64]| {
            phases[k] = x;
            objective(phases, eta)
        };
        let current = phases[k];
        let mut best = (current, eval(current, phases));
        for s in 0..SCAN {
            let x = current + 2.0 * PI * s as f64 / SCAN as f64;
            let f = eval(x, phases);
            if f < best.1 {
                best = (x, f);
            }
        }
        let step = 2.0 * PI / SCAN as f64;
        let (mut lo, mut hi) = (best.0 - step, best.0 + step);
        for _ in 0..60 {
            let x1 = hi - golden * (hi - lo);
            let x2 = lo + golden * (hi - lo);
            if eval(x1, phases) < eval(x2, phases) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = eval(mid, phases);
        phases[k] = if f_mid < best.1 { mid } else { best.0 };
    }
}

/// Levenberg–Marquardt on `|r_i(φ)|² − η_i` with the analytic Jacobian.
fn polish(phases: &mut [f64], eta: &[f64]) {
    let d = phases.len();
    let n = d - 1;
    let mut lambda = 1e-3;
    let mut f = objective(phases, eta);
    for _ in 0..200 {
        if f < 1e-30 {
            break;
        }
        let res = eta_residuals(phases, eta);
        let r = circulant_coefficients(phases);
        // J[i][k−1] = ∂|r_i|²/∂φ_k = 2 Re(conj(r_i) · (i/d) e^{iφ_k} ω^{−ki}).
        let jac: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (1..d)
                    .map(|k| {
                        let dr = C64::new(0.0, 1.0 / d as f64)
                            * C64::from_polar(1.0, phases[k])
                            * root_of_unity(-((k * i) as i64), d);
                        2.0 * (r[i].conj() * dr).re
                    })
                    .collect()
            })
            .collect();
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jte = vec![0.0; n];
        for p in 0..n {
            for q in 0..n {
                jtj[p][q] = (0..d).map(|i| jac[i][p] * jac[i][q]).sum();
            }
            jte[p] = -(0..d).map(|i| jac[i][p] * res[i]).sum::<f64>();
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut damped = jtj.clone();
            for (p, row) in damped.iter_mut().enumerate() {
                row[p] += lambda * (1.0 + jtj[p][p]);
            }
            let Some(step) = solve_real(&damped, &jte) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = phases
                .iter()
                .enumerate()
                .map(|(k, &p)| if k == 0 { p } else { p + step[k - 1] })
                .collect();
            let f_trial = objective(&trial, eta);
            if f_trial < f {
                phases.copy_from_slice(&trial);
                f = f_trial;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
}

/// Local inverse temperature produced by applying `rotation` in every Bell
/// subspace to the global thermal state.
pub fn achieved_beta_out(
    rotation: &SubspaceRotation,
    beta_in: InverseTemperature,
    h: &Hamiltonian,
) -> Result<(GibbsFit, DensityMatrix)> {
    let u = uniform_global_unitary(rotation)?;
    let rho = thermal_state(h, beta_in);
    let out = DensityMatrix::new(rho.matrix().conjugate_by(&u)?, rho.dims())?;
    let fit = fit_local_gibbs(&out.reduced(Subsystem::A)?, h.local_energies())?;
    Ok((fit, out))
}

/// Phases of a circulant subspace rotation that, applied in every Bell
/// subspace, takes a global thermal state at `beta_in` to local Gibbs states
/// at `beta_out` (equally spaced levels, gap `omega`).
///
/// Runs coordinate descent on `Σ_i (|r_i|² − η_i)²` from a fixed grid of
/// starts, polishes each with Levenberg–Marquardt, and accepts the first
/// start whose weights match within `tol` and whose measured output
/// temperature is within `tol` of the target.
pub fn find_phases_for_target(
    beta_in: InverseTemperature,
    beta_out: InverseTemperature,
    d: usize,
    omega: f64,
    tol: f64,
) -> Result<PhaseSolution> {
    let h = Hamiltonian::new(omega, d)?;
    let target = solve_eta(beta_in, beta_out, h.local_energies())?;
    if !target.feasible {
        return Err(Error::Infeasible(format!(
            "no circulant doubly stochastic map takes β_in = {beta_in} to β_out = {beta_out} (η = {:?})",
            target.eta
        )));
    }
    let eta: Vec<f64> = target.eta.iter().map(|&e| e.max(0.0)).collect();

    let accept = |phases: &[f64], tried: usize| -> Result<Option<PhaseSolution>> {
        let eta_residual = max_abs(&eta_residuals(phases, &eta));
        if eta_residual > tol {
            return Ok(None);
        }
        let rotation = circulant_unitary(phases)?;
        let fit = match achieved_beta_out(&rotation, beta_in, &h) {
            Ok((fit, _)) => fit,
            Err(Error::NotGibbs { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let gap = (fit.beta.value() - beta_out.value()).abs();
        let same_limit = !beta_out.is_finite() && fit.beta == beta_out;
        if gap <= tol || same_limit {
            Ok(Some(PhaseSolution {
                rotation,
                target: target.clone(),
                eta_residual,
                beta_out_achieved: fit.beta,
                starts_tried: tried,
            }))
        } else {
            Ok(None)
        }
    };

    let mut best_residual = f64::INFINITY;
    for (tried, start) in start_points(d).into_iter().enumerate() {
        let mut phases = start;
        let mut f = objective(&phases, &eta);
        for _ in 0..40 {
            if f < 1e-24 {
                break;
            }
            coordinate_sweep(&mut phases, &eta);
            let f_new = objective(&phases, &eta);
            let stalled = f - f_new < 1e-3 * f;
            f = f_new;
            if stalled {
                break;
            }
        }
        polish(&mut phases, &eta);
        best_residual = best_residual.min(max_abs(&eta_residuals(&phases, &eta)));
        if let Some(solution) = accept(&phases, tried + 1)? {
            return Ok(solution);
        }
    }
    Err(Error::OptimizerFailed { tol, best_residual })
}

/// Checks that an output state has diagonal, Gibbs, identical marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalGibbsReport {
    pub coherence_a: f64,
    pub coherence_b: f64,
    pub beta_a: Option<InverseTemperature>,
    pub beta_b: Option<InverseTemperature>,
    pub fit_residual_a: f64,
    pub fit_residual_b: f64,
    /// `|β_A − β_B| ≤ 1e-9`.
    pub symmetric: bool,
    /// Worst row/column-sum deviation over all `T^{(j)}`, when a unitary was
    /// supplied.
    pub stochastic_residual: Option<f64>,
    pub coherence_ok: bool,
    pub gibbs_ok: bool,
    pub doubly_stochastic_ok: Option<bool>,
}

impl LocalGibbsReport {
    pub fn passed(&self) -> bool {
        self.coherence_ok && self.gibbs_ok && self.symmetric && self.doubly_stochastic_ok.unwrap_or(true)
    }
}

fn fit_or_residual(local: &DensityMatrix, energies: &[f64]) -> (Option<InverseTemperature>, f64) {
    match fit_local_gibbs(local, energies) {
        Ok(fit) => (Some(fit.beta), fit.residual),
        Err(Error::NotGibbs { residual }) => (None, residual),
        Err(_) => (None, f64::INFINITY),
    }
}

/// Validates the local states of a bipartite `d × d` output state against
/// equally spaced local levels of gap `omega`. Supplying the unitary adds the
/// doubly stochastic check on every Bell-subspace population map.
pub fn validate_local_gibbs(
    rho_out: &DensityMatrix,
    omega: f64,
    d: usize,
    unitary: Option<&ComplexMatrix>,
) -> Result<LocalGibbsReport> {
    if rho_out.dims() != (d, d) {
        return Err(Error::DimensionMismatch(format!("state dims {:?}, expected ({d}, {d})", rho_out.dims())));
    }
    let h = Hamiltonian::new(omega, d)?;
    let local_a = rho_out.reduced(Subsystem::A)?;
    let local_b = rho_out.reduced(Subsystem::B)?;
    let coherence_a = local_a.matrix().max_off_diagonal();
    let coherence_b = local_b.matrix().max_off_diagonal();
    let (beta_a, fit_residual_a) = fit_or_residual(&local_a, h.local_energies());
    let (beta_b, fit_residual_b) = fit_or_residual(&local_b, h.local_energies());
    let symmetric = match (beta_a, beta_b) {
        (Some(InverseTemperature::Finite(a)), Some(InverseTemperature::Finite(b))) => (a - b).abs() <= 1e-9,
        (Some(a), Some(b)) => a == b,
        _ => false,
    };
    let stochastic_residual = unitary
        .map(|u| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for t in subspace_transfer_matrices(u, d)? {
                let (sums, min_entry) = stochasticity_residual(&t);
                worst = worst.max(sums).max((-min_entry).max(0.0));
            }
            Ok(worst)
        })
        .transpose()?;
    Ok(LocalGibbsReport {
        coherence_a,
        coherence_b,
        beta_a,
        beta_b,
        fit_residual_a,
        fit_residual_b,
        symmetric,
        stochastic_residual,
        coherence_ok: coherence_a < PHYSICAL_TOL && coherence_b < PHYSICAL_TOL,
        gibbs_ok: beta_a.is_some() && beta_b.is_some() && fit_residual_a.max(fit_residual_b) <= GIBBS_FIT_TOL,
        doubly_stochastic_ok: stochastic_residual.map(|r| r <= PHYSICAL_TOL),
    })
}

//! Exact finite-dimensional quantum engine used as ground truth.
//!
//! Basis convention: `|+⟩ ↔ 0`, `|−⟩ ↔ 1`, with the first qubit as the most
//! significant bit. Multi-copy singlet states order their qubits as
//! `(A₁..A_N, B₁..B_N)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::geometry::{cap_overlap_quadrature, sample_uniform_direction, Direction, RngStream};

pub type C64 = Complex<f64>;

/// Largest qubit register the brute-force engine builds (2^10 amplitudes).
pub const MAX_QUBITS: usize = 10;
/// Largest singlet tensor power (two qubits per copy).
pub const MAX_SINGLET_COPIES: u32 = 5;
/// Brute-force regime for the tomography oracle.
pub const MAX_ORACLE_COPIES: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("{what} with {requested} copies exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, requested: u32, cap: u32 },
    #[error("copy count must be at least 1")]
    InvalidCopies,
    #[error("readout times out of order: t_a = {t_a} > t_b = {t_b}")]
    TimeOrder { t_a: f64, t_b: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

/// Dense pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub DVector<C64>);

impl StateVector {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector(self.0.kronecker(&other.0))
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        self.0.dotc(&(&op.0 * &self.0))
    }
}

/// Dense square operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix(pub DMatrix<C64>);

impl OperatorMatrix {
    pub fn identity(dim: usize) -> Self {
        OperatorMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn kron(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(self.0.kronecker(&other.0))
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> OperatorMatrix {
        OperatorMatrix(&self.0 * C64::new(s, 0.0))
    }

    /// `K†K`.
    pub fn effect(&self) -> OperatorMatrix {
        OperatorMatrix(self.0.adjoint() * &self.0)
    }

    pub fn apply(&self, state: &StateVector) -> StateVector {
        StateVector(&self.0 * &state.0)
    }

    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Add for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 + &rhs.0)
    }
}

impl std::ops::Mul for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix(&self.0 * &rhs.0)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn mat2(entries: [C64; 4]) -> OperatorMatrix {
    OperatorMatrix(DMatrix::from_row_slice(2, 2, &entries))
}

/// `σx = |−⟩⟨+| + |+⟩⟨−|`.
pub fn sigma_x() -> OperatorMatrix {
    mat2([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

/// `σy = i|−⟩⟨+| − i|+⟩⟨−|`.
pub fn sigma_y() -> OperatorMatrix {
    mat2([c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

/// `σz = |+⟩⟨+| − |−⟩⟨−|`.
pub fn sigma_z() -> OperatorMatrix {
    mat2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `n·σ`.
pub fn spin_component(dir: &Direction) -> OperatorMatrix {
    let [x, y, z] = dir.as_array();
    mat2([c(z, 0.0), c(x, -y), c(x, y), c(-z, 0.0)])
}

/// Trusted dichotomic POVM element `K(±1) = (1 ± n·σ)/2`.
pub fn dichotomic_projector(dir: &Direction, outcome: i8) -> OperatorMatrix {
    let s = f64::from(outcome.signum());
    let one = OperatorMatrix::identity(2);
    (&one + &spin_component(dir).scale(s)).scale(0.5)
}

/// The fixed CHSH and steering measurement directions.
#[derive(Clone, Debug)]
pub struct QubitAngles {
    pub alice: Vec<Direction>,
    pub bob: Vec<Direction>,
}

impl QubitAngles {
    /// `a₁ = x`, `a₂ = y`, `√2·b₁ = (−1, −1, 0)`, `√2·b₂ = (−1, 1, 0)`.
    pub fn chsh() -> Self {
        let s = FRAC_1_SQRT_2;
        QubitAngles {
            alice: vec![Direction::X, Direction::Y],
            bob: vec![Direction::new(-s, -s, 0.0).expect("unit"), Direction::new(-s, s, 0.0).expect("unit")],
        }
    }

    /// Bob uses the orthogonal triple; Alice measures the antiparallel axes so
    /// matched settings are perfectly correlated on the singlet.
    pub fn steering_triple() -> Self {
        let bob = vec![Direction::X, Direction::Y, Direction::Z];
        let alice = bob.iter().map(|d| -*d).collect();
        QubitAngles { alice, bob }
    }

    /// First `m` directions of the steering triple.
    pub fn steering(m: usize) -> Self {
        let full = Self::steering_triple();
        QubitAngles { alice: full.alice.into_iter().take(m).collect(), bob: full.bob.into_iter().take(m).collect() }
    }
}

pub fn basis_plus() -> StateVector {
    StateVector(DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]))
}

pub fn basis_minus() -> StateVector {
    StateVector(DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]))
}

/// `p_t = cos²(ωt/2)`.
pub fn qubit_probability_plus(omega_t: f64) -> f64 {
    (0.5 * omega_t).cos().powi(2)
}

/// Free evolution `exp(−iωtσx/2)`; maps `|+⟩` to `cos(ωt/2)|+⟩ − i sin(ωt/2)|−⟩`.
pub fn qubit_evolution(omega_t: f64) -> OperatorMatrix {
    let (s, co) = (0.5 * omega_t).sin_cos();
    mat2([c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)])
}

/// `N`-fold tensor power of `(|+−⟩ − |−+⟩)/√2`, qubits ordered `(A₁..A_N, B₁..B_N)`.
pub fn singlet_power(n_copies: u32) -> Result<StateVector, QuantumError> {
    if n_copies == 0 {
        return Err(QuantumError::InvalidCopies);
    }
    if n_copies > MAX_SINGLET_COPIES {
        return Err(QuantumError::CapExceeded { what: "singlet power", requested: n_copies, cap: MAX_SINGLET_COPIES });
    }
    let n = n_copies as usize;
    let qubits = 2 * n;
    let dim = 1usize << qubits;
    let mut amps = vec![c(0.0, 0.0); dim];
    for (index, amp) in amps.iter_mut().enumerate() {
        let bit = |q: usize| (index >> (qubits - 1 - q)) & 1;
        let mut value = 1.0;
        for k in 0..n {
            value *= match (bit(k), bit(n + k)) {
                (0, 1) => FRAC_1_SQRT_2,
                (1, 0) => -FRAC_1_SQRT_2,
                _ => 0.0,
            };
            if value == 0.0 {
                break;
            }
        }
        *amp = c(value, 0.0);
    }
    Ok(StateVector(DVector::from_vec(amps)))
}

/// Single-qubit state with Bloch vector `dir`.
pub fn qubit_state(dir: &Direction) -> StateVector {
    let (theta, phi) = dir.angles();
    let (s, co) = (0.5 * theta).sin_cos();
    StateVector(DVector::from_vec(vec![c(co, 0.0), C64::from_polar(s, phi)]))
}

/// Spin coherent state `|dir⟩^{⊗N}`, the maximal eigenvector of `dir·J`.
pub fn coherent_state(n_copies: u32, dir: &Direction) -> Result<StateVector, QuantumError> {
    if n_copies == 0 {
        return Err(QuantumError::InvalidCopies);
    }
    if n_copies as usize > MAX_QUBITS {
        return Err(QuantumError::CapExceeded { what: "coherent state", requested: n_copies, cap: MAX_QUBITS as u32 });
    }
    let single = qubit_state(dir);
    let mut state = single.clone();
    for _ in 1..n_copies {
        state = state.tensor(&single);
    }
    Ok(state)
}

/// Applies a 2×2 operator to qubit `target` of an `n_qubits` register.
pub fn apply_single_qubit(
    state: &StateVector,
    op: &OperatorMatrix,
    target: usize,
    n_qubits: usize,
) -> Result<StateVector, QuantumError> {
    let dim = 1usize << n_qubits;
    if state.dimension() != dim {
        return Err(QuantumError::Dimension(state.dimension(), dim));
    }
    let shift = n_qubits - 1 - target;
    let mask = 1usize << shift;
    let m = &op.0;
    let src = state.amplitudes();
    let mut out = vec![c(0.0, 0.0); dim];
    for i in 0..dim {
        if i & mask != 0 {
            continue;
        }
        let j = i | mask;
        let (a0, a1) = (src[i], src[j]);
        out[i] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
        out[j] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
    }
    Ok(StateVector(DVector::from_vec(out)))
}

/// `J_dir ψ = Σ_k (dir·σ)_k/2 ψ` restricted to the listed qubits.
pub fn apply_total_spin(
    state: &StateVector,
    dir: &Direction,
    qubits: &[usize],
    n_qubits: usize,
) -> Result<StateVector, QuantumError> {
    let half = spin_component(dir).scale(0.5);
    let mut acc = DVector::zeros(state.dimension());
    for &q in qubits {
        acc += apply_single_qubit(state, &half, q, n_qubits)?.0;
    }
    Ok(StateVector(acc))
}

/// `⟨(J⃗)²⟩` over the listed qubits.
pub fn total_spin_squared(state: &StateVector, qubits: &[usize], n_qubits: usize) -> Result<f64, QuantumError> {
    let mut total = 0.0;
    for axis in [Direction::X, Direction::Y, Direction::Z] {
        let j = apply_total_spin(state, &axis, qubits, n_qubits)?;
        total += j.0.norm_squared();
    }
    Ok(total)
}

/// Preselection probability `(N+1)/2^N` of the symmetric tomography outcome.
pub fn preselection_weight(n_copies: u32) -> f64 {
    (f64::from(n_copies) + 1.0) / 2f64.powi(n_copies as i32)
}

/// Brute-force tomography density per unit solid angle on each sphere,
/// `|⟨A|^{⊗N}⟨B|^{⊗N}|Ψ⟩|²` with Kraus weights `K†K = (N+1)/(4π) P_A` on each
/// side. Its total integral is the preselection weight `(N+1)/2^N`.
pub fn oracle_pair_density(n_copies: u32, dir_a: &Direction, dir_b: &Direction) -> Result<f64, QuantumError> {
    if n_copies > MAX_ORACLE_COPIES {
        return Err(QuantumError::CapExceeded {
            what: "tomography oracle",
            requested: n_copies,
            cap: MAX_ORACLE_COPIES,
        });
    }
    let psi = singlet_power(n_copies)?;
    let bra = coherent_state(n_copies, dir_a)?.tensor(&coherent_state(n_copies, dir_b)?);
    let overlap = bra.inner(&psi).norm_sqr();
    let weight = (f64::from(n_copies) + 1.0) / (4.0 * PI);
    Ok(weight * weight * overlap)
}

/// Ideal singlet correlation `⟨ab⟩ = −a·b`.
pub fn quantum_correlation(dir_a: &Direction, dir_b: &Direction) -> f64 {
    -dir_a.dot(dir_b)
}

/// Joint outcome probabilities `p[a][b]` (index 0 ↔ +1, 1 ↔ −1) for dichotomic
/// measurements on a two-qubit state.
pub fn two_qubit_joint(state: &StateVector, dir_a: &Direction, dir_b: &Direction) -> [[f64; 2]; 2] {
    let mut p = [[0.0; 2]; 2];
    for (ia, a) in [1i8, -1].into_iter().enumerate() {
        for (ib, b) in [1i8, -1].into_iter().enumerate() {
            let op = dichotomic_projector(dir_a, a).kron(&dichotomic_projector(dir_b, b));
            p[ia][ib] = state.expectation(&op).re;
        }
    }
    p
}

/// `⟨ψ| (a·σ) ⊗ (b·σ) |ψ⟩` on a two-qubit state.
pub fn two_qubit_correlation(state: &StateVector, dir_a: &Direction, dir_b: &Direction) -> f64 {
    let op = spin_component(dir_a).kron(&spin_component(dir_b));
    state.expectation(&op).re
}

/// `S = E₁₁ + E₁₂ + E₂₁ − E₂₂`.
pub fn chsh<F: Fn(&Direction, &Direction) -> f64>(angles: &QubitAngles, corr: F) -> f64 {
    let e = |i: usize, j: usize| corr(&angles.alice[i], &angles.bob[j]);
    e(0, 0) + e(0, 1) + e(1, 0) - e(1, 1)
}

/// Brute-force CHSH value of the `N = 1` singlet.
pub fn quantum_chsh(angles: &QubitAngles) -> f64 {
    let psi = singlet_power(1).expect("single copy is within cap");
    chsh(angles, |a, b| two_qubit_correlation(&psi, a, b))
}

/// Steering parameter `T = Σ_j Σ_{a_j} p(a_j) ⟨b_j⟩²_{a_j}` for a two-qubit
/// state, where `p(a_j)` carries the uniform choice weight `1/M`.
pub fn steering_t(state: &StateVector, angles: &QubitAngles) -> f64 {
    let m = angles.bob.len() as f64;
    angles
        .alice
        .iter()
        .zip(&angles.bob)
        .map(|(a, b)| {
            let p = two_qubit_joint(state, a, b);
            p.iter()
                .map(|row| {
                    let pa = row[0] + row[1];
                    if pa <= 0.0 {
                        return 0.0;
                    }
                    let mean_b = (row[0] - row[1]) / pa;
                    pa / m * mean_b * mean_b
                })
                .sum::<f64>()
        })
        .sum()
}

/// Ideal singlet with matched antiparallel steering settings: `T = 1`.
pub fn quantum_steering_t() -> f64 {
    let psi = singlet_power(1).expect("single copy is within cap");
    steering_t(&psi, &QubitAngles::steering_triple())
}

/// Joint readout distribution over `(β, γ) ∈ {0,1}²`, indexed `[β][γ]`;
/// readout 1 means the qubit was found in its initial state `|+⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitJoint(pub [[f64; 2]; 2]);

impl QubitJoint {
    pub fn p(&self, beta: usize, gamma: usize) -> f64 {
        self.0[beta][gamma]
    }

    pub fn marginal_beta(&self, beta: usize) -> f64 {
        self.0[beta][0] + self.0[beta][1]
    }

    pub fn marginal_gamma(&self, gamma: usize) -> f64 {
        self.0[0][gamma] + self.0[1][gamma]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().sum()
    }
}

fn readout_projector(value: usize) -> OperatorMatrix {
    match value {
        1 => basis_plus().outer(),
        _ => basis_minus().outer(),
    }
}

impl StateVector {
    /// `|ψ⟩⟨ψ|`.
    pub fn outer(&self) -> OperatorMatrix {
        OperatorMatrix(&self.0 * self.0.adjoint())
    }
}

/// Single qubit read at `t_a` and again at `t_b` with collapse in between:
/// `p = ‖P_γ U(t_b − t_a) P_β U(t_a)|+⟩‖²`.
pub fn sequential_qubit_probability(t_a: f64, t_b: f64, omega: f64) -> Result<QubitJoint, QuantumError> {
    if t_a > t_b {
        return Err(QuantumError::TimeOrder { t_a, t_b });
    }
    let first = qubit_evolution(omega * t_a).apply(&basis_plus());
    let second = qubit_evolution(omega * (t_b - t_a));
    let mut p = [[0.0; 2]; 2];
    for (beta, row) in p.iter_mut().enumerate() {
        let collapsed = readout_projector(beta).apply(&first);
        let evolved = second.apply(&collapsed);
        for (gamma, cell) in row.iter_mut().enumerate() {
            *cell = readout_projector(gamma).apply(&evolved).0.norm_squared();
        }
    }
    Ok(QubitJoint(p))
}

/// One row of the oracle-check report.
#[derive(Clone, Debug)]
pub struct OracleCheck {
    pub name: &'static str,
    pub max_abs_dev: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_abs_dev <= self.tolerance
    }
}

/// Runs every brute-force-versus-closed-form comparison.
pub fn oracle_suite(seed: u64) -> Vec<OracleCheck> {
    let mut rng = RngStream::new(seed, 0);
    let mut checks = Vec::new();

    let angles = QubitAngles::chsh();
    checks.push(OracleCheck {
        name: "chsh brute force vs 2*sqrt(2)",
        max_abs_dev: (quantum_chsh(&angles) - 2.0 * 2f64.sqrt()).abs(),
        tolerance: 1e-12,
    });

    let psi = singlet_power(1).expect("cap");
    let mut corr_dev: f64 = 0.0;
    for _ in 0..100 {
        let a = sample_uniform_direction(&mut rng);
        let b = sample_uniform_direction(&mut rng);
        corr_dev = corr_dev.max((two_qubit_correlation(&psi, &a, &b) - quantum_correlation(&a, &b)).abs());
    }
    checks.push(OracleCheck { name: "singlet correlation vs -a.b", max_abs_dev: corr_dev, tolerance: 1e-12 });

    let mut ratio_dev: f64 = 0.0;
    let mut shape_dev: f64 = 0.0;
    for n in 1..=MAX_ORACLE_COPIES {
        let mut prev: Option<(f64, f64)> = None;
        for _ in 0..100 {
            let a = sample_uniform_direction(&mut rng);
            let b = sample_uniform_direction(&mut rng);
            let cos = a.dot(&b).clamp(-1.0, 1.0);
            let value = oracle_pair_density(n, &a, &b).expect("cap");
            let closed = crate::geometry::pair_density(n, cos).expect("domain");
            shape_dev = shape_dev.max((value / preselection_weight(n) - closed).abs());
            if let Some((v0, c0)) = prev {
                if v0 > 1e-300 && value > 1e-300 {
                    let ratio = value / v0;
                    let expect = ((1.0 - cos) / (1.0 - c0)).powi(n as i32);
                    ratio_dev = ratio_dev.max((ratio - expect).abs() / expect.max(1.0));
                }
            }
            prev = Some((value, cos));
        }
    }
    checks.push(OracleCheck { name: "oracle density ratios vs ((1-c)/2)^N", max_abs_dev: ratio_dev, tolerance: 1e-9 });
    checks.push(OracleCheck {
        name: "oracle density / preselection vs pair_density",
        max_abs_dev: shape_dev,
        tolerance: 1e-12,
    });

    let mut norm_dev: f64 = 0.0;
    for n in 1..=10u32 {
        let inner = cap_overlap_quadrature(|cv| crate::geometry::pair_density(n, cv).expect("domain"), 64);
        norm_dev = norm_dev.max((8.0 * PI * PI * inner - 1.0).abs());
    }
    checks.push(OracleCheck { name: "pair_density normalization (N=1..10)", max_abs_dev: norm_dev, tolerance: 1e-10 });

    let mut spin_dev: f64 = 0.0;
    for n in 1..=4u32 {
        let psi = singlet_power(n).expect("cap");
        let qubits: Vec<usize> = (0..2 * n as usize).collect();
        spin_dev = spin_dev.max(total_spin_squared(&psi, &qubits, 2 * n as usize).expect("dim").abs());
    }
    checks.push(OracleCheck { name: "singlet power total spin squared", max_abs_dev: spin_dev, tolerance: 1e-12 });

    checks.push(OracleCheck {
        name: "ideal steering T vs 1",
        max_abs_dev: (quantum_steering_t() - 1.0).abs(),
        tolerance: 1e-12,
    });

    let seq = sequential_qubit_probability(PI / 2.0, PI, 1.0).expect("ordered");
    let seq_dev = seq.0.iter().flatten().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
    checks.push(OracleCheck { name: "sequential qubit readout vs 1/4", max_abs_dev: seq_dev, tolerance: 1e-15 });

    checks.push(OracleCheck {
        name: "trusted steering marginal reduction",
        max_abs_dev: crate::models::TrustedSteeringPovm::new(QubitAngles::steering_triple()).max_reduction_deviation(),
        tolerance: 1e-10,
    });

    checks
}

//! End-to-end demonstrations on small composite and single systems.
//!
//! The CHSH correlators are computed twice: from Born probabilities on the
//! two-qubit state, and from induced classical effects evaluated on a
//! preimage of that state in the classical extension. The second path only
//! ever touches numbers in `[0, 1]` attached to points of a classical phase
//! space, yet it reproduces the quantum violation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{
    classical_expectation, dispersion, eigen_decomposition_state, induced_effect, joint_observable,
    marginal_deviation, random_decomposition, ClassicalState, FuzzyObservable,
};
use crate::linalg::{self, CMatrix};
use crate::quantum::{born_probability, DensityOperator, Effect, PureState};
use crate::sampling::{haar_state, random_density, random_effect};

/// Default measurement angles in degrees, `(A0, A1, B0, B1)`.
pub const OPTIMAL_ANGLES_DEG: [f64; 4] = [0.0, 90.0, 45.0, 315.0];
/// Local-realist bound on `|S|`.
pub const CLASSICAL_BOUND: f64 = 2.0;
/// `|S|` must clear the bound by more than this to count as a violation.
pub const VIOLATION_SLACK: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `(|01> - |10>)/sqrt(2)` as a density operator on `C^2 (x) C^2`.
pub fn singlet() -> DensityOperator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = PureState::new(crate::linalg::CVector::from_vec(vec![
        c(0.0, 0.0),
        c(s, 0.0),
        c(-s, 0.0),
        c(0.0, 0.0),
    ]))
    .expect("unit vector");
    DensityOperator::pure(&psi)
}

pub fn product_state(a: &PureState, b: &PureState) -> DensityOperator {
    let v = a.amplitudes().kronecker(b.amplitudes());
    DensityOperator::pure(&PureState::normalize(v).expect("product of unit vectors"))
}

/// Which factor of `C^{n1} (x) C^{n2}` to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

pub fn partial_trace(m: &CMatrix, n1: usize, n2: usize, keep: Subsystem) -> Result<CMatrix> {
    let n = linalg::ensure_square(m)?;
    linalg::ensure_dim(n1 * n2, n)?;
    Ok(match keep {
        Subsystem::First => CMatrix::from_fn(n1, n1, |i, k| (0..n2).map(|j| m[(i * n2 + j, k * n2 + j)]).sum()),
        Subsystem::Second => CMatrix::from_fn(n2, n2, |j, l| (0..n1).map(|i| m[(i * n2 + j, i * n2 + l)]).sum()),
    })
}

pub fn tensor_effect(e: &Effect, f: &Effect) -> Effect {
    Effect::from_trusted(linalg::kron(e.matrix(), f.matrix()))
}

/// `+1` effect of the spin observable along angle `theta` in the x-z plane,
/// `(I + cos(theta) sz + sin(theta) sx) / 2`.
pub fn dichotomic_effect(theta: f64) -> Effect {
    let m = (linalg::identity(2) + pauli_z() * c(theta.cos(), 0.0) + pauli_x() * c(theta.sin(), 0.0)) * c(0.5, 0.0);
    Effect::from_trusted(m)
}

#[derive(Debug, Clone, Deserialize)]
struct ScenarioWire {
    dims: [usize; 2],
    state: DensityOperator,
    a: [Effect; 2],
    b: [Effect; 2],
}

/// Two parties with two dichotomic settings each, given by their `+1` effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioWire")]
pub struct ChshScenario {
    dims: [usize; 2],
    state: DensityOperator,
    a: [Effect; 2],
    b: [Effect; 2],
}

impl TryFrom<ScenarioWire> for ChshScenario {
    type Error = Error;

    fn try_from(w: ScenarioWire) -> Result<Self> {
        ChshScenario::new(w.dims, w.state, w.a, w.b)
    }
}

impl ChshScenario {
    pub fn new(dims: [usize; 2], state: DensityOperator, a: [Effect; 2], b: [Effect; 2]) -> Result<Self> {
        linalg::ensure_dim(dims[0] * dims[1], state.dim())?;
        for e in &a {
            linalg::ensure_dim(dims[0], e.dim())?;
        }
        for f in &b {
            linalg::ensure_dim(dims[1], f.dim())?;
        }
        Ok(ChshScenario { dims, state, a, b })
    }

    /// Qubit pair measured along x-z plane angles `(A0, A1, B0, B1)` in degrees.
    pub fn from_angles(state: DensityOperator, angles_deg: [f64; 4]) -> Result<Self> {
        let e = |k: usize| dichotomic_effect(angles_deg[k] * PI / 180.0);
        ChshScenario::new([2, 2], state, [e(0), e(1)], [e(2), e(3)])
    }

    pub fn optimal_singlet() -> Self {
        ChshScenario::from_angles(singlet(), OPTIMAL_ANGLES_DEG).expect("qubit pair")
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    /// Joint effects for setting `(x, y)`, ordered `++, +-, -+, --`.
    fn joint_effects(&self, x: usize, y: usize) -> [Effect; 4] {
        let (ap, bp) = (&self.a[x], &self.b[y]);
        let (am, bm) = (ap.complement(), bp.complement());
        [
            tensor_effect(ap, bp),
            tensor_effect(ap, &bm),
            tensor_effect(&am, bp),
            tensor_effect(&am, &bm),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChshPath {
    Quantum,
    ClassicalExtension,
}

const SIGNS: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
const SETTINGS: [(usize, usize, f64); 4] = [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)];

/// Correlators `E(A_x B_y)` plus the range of raw probabilities used.
fn correlators(s: &ChshScenario, path: ChshPath, preimage: &ClassicalState) -> Result<([f64; 4], f64, f64)> {
    let mut out = [0.0; 4];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, &(x, y, _)) in SETTINGS.iter().enumerate() {
        for (e, sign) in s.joint_effects(x, y).iter().zip(SIGNS) {
            let prob = match path {
                ChshPath::Quantum => born_probability(&s.state, e)?,
                ChshPath::ClassicalExtension => {
                    let induced = induced_effect(e);
                    for v in induced.values_on(preimage)? {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    classical_expectation(preimage, &induced)?
                }
            };
            out[k] += sign * prob;
        }
    }
    Ok((out, lo, hi))
}

fn combine(e: &[f64; 4]) -> f64 {
    SETTINGS.iter().zip(e).map(|(&(_, _, sign), v)| sign * v).sum()
}

pub fn chsh_value(s: &ChshScenario, path: ChshPath) -> Result<f64> {
    let preimage = eigen_decomposition_state(&s.state);
    Ok(combine(&correlators(s, path, &preimage)?.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatorRow {
    pub setting: String,
    pub quantum: f64,
    pub classical_extension: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshReport {
    pub s_quantum: f64,
    pub s_classical_extension: f64,
    pub path_gap: f64,
    /// `|S_quantum| - 2`
    pub margin: f64,
    pub correlators: Vec<CorrelatorRow>,
    /// Atoms in the preimage used by the classical path.
    pub preimage_atoms: usize,
    pub induced_min: f64,
    pub induced_max: f64,
}

impl ChshReport {
    pub fn violates(&self) -> bool {
        self.margin > VIOLATION_SLACK
    }
}

pub fn chsh_report(s: &ChshScenario) -> Result<ChshReport> {
    let preimage = eigen_decomposition_state(&s.state);
    let (q, _, _) = correlators(s, ChshPath::Quantum, &preimage)?;
    let (k, lo, hi) = correlators(s, ChshPath::ClassicalExtension, &preimage)?;
    let (sq, sk) = (combine(&q), combine(&k));
    let correlators = SETTINGS
        .iter()
        .enumerate()
        .map(|(i, &(x, y, _))| CorrelatorRow {
            setting: format!("A{x}B{y}"),
            quantum: q[i],
            classical_extension: k[i],
        })
        .collect();
    Ok(ChshReport {
        s_quantum: sq,
        s_classical_extension: sk,
        path_gap: (sq - sk).abs(),
        margin: sq.abs() - CLASSICAL_BOUND,
        correlators,
        preimage_atoms: preimage.len(),
        induced_min: lo,
        induced_max: hi,
    })
}

/// Random two-qubit state with random (unsharp) local effects.
pub fn random_chsh_scenario<R: Rng + ?Sized>(rng: &mut R) -> ChshScenario {
    let state = random_density(4, rng);
    let a = [random_effect(2, rng), random_effect(2, rng)];
    let b = [random_effect(2, rng), random_effect(2, rng)];
    ChshScenario::new([2, 2], state, a, b).expect("qubit pair")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionShowcase {
    pub quantum_variance_a: f64,
    pub quantum_variance_b: f64,
    /// Variances of the classical representatives on each decomposition.
    pub classical_variances: Vec<(f64, f64)>,
    /// Largest classical-vs-quantum variance gap.
    pub invariance_gap: f64,
    /// `|<[A, B]>|^2 / 4`
    pub robertson_bound: f64,
    pub bound_holds: bool,
}

fn quantum_variance(rho: &DensityOperator, a: &CMatrix) -> f64 {
    let mean = linalg::trace_product(rho.matrix(), a);
    (linalg::trace_product(rho.matrix(), &(a * a)) - mean * mean).max(0.0)
}

/// Classical representatives of `a` and `b` inherit the quantum variances in
/// every preimage of `rho`, so they obey the same uncertainty relation.
pub fn dispersion_showcase<R: Rng + ?Sized>(
    rho: &DensityOperator,
    a: &CMatrix,
    b: &CMatrix,
    random_preimages: usize,
    rng: &mut R,
) -> Result<DispersionShowcase> {
    linalg::ensure_dim(rho.dim(), a.nrows())?;
    linalg::ensure_dim(rho.dim(), b.nrows())?;
    let ra = FuzzyObservable::c_representative(a)?;
    let rb = FuzzyObservable::c_representative(b)?;
    let (va, vb) = (quantum_variance(rho, a), quantum_variance(rho, b));

    let rank = crate::extension::rank(rho);
    let mut preimages = vec![eigen_decomposition_state(rho)];
    for k in 0..random_preimages {
        preimages.push(random_decomposition(rho, rank + 1 + k % 8, rng)?);
    }
    let mut classical_variances = Vec::with_capacity(preimages.len());
    let mut gap = 0.0f64;
    for p in &preimages {
        let (ca, cb) = (dispersion(p, &ra)?, dispersion(p, &rb)?);
        gap = gap.max((ca - va).abs()).max((cb - vb).abs());
        classical_variances.push((ca, cb));
    }
    let commutator = a * b - b * a;
    let bound = (rho.matrix() * commutator).trace().norm_sqr() / 4.0;
    let bound_holds = classical_variances.iter().all(|(x, y)| x * y >= bound - 1e-12);
    Ok(DispersionShowcase {
        quantum_variance_a: va,
        quantum_variance_b: vb,
        classical_variances,
        invariance_gap: gap,
        robertson_bound: bound,
        bound_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointShowcase {
    pub outcomes: usize,
    pub marginal_deviation: f64,
    pub effect_min: f64,
    pub effect_max: f64,
}

/// Product joint of the classical representatives of `sz` and `sx`, checked
/// at `points` Haar-random qubit states.
pub fn joint_showcase<R: Rng + ?Sized>(points: usize, rng: &mut R) -> Result<JointShowcase> {
    let z = FuzzyObservable::c_representative(&pauli_z())?;
    let x = FuzzyObservable::c_representative(&pauli_x())?;
    let joint = joint_observable(&z, &x)?;
    let states: Vec<PureState> = (0..points).map(|_| haar_state(2, rng)).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in &states {
        for e in joint.effects() {
            let v = e.evaluate(w)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(JointShowcase {
        outcomes: joint.outcomes(),
        marginal_deviation: marginal_deviation(&joint, &z, &x, &states)?,
        effect_min: lo,
        effect_max: hi,
    })
}

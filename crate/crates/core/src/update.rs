//! State updates on measurement.
//!
//! Collapse `rho -> A_d rho A_d* / tr(rho E_d)` factors as selection of the
//! term `rho~_d = rho^{1/2} E_d rho^{1/2}` from the convex resolution
//! `sum_d rho~_d = rho`, then a readjustment `rho~_d -> V_d rho~_d V_d*` where
//! `V_d` is the polar factor of `A_d rho^{1/2}`.
//!
//! Classically the selection is Bayes' rule. In the canonical extension any
//! preimage `p(w)` is reweighted by `<w|E_d|w>` and then pushed through the
//! prior-independent disturbance `w -> A_d|w>` (normalized). In the uniform
//! representation `rho(w)` is reweighted and then smeared through
//! `w -> rho^{1/2}|w>`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{
    classical_expectation, induced_effect, reduce, Atom, ClassicalEffect, ClassicalState,
};
use crate::linalg::{self, CMatrix};
use crate::quantum::{apply_operation, born_probability, DensityOperator, Effect, KrausOperation, PureState};
use crate::representation::MinimalIcPovm;
use crate::tol;
use crate::wire::serialize_matrix;

/// Contract for the convex resolution `sum_d rho~_d = rho`.
pub const RESOLUTION_TOL: f64 = 1e-12;
/// Contract for the transport-type identities.
pub const TRANSPORT_TOL: f64 = 1e-10;

/// The selected term `rho~_d = rho^{1/2} E_d rho^{1/2}` with weight `tr(rho E_d)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesComponent {
    pub outcome: usize,
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: CMatrix,
    pub weight: f64,
}

pub fn bayes_component(rho: &DensityOperator, effect: &Effect, outcome: usize) -> Result<BayesComponent> {
    linalg::ensure_dim(rho.dim(), effect.dim())?;
    Ok(bayes_with_root(&rho.sqrt(), effect, outcome))
}

fn bayes_with_root(sqrt_rho: &CMatrix, effect: &Effect, outcome: usize) -> BayesComponent {
    let matrix = linalg::hermitize(&(sqrt_rho * effect.matrix() * sqrt_rho));
    let weight = linalg::trace(&matrix).re;
    BayesComponent {
        outcome,
        matrix,
        weight,
    }
}

/// Polar factor transporting `rho~_d` onto `A_d rho A_d*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Readjustment {
    /// Partial isometry from the polar decomposition of `A_d rho^{1/2}`.
    #[serde(serialize_with = "serialize_matrix")]
    pub isometry: CMatrix,
    /// Deterministic unitary completion of `isometry`.
    #[serde(serialize_with = "serialize_matrix")]
    pub unitary: CMatrix,
    /// `||V rho~_d V* - A_d rho A_d*||_F`
    pub residual: f64,
    /// Set when `residual` exceeds [`TRANSPORT_TOL`].
    pub flagged: bool,
}

pub fn readjustment(rho: &DensityOperator, a: &CMatrix) -> Result<Readjustment> {
    linalg::ensure_square(a)?;
    linalg::ensure_dim(rho.dim(), a.nrows())?;
    Ok(readjust_with_root(rho, &rho.sqrt(), a))
}

fn readjust_with_root(rho: &DensityOperator, sqrt_rho: &CMatrix, a: &CMatrix) -> Readjustment {
    let polar = linalg::polar_decompose(&(a * sqrt_rho)).expect("square input");
    let effect = Effect::from_trusted(a.adjoint() * a);
    let selected = bayes_with_root(sqrt_rho, &effect, 0).matrix;
    let target = a * rho.matrix() * a.adjoint();
    let transported = &polar.isometry * &selected * polar.isometry.adjoint();
    let residual = linalg::frobenius(&(transported - target));
    Readjustment {
        isometry: polar.isometry,
        unitary: polar.unitary,
        residual,
        flagged: residual > TRANSPORT_TOL,
    }
}

/// Bayes' rule on atoms, `w_k -> w_k e(w_k) / sum_j w_j e(w_j)`.
///
/// Returns the posterior and the evidence; atoms with vanishing likelihood
/// are dropped.
pub fn classical_bayes_update(p: &ClassicalState, e: &ClassicalEffect) -> Result<(ClassicalState, f64)> {
    let likelihood = e.values_on(p)?;
    p.reweight(&likelihood)
}

/// `w -> A|w> / ||A|w>||`, or `None` when `A` annihilates `w`.
pub fn disturbance_map(a: &CMatrix, w: &PureState) -> Result<Option<PureState>> {
    linalg::ensure_square(a)?;
    linalg::ensure_dim(a.ncols(), w.dim())?;
    let image = a * w.amplitudes();
    if image.norm_squared() <= tol::ZERO {
        return Ok(None);
    }
    PureState::normalize(image).map(Some)
}

/// Bayes-then-disturb pipeline for one outcome in the classical extension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateReport {
    pub outcome: usize,
    pub prior: ClassicalState,
    pub posterior: ClassicalState,
    pub disturbed: ClassicalState,
    /// `A_d rho A_d* / tr(rho E_d)` for `rho = R(prior)`.
    pub target: DensityOperator,
    pub evidence: f64,
    /// `||R(disturbed) - target||_F`
    pub residual: f64,
}

pub fn extension_update(p: &ClassicalState, op: &KrausOperation, outcome: usize) -> Result<UpdateReport> {
    if outcome >= op.outcomes() {
        return Err(Error::InvalidArgument(format!(
            "outcome {outcome} out of {}",
            op.outcomes()
        )));
    }
    linalg::ensure_dim(op.dim(), p.dim())?;
    let a = op.operator(outcome);
    let likelihood = induced_effect(&op.effect(outcome));
    let (posterior, evidence) = classical_bayes_update(p, &likelihood)?;

    let mut atoms = Vec::with_capacity(posterior.len());
    for atom in posterior.atoms() {
        if let Some(state) = disturbance_map(a, &atom.state)? {
            atoms.push(Atom {
                weight: atom.weight,
                state,
            });
        }
    }
    // Dropped atoms carry at most `tol::ZERO / evidence` of posterior mass.
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    atoms.iter_mut().for_each(|a| a.weight /= total);
    let disturbed = ClassicalState::new(atoms)?;

    let (target, _) = apply_operation(&reduce(p), a)?;
    let residual = linalg::frobenius(&(reduce(&disturbed).matrix() - target.matrix()));
    Ok(UpdateReport {
        outcome,
        prior: p.clone(),
        posterior,
        disturbed,
        target,
        evidence,
        residual,
    })
}

/// `E = sum_k c_k |v_k><v_k|` with `c_k in [0, 1]`: a discrete classical
/// effect expansion of `E` over pure states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectEigenExpansion {
    pub effect: Effect,
    pub atoms: Vec<(f64, PureState)>,
}

impl EffectEigenExpansion {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.effect.dim();
        self.atoms.iter().fold(CMatrix::zeros(n, n), |acc, (c, v)| {
            acc + v.projector() * Complex64::new(*c, 0.0)
        })
    }
}

pub fn effect_eigen_expansion(effect: &Effect) -> EffectEigenExpansion {
    let spectrum = linalg::spectrum_of(effect.matrix());
    let atoms = spectrum
        .values
        .iter()
        .zip(&spectrum.vectors)
        .map(|(&c, v)| {
            (
                c.clamp(0.0, 1.0),
                PureState::normalize(v.clone()).expect("unit eigenvector"),
            )
        })
        .collect();
    EffectEigenExpansion {
        effect: effect.clone(),
        atoms,
    }
}

/// `w -> rho^{1/2}|w> / sqrt(<w|rho|w>)`, with `rho^{1/2}` computed once.
#[derive(Debug, Clone)]
pub struct SigmaMap {
    sqrt_rho: CMatrix,
}

impl SigmaMap {
    pub fn new(rho: &DensityOperator) -> Self {
        SigmaMap {
            sqrt_rho: rho.sqrt(),
        }
    }

    pub fn apply(&self, w: &PureState) -> Result<Option<PureState>> {
        disturbance_map(&self.sqrt_rho, w)
    }
}

pub fn sigma_map(rho: &DensityOperator, w: &PureState) -> Result<Option<PureState>> {
    SigmaMap::new(rho).apply(w)
}

/// Bayesian update in the uniform representation.
///
/// With `E = sum_k c_k |v_k><v_k|`, the posterior puts mass proportional to
/// `c_k rho(v_k)` on `sigma(v_k)`; scaling its reduction by the evidence
/// gives `rho^{1/2} E rho^{1/2}`.
pub fn representation_bayes(rho: &DensityOperator, effect: &Effect) -> Result<(ClassicalState, f64)> {
    linalg::ensure_dim(rho.dim(), effect.dim())?;
    let sigma = SigmaMap::new(rho);
    let mut atoms = Vec::new();
    for (c, v) in &effect_eigen_expansion(effect).atoms {
        let mass = c * rho.expectation(v);
        if let (true, Some(state)) = (mass > 0.0, sigma.apply(v)?) {
            atoms.push(Atom {
                weight: mass,
                state,
            });
        }
    }
    let evidence: f64 = atoms.iter().map(|a| a.weight).sum();
    if evidence <= tol::ZERO {
        return Err(Error::ZeroEvidence(evidence));
    }
    atoms.iter_mut().for_each(|a| a.weight /= evidence);
    Ok((ClassicalState::new(atoms)?, evidence))
}

/// Largest gap between `<w~|rho^{1/2} E rho^{1/2}|w~>` and
/// `sum_k c_k rho(v_k) |<w~|sigma(v_k)>|^2` over the test points.
pub fn representation_update(rho: &DensityOperator, effect: &Effect, test_points: &[PureState]) -> Result<f64> {
    linalg::ensure_dim(rho.dim(), effect.dim())?;
    let sqrt_rho = rho.sqrt();
    let selected = bayes_with_root(&sqrt_rho, effect, 0).matrix;
    let sigma = SigmaMap {
        sqrt_rho: sqrt_rho.clone(),
    };
    let smeared: Vec<(f64, Option<PureState>)> = effect_eigen_expansion(effect)
        .atoms
        .iter()
        .map(|(c, v)| Ok((c * rho.expectation(v), sigma.apply(v)?)))
        .collect::<Result<_>>()?;

    let mut worst = 0.0f64;
    for t in test_points {
        linalg::ensure_dim(rho.dim(), t.dim())?;
        let lhs = t.expectation(&selected);
        let rhs: f64 = smeared
            .iter()
            .filter_map(|(mass, s)| s.as_ref().map(|s| mass * t.fidelity(s)))
            .sum();
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Per-outcome pieces of the selection-plus-readjustment view of collapse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDecomposition {
    pub outcome: usize,
    pub probability: f64,
    /// Outcomes with probability at or below `tol::ZERO` are skipped.
    pub skipped: bool,
    pub selection: BayesComponent,
    /// `rho~_d / tr(rho E_d)`
    pub posterior: Option<DensityOperator>,
    pub readjustment: Option<Readjustment>,
    pub post_measurement: Option<DensityOperator>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    pub outcomes: Vec<OutcomeDecomposition>,
    /// `||sum_d tr(rho E_d) posterior_d - rho||_F`
    pub mixture_residual: f64,
    pub max_transport_residual: f64,
}

impl CollapseReport {
    pub fn within_contract(&self) -> bool {
        self.mixture_residual <= RESOLUTION_TOL && self.max_transport_residual <= TRANSPORT_TOL
    }
}

pub fn full_collapse_decomposition(rho: &DensityOperator, op: &KrausOperation) -> Result<CollapseReport> {
    linalg::ensure_dim(rho.dim(), op.dim())?;
    let n = rho.dim();
    let sqrt_rho = rho.sqrt();
    let mut outcomes = Vec::with_capacity(op.outcomes());
    let mut mixture = CMatrix::zeros(n, n);
    let mut max_transport = 0.0f64;
    for d in 0..op.outcomes() {
        let effect = op.effect(d);
        let probability = born_probability(rho, &effect)?;
        let selection = bayes_with_root(&sqrt_rho, &effect, d);
        mixture += &selection.matrix;
        if probability <= tol::ZERO {
            outcomes.push(OutcomeDecomposition {
                outcome: d,
                probability,
                skipped: true,
                selection,
                posterior: None,
                readjustment: None,
                post_measurement: None,
            });
            continue;
        }
        let posterior = DensityOperator::from_trusted(&selection.matrix * Complex64::new(1.0 / probability, 0.0));
        let readjust = readjust_with_root(rho, &sqrt_rho, op.operator(d));
        max_transport = max_transport.max(readjust.residual);
        let (post, _) = apply_operation(rho, op.operator(d))?;
        outcomes.push(OutcomeDecomposition {
            outcome: d,
            probability,
            skipped: false,
            selection,
            posterior: Some(posterior),
            readjustment: Some(readjust),
            post_measurement: Some(post),
        });
    }
    Ok(CollapseReport {
        outcomes,
        mixture_residual: linalg::frobenius(&(mixture - rho.matrix())),
        max_transport_residual: max_transport,
    })
}

/// Passive form of the readjustment: reference vectors `w_i -> V* w_i`, so
/// that `<w_i|V X V*|w_i> = <V* w_i|X|V* w_i>`.
pub fn readjusted_frame(frame: &MinimalIcPovm, unitary: &CMatrix) -> Result<Vec<PureState>> {
    linalg::ensure_square(unitary)?;
    linalg::ensure_dim(frame.dim(), unitary.nrows())?;
    frame
        .vectors()
        .iter()
        .map(|v| PureState::normalize(unitary.adjoint() * v.amplitudes()))
        .collect()
}

/// `tr(rho E)` via the Bayes evidence of the induced effect on `p`.
pub fn evidence_gap(p: &ClassicalState, effect: &Effect) -> Result<f64> {
    let evidence = classical_expectation(p, &induced_effect(effect))?;
    Ok((evidence - born_probability(&reduce(p), effect)?).abs())
}

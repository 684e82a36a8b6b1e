//! The canonical classical extension.
//!
//! Classical states are probability measures over pure states, kept as
//! finite atomic measures `{(p_k, w_k)}`. The reduction map sends such a
//! measure to the density operator `sum_k p_k |w_k><w_k|`. It is affine and
//! onto, but many-to-one on mixed states. Every quantum effect `E`
//! induces the classical (fuzzy) effect `w -> <w|E|w>` with identical
//! statistics on corresponding states.

use std::hash::{DefaultHasher, Hash, Hasher};

use num_complex::Complex64;
use rand::Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::quantum::{born_probability, DensityOperator, DiscretePovm, Effect, PureState};
use crate::sampling;
use crate::tol;
use crate::wire::VectorJson;

/// Allowed deviation of the total weight from one before pruning.
const WEIGHT_SUM: f64 = 1e-12;
/// Allowed deviation of `sum_d e_d(w)` from one for fuzzy observables.
const OBSERVABLE_SUM: f64 = 1e-10;
/// Eigenvalues closer than this share a spectral projector.
const EIGENVALUE_MERGE: f64 = 1e-9;
/// Seed and count of the fixed probe states used to validate observables.
const PROBE_SEED: u64 = 0x5eed_0b5e;
const PROBE_COUNT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub state: PureState,
}

/// Finite atomic probability measure over the pure states of an `n`-level
/// system.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalState {
    dim: usize,
    atoms: Vec<Atom>,
    fingerprint: u64,
}

fn fingerprint_of<'a>(states: impl Iterator<Item = &'a PureState>) -> u64 {
    let mut h = DefaultHasher::new();
    for s in states {
        s.dim().hash(&mut h);
        for z in s.amplitudes().iter() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

impl ClassicalState {
    /// Validates weights (non-negative, summing to one within `1e-12`), drops
    /// atoms lighter than `tol::WEIGHT_PRUNE` and renormalizes.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(|a| a.state.dim())
            .ok_or_else(|| Error::InvalidClassicalState("no atoms".into()))?;
        let mut total = 0.0;
        for a in &atoms {
            linalg::ensure_dim(dim, a.state.dim())?;
            if !a.weight.is_finite() || a.weight < 0.0 {
                return Err(Error::InvalidClassicalState(format!(
                    "weight {} is not a probability",
                    a.weight
                )));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM {
            return Err(Error::InvalidClassicalState(format!(
                "weights sum to {total}"
            )));
        }
        Self::pruned(dim, atoms)
    }

    /// Prunes and renormalizes without the unit-sum check.
    fn pruned(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .filter(|a| a.weight >= tol::WEIGHT_PRUNE)
            .collect();
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if atoms.is_empty() || total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidClassicalState("all atoms pruned".into()));
        }
        atoms.iter_mut().for_each(|a| a.weight /= total);
        let fingerprint = fingerprint_of(atoms.iter().map(|a| &a.state));
        Ok(ClassicalState {
            dim,
            atoms,
            fingerprint,
        })
    }

    pub fn from_parts(weights: &[f64], states: &[PureState]) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: weights.len(),
            });
        }
        Self::new(
            weights
                .iter()
                .zip(states)
                .map(|(&weight, state)| Atom {
                    weight,
                    state: state.clone(),
                })
                .collect(),
        )
    }

    /// Point mass at a pure state.
    pub fn delta(state: PureState) -> Self {
        Self::new(vec![Atom { weight: 1.0, state }]).expect("unit point mass")
    }

    /// Equal-weight measure on the given states.
    pub fn uniform(states: Vec<PureState>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        Self::from_parts(&vec![w; states.len()], &states)
    }

    /// `lambda p + (1 - lambda) q`, realized by concatenating atom lists.
    pub fn mixture(lambda: f64, p: &ClassicalState, q: &ClassicalState) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "mixing weight {lambda} outside [0, 1]"
            )));
        }
        linalg::ensure_dim(p.dim, q.dim)?;
        let scaled = |s: &ClassicalState, f: f64| {
            s.atoms
                .iter()
                .map(move |a| Atom {
                    weight: a.weight * f,
                    state: a.state.clone(),
                })
                .collect::<Vec<_>>()
        };
        let mut atoms = scaled(p, lambda);
        atoms.extend(scaled(q, 1.0 - lambda));
        Self::new(atoms)
    }

    /// Bayesian reweighting `w_k -> w_k l_k / sum_j w_j l_j`.
    ///
    /// Returns the posterior and the evidence `sum_k w_k l_k`.
    pub fn reweight(&self, likelihood: &[f64]) -> Result<(ClassicalState, f64)> {
        linalg::ensure_dim(self.atoms.len(), likelihood.len())?;
        let evidence: f64 = self
            .atoms
            .iter()
            .zip(likelihood)
            .map(|(a, &l)| a.weight * l)
            .sum();
        if evidence <= tol::ZERO {
            return Err(Error::ZeroEvidence(evidence));
        }
        let atoms = self
            .atoms
            .iter()
            .zip(likelihood)
            .map(|(a, &l)| Atom {
                weight: (a.weight * l / evidence).max(0.0),
                state: a.state.clone(),
            })
            .collect();
        Ok((Self::pruned(self.dim, atoms)?, evidence))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// Hash of the atom list (states only), used to bind tabulated effects.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    w: f64,
    #[serde(flatten)]
    state: VectorJson,
}

#[derive(Serialize, Deserialize)]
struct ClassicalStateJson {
    dim: usize,
    atoms: Vec<AtomJson>,
}

impl Serialize for ClassicalState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ClassicalStateJson {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    w: a.weight,
                    state: VectorJson::from(a.state.amplitudes()),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassicalState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ClassicalStateJson::deserialize(d)?;
        let atoms = j
            .atoms
            .iter()
            .map(|a| {
                let v = CVector::try_from(&a.state)?;
                Ok(Atom {
                    weight: a.w,
                    state: PureState::new(v)?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(de::Error::custom)?;
        let state = ClassicalState::new(atoms).map_err(de::Error::custom)?;
        if state.dim != j.dim {
            return Err(de::Error::custom(Error::DimensionMismatch {
                expected: j.dim,
                found: state.dim,
            }));
        }
        Ok(state)
    }
}

/// Classical effect tabulated on the atoms of one particular classical state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedEffect {
    dim: usize,
    fingerprint: u64,
    atoms: Vec<PureState>,
    values: Vec<f64>,
}

impl TabulatedEffect {
    pub fn new(on: &ClassicalState, values: Vec<f64>) -> Result<Self> {
        linalg::ensure_dim(on.len(), values.len())?;
        if let Some(&bad) = values
            .iter()
            .find(|&&v| !(-tol::PSD..=1.0 + tol::PSD).contains(&v))
        {
            return Err(Error::SpectrumOutOfRange { min: bad, max: bad });
        }
        Ok(TabulatedEffect {
            dim: on.dim(),
            fingerprint: on.fingerprint(),
            atoms: on.atoms().iter().map(|a| a.state.clone()).collect(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A map from pure states into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalEffect {
    /// `w -> <w|E|w>`
    Induced(Effect),
    Tabulated(TabulatedEffect),
    /// Pointwise product of two classical effects.
    Product(Box<ClassicalEffect>, Box<ClassicalEffect>),
}

impl ClassicalEffect {
    pub fn dim(&self) -> usize {
        match self {
            ClassicalEffect::Induced(e) => e.dim(),
            ClassicalEffect::Tabulated(t) => t.dim,
            ClassicalEffect::Product(a, _) => a.dim(),
        }
    }

    /// Value at a single pure state. Tabulated effects only answer on their own
    /// atoms.
    pub fn evaluate(&self, w: &PureState) -> Result<f64> {
        linalg::ensure_dim(self.dim(), w.dim())?;
        match self {
            ClassicalEffect::Induced(e) => Ok(w.expectation(e.matrix())),
            ClassicalEffect::Tabulated(t) => t
                .atoms
                .iter()
                .position(|a| a == w)
                .map(|k| t.values[k])
                .ok_or(Error::AtomSetMismatch),
            ClassicalEffect::Product(a, b) => Ok(a.evaluate(w)? * b.evaluate(w)?),
        }
    }

    /// Values at every atom of `p`, in atom order.
    pub fn values_on(&self, p: &ClassicalState) -> Result<Vec<f64>> {
        linalg::ensure_dim(self.dim(), p.dim())?;
        match self {
            ClassicalEffect::Induced(e) => Ok(p
                .atoms()
                .iter()
                .map(|a| a.state.expectation(e.matrix()))
                .collect()),
            ClassicalEffect::Tabulated(t) => {
                if t.fingerprint != p.fingerprint() || t.atoms.len() != p.len() {
                    return Err(Error::AtomSetMismatch);
                }
                Ok(t.values.clone())
            }
            ClassicalEffect::Product(a, b) => Ok(a
                .values_on(p)?
                .into_iter()
                .zip(b.values_on(p)?)
                .map(|(x, y)| x * y)
                .collect()),
        }
    }

    fn tabulated_support(&self) -> Option<&[PureState]> {
        match self {
            ClassicalEffect::Induced(_) => None,
            ClassicalEffect::Tabulated(t) => Some(&t.atoms),
            ClassicalEffect::Product(a, b) => a.tabulated_support().or_else(|| b.tabulated_support()),
        }
    }
}

/// The c-effect `E o R` induced by a quantum effect.
pub fn induced_effect(effect: &Effect) -> ClassicalEffect {
    ClassicalEffect::Induced(effect.clone())
}

/// Outcome-indexed classical effects summing to one pointwise, with optional
/// real outcome values.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyObservable {
    dim: usize,
    effects: Vec<ClassicalEffect>,
    values: Option<Vec<f64>>,
}

impl FuzzyObservable {
    /// Checks normalization on a fixed probe set: the atoms of a tabulated
    /// effect if there is one, otherwise the standard basis plus fixed Haar
    /// samples.
    pub fn new(effects: Vec<ClassicalEffect>, values: Option<Vec<f64>>) -> Result<Self> {
        let dim = effects
            .first()
            .map(ClassicalEffect::dim)
            .ok_or_else(|| Error::InvalidArgument("observable needs an effect".into()))?;
        for e in &effects {
            linalg::ensure_dim(dim, e.dim())?;
        }
        if let Some(v) = &values {
            linalg::ensure_dim(effects.len(), v.len())?;
        }
        let probes: Vec<PureState> = match effects.iter().find_map(|e| e.tabulated_support()) {
            Some(atoms) => atoms.to_vec(),
            None => {
                let mut rng = sampling::seeded_rng(PROBE_SEED);
                (0..dim)
                    .map(|k| PureState::basis(dim, k))
                    .chain((0..PROBE_COUNT).map(|_| sampling::haar_state(dim, &mut rng)))
                    .collect()
            }
        };
        for w in &probes {
            let mut total = 0.0;
            for e in &effects {
                total += e.evaluate(w)?;
            }
            if (total - 1.0).abs() > OBSERVABLE_SUM {
                return Err(Error::NotComplete((total - 1.0).abs()));
            }
        }
        Ok(FuzzyObservable {
            dim,
            effects,
            values,
        })
    }

    /// c-representative of a POVM.
    pub fn induced(povm: &DiscretePovm, values: Option<Vec<f64>>) -> Result<Self> {
        Self::new(povm.effects().iter().map(induced_effect).collect(), values)
    }

    /// c-representative of the spectral measure of a Hermitian observable,
    /// outcomes labelled by its distinct eigenvalues (descending).
    pub fn c_representative(observable: &CMatrix) -> Result<Self> {
        let spectrum = linalg::eigh(observable)?;
        let n = spectrum.dim();
        let mut values: Vec<f64> = Vec::new();
        let mut projectors: Vec<CMatrix> = Vec::new();
        for (&lambda, v) in spectrum.values.iter().zip(&spectrum.vectors) {
            match values.last() {
                Some(&last) if (last - lambda).abs() <= EIGENVALUE_MERGE => {
                    *projectors.last_mut().expect("paired with values") += linalg::outer(v);
                }
                _ => {
                    values.push(lambda);
                    projectors.push(linalg::outer(v));
                }
            }
        }
        let effects = projectors
            .into_iter()
            .map(Effect::from_trusted)
            .collect();
        let povm = DiscretePovm::new(effects)?;
        debug_assert_eq!(povm.dim(), n);
        Self::induced(&povm, Some(values))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[ClassicalEffect] {
        &self.effects
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    /// Outcome distribution `q_d = sum_k w_k e_d(w_k)`.
    pub fn distribution(&self, p: &ClassicalState) -> Result<Vec<f64>> {
        self.effects
            .iter()
            .map(|e| classical_expectation(p, e))
            .collect()
    }
}

/// Reduction map `p -> sum_k w_k |w_k><w_k|`.
pub fn reduce(p: &ClassicalState) -> DensityOperator {
    let n = p.dim();
    let mut m = CMatrix::zeros(n, n);
    for a in p.atoms() {
        m += a.state.projector() * Complex64::new(a.weight, 0.0);
    }
    DensityOperator::from_trusted(m)
}

/// `sum_k w_k e(w_k)`
pub fn classical_expectation(p: &ClassicalState, e: &ClassicalEffect) -> Result<f64> {
    Ok(e.values_on(p)?
        .iter()
        .zip(p.atoms())
        .map(|(v, a)| a.weight * v)
        .sum())
}

/// `|tr(R(p) E) - sum_k w_k <w_k|E|w_k>|`
pub fn statistics_gap(p: &ClassicalState, effect: &Effect) -> Result<f64> {
    let quantum = born_probability(&reduce(p), effect)?;
    let classical = classical_expectation(p, &induced_effect(effect))?;
    Ok((quantum - classical).abs())
}

/// Canonical preimage: the spectral decomposition with zero eigenvalues dropped.
pub fn eigen_decomposition_state(rho: &DensityOperator) -> ClassicalState {
    let spectrum = rho.spectrum();
    let (weights, states): (Vec<f64>, Vec<PureState>) = spectrum
        .values
        .iter()
        .zip(&spectrum.vectors)
        .filter(|(&l, _)| l >= tol::WEIGHT_PRUNE)
        .map(|(&l, v)| (l, PureState::normalize(v.clone()).expect("unit eigenvector")))
        .unzip();
    let atoms = weights
        .into_iter()
        .zip(states)
        .map(|(weight, state)| Atom { weight, state })
        .collect();
    ClassicalState::pruned(rho.dim(), atoms).expect("a state has a positive eigenvalue")
}

/// Number of eigenvalues at or above the pruning threshold.
pub fn rank(rho: &DensityOperator) -> usize {
    rho.spectrum()
        .values
        .iter()
        .filter(|&&l| l >= tol::WEIGHT_PRUNE)
        .count()
}

/// Random `m`-atom preimage of `rho` by mixing the (subnormalized)
/// eigenvectors through a random `m x rank` isometry.
///
/// With `m == rank` the isometry is the identity and the spectral
/// decomposition is returned.
pub fn random_decomposition<R: Rng + ?Sized>(
    rho: &DensityOperator,
    m: usize,
    rng: &mut R,
) -> Result<ClassicalState> {
    let eigen = eigen_decomposition_state(rho);
    let r = eigen.len();
    if m < r {
        return Err(Error::InsufficientAtoms { atoms: m, rank: r });
    }
    if m == r {
        return Ok(eigen);
    }
    let isometry = linalg::orthonormalize_columns(&sampling::gaussian_matrix(m, r, rng));
    let scaled: Vec<CVector> = eigen
        .atoms()
        .iter()
        .map(|a| a.state.amplitudes() * Complex64::new(a.weight.sqrt(), 0.0))
        .collect();
    let n = rho.dim();
    let mut atoms = Vec::with_capacity(m);
    for j in 0..m {
        let mut phi = CVector::zeros(n);
        for (k, v) in scaled.iter().enumerate() {
            phi += v * isometry[(j, k)];
        }
        let weight = phi.norm_squared();
        if weight >= tol::WEIGHT_PRUNE {
            atoms.push(Atom {
                weight,
                state: PureState::normalize(phi)?,
            });
        }
    }
    ClassicalState::new(atoms)
}

/// Product joint observable `g_{d,d'} = e_d f_{d'}`, outcomes in `d`-major order.
pub fn joint_observable(a: &FuzzyObservable, b: &FuzzyObservable) -> Result<FuzzyObservable> {
    linalg::ensure_dim(a.dim(), b.dim())?;
    let mut effects = Vec::with_capacity(a.outcomes() * b.outcomes());
    for e in a.effects() {
        for f in b.effects() {
            effects.push(ClassicalEffect::Product(Box::new(e.clone()), Box::new(f.clone())));
        }
    }
    FuzzyObservable::new(effects, None)
}

/// Largest deviation between the marginals of `joint` and `a`, `b` over the
/// given states.
pub fn marginal_deviation(
    joint: &FuzzyObservable,
    a: &FuzzyObservable,
    b: &FuzzyObservable,
    points: &[PureState],
) -> Result<f64> {
    let (na, nb) = (a.outcomes(), b.outcomes());
    linalg::ensure_dim(na * nb, joint.outcomes())?;
    let mut worst = 0.0f64;
    for w in points {
        let g: Vec<f64> = joint
            .effects()
            .iter()
            .map(|e| e.evaluate(w))
            .collect::<Result<_>>()?;
        for d in 0..na {
            let row: f64 = (0..nb).map(|k| g[d * nb + k]).sum();
            worst = worst.max((row - a.effects()[d].evaluate(w)?).abs());
        }
        for k in 0..nb {
            let col: f64 = (0..na).map(|d| g[d * nb + k]).sum();
            worst = worst.max((col - b.effects()[k].evaluate(w)?).abs());
        }
    }
    Ok(worst)
}

/// Variance `sum_d x_d^2 q_d - (sum_d x_d q_d)^2` of the outcome values.
pub fn dispersion(p: &ClassicalState, observable: &FuzzyObservable) -> Result<f64> {
    let values = observable.values().ok_or(Error::MissingOutcomeValues)?;
    let q = observable.distribution(p)?;
    let mean: f64 = values.iter().zip(&q).map(|(x, q)| x * q).sum();
    let second: f64 = values.iter().zip(&q).map(|(x, q)| x * x * q).sum();
    Ok((second - mean * mean).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use crate::sampling::{haar_state, random_density, random_effect, seeded_rng};

    fn plus() -> PureState {
        PureState::from_bloch_vector([1.0, 0.0, 0.0])
    }

    fn minus() -> PureState {
        PureState::from_bloch_vector([-1.0, 0.0, 0.0])
    }

    fn pauli_z() -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]))
    }

    fn pauli_x() -> CMatrix {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        CMatrix::from_row_slice(2, 2, &[zero, one, one, zero])
    }

    #[test]
    fn reduce_examples() {
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        let r = reduce(&ClassicalState::delta(zero.clone()));
        assert!(frobenius(&(r.matrix() - zero.projector())) < 1e-15);

        let mixed = DensityOperator::maximally_mixed(2);
        let a = reduce(&ClassicalState::uniform(vec![zero, one]).unwrap());
        let b = reduce(&ClassicalState::uniform(vec![plus(), minus()]).unwrap());
        assert!(frobenius(&(a.matrix() - mixed.matrix())) < 1e-15);
        assert!(frobenius(&(b.matrix() - mixed.matrix())) < 1e-15);
    }

    #[test]
    fn classical_state_validation_and_pruning() {
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        assert!(ClassicalState::from_parts(&[0.6, 0.6], &[zero.clone(), one.clone()]).is_err());
        assert!(ClassicalState::from_parts(&[1.5, -0.5], &[zero.clone(), one.clone()]).is_err());
        assert!(ClassicalState::new(vec![]).is_err());
        let p = ClassicalState::from_parts(&[1.0 - 1e-15, 1e-15], &[zero, one]).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.weights(), vec![1.0]);
        assert!(matches!(
            ClassicalState::from_parts(&[0.5, 0.5], &[PureState::basis(2, 0), PureState::basis(3, 0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn induced_effect_examples() {
        let mut rng = seeded_rng(1);
        let id = induced_effect(&Effect::identity(2));
        for _ in 0..10 {
            let w = haar_state(2, &mut rng);
            assert!((id.evaluate(&w).unwrap() - 1.0).abs() < 1e-14);
        }

        let e = induced_effect(&Effect::projector(&PureState::basis(2, 0)));
        for k in 0..=8 {
            let theta = k as f64 * std::f64::consts::PI / 8.0;
            let w = PureState::from_bloch(theta, 0.3);
            let expected = (theta / 2.0).cos().powi(2);
            assert!((e.evaluate(&w).unwrap() - expected).abs() < 1e-15);
        }

        // A projector still yields a fuzzy c-effect.
        let strictly_inside = (0..100)
            .map(|_| e.evaluate(&haar_state(2, &mut rng)).unwrap())
            .filter(|&v| v > 1e-6 && v < 1.0 - 1e-6)
            .count();
        assert!(strictly_inside > 0);
    }

    #[test]
    fn expectation_examples() {
        let mut rng = seeded_rng(2);
        let p = ClassicalState::uniform((0..5).map(|_| haar_state(3, &mut rng)).collect()).unwrap();
        let one = induced_effect(&Effect::identity(3));
        assert!((classical_expectation(&p, &one).unwrap() - 1.0).abs() < 1e-14);

        let w0 = haar_state(3, &mut rng);
        let e = induced_effect(&random_effect(3, &mut rng));
        let delta = ClassicalState::delta(w0.clone());
        assert_eq!(
            classical_expectation(&delta, &e).unwrap(),
            e.evaluate(&w0).unwrap()
        );
    }

    #[test]
    fn statistics_gap_random() {
        let mut rng = seeded_rng(3);
        let p = ClassicalState::uniform((0..8).map(|_| haar_state(3, &mut rng)).collect()).unwrap();
        let e = random_effect(3, &mut rng);
        assert!(statistics_gap(&p, &e).unwrap() <= 1e-12);

        let many =
            ClassicalState::uniform((0..10_000).map(|_| haar_state(2, &mut rng)).collect()).unwrap();
        let e = random_effect(2, &mut rng);
        assert!(statistics_gap(&many, &e).unwrap() <= 1e-12);
    }

    #[test]
    fn tabulated_effects_bind_to_their_atoms() {
        let zero = PureState::basis(2, 0);
        let one = PureState::basis(2, 1);
        let p = ClassicalState::uniform(vec![zero.clone(), one.clone()]).unwrap();
        let t = ClassicalEffect::Tabulated(TabulatedEffect::new(&p, vec![1.0, 0.0]).unwrap());
        assert!((classical_expectation(&p, &t).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(t.evaluate(&zero).unwrap(), 1.0);

        let q = ClassicalState::uniform(vec![plus(), minus()]).unwrap();
        assert_eq!(classical_expectation(&q, &t), Err(Error::AtomSetMismatch));
        assert_eq!(t.evaluate(&plus()), Err(Error::AtomSetMismatch));
        assert!(TabulatedEffect::new(&p, vec![1.5, 0.0]).is_err());

        let obs = FuzzyObservable::new(
            vec![
                t.clone(),
                ClassicalEffect::Tabulated(TabulatedEffect::new(&p, vec![0.0, 1.0]).unwrap()),
            ],
            Some(vec![1.0, -1.0]),
        )
        .unwrap();
        assert!((dispersion(&p, &obs).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_decomposition_examples() {
        let zero = PureState::basis(2, 0);
        let p = eigen_decomposition_state(&DensityOperator::pure(&zero));
        assert_eq!(p.len(), 1);
        assert_eq!(p.atoms()[0].state, zero);

        let p = eigen_decomposition_state(&DensityOperator::maximally_mixed(2));
        assert_eq!(p.len(), 2);
        assert!((p.atoms()[0].weight - 0.5).abs() < 1e-15);
        assert_eq!(p.atoms()[0].state, PureState::basis(2, 0));
        assert_eq!(p.atoms()[1].state, PureState::basis(2, 1));

        let mut rng = seeded_rng(4);
        for n in 2..=5 {
            let rho = random_density(n, &mut rng);
            let back = reduce(&eigen_decomposition_state(&rho));
            assert!(frobenius(&(back.matrix() - rho.matrix())) <= 1e-12);
        }
    }

    #[test]
    fn random_decomposition_examples() {
        let mut rng = seeded_rng(5);
        let rho = random_density(3, &mut rng);
        let same = random_decomposition(&rho, 3, &mut rng).unwrap();
        assert_eq!(same, eigen_decomposition_state(&rho));

        let mixed = DensityOperator::maximally_mixed(2);
        let p = random_decomposition(&mixed, 3, &mut rng).unwrap();
        assert_eq!(p.len(), 3);
        assert!(frobenius(&(reduce(&p).matrix() - mixed.matrix())) <= 1e-10);

        let a = random_decomposition(&rho, 6, &mut seeded_rng(10)).unwrap();
        let b = random_decomposition(&rho, 6, &mut seeded_rng(11)).unwrap();
        assert_ne!(a, b);
        assert!(frobenius(&(reduce(&a).matrix() - reduce(&b).matrix())) <= 1e-10);
        assert_eq!(a, random_decomposition(&rho, 6, &mut seeded_rng(10)).unwrap());

        assert!(matches!(
            random_decomposition(&rho, 2, &mut rng),
            Err(Error::InsufficientAtoms { atoms: 2, rank: 3 })
        ));
    }

    #[test]
    fn joint_observable_examples() {
        let z = FuzzyObservable::c_representative(&pauli_z()).unwrap();
        let x = FuzzyObservable::c_representative(&pauli_x()).unwrap();
        let trivial = FuzzyObservable::new(vec![induced_effect(&Effect::identity(2))], None).unwrap();

        let j = joint_observable(&z, &trivial).unwrap();
        assert_eq!(j.outcomes(), z.outcomes());
        let mut rng = seeded_rng(6);
        let points: Vec<PureState> = (0..100).map(|_| haar_state(2, &mut rng)).collect();
        for w in &points {
            for d in 0..z.outcomes() {
                let lhs = j.effects()[d].evaluate(w).unwrap();
                let rhs = z.effects()[d].evaluate(w).unwrap();
                assert!((lhs - rhs).abs() < 1e-15);
            }
        }

        let zx = joint_observable(&z, &x).unwrap();
        assert_eq!(zx.outcomes(), 4);
        assert!(marginal_deviation(&zx, &z, &x, &points).unwrap() <= 1e-12);

        let a = FuzzyObservable::induced(&sampling::random_povm(3, 3, &mut rng), None).unwrap();
        let b = FuzzyObservable::induced(&sampling::random_povm(3, 4, &mut rng), None).unwrap();
        let ab = joint_observable(&a, &b).unwrap();
        let points: Vec<PureState> = (0..50).map(|_| haar_state(3, &mut rng)).collect();
        assert!(marginal_deviation(&ab, &a, &b, &points).unwrap() <= 1e-12);
    }

    #[test]
    fn dispersion_examples() {
        let z = FuzzyObservable::c_representative(&pauli_z()).unwrap();
        assert_eq!(z.values().unwrap(), &[1.0, -1.0]);
        let d0 = dispersion(&ClassicalState::delta(PureState::basis(2, 0)), &z).unwrap();
        assert!(d0.abs() < 1e-15);
        let dp = dispersion(&ClassicalState::delta(plus()), &z).unwrap();
        assert!((dp - 1.0).abs() < 1e-14);

        let no_values = FuzzyObservable::new(vec![induced_effect(&Effect::identity(2))], None).unwrap();
        assert_eq!(
            dispersion(&ClassicalState::delta(plus()), &no_values),
            Err(Error::MissingOutcomeValues)
        );
    }

    #[test]
    fn observable_must_be_normalized() {
        let e = Effect::projector(&PureState::basis(2, 0));
        assert!(matches!(
            FuzzyObservable::new(vec![induced_effect(&e)], None),
            Err(Error::NotComplete(_))
        ));
    }

    #[test]
    fn reweight_prunes_zero_likelihood() {
        let p = ClassicalState::uniform(vec![PureState::basis(2, 0), PureState::basis(2, 1)]).unwrap();
        let (post, evidence) = p.reweight(&[1.0, 0.0]).unwrap();
        assert_eq!(post.len(), 1);
        assert!((evidence - 0.5).abs() < 1e-15);
        assert!(matches!(p.reweight(&[0.0, 0.0]), Err(Error::ZeroEvidence(_))));
    }

    #[test]
    fn json_schema() {
        let p = ClassicalState::uniform(vec![PureState::basis(2, 0), plus()]).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["atoms"][0]["w"], 0.5);
        assert!(v["atoms"][1]["re"].is_array());
        let back: ClassicalState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}

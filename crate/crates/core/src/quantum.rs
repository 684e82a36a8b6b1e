//! Validated quantum objects: pure states, density operators, effects,
//! POVMs and Kraus operations, plus the Born rule and state collapse.
//!
//! All constructors validate against the tolerances in [`crate::tol`]; the
//! operations that follow assume the invariants hold.

use num_complex::Complex64;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, Spectrum};
use crate::tol;
use crate::wire::{MatrixJson, VectorJson};

/// Unit vector with its global phase fixed (first non-negligible amplitude
/// real and positive), so equal rays compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Accepts a vector whose norm is within `tol::NORM` of one.
    pub fn new(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self::from_nonzero(amps, norm))
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalize(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self::from_nonzero(amps, norm))
    }

    fn from_nonzero(mut amps: CVector, norm: f64) -> Self {
        // Leave already-normalized input bit-identical so wire round trips are exact.
        if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
            amps.unscale_mut(norm);
        }
        linalg::fix_phase(&mut amps);
        PureState { amps }
    }

    pub fn basis(n: usize, k: usize) -> Self {
        PureState {
            amps: linalg::basis_vector(n, k),
        }
    }

    /// Qubit state at Bloch polar angle `theta` and azimuth `phi` (radians).
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let amps = CVector::from_vec(vec![
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        ]);
        Self::from_nonzero(amps, 1.0)
    }

    /// Qubit state with the given (unit) Bloch vector.
    pub fn from_bloch_vector(r: [f64; 3]) -> Self {
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let theta = (r[2] / len).clamp(-1.0, 1.0).acos();
        let phi = r[1].atan2(r[0]);
        Self::from_bloch(theta, phi)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn projector(&self) -> CMatrix {
        linalg::outer(&self.amps)
    }

    /// `<self|other>`
    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// `<self|m|self>`
    pub fn expectation(&self, m: &CMatrix) -> f64 {
        linalg::expectation(&self.amps, m)
    }

    /// Bloch vector of a qubit state.
    pub fn bloch_vector(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let (a, b) = (self.amps[0], self.amps[1]);
        let off = a.conj() * b;
        Some([2.0 * off.re, 2.0 * off.im, a.norm_sqr() - b.norm_sqr()])
    }
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson::from(&self.amps).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = VectorJson::deserialize(d)?;
        let v = CVector::try_from(&j).map_err(de::Error::custom)?;
        PureState::new(v).map_err(de::Error::custom)
    }
}

fn check_hermitian(m: &CMatrix) -> Result<usize> {
    let n = linalg::ensure_square(m)?;
    let dev = linalg::adjoint_deviation(m);
    if dev > tol::HERM {
        return Err(Error::NotHermitian(dev));
    }
    Ok(n)
}

/// Positive unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    m: CMatrix,
}

impl DensityOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_hermitian(&m)?;
        let tr = linalg::trace(&m);
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::BadTrace(tr.re));
        }
        let m = linalg::hermitize(&m);
        let min = linalg::spectrum_of(&m).min();
        if min < -tol::PSD {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityOperator { m })
    }

    /// Skips validation for matrices that are states by construction.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        DensityOperator {
            m: linalg::hermitize(&m),
        }
    }

    pub fn pure(state: &PureState) -> Self {
        DensityOperator {
            m: state.projector(),
        }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityOperator {
            m: linalg::identity(n) * Complex64::new(1.0 / n as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.m, &self.m)
    }

    pub fn spectrum(&self) -> Spectrum {
        linalg::spectrum_of(&self.m)
    }

    /// `rho^{1/2}`
    pub fn sqrt(&self) -> CMatrix {
        linalg::matrix_sqrt(&self.m).expect("density operators are PSD")
    }

    /// `<w|rho|w>`
    pub fn expectation(&self, w: &PureState) -> f64 {
        w.expectation(&self.m)
    }
}

/// Hermitian operator with spectrum in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    m: CMatrix,
}

impl Effect {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_hermitian(&m)?;
        let m = linalg::hermitize(&m);
        let s = linalg::spectrum_of(&m);
        if s.min() < -tol::PSD || s.max() > 1.0 + tol::PSD {
            return Err(Error::SpectrumOutOfRange {
                min: s.min(),
                max: s.max(),
            });
        }
        Ok(Effect { m })
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Effect {
            m: linalg::hermitize(&m),
        }
    }

    pub fn identity(n: usize) -> Self {
        Effect {
            m: linalg::identity(n),
        }
    }

    pub fn projector(state: &PureState) -> Self {
        Effect {
            m: state.projector(),
        }
    }

    /// `I - E`
    pub fn complement(&self) -> Self {
        Effect {
            m: linalg::identity(self.dim()) - &self.m,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }
}

macro_rules! matrix_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                MatrixJson::from(&self.m).serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let j = MatrixJson::deserialize(d)?;
                let m = CMatrix::try_from(&j).map_err(de::Error::custom)?;
                <$ty>::new(m).map_err(de::Error::custom)
            }
        }
    };
}

matrix_serde!(DensityOperator);
matrix_serde!(Effect);

fn identity_deviation(sum: &CMatrix) -> f64 {
    let n = sum.nrows();
    (sum - linalg::identity(n))
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Outcome-indexed effects summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Effect>", into = "Vec<Effect>")]
pub struct DiscretePovm {
    effects: Vec<Effect>,
}

impl DiscretePovm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let n = effects
            .first()
            .map(Effect::dim)
            .ok_or_else(|| Error::InvalidArgument("POVM needs at least one effect".into()))?;
        let mut sum = CMatrix::zeros(n, n);
        for e in &effects {
            linalg::ensure_dim(n, e.dim())?;
            sum += e.matrix();
        }
        let dev = identity_deviation(&sum);
        if dev > tol::POVM {
            return Err(Error::NotComplete(dev));
        }
        Ok(DiscretePovm { effects })
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn effect(&self, d: usize) -> &Effect {
        &self.effects[d]
    }
}

impl TryFrom<Vec<Effect>> for DiscretePovm {
    type Error = Error;

    fn try_from(effects: Vec<Effect>) -> Result<Self> {
        DiscretePovm::new(effects)
    }
}

impl From<DiscretePovm> for Vec<Effect> {
    fn from(p: DiscretePovm) -> Self {
        p.effects
    }
}

/// One Kraus operator per outcome, `sum_d A_d* A_d = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperation {
    ops: Vec<CMatrix>,
}

impl KrausOperation {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("operation needs at least one operator".into()))?;
        let n = linalg::ensure_square(first)?;
        let mut sum = CMatrix::zeros(n, n);
        for a in &ops {
            linalg::ensure_square(a)?;
            linalg::ensure_dim(n, a.nrows())?;
            sum += a.adjoint() * a;
        }
        let dev = identity_deviation(&sum);
        if dev > tol::POVM {
            return Err(Error::NotComplete(dev));
        }
        Ok(KrausOperation { ops })
    }

    /// Lüders operation `A_d = E_d^{1/2}`.
    pub fn luders(povm: &DiscretePovm) -> Self {
        let ops = povm
            .effects()
            .iter()
            .map(|e| linalg::matrix_sqrt(e.matrix()).expect("effects are PSD"))
            .collect();
        KrausOperation { ops }
    }

    /// `A_d = U_d E_d^{1/2}` for unitaries `U_d`.
    pub fn with_unitaries(povm: &DiscretePovm, unitaries: &[CMatrix]) -> Result<Self> {
        if unitaries.len() != povm.outcomes() {
            return Err(Error::DimensionMismatch {
                expected: povm.outcomes(),
                found: unitaries.len(),
            });
        }
        let luders = Self::luders(povm);
        let ops = luders
            .ops
            .iter()
            .zip(unitaries)
            .map(|(a, u)| u * a)
            .collect();
        KrausOperation::new(ops)
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.ops.len()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn operator(&self, d: usize) -> &CMatrix {
        &self.ops[d]
    }

    /// `E_d = A_d* A_d`
    pub fn effect(&self, d: usize) -> Effect {
        Effect::from_trusted(self.ops[d].adjoint() * &self.ops[d])
    }

    pub fn povm(&self) -> DiscretePovm {
        DiscretePovm {
            effects: (0..self.outcomes()).map(|d| self.effect(d)).collect(),
        }
    }
}

/// Born rule `tr(rho E)`, with excursions outside `[0, 1]` up to `tol::PSD`
/// clamped.
pub fn born_probability(rho: &DensityOperator, effect: &Effect) -> Result<f64> {
    linalg::ensure_dim(rho.dim(), effect.dim())?;
    let p = linalg::trace_product(rho.matrix(), effect.matrix());
    Ok(if (-tol::PSD..0.0).contains(&p) {
        0.0
    } else if p > 1.0 && p <= 1.0 + tol::PSD {
        1.0
    } else {
        p
    })
}

/// Collapse under one Kraus operator: `(A rho A* / tr(A rho A*), tr(A rho A*))`.
pub fn apply_operation(rho: &DensityOperator, a: &CMatrix) -> Result<(DensityOperator, f64)> {
    linalg::ensure_square(a)?;
    linalg::ensure_dim(rho.dim(), a.nrows())?;
    let unnormalized = a * rho.matrix() * a.adjoint();
    let prob = linalg::trace(&unnormalized).re;
    if prob <= tol::ZERO {
        return Err(Error::ZeroProbabilityOutcome(prob));
    }
    let post = unnormalized * Complex64::new(1.0 / prob, 0.0);
    Ok((DensityOperator::from_trusted(post), prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;
    use nalgebra::DVector;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| c(x)),
        ))
    }

    #[test]
    fn born_examples() {
        let mixed = DensityOperator::maximally_mixed(2);
        let zero = PureState::basis(2, 0);
        assert!((born_probability(&mixed, &Effect::projector(&zero)).unwrap() - 0.5).abs() < 1e-15);
        assert!((born_probability(&mixed, &Effect::identity(2)).unwrap() - 1.0).abs() < 1e-15);

        let rho0 = DensityOperator::pure(&zero);
        let half = Effect::new(zero.projector() * c(0.5)).unwrap();
        assert!((born_probability(&rho0, &half).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn born_rejects_dim_mismatch() {
        let rho = DensityOperator::maximally_mixed(2);
        assert!(matches!(
            born_probability(&rho, &Effect::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_validation() {
        assert!(matches!(
            DensityOperator::new(diag(&[0.5, 0.6])),
            Err(Error::BadTrace(_))
        ));
        assert!(matches!(
            DensityOperator::new(diag(&[1.5, -0.5])),
            Err(Error::NotPositive(_))
        ));
        let mut m = diag(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1);
        assert!(matches!(DensityOperator::new(m), Err(Error::NotHermitian(_))));
        assert!(matches!(
            DensityOperator::new(CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn effect_validation() {
        assert!(Effect::new(diag(&[0.5, 0.25])).is_ok());
        assert!(matches!(
            Effect::new(diag(&[1.2, 0.0])),
            Err(Error::SpectrumOutOfRange { .. })
        ));
        assert!(matches!(
            Effect::new(diag(&[0.5, -0.1])),
            Err(Error::SpectrumOutOfRange { .. })
        ));
    }

    #[test]
    fn povm_and_kraus_completeness() {
        let e = Effect::new(diag(&[0.5, 0.25])).unwrap();
        let povm = DiscretePovm::new(vec![e.clone(), e.complement()]).unwrap();
        assert_eq!(povm.outcomes(), 2);
        assert!(matches!(
            DiscretePovm::new(vec![e.clone(), e.clone()]),
            Err(Error::NotComplete(_))
        ));

        let kraus = KrausOperation::luders(&povm);
        assert!(KrausOperation::new(kraus.operators().to_vec()).is_ok());
        assert!(frobenius(&(kraus.effect(0).matrix() - e.matrix())) < 1e-14);
        assert!(matches!(
            KrausOperation::new(vec![diag(&[1.0, 0.0])]),
            Err(Error::NotComplete(_))
        ));
    }

    #[test]
    fn apply_operation_examples() {
        // Unitary: probability one, rotated state.
        let rho = DensityOperator::new(diag(&[0.7, 0.3])).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let (post, p) = apply_operation(&rho, &x).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(frobenius(&(post.matrix() - diag(&[0.3, 0.7]))) < 1e-15);

        // Eigenstate.
        let zero = PureState::basis(2, 0);
        let rho0 = DensityOperator::pure(&zero);
        let (post, p) = apply_operation(&rho0, &zero.projector()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(frobenius(&(post.matrix() - rho0.matrix())) < 1e-15);

        // I/2 with A = sqrt(diag(0.5, 0.25)): p = 0.375, post = diag(2/3, 1/3).
        let a = linalg::matrix_sqrt(&diag(&[0.5, 0.25])).unwrap();
        let (post, p) = apply_operation(&DensityOperator::maximally_mixed(2), &a).unwrap();
        assert!((p - 0.375).abs() < 1e-15);
        assert!(frobenius(&(post.matrix() - diag(&[2.0 / 3.0, 1.0 / 3.0]))) < 1e-15);
    }

    #[test]
    fn apply_operation_zero_probability() {
        let rho = DensityOperator::pure(&PureState::basis(2, 1));
        let a = PureState::basis(2, 0).projector();
        assert!(matches!(
            apply_operation(&rho, &a),
            Err(Error::ZeroProbabilityOutcome(_))
        ));
    }

    #[test]
    fn pure_state_phase_and_bloch() {
        let v = CVector::from_vec(vec![Complex64::new(0.0, 1.0), c(0.0)]);
        let s = PureState::new(v).unwrap();
        assert_eq!(s, PureState::basis(2, 0));
        assert!(matches!(
            PureState::new(CVector::from_vec(vec![c(1.0), c(1.0)])),
            Err(Error::NotNormalized(_))
        ));

        let plus = PureState::from_bloch_vector([1.0, 0.0, 0.0]);
        let b = plus.bloch_vector().unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15 && b[1].abs() < 1e-15 && b[2].abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip_validates() {
        let rho = DensityOperator::new(diag(&[0.25, 0.75])).unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        assert!(text.contains("\"dim\":2"));
        let back: DensityOperator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rho);

        let bad = r#"{"dim":2,"re":[[1.0,0.0],[0.0,1.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#;
        assert!(serde_json::from_str::<DensityOperator>(bad).is_err());
    }
}

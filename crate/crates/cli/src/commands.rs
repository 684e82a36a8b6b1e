use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::json;

use fuzzyqm::experiments::{chsh_report, product_state, singlet, ChshScenario, OPTIMAL_ANGLES_DEG};
use fuzzyqm::extension::{eigen_decomposition_state, random_decomposition, ClassicalState};
use fuzzyqm::representation::{
    pseudo_distribution, random_ic_povm, reconstruct as frame_reconstruct, representation_probabilities,
    sic_antipode, sic_qubit, smearing_check, uniform_density, uniform_povm_sample, MinimalIcPovm,
};
use fuzzyqm::sampling::{haar_state, random_density, random_povm, sub_rng, twirled_kraus};
use fuzzyqm::update::{extension_update, full_collapse_decomposition, representation_update};
use fuzzyqm::wire::VectorJson;
use fuzzyqm::{linalg, DensityOperator, Error, KrausOperation, PureState};
use rand::Rng;

use crate::report::{config_error, Failure, Report, Table};
use crate::Common;

const MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KrausKind {
    Luders,
    UnitaryTwirl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellState {
    Singlet,
    Product,
}

fn check_common(c: &Common) -> Result<(), Failure> {
    if !(2..=MAX_DIM).contains(&c.dim) {
        return config_error(format!("--dim must be in 2..={MAX_DIM}, got {}", c.dim));
    }
    if c.trials == Some(0) {
        return config_error("--trials must be at least 1");
    }
    if c.samples == Some(0) {
        return config_error("--samples must be at least 1");
    }
    if let Some(t) = c.tol {
        if !(t.is_finite() && t > 0.0) {
            return config_error(format!("--tol must be positive, got {t}"));
        }
    }
    Ok(())
}

fn base_config(c: &Common) -> serde_json::Map<String, serde_json::Value> {
    let v = json!({
        "dim": c.dim,
        "seed": c.seed,
        "format": c.format,
        "deterministic": c.deterministic,
    });
    v.as_object().cloned().expect("object literal")
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn reconstruct(c: &Common, sic: bool) -> Result<Report, Failure> {
    check_common(c)?;
    if sic && c.dim != 2 {
        return config_error("--sic requires --dim 2");
    }
    let trials = c.trials.unwrap_or(50);
    let tol = c.tol.unwrap_or(fuzzyqm::tol::RECON);
    let frame = if sic {
        sic_qubit()
    } else {
        random_ic_povm(c.dim, &mut sub_rng(c.seed, 0))?
    };
    let mut rng = sub_rng(c.seed, 1);
    let mut table = Table::new(&["trial", "error"]);
    let (mut worst, mut total) = (0.0f64, 0.0);
    for t in 0..trials {
        let rho = random_density(c.dim, &mut rng);
        let p = representation_probabilities(&rho, &frame)?;
        let err = match frame_reconstruct(&p, &frame) {
            Ok(back) => linalg::frobenius(&(back.matrix() - rho.matrix())),
            Err(Error::NotAState { .. }) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        worst = worst.max(err);
        total += err;
        table.push(vec![t.to_string(), num(err)]);
    }
    let mut config = base_config(c);
    config.insert("trials".into(), json!(trials));
    config.insert("sic".into(), json!(sic));
    config.insert("tolerance".into(), json!(tol));
    let results = json!({
        "frame": if sic { "sic" } else { "random" },
        "frame_elements": frame.len(),
        "gram_condition": frame.gram().condition,
        "max_error": finite(worst),
        "mean_error": finite(total / trials as f64),
        "tolerance": tol,
    });
    Ok(Report::new("reconstruct", config.into(), results, worst <= tol, table))
}

/// JSON has no infinity; unreconstructable trials report `null`.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

enum NamedState {
    Antipodal(usize),
    Aligned(usize),
    Mixed,
}

fn parse_state(s: &str, frame: &MinimalIcPovm) -> Result<NamedState, Failure> {
    if s == "mixed" {
        return Ok(NamedState::Mixed);
    }
    let Some((kind, k)) = s.split_once(':') else {
        return config_error(format!("unknown --state {s:?}; use antipodal:K, aligned:K or mixed"));
    };
    let Ok(k) = k.parse::<usize>() else {
        return config_error(format!("bad index in --state {s:?}"));
    };
    if k >= frame.len() {
        return config_error(format!("--state index {k} out of {} frame elements", frame.len()));
    }
    match kind {
        "antipodal" if frame.dim() == 2 => Ok(NamedState::Antipodal(k)),
        "antipodal" => config_error("antipodal states need --dim 2"),
        "aligned" => Ok(NamedState::Aligned(k)),
        _ => config_error(format!("unknown --state kind {kind:?}")),
    }
}

/// Antipodal states are only parsed for the qubit, where the frame is the SIC.
fn named_density(state: &NamedState, frame: &MinimalIcPovm) -> DensityOperator {
    match state {
        NamedState::Antipodal(k) => DensityOperator::pure(&sic_antipode(*k)),
        NamedState::Aligned(k) => DensityOperator::pure(&frame.vectors()[*k]),
        NamedState::Mixed => DensityOperator::maximally_mixed(frame.dim()),
    }
}

/// Largest gap to the qubit SIC closed form `c_i = 6 p_i - 1`.
fn sic_closed_form_gap(rho: &DensityOperator, coefficients: &[f64]) -> Result<f64, Failure> {
    let p = representation_probabilities(rho, &sic_qubit())?;
    Ok(coefficients
        .iter()
        .zip(&p)
        .map(|(c, p)| (c - (6.0 * p - 1.0)).abs())
        .fold(0.0, f64::max))
}

pub fn negativity(c: &Common, state: Option<&str>) -> Result<Report, Failure> {
    check_common(c)?;
    let samples = c.samples.unwrap_or(1000);
    let tol = c.tol.unwrap_or(fuzzyqm::tol::RECON);
    let sic = c.dim == 2;
    let frame = if sic {
        sic_qubit()
    } else {
        random_ic_povm(c.dim, &mut sub_rng(c.seed, 0))?
    };
    let named = state.map(|s| parse_state(s, &frame)).transpose()?;

    let mut rng = sub_rng(c.seed, 1);
    let mut table = Table::new(&["sample", "min_coefficient", "has_negative"]);
    let mut flagged = 0usize;
    let mut witness: Option<(f64, PureState, Vec<f64>)> = None;
    let mut worst_gap = 0.0f64;
    for j in 0..samples {
        let psi = haar_state(c.dim, &mut rng);
        let rho = DensityOperator::pure(&psi);
        let pd = pseudo_distribution(&rho, &frame)?;
        if sic {
            worst_gap = worst_gap.max(sic_closed_form_gap(&rho, &pd.coefficients)?);
        }
        if pd.has_negative {
            flagged += 1;
        }
        if witness.as_ref().is_none_or(|(m, _, _)| pd.min < *m) {
            witness = Some((pd.min, psi, pd.coefficients.clone()));
        }
        table.push(vec![j.to_string(), num(pd.min), pd.has_negative.to_string()]);
    }
    let fraction = flagged as f64 / samples as f64;
    let (most_negative, witness_state, witness_coefficients) = witness.expect("samples >= 1");

    let mixed = DensityOperator::maximally_mixed(c.dim);
    let mixed_pd = pseudo_distribution(&mixed, &frame)?;

    let requested = match &named {
        Some(n) => {
            let rho = named_density(n, &frame);
            let pd = pseudo_distribution(&rho, &frame)?;
            if sic {
                worst_gap = worst_gap.max(sic_closed_form_gap(&rho, &pd.coefficients)?);
            }
            Some(json!({
                "label": state,
                "coefficients": pd.coefficients,
                "min": pd.min,
                "has_negative": pd.has_negative,
            }))
        }
        None => None,
    };

    let pass = fraction > 0.0 && !mixed_pd.has_negative && worst_gap <= tol;
    let mut config = base_config(c);
    config.insert("samples".into(), json!(samples));
    config.insert("state".into(), json!(state));
    config.insert("tolerance".into(), json!(tol));
    config.insert("negativity_threshold".into(), json!(fuzzyqm::tol::NEGATIVITY));
    let results = json!({
        "frame": if sic { "sic" } else { "random" },
        "gram_condition": frame.gram().condition,
        "samples": samples,
        "negative_count": flagged,
        "fraction_negative": fraction,
        "most_negative": most_negative,
        "witness": {
            "state": VectorJson::from(witness_state.amplitudes()),
            "coefficients": witness_coefficients,
        },
        "maximally_mixed": {
            "coefficients": mixed_pd.coefficients,
            "has_negative": mixed_pd.has_negative,
        },
        "closed_form_gap": sic.then_some(worst_gap),
        "requested_state": requested,
    });
    Ok(Report::new("negativity", config.into(), results, pass, table))
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
struct Residuals {
    resolution: f64,
    transport: f64,
    extension: f64,
    representation: f64,
}

impl Residuals {
    fn absorb(&mut self, o: &Residuals) {
        self.resolution = self.resolution.max(o.resolution);
        self.transport = self.transport.max(o.transport);
        self.extension = self.extension.max(o.extension);
        self.representation = self.representation.max(o.representation);
    }
}

struct TrialSetup {
    dim: usize,
    outcomes: usize,
    kraus: KrausKind,
    atoms: usize,
    points: usize,
}

fn update_trial(setup: &TrialSetup, rng: &mut impl Rng) -> Result<(Residuals, usize), Failure> {
    let n = setup.dim;
    let rho = random_density(n, rng);
    let povm = random_povm(n, setup.outcomes, rng);
    let op = match setup.kraus {
        KrausKind::Luders => KrausOperation::luders(&povm),
        KrausKind::UnitaryTwirl => twirled_kraus(&povm, rng),
    };
    let collapse = full_collapse_decomposition(&rho, &op)?;
    let flagged = collapse
        .outcomes
        .iter()
        .filter(|o| o.readjustment.as_ref().is_some_and(|r| r.flagged))
        .count();

    let priors = [
        eigen_decomposition_state(&rho),
        random_decomposition(&rho, setup.atoms, rng)?,
        ClassicalState::delta(haar_state(n, rng)),
    ];
    let mut extension = 0.0f64;
    for prior in &priors {
        for d in 0..op.outcomes() {
            match extension_update(prior, &op, d) {
                Ok(r) => extension = extension.max(r.residual),
                Err(Error::ZeroEvidence(_) | Error::ZeroProbabilityOutcome(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    let points: Vec<PureState> = (0..setup.points).map(|_| haar_state(n, rng)).collect();
    let mut representation = 0.0f64;
    for e in povm.effects() {
        representation = representation.max(representation_update(&rho, e, &points)?);
    }
    Ok((
        Residuals {
            resolution: collapse.mixture_residual,
            transport: collapse.max_transport_residual,
            extension,
            representation,
        },
        flagged,
    ))
}

pub fn update_verify(c: &Common, outcomes: usize, kraus: KrausKind, atoms: Option<usize>) -> Result<Report, Failure> {
    check_common(c)?;
    if !(1..=64).contains(&outcomes) {
        return config_error(format!("--outcomes must be in 1..=64, got {outcomes}"));
    }
    let atoms = atoms.unwrap_or(c.dim + 2);
    if atoms < c.dim {
        return config_error(format!("--atoms must be at least --dim ({}) for full-rank states", c.dim));
    }
    let trials = c.trials.unwrap_or(100);
    let setup = TrialSetup {
        dim: c.dim,
        outcomes,
        kraus,
        atoms,
        points: c.samples.unwrap_or(100),
    };
    let tolerances = match c.tol {
        Some(t) => Residuals {
            resolution: t,
            transport: t,
            extension: t,
            representation: t,
        },
        None => Residuals {
            resolution: fuzzyqm::update::RESOLUTION_TOL,
            transport: fuzzyqm::update::TRANSPORT_TOL,
            extension: fuzzyqm::update::TRANSPORT_TOL,
            representation: fuzzyqm::update::TRANSPORT_TOL,
        },
    };

    // Each trial draws from its own stream, so threads cannot change results.
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(trials);
    let per_trial: Vec<Result<(Residuals, usize), Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let setup = &setup;
                scope.spawn(move || {
                    (w..trials)
                        .step_by(workers)
                        .map(|t| (t, update_trial(setup, &mut sub_rng(c.seed, t as u64))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect();
        all.sort_by_key(|(t, _)| *t);
        all.into_iter().map(|(_, r)| r).collect()
    });

    let mut worst = Residuals::default();
    let mut flagged = 0usize;
    let mut table = Table::new(&["trial", "resolution", "transport", "extension", "representation"]);
    for (t, r) in per_trial.into_iter().enumerate() {
        let (res, f) = r?;
        worst.absorb(&res);
        flagged += f;
        table.push(vec![
            t.to_string(),
            num(res.resolution),
            num(res.transport),
            num(res.extension),
            num(res.representation),
        ]);
    }
    let pass = worst.resolution <= tolerances.resolution
        && worst.transport <= tolerances.transport
        && worst.extension <= tolerances.extension
        && worst.representation <= tolerances.representation;

    let mut config = base_config(c);
    config.insert("trials".into(), json!(trials));
    config.insert("outcomes".into(), json!(outcomes));
    config.insert("kraus".into(), json!(kraus));
    config.insert("atoms".into(), json!(atoms));
    config.insert("test_points".into(), json!(setup.points));
    config.insert("tolerances".into(), json!(tolerances));
    let results = json!({
        "max_residuals": worst,
        "tolerances": tolerances,
        "flagged_readjustments": flagged,
    });
    Ok(Report::new("update-verify", config.into(), results, pass, table))
}

#[derive(Deserialize)]
struct ScenarioShorthand {
    state: BellState,
    angles_deg: [f64; 4],
}

fn bell_state(s: BellState) -> DensityOperator {
    match s {
        BellState::Singlet => singlet(),
        BellState::Product => product_state(&PureState::basis(2, 0), &PureState::basis(2, 0)),
    }
}

fn load_scenario(path: &PathBuf) -> Result<ChshScenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("reading {}: {e}", path.display())))?;
    if let Ok(s) = serde_json::from_str::<ChshScenario>(&text) {
        return Ok(s);
    }
    let short: ScenarioShorthand = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: not a scenario: {e}", path.display())))?;
    Ok(ChshScenario::from_angles(bell_state(short.state), short.angles_deg)?)
}

pub fn bell(c: &Common, angles: Option<Vec<f64>>, state: BellState, scenario: Option<PathBuf>) -> Result<Report, Failure> {
    check_common(c)?;
    let tol = c.tol.unwrap_or(1e-12);
    let angles: [f64; 4] = match angles {
        None => OPTIMAL_ANGLES_DEG,
        Some(v) => match <[f64; 4]>::try_from(v) {
            Ok(a) if a.iter().all(|x| x.is_finite()) => a,
            _ => return config_error("--angles takes four finite numbers"),
        },
    };
    let (s, source) = match &scenario {
        Some(path) => (load_scenario(path)?, json!({ "file": path.display().to_string() })),
        None => (
            ChshScenario::from_angles(bell_state(state), angles)?,
            json!({ "state": state, "angles_deg": angles }),
        ),
    };
    let report = chsh_report(&s)?;
    let mut table = Table::new(&["setting", "quantum", "classical_extension"]);
    for row in &report.correlators {
        table.push(vec![row.setting.clone(), num(row.quantum), num(row.classical_extension)]);
    }
    let pass = report.path_gap <= tol && report.violates();

    let mut config = base_config(c);
    config.insert("scenario".into(), source);
    config.insert("path_tolerance".into(), json!(tol));
    let results = json!({
        "chsh": report,
        "violation": report.violates(),
        "path_tolerance": tol,
    });
    Ok(Report::new("bell", config.into(), results, pass, table))
}

pub fn smearing(c: &Common) -> Result<Report, Failure> {
    check_common(c)?;
    let samples = c.samples.unwrap_or(100_000);
    let tol = c.tol.unwrap_or(0.05);
    let atomic_tol = 1e-12;

    let mut rng = sub_rng(c.seed, 0);
    let atoms: Vec<PureState> = (0..8).map(|_| haar_state(c.dim, &mut rng)).collect();
    let raw: Vec<f64> = (0..atoms.len()).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let prior = ClassicalState::from_parts(&weights, &atoms)?;
    let points: Vec<PureState> = (0..100).map(|_| haar_state(c.dim, &mut rng)).collect();
    let atomic = smearing_check(&prior, &points)?;

    let sample = uniform_povm_sample(c.dim, samples, c.seed)?;
    let deviation = sample.identity_deviation();
    let rho = random_density(c.dim, &mut sub_rng(c.seed, 1));
    let mut table = Table::new(&["index", "weight", "value"]);
    let mut mass = 0.0;
    for (j, w) in sample.atoms().iter().enumerate() {
        let value = uniform_density(&rho, w)?;
        mass += value * sample.weight();
        table.push(vec![j.to_string(), num(sample.weight()), num(value)]);
    }

    let pass = atomic <= atomic_tol && deviation <= tol;
    let mut config = base_config(c);
    config.insert("samples".into(), json!(samples));
    config.insert("tolerance".into(), json!(tol));
    config.insert("atomic_tolerance".into(), json!(atomic_tol));
    let results = json!({
        "atomic_check": { "atoms": atoms.len(), "test_points": points.len(), "max_error": atomic },
        "uniform_sample": {
            "samples": samples,
            "identity_deviation": deviation,
            "probability_mass": mass,
        },
        "tolerance": tol,
        "atomic_tolerance": atomic_tol,
    });
    Ok(Report::new("smearing", config.into(), results, pass, table))
}

//! End-to-end invariant suite behind `ngm verify`.

use ngm_core::minorlimit::{
    assemble_limit_inverse, default_schedule, det_affine_coeffs, limit_minor_inverse,
    row_col_decay, spectral_limit,
};
use ngm_core::ngm::{dfe_threshold_check, r0, remove_compartment};
use ngm_core::relapse::{
    build_coupled_ngm, build_uncoupled_ngm, iterated_removal, r0_coupled_closed,
    r0_uncoupled_closed, relapse_limit_experiment,
};
use ngm_core::{eigenvalues, Complex64, DiagonalRay, HostParams, Matrix, NgmPair, VectorParams};
use rand::Rng;
use serde::Serialize;

use crate::corpus;

/// Matrices in the determinant and convergence corpus.
pub const MATRIX_CASES: usize = 200;
/// Rays with `‖A_[i,i]⁻¹‖∞ · ‖A‖∞` above this are left out of the
/// convergence checks.
pub const MAX_MINOR_INVERSE_SCALE: f64 = 100.0;
pub const SPECTRAL_CASES: usize = 100;
pub const CLOSED_FORM_DRAWS: usize = 500;
pub const COUPLING_DRAWS: usize = 20;
pub const CHAIN_DRAWS: usize = 10;
pub const THRESHOLD_DRAWS: usize = 200;

/// Deliberate defects used to check that the suite catches them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Adds `1e-3` to the vector-to-host entry of every coupled `F`.
    CoupledBuilder,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    /// Acceptance criterion the property belongs to.
    pub criterion: u8,
    pub cases: usize,
    /// Cases that raised a numerical error instead of producing a value.
    pub errors: usize,
    /// Largest observed value of the checked quantity.
    pub worst: f64,
    /// `worst` must not exceed this.
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub failed: Vec<&'static str>,
    pub properties: Vec<PropertyResult>,
}

struct Tally {
    name: &'static str,
    criterion: u8,
    tolerance: f64,
    cases: usize,
    errors: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, criterion: u8, tolerance: f64) -> Self {
        Self {
            name,
            criterion,
            tolerance,
            cases: 0,
            errors: 0,
            worst: 0.0,
        }
    }

    fn observe(&mut self, value: f64) {
        self.cases += 1;
        if value.is_nan() || value > self.worst {
            self.worst = if value.is_nan() { f64::INFINITY } else { value };
        }
    }

    fn record<T>(&mut self, value: ngm_core::Result<T>, metric: impl FnOnce(T) -> f64) {
        match value {
            Ok(v) => self.observe(metric(v)),
            Err(_) => self.error(),
        }
    }

    fn error(&mut self) {
        self.cases += 1;
        self.errors += 1;
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name,
            criterion: self.criterion,
            cases: self.cases,
            errors: self.errors,
            worst: self.worst,
            tolerance: self.tolerance,
            passed: self.errors == 0 && self.cases > 0 && self.worst <= self.tolerance,
        }
    }
}

fn rel(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((k, d)) = best {
            used[k] = true;
            worst = worst.max(d);
        }
    }
    worst
}

fn coupled(
    h1: &HostParams,
    h2: &HostParams,
    vector: &VectorParams,
    stages1: usize,
    stages2: usize,
    fault: Option<Fault>,
) -> ngm_core::Result<NgmPair> {
    let pair = build_coupled_ngm(h1, h2, vector, stages1, stages2)?;
    match fault {
        None => Ok(pair),
        Some(Fault::CoupledBuilder) => {
            let m = pair.dim();
            let f = pair.f().set_entry(1, m, pair.f().entry(1, m) + 1e-3)?;
            NgmPair::new(f, pair.v().clone(), pair.labels().to_vec())
        }
    }
}

/// Ray corpus: one random matrix per case, every diagonal index.
fn matrix_corpus(seed: u64) -> Vec<Matrix> {
    let mut rng = corpus::stream(seed, 1);
    (0..MATRIX_CASES)
        .map(|_| {
            let n = rng.gen_range(2..=6);
            corpus::uniform_matrix(&mut rng, n)
        })
        .collect()
}

fn decade_schedule(a: &Matrix) -> Vec<f64> {
    (2..=8).map(|k| a.inf_norm() * 10f64.powi(k)).collect()
}

fn determinant_section(corpus: &[Matrix], out: &mut Vec<PropertyResult>) {
    let mut cof = Tally::new("determinant_vs_cofactor", 1, 1e-10);
    let mut affine = Tally::new("affine_determinant", 1, 1e-8);
    let mut slope = Tally::new("affine_slope", 1, 1e-10);
    for a in corpus {
        cof.record(
            a.determinant().and_then(|d| Ok((d, a.cofactor_det()?))),
            |(d, c)| (d - c).abs() / c.abs().max(1.0),
        );
        for i in 1..=a.rows() {
            let ray = DiagonalRay::new(a.clone(), i).expect("square corpus");
            let coeffs = det_affine_coeffs(&ray);
            for t in [-10.0, 0.0, 7.0, 1e3] {
                let exact = ray.at(t).and_then(|m| m.cofactor_det());
                affine.record(
                    coeffs.clone().and_then(|c| Ok((c, exact?))),
                    |((s, b), d)| rel(s * t + b, d),
                );
            }
            slope.record(
                coeffs.and_then(|(s, _)| Ok((s, ray.minor().cofactor_det()?))),
                |(s, d)| rel(s, d),
            );
        }
    }
    out.extend([cof.finish(), affine.finish(), slope.finish()]);
}

fn convergence_section(corpus: &[Matrix], out: &mut Vec<PropertyResult>) {
    let mut final_err = Tally::new("minor_inverse_final_error", 2, 1e-6);
    // error(10t)/error(t) ∈ [0.05, 0.2] ⇔ |log10 ratio + 1| ≤ log10 2
    let mut ratio = Tally::new("decade_ratio", 2, 2f64.log10());
    let mut gain = Tally::new("richardson_gain", 2, 0.1);
    let mut decay = Tally::new("row_col_decay", 3, 2.0);
    for a in corpus {
        for i in 1..=a.rows() {
            let ray = DiagonalRay::new(a.clone(), i).expect("square corpus");
            let Ok(minor_inv) = ray.minor().inverse() else {
                continue;
            };
            if minor_inv.inf_norm() * a.inf_norm() > MAX_MINOR_INVERSE_SCALE {
                continue;
            }
            let schedule = decade_schedule(a);
            match limit_minor_inverse(&ray, &schedule) {
                Ok(lim) => {
                    let errors: Vec<f64> = lim
                        .report
                        .points
                        .iter()
                        .map(|p| p.error.unwrap_or(f64::NAN))
                        .collect();
                    let last = errors[errors.len() - 1];
                    final_err.observe(last / minor_inv.max_abs());
                    for w in errors.windows(2) {
                        ratio.observe(((w[1] / w[0]).log10() + 1.0).abs());
                    }
                    gain.observe(lim.report.final_extrapolated_error().unwrap_or(f64::NAN) / last);
                }
                Err(_) => final_err.error(),
            }
            let t0 = schedule[0];
            let fitted = row_col_decay(&ray, t0).map(|(r, c)| r.max(c) * t0);
            for &t in &schedule {
                decay.record(
                    fitted
                        .clone()
                        .and_then(|c| Ok((c, row_col_decay(&ray, t)?))),
                    |(c, (r, k))| if c == 0.0 { 0.0 } else { r.max(k) * t / c },
                );
            }
        }
    }
    out.extend([
        final_err.finish(),
        ratio.finish(),
        gain.finish(),
        decay.finish(),
    ]);
}

fn spectral_section(seed: u64, out: &mut Vec<PropertyResult>) {
    let mut rng = corpus::stream(seed, 4);
    let mut final_err = Tally::new("spectral_limit_final_error", 4, 1e-6);
    let mut identity = Tally::new("spectrum_identity", 4, 1e-6);
    for _ in 0..SPECTRAL_CASES {
        let n = rng.gen_range(2..=6);
        let pair = corpus::compartmental_pair(&mut rng, n);
        let i = rng.gen_range(1..=n);
        let ray = DiagonalRay::new(pair.v().clone(), i).expect("square V");
        let schedule = default_schedule(pair.v());
        final_err.record(spectral_limit(pair.f(), &ray, &schedule), |lim| {
            lim.report.final_error().unwrap_or(f64::NAN)
        });
        let spectra: ngm_core::Result<_> = (|| {
            let lim = limit_minor_inverse(&ray, &schedule)?;
            let assembled = assemble_limit_inverse(&lim.estimate, i)?;
            let full = eigenvalues(&pair.f().matmul(&assembled)?)?;
            let mut reduced =
                eigenvalues(&remove_compartment(&pair, i)?.next_generation_matrix()?)?.into_vec();
            reduced.push(Complex64::new(0.0, 0.0));
            Ok((full, reduced))
        })();
        identity.record(spectra, |(full, reduced)| {
            multiset_distance(full.values(), &reduced)
        });
    }
    out.extend([final_err.finish(), identity.finish()]);
}

fn closed_form_section(seed: u64, out: &mut Vec<PropertyResult>) {
    let mut rng = corpus::stream(seed, 5);
    let mut tally = Tally::new("closed_form_vs_spectral", 5, 1e-10);
    for _ in 0..CLOSED_FORM_DRAWS {
        let host = corpus::host_params(&mut rng, 6);
        let vector = corpus::vector_params(&mut rng);
        for j in 1..=6 {
            let pair = build_uncoupled_ngm(&host, &vector, j);
            let closed = r0_uncoupled_closed(&host, &vector, j);
            tally.record(pair.and_then(|p| Ok((r0(&p)?, closed?.value))), |(s, c)| {
                rel(s, c)
            });
        }
    }
    out.push(tally.finish());
}

fn coupling_section(seed: u64, fault: Option<Fault>, out: &mut Vec<PropertyResult>) {
    let mut rng = corpus::stream(seed, 6);
    let mut pythagorean = Tally::new("pythagorean_coupling", 6, 1e-10);
    let mut mixed = Tally::new("mixed_stage_coupling", 6, 1e-10);
    for _ in 0..COUPLING_DRAWS {
        let h1 = corpus::host_params(&mut rng, 5);
        let h2 = corpus::host_params(&mut rng, 5);
        let vector = corpus::vector_params(&mut rng);
        for j in 1..=5 {
            let squared: ngm_core::Result<_> = (|| {
                let r = r0(&coupled(&h1, &h2, &vector, j, j, fault)?)?;
                let r1 = r0_uncoupled_closed(&h1, &vector, j)?.value;
                let r2 = r0_uncoupled_closed(&h2, &vector, j)?.value;
                Ok((r * r, r1 * r1 + r2 * r2))
            })();
            pythagorean.record(squared, |(lhs, rhs)| rel(lhs, rhs));
            for k in 1..=5 {
                let pair = coupled(&h1, &h2, &vector, k, j, fault);
                let closed = r0_coupled_closed(&h1, &h2, &vector, k, j);
                mixed.record(pair.and_then(|p| Ok((r0(&p)?, closed?.value))), |(s, c)| {
                    rel(s, c)
                });
            }
        }
    }
    out.extend([pythagorean.finish(), mixed.finish()]);
}

fn chain_section(seed: u64, out: &mut Vec<PropertyResult>) {
    let mut rng = corpus::stream(seed, 7);
    let mut chain = Tally::new("relapse_limit_chain", 7, 1e-8);
    let mut removal = Tally::new("iterated_removal", 7, 1e-8);
    for _ in 0..CHAIN_DRAWS {
        let h1 = corpus::host_params(&mut rng, 4);
        let h2 = corpus::host_params(&mut rng, 4);
        let vector = corpus::vector_params(&mut rng);
        for j in 2..=4 {
            chain.record(relapse_limit_experiment(&h1, &h2, &vector, j, None), |e| {
                e.limit
                    .report
                    .final_extrapolated_error()
                    .unwrap_or(f64::NAN)
            });
            for k in 1..j {
                let steps = iterated_removal(&h1, &h2, &vector, j, k, None);
                let target = r0_coupled_closed(&h1, &h2, &vector, k, j);
                removal.record(
                    steps.and_then(|s| Ok((s, target?.value))),
                    |(steps, target)| {
                        let last = steps.last().expect("k < j gives at least one step");
                        let step_worst = steps
                            .iter()
                            .map(|s| rel(s.experiment.limit.estimate, s.experiment.closed_form))
                            .fold(0.0, f64::max);
                        step_worst.max(rel(last.experiment.limit.estimate, target))
                    },
                );
            }
        }
    }
    out.extend([chain.finish(), removal.finish()]);
}

fn threshold_section(seed: u64, fault: Option<Fault>, out: &mut Vec<PropertyResult>) {
    let mut rng = corpus::stream(seed, 8);
    let mut tally = Tally::new("threshold_consistency", 8, 0.0);
    for _ in 0..THRESHOLD_DRAWS {
        let stages1 = rng.gen_range(1..=4);
        let stages2 = rng.gen_range(1..=4);
        let h1 = corpus::host_params(&mut rng, stages1);
        let h2 = corpus::host_params(&mut rng, stages2);
        let mut vector = corpus::vector_params(&mut rng);
        let target = corpus::log_uniform(&mut rng, 0.2, 5.0);
        let report: ngm_core::Result<_> = (|| {
            // R0 is linear in the biting rate
            vector.f *= target / r0(&coupled(&h1, &h2, &vector, stages1, stages2, fault)?)?;
            dfe_threshold_check(&coupled(&h1, &h2, &vector, stages1, stages2, fault)?)
        })();
        tally.record(report, |r| if r.consistent { 0.0 } else { 1.0 });
    }
    out.push(tally.finish());
}

/// Runs every section on the corpus generated from `seed`.
pub fn run(seed: u64, fault: Option<Fault>) -> VerifyReport {
    let mut properties = Vec::new();
    let matrices = matrix_corpus(seed);
    determinant_section(&matrices, &mut properties);
    convergence_section(&matrices, &mut properties);
    spectral_section(seed, &mut properties);
    closed_form_section(seed, &mut properties);
    coupling_section(seed, fault, &mut properties);
    chain_section(seed, &mut properties);
    threshold_section(seed, fault, &mut properties);
    let failed: Vec<_> = properties
        .iter()
        .filter(|p| !p.passed)
        .map(|p| p.name)
        .collect();
    VerifyReport {
        seed,
        passed: failed.is_empty(),
        failed,
        properties,
    }
}

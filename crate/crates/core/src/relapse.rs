//! Relapsing vector-borne disease models.
//!
//! A host species with `j` infected stages `I_1 → … → I_j` (so `j − 1`
//! relapses) shares a single vector compartment `I_v`. With `α_0` the
//! inflow weight, `α_l` the exit rate of stage `l` and `μ_l` its removal
//! rate, the reproduction number of one host with the vector is
//!
//! ```text
//! R0 = f · sqrt( c c_v S̄_v / (μ̃ S̄) · Σ_{k=1..j} Π_{l=1..k} α_{l−1} / (α_l + μ_l) )
//! ```
//!
//! and two hosts sharing the vector combine as `sqrt(R0₁² + R0₂²)`.
//!
//! The builders below produce a next-generation pair whose spectral radius
//! equals that closed form: `V` is a lower-bidiagonal progression chain per
//! species followed by the vector mortality `μ̃`, and `F` couples the vector
//! to the first stage of each host and every host stage to the vector.

use serde::{Deserialize, Serialize};

use crate::densela::Matrix;
use crate::error::{Error, Result};
use crate::minorlimit::{
    default_schedule, spectral_limit_to, ConvergenceReport, DiagonalRay, SpectralLimit,
};
use crate::ngm::{r0, remove_compartment, NgmPair};

/// Parameters of one host species.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostParams {
    /// Transmission weight `c_i`.
    pub c: f64,
    /// Equilibrium susceptible host density `S̄_i`.
    pub s_bar: f64,
    /// `α_{i,0}, …, α_{i,j}`; one longer than `mu`.
    pub alpha: Vec<f64>,
    /// `μ_{i,1}, …, μ_{i,j}`.
    pub mu: Vec<f64>,
}

/// Parameters of the shared vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorParams {
    /// Biting rate.
    pub f: f64,
    pub c_v: f64,
    /// Equilibrium susceptible vector density `S̄_v`.
    pub s_v_bar: f64,
    /// Vector mortality `μ̃`.
    pub mu_tilde: f64,
}

fn check_rate(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::rejected(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

impl HostParams {
    pub fn new(c: f64, s_bar: f64, alpha: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let host = Self {
            c,
            s_bar,
            alpha,
            mu,
        };
        host.validate()?;
        Ok(host)
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("c", self.c)?;
        check_rate("s_bar", self.s_bar)?;
        if self.mu.is_empty() {
            return Err(Error::rejected("mu must list at least one stage"));
        }
        if self.alpha.len() != self.mu.len() + 1 {
            return Err(Error::rejected(format!(
                "alpha needs {} entries for {} stages, got {}",
                self.mu.len() + 1,
                self.mu.len(),
                self.alpha.len()
            )));
        }
        for (k, a) in self.alpha.iter().enumerate() {
            check_rate(&format!("alpha[{k}]"), *a)?;
        }
        for (k, m) in self.mu.iter().enumerate() {
            check_rate(&format!("mu[{}]", k + 1), *m)?;
        }
        Ok(())
    }

    /// Number of infected stages available.
    pub fn stages(&self) -> usize {
        self.mu.len()
    }

    /// `α_{l−1} / (α_l + μ_l)` for stage `l` (1-based).
    fn stage_ratio(&self, l: usize) -> f64 {
        self.alpha[l - 1] / (self.alpha[l] + self.mu[l - 1])
    }

    /// `Σ_{k=1..j} Π_{l=1..k} α_{l−1}/(α_l + μ_l)`.
    pub fn stage_sum(&self, j: usize) -> f64 {
        (1..=j)
            .scan(1.0, |prod, l| {
                *prod *= self.stage_ratio(l);
                Some(*prod)
            })
            .sum()
    }

    fn require_stages(&self, j: usize, who: &str) -> Result<()> {
        self.validate()?;
        if j == 0 || j > self.stages() {
            return Err(Error::rejected(format!(
                "{who}: {j} stages requested but parameters cover 1..={}",
                self.stages()
            )));
        }
        Ok(())
    }
}

impl VectorParams {
    pub fn validate(&self) -> Result<()> {
        check_rate("f", self.f)?;
        check_rate("c_v", self.c_v)?;
        check_rate("s_v_bar", self.s_v_bar)?;
        check_rate("mu_tilde", self.mu_tilde)
    }
}

/// How an [`R0Result`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum R0Method {
    ClosedForm,
    Spectral,
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct R0Result {
    pub value: f64,
    pub method: R0Method,
    pub detail: Option<ConvergenceReport>,
}

impl R0Result {
    fn closed(value: f64) -> Self {
        Self {
            value,
            method: R0Method::ClosedForm,
            detail: None,
        }
    }
}

/// Closed-form reproduction number of one host with `j` stages and the vector.
pub fn r0_uncoupled_closed(host: &HostParams, vector: &VectorParams, j: usize) -> Result<R0Result> {
    host.require_stages(j, "host")?;
    vector.validate()?;
    let weight = host.c * vector.c_v * vector.s_v_bar / (vector.mu_tilde * host.s_bar);
    Ok(R0Result::closed(
        vector.f * (weight * host.stage_sum(j)).sqrt(),
    ))
}

/// `sqrt(r1² + r2²)`.
pub fn combine_r0(r1: f64, r2: f64) -> f64 {
    r1.hypot(r2)
}

/// Closed form for two hosts with `stages1` and `stages2` infected stages.
pub fn r0_coupled_closed(
    host1: &HostParams,
    host2: &HostParams,
    vector: &VectorParams,
    stages1: usize,
    stages2: usize,
) -> Result<R0Result> {
    let r1 = r0_uncoupled_closed(host1, vector, stages1)?.value;
    let r2 = r0_uncoupled_closed(host2, vector, stages2)?.value;
    Ok(R0Result::closed(combine_r0(r1, r2)))
}

/// Spectral `R0` of a pair, tagged with its method.
pub fn r0_spectral(pair: &NgmPair) -> Result<R0Result> {
    Ok(R0Result {
        value: r0(pair)?,
        method: R0Method::Spectral,
        detail: None,
    })
}

/// Writes one host's stage chain into `f` and `v` starting at row `offset`.
fn place_host(
    f: &mut Matrix,
    v: &mut Matrix,
    host: &HostParams,
    vector: &VectorParams,
    stages: usize,
    offset: usize,
) {
    let vec_idx = f.rows() - 1;
    for l in 1..=stages {
        let r = offset + l - 1;
        *v.at_mut(r, r) = host.alpha[l] + host.mu[l - 1];
        if l > 1 {
            *v.at_mut(r, r - 1) = -host.alpha[l - 1];
        }
        *f.at_mut(vec_idx, r) = vector.f * vector.c_v * vector.s_v_bar / host.s_bar;
    }
    *f.at_mut(offset, vec_idx) = vector.f * host.c * host.alpha[0];
}

fn stage_labels(prefix: &str, stages: usize) -> impl Iterator<Item = String> + '_ {
    (1..=stages).map(move |l| format!("{prefix}{l}"))
}

/// Pair for one host with `j` stages: labels `I1..Ij, Iv`.
pub fn build_uncoupled_ngm(host: &HostParams, vector: &VectorParams, j: usize) -> Result<NgmPair> {
    host.require_stages(j, "host")?;
    vector.validate()?;
    let m = j + 1;
    let mut f = Matrix::zeros(m, m);
    let mut v = Matrix::zeros(m, m);
    place_host(&mut f, &mut v, host, vector, j, 0);
    *v.at_mut(j, j) = vector.mu_tilde;
    let labels = stage_labels("I", j).chain(["Iv".to_string()]).collect();
    NgmPair::new(f, v, labels)
}

/// Pair for two hosts: species-1 stages, then species-2 stages, then the vector.
pub fn build_coupled_ngm(
    host1: &HostParams,
    host2: &HostParams,
    vector: &VectorParams,
    stages1: usize,
    stages2: usize,
) -> Result<NgmPair> {
    host1.require_stages(stages1, "host1")?;
    host2.require_stages(stages2, "host2")?;
    vector.validate()?;
    let m = stages1 + stages2 + 1;
    let mut f = Matrix::zeros(m, m);
    let mut v = Matrix::zeros(m, m);
    place_host(&mut f, &mut v, host1, vector, stages1, 0);
    place_host(&mut f, &mut v, host2, vector, stages2, stages1);
    *v.at_mut(m - 1, m - 1) = vector.mu_tilde;
    let labels = stage_labels("H1.I", stages1)
        .chain(stage_labels("H2.I", stages2))
        .chain(["Iv".to_string()])
        .collect();
    NgmPair::new(f, v, labels)
}

/// Removal of species-1's last stage from the `(j, j)` system through the
/// limit `α_{1,j} → ∞`.
#[derive(Clone, Debug, Serialize)]
pub struct LimitExperiment {
    /// Species-1 stage count before removal.
    pub stages1: usize,
    pub stages2: usize,
    /// Index of the driven diagonal entry of `V` (1-based).
    pub index: usize,
    /// Closed-form `R0` of the reduced system, the target of the report.
    pub closed_form: f64,
    /// `R0` of the pair with the compartment deleted outright.
    pub removed_spectral: f64,
    pub limit: SpectralLimit,
}

impl LimitExperiment {
    pub fn result(&self) -> R0Result {
        R0Result {
            value: self.limit.estimate,
            method: R0Method::Limit,
            detail: Some(self.limit.report.clone()),
        }
    }
}

/// Drives species-1's stage `stages1` out of the `(stages1, stages2)` pair.
fn limit_step(
    pair: &NgmPair,
    host1: &HostParams,
    host2: &HostParams,
    vector: &VectorParams,
    stages1: usize,
    stages2: usize,
    schedule: Option<&[f64]>,
) -> Result<LimitExperiment> {
    if stages1 < 2 {
        return Err(Error::rejected(
            "species 1 needs at least two stages for a stage to be removed",
        ));
    }
    let index = stages1;
    let closed_form = r0_coupled_closed(host1, host2, vector, stages1 - 1, stages2)?.value;
    let removed_spectral = r0(&remove_compartment(pair, index)?)?;
    let ray = DiagonalRay::new(pair.v().clone(), index)?;
    let owned;
    let schedule = match schedule {
        Some(s) => s,
        None => {
            owned = default_schedule(pair.v());
            &owned
        }
    };
    let limit = spectral_limit_to(pair.f(), &ray, schedule, closed_form)?;
    Ok(LimitExperiment {
        stages1,
        stages2,
        index,
        closed_form,
        removed_spectral,
        limit,
    })
}

/// Builds the `(j, j)` coupled system and sends species-1's stage-`j` exit
/// rate to infinity, comparing with the closed form for `(j − 1, j)`.
///
/// `schedule` defaults to `‖V‖∞ · 10^k`, `k = 1..=8`.
pub fn relapse_limit_experiment(
    host1: &HostParams,
    host2: &HostParams,
    vector: &VectorParams,
    j: usize,
    schedule: Option<&[f64]>,
) -> Result<LimitExperiment> {
    if j < 2 {
        return Err(Error::rejected(format!(
            "relapse limit needs j >= 2 (removing a stage from j = {j} would empty species 1)"
        )));
    }
    let pair = build_coupled_ngm(host1, host2, vector, j, j)?;
    limit_step(&pair, host1, host2, vector, j, j, schedule)
}

/// One step of [`iterated_removal`].
#[derive(Clone, Debug, Serialize)]
pub struct RemovalStep {
    pub experiment: LimitExperiment,
    /// `R0` of the freshly built `(stages1 − 1, stages2)` pair, for comparison
    /// with the pair obtained by deleting the compartment.
    pub rebuilt_spectral: f64,
}

/// Starting from the `(j, j)` system, removes species-1 stages one at a time
/// down to `k` stages, running the limit at every step.
pub fn iterated_removal(
    host1: &HostParams,
    host2: &HostParams,
    vector: &VectorParams,
    j: usize,
    k: usize,
    schedule: Option<&[f64]>,
) -> Result<Vec<RemovalStep>> {
    if k == 0 || k >= j {
        return Err(Error::rejected(format!(
            "iterated removal needs 1 <= k < j, got k = {k}, j = {j}"
        )));
    }
    let mut pair = build_coupled_ngm(host1, host2, vector, j, j)?;
    let mut steps = Vec::with_capacity(j - k);
    for s in ((k + 1)..=j).rev() {
        let experiment = limit_step(&pair, host1, host2, vector, s, j, schedule)?;
        pair = remove_compartment(&pair, s)?;
        let rebuilt_spectral = r0(&build_coupled_ngm(host1, host2, vector, s - 1, j)?)?;
        steps.push(RemovalStep {
            experiment,
            rebuilt_spectral,
        });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_vector() -> VectorParams {
        VectorParams {
            f: 1.0,
            c_v: 1.0,
            s_v_bar: 1.0,
            mu_tilde: 1.0,
        }
    }

    fn unit_host() -> HostParams {
        HostParams::new(1.0, 1.0, vec![2.0, 1.0], vec![1.0]).unwrap()
    }

    fn host3() -> HostParams {
        HostParams::new(0.7, 1.3, vec![1.5, 2.0, 0.8, 3.1], vec![0.2, 0.4, 0.1]).unwrap()
    }

    fn vector() -> VectorParams {
        VectorParams {
            f: 0.6,
            c_v: 0.9,
            s_v_bar: 2.5,
            mu_tilde: 0.3,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn unit_example_is_one() {
        let r = r0_uncoupled_closed(&unit_host(), &unit_vector(), 1).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.method, R0Method::ClosedForm);
        let pair = build_uncoupled_ngm(&unit_host(), &unit_vector(), 1).unwrap();
        assert_eq!(pair.f().to_rows(), vec![vec![0.0, 2.0], vec![1.0, 0.0]]);
        assert_eq!(pair.v().to_rows(), vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
        assert!((r0(&pair).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn v_is_lower_bidiagonal() {
        let host = host3();
        let pair = build_uncoupled_ngm(&host, &vector(), 3).unwrap();
        let v = pair.v();
        for r in 1..=4 {
            for c in 1..=4 {
                let x = v.entry(r, c);
                match (r, c) {
                    (1, 1) => assert_eq!(x, 2.0 + 0.2),
                    (2, 2) => assert_eq!(x, 0.8 + 0.4),
                    (3, 3) => assert_eq!(x, 3.1 + 0.1),
                    (4, 4) => assert_eq!(x, 0.3),
                    (2, 1) => assert_eq!(x, -2.0),
                    (3, 2) => assert_eq!(x, -0.8),
                    _ => assert_eq!(x, 0.0, "({r},{c})"),
                }
            }
        }
        assert_eq!(pair.labels(), &["I1", "I2", "I3", "Iv"]);
        assert_eq!(pair.m_matrix_warning().unwrap(), None);
    }

    #[test]
    fn spectral_matches_closed_form() {
        let host = host3();
        for j in 1..=3 {
            let closed = r0_uncoupled_closed(&host, &vector(), j).unwrap().value;
            let pair = build_uncoupled_ngm(&host, &vector(), j).unwrap();
            assert!(rel(r0(&pair).unwrap(), closed) <= 1e-12, "j={j}");
        }
    }

    #[test]
    fn telescoping_increment() {
        let (host, vec) = (host3(), vector());
        let r1 = r0_uncoupled_closed(&host, &vec, 1).unwrap().value;
        let r2 = r0_uncoupled_closed(&host, &vec, 2).unwrap().value;
        let weight = host.c * vec.c_v * vec.s_v_bar * vec.f * vec.f / (vec.mu_tilde * host.s_bar);
        let expected = weight * (1.5 / (2.0 + 0.2)) * (2.0 / (0.8 + 0.4));
        assert!(rel(r2 * r2 - r1 * r1, expected) < 1e-12);
        assert!(r2 > r1);
    }

    #[test]
    fn large_last_exit_rate_recovers_shorter_chain() {
        let mut host = host3();
        let short = r0_uncoupled_closed(&host, &vector(), 2).unwrap().value;
        host.alpha[3] = 1e12;
        let long = r0_uncoupled_closed(&host, &vector(), 3).unwrap().value;
        assert!(rel(long, short) < 1e-10);
    }

    #[test]
    fn parameter_validation() {
        assert!(HostParams::new(1.0, 1.0, vec![1.0], vec![1.0]).is_err());
        assert!(HostParams::new(1.0, 1.0, vec![1.0, 1.0], vec![]).is_err());
        assert!(HostParams::new(-1.0, 1.0, vec![1.0, 1.0], vec![1.0]).is_err());
        let err = HostParams::new(1.0, 1.0, vec![1.0, f64::NAN], vec![1.0]).unwrap_err();
        assert!(err.to_string().contains("alpha[1]"));
        let mut bad = unit_vector();
        bad.mu_tilde = 0.0;
        assert!(r0_uncoupled_closed(&unit_host(), &bad, 1).is_err());
        assert!(r0_uncoupled_closed(&unit_host(), &unit_vector(), 2).is_err());
        assert!(r0_uncoupled_closed(&unit_host(), &unit_vector(), 0).is_err());
    }

    #[test]
    fn coupled_layout_and_pythagorean_identity() {
        let (h1, h2, vec) = (host3(), unit_host(), vector());
        let pair = build_coupled_ngm(&h1, &h2, &vec, 2, 1).unwrap();
        assert_eq!(pair.labels(), &["H1.I1", "H1.I2", "H2.I1", "Iv"]);
        let closed = r0_coupled_closed(&h1, &h2, &vec, 2, 1).unwrap().value;
        assert!(rel(r0(&pair).unwrap(), closed) < 1e-12);
        // block structure: no coupling between species chains in V
        assert_eq!(pair.v().entry(3, 2), 0.0);
        assert_eq!(pair.v().entry(2, 3), 0.0);
    }

    #[test]
    fn weak_second_host_decouples() {
        let (h1, mut h2, vec) = (host3(), host3(), vector());
        h2.c = 1e-14;
        let coupled = r0(&build_coupled_ngm(&h1, &h2, &vec, 3, 2).unwrap()).unwrap();
        let alone = r0(&build_uncoupled_ngm(&h1, &vec, 3).unwrap()).unwrap();
        assert!(rel(coupled, alone) < 1e-10);
    }

    #[test]
    fn combine_examples() {
        assert!((combine_r0(0.6, 0.8) - 1.0).abs() < 1e-15);
        assert_eq!(combine_r0(0.0, 0.75), 0.75);
    }

    #[test]
    fn limit_experiment_j2() {
        let (h1, h2, vec) = (host3(), host3(), vector());
        let exp = relapse_limit_experiment(&h1, &h2, &vec, 2, None).unwrap();
        assert_eq!(exp.index, 2);
        assert!(rel(exp.removed_spectral, exp.closed_form) < 1e-12);
        assert!(exp.limit.report.final_error().unwrap() <= 1e-6);
        assert!(exp.limit.report.final_extrapolated_error().unwrap() <= 1e-8);
        let rate = exp.limit.report.fitted_rate.unwrap();
        assert!((0.8..=1.2).contains(&rate), "{rate}");
        assert_eq!(exp.result().method, R0Method::Limit);
    }

    #[test]
    fn limit_experiment_rejects_j1() {
        assert!(
            relapse_limit_experiment(&unit_host(), &unit_host(), &unit_vector(), 1, None).is_err()
        );
    }

    #[test]
    fn iterated_removal_hits_every_closed_form() {
        let (h1, h2, vec) = (host3(), host3(), vector());
        let steps = iterated_removal(&h1, &h2, &vec, 3, 1, None).unwrap();
        assert_eq!(steps.len(), 2);
        for (step, s) in steps.iter().zip([3, 2]) {
            let target = r0_coupled_closed(&h1, &h2, &vec, s - 1, 3).unwrap().value;
            assert_eq!(step.experiment.stages1, s);
            assert!(rel(step.rebuilt_spectral, target) < 1e-12);
            assert!(rel(step.experiment.removed_spectral, target) < 1e-12);
            assert!((step.experiment.limit.estimate - target).abs() < 1e-8);
        }
        assert!(iterated_removal(&h1, &h2, &vec, 3, 3, None).is_err());
    }
}

//! Diagonal-entry limits.
//!
//! For a square `A` and index `i`, let `A(t)` be `A` with `a_ii` replaced by
//! `t`. The determinant of `A(t)` is affine in `t` with slope `det A_[i,i]`,
//! so once the minor is nonsingular `A(t)` is invertible for all large `t`
//! and
//!
//! ```text
//! lim_{t→∞} (A(t)⁻¹)_[i,i] = (A_[i,i])⁻¹,   lim_{t→∞} (A(t)⁻¹)_ik = lim (A(t)⁻¹)_ki = 0.
//! ```
//!
//! Every entry of `A(t)⁻¹` is a ratio of functions affine in `t`, so the
//! error decays like `1/t` and a two-point Richardson step removes the
//! leading term. The routines here evaluate these limits along a schedule
//! of `t` values and report how the error behaves.

use serde::Serialize;

use crate::densela::Matrix;
use crate::eigen::spectral_radius;
use crate::error::{Error, Result};

/// Condition estimates above `1 / (100 ε)` mark a schedule point as unreliable.
pub const CONDITION_LIMIT: f64 = 1.0 / (100.0 * f64::EPSILON);

/// Minimum number of unflagged, nonzero errors needed for a rate fit.
pub const MIN_RATE_POINTS: usize = 3;

/// The family `A(t)`: `base` with diagonal entry `(index, index)` replaced by `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalRay {
    base: Matrix,
    index: usize,
}

impl DiagonalRay {
    /// `index` is 1-based.
    pub fn new(base: Matrix, index: usize) -> Result<Self> {
        if !base.is_square() || base.rows() < 2 {
            return Err(Error::rejected(format!(
                "diagonal ray needs a square matrix of size at least 2, got {}x{}",
                base.rows(),
                base.cols()
            )));
        }
        if !(1..=base.rows()).contains(&index) {
            return Err(Error::rejected(format!(
                "diagonal index {index} out of range 1..={}",
                base.rows()
            )));
        }
        Ok(Self { base, index })
    }

    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.base.rows()
    }

    /// `A(t)`.
    pub fn at(&self, t: f64) -> Result<Matrix> {
        self.base.set_entry(self.index, self.index, t)
    }

    /// `A_[i,i]`, which does not depend on `t`.
    pub fn minor(&self) -> Matrix {
        self.base
            .minor(self.index, self.index)
            .expect("ray invariants guarantee a valid minor")
    }

    /// Inverts `A(t)`, falling back to the system with row and column `i`
    /// scaled by `1/sqrt|t|` when the direct inverse is singular to tolerance
    /// or badly conditioned. Any fallback marks the point as flagged.
    fn invert_at(&self, t: f64) -> Result<(Option<Matrix>, Option<PointFlag>)> {
        let a = self.at(t)?;
        match a.inverse() {
            Ok(inv) if condition(&a, &inv) <= CONDITION_LIMIT => Ok((Some(inv), None)),
            Ok(inv) => Ok((
                Some(self.scaled_inverse(&a, t).unwrap_or(inv)),
                Some(PointFlag::IllConditioned),
            )),
            Err(Error::Singular { .. }) => match self.scaled_inverse(&a, t) {
                Some(inv) => Ok((Some(inv), Some(PointFlag::IllConditioned))),
                None => Ok((None, Some(PointFlag::Singular))),
            },
            Err(e) => Err(e),
        }
    }

    fn scaled_inverse(&self, a: &Matrix, t: f64) -> Option<Matrix> {
        if t.abs() <= 1.0 {
            return None;
        }
        let d = 1.0 / t.abs().sqrt();
        let i = self.index - 1;
        let n = a.rows();
        let mut scaled = a.clone();
        for k in 0..n {
            *scaled.at_mut(i, k) *= d;
            *scaled.at_mut(k, i) *= d;
        }
        // A⁻¹ = D (D A D)⁻¹ D
        let mut inv = scaled.inverse().ok()?;
        for k in 0..n {
            *inv.at_mut(i, k) *= d;
            *inv.at_mut(k, i) *= d;
        }
        Some(inv)
    }
}

fn condition(a: &Matrix, inv: &Matrix) -> f64 {
    a.inf_norm() * inv.inf_norm()
}

/// Why a schedule point was not trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    /// Evaluated through the scaled system; excluded from the rate fit.
    IllConditioned,
    /// `A(t)` could not be inverted; no error recorded.
    Singular,
}

/// One schedule point of a limit computation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplePoint {
    pub t: f64,
    /// Sup-norm distance from the exact limit, `None` if the point was skipped.
    pub error: Option<f64>,
    /// Error of the Richardson extrapolant built from this point and the
    /// previous evaluated one.
    pub extrapolated_error: Option<f64>,
    pub flag: Option<PointFlag>,
}

impl SamplePoint {
    pub fn flagged(&self) -> bool {
        self.flag.is_some()
    }
}

/// Per-point errors of a limit evaluated along an increasing schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub points: Vec<SamplePoint>,
    /// Least-squares exponent `p` in `error ≈ C / t^p` over unflagged points.
    pub fitted_rate: Option<f64>,
}

impl ConvergenceReport {
    pub fn schedule(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// Raw error at the last evaluated point.
    pub fn final_error(&self) -> Option<f64> {
        self.points.iter().rev().find_map(|p| p.error)
    }

    /// Extrapolated error at the last point where one exists.
    pub fn final_extrapolated_error(&self) -> Option<f64> {
        self.points.iter().rev().find_map(|p| p.extrapolated_error)
    }

    pub fn any_flagged(&self) -> bool {
        self.points.iter().any(SamplePoint::flagged)
    }
}

/// Outcome of [`limit_minor_inverse`].
#[derive(Clone, Debug)]
pub struct MinorLimit {
    pub estimate: Matrix,
    pub target: Matrix,
    pub report: ConvergenceReport,
}

/// Outcome of [`spectral_limit`].
#[derive(Clone, Debug, Serialize)]
pub struct SpectralLimit {
    pub estimate: f64,
    pub target: f64,
    pub report: ConvergenceReport,
}

/// Returns `(slope, intercept)` with `det A(t) = slope·t + intercept`.
///
/// The slope is `det A_[i,i]`; when it is zero the limit operations reject
/// the ray but this still succeeds.
pub fn det_affine_coeffs(ray: &DiagonalRay) -> Result<(f64, f64)> {
    let slope = ray.minor().determinant()?;
    let intercept = ray.at(0.0)?.determinant()?;
    Ok((slope, intercept))
}

/// `(A_[i,i])⁻¹`, the exact target of the minor-inverse limit.
pub fn exact_minor_inverse(ray: &DiagonalRay) -> Result<Matrix> {
    let i = ray.index();
    ray.minor()
        .inverse()
        .map_err(|e| e.with_singular_context(format!("minor A[{i},{i}]")))
}

/// `t = scale · 10^k` for `k = 1..=8`, with `scale = ‖base‖∞` (or 1 for a zero matrix).
pub fn default_schedule(base: &Matrix) -> Vec<f64> {
    let norm = base.inf_norm();
    let scale = if norm > 0.0 { norm } else { 1.0 };
    (1..=8).map(|k| scale * 10f64.powi(k)).collect()
}

pub fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::rejected("schedule is empty"));
    }
    if let Some(t) = schedule.iter().find(|t| !t.is_finite() || **t <= 0.0) {
        return Err(Error::rejected(format!(
            "schedule values must be positive and finite, got {t}"
        )));
    }
    if let Some(w) = schedule.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::rejected(format!(
            "schedule must be strictly increasing, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `2·x_2t − x_t`: cancels the `C/t` term of a first-order limit sampled at `t` and `2t`.
pub fn richardson(x_t: &Matrix, x_2t: &Matrix) -> Result<Matrix> {
    x_2t.scale(2.0).sub(x_t)
}

/// Two-point Richardson step for samples at arbitrary `t_lo < t_hi`.
///
/// With `q = t_hi / t_lo` this is `(q·x_hi − x_lo) / (q − 1)`; `q = 2`
/// reduces to [`richardson`].
pub fn richardson_ratio<X: Extrapolate>(x_lo: &X, t_lo: f64, x_hi: &X, t_hi: f64) -> X {
    X::extrapolate(x_lo, x_hi, t_hi / t_lo)
}

/// Values that support a first-order Richardson step.
pub trait Extrapolate: Sized {
    fn extrapolate(lo: &Self, hi: &Self, ratio: f64) -> Self;
}

impl Extrapolate for f64 {
    fn extrapolate(lo: &f64, hi: &f64, ratio: f64) -> f64 {
        (ratio * hi - lo) / (ratio - 1.0)
    }
}

impl Extrapolate for Matrix {
    fn extrapolate(lo: &Matrix, hi: &Matrix, ratio: f64) -> Matrix {
        hi.scale(ratio / (ratio - 1.0))
            .sub(&lo.scale(1.0 / (ratio - 1.0)))
            .expect("samples of one limit share a shape")
    }
}

/// Evaluates `(A(t)⁻¹)_[i,i]` along `schedule`.
///
/// The estimate is the Richardson extrapolant of the last two unflagged
/// points; errors are measured against [`exact_minor_inverse`].
pub fn limit_minor_inverse(ray: &DiagonalRay, schedule: &[f64]) -> Result<MinorLimit> {
    validate_schedule(schedule)?;
    let target = exact_minor_inverse(ray)?;
    let i = ray.index();
    let (estimate, report) = run_schedule(
        schedule,
        |t| {
            let (inv, flag) = ray.invert_at(t)?;
            Ok((inv.map(|m| m.minor(i, i).expect("n >= 2")), flag))
        },
        |x: &Matrix| x.max_abs_diff(&target).expect("same shape"),
    )?;
    Ok(MinorLimit {
        estimate,
        target,
        report,
    })
}

/// Largest `|(A(t)⁻¹)_ik|` and `|(A(t)⁻¹)_ki|` over all `k`, diagonal included.
pub fn row_col_decay(ray: &DiagonalRay, t: f64) -> Result<(f64, f64)> {
    let (inv, _) = ray.invert_at(t)?;
    let inv = inv.ok_or_else(|| Error::Singular {
        context: format!("A(t) at t = {t:e}"),
        pivot: 0.0,
    })?;
    let i = ray.index();
    let n = ray.dim();
    let row_max = (1..=n).map(|k| inv.entry(i, k).abs()).fold(0.0, f64::max);
    let col_max = (1..=n).map(|k| inv.entry(k, i).abs()).fold(0.0, f64::max);
    Ok((row_max, col_max))
}

/// Embeds a minor-sized matrix back at index `i` with a zero row and column,
/// which is the full limit of `A(t)⁻¹`.
pub fn assemble_limit_inverse(minor_inverse: &Matrix, i: usize) -> Result<Matrix> {
    let m = minor_inverse.rows();
    if !minor_inverse.is_square() || !(1..=m + 1).contains(&i) {
        return Err(Error::rejected(format!(
            "cannot border a {}x{} matrix at index {i}",
            minor_inverse.rows(),
            minor_inverse.cols()
        )));
    }
    let n = m + 1;
    let mut out = Matrix::zeros(n, n);
    let skip = |k: usize| if k < i - 1 { k } else { k + 1 };
    for r in 0..m {
        for c in 0..m {
            *out.at_mut(skip(r), skip(c)) = minor_inverse.at(r, c);
        }
    }
    Ok(out)
}

/// Evaluates `ρ(F V(t)⁻¹)` along `schedule`, measured against
/// `ρ(F_[i,i] (V_[i,i])⁻¹)`.
pub fn spectral_limit(f: &Matrix, v_ray: &DiagonalRay, schedule: &[f64]) -> Result<SpectralLimit> {
    let target = reduced_spectral_radius(f, v_ray)?;
    spectral_limit_to(f, v_ray, schedule, target)
}

/// `ρ(F_[i,i] (V_[i,i])⁻¹)`.
pub fn reduced_spectral_radius(f: &Matrix, v_ray: &DiagonalRay) -> Result<f64> {
    check_same_dim(f, v_ray)?;
    let i = v_ray.index();
    let v_minor_inv = exact_minor_inverse(v_ray)
        .map_err(|e| e.with_singular_context(format!("minor V[{i},{i}]")))?;
    spectral_radius(&f.minor(i, i)?.matmul(&v_minor_inv)?)
}

/// Like [`spectral_limit`] but with the errors measured against a caller-supplied target.
pub fn spectral_limit_to(
    f: &Matrix,
    v_ray: &DiagonalRay,
    schedule: &[f64],
    target: f64,
) -> Result<SpectralLimit> {
    check_same_dim(f, v_ray)?;
    validate_schedule(schedule)?;
    let i = v_ray.index();
    v_ray
        .minor()
        .inverse()
        .map_err(|e| e.with_singular_context(format!("minor V[{i},{i}]")))?;
    let (estimate, report) = run_schedule(
        schedule,
        |t| {
            let (inv, flag) = v_ray.invert_at(t)?;
            let rho = match inv {
                Some(inv) => Some(spectral_radius(&f.matmul(&inv)?)?),
                None => None,
            };
            Ok((rho, flag))
        },
        |rho: &f64| (rho - target).abs(),
    )?;
    Ok(SpectralLimit {
        estimate,
        target,
        report,
    })
}

fn check_same_dim(f: &Matrix, v_ray: &DiagonalRay) -> Result<()> {
    if !f.is_square() || f.rows() != v_ray.dim() {
        return Err(Error::rejected(format!(
            "F is {}x{} but V is {n}x{n}",
            f.rows(),
            f.cols(),
            n = v_ray.dim()
        )));
    }
    Ok(())
}

/// Shared driver: evaluate at each `t`, record errors and Richardson errors,
/// fit the decay rate, and return the extrapolated estimate.
fn run_schedule<X, E, D>(schedule: &[f64], eval: E, distance: D) -> Result<(X, ConvergenceReport)>
where
    X: Extrapolate + Clone,
    E: Fn(f64) -> Result<(Option<X>, Option<PointFlag>)>,
    D: Fn(&X) -> f64,
{
    let mut points = Vec::with_capacity(schedule.len());
    let mut evaluated: Vec<(f64, X, bool)> = Vec::new();
    for &t in schedule {
        let (value, flag) = eval(t)?;
        let Some(value) = value else {
            points.push(SamplePoint {
                t,
                error: None,
                extrapolated_error: None,
                flag,
            });
            continue;
        };
        let extrapolated_error = evaluated
            .last()
            .map(|(t_prev, prev, _)| distance(&richardson_ratio(prev, *t_prev, &value, t)));
        points.push(SamplePoint {
            t,
            error: Some(distance(&value)),
            extrapolated_error,
            flag,
        });
        evaluated.push((t, value, flag.is_none()));
    }

    let trusted: Vec<&(f64, X, bool)> = evaluated.iter().filter(|e| e.2).collect();
    let pool: Vec<&(f64, X, bool)> = if trusted.is_empty() {
        evaluated.iter().collect()
    } else {
        trusted
    };
    let estimate = match pool.as_slice() {
        [] => {
            return Err(Error::Convergence {
                context: "every schedule point was singular".into(),
                residual: f64::INFINITY,
            })
        }
        [.., only] if pool.len() == 1 => only.1.clone(),
        [.., (t_lo, lo, _), (t_hi, hi, _)] => richardson_ratio(lo, *t_lo, hi, *t_hi),
        _ => unreachable!(),
    };

    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.flagged())
        .filter_map(|p| p.error.filter(|e| *e > 0.0).map(|e| (p.t, e)))
        .collect();
    let fitted_rate = fit_decay_rate(&fit);
    Ok((
        estimate,
        ConvergenceReport {
            points,
            fitted_rate,
        },
    ))
}

/// OLS slope of `log error` against `log t`, negated. `None` with fewer than
/// [`MIN_RATE_POINTS`] samples.
pub fn fit_decay_rate(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < MIN_RATE_POINTS {
        return None;
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

//! Next-generation matrices at a disease-free equilibrium.
//!
//! `F` holds the rates at which infected compartments produce new
//! infections and `V` the transfers between (and out of) infected
//! compartments. `R0 = ρ(F V⁻¹)`.

use crate::densela::Matrix;
use crate::eigen::{spectral_abscissa, spectral_radius};
use crate::error::{Error, Result};
use crate::minorlimit::{spectral_limit, DiagonalRay, SpectralLimit};

/// Entries of `V⁻¹` below this are reported as an M-matrix violation.
pub const M_MATRIX_TOL: f64 = 1e-10;

/// `|R0 − 1|` and `|abscissa|` below this count as zero in the threshold check.
pub const THRESHOLD_TOL: f64 = 1e-8;

/// The infected-subsystem Jacobian blocks `(F, V)` with compartment names.
#[derive(Clone, Debug, PartialEq)]
pub struct NgmPair {
    f: Matrix,
    v: Matrix,
    labels: Vec<String>,
}

/// Non-fatal structural problem with a pair.
#[derive(Clone, Debug, PartialEq)]
pub enum ValidationWarning {
    /// `V⁻¹` has an entry below `-M_MATRIX_TOL`, so `V` is not an M-matrix.
    NotMMatrix { row: usize, col: usize, value: f64 },
}

impl NgmPair {
    /// Checks shapes, label count, `F ≥ 0` and invertibility of `V`.
    pub fn new(f: Matrix, v: Matrix, labels: Vec<String>) -> Result<Self> {
        if !f.is_square() || !v.is_square() || f.rows() != v.rows() {
            return Err(Error::rejected(format!(
                "F ({}x{}) and V ({}x{}) must be square of equal size",
                f.rows(),
                f.cols(),
                v.rows(),
                v.cols()
            )));
        }
        if labels.len() != f.rows() {
            return Err(Error::rejected(format!(
                "{} labels for {} compartments",
                labels.len(),
                f.rows()
            )));
        }
        if let Some(pos) = f.as_slice().iter().position(|x| *x < 0.0) {
            let m = f.rows();
            return Err(Error::rejected(format!(
                "F must be nonnegative, entry ({}, {}) is {}",
                pos / m + 1,
                pos % m + 1,
                f.as_slice()[pos]
            )));
        }
        v.inverse()
            .map_err(|e| e.with_singular_context("transfer matrix V"))?;
        Ok(Self { f, v, labels })
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.f.rows()
    }

    /// `F V⁻¹`.
    pub fn next_generation_matrix(&self) -> Result<Matrix> {
        self.f.matmul(&self.v.inverse()?)
    }

    /// Reports the most negative entry of `V⁻¹` if it falls below `-M_MATRIX_TOL`.
    pub fn m_matrix_warning(&self) -> Result<Option<ValidationWarning>> {
        let inv = self.v.inverse()?;
        let m = self.dim();
        let worst = inv
            .as_slice()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(pos, v)| (pos, *v));
        Ok(match worst {
            Some((pos, value)) if value < -M_MATRIX_TOL => Some(ValidationWarning::NotMMatrix {
                row: pos / m + 1,
                col: pos % m + 1,
                value,
            }),
            _ => None,
        })
    }
}

/// `R0 = ρ(F V⁻¹)`.
pub fn r0(pair: &NgmPair) -> Result<f64> {
    spectral_radius(&pair.next_generation_matrix()?)
}

/// Deletes compartment `i` (1-based) from both blocks and the labels.
pub fn remove_compartment(pair: &NgmPair, i: usize) -> Result<NgmPair> {
    if pair.dim() < 2 {
        return Err(Error::rejected("cannot remove the only compartment"));
    }
    if !(1..=pair.dim()).contains(&i) {
        return Err(Error::rejected(format!(
            "compartment {i} out of range 1..={}",
            pair.dim()
        )));
    }
    let mut labels = pair.labels.clone();
    labels.remove(i - 1);
    NgmPair::new(pair.f.minor(i, i)?, pair.v.minor(i, i)?, labels)
}

/// Result of comparing `R0 − 1` with the spectral abscissa of `F − V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdReport {
    pub r0: f64,
    pub abscissa: f64,
    /// `sign(R0 − 1) == sign(abscissa)` with near-zero values counted as zero.
    pub consistent: bool,
    /// Both quantities sit at their thresholds.
    pub critical: bool,
}

/// The DFE is stable iff `R0 < 1`, and stable iff every eigenvalue of the
/// linearization `F − V` has negative real part; this checks that both
/// criteria agree.
pub fn dfe_threshold_check(pair: &NgmPair) -> Result<ThresholdReport> {
    let r0 = r0(pair)?;
    let abscissa = spectral_abscissa(&pair.f.sub(&pair.v)?)?;
    let sign = |x: f64| {
        if x.abs() < THRESHOLD_TOL {
            0
        } else if x > 0.0 {
            1
        } else {
            -1
        }
    };
    let (a, b) = (sign(r0 - 1.0), sign(abscissa));
    Ok(ThresholdReport {
        r0,
        abscissa,
        consistent: a == b,
        critical: a == 0 && b == 0,
    })
}

/// Drives `v_ii → ∞` along `schedule` and compares `ρ(F V(t)⁻¹)` with the
/// `R0` of the pair with compartment `i` removed.
pub fn r0_removal_limit(pair: &NgmPair, i: usize, schedule: &[f64]) -> Result<SpectralLimit> {
    let ray = DiagonalRay::new(pair.v.clone(), i)?;
    spectral_limit(&pair.f, &ray, schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn scalar(f: f64, v: f64) -> NgmPair {
        NgmPair::new(m(&[&[f]]), m(&[&[v]]), labels(&["I"])).unwrap()
    }

    #[test]
    fn r0_examples() {
        assert_eq!(r0(&scalar(0.0, 2.0)).unwrap(), 0.0);
        assert!((r0(&scalar(0.3, 0.1)).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn constructor_validation() {
        let one = || m(&[&[1.0]]);
        assert!(NgmPair::new(m(&[&[-1.0]]), one(), labels(&["I"])).is_err());
        assert!(NgmPair::new(one(), one(), labels(&["I", "J"])).is_err());
        assert!(NgmPair::new(Matrix::identity(2), one(), labels(&["I"])).is_err());
        assert!(matches!(
            NgmPair::new(one(), m(&[&[0.0]]), labels(&["I"])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn m_matrix_warning() {
        let good = NgmPair::new(
            Matrix::identity(2),
            m(&[&[2.0, 0.0], &[-1.0, 3.0]]),
            labels(&["a", "b"]),
        )
        .unwrap();
        assert_eq!(good.m_matrix_warning().unwrap(), None);
        let bad = NgmPair::new(
            Matrix::identity(2),
            m(&[&[2.0, 0.0], &[1.0, 3.0]]),
            labels(&["a", "b"]),
        )
        .unwrap();
        assert!(matches!(
            bad.m_matrix_warning().unwrap(),
            Some(ValidationWarning::NotMMatrix { row: 2, col: 1, .. })
        ));
    }

    #[test]
    fn removal() {
        let pair = NgmPair::new(
            m(&[&[0.0, 0.0, 2.0], &[0.0, 0.0, 0.0], &[1.0, 1.0, 0.0]]),
            m(&[&[2.0, 0.0, 0.0], &[-1.0, 3.0, 0.0], &[0.0, 0.0, 0.5]]),
            labels(&["I1", "I2", "Iv"]),
        )
        .unwrap();
        let reduced = remove_compartment(&pair, 2).unwrap();
        assert_eq!(reduced.labels(), &labels(&["I1", "Iv"])[..]);
        assert_eq!(reduced.v(), &m(&[&[2.0, 0.0], &[0.0, 0.5]]));
        let smaller = remove_compartment(&reduced, 2).unwrap();
        assert_eq!(smaller.dim(), 1);
        assert!(remove_compartment(&smaller, 1).is_err());
        assert!(remove_compartment(&pair, 4).is_err());
    }

    #[test]
    fn threshold_examples() {
        let low = dfe_threshold_check(&scalar(0.5, 1.0)).unwrap();
        assert_eq!((low.r0, low.abscissa, low.consistent), (0.5, -0.5, true));
        let high = dfe_threshold_check(&scalar(2.0, 1.0)).unwrap();
        assert_eq!((high.r0, high.abscissa, high.consistent), (2.0, 1.0, true));
        let tie = dfe_threshold_check(&scalar(1.0, 1.0)).unwrap();
        assert!(tie.consistent && tie.critical);
        assert!(!low.critical && !high.critical);
    }

    #[test]
    fn removal_limit_diagonal() {
        let pair = NgmPair::new(
            Matrix::diag(&[1.0, 2.0, 3.0]).unwrap(),
            Matrix::diag(&[2.0, 4.0, 1.0]).unwrap(),
            labels(&["a", "b", "c"]),
        )
        .unwrap();
        // removing c leaves ρ = max(1/2, 2/4) = 0.5; F V(t)⁻¹ has 3/t in slot c
        let lim = r0_removal_limit(&pair, 3, &[10.0, 100.0, 1000.0]).unwrap();
        assert_eq!(lim.target, 0.5);
        assert!(lim.report.points.iter().all(|p| p.error == Some(0.0)));
    }

    #[test]
    fn removal_limit_singular_minor() {
        let pair = NgmPair::new(
            Matrix::identity(2),
            m(&[&[0.0, 1.0], &[1.0, 0.0]]),
            labels(&["a", "b"]),
        )
        .unwrap();
        assert!(matches!(
            r0_removal_limit(&pair, 1, &[10.0]),
            Err(Error::Singular { .. })
        ));
    }
}

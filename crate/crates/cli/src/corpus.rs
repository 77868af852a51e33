//! Seeded random inputs for the verification suite.
//!
//! Each suite section draws from its own ChaCha stream so that adding cases to
//! one section never shifts the inputs of another.

use ngm_core::{HostParams, Matrix, NgmPair, VectorParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n × n` matrix with entries uniform in `[-1, 1)`.
pub fn uniform_matrix<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let data = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::new(n, n, data).expect("positive size and finite entries")
}

/// Entries uniform in `[0, 1)`.
pub fn nonnegative_matrix<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let data = (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect();
    Matrix::new(n, n, data).expect("positive size and finite entries")
}

/// Strictly row-diagonally-dominant matrix with nonpositive off-diagonal
/// entries, hence a nonsingular M-matrix.
pub fn m_matrix<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let mut rows = vec![vec![0.0; n]; n];
    for (r, row) in rows.iter_mut().enumerate() {
        let mut off_sum = 0.0;
        for (c, x) in row.iter_mut().enumerate() {
            if r != c {
                let v: f64 = rng.gen_range(0.0..1.0);
                *x = -v;
                off_sum += v;
            }
        }
        row[r] = off_sum + rng.gen_range(0.1..1.5);
    }
    Matrix::from_rows(&rows).expect("square and finite")
}

/// Next-generation pair with `F ≥ 0`, an M-matrix `V`, and labels `C1..Cn`.
pub fn compartmental_pair<R: Rng>(rng: &mut R, n: usize) -> NgmPair {
    let f = nonnegative_matrix(rng, n);
    let v = m_matrix(rng, n);
    let labels = (1..=n).map(|k| format!("C{k}")).collect();
    NgmPair::new(f, v, labels).expect("M-matrix V is invertible")
}

/// Host with `stages` infected stages and rates of order one.
pub fn host_params<R: Rng>(rng: &mut R, stages: usize) -> HostParams {
    let alpha = (0..=stages).map(|_| rng.gen_range(0.2..5.0)).collect();
    let mu = (0..stages).map(|_| rng.gen_range(0.05..1.0)).collect();
    HostParams::new(rng.gen_range(0.1..1.0), rng.gen_range(0.5..2.0), alpha, mu)
        .expect("positive draws")
}

pub fn vector_params<R: Rng>(rng: &mut R) -> VectorParams {
    VectorParams {
        f: rng.gen_range(0.1..1.0),
        c_v: rng.gen_range(0.1..1.0),
        s_v_bar: rng.gen_range(0.5..5.0),
        mu_tilde: rng.gen_range(0.1..1.0),
    }
}

/// Value whose logarithm is uniform on `(ln lo, ln hi)`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = uniform_matrix(&mut stream(42, 1), 4);
        assert_eq!(a, uniform_matrix(&mut stream(42, 1), 4));
        assert_ne!(a, uniform_matrix(&mut stream(42, 2), 4));
        assert_ne!(a, uniform_matrix(&mut stream(43, 1), 4));
    }

    #[test]
    fn m_matrix_has_nonnegative_inverse() {
        let mut rng = stream(7, 0);
        for n in 1..=6 {
            let inv = m_matrix(&mut rng, n).inverse().unwrap();
            assert!(inv.as_slice().iter().all(|x| *x >= 0.0));
        }
    }
}

//! Truncated single-mode operator machinery: ladder matrices, the dense
//! matrix exponential and a tridiagonal propagator for applying displacements
//! to long vectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PsdfsError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Annihilation operator on `{|0>, ..., |dim-1>}`: `a[m-1, m] = sqrt(m)`.
pub fn annihilation(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for m in 1..dim {
        a[(m - 1, m)] = C64::new((m as f64).sqrt(), 0.0);
    }
    a
}

/// Matrix exponential by scaling and squaring around a Taylor core.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.25 {
        (norm1 / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m * C64::new(0.5f64.powi(squarings), 0.0);

    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    // ||scaled|| <= 1/4, so 24 terms are far below double precision
    for j in 1..=24 {
        term = &term * &scaled / C64::new(j as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Dense truncated displacement `exp(alpha a^dag - alpha^* a)`.
pub fn displacement_matrix(alpha: C64, dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    expm(&gen)
}

/// Working dimension that keeps `D(beta)` applied to a vector supported on
/// `len` levels well clear of the truncation edge.
fn displacement_padding(beta: C64, len: usize) -> usize {
    let b = beta.norm();
    (b * b + 8.0 * b * ((len + 1) as f64).sqrt()).ceil() as usize + 24
}

/// Apply `D(beta)` to `v` without forming the matrix.
///
/// The generator is tridiagonal, so the exponential is propagated in unit
/// substeps with a Taylor series per step. The working space is enlarged
/// until the mass on the top ten levels is below `1e-15`. Returns the
/// displaced vector on the final working space, which may be shorter than
/// `v` when `v` ends in negligible amplitudes.
pub fn displace_vector(v: &[C64], beta: C64) -> Result<Vec<C64>> {
    // amplitudes below 1e-16 carry no weight at double precision
    let support = v
        .iter()
        .rposition(|z| z.norm() > 1e-16)
        .map_or(1, |i| i + 1);
    let v = &v[..support];
    let mut dim = support + displacement_padding(beta, support);
    for _ in 0..6 {
        let out = propagate_displacement(v, beta, dim);
        let edge: f64 = out[dim - 10..].iter().map(|z| z.norm_sqr()).sum();
        if edge < 1e-15 {
            return Ok(out);
        }
        dim *= 2;
    }
    Err(PsdfsError::Truncation {
        dim,
        tail: 1.0,
        suggested_dim: dim * 2,
    })
}

fn propagate_displacement(v: &[C64], beta: C64, dim: usize) -> Vec<C64> {
    let sqrt: Vec<f64> = (0..=dim).map(|m| (m as f64).sqrt()).collect();
    let steps = (beta.norm() * (dim as f64).sqrt()).ceil().max(1.0) as usize;
    let h = beta / steps as f64;
    let hc = h.conj();

    let mut state = vec![ZERO; dim];
    state[..v.len()].copy_from_slice(v);
    let mut term = vec![ZERO; dim];
    let mut next = vec![ZERO; dim];

    for _ in 0..steps {
        term.copy_from_slice(&state);
        let mut order = 1.0;
        loop {
            // next = G term / order, G = h a^dag - h^* a
            let mut peak = 0.0f64;
            for m in 0..dim {
                let mut acc = ZERO;
                if m > 0 {
                    acc += h * sqrt[m] * term[m - 1];
                }
                if m + 1 < dim {
                    acc -= hc * sqrt[m + 1] * term[m + 1];
                }
                let val = acc / order;
                peak = peak.max(val.norm());
                next[m] = val;
            }
            std::mem::swap(&mut term, &mut next);
            for m in 0..dim {
                state[m] += term[m];
            }
            if peak < 1e-19 || order > 60.0 {
                break;
            }
            order += 1.0;
        }
    }
    state
}

/// `<v| M |v>` for a column vector.
pub fn expectation(v: &DVector<C64>, m: &DMatrix<C64>) -> C64 {
    v.dotc(&(m * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{factorial, laguerre};
    use approx::assert_relative_eq;

    // <m|D(beta)|n> from the Laguerre closed form, m >= n.
    fn displacement_element(m: usize, n: usize, beta: C64) -> C64 {
        let x = beta.norm_sqr();
        let mag = (factorial(n) / factorial(m)).sqrt()
            * (-x / 2.0).exp()
            * laguerre(n, (m - n) as i64, x);
        beta.powi((m - n) as i32) * mag
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let mut d = DMatrix::<C64>::zeros(3, 3);
        d[(0, 0)] = C64::new(1.0, 0.0);
        d[(1, 1)] = C64::new(0.0, 2.0);
        d[(2, 2)] = C64::new(-3.0, 0.0);
        let e = expm(&d);
        assert_relative_eq!(e[(0, 0)].re, 1f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(
            (e[(1, 1)] - C64::new(0.0, 2.0).exp()).norm(),
            0.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(e[(2, 2)].re, (-3f64).exp(), max_relative = 1e-13);

        let a = annihilation(4);
        let e = expm(&a);
        // exp(a)|3> = sum_j sqrt(3!/(3-j)!)/j! |3-j>
        assert_relative_eq!(e[(2, 3)].re, 3f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(e[(0, 3)].re, 6f64.sqrt() / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn dense_displacement_matches_laguerre_elements() {
        let beta = C64::new(0.7, -0.4);
        let d = displacement_matrix(beta, 60);
        for n in 0..5 {
            for m in n..15 {
                let want = displacement_element(m, n, beta);
                assert!((d[(m, n)] - want).norm() < 1e-12, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn vector_displacement_matches_dense() {
        let beta = C64::new(-1.1, 0.6);
        let mut v = vec![ZERO; 6];
        v[2] = C64::new(0.6, 0.0);
        v[5] = C64::new(0.0, 0.8);
        let out = displace_vector(&v, beta).unwrap();
        let d = displacement_matrix(beta, 120);
        let dense = &d
            * DVector::from_vec({
                let mut w = vec![ZERO; 120];
                w[..6].copy_from_slice(&v);
                w
            });
        for m in 0..40 {
            assert!((out[m] - dense[m]).norm() < 1e-12, "m={m}");
        }
        let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn vacuum_displacement_is_coherent() {
        let beta = C64::new(3.0, 2.0);
        let out = displace_vector(&[ONE], beta).unwrap();
        let x = beta.norm_sqr();
        for (m, got) in out.iter().enumerate().take(30) {
            let want = (-x / 2.0).exp() * beta.powi(m as i32) / factorial(m).sqrt();
            assert!((got - want).norm() < 1e-12, "m={m}");
        }
    }
}

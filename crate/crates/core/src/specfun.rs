//! Scalar special functions shared by the closed forms.
//!
//! Everything here is double precision and pure. Laguerre polynomials accept
//! any integer superscript; negative superscripts are the polynomial
//! continuation of the finite sum
//! `L_n^a(x) = Σ_j (-1)^j C(n+a, n-j) x^j / j!` with a generalized binomial.

use crate::error::{PsdfsError, Result};

/// Exact factorials up to 20! fit in a u64.
const EXACT_FACTORIALS: [u64; 21] = {
    let mut table = [1u64; 21];
    let mut i = 1;
    while i < 21 {
        table[i] = table[i - 1] * i as u64;
        i += 1;
    }
    table
};

/// `ln(m!)`. Exact (to rounding of one `ln`) for `m <= 20`, summed beyond.
pub fn log_factorial(m: usize) -> f64 {
    if m < EXACT_FACTORIALS.len() {
        return (EXACT_FACTORIALS[m] as f64).ln();
    }
    let mut acc = (EXACT_FACTORIALS[20] as f64).ln();
    for i in 21..=m {
        acc += (i as f64).ln();
    }
    acc
}

/// `m!` as a float.
pub fn factorial(m: usize) -> f64 {
    if m < EXACT_FACTORIALS.len() {
        EXACT_FACTORIALS[m] as f64
    } else {
        log_factorial(m).exp()
    }
}

/// Generalized binomial `x(x-1)...(x-j+1)/j!`.
///
/// Vanishes when `x` is a nonnegative integer below `j`, since one factor is
/// exactly zero.
pub fn generalized_binomial(x: f64, j: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..j {
        acc *= (x - i as f64) / (i + 1) as f64;
    }
    acc
}

/// Ordinary binomial coefficient for nonnegative integers.
pub fn binomial(n: usize, j: usize) -> f64 {
    if j > n {
        return 0.0;
    }
    let j = j.min(n - j);
    let mut acc = 1.0;
    for i in 0..j {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Associated Laguerre polynomial `L_n^a(x)` for any integer superscript.
///
/// Superscripts in `[-n, -1]` are reduced with the reflection
/// `L_n^{-j}(x) = (-x)^j (n-j)!/n! L_{n-j}^{j}(x)`, which factors out the
/// exact zero of order `j` at the origin. Below `-n` the finite sum has no
/// sign changes and is summed directly; otherwise the three-term recurrence
/// in the degree is run.
pub fn laguerre(n: usize, a: i64, x: f64) -> f64 {
    let n_i = n as i64;
    if a < 0 && -a <= n_i {
        let j = (-a) as usize;
        let scale = (-x).powi(j as i32) * (log_factorial(n - j) - log_factorial(n)).exp();
        return scale * laguerre_recurrence(n - j, j as f64, x);
    }
    if a < -n_i {
        // n + a < 0: every term of the finite sum has sign (-1)^n
        return laguerre_series(n, a, x);
    }
    laguerre_recurrence(n, a as f64, x)
}

fn laguerre_series(n: usize, a: i64, x: f64) -> f64 {
    let top = (n as i64 + a) as f64;
    let mut sum = 0.0;
    let mut power = 1.0;
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * generalized_binomial(top, n - j) * power;
        power *= x / (j + 1) as f64;
    }
    sum
}

fn laguerre_recurrence(n: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for i in 1..n {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0 + a - x) * cur - (fi + a) * prev) / (fi + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Terminating confluent hypergeometric `1F1(-r; b; x)` as a finite sum.
///
/// Only positive integer `b` is accepted; `b <= 0` would put a zero in the
/// Pochhammer denominator.
pub fn hyp1f1_terminating(r: usize, b: i64, x: f64) -> Result<f64> {
    if b <= 0 {
        return Err(PsdfsError::Domain(format!(
            "1F1(-{r}; {b}; x) needs a positive denominator parameter"
        )));
    }
    let b = b as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..r {
        let fj = j as f64;
        term *= (fj - r as f64) / (b + fj) * x / (fj + 1.0);
        sum += term;
    }
    Ok(sum)
}

/// Sum of the magnitudes of the `1F1(-r; b; x)` terms; bounds `|1F1|` for
/// `x >= 0`.
pub fn hyp1f1_terminating_abs(r: usize, b: i64, x: f64) -> f64 {
    let b = b as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..r {
        let fj = j as f64;
        term *= (r as f64 - fj) / (b + fj) * x.abs() / (fj + 1.0);
        sum += term;
    }
    sum
}

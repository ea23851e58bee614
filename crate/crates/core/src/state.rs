//! Photon-subtracted displaced Fock states `N a^k D(alpha)|n>`.
//!
//! The amplitude vector is built two ways: from the Laguerre closed form and
//! by literally applying truncated operator matrices. Both return the same
//! [`FockVector`] type so tests can compare them element by element.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{PsdfsError, Result};
use crate::fock::{self, C64, ZERO};
use crate::specfun::{binomial, laguerre, log_factorial};

/// Tail mass allowed on the top five levels of a truncated state.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// The triple `(n, k, alpha)` plus the Fock-space truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateParams {
    /// Fock parameter.
    pub n: usize,
    /// Photons subtracted.
    pub k: usize,
    /// Displacement.
    pub alpha: C64,
    /// Truncation: the basis is `|0>..|dim-1>`.
    pub dim: usize,
}

impl StateParams {
    /// Parameters with an adaptively chosen truncation.
    ///
    /// Starts from [`StateParams::default_dim`] and doubles until the
    /// closed-form amplitudes satisfy the tail-mass invariant.
    pub fn new(n: usize, k: usize, alpha: C64) -> Result<Self> {
        let mut p = Self::with_dim(n, k, alpha, Self::default_dim(n, k, alpha))?;
        for _ in 0..8 {
            match psdfs_closed_form(&p) {
                Ok(_) => return Ok(p),
                Err(PsdfsError::Truncation { .. }) => p.dim *= 2,
                Err(e) => return Err(e),
            }
        }
        Err(PsdfsError::Truncation {
            dim: p.dim,
            tail: f64::NAN,
            suggested_dim: p.dim * 2,
        })
    }

    /// Parameters with an explicit truncation. Only the structural
    /// invariants are checked here.
    pub fn with_dim(n: usize, k: usize, alpha: C64, dim: usize) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(PsdfsError::InvalidParams(format!(
                "alpha must be finite, got {alpha}"
            )));
        }
        if alpha == ZERO && k > n {
            return Err(PsdfsError::NullState { n, k });
        }
        if dim <= n + k {
            return Err(PsdfsError::InvalidParams(format!(
                "dim={dim} must exceed n+k={}",
                n + k
            )));
        }
        Ok(Self { n, k, alpha, dim })
    }

    /// `n + k + ceil(|alpha|^2 + 8|alpha| sqrt(n+1)) + 20`.
    pub fn default_dim(n: usize, k: usize, alpha: C64) -> usize {
        let a = alpha.norm();
        n + k + (a * a + 8.0 * a * ((n + 1) as f64).sqrt()).ceil() as usize + 20
    }

    pub fn is_null(&self) -> bool {
        self.alpha == ZERO && self.k > self.n
    }
}

/// Normalized amplitudes over `|0>..|dim-1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub amps: Vec<C64>,
}

impl FockVector {
    pub fn new(amps: Vec<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Mass on the top five levels.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass_above(0)
    }

    /// Mass on the top five levels, ignoring levels `<= floor`.
    pub fn tail_mass_above(&self, floor: usize) -> f64 {
        let start = self.amps.len().saturating_sub(5).max(floor + 1);
        self.amps
            .get(start..)
            .map_or(0.0, |t| t.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        for z in &mut self.amps {
            *z /= norm;
        }
        self
    }

    /// Rotate the global phase so the largest-magnitude amplitude is real
    /// and positive.
    pub fn phase_fixed(mut self) -> Self {
        let (_, pivot) = self
            .amps
            .iter()
            .enumerate()
            .fold((0.0, ZERO), |(best, z0), (_, &z)| {
                if z.norm() > best {
                    (z.norm(), z)
                } else {
                    (best, z0)
                }
            });
        if pivot != ZERO {
            let phase = pivot.conj() / pivot.norm();
            for z in &mut self.amps {
                *z *= phase;
            }
        }
        self
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amps)
    }

    /// Same state embedded in (or cut to) a basis of size `dim`.
    pub fn resized(&self, dim: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        let n = dim.min(self.amps.len());
        amps[..n].copy_from_slice(&self.amps[..n]);
        Self { amps }
    }
}

/// Complex matrix over one mode (`dim x dim`) or two modes
/// (`dim^2 x dim^2`, index `i_a * dim + i_b`).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub elems: DMatrix<C64>,
    pub mode_count: u8,
}

impl DensityMatrix {
    pub fn single_mode(elems: DMatrix<C64>) -> Self {
        Self {
            elems,
            mode_count: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.elems.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.elems.trace()
    }

    /// `Tr rho^2`, using Hermiticity.
    pub fn purity(&self) -> f64 {
        self.elems.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..=i {
                worst = worst.max((self.elems[(i, j)] - self.elems[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigen(&self) -> SymmetricEigen<C64, nalgebra::Dyn> {
        SymmetricEigen::new(self.elems.clone())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian to 1e-12, unit trace to 1e-10, eigenvalues >= -1e-9.
    pub fn check_invariants(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(PsdfsError::Invariant(format!("not Hermitian: {herm:.3e}")));
        }
        let tr = self.trace();
        if (tr - fock::ONE).norm() > 1e-10 {
            return Err(PsdfsError::Invariant(format!("trace {tr} != 1")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -1e-9 {
            return Err(PsdfsError::Invariant(format!(
                "negative eigenvalue {lmin:.3e}"
            )));
        }
        Ok(())
    }

    /// `Tr(rho op)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        (&self.elems * op).trace()
    }

    /// Single-mode reduced state of mode B for a two-mode matrix with
    /// `dim_a * dim_b` rows.
    pub fn partial_trace_a(&self, dim_a: usize, dim_b: usize) -> Result<DensityMatrix> {
        if self.mode_count != 2 || self.dim() != dim_a * dim_b {
            return Err(PsdfsError::InvalidParams(format!(
                "partial trace needs a two-mode {0}x{0} matrix",
                dim_a * dim_b
            )));
        }
        let mut out = DMatrix::zeros(dim_b, dim_b);
        for ia in 0..dim_a {
            for b1 in 0..dim_b {
                for b2 in 0..dim_b {
                    out[(b1, b2)] += self.elems[(ia * dim_b + b1, ia * dim_b + b2)];
                }
            }
        }
        Ok(DensityMatrix::single_mode(out))
    }
}

/// Rank-one projector `|v><v|`.
pub fn density_matrix(v: &FockVector) -> DensityMatrix {
    let col = v.to_dvector();
    DensityMatrix::single_mode(&col * col.adjoint())
}

/// Decomposition of `alpha^e L_n^e(|alpha|^2)` into a log-magnitude, a unit
/// phase and a real Laguerre factor.
///
/// For `e < 0` (which needs `e >= -n`) the reflection identity turns the
/// negative power of `alpha` into a positive power of `-alpha^*`, so the
/// product stays finite at `alpha = 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PowerLaguerre {
    pub ln_mag: f64,
    pub phase: C64,
    pub lag: f64,
}

impl PowerLaguerre {
    pub fn new(e: i64, n: usize, alpha: C64) -> Self {
        let x = alpha.norm_sqr();
        let ln_a = alpha.norm().ln();
        let theta = alpha.arg();
        if e >= 0 {
            let ln_mag = if e == 0 { 0.0 } else { e as f64 * ln_a };
            Self {
                ln_mag,
                phase: C64::from_polar(1.0, e as f64 * theta),
                lag: laguerre(n, e, x),
            }
        } else {
            let j = (-e) as usize;
            assert!(j <= n, "superscript {e} below -n={n}");
            // (-alpha^*)^j (n-j)!/n! L_{n-j}^j(x)
            let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            Self {
                ln_mag: j as f64 * ln_a + log_factorial(n - j) - log_factorial(n),
                phase: C64::from_polar(sign, -(j as f64) * theta),
                lag: laguerre(n - j, j as i64, x),
            }
        }
    }

    pub fn value(&self, extra_ln: f64) -> C64 {
        if self.lag == 0.0 || self.ln_mag == f64::NEG_INFINITY {
            return ZERO;
        }
        self.phase * ((self.ln_mag + extra_ln).exp() * self.lag)
    }
}

/// `N = [sum_r C(k,r)^2 n!/(n-r)! |alpha|^{2(k-r)}]^{-1/2}`.
pub fn normalization_constant(p: &StateParams) -> Result<f64> {
    if p.is_null() {
        return Err(PsdfsError::NullState { n: p.n, k: p.k });
    }
    let x = p.alpha.norm_sqr();
    let sum: f64 = (0..=p.k.min(p.n))
        .map(|r| {
            let c = binomial(p.k, r);
            let pow = if p.k == r {
                1.0
            } else {
                x.powi((p.k - r) as i32)
            };
            c * c * (log_factorial(p.n) - log_factorial(p.n - r)).exp() * pow
        })
        .sum();
    Ok(sum.powf(-0.5))
}

/// Levels up to `n - k` carry the Fock core of the state even at alpha = 0,
/// so the tail window starts above it.
fn tail_floor(p: &StateParams) -> usize {
    p.n.saturating_sub(p.k)
}

fn check_tail(amps: Vec<C64>, p: &StateParams) -> Result<FockVector> {
    let dim = p.dim;
    let v = FockVector::new(amps);
    let tail = v.tail_mass_above(tail_floor(p));
    let norm_gap = (v.norm_sqr() - 1.0).abs();
    if tail >= TAIL_TOLERANCE || norm_gap > TAIL_TOLERANCE {
        return Err(PsdfsError::Truncation {
            dim,
            tail: tail.max(norm_gap),
            suggested_dim: dim * 2,
        });
    }
    Ok(v.normalized().phase_fixed())
}

/// Closed-form amplitudes: the coefficient of `|m-k>` is
/// `N e^{-|alpha|^2/2} alpha^{m-n} sqrt(n!/(m-k)!) L_n^{m-n}(|alpha|^2)`.
pub fn psdfs_closed_form(p: &StateParams) -> Result<FockVector> {
    let norm = normalization_constant(p)?;
    let x = p.alpha.norm_sqr();
    let ln_n_fact = log_factorial(p.n);
    let amps: Vec<C64> = (0..p.dim)
        .map(|i| {
            let e = (i + p.k) as i64 - p.n as i64;
            let extra = norm.ln() - x / 2.0 + 0.5 * (ln_n_fact - log_factorial(i));
            PowerLaguerre::new(e, p.n, p.alpha).value(extra)
        })
        .collect();
    check_tail(amps, p)
}

/// The same amplitudes indexed the way the main-text expansion writes them:
/// coefficient of `|m>` is `N e^{-|alpha|^2/2} alpha^{m+k-n} sqrt(n!/m!)
/// L_n^{m+k-n}(|alpha|^2)`. Kept to document that the two index
/// conventions describe one vector.
pub fn psdfs_closed_form_reindexed(p: &StateParams) -> Result<FockVector> {
    let norm = normalization_constant(p)?;
    let x = p.alpha.norm_sqr();
    let amps: Vec<C64> = (0..p.dim)
        .map(|m| {
            let e = (m + p.k) as i64 - p.n as i64;
            let extra = norm.ln() - x / 2.0 + 0.5 * (log_factorial(p.n) - log_factorial(m));
            PowerLaguerre::new(e, p.n, p.alpha).value(extra)
        })
        .collect();
    check_tail(amps, p)
}

/// Working dimension of the matrix oracle.
fn oracle_working_dim(p: &StateParams) -> usize {
    p.dim + p.k + (2 * p.k).max(10)
}

/// Unnormalized `a^k D(alpha)|n>` from dense truncated matrices, cut to
/// `p.dim` levels.
pub fn psdfs_matrix_oracle_raw(p: &StateParams) -> Vec<C64> {
    let work = oracle_working_dim(p);
    let d = fock::displacement_matrix(p.alpha, work);
    let col = d.column(p.n).into_owned();
    let a = fock::annihilation(work);
    let mut v = col;
    for _ in 0..p.k {
        v = &a * v;
    }
    v.iter().take(p.dim).cloned().collect()
}

/// Operator realization: dense `D(alpha)` by scaling and squaring, then `k`
/// applications of the annihilation matrix, then normalization.
pub fn psdfs_matrix_oracle(p: &StateParams) -> Result<FockVector> {
    if p.is_null() {
        return Err(PsdfsError::NullState { n: p.n, k: p.k });
    }
    let raw = psdfs_matrix_oracle_raw(p);
    let norm: f64 = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(PsdfsError::NullState { n: p.n, k: p.k });
    }
    let amps = raw.into_iter().map(|z| z / norm).collect();
    let v = FockVector::new(amps);
    let tail = v.tail_mass_above(tail_floor(p));
    if tail >= TAIL_TOLERANCE {
        return Err(PsdfsError::Truncation {
            dim: p.dim,
            tail,
            suggested_dim: p.dim * 2,
        });
    }
    Ok(v.phase_fixed())
}

/// `<(a^dag)^pw a^qw>` from the Laguerre series
/// `N^2 e^{-|alpha|^2} n! sum_m conj(alpha^{m+pw+k-n} L_n^{m+pw+k-n})
/// alpha^{m+qw+k-n} L_n^{m+qw+k-n} / m!`, summed over `m < dim`.
pub fn expectation_adp_aq(p: &StateParams, pw: usize, qw: usize) -> Result<C64> {
    if pw > p.dim / 2 || qw > p.dim / 2 {
        return Err(PsdfsError::InvalidParams(format!(
            "moment orders ({pw}, {qw}) exceed dim/2 = {}",
            p.dim / 2
        )));
    }
    let norm = normalization_constant(p)?;
    let x = p.alpha.norm_sqr();
    let base = 2.0 * norm.ln() - x + log_factorial(p.n);
    let shift = p.k as i64 - p.n as i64;

    let terms: Vec<C64> = (0..p.dim)
        .map(|m| {
            let left = PowerLaguerre::new(m as i64 + pw as i64 + shift, p.n, p.alpha);
            let right = PowerLaguerre::new(m as i64 + qw as i64 + shift, p.n, p.alpha);
            let ln_mag = left.ln_mag + right.ln_mag + base - log_factorial(m);
            if left.lag == 0.0 || right.lag == 0.0 || ln_mag == f64::NEG_INFINITY {
                return ZERO;
            }
            left.phase.conj() * right.phase * (ln_mag.exp() * left.lag * right.lag)
        })
        .collect();

    let total: C64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|z| z.norm()).sum();
    let tail: f64 = terms[terms.len().saturating_sub(5)..]
        .iter()
        .map(|z| z.norm())
        .sum();
    if tail > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(PsdfsError::Truncation {
            dim: p.dim,
            tail,
            suggested_dim: p.dim * 2,
        });
    }
    Ok(total)
}

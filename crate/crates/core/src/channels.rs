//! Photon loss: Wigner function of the decayed state in closed form, by
//! Gaussian convolution of a sampled initial Wigner function, and by the
//! Kraus map on density matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{PsdfsError, Result};
use crate::fock::{C64, ZERO};
use crate::specfun::{binomial, factorial};
use crate::state::{
    density_matrix, normalization_constant, psdfs_matrix_oracle, DensityMatrix, StateParams,
};
use crate::wigner::{self, grid_from_fn, GridGeometry, ParityOracle, PhaseSpaceGrid, WignerClosed};

/// Rescaled decay time `kappa t` of an amplitude-damping channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub kappa_t: f64,
}

impl LossParams {
    pub fn new(kappa_t: f64) -> Result<Self> {
        if !kappa_t.is_finite() || kappa_t < 0.0 {
            return Err(PsdfsError::InvalidParams(format!(
                "kappa_t must be finite and >= 0, got {kappa_t}"
            )));
        }
        Ok(Self { kappa_t })
    }

    /// Loss equivalent to a detector of efficiency `eta = 1 - T`.
    pub fn from_efficiency(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(PsdfsError::InvalidParams(format!(
                "efficiency must lie in (0, 1], got {eta}"
            )));
        }
        Self::new(-eta.ln() / 2.0)
    }

    /// `T = 1 - exp(-2 kappa t)`, the fraction of intensity lost.
    pub fn t_loss(&self) -> f64 {
        -(-2.0 * self.kappa_t).exp_m1()
    }

    /// `exp(-2 kappa t)`, the surviving intensity fraction.
    pub fn transmissivity(&self) -> f64 {
        (-2.0 * self.kappa_t).exp()
    }

    /// Amplitude decay factor `exp(-kappa t)`.
    pub fn decay(&self) -> f64 {
        (-self.kappa_t).exp()
    }
}

#[derive(Debug, Clone)]
struct LossyPair {
    d: usize,
    /// Binomials, alpha powers, `2^d` and the conjugate doubling.
    coef: C64,
    /// Polynomial in `|beta|^2`, lowest power first.
    poly: Vec<f64>,
}

/// Precomputed closed form of the decayed Wigner function at one
/// `(state, kappa t)` point.
#[derive(Debug, Clone)]
pub struct LossyWignerClosed {
    alpha: C64,
    decay: f64,
    prefactor: f64,
    pairs: Vec<LossyPair>,
    initial: Option<WignerClosed>,
}

impl LossyWignerClosed {
    pub fn new(p: &StateParams, lp: LossParams) -> Result<Self> {
        let initial = if lp.kappa_t == 0.0 {
            Some(WignerClosed::new(p)?)
        } else {
            None
        };
        let norm = normalization_constant(p)?;
        let (n, k, alpha) = (p.n, p.k, p.alpha);
        let half_t = lp.t_loss() / 2.0;
        let mut pairs = Vec::new();
        for pi in 0..=k.min(n) {
            for qi in 0..=pi {
                let d = pi - qi;
                let mult = if d == 0 { 1.0 } else { 2.0 };
                let coef = alpha.conj().powi((k - pi) as i32)
                    * alpha.powi((k - qi) as i32)
                    * (mult * binomial(k, pi) * binomial(k, qi) * 2f64.powi(d as i32));
                let mut poly = vec![0.0; n - pi + 1];
                for r in 0..=(n - pi) {
                    let c_r = (-2f64).powi(r as i32) / factorial(n - pi - r);
                    for s in 0..=r {
                        let c_s = c_r * (-2f64).powi((r - s) as i32) / factorial(s);
                        for u in 0..=(r - s) {
                            let e = r - s - u;
                            poly[e] += c_s * half_t.powi(u as i32)
                                / (factorial(u) * factorial(d + e) * factorial(e));
                        }
                    }
                }
                pairs.push(LossyPair { d, coef, poly });
            }
        }
        Ok(Self {
            alpha,
            decay: lp.decay(),
            prefactor: 2.0 * norm * norm * factorial(n) / PI,
            pairs,
            initial,
        })
    }

    pub fn eval(&self, zeta: C64) -> f64 {
        if let Some(w) = &self.initial {
            return w.eval(zeta);
        }
        let shift = zeta - self.alpha * self.decay;
        let beta = shift * self.decay;
        let x = beta.norm_sqr();
        let beta_c = beta.conj();
        let mut acc = ZERO;
        for t in &self.pairs {
            let poly = t.poly.iter().rev().fold(0.0, |acc, &c| acc * x + c);
            acc += t.coef * beta_c.powi(t.d as i32) * poly;
        }
        // exp[(2/T)|beta|^2 (1 - e^{2 kappa t})] = exp(-2 |zeta - alpha e^{-kappa t}|^2)
        self.prefactor * (-2.0 * shift.norm_sqr()).exp() * acc.re
    }
}

/// Closed-form Wigner value of the decayed state at `zeta`.
pub fn lossy_wigner_closed(p: &StateParams, lp: LossParams, zeta: C64) -> Result<f64> {
    Ok(LossyWignerClosed::new(p, lp)?.eval(zeta))
}

/// The decayed closed form summed over every `(p, q)`, with `1/j! = 0` for
/// negative `j` and negative powers of `beta^*` where `p < q`.
///
/// Kept to check that the full double sum equals the `p >= q` half plus its
/// conjugate; requires `kappa t > 0` and `beta != 0`.
pub fn lossy_wigner_full_sum(p: &StateParams, lp: LossParams, zeta: C64) -> Result<C64> {
    if lp.kappa_t == 0.0 {
        return Err(PsdfsError::Domain("full sum needs kappa t > 0".into()));
    }
    let norm = normalization_constant(p)?;
    let (n, k, alpha) = (p.n, p.k, p.alpha);
    let decay = lp.decay();
    let beta = (zeta - alpha * decay) * decay;
    if beta == ZERO && k > 0 {
        return Err(PsdfsError::Domain(
            "full sum has negative powers of beta at beta = 0".into(),
        ));
    }
    let inv_fact = |j: i64| {
        if j < 0 {
            0.0
        } else {
            1.0 / factorial(j as usize)
        }
    };
    let half_t = lp.t_loss() / 2.0;
    let x = beta.norm_sqr();
    let mut acc = ZERO;
    for pi in 0..=k {
        for qi in 0..=k {
            if pi > n {
                continue;
            }
            let d = pi as i64 - qi as i64;
            let coef = alpha.conj().powi((k - pi) as i32)
                * alpha.powi((k - qi) as i32)
                * (binomial(k, pi) * binomial(k, qi))
                * (beta.conj() * 2.0).powi(d as i32);
            let mut inner = 0.0;
            for r in 0..=(n - pi) as i64 {
                let c_r = (-2f64).powi(r as i32) * inv_fact(n as i64 - pi as i64 - r);
                for s in 0..=r {
                    let c_s = c_r * (-2f64).powi((r - s) as i32) * inv_fact(s);
                    for u in 0..=(d + r - s).max(-1) {
                        if u > r - s {
                            // 1/(r-s-u)! vanishes
                            continue;
                        }
                        inner += c_s
                            * x.powi((r - s - u) as i32)
                            * half_t.powi(u as i32)
                            * inv_fact(u)
                            * inv_fact(d + r - s - u)
                            * inv_fact(r - s - u);
                    }
                }
            }
            acc += coef * inner;
        }
    }
    let shift = zeta - alpha * decay;
    Ok(acc * (2.0 * norm * norm * factorial(n) / PI * (-2.0 * shift.norm_sqr()).exp()))
}

/// Decayed Wigner values on a grid, with a bound on `∫|W|` outside the box.
pub fn lossy_wigner_grid(
    p: &StateParams,
    lp: LossParams,
    geometry: &GridGeometry,
) -> Result<PhaseSpaceGrid> {
    let w = LossyWignerClosed::new(p, lp)?;
    Ok(grid_from_fn(
        geometry,
        |z| w.eval(z),
        lossy_tail_bound(p, lp, geometry)?,
    ))
}

/// Bound on `∫|W_t|` outside `geometry` for the decayed state.
///
/// A point outside the box needs either `|gamma - alpha| e^{-kappa t} > a`
/// or a kernel displacement beyond `gap - a`; the split `a` is optimized.
pub fn lossy_tail_bound(p: &StateParams, lp: LossParams, geometry: &GridGeometry) -> Result<f64> {
    let w0 = WignerClosed::new(p)?;
    let gap = geometry.inner_distance(p.alpha * lp.decay()).max(0.0);
    let t = lp.t_loss();
    let total = w0.tail_bound(0.0);
    Ok((1..20)
        .map(|i| {
            let a = gap * i as f64 / 20.0;
            let kernel = if t > 0.0 {
                (-2.0 * (gap - a).powi(2) / t).exp()
            } else {
                0.0
            };
            w0.tail_bound(a / lp.decay()) + kernel * total
        })
        .fold(f64::INFINITY, f64::min))
}

/// Convolution of a sampled initial Wigner function with the loss kernel,
/// `W(zeta) = (2/(pi T)) ∫ d^2 gamma exp[-(2/T)|zeta - gamma e^{-kappa t}|^2] W_0(gamma)`,
/// using the grid's own quadrature weights.
///
/// Fails when `zeta e^{kappa t}` lies outside the grid or when the part of
/// the integral outside the grid (bounded by the kernel at the box edge
/// times the grid's tail estimate) may exceed `1e-9`.
pub fn lossy_wigner_convolution(grid: &PhaseSpaceGrid, lp: LossParams, zeta: C64) -> Result<f64> {
    let t = lp.t_loss();
    if t <= 1e-6 {
        return Err(PsdfsError::InvalidParams(format!(
            "convolution needs T > 1e-6, got {t:e}"
        )));
    }
    let decay = lp.decay();
    let centre = zeta / decay;
    let g = &grid.geometry;
    let inside = g.inner_distance(centre);
    // neglected part: sup of the kernel outside the box times ∫|W_0| there
    let kernel_edge = if inside > 0.0 {
        (-2.0 * decay * decay * inside * inside / t).exp()
    } else {
        1.0
    };
    let neglected = 2.0 / (PI * t) * kernel_edge * grid.tail_estimate;
    if inside <= 0.0 || neglected > 1e-9 {
        let reach = (t * 14.0 * std::f64::consts::LN_10 / 2.0).sqrt() / decay;
        return Err(PsdfsError::BoxTooSmall {
            half_width: (g.re_max - g.re_min).min(g.im_max - g.im_min) / 2.0,
            tail: neglected,
            suggested: centre.re.abs().max(centre.im.abs()) + reach,
        });
    }
    let acc: f64 = grid
        .rows()
        .zip(&grid.weights)
        .map(|((x, y, w0), wt)| {
            let d = zeta - C64::new(x, y) * decay;
            wt * w0 * (-2.0 / t * d.norm_sqr()).exp()
        })
        .sum();
    Ok(2.0 / (PI * t) * acc)
}

/// `sum_l K_l rho K_l^dag` with `K_l = sqrt(T^l / l!) e^{-kappa t a^dag a} a^l`.
///
/// `<m-l| K_l |m> = sqrt(C(m, l) T^l tau^{m-l})`, `tau = e^{-2 kappa t}`; the
/// sum over `l` is complete on the truncated space.
pub fn lossy_density_matrix(rho: &DensityMatrix, lp: LossParams) -> Result<DensityMatrix> {
    if rho.mode_count != 1 {
        return Err(PsdfsError::InvalidParams(
            "loss channel acts on a single mode".into(),
        ));
    }
    let dim = rho.dim();
    let t = lp.t_loss();
    let tau = lp.transmissivity();
    let amp =
        |m: usize, l: usize| (binomial(m, l) * t.powi(l as i32) * tau.powi((m - l) as i32)).sqrt();
    let mut out = DMatrix::zeros(dim, dim);
    for m in 0..dim {
        for mp in 0..dim {
            let r = rho.elems[(m, mp)];
            if r == ZERO {
                continue;
            }
            for l in 0..=m.min(mp) {
                out[(m - l, mp - l)] += r * (amp(m, l) * amp(mp, l));
            }
        }
    }
    Ok(DensityMatrix::single_mode(out))
}

/// Parity oracle for the decayed state, built from the operator-defined
/// state vector and the Kraus map.
pub fn lossy_wigner_oracle(p: &StateParams, lp: LossParams) -> Result<ParityOracle> {
    let rho = density_matrix(&psdfs_matrix_oracle(p)?);
    ParityOracle::new(&lossy_density_matrix(&rho, lp)?)
}

/// Initial closed-form grid used as convolution input, kept public so
/// callers can reuse one grid for many `zeta`.
pub fn initial_grid(p: &StateParams, geometry: &GridGeometry) -> Result<PhaseSpaceGrid> {
    wigner::wigner_grid(p, geometry)
}

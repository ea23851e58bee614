//! Detected Wigner function for an inefficient homodyne detector and the
//! quadrature distribution it produces.
//!
//! Quadratures are `Q = sqrt2 Re gamma`, `P = sqrt2 Im gamma`, so the vacuum
//! has quadrature variance 1/2 and `W_QP(Q, P) = W(gamma) / 2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rayon::prelude::*;

use crate::channels::{lossy_tail_bound, LossParams, LossyWignerClosed};
use crate::error::{PsdfsError, Result};
use crate::fock::C64;
use crate::quad::{self, LegendreAxis};
use crate::state::StateParams;
use crate::wigner::{grid_from_fn, GridGeometry, PhaseSpaceGrid, WignerClosed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub eta: f64,
    /// Local-oscillator phase in `[0, 2 pi)`.
    pub theta: f64,
}

impl DetectorParams {
    pub fn new(eta: f64, theta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(PsdfsError::InvalidParams(format!(
                "detector efficiency must lie in (0, 1], got {eta}"
            )));
        }
        if !theta.is_finite() {
            return Err(PsdfsError::InvalidParams(format!(
                "theta must be finite, got {theta}"
            )));
        }
        Ok(Self {
            eta,
            theta: theta.rem_euclid(2.0 * PI),
        })
    }

    /// Loss channel with `T = 1 - eta`.
    pub fn equivalent_loss(&self) -> LossParams {
        LossParams::from_efficiency(self.eta).expect("eta validated")
    }
}

fn gamma_of(q: f64, p: f64) -> C64 {
    C64::new(q, p) * FRAC_1_SQRT_2
}

pub fn ideal_wigner_qp(p: &StateParams, q: f64, pq: f64) -> Result<f64> {
    Ok(WignerClosed::new(p)?.eval(gamma_of(q, pq)) / 2.0)
}

/// Quadrature square for the direct detector convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionConfig {
    /// Half-width of the square in the kernel variables `x, y`.
    pub half_width: f64,
    pub order: usize,
}

impl Default for ConvolutionConfig {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            order: 80,
        }
    }
}

/// Detected Wigner function by direct quadrature of the detector kernel
/// `exp[-((Q - Q' sqrt(eta))^2 + (P - P' sqrt(eta))^2)/(1 - eta)] / (pi (1 - eta))`.
///
/// With `Q' = (Q + sqrt(1-eta) x)/sqrt(eta)` (and likewise for `P'`) the
/// kernel becomes `exp(-x^2 - y^2)` and the prefactor `1/(pi eta)`.
pub fn detected_wigner(
    p: &StateParams,
    dp: DetectorParams,
    q: f64,
    pq: f64,
    cfg: ConvolutionConfig,
) -> Result<f64> {
    let w = WignerClosed::new(p)?;
    if dp.eta == 1.0 {
        return Ok(w.eval(gamma_of(q, pq)) / 2.0);
    }
    // kernel mass outside the square, times max |W_QP| = 1/pi
    let outside = 4.0 * (-cfg.half_width * cfg.half_width).exp() / (PI * dp.eta);
    if outside > 1e-6 {
        return Err(PsdfsError::BoxTooSmall {
            half_width: cfg.half_width,
            tail: outside,
            suggested: (-(1e-6 * PI * dp.eta / 4.0).ln()).sqrt().ceil(),
        });
    }
    let axis = LegendreAxis::new(cfg.order, -cfg.half_width, cfg.half_width)?;
    let se = dp.eta.sqrt();
    let sl = (1.0 - dp.eta).sqrt();
    let val = quad::tensor_integrate(&axis, &axis, |x, y| {
        let qq = (q + sl * x) / se;
        let pp = (pq + sl * y) / se;
        w.eval(gamma_of(qq, pp)) / 2.0 * (-x * x - y * y).exp()
    });
    Ok(val / (PI * dp.eta))
}

/// Detected Wigner function through the equivalent loss channel:
/// `W_det(Q, P) = W_loss((Q + iP)/sqrt2) / 2` with `T = 1 - eta`.
#[derive(Debug, Clone)]
pub struct DetectedWigner {
    lossy: LossyWignerClosed,
}

impl DetectedWigner {
    pub fn new(p: &StateParams, dp: DetectorParams) -> Result<Self> {
        Ok(Self {
            lossy: LossyWignerClosed::new(p, dp.equivalent_loss())?,
        })
    }

    pub fn eval(&self, q: f64, pq: f64) -> f64 {
        self.lossy.eval(gamma_of(q, pq)) / 2.0
    }
}

pub fn detected_wigner_via_loss(
    p: &StateParams,
    dp: DetectorParams,
    q: f64,
    pq: f64,
) -> Result<f64> {
    Ok(DetectedWigner::new(p, dp)?.eval(q, pq))
}

/// `W_det` on a grid whose axes are `Q` (outer) and `P` (inner).
pub fn detected_grid(
    p: &StateParams,
    dp: DetectorParams,
    geometry: &GridGeometry,
) -> Result<PhaseSpaceGrid> {
    let w = DetectedWigner::new(p, dp)?;
    let g = geometry;
    let in_gamma = GridGeometry::new(
        (
            g.re_min * FRAC_1_SQRT_2,
            g.re_max * FRAC_1_SQRT_2,
            g.re_steps,
        ),
        (
            g.im_min * FRAC_1_SQRT_2,
            g.im_max * FRAC_1_SQRT_2,
            g.im_steps,
        ),
    )?;
    let tail = lossy_tail_bound(p, dp.equivalent_loss(), &in_gamma)?;
    Ok(grid_from_fn(geometry, |z| w.eval(z.re, z.im), tail))
}

const PR_TOLERANCE: f64 = 1e-10;

/// Homodyne density `Pr(Q_theta, theta) = ∫ W_det(Q cos - P sin, Q sin + P cos) dP`.
#[derive(Debug, Clone)]
pub struct QuadratureDistribution {
    w: DetectedWigner,
    theta: f64,
    /// Centre of `W_det` in the `(Q, P)` plane.
    centre: C64,
    reach: f64,
}

impl QuadratureDistribution {
    pub fn new(p: &StateParams, dp: DetectorParams) -> Result<Self> {
        let centre = p.alpha * SQRT_2 * dp.eta.sqrt();
        Ok(Self {
            w: DetectedWigner::new(p, dp)?,
            theta: dp.theta,
            centre,
            reach: 10.0 + 2.0 * ((p.n + p.k) as f64).sqrt(),
        })
    }

    pub fn eval(&self, q_theta: f64) -> Result<f64> {
        let (s, c) = self.theta.sin_cos();
        let f = |pt: f64| self.w.eval(q_theta * c - pt * s, q_theta * s + pt * c);
        // centre coordinate along the integration line
        let mid = -self.centre.re * s + self.centre.im * c;
        let (a, b) = (mid - self.reach, mid + self.reach);
        let edge = f(a).abs().max(f(b).abs());
        if edge > 1e-14 {
            return Err(PsdfsError::BoxTooSmall {
                half_width: self.reach,
                tail: edge,
                suggested: self.reach + 4.0,
            });
        }
        Ok(quad::adaptive(f, a, b, PR_TOLERANCE).0)
    }

    /// Values at each `q`, in input order.
    pub fn curve(&self, qs: &[f64]) -> Result<Vec<f64>> {
        qs.par_iter().map(|&q| self.eval(q)).collect()
    }

    /// Rough support of the distribution along `Q_theta`.
    pub fn support(&self) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let mid = self.centre.re * c + self.centre.im * s;
        (mid - self.reach, mid + self.reach)
    }
}

pub fn quadrature_distribution(p: &StateParams, dp: DetectorParams, q_theta: f64) -> Result<f64> {
    QuadratureDistribution::new(p, dp)?.eval(q_theta)
}

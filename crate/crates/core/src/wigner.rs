//! Wigner and characteristic functions of the subtracted displaced Fock
//! state, in the complex phase-space coordinate `gamma`.
//!
//! Three independent routes give the same Wigner value:
//!
//! * [`WignerClosed`]: the finite double sum over subtraction indices with a
//!   terminating `1F1` per term. Only `p >= q` terms are summed; the `p < q`
//!   half is the complex conjugate of its mirror.
//! * [`ParityOracle`]: `(2/pi) Tr[rho D(gamma) Pi D^dag(gamma)]` evaluated by
//!   displacing the state vector(s) numerically.
//! * [`wigner_from_characteristic`]: numerical Fourier transform of the
//!   closed-form characteristic function.

use std::f64::consts::{FRAC_2_PI, PI};

use rayon::prelude::*;

use crate::error::{PsdfsError, Result};
use crate::fock::{self, C64, ZERO};
use crate::quad::{self, LegendreAxis};
use crate::specfun::{binomial, factorial, hyp1f1_terminating, hyp1f1_terminating_abs};
use crate::state::{self, normalization_constant, DensityMatrix, FockVector, StateParams};

/// Rectangular node layout in the `gamma` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub re_min: f64,
    pub re_max: f64,
    pub re_steps: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub im_steps: usize,
}

impl GridGeometry {
    pub fn new(re: (f64, f64, usize), im: (f64, f64, usize)) -> Result<Self> {
        for &(lo, hi, steps) in &[re, im] {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(PsdfsError::InvalidParams(format!(
                    "grid bounds must be finite with min < max, got [{lo}, {hi}]"
                )));
            }
            if steps < 2 {
                return Err(PsdfsError::InvalidParams(format!(
                    "grid needs at least 2 steps per axis, got {steps}"
                )));
            }
        }
        Ok(Self {
            re_min: re.0,
            re_max: re.1,
            re_steps: re.2,
            im_min: im.0,
            im_max: im.1,
            im_steps: im.2,
        })
    }

    pub fn square(min: f64, max: f64, steps: usize) -> Result<Self> {
        Self::new((min, max, steps), (min, max, steps))
    }

    pub fn len(&self) -> usize {
        self.re_steps * self.im_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn re_nodes(&self) -> Vec<f64> {
        quad::linspace(self.re_min, self.re_max, self.re_steps)
    }

    pub fn im_nodes(&self) -> Vec<f64> {
        quad::linspace(self.im_min, self.im_max, self.im_steps)
    }

    /// All nodes in C order (real part outer, imaginary part inner).
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let im = self.im_nodes();
        self.re_nodes()
            .into_iter()
            .flat_map(|x| im.iter().map(move |&y| (x, y)))
            .collect()
    }

    /// Tensor-product trapezoid weights in node order.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let wr = quad::trapezoid_weights(self.re_min, self.re_max, self.re_steps);
        let wi = quad::trapezoid_weights(self.im_min, self.im_max, self.im_steps);
        wr.iter()
            .flat_map(|a| wi.iter().map(move |b| a * b))
            .collect()
    }

    /// Smallest distance from `center` to the outside of the box (negative
    /// when the center lies outside).
    pub fn inner_distance(&self, center: C64) -> f64 {
        (center.re - self.re_min)
            .min(self.re_max - center.re)
            .min(center.im - self.im_min)
            .min(self.im_max - center.im)
    }
}

/// Real phase-space values on a [`GridGeometry`] with their quadrature
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub geometry: GridGeometry,
    /// Row-major: `values[i * im_steps + j]` at `(re_i, im_j)`.
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    /// Upper bound on `∫|W|` outside the box, when known.
    pub tail_estimate: f64,
}

impl PhaseSpaceGrid {
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum()
    }

    pub fn abs_integral(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v.abs() * w)
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(re, im, value)` in C order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.geometry
            .nodes()
            .into_iter()
            .zip(&self.values)
            .map(|((x, y), &v)| (x, y, v))
    }

    /// Bilinear interpolation, `None` outside the box.
    pub fn interpolate(&self, gamma: C64) -> Option<f64> {
        let g = &self.geometry;
        let hx = (g.re_max - g.re_min) / (g.re_steps - 1) as f64;
        let hy = (g.im_max - g.im_min) / (g.im_steps - 1) as f64;
        let fx = (gamma.re - g.re_min) / hx;
        let fy = (gamma.im - g.im_min) / hy;
        if fx < 0.0 || fy < 0.0 || fx > (g.re_steps - 1) as f64 || fy > (g.im_steps - 1) as f64 {
            return None;
        }
        let i = (fx.floor() as usize).min(g.re_steps - 2);
        let j = (fy.floor() as usize).min(g.im_steps - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let at = |a: usize, b: usize| self.values[a * g.im_steps + b];
        Some(
            (1.0 - tx) * (1.0 - ty) * at(i, j)
                + tx * (1.0 - ty) * at(i + 1, j)
                + (1.0 - tx) * ty * at(i, j + 1)
                + tx * ty * at(i + 1, j + 1),
        )
    }
}

/// One `(p, q)` pair of the double sum with `p >= q`.
#[derive(Debug, Clone)]
struct PairTerm {
    d: usize,
    /// `C(k,p) C(k,q) alpha*^{k-p} alpha^{k-q}`, doubled when `p > q`.
    coef: C64,
    /// `(r, (-2)^{d+r} / (r! d! (n-p-r)!))`.
    radial: Vec<(usize, f64)>,
}

/// Precomputed closed form for one parameter point.
#[derive(Debug, Clone)]
pub struct WignerClosed {
    alpha: C64,
    prefactor: f64,
    pairs: Vec<PairTerm>,
}

impl WignerClosed {
    pub fn new(p: &StateParams) -> Result<Self> {
        let norm = normalization_constant(p)?;
        let (n, k, alpha) = (p.n, p.k, p.alpha);
        let mut pairs = Vec::new();
        for pi in 0..=k.min(n) {
            for qi in 0..=pi {
                let d = pi - qi;
                let mult = if d == 0 { 1.0 } else { 2.0 };
                let coef = alpha.conj().powi((k - pi) as i32)
                    * alpha.powi((k - qi) as i32)
                    * (mult * binomial(k, pi) * binomial(k, qi));
                let radial = (0..=n - pi)
                    .map(|r| {
                        let sign = if (d + r) % 2 == 0 { 1.0 } else { -1.0 };
                        let c = sign * 2f64.powi((d + r) as i32)
                            / (factorial(r) * factorial(d) * factorial(n - pi - r));
                        (r, c)
                    })
                    .collect();
                pairs.push(PairTerm { d, coef, radial });
            }
        }
        Ok(Self {
            alpha,
            prefactor: 2.0 * norm * norm * factorial(n) / PI,
            pairs,
        })
    }

    pub fn eval(&self, gamma: C64) -> f64 {
        let eta = self.alpha - gamma;
        let x = 2.0 * eta.norm_sqr();
        let eta_c = eta.conj();
        let mut acc = ZERO;
        for t in &self.pairs {
            let s: f64 = t
                .radial
                .iter()
                .map(|&(r, c)| c * hyp1f1_terminating(r, t.d as i64 + 1, x).expect("d + 1 >= 1"))
                .sum();
            acc += t.coef * eta_c.powi(t.d as i32) * s;
        }
        self.prefactor * (-x).exp() * acc.re
    }

    /// Radially symmetric bound `|W(gamma)| <= envelope(|alpha - gamma|)`.
    pub fn envelope(&self, dist: f64) -> f64 {
        let x = 2.0 * dist * dist;
        let mut acc = 0.0;
        for t in &self.pairs {
            let s: f64 = t
                .radial
                .iter()
                .map(|&(r, c)| c.abs() * hyp1f1_terminating_abs(r, t.d as i64 + 1, x))
                .sum();
            acc += t.coef.norm() * dist.powi(t.d as i32) * s;
        }
        self.prefactor * (-x).exp() * acc
    }

    /// Bound on `∫|W|` over `|gamma - alpha| >= radius`.
    pub fn tail_bound(&self, radius: f64) -> f64 {
        let r0 = radius.max(0.0);
        let axis = LegendreAxis::new(200, r0, r0 + 12.0).expect("positive order");
        2.0 * PI * axis.integrate(|r| r * self.envelope(r))
    }

    /// Bound on `∫|W|` outside a grid box.
    pub fn tail_outside(&self, geometry: &GridGeometry) -> f64 {
        self.tail_bound(geometry.inner_distance(self.alpha))
    }
}

/// Closed-form Wigner value at `gamma`.
pub fn wigner_closed(p: &StateParams, gamma: C64) -> Result<f64> {
    Ok(WignerClosed::new(p)?.eval(gamma))
}

/// Every `(p, q)` term of the double sum, including `p < q`, through the
/// explicit derivative expansion
/// `sum_s C(r,s) (d+r)!/(d+r-s)! eta*^{d+r-s} eta^{r-s} (-2)^{r-s}`.
///
/// Returned as a complex number; its imaginary part measures how far the
/// double sum is from Hermitian.
pub fn wigner_expanded_sum(p: &StateParams, gamma: C64) -> Result<C64> {
    let norm = normalization_constant(p)?;
    let (n, k, alpha) = (p.n, p.k, p.alpha);
    let eta = alpha - gamma;
    let eta_c = eta.conj();
    let mut acc = ZERO;
    for pi in 0..=k {
        for qi in 0..=k {
            let coef = alpha.conj().powi((k - pi) as i32)
                * alpha.powi((k - qi) as i32)
                * (binomial(k, pi) * binomial(k, qi) * factorial(n));
            let d = pi as i64 - qi as i64;
            if pi > n {
                continue;
            }
            for r in 0..=(n - pi) {
                let dr = d + r as i64;
                if dr < 0 {
                    continue;
                }
                let dr = dr as usize;
                let outer = (-2f64).powi(dr as i32)
                    / (factorial(r) * factorial(dr) * factorial(n - pi - r));
                let mut inner = ZERO;
                for s in 0..=r.min(dr) {
                    inner += eta_c.powi((dr - s) as i32)
                        * eta.powi((r - s) as i32)
                        * (binomial(r, s) * factorial(dr) / factorial(dr - s)
                            * (-2f64).powi((r - s) as i32));
                }
                acc += coef * outer * inner;
            }
        }
    }
    Ok(acc * (2.0 * norm * norm / PI * (-2.0 * eta.norm_sqr()).exp()))
}

/// Characteristic function `Tr(rho D(lambda))` in closed form.
pub fn characteristic_function(p: &StateParams, lambda: C64) -> Result<C64> {
    let norm = normalization_constant(p)?;
    Ok(CharacteristicClosed::with_norm(p, norm).eval(lambda))
}

/// Precomputed characteristic function for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CharacteristicClosed {
    alpha: C64,
    norm_sq: f64,
    /// `(coef, r, d + r, 1 / (r! (d+r)! (n-p-r)!))` with `coef` including
    /// the binomials, the alpha powers and `n!`.
    terms: Vec<(C64, usize, usize, f64)>,
}

impl CharacteristicClosed {
    pub fn new(p: &StateParams) -> Result<Self> {
        Ok(Self::with_norm(p, normalization_constant(p)?))
    }

    fn with_norm(p: &StateParams, norm: f64) -> Self {
        let (n, k, alpha) = (p.n, p.k, p.alpha);
        let mut terms = Vec::new();
        for pi in 0..=k.min(n) {
            for qi in 0..=k {
                let coef = alpha.conj().powi((k - pi) as i32)
                    * alpha.powi((k - qi) as i32)
                    * (binomial(k, pi) * binomial(k, qi) * factorial(n));
                for r in 0..=(n - pi) {
                    let dr = pi as i64 - qi as i64 + r as i64;
                    if dr < 0 {
                        continue;
                    }
                    let dr = dr as usize;
                    let w = 1.0 / (factorial(r) * factorial(dr) * factorial(n - pi - r));
                    terms.push((coef, r, dr, w));
                }
            }
        }
        Self {
            alpha,
            norm_sq: norm * norm,
            terms,
        }
    }

    pub fn eval(&self, lambda: C64) -> C64 {
        let phase =
            (lambda * self.alpha.conj() - lambda.conj() * self.alpha - lambda.norm_sqr() / 2.0)
                .exp();
        let neg_lc = -lambda.conj();
        let sum: C64 = self
            .terms
            .iter()
            .map(|&(coef, r, dr, w)| coef * lambda.powi(r as i32) * neg_lc.powi(dr as i32) * w)
            .sum();
        phase * sum * self.norm_sq
    }
}

/// Quadrature settings for the numerical Fourier transform of the
/// characteristic function.
#[derive(Debug, Clone, Copy)]
pub struct FourierConfig {
    pub half_width: f64,
    pub order: usize,
}

impl FourierConfig {
    pub fn for_params(p: &StateParams) -> Self {
        Self {
            half_width: 8.0 + 2.0 * ((p.n + p.k) as f64).sqrt(),
            order: 240,
        }
    }
}

/// `W(gamma) = (1/pi^2) ∫ d^2 lambda C(lambda) exp(gamma lambda* - gamma* lambda)`
/// by tensor Gauss-Legendre quadrature over a square in the lambda plane.
///
/// `C` is tabulated once on the nodes; the kernel factorizes as
/// `exp(2i Im(gamma) x) exp(-2i Re(gamma) y)` for `lambda = x + iy`.
#[derive(Debug, Clone)]
pub struct FourierInverter {
    nodes: Vec<f64>,
    table: Vec<C64>,
}

impl FourierInverter {
    pub fn new(chi: &CharacteristicClosed, cfg: FourierConfig) -> Result<Self> {
        let axis = LegendreAxis::new(cfg.order, -cfg.half_width, cfg.half_width)?;
        let o = cfg.order;
        let table = (0..o * o)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / o, idx % o);
                let lambda = C64::new(axis.nodes[i], axis.nodes[j]);
                chi.eval(lambda) * (axis.weights[i] * axis.weights[j])
            })
            .collect();
        Ok(Self {
            nodes: axis.nodes,
            table,
        })
    }

    pub fn eval(&self, gamma: C64) -> f64 {
        let o = self.nodes.len();
        let ey: Vec<C64> = self
            .nodes
            .iter()
            .map(|&y| C64::from_polar(1.0, -2.0 * gamma.re * y))
            .collect();
        let mut total = C64::new(0.0, 0.0);
        for (i, &x) in self.nodes.iter().enumerate() {
            let row = &self.table[i * o..(i + 1) * o];
            let inner: C64 = row.iter().zip(&ey).map(|(c, e)| c * e).sum();
            total += inner * C64::from_polar(1.0, 2.0 * gamma.im * x);
        }
        total.re / (PI * PI)
    }
}

pub fn wigner_from_characteristic(
    chi: &CharacteristicClosed,
    gamma: C64,
    cfg: FourierConfig,
) -> Result<f64> {
    Ok(FourierInverter::new(chi, cfg)?.eval(gamma))
}

/// Displaced-parity evaluation of the Wigner function of an arbitrary
/// single-mode state.
///
/// The density matrix is diagonalized once; each component is displaced by
/// `-gamma` on an enlarged basis and the parity expectation summed.
#[derive(Debug, Clone)]
pub struct ParityOracle {
    components: Vec<(f64, Vec<C64>)>,
}

impl ParityOracle {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        if rho.mode_count != 1 {
            return Err(PsdfsError::InvalidParams(
                "parity oracle needs a single-mode density matrix".into(),
            ));
        }
        let eig = rho.eigen();
        let mut components = Vec::new();
        for (i, &w) in eig.eigenvalues.iter().enumerate() {
            if w.abs() < 1e-14 {
                continue;
            }
            components.push((w, eig.eigenvectors.column(i).iter().cloned().collect()));
        }
        Ok(Self { components })
    }

    pub fn from_pure(v: &FockVector) -> Self {
        Self {
            components: vec![(1.0, v.amps.clone())],
        }
    }

    pub fn eval(&self, gamma: C64) -> Result<f64> {
        let mut acc = 0.0;
        for (w, v) in &self.components {
            let shifted = fock::displace_vector(v, -gamma)?;
            let parity: f64 = shifted
                .iter()
                .enumerate()
                .map(|(m, z)| {
                    if m % 2 == 0 {
                        z.norm_sqr()
                    } else {
                        -z.norm_sqr()
                    }
                })
                .sum();
            acc += w * parity;
        }
        Ok(FRAC_2_PI * acc)
    }
}

/// `(2/pi) Tr[rho D(gamma) Pi D^dag(gamma)]`.
pub fn wigner_parity_oracle(rho: &DensityMatrix, gamma: C64) -> Result<f64> {
    ParityOracle::new(rho)?.eval(gamma)
}

/// Closed-form Wigner values on a grid, with trapezoid weights and a bound
/// on the mass outside the box.
pub fn wigner_grid(p: &StateParams, geometry: &GridGeometry) -> Result<PhaseSpaceGrid> {
    let w = WignerClosed::new(p)?;
    Ok(grid_from_fn(
        geometry,
        |g| w.eval(g),
        w.tail_outside(geometry),
    ))
}

pub(crate) fn grid_from_fn<F>(geometry: &GridGeometry, f: F, tail_estimate: f64) -> PhaseSpaceGrid
where
    F: Fn(C64) -> f64 + Sync,
{
    let values: Vec<f64> = geometry
        .nodes()
        .par_iter()
        .map(|&(x, y)| f(C64::new(x, y)))
        .collect();
    PhaseSpaceGrid {
        geometry: *geometry,
        values,
        weights: geometry.trapezoid_weights(),
        tail_estimate,
    }
}

/// Outcome of the Gaussian lower-bound test at the phase-space origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HudsonWitness {
    pub w_origin: f64,
    pub bound: f64,
    /// `w_origin < bound`: no pure Gaussian state with this photon number
    /// has such a low origin value.
    pub witnessed: bool,
}

pub fn hudson_bound_witness(p: &StateParams) -> Result<HudsonWitness> {
    let w_origin = wigner_closed(p, ZERO)?;
    let nbar = state::expectation_adp_aq(p, 1, 1)?.re;
    let bound = FRAC_2_PI * (-2.0 * nbar * (1.0 + nbar)).exp();
    Ok(HudsonWitness {
        w_origin,
        bound,
        witnessed: w_origin < bound,
    })
}

//! Nonclassicality and non-Gaussianity quantifiers for a single parameter
//! point: linear entropy potential, skew-information measure, Wigner
//! logarithmic negativity and relative entropy of non-Gaussianity.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{PsdfsError, Result};
use crate::fock::{C64, ZERO};
use crate::quad::LegendreAxis;
use crate::specfun::{binomial, factorial, laguerre};
use crate::state::{
    expectation_adp_aq, normalization_constant, psdfs_closed_form, DensityMatrix, FockVector,
    StateParams,
};
use crate::wigner::WignerClosed;

/// Symmetrized quadrature covariances with `q = (a + a^dag)/sqrt2`,
/// `p = (a - a^dag)/(i sqrt2)`, normalized so the vacuum gives the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceMatrix {
    pub s_qq: f64,
    pub s_pp: f64,
    pub s_qp: f64,
}

impl CovarianceMatrix {
    pub fn det(&self) -> f64 {
        self.s_qq * self.s_pp - self.s_qp * self.s_qp
    }
}

/// Amplitudes `psi(j, l)` of the two-mode state produced by a 50:50 beam
/// splitter with `v` in port A and vacuum in port B.
///
/// `|m, 0> -> 2^{-m/2} sum_j sqrt(C(m, j)) |j, m - j>`, so a component
/// `|m>` with `m < dim` stays inside the `dim x dim` box and the embedding is
/// exact.
pub fn beam_splitter_amplitudes(v: &FockVector) -> Result<DMatrix<C64>> {
    let norm = v.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(PsdfsError::InvalidParams(format!(
            "beam splitter input must be normalized, got norm^2 = {norm}"
        )));
    }
    let dim = v.dim();
    let mut psi = DMatrix::zeros(dim, dim);
    for (m, &c) in v.amps.iter().enumerate() {
        if c == ZERO {
            continue;
        }
        let scale = 0.5f64.powf(m as f64 / 2.0);
        for j in 0..=m {
            psi[(j, m - j)] = c * (scale * binomial(m, j).sqrt());
        }
    }
    Ok(psi)
}

/// Two-mode density matrix `|psi><psi|` on the `dim^2` product basis, index
/// `j * dim + l` for `|j>_A |l>_B`.
///
/// The matrix has `dim^4` entries; [`linear_entropy_potential`] works from
/// the amplitudes instead.
pub fn beam_splitter_output(v: &FockVector) -> Result<DensityMatrix> {
    let psi = beam_splitter_amplitudes(v)?;
    let dim = psi.nrows();
    let flat = nalgebra::DVector::from_iterator(
        dim * dim,
        (0..dim)
            .flat_map(|j| (0..dim).map(move |l| (j, l)))
            .map(|(j, l)| psi[(j, l)]),
    );
    Ok(DensityMatrix {
        elems: &flat * flat.adjoint(),
        mode_count: 2,
    })
}

/// `1 - Tr(rho_B^2)` for the beam-splitter output, tracing out mode A.
pub fn linear_entropy_potential(p: &StateParams) -> Result<f64> {
    let psi = beam_splitter_amplitudes(&psdfs_closed_form(p)?)?;
    // rho_B[l, l'] = sum_j psi(j, l) psi(j, l')^*
    let rho_b = psi.transpose() * psi.conjugate();
    let purity: f64 = rho_b.iter().map(|z| z.norm_sqr()).sum();
    let le = 1.0 - purity;
    if le < -1e-12 {
        return Err(PsdfsError::Invariant(format!(
            "reduced purity {purity} exceeds 1"
        )));
    }
    Ok(le.max(0.0))
}

/// Closed triple sum for the linear entropy potential, with `m, m2 < terms`
/// and `m1 <= m + m2`. Independent of the beam-splitter construction; used
/// as a cross-check.
pub fn linear_entropy_triple_sum(p: &StateParams, terms: usize) -> Result<f64> {
    let x = p.alpha.norm_sqr();
    if x == 0.0 {
        return Err(PsdfsError::Domain(
            "triple sum has negative powers of |alpha| at alpha = 0".into(),
        ));
    }
    let norm = normalization_constant(p)?;
    let (n, k) = (p.n as i64, p.k as i64);
    let lag = |a: i64| laguerre(p.n, a, x);
    let mut acc = 0.0;
    for m in 0..terms as i64 {
        for m2 in 0..terms as i64 {
            let outer = x.powi((m + m2 - 2 * n + 2 * k) as i32)
                / (2f64.powi((m + m2) as i32) * factorial(m as usize) * factorial(m2 as usize))
                * lag(m + k - n)
                * lag(m2 + k - n);
            for m1 in 0..=(m + m2) {
                acc += outer
                    * binomial((m + m2) as usize, m1 as usize)
                    * lag(m1 + k - n)
                    * lag(m - m1 + m2 + k - n);
            }
        }
    }
    let nf = factorial(p.n);
    Ok(1.0 - norm.powi(4) * (-2.0 * x).exp() * nf * nf * acc)
}

/// `1/2 + <a^dag a> - <a^dag><a>`.
pub fn skew_measure(p: &StateParams) -> Result<f64> {
    let nbar = expectation_adp_aq(p, 1, 1)?;
    let a = expectation_adp_aq(p, 0, 1)?;
    let a_dag = expectation_adp_aq(p, 1, 0)?;
    let val = C64::new(0.5, 0.0) + nbar - a_dag * a;
    if val.im.abs() > 1e-10 {
        return Err(PsdfsError::Invariant(format!(
            "skew measure has imaginary part {}",
            val.im
        )));
    }
    Ok(val.re)
}

pub fn covariance_matrix(p: &StateParams) -> Result<CovarianceMatrix> {
    let a = expectation_adp_aq(p, 0, 1)?;
    let a2 = expectation_adp_aq(p, 0, 2)?;
    let nbar = expectation_adp_aq(p, 1, 1)?.re;
    Ok(CovarianceMatrix {
        s_qq: 2.0 * a2.re + 2.0 * nbar + 1.0 - 4.0 * a.re * a.re,
        s_pp: -2.0 * a2.re + 2.0 * nbar + 1.0 - 4.0 * a.im * a.im,
        s_qp: 2.0 * a2.im - 4.0 * a.re * a.im,
    })
}

/// Von Neumann entropy (bits) of a single-mode Gaussian state with
/// symplectic eigenvalue `x >= 1`.
pub fn h(x: f64) -> f64 {
    let plus = (x + 1.0) / 2.0;
    let minus = (x - 1.0) / 2.0;
    let tail = if (x - 1.0).abs() < 1e-12 {
        0.0
    } else {
        minus * minus.log2()
    };
    plus * plus.log2() - tail
}

/// Entropy of the Gaussian state sharing the first and second moments.
pub fn relative_entropy_ng(p: &StateParams) -> Result<f64> {
    let det = covariance_matrix(p)?.det();
    if det < 1.0 - 1e-9 {
        return Err(PsdfsError::Invariant(format!(
            "covariance determinant {det} violates the uncertainty bound"
        )));
    }
    Ok(h(det.max(1.0).sqrt()))
}

/// Settings for the negative-volume integral in polar coordinates about
/// `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlnConfig {
    /// Angular nodes of the periodic trapezoid rule.
    pub order: usize,
    /// Disk radius about `alpha`; `None` picks `4 + sqrt(n + k)`.
    pub radius: Option<f64>,
}

impl Default for WlnConfig {
    fn default() -> Self {
        Self {
            order: 200,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlnResult {
    pub value: f64,
    pub negative_volume: f64,
    /// Difference to the half-order rule plus the bound on mass outside the
    /// disk.
    pub error_estimate: f64,
}

const RAY_SCAN: usize = 400;
const RAY_GL: usize = 24;

/// `log2 ∫|W| d^2 gamma`.
///
/// `∫W = 1` exactly, so `∫|W| = 1 + 2 V` with `V` the negative volume, and
/// only the negative part is integrated numerically. Along each ray from
/// `alpha` the sign changes of `W` are bracketed and bisected, and each
/// negative segment gets its own Gauss-Legendre rule, so the kink of
/// `min(W, 0)` never sits inside a rule.
pub fn wigner_log_negativity(p: &StateParams, cfg: WlnConfig) -> Result<WlnResult> {
    let w = WignerClosed::new(p)?;
    let floor = 4.0 + ((p.n + p.k) as f64).sqrt();
    let radius = cfg.radius.unwrap_or(floor);
    let tail = w.tail_bound(radius);
    if cfg.order < 2 || tail > 1e-6 {
        return Err(PsdfsError::BoxTooSmall {
            half_width: radius,
            tail,
            suggested: floor.max(radius + 2.0),
        });
    }
    let gl = LegendreAxis::new(RAY_GL, -1.0, 1.0)?;
    let v = negative_volume(&w, p.alpha, radius, cfg.order, &gl);
    let v_half = negative_volume(&w, p.alpha, radius, cfg.order / 2, &gl);
    Ok(WlnResult {
        value: (1.0 + 2.0 * v).log2(),
        negative_volume: v,
        error_estimate: 2.0 * (v - v_half).abs() / std::f64::consts::LN_2 + tail,
    })
}

fn negative_volume(
    w: &WignerClosed,
    centre: C64,
    radius: f64,
    n_theta: usize,
    gl: &LegendreAxis,
) -> f64 {
    let rays: Vec<f64> = (0..n_theta)
        .into_par_iter()
        .map(|j| {
            let dir = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64);
            ray_negative_moment(|r| w.eval(centre + dir * r), radius, gl)
        })
        .collect();
    2.0 * std::f64::consts::PI / n_theta as f64 * rays.iter().sum::<f64>()
}

/// `-∫_0^R r min(f(r), 0) dr`.
fn ray_negative_moment(f: impl Fn(f64) -> f64, radius: f64, gl: &LegendreAxis) -> f64 {
    let h = radius / RAY_SCAN as f64;
    let mut cuts = vec![0.0];
    let mut prev = f(0.0);
    for i in 1..=RAY_SCAN {
        let r = h * i as f64;
        let cur = f(r);
        if (prev < 0.0) != (cur < 0.0) {
            let (mut lo, mut hi) = (r - h, r);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) < 0.0) == (prev < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    cuts.push(radius);
    let mut acc = 0.0;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if f(0.5 * (a + b)) >= 0.0 {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        acc -= half
            * gl.integrate(|t| {
                let r = mid + half * t;
                r * f(r).min(0.0)
            });
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportParams {
    pub n: usize,
    pub k: usize,
    pub alpha: [f64; 2],
}

/// The four measures and the covariance matrix for one parameter point.
/// A measure that failed is `None` with its message under `errors`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub params: ReportParams,
    pub linear_entropy: Option<f64>,
    pub skew: Option<f64>,
    pub wln: Option<f64>,
    pub rel_entropy_ng: Option<f64>,
    pub covariance: Option<CovarianceMatrix>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

impl MeasureReport {
    pub fn is_complete(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn measure_report(p: &StateParams) -> MeasureReport {
    let mut errors = BTreeMap::new();
    let mut keep = |name: &str, r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.insert(name.to_string(), e.to_string());
            None
        }
    };
    let linear_entropy = keep("linear_entropy", linear_entropy_potential(p));
    let skew = keep("skew", skew_measure(p));
    let wln = keep(
        "wln",
        wigner_log_negativity(p, WlnConfig::default()).map(|r| r.value),
    );
    let rel_entropy_ng = keep("rel_entropy_ng", relative_entropy_ng(p));
    let covariance = match covariance_matrix(p) {
        Ok(c) => Some(c),
        Err(e) => {
            errors.insert("covariance".into(), e.to_string());
            None
        }
    };
    MeasureReport {
        params: ReportParams {
            n: p.n,
            k: p.k,
            alpha: [p.alpha.re, p.alpha.im],
        },
        linear_entropy,
        skew,
        wln,
        rel_entropy_ng,
        covariance,
        errors,
    }
}

/// Report for raw parameters; construction failures (for example a null
/// state) become an all-absent report.
pub fn measure_report_for(n: usize, k: usize, alpha: C64) -> MeasureReport {
    match StateParams::new(n, k, alpha) {
        Ok(p) => measure_report(&p),
        Err(e) => MeasureReport {
            params: ReportParams {
                n,
                k,
                alpha: [alpha.re, alpha.im],
            },
            linear_entropy: None,
            skew: None,
            wln: None,
            rel_entropy_ng: None,
            covariance: None,
            errors: BTreeMap::from([("params".to_string(), e.to_string())]),
        },
    }
}

/// Reports for each `alpha`, in input order.
pub fn measure_sweep(n: usize, k: usize, alphas: &[C64]) -> Vec<MeasureReport> {
    alphas
        .par_iter()
        .map(|&a| measure_report_for(n, k, a))
        .collect()
}

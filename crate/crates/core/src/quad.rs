//! Quadrature rules used by the phase-space integrals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

use crate::error::{PsdfsError, Result};

/// Gauss-Legendre nodes and weights mapped onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct LegendreAxis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LegendreAxis {
    pub fn new(order: usize, a: f64, b: f64) -> Result<Self> {
        let order = NonZeroUsize::new(order)
            .ok_or_else(|| PsdfsError::InvalidParams("quadrature order must be positive".into()))?;
        let rule = GaussLegendre::new(order);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (nodes, weights) = rule
            .iter()
            .map(|&(x, w)| (mid + half * x, half * w))
            .unzip();
        Ok(Self { nodes, weights })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Tensor-product rule over `x_axis x y_axis`. Rows are evaluated in
/// parallel and summed in row order, so the result does not depend on the
/// worker count.
pub fn tensor_integrate<F>(x_axis: &LegendreAxis, y_axis: &LegendreAxis, f: F) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rows: Vec<f64> = x_axis
        .nodes
        .par_iter()
        .zip(x_axis.weights.par_iter())
        .map(|(&x, &wx)| {
            wx * y_axis
                .nodes
                .iter()
                .zip(&y_axis.weights)
                .map(|(&y, &wy)| wy * f(x, y))
                .sum::<f64>()
        })
        .collect();
    rows.iter().sum()
}

/// Composite trapezoid weights on `steps` uniform nodes of `[min, max]`.
pub fn trapezoid_weights(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let h = (max - min) / (steps - 1) as f64;
    (0..steps)
        .map(|i| if i == 0 || i + 1 == steps { 0.5 * h } else { h })
        .collect()
}

/// `steps` uniform nodes spanning `[min, max]` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let h = (max - min) / (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                max
            } else {
                min + h * i as f64
            }
        })
        .collect()
}

/// Adaptive double-exponential quadrature on a finite interval.
///
/// Returns `(integral, error_estimate)`.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let out = quadrature::double_exponential::integrate(f, a, b, tol);
    (out.integral, out.error_estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn legendre_integrates_polynomials_and_gaussians() {
        let axis = LegendreAxis::new(5, 0.0, 2.0).unwrap();
        assert_relative_eq!(axis.integrate(|x| x.powi(9)), 102.4, max_relative = 1e-13);
        let axis = LegendreAxis::new(200, -8.0, 8.0).unwrap();
        assert_relative_eq!(
            axis.integrate(|x| (-x * x).exp()),
            PI.sqrt(),
            max_relative = 1e-14
        );
        assert!(LegendreAxis::new(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn tensor_gaussian() {
        let axis = LegendreAxis::new(80, -7.0, 7.0).unwrap();
        let got = tensor_integrate(&axis, &axis, |x, y| (-(x * x + y * y)).exp());
        assert_relative_eq!(got, PI, max_relative = 1e-13);
    }

    #[test]
    fn trapezoid_is_spectral_for_gaussians() {
        let w = trapezoid_weights(-6.0, 6.0, 121);
        let x = linspace(-6.0, 6.0, 121);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x).exp()).sum();
        assert_relative_eq!(s, PI.sqrt(), max_relative = 1e-14);
        assert_eq!(x[120], 6.0);
    }

    #[test]
    fn adaptive_gaussian() {
        let (v, err) = adaptive(|x| (-x * x).exp(), -9.0, 9.0, 1e-10);
        assert_relative_eq!(v, PI.sqrt(), max_relative = 1e-10);
        assert!(err < 1e-8);
    }
}

//! Quadrature rules: Gauss–Legendre, adaptive Gauss–Kronrod and a
//! substitution rule for integrands with an algebraic singularity at 0.

use std::collections::BinaryHeap;

use thiserror::Error;

use crate::spectral::legendre_with_derivative;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("a quadrature rule needs at least one node")]
    ZeroOrder,
}

/// Nodes and weights of an `n`-point rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integral over `[a, b]` by affine rescaling.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.integrate(|x| f(mid + half * x))
    }
}

/// Gauss–Legendre rule with `n` nodes.
///
/// Nodes are the roots of `P_n`, polished by Newton's method from the
/// Chebyshev-like guesses `cos(π(i + 3/4)/(n + 1/2))`; weights are
/// `2 / ((1 − x²) P_n'(x)²)`. Nodes come out in increasing order.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule, QuadratureError> {
    if n == 0 {
        return Err(QuadratureError::ZeroOrder);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // one more step at full precision
        let (p, dp) = legendre_with_derivative(n, x);
        x -= p / dp;
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss 7-point weights for the odd-indexed Kronrod nodes
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = GK15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = half * GK15_NODES[i];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += GK15_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Most subintervals [`integrate_adaptive`] will create.
pub const MAX_SUBINTERVALS: usize = 1000;

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration.
///
/// Repeatedly bisects the subinterval with the largest error estimate until
/// the summed estimate drops below `abs_tol` or [`MAX_SUBINTERVALS`] is hit.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Integral {
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total_err = error;
    while total_err > abs_tol && heap.len() < MAX_SUBINTERVALS {
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (lv, le) = gk15(&f, worst.a, m);
        let (rv, re) = gk15(&f, m, worst.b);
        total_err += le + re - worst.error;
        heap.push(Panel { a: worst.a, b: m, value: lv, error: le });
        heap.push(Panel { a: m, b: worst.b, value: rv, error: re });
    }
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Integral { value, error }
}

/// `∫₀^b f(θ) dθ` for `f(θ) ~ θ^{1-α}` near 0, `α < 2`.
///
/// Substitutes `θ = b·u^p` with `p = 2/(2 − α)`, which turns the model
/// singularity into the smooth integrand `p·b^{2−α}·u`, then integrates
/// adaptively in `u`.
pub fn integrate_from_origin(
    f: impl Fn(f64) -> f64,
    b: f64,
    alpha: f64,
    abs_tol: f64,
) -> Integral {
    assert!(alpha < 2.0, "θ^(1-α) is not integrable at 0 for α ≥ 2");
    let p = 2.0 / (2.0 - alpha);
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let theta = b * u.powf(p);
        f(theta) * b * p * u.powf(p - 1.0)
    };
    integrate_adaptive(g, 0.0, 1.0, abs_tol)
}

/// Composite Gauss–Legendre over `[a, b]` on geometrically graded panels,
/// finest near `a`. Used as a fixed-grid cross-check of the adaptive rule.
pub fn integrate_graded(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    rule: &QuadratureRule,
) -> f64 {
    assert!(a > 0.0 && b > a);
    let ratio = (b / a).powf(1.0 / panels as f64);
    let mut lo = a;
    let mut total = 0.0;
    for i in 0..panels {
        let hi = if i + 1 == panels { b } else { lo * ratio };
        total += rule.integrate_on(lo, hi, &f);
        lo = hi;
    }
    total
}

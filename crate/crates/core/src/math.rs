//! Numeric helpers shared by the models.

/// Digamma function ψ(x) for x > 0.
///
/// Shifts the argument above 10 with ψ(x) = ψ(x + 1) − 1/x, then applies the
/// asymptotic expansion. Absolute error stays below 1e-10 for x ≥ 1e-6.
pub fn digamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0, "digamma requires a positive argument");
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_2n / (2n).
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    shift + x.ln() - 0.5 * inv - series
}

/// exp(E[log p]) under a Dirichlet with the given parameters.
pub fn exp_dirichlet_expectation(params: &[f64], out: &mut [f64]) {
    let total = digamma(params.iter().sum());
    for (o, &p) in out.iter_mut().zip(params) {
        *o = (digamma(p) - total).exp();
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_at_integers_matches_harmonic_numbers() {
        // ψ(n) = −γ + H_{n−1}
        let mut harmonic = 0.0;
        for n in 1..40 {
            let expected = -EULER_GAMMA + harmonic;
            assert!((digamma(n as f64) - expected).abs() < 1e-12, "n={n}");
            harmonic += 1.0 / n as f64;
        }
    }

    #[test]
    fn digamma_at_half_integers() {
        // ψ(n + 1/2) = −γ − 2 ln 2 + Σ_{k=1..n} 2/(2k − 1)
        let mut acc = 0.0;
        for n in 0..30 {
            let expected = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2 + acc;
            assert!((digamma(n as f64 + 0.5) - expected).abs() < 1e-12, "n={n}");
            acc += 2.0 / (2 * n + 1) as f64;
        }
    }

    #[test]
    fn digamma_small_argument_uses_recurrence() {
        // ψ(x) = ψ(x + 1) − 1/x is exact, so tiny arguments inherit ψ(1 + x).
        for &x in &[1e-6, 1e-4, 0.01, 0.3] {
            let lhs = digamma(x);
            let rhs = digamma(x + 1.0) - 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 / x).max(1.0), "x={x}");
        }
        // Series around 1: ψ(1 + x) ≈ −γ + ζ(2)·x for small x.
        let x = 1e-6;
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((digamma(1.0 + x) - (-EULER_GAMMA + zeta2 * x)).abs() < 1e-11);
    }

    #[test]
    fn cosine_of_zero_vector_is_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        assert!((cosine(&[1.0, 2.0], &[2.0, 4.0]) - 1.0).abs() < 1e-15);
    }
}

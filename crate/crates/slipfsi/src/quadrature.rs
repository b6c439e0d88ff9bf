//! Grundmann–Möller rules on simplices, stored in barycentric coordinates
//! with weights normalized to sum to one (multiply by the simplex measure).

#[derive(Debug, Clone)]
pub struct SimplexRule {
    /// Barycentric coordinates, `dim + 1` entries per point.
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Rule of polynomial degree `2s + 1` on a `dim`-simplex.
    pub fn grundmann_moller(dim: usize, s: usize) -> Self {
        let d = 2 * s + 1;
        let n = dim;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let fact = |k: usize| (1..=k).fold(1.0f64, |a, b| a * b as f64);
        for i in 0..=s {
            let denom = (d + n - 2 * i) as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * 2f64.powi(-(2 * s as i32)) * denom.powi(d as i32)
                / (fact(i) * fact(d + n - i))
                * fact(n);
            for beta in compositions(s - i, n + 1) {
                points.push(beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect());
                weights.push(w);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Rule exact for tetrahedral polynomials of the given degree.
    pub fn tet(degree: usize) -> Self {
        Self::grundmann_moller(3, degree / 2)
    }

    pub fn triangle(degree: usize) -> Self {
        Self::grundmann_moller(2, degree / 2)
    }
}

/// All vectors of `parts` nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: usize) -> f64 {
        (1..=k).fold(1.0, |a, b| a * b as f64)
    }

    /// ∫ λ^α over a simplex of unit measure equals α! n! / (|α| + n)!.
    fn exact_moment(alpha: &[usize]) -> f64 {
        let n = alpha.len() - 1;
        let tot: usize = alpha.iter().sum();
        alpha.iter().map(|&a| factorial(a)).product::<f64>() * factorial(n) / factorial(tot + n)
    }

    #[test]
    fn weights_sum_to_one() {
        for s in 0..5 {
            let r = SimplexRule::grundmann_moller(3, s);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let r2 = SimplexRule::grundmann_moller(2, s);
            assert!((r2.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
        assert_eq!(SimplexRule::grundmann_moller(3, 4).len(), 70);
    }

    #[test]
    fn barycentric_moments_are_exact_up_to_degree() {
        let rule = SimplexRule::tet(8);
        for alpha in [[2, 2, 2, 2], [3, 1, 0, 4], [0, 0, 0, 9], [1, 1, 1, 1]] {
            let deg: usize = alpha.iter().sum();
            let q: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * p.iter().zip(alpha.iter()).map(|(x, &a)| x.powi(a as i32)).product::<f64>())
                .sum();
            let e = exact_moment(&alpha);
            if deg <= 9 {
                assert!((q - e).abs() < 1e-13 * e.max(1e-3), "alpha {alpha:?}");
            }
        }
        let tri = SimplexRule::triangle(4);
        let q: f64 = tri
            .points
            .iter()
            .zip(&tri.weights)
            .map(|(p, w)| w * p[0].powi(2) * p[1] * p[2])
            .sum();
        assert!((q - exact_moment(&[2, 1, 1])).abs() < 1e-14);
    }
}

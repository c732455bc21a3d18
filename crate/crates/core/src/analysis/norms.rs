//! Sampled weighted Hölder norms of node fields with corner weights
//! `δ_x = min(dist(x, P), 1)` and decay weights `Δ_x = max(|x|, 1)`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AnalysisError;
use crate::geometry::CurvilinearGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNormSpec {
    /// Highest derivative order, at most 2.
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Corner exponent.
    pub sigma: f64,
    pub corners: Vec<[f64; 2]>,
    /// Random long-range pairs added to the neighbour pairs.
    pub long_range_pairs: usize,
    pub seed: u64,
}

impl WeightedNormSpec {
    pub fn new(k: usize, alpha: f64, beta: f64) -> Self {
        Self { k, alpha, beta, sigma: 0.0, corners: Vec::new(), long_range_pairs: 20_000, seed: 0 }
    }

    pub fn with_corners(mut self, sigma: f64, corners: Vec<[f64; 2]>) -> Self {
        self.sigma = sigma;
        self.corners = corners;
        self
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.k > 2 {
            return Err(AnalysisError::InvalidSpec(format!("derivative order {} exceeds 2", self.k)));
        }
        if !(self.beta > 0.0 && self.beta < self.alpha && self.alpha < 1.0) {
            return Err(AnalysisError::InvalidSpec(format!(
                "need 0 < beta < alpha < 1, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        if self.sigma != 0.0 && self.corners.is_empty() {
            return Err(AnalysisError::InvalidSpec("a corner exponent needs at least one corner point".into()));
        }
        Ok(())
    }

    fn delta(&self, x: [f64; 2]) -> f64 {
        self.corners.iter().map(|c| (x[0] - c[0]).hypot(x[1] - c[1])).fold(1.0, f64::min)
    }
}

/// Seminorms of a sampled weighted norm.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNorm {
    pub sup_terms: Vec<f64>,
    pub holder: f64,
}

impl WeightedNorm {
    pub fn total(&self) -> f64 {
        self.sup_terms.iter().sum::<f64>() + self.holder
    }
}

/// All derivatives of order `order` at node `k`, or `None` where they are
/// not available (second derivatives on the boundary).
fn derivative_set(grid: &CurvilinearGrid, u: &[f64], k: usize, order: usize) -> Option<Vec<f64>> {
    let (i, j) = grid.ij(k);
    match order {
        0 => Some(vec![u[k]]),
        1 => Some(grid.gradient(u, i, j).to_vec()),
        _ if grid.is_boundary(i, j) => None,
        _ => {
            let d = grid.derivatives(u, i, j);
            Some(vec![d[2], d[3], d[4]])
        }
    }
}

/// Lower bound of `‖u‖_{k,α;(β)}^{(σ;P)}` from the grid nodes, all
/// neighbouring pairs and a seeded sample of long-range pairs.
pub fn discrete_weighted_norm(
    grid: &CurvilinearGrid,
    u: &[f64],
    spec: &WeightedNormSpec,
) -> Result<WeightedNorm, AnalysisError> {
    spec.validate()?;
    let n = grid.len();
    let big_delta = |x: [f64; 2]| x[0].hypot(x[1]).max(1.0);
    let mut sup_terms = vec![0.0f64; spec.k + 1];
    let mut top: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let x = grid.nodes[k];
        let delta = spec.delta(x);
        for (order, term) in sup_terms.iter_mut().enumerate() {
            let Some(d) = derivative_set(grid, u, k, order) else { continue };
            let m = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let w = delta.powf((order as f64 + spec.sigma).max(0.0)) * big_delta(x).powf(spec.beta + order as f64);
            *term = term.max(w * m);
        }
        top.push(derivative_set(grid, u, k, spec.k));
    }

    let mut pairs = Vec::new();
    for k in 0..n {
        let (i, j) = grid.ij(k);
        for (di, dj) in [(1isize, 0isize), (0, 1), (1, 1), (1, -1)] {
            let (ii, jj) = (i as isize + di, j as isize + dj);
            if ii >= 0 && jj >= 0 && (ii as usize) < grid.nx && (jj as usize) < grid.nz {
                pairs.push((k, grid.idx(ii as usize, jj as usize)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.long_range_pairs {
        pairs.push((rng.random_range(0..n), rng.random_range(0..n)));
    }

    let mut holder = 0.0f64;
    for (a, b) in pairs {
        let (Some(da), Some(db)) = (&top[a], &top[b]) else { continue };
        let (xa, xb) = (grid.nodes[a], grid.nodes[b]);
        let dist = (xa[0] - xb[0]).hypot(xa[1] - xb[1]);
        if dist == 0.0 {
            continue;
        }
        let diff = da.iter().zip(db).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        let delta = spec.delta(xa).min(spec.delta(xb));
        let kk = spec.k as f64;
        let w = delta.powf((kk + spec.alpha + spec.sigma).max(0.0))
            * big_delta(xa).max(big_delta(xb)).powf(spec.beta + kk + spec.alpha);
        holder = holder.max(w * diff / dist.powf(spec.alpha));
    }
    Ok(WeightedNorm { sup_terms, holder })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_rectangle_grid, Grading};
    use proptest::prelude::*;

    fn grid() -> CurvilinearGrid {
        generate_rectangle_grid([-8.0, 8.0], [0.0, 8.0], 33, 17, Grading::uniform()).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = grid();
        let n = discrete_weighted_norm(&g, &vec![0.0; g.len()], &WeightedNormSpec::new(2, 0.8, 0.4)).unwrap();
        assert_eq!(n.total(), 0.0);
    }

    #[test]
    fn decay_weight_cancels() {
        let g = grid();
        let u: Vec<f64> = g.nodes.iter().map(|x| x[0].hypot(x[1]).max(1.0).powf(-0.4)).collect();
        let n = discrete_weighted_norm(&g, &u, &WeightedNormSpec::new(0, 0.8, 0.4)).unwrap();
        assert!((n.sup_terms[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corner_exponent_needs_corners() {
        let spec = WeightedNormSpec::new(2, 0.8, 0.4).with_corners(-1.8, vec![]);
        assert!(spec.validate().is_err());
    }

    proptest! {
        #[test]
        fn norm_grows_with_more_pairs(extra in 1usize..5000, seed in 0u64..100) {
            let g = grid();
            let u: Vec<f64> = g.nodes.iter().map(|x| (0.3 * x[0]).sin() * (-0.2 * x[1]).exp()).collect();
            let mut spec = WeightedNormSpec::new(1, 0.8, 0.4);
            spec.seed = seed;
            spec.long_range_pairs = 1000;
            let small = discrete_weighted_norm(&g, &u, &spec).unwrap();
            spec.long_range_pairs = 1000 + extra;
            let large = discrete_weighted_norm(&g, &u, &spec).unwrap();
            // Same seed: the larger sample contains the smaller one.
            prop_assert!(large.holder >= small.holder);
            prop_assert!(large.total() >= small.total());
        }
    }
}

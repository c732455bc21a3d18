//! Sampled weighted Hölder norms of functions on a half line.
//!
//! For `f` on a half line `Γ` the norm is
//!
//! ```text
//! [f]_{i,0}  = sup_x (|x| + c)^{i+β} |f^(i)(x)|
//! [f]_{k,α}  = sup_{x≠x'} (w(|x|,|x'|) + c)^{k+α+β} |f^(k)(x) - f^(k)(x')| / |x - x'|^α
//! ‖f‖        = Σ_{i≤k} [f]_{i,0} + [f]_{k,α}
//! ```
//!
//! with `c = 1` for boundary pieces and `c = m0` for the entropy and
//! Bernoulli functions. The pair weight `w` is the smaller of the two
//! distances by default; taking the larger one makes the seminorm infinite
//! for every function whose k-th derivative is not identically zero at the
//! end point, so it is only available as an explicit option. Every
//! supremum is taken over a finite deterministic sample, so the returned
//! values are lower bounds of the continuum norm.

/// Which point of a pair sets the decay weight of a Hölder quotient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairWeight {
    #[default]
    Nearer,
    Farther,
}

/// Parameters of a weighted line norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineNormSpec {
    /// Highest derivative order, at most 2.
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Additive constant in the weight (`1` or `m0`).
    pub offset: f64,
    pub pair_weight: PairWeight,
}

impl LineNormSpec {
    pub fn new(k: usize, alpha: f64, beta: f64) -> Self {
        Self { k, alpha, beta, offset: 1.0, pair_weight: PairWeight::Nearer }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }
}

/// A half line `{start + direction * t : t >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLine {
    pub start: f64,
    pub direction: f64,
}

impl HalfLine {
    pub fn right_of(start: f64) -> Self {
        Self { start, direction: 1.0 }
    }

    pub fn left_of(start: f64) -> Self {
        Self { start, direction: -1.0 }
    }
}

/// Deterministic sample plan: geometric point spacing out to `span` and
/// pairs at the listed index gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub points: usize,
    pub span: f64,
    pub pair_gaps: Vec<usize>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self { points: 2000, span: 1.0e4, pair_gaps: vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233] }
    }
}

impl SamplePlan {
    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    /// Sample abscissae on `line`, starting with the end point itself.
    pub fn abscissae(&self, line: HalfLine) -> Vec<f64> {
        let n = self.points.max(2);
        let top = self.span.ln_1p();
        (0..n)
            .map(|i| {
                let t = (top * i as f64 / (n - 1) as f64).exp_m1();
                line.start + line.direction * t
            })
            .collect()
    }

    pub fn pairs(&self, n: usize) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for &gap in &self.pair_gaps {
            if gap == 0 {
                continue;
            }
            for i in 0..n.saturating_sub(gap) {
                pairs.push((i, i + gap));
            }
        }
        pairs
    }
}

/// The individual seminorms making up a sampled line norm.
#[derive(Debug, Clone, PartialEq)]
pub struct LineNormBreakdown {
    /// `[f]_{i,0}` for `i = 0..=k`.
    pub sup_terms: Vec<f64>,
    /// `[f]_{k,α}`.
    pub holder: f64,
}

impl LineNormBreakdown {
    pub fn total(&self) -> f64 {
        self.sup_terms.iter().sum::<f64>() + self.holder
    }
}

/// Weighted norm over explicit sample points and index pairs.
///
/// `f` returns `[f, f', f'']`. Enlarging `points` or `pairs` can only
/// increase each supremum.
pub fn line_norm_on_samples<F>(f: F, spec: &LineNormSpec, points: &[f64], pairs: &[(usize, usize)]) -> LineNormBreakdown
where
    F: Fn(f64) -> [f64; 3],
{
    assert!(spec.k <= 2, "line norms are implemented up to second derivatives");
    let values: Vec<[f64; 3]> = points.iter().map(|&x| f(x)).collect();
    let mut sup_terms = vec![0.0f64; spec.k + 1];
    for (&x, v) in points.iter().zip(&values) {
        for (i, term) in sup_terms.iter_mut().enumerate() {
            let w = (x.abs() + spec.offset).powf(i as f64 + spec.beta);
            *term = term.max(w * v[i].abs());
        }
    }
    let mut holder = 0.0f64;
    for &(a, b) in pairs {
        let (xa, xb) = (points[a], points[b]);
        let dist = (xa - xb).abs();
        if dist == 0.0 {
            continue;
        }
        let r = match spec.pair_weight {
            PairWeight::Nearer => xa.abs().min(xb.abs()),
            PairWeight::Farther => xa.abs().max(xb.abs()),
        };
        let w = (r + spec.offset).powf(spec.k as f64 + spec.alpha + spec.beta);
        let q = w * (values[a][spec.k] - values[b][spec.k]).abs() / dist.powf(spec.alpha);
        holder = holder.max(q);
    }
    LineNormBreakdown { sup_terms, holder }
}

/// Weighted norm of `f` on a half line using a deterministic sample plan.
pub fn sampled_line_norm<F>(f: F, spec: &LineNormSpec, line: HalfLine, plan: &SamplePlan) -> LineNormBreakdown
where
    F: Fn(f64) -> [f64; 3],
{
    let points = plan.abscissae(line);
    let pairs = plan.pairs(points.len());
    line_norm_on_samples(f, spec, &points, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_function_has_zero_norm() {
        let spec = LineNormSpec::new(2, 0.8, 0.4);
        let b = sampled_line_norm(|_| [0.0; 3], &spec, HalfLine::right_of(1.0), &SamplePlan::default());
        assert_eq!(b.total(), 0.0);
    }

    #[test]
    fn weight_cancelling_function_has_unit_sup_term() {
        let beta = 0.4;
        let spec = LineNormSpec::new(0, 0.8, beta);
        let f = |x: f64| [(x.abs() + 1.0).powf(-beta), 0.0, 0.0];
        let b = sampled_line_norm(f, &spec, HalfLine::right_of(1.0), &SamplePlan::default());
        assert!((b.sup_terms[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_sup_term_matches_dense_scan() {
        // sup over (1, inf) of (x+1)^0.4 x^-2 is attained at x = 1.
        let spec = LineNormSpec::new(0, 0.8, 0.4);
        let f = |x: f64| [x.powi(-2), 0.0, 0.0];
        let b = sampled_line_norm(f, &spec, HalfLine::right_of(1.0), &SamplePlan::default());
        let oracle = (0..200_000)
            .map(|i| 1.0 + i as f64 * 1e-3)
            .map(|x| (x + 1.0f64).powf(0.4) * x.powi(-2))
            .fold(0.0f64, f64::max);
        assert!((b.sup_terms[0] - oracle).abs() < 1e-12 * oracle);
        assert!((oracle - 2f64.powf(0.4)).abs() < 1e-12);
    }

    #[test]
    fn left_half_line_uses_absolute_value_weights() {
        let spec = LineNormSpec::new(0, 0.5, 1.0);
        let f = |x: f64| [1.0 / (x.abs() + 1.0), 0.0, 0.0];
        let b = sampled_line_norm(f, &spec, HalfLine::left_of(-1.0), &SamplePlan::default());
        assert!((b.sup_terms[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn farther_pair_weight_grows_with_pair_distance() {
        // The farther-point weight grows like d^{k+β} for the pair (0, d).
        let mut spec = LineNormSpec::new(0, 0.8, 0.4);
        let f = |x: f64| [(-x).exp(), 0.0, 0.0];
        let quotient = |spec: &LineNormSpec, d: f64| line_norm_on_samples(f, spec, &[0.0, d], &[(0, 1)]).holder;
        spec.pair_weight = PairWeight::Farther;
        assert!(quotient(&spec, 1e4) > 10.0 * quotient(&spec, 10.0));
        spec.pair_weight = PairWeight::Nearer;
        assert!(quotient(&spec, 1e4) < quotient(&spec, 10.0));
    }

    proptest! {
        #[test]
        fn norm_is_monotone_under_sample_enrichment(
            base in prop::collection::vec(1.0f64..50.0, 2..30),
            extra in prop::collection::vec(1.0f64..50.0, 1..30),
        ) {
            let spec = LineNormSpec::new(2, 0.7, 0.3);
            let f = |x: f64| [x.sin() / x, (x.cos() * x - x.sin()) / (x * x), -x.sin() / x];
            let pairs = |n: usize| -> Vec<(usize, usize)> {
                (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
            };
            let small = line_norm_on_samples(f, &spec, &base, &pairs(base.len()));
            let mut all = base.clone();
            all.extend(extra);
            let large = line_norm_on_samples(f, &spec, &all, &pairs(all.len()));
            for (s, l) in small.sup_terms.iter().zip(&large.sup_terms) {
                prop_assert!(l >= s);
            }
            prop_assert!(large.holder >= small.holder);
            prop_assert!(large.total() >= small.total());
        }
    }
}

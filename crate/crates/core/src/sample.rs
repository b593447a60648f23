//! Deterministic sampling: a fixed, seeded PRNG stream (ChaCha8) with an
//! explicit uint-to-float mapping, admissibility boxes, and the seeded
//! random chart / warped-product generators used by the verification suites.
//!
//! Reports must be byte-identical across platforms for a fixed seed, so the
//! float mapping is pinned here: each draw takes the top 53 bits of a
//! `next_u64` and scales by 2^-53, giving a uniform value in [0, 1).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::expr::Expression;
use crate::geometry::{ChartManifold, GeomError, VectorField};
use crate::scalar::Real;
use crate::warped::{PlacedField, Placement, WarpedProduct};

/// Seeded random stream with a platform-stable float mapping.
pub struct SampleRng {
    rng: ChaCha8Rng,
}

impl SampleRng {
    pub fn seed(seed: u64) -> Self {
        SampleRng { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Uniform in [0, 1).
    pub fn unit<T: Real>(&mut self) -> T {
        let bits = self.rng.next_u64() >> 11;
        T::of(bits as f64 * (1.0 / 9007199254740992.0))
    }

    /// Uniform in [lo, hi).
    pub fn range<T: Real>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * self.unit::<T>()
    }

    /// Uniform in [-amp, amp).
    pub fn symmetric<T: Real>(&mut self, amp: T) -> T {
        self.range(-amp, amp)
    }

    /// Uniform index in 0..n.
    pub fn below(&mut self, n: usize) -> usize {
        (self.rng.next_u64() % n as u64) as usize
    }

    /// Child stream seeded from this one (keeps sub-generators independent
    /// of how many draws each consumes).
    pub fn derive(&mut self) -> SampleRng {
        SampleRng::seed(self.rng.next_u64())
    }
}

/// Per-coordinate admissibility intervals from which sample points are drawn.
#[derive(Clone, Debug)]
pub struct SampleBox<T> {
    intervals: Vec<(T, T)>,
}

impl<T: Real> SampleBox<T> {
    pub fn new(intervals: Vec<(T, T)>) -> Result<Self, GeomError> {
        for (i, (lo, hi)) in intervals.iter().enumerate() {
            if !(lo < hi) {
                return Err(GeomError::DimensionMismatch {
                    what: format!("sample box interval {i} must satisfy lo < hi"),
                    expected: 2,
                    found: 0,
                });
            }
        }
        Ok(SampleBox { intervals })
    }

    pub fn centered(dim: usize, half_width: T) -> Self {
        SampleBox { intervals: vec![(-half_width, half_width); dim] }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(T, T)] {
        &self.intervals
    }

    /// One point, coordinates drawn i.i.d. uniform in declaration order.
    pub fn sample(&self, rng: &mut SampleRng) -> Vec<T> {
        self.intervals.iter().map(|&(lo, hi)| rng.range(lo, hi)).collect()
    }

    pub fn sample_many(&self, rng: &mut SampleRng, count: usize) -> Vec<Vec<T>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    /// Concatenate with another box (base ++ fiber).
    pub fn join(&self, other: &SampleBox<T>) -> SampleBox<T> {
        let mut intervals = self.intervals.clone();
        intervals.extend_from_slice(&other.intervals);
        SampleBox { intervals }
    }
}

fn coord_names(prefix: &str, dim: usize) -> std::sync::Arc<[String]> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

/// A random degree-≤2 polynomial `c0·x_a + c1·x_b·x_c` with coefficients in
/// [-0.3, 0.3). On the box [-0.8, 0.8]^dim its magnitude stays below 0.44,
/// so `1 + poly` keeps diagonal metrics positive definite without rejection.
fn small_polynomial<T: Real>(
    coords: &std::sync::Arc<[String]>,
    rng: &mut SampleRng,
) -> Expression<T> {
    let dim = coords.len();
    let amp = T::of(0.3);
    let c0 = rng.symmetric(amp);
    let c1 = rng.symmetric(amp);
    let a = rng.below(dim);
    let b = rng.below(dim);
    let c = rng.below(dim);
    let xa = Expression::coordinate(coords.clone(), a);
    let xb = Expression::coordinate(coords.clone(), b);
    let xc = Expression::coordinate(coords.clone(), c);
    xa.scaled(c0).add(&xb.mul(&xc).scaled(c1))
}

/// Half-width of the box used by the random generators.
pub const RANDOM_BOX_HALF_WIDTH: f64 = 0.8;

/// Seeded random Riemannian chart: diagonal metric with entries
/// `1 + small polynomial`, positive definite on its box by construction.
pub fn random_chart<T: Real>(
    rng: &mut SampleRng,
    dim: usize,
    prefix: &str,
) -> (ChartManifold<T>, SampleBox<T>) {
    let coords = coord_names(prefix, dim);
    let one = Expression::constant(coords.clone(), T::one());
    let diag: Vec<Expression<T>> = (0..dim)
        .map(|_| one.add(&small_polynomial(&coords, rng)))
        .collect();
    let chart = ChartManifold::diagonal(coords, diag, vec![1; dim])
        .expect("random chart construction is well formed");
    let sample_box = SampleBox::centered(dim, T::of(RANDOM_BOX_HALF_WIDTH));
    (chart, sample_box)
}

/// Random polynomial vector field (degree ≤ 2 components).
pub fn random_field<T: Real>(rng: &mut SampleRng, chart: &ChartManifold<T>) -> VectorField<T> {
    let coords = chart.coords().clone();
    let components = (0..chart.dim())
        .map(|_| {
            let c = rng.symmetric(T::of(0.3));
            Expression::constant(coords.clone(), c).add(&small_polynomial(&coords, rng))
        })
        .collect();
    VectorField::new(chart, components).expect("component count matches chart")
}

/// Random unit-scale generator field: first component `1 + poly`, the rest
/// small, so its norm is bounded away from zero on the box.
pub fn random_generator_field<T: Real>(
    rng: &mut SampleRng,
    chart: &ChartManifold<T>,
    dominant: usize,
) -> VectorField<T> {
    let coords = chart.coords().clone();
    let components = (0..chart.dim())
        .map(|i| {
            if i == dominant {
                Expression::constant(coords.clone(), T::one())
                    .add(&small_polynomial(&coords, rng).scaled(T::of(0.5)))
            } else {
                small_polynomial(&coords, rng).scaled(T::of(0.3))
            }
        })
        .collect();
    VectorField::new(chart, components).expect("component count matches chart")
}

/// Seeded random smooth expression over the given coordinates, depth ≤
/// `depth`. Built from a domain-safe grammar (saturating arguments for the
/// fast-growing functions, offset denominators and radicands), so every
/// point of R^n is admissible and derivative magnitudes stay moderate:
/// exactly what the finite-difference comparisons need.
pub fn random_expression<T: Real>(
    rng: &mut SampleRng,
    coords: &std::sync::Arc<[String]>,
    depth: usize,
) -> Expression<T> {
    use crate::expr::Func;
    let dim = coords.len();
    if depth == 0 || rng.below(5) == 0 {
        return if dim > 0 && rng.below(3) != 0 {
            Expression::coordinate(coords.clone(), rng.below(dim))
        } else {
            Expression::constant(coords.clone(), rng.range(T::of(0.3), T::two()))
        };
    }
    let a = random_expression(rng, coords, depth - 1);
    match rng.below(10) {
        0 => a.add(&random_expression(rng, coords, depth - 1)),
        1 => a.sub(&random_expression(rng, coords, depth - 1)),
        // Halve products so magnitudes do not compound through the tree.
        2 => a.mul(&random_expression(rng, coords, depth - 1)).scaled(T::half()),
        // Denominator bounded away from zero.
        3 => {
            let b = random_expression(rng, coords, depth - 1);
            a.div(&b.squared().add(&Expression::constant(coords.clone(), T::of(1.5))))
        }
        4 => a.apply_fn(Func::Sin),
        5 => a.apply_fn(Func::Cos),
        6 => a.apply_fn(Func::Tanh),
        // Saturate the argument of the fast-growing functions.
        7 => a.apply_fn(Func::Tanh).scaled(T::half()).apply_fn(Func::Exp),
        8 => {
            // sqrt / log of 1.2 + u²: always in domain.
            let shifted = a.squared().add(&Expression::constant(coords.clone(), T::of(1.2)));
            if rng.below(2) == 0 {
                shifted.apply_fn(Func::Sqrt)
            } else {
                shifted.apply_fn(Func::Log)
            }
        }
        _ => {
            // Power with a non-trivial constant exponent on a saturated
            // positive base, keeping higher derivatives moderate.
            let base = a
                .apply_fn(Func::Tanh)
                .squared()
                .add(&Expression::constant(coords.clone(), T::of(1.1)));
            let exponent = match rng.below(3) {
                0 => T::of(1.5),
                1 => T::of(-0.7),
                _ => T::of(3.0),
            };
            base.pow_constant(exponent)
        }
    }
}

/// A seeded random warped product with its admissibility boxes and a random
/// polynomial generator field in the requested placement.
pub struct RandomWarped<T> {
    pub wp: WarpedProduct<T>,
    pub p: PlacedField<T>,
    pub base_box: SampleBox<T>,
    pub fiber_box: SampleBox<T>,
}

impl<T: Real> RandomWarped<T> {
    pub fn ambient_box(&self) -> SampleBox<T> {
        self.base_box.join(&self.fiber_box)
    }
}

/// Random warped product with dimensions drawn from {1, 2, 3}.
pub fn random_warped_product<T: Real>(
    rng: &mut SampleRng,
    p_placement: Placement,
) -> RandomWarped<T> {
    let n1 = 1 + rng.below(3);
    let n2 = 1 + rng.below(3);
    random_warped_product_with_dims(rng, n1, n2, p_placement)
}

pub fn random_warped_product_with_dims<T: Real>(
    rng: &mut SampleRng,
    n1: usize,
    n2: usize,
    p_placement: Placement,
) -> RandomWarped<T> {
    let (base, base_box) = random_chart::<T>(rng, n1, "u");
    let (fiber, fiber_box) = random_chart::<T>(rng, n2, "v");
    // f = 1 + 0.25 * (sum of squared base coordinates): positive everywhere.
    let coords = base.coords().clone();
    let mut f = Expression::constant(coords.clone(), T::one());
    for i in 0..n1 {
        let x = Expression::coordinate(coords.clone(), i);
        f = f.add(&x.squared().scaled(T::of(0.25)));
    }
    let wp = WarpedProduct::build(base, fiber, f).expect("random warped product is well formed");
    let p_chart = match p_placement {
        Placement::Base => wp.base(),
        Placement::Fiber => wp.fiber(),
    };
    let p = PlacedField::new(p_placement, random_field(rng, p_chart));
    RandomWarped { wp, p, base_box, fiber_box }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_deterministic() {
        let mut a = SampleRng::seed(42);
        let mut b = SampleRng::seed(42);
        for _ in 0..100 {
            assert_eq!(a.unit::<f64>(), b.unit::<f64>());
        }
    }

    #[test]
    fn unit_draws_lie_in_half_open_interval() {
        let mut rng = SampleRng::seed(7);
        for _ in 0..1000 {
            let x: f64 = rng.unit();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn random_charts_are_admissible_on_their_box() {
        let mut rng = SampleRng::seed(3);
        for dim in 2..=4 {
            let (chart, bx) = random_chart::<f64>(&mut rng, dim, "x");
            let mut point_rng = SampleRng::seed(99);
            for _ in 0..20 {
                let p = bx.sample(&mut point_rng);
                let mj = chart.metric_jet(&p).expect("nondegenerate by construction");
                assert!(mj.det > 0.0);
            }
        }
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(SampleBox::new(vec![(1.0, 1.0)]).is_err());
        assert!(SampleBox::new(vec![(2.0, -1.0)]).is_err());
    }
}

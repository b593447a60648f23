//! Chart-based pseudo-Riemannian geometry: metric jets, Christoffel symbols,
//! curvature, Ricci, scalar curvature, and scalar-field calculus.
//!
//! # Conventions
//!
//! The curvature operator is `R(X,Y)Z = ∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z`,
//! in coordinates `R^l_ijk = ∂_i Γ^l_jk - ∂_j Γ^l_ik + Γ^l_im Γ^m_jk -
//! Γ^l_jm Γ^m_ik` contracted with `X^i Y^j Z^k`.
//!
//! Ricci and scalar curvature use the frame sums
//!
//! ```text
//! Ric(X,Y) = Σ_k ε_k <R(X,E_k)Y, E_k>        S = Σ_k ε_k Ric(E_k,E_k)
//! ```
//!
//! with the frame vector in the *second* curvature slot, equivalently the
//! contraction `Ric_ij = R^a_iaj`. The Laplacian is `Δf = -tr H^f`. Note that
//! both choices are mirrored relative to the common textbook convention
//! (where the frame vector sits in the first slot and `Δ = +tr H`): here the
//! round unit sphere has `Ric = -g` and `S = -2`. Every decomposition
//! identity in this crate is stated and verified in this convention;
//! [`ricci_classical`] and [`scalar_classical`] expose the textbook-sign
//! values.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{EvalError, Expression};
use crate::scalar::Real;
use crate::tensor::{dot, Matrix, Rank3, Rank4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("degenerate metric at point {point}: |det| = {det:e} below scale-aware threshold")]
    DegenerateMetric { point: String, det: f64 },
    #[error("metric signature at point {point} is {found}, declared {declared}")]
    SignatureMismatch { point: String, declared: String, found: String },
    #[error("orthonormal frame construction failed at point {point}: {why}")]
    FrameFailure { point: String, why: String },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: String, expected: usize, found: usize },
    #[error("placement mismatch: {what}")]
    PlacementMismatch { what: String },
    #[error("generator field problem: {what}")]
    Generator { what: String },
    #[error("ill-posed parameter fit: {why}")]
    IllPosedFit { why: String },
    #[error("coordinate name `{name}` declared more than once")]
    DuplicateCoordinate { name: String },
    #[error("metric entry ({i},{j}) differs from ({j},{i}); the grid must be symmetric")]
    AsymmetricMetric { i: usize, j: usize },
    #[error("signature entries must be +1 or -1, found {found}")]
    BadSignature { found: i8 },
}

pub(crate) fn point_label<T: Real>(point: &[T]) -> String {
    let parts: Vec<String> = point.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

/// Relative threshold under which `det g` flags the chart point as
/// inadmissible: `|det| < DEGENERACY_EPS * (max |g_ij|)^dim`.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// A manifold presented in a single coordinate chart with symbolic metric
/// components and declared orthonormal-frame signs `ε_k ∈ {+1, -1}`.
#[derive(Clone, Debug)]
pub struct ChartManifold<T> {
    coords: Arc<[String]>,
    /// Upper triangle of the metric grid, row-major: entry (i,j) for i ≤ j.
    metric_upper: Vec<Expression<T>>,
    signature: Vec<i8>,
}

#[inline]
fn upper_idx(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    i * n - i * (i + 1) / 2 + j
}

impl<T: Real> ChartManifold<T> {
    /// Build a chart from a full symmetric grid of metric expressions.
    /// Only the upper triangle is stored; the lower triangle must be
    /// structurally identical to its mirror.
    pub fn new(
        coords: Arc<[String]>,
        metric: Vec<Vec<Expression<T>>>,
        signature: Vec<i8>,
    ) -> Result<Self, GeomError> {
        let n = coords.len();
        assert!(n >= 1, "chart dimension must be at least 1");
        for (idx, name) in coords.iter().enumerate() {
            if coords[..idx].contains(name) {
                return Err(GeomError::DuplicateCoordinate { name: name.clone() });
            }
        }
        if metric.len() != n {
            return Err(GeomError::DimensionMismatch {
                what: "metric row count".into(),
                expected: n,
                found: metric.len(),
            });
        }
        for (i, row) in metric.iter().enumerate() {
            if row.len() != n {
                return Err(GeomError::DimensionMismatch {
                    what: format!("metric row {i} length"),
                    expected: n,
                    found: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in 0..i {
                if metric[i][j] != metric[j][i] {
                    return Err(GeomError::AsymmetricMetric { i, j });
                }
            }
        }
        if signature.len() != n {
            return Err(GeomError::DimensionMismatch {
                what: "signature length".into(),
                expected: n,
                found: signature.len(),
            });
        }
        if let Some(&bad) = signature.iter().find(|&&e| e != 1 && e != -1) {
            return Err(GeomError::BadSignature { found: bad });
        }
        let mut metric_upper = Vec::with_capacity(n * (n + 1) / 2);
        for (i, row) in metric.into_iter().enumerate() {
            for (j, entry) in row.into_iter().enumerate() {
                if j >= i {
                    metric_upper.push(entry);
                }
            }
        }
        Ok(ChartManifold { coords, metric_upper, signature })
    }

    /// Diagonal metric chart.
    pub fn diagonal(
        coords: Arc<[String]>,
        diag: Vec<Expression<T>>,
        signature: Vec<i8>,
    ) -> Result<Self, GeomError> {
        let n = coords.len();
        if diag.len() != n {
            return Err(GeomError::DimensionMismatch {
                what: "diagonal entry count".into(),
                expected: n,
                found: diag.len(),
            });
        }
        let zero = Expression::constant(coords.clone(), T::zero());
        let metric = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { diag[i].clone() } else { zero.clone() })
                    .collect()
            })
            .collect();
        Self::new(coords, metric, signature)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &Arc<[String]> {
        &self.coords
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expression<T> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.metric_upper[upper_idx(self.dim(), i, j)]
    }

    /// Evaluate metric value, inverse, and first/second derivative blocks at
    /// a point, verifying non-degeneracy and the declared signature.
    pub fn metric_jet(&self, point: &[T]) -> Result<MetricJet<T>, GeomError> {
        let n = self.dim();
        if point.len() != n {
            return Err(GeomError::DimensionMismatch {
                what: "point length".into(),
                expected: n,
                found: point.len(),
            });
        }
        let mut g = Matrix::zeros(n);
        let mut dg = Rank3::zeros(n);
        let mut d2g = Rank4::zeros(n);
        for i in 0..n {
            for j in i..n {
                let jet = self.metric_entry(i, j).eval_jet2(point)?;
                g.set(i, j, jet.value());
                g.set(j, i, jet.value());
                for k in 0..n {
                    dg.set(k, i, j, jet.gradient()[k]);
                    dg.set(k, j, i, jet.gradient()[k]);
                    for l in 0..n {
                        d2g.set(k, l, i, j, jet.hess(k, l));
                        d2g.set(k, l, j, i, jet.hess(k, l));
                    }
                }
            }
        }
        let det = g.det();
        let scale = g.max_abs();
        let threshold = T::of(DEGENERACY_EPS) * scale.powi(n as i32);
        if det.abs() < threshold || scale == T::zero() {
            return Err(GeomError::DegenerateMetric {
                point: point_label(point),
                det: det.to_f64().unwrap_or(f64::NAN),
            });
        }
        let g_inv = g.inverse().ok_or_else(|| GeomError::DegenerateMetric {
            point: point_label(point),
            det: det.to_f64().unwrap_or(f64::NAN),
        })?;
        let frame = orthonormal_frame(&g, point)?;
        let mut declared: Vec<i8> = self.signature.clone();
        let mut found: Vec<i8> = frame.signs.clone();
        declared.sort_unstable();
        found.sort_unstable();
        if declared != found {
            return Err(GeomError::SignatureMismatch {
                point: point_label(point),
                declared: format!("{:?}", self.signature),
                found: format!("{:?}", frame.signs),
            });
        }
        Ok(MetricJet { g, g_inv, dg, d2g, det })
    }
}

/// Metric data at a point: values, inverse, and exact derivative blocks.
/// `dg` is indexed `(k, i, j) = ∂_k g_ij`, `d2g` as `(k, l, i, j) = ∂_k ∂_l g_ij`.
#[derive(Clone, Debug)]
pub struct MetricJet<T> {
    pub g: Matrix<T>,
    pub g_inv: Matrix<T>,
    pub dg: Rank3<T>,
    pub d2g: Rank4<T>,
    pub det: T,
}

impl<T: Real> MetricJet<T> {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// ∂_k g^{ij} = -g^{ia} (∂_k g_ab) g^{bj}.
    pub fn dg_inv(&self) -> Rank3<T> {
        let n = self.dim();
        Rank3::from_fn(n, |k, i, j| {
            let mut acc = T::zero();
            for a in 0..n {
                for b in 0..n {
                    acc -= self.g_inv.get(i, a) * self.dg.get(k, a, b) * self.g_inv.get(b, j);
                }
            }
            acc
        })
    }
}

/// Connection coefficients with their exact first derivatives.
/// `gamma` is indexed `(k, i, j) = Γ^k_ij` for `∇_{∂_i} ∂_j = Γ^k_ij ∂_k`;
/// `dgamma` as `(m, k, i, j) = ∂_m Γ^k_ij`.
#[derive(Clone, Debug)]
pub struct ConnectionCoeffs<T> {
    pub gamma: Rank3<T>,
    pub dgamma: Rank4<T>,
}

impl<T: Real> ConnectionCoeffs<T> {
    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }
}

/// Levi-Civita coefficients Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il - ∂_l g_ij)
/// and their derivatives, all exact from the metric jet.
pub fn christoffel_from_jet<T: Real>(mj: &MetricJet<T>) -> ConnectionCoeffs<T> {
    let n = mj.dim();
    let half = T::half();
    // Lowered symbols Γ_lij = ½(∂_i g_jl + ∂_j g_il - ∂_l g_ij)
    let lowered = Rank3::from_fn(n, |l, i, j| {
        half * (mj.dg.get(i, j, l) + mj.dg.get(j, i, l) - mj.dg.get(l, i, j))
    });
    let gamma = Rank3::from_fn(n, |k, i, j| {
        (0..n).map(|l| mj.g_inv.get(k, l) * lowered.get(l, i, j)).sum()
    });
    let dg_inv = mj.dg_inv();
    // ∂_m Γ_lij from second metric derivatives
    let dlowered = Rank4::from_fn(n, |m, l, i, j| {
        half * (mj.d2g.get(m, i, j, l) + mj.d2g.get(m, j, i, l) - mj.d2g.get(m, l, i, j))
    });
    let dgamma = Rank4::from_fn(n, |m, k, i, j| {
        (0..n)
            .map(|l| {
                dg_inv.get(m, k, l) * lowered.get(l, i, j)
                    + mj.g_inv.get(k, l) * dlowered.get(m, l, i, j)
            })
            .sum()
    });
    ConnectionCoeffs { gamma, dgamma }
}

/// Levi-Civita connection of the chart at a point.
pub fn christoffel<T: Real>(
    chart: &ChartManifold<T>,
    point: &[T],
) -> Result<ConnectionCoeffs<T>, GeomError> {
    Ok(christoffel_from_jet(&chart.metric_jet(point)?))
}

/// Full curvature tensor R^l_ijk of an affine connection, indexed
/// `(l, i, j, k)` so that `R(X,Y)Z = R^l_ijk X^i Y^j Z^k ∂_l`.
pub fn riemann_tensor<T: Real>(coeffs: &ConnectionCoeffs<T>) -> Rank4<T> {
    let n = coeffs.dim();
    let ga = &coeffs.gamma;
    let dga = &coeffs.dgamma;
    Rank4::from_fn(n, |l, i, j, k| {
        let mut acc = dga.get(i, l, j, k) - dga.get(j, l, i, k);
        for m in 0..n {
            acc += ga.get(l, i, m) * ga.get(m, j, k) - ga.get(l, j, m) * ga.get(m, i, k);
        }
        acc
    })
}

/// R(X,Y)Z for tangent vectors given by component slices.
pub fn riemann_apply<T: Real>(riemann: &Rank4<T>, x: &[T], y: &[T], z: &[T]) -> Vec<T> {
    let n = riemann.dim();
    (0..n)
        .map(|l| {
            let mut acc = T::zero();
            for i in 0..n {
                if x[i] == T::zero() {
                    continue;
                }
                for j in 0..n {
                    if y[j] == T::zero() {
                        continue;
                    }
                    for k in 0..n {
                        acc += riemann.get(l, i, j, k) * x[i] * y[j] * z[k];
                    }
                }
            }
            acc
        })
        .collect()
}

/// R(X,Y)Z assembled from coefficients in one call.
pub fn riemann<T: Real>(coeffs: &ConnectionCoeffs<T>, x: &[T], y: &[T], z: &[T]) -> Vec<T> {
    riemann_apply(&riemann_tensor(coeffs), x, y, z)
}

/// Ricci matrix `Ric_ij = R^a_iaj` (the frame vector occupies the second
/// curvature slot; see the module docs). Not symmetric for torsionful
/// connections.
pub fn ricci<T: Real>(coeffs: &ConnectionCoeffs<T>) -> Matrix<T> {
    let riem = riemann_tensor(coeffs);
    ricci_from_riemann(&riem)
}

pub fn ricci_from_riemann<T: Real>(riem: &Rank4<T>) -> Matrix<T> {
    let n = riem.dim();
    Matrix::from_fn(n, |i, j| (0..n).map(|a| riem.get(a, i, a, j)).sum())
}

/// Scalar curvature `S = g^{ij} Ric_ij`.
pub fn scalar_from_ricci<T: Real>(mj: &MetricJet<T>, ric: &Matrix<T>) -> T {
    let n = mj.dim();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            acc += mj.g_inv.get(i, j) * ric.get(i, j);
        }
    }
    acc
}

pub fn scalar<T: Real>(mj: &MetricJet<T>, coeffs: &ConnectionCoeffs<T>) -> T {
    scalar_from_ricci(mj, &ricci(coeffs))
}

/// Textbook-sign Ricci (frame vector in the first curvature slot): the
/// mirror of [`ricci`], so the round unit sphere gives `+g`.
pub fn ricci_classical<T: Real>(coeffs: &ConnectionCoeffs<T>) -> Matrix<T> {
    ricci(coeffs).scale(-T::one())
}

/// Textbook-sign scalar curvature (round unit sphere gives `+2`).
pub fn scalar_classical<T: Real>(mj: &MetricJet<T>, coeffs: &ConnectionCoeffs<T>) -> T {
    -scalar(mj, coeffs)
}

/// An orthonormal tangent frame at a point with signs ε_k = <E_k, E_k>.
#[derive(Clone, Debug)]
pub struct PointFrame<T> {
    pub point: Vec<T>,
    pub basis: Vec<Vec<T>>,
    pub signs: Vec<i8>,
}

/// Signature-aware Gram-Schmidt over the coordinate basis with a
/// deterministic pivot rule: at each step take the remaining candidate with
/// the largest |<v,v>| after projecting out the frame built so far.
pub fn orthonormal_frame<T: Real>(g: &Matrix<T>, point: &[T]) -> Result<PointFrame<T>, GeomError> {
    let n = g.dim();
    let mut remaining: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut e = vec![T::zero(); n];
            e[i] = T::one();
            e
        })
        .collect();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut signs: Vec<i8> = Vec::with_capacity(n);
    let scale = g.max_abs().max(T::one());
    for _ in 0..n {
        // Project every remaining candidate and pick the largest norm.
        let mut best: Option<(usize, Vec<T>, T)> = None;
        for (idx, cand) in remaining.iter().enumerate() {
            let mut w = cand.clone();
            for (e, &s) in basis.iter().zip(&signs) {
                let coeff = T::of(s as f64) * g.bilinear(&w, e);
                for (wi, &ei) in w.iter_mut().zip(e) {
                    *wi -= coeff * ei;
                }
            }
            let q = g.bilinear(&w, &w);
            match &best {
                Some((_, _, bq)) if q.abs() <= bq.abs() => {}
                _ => best = Some((idx, w, q)),
            }
        }
        let (idx, w, q) = best.expect("candidates remain");
        if q.abs() <= T::of(1e-12) * scale {
            return Err(GeomError::FrameFailure {
                point: point_label(point),
                why: format!("residual norm {q:e} too small; metric nearly degenerate"),
            });
        }
        let sign = if q > T::zero() { 1i8 } else { -1i8 };
        let norm = q.abs().sqrt();
        basis.push(w.iter().map(|&wi| wi / norm).collect());
        signs.push(sign);
        remaining.remove(idx);
    }
    Ok(PointFrame { point: point.to_vec(), basis, signs })
}

/// A vector field on a chart: one component expression per coordinate.
#[derive(Clone, Debug)]
pub struct VectorField<T> {
    components: Vec<Expression<T>>,
}

impl<T: Real> VectorField<T> {
    pub fn new(
        chart: &ChartManifold<T>,
        components: Vec<Expression<T>>,
    ) -> Result<Self, GeomError> {
        if components.len() != chart.dim() {
            return Err(GeomError::DimensionMismatch {
                what: "vector field component count".into(),
                expected: chart.dim(),
                found: components.len(),
            });
        }
        for c in &components {
            if c.coords() != chart.coords() {
                return Err(GeomError::DimensionMismatch {
                    what: "vector field component coordinate binding".into(),
                    expected: chart.dim(),
                    found: c.dim(),
                });
            }
        }
        Ok(VectorField { components })
    }

    pub fn zero(chart: &ChartManifold<T>) -> Self {
        let zero = Expression::constant(chart.coords().clone(), T::zero());
        VectorField { components: vec![zero; chart.dim()] }
    }

    /// The coordinate field ∂_idx.
    pub fn coordinate(chart: &ChartManifold<T>, idx: usize) -> Self {
        let coords = chart.coords().clone();
        let components = (0..chart.dim())
            .map(|i| {
                Expression::constant(coords.clone(), if i == idx { T::one() } else { T::zero() })
            })
            .collect();
        VectorField { components }
    }

    pub fn components(&self) -> &[Expression<T>] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero_literal())
    }

    pub fn values(&self, point: &[T]) -> Result<Vec<T>, GeomError> {
        self.components
            .iter()
            .map(|c| c.eval(point).map_err(GeomError::from))
            .collect()
    }

    /// Component values and Jacobian `J_ij = ∂_j P^i`.
    pub fn jet(&self, point: &[T]) -> Result<(Vec<T>, Matrix<T>), GeomError> {
        let n = self.dim();
        let mut values = Vec::with_capacity(n);
        let mut jac = Matrix::zeros(n);
        for (i, c) in self.components.iter().enumerate() {
            let jet = c.eval_jet2(point)?;
            values.push(jet.value());
            for j in 0..n {
                jac.set(i, j, jet.gradient()[j]);
            }
        }
        Ok((values, jac))
    }
}

/// Covariant derivative (∇_X P)^l = X^i (∂_i P^l + Γ^l_im P^m) at a point,
/// for a constant-component direction X.
pub fn covariant_derivative<T: Real>(
    coeffs: &ConnectionCoeffs<T>,
    p_values: &[T],
    p_jacobian: &Matrix<T>,
    x: &[T],
) -> Vec<T> {
    let n = coeffs.dim();
    (0..n)
        .map(|l| {
            let mut acc = T::zero();
            for i in 0..n {
                if x[i] == T::zero() {
                    continue;
                }
                let mut term = p_jacobian.get(l, i);
                for m in 0..n {
                    term += coeffs.gamma.get(l, i, m) * p_values[m];
                }
                acc += x[i] * term;
            }
            acc
        })
        .collect()
}

/// Gradient, Hessian, Laplacian, and directional-derivative data of a scalar
/// field at a point.
#[derive(Clone, Debug)]
pub struct ScalarCalculus<T> {
    /// (grad f)^i = g^{ij} ∂_j f
    pub grad: Vec<T>,
    /// |grad f|² = g^{ij} ∂_i f ∂_j f
    pub grad_norm2: T,
    /// H^f_ij = ∂_i ∂_j f - Γ^k_ij ∂_k f (Levi-Civita, hence symmetric)
    pub hessian: Matrix<T>,
    /// Δf = -g^{ij} H^f_ij (sign mirrored from the analyst convention)
    pub laplacian: T,
    /// Pf = P^i ∂_i f
    pub p_f: T,
    /// Raw partials ∂_i f
    pub df: Vec<T>,
    /// (∇_X grad f)^l = g^{lm} H^f_Xm, exposed through [`ScalarCalculus::grad_derivative`]
    raised_hessian: Matrix<T>,
}

impl<T: Real> ScalarCalculus<T> {
    /// (∇_X grad f)^l for a constant-component direction X.
    pub fn grad_derivative(&self, x: &[T]) -> Vec<T> {
        self.raised_hessian.mul_vec(x)
    }
}

/// Evaluate the scalar-field calculus of `f` at `point`; `p` contributes the
/// directional derivative `Pf` (zero when absent).
pub fn scalar_calculus<T: Real>(
    chart: &ChartManifold<T>,
    f: &Expression<T>,
    p: Option<&VectorField<T>>,
    point: &[T],
) -> Result<ScalarCalculus<T>, GeomError> {
    let mj = chart.metric_jet(point)?;
    let coeffs = christoffel_from_jet(&mj);
    scalar_calculus_from_parts(&mj, &coeffs, f, p, point)
}

pub fn scalar_calculus_from_parts<T: Real>(
    mj: &MetricJet<T>,
    coeffs: &ConnectionCoeffs<T>,
    f: &Expression<T>,
    p: Option<&VectorField<T>>,
    point: &[T],
) -> Result<ScalarCalculus<T>, GeomError> {
    let n = mj.dim();
    let jet = f.eval_jet2(point)?;
    let df = jet.gradient().to_vec();
    let grad = mj.g_inv.mul_vec(&df);
    let grad_norm2 = dot(&grad, &df);
    let hessian = Matrix::from_fn(n, |i, j| {
        let mut h = jet.hess(i, j);
        for k in 0..n {
            h -= coeffs.gamma.get(k, i, j) * df[k];
        }
        h
    });
    let mut laplacian = T::zero();
    for i in 0..n {
        for j in 0..n {
            laplacian -= mj.g_inv.get(i, j) * hessian.get(i, j);
        }
    }
    let p_f = match p {
        Some(field) => dot(&field.values(point)?, &df),
        None => T::zero(),
    };
    // Hessian with the first index raised, for ∇_X(grad f).
    let raised_hessian = Matrix::from_fn(n, |l, i| {
        (0..n).map(|m| mj.g_inv.get(l, m) * hessian.get(m, i)).sum()
    });
    Ok(ScalarCalculus { grad, grad_norm2, hessian, laplacian, p_f, df, raised_hessian })
}

/// div P = ∂_i P^i + Γ^i_ik P^k (Levi-Civita).
pub fn divergence<T: Real>(
    chart: &ChartManifold<T>,
    p: &VectorField<T>,
    point: &[T],
) -> Result<T, GeomError> {
    let mj = chart.metric_jet(point)?;
    let coeffs = christoffel_from_jet(&mj);
    divergence_from_parts(&coeffs, p, point)
}

pub fn divergence_from_parts<T: Real>(
    coeffs: &ConnectionCoeffs<T>,
    p: &VectorField<T>,
    point: &[T],
) -> Result<T, GeomError> {
    let n = coeffs.dim();
    let (values, jac) = p.jet(point)?;
    let mut acc = T::zero();
    for i in 0..n {
        acc += jac.get(i, i);
        for k in 0..n {
            acc += coeffs.gamma.get(i, i, k) * values[k];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coords_of, parse};

    fn chart(coords: &[&str], diag: &[&str], signature: Vec<i8>) -> ChartManifold<f64> {
        let c = coords_of(coords);
        let entries = diag.iter().map(|s| parse(s, &c).unwrap()).collect();
        ChartManifold::diagonal(c, entries, signature).unwrap()
    }

    fn euclidean_plane() -> ChartManifold<f64> {
        chart(&["x", "y"], &["1", "1"], vec![1, 1])
    }

    fn polar() -> ChartManifold<f64> {
        chart(&["r", "th"], &["1", "r^2"], vec![1, 1])
    }

    fn sphere() -> ChartManifold<f64> {
        chart(&["th", "ph"], &["1", "sin(th)^2"], vec![1, 1])
    }

    fn hyperbolic_plane() -> ChartManifold<f64> {
        chart(&["t", "x"], &["1", "exp(2*t)"], vec![1, 1])
    }

    fn minkowski() -> ChartManifold<f64> {
        chart(&["t", "x"], &["1", "-1"], vec![1, -1])
    }

    #[test]
    fn euclidean_metric_jet_is_flat() {
        let mj = euclidean_plane().metric_jet(&[0.3, -2.0]).unwrap();
        assert_eq!(mj.g, Matrix::identity(2));
        assert_eq!(mj.dg.max_abs(), 0.0);
        assert_eq!(mj.d2g.max_abs(), 0.0);
    }

    #[test]
    fn polar_metric_derivative() {
        let mj = polar().metric_jet(&[2.0, 0.7]).unwrap();
        assert_eq!(mj.g.get(0, 0), 1.0);
        assert_eq!(mj.g.get(1, 1), 4.0);
        // ∂_r g_θθ = 2r = 4
        assert_eq!(mj.dg.get(0, 1, 1), 4.0);
        // ∂_r ∂_r g_θθ = 2
        assert_eq!(mj.d2g.get(0, 0, 1, 1), 2.0);
    }

    #[test]
    fn polar_origin_is_degenerate() {
        let err = polar().metric_jet(&[0.0, 0.3]).unwrap_err();
        assert!(matches!(err, GeomError::DegenerateMetric { .. }));
    }

    #[test]
    fn signature_mismatch_detected() {
        let bad = chart(&["t", "x"], &["1", "-1"], vec![1, 1]);
        let err = bad.metric_jet(&[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, GeomError::SignatureMismatch { .. }));
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let co = christoffel(&euclidean_plane(), &[1.0, 1.0]).unwrap();
        assert_eq!(co.gamma.max_abs(), 0.0);
        assert_eq!(co.dgamma.max_abs(), 0.0);
    }

    #[test]
    fn polar_christoffel_closed_form() {
        let co = christoffel(&polar(), &[2.0, 0.7]).unwrap();
        // Γ^r_θθ = -r, Γ^θ_rθ = 1/r
        assert!((co.gamma.get(0, 1, 1) + 2.0).abs() < 1e-14);
        assert!((co.gamma.get(1, 0, 1) - 0.5).abs() < 1e-14);
        assert_eq!(co.gamma.get(1, 0, 1), co.gamma.get(1, 1, 0));
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        let th = std::f64::consts::FRAC_PI_4;
        let co = christoffel(&sphere(), &[th, 1.0]).unwrap();
        // Γ^θ_φφ = -sinθ cosθ = -0.5 at θ=π/4
        assert!((co.gamma.get(0, 1, 1) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn flat_curvature_vanishes() {
        let co = christoffel(&euclidean_plane(), &[0.1, 0.2]).unwrap();
        let r = riemann(&co, &[1.0, 2.0], &[3.0, -1.0], &[0.5, 0.5]);
        assert_eq!(r, vec![0.0, 0.0]);
    }

    #[test]
    fn sphere_sectional_curvature_is_one() {
        let th = std::f64::consts::FRAC_PI_2;
        let point = [th, 1.0];
        let mj = sphere().metric_jet(&point).unwrap();
        let co = christoffel_from_jet(&mj);
        let r = riemann(&co, &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]);
        // <R(∂θ,∂φ)∂φ, ∂θ> = 1 at the equator
        let inner = mj.g.bilinear(&r, &[1.0, 0.0]);
        assert!((inner - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_antisymmetric_in_first_slots() {
        let co = christoffel(&sphere(), &[1.0, 2.0]).unwrap();
        let x = [0.3, -0.8];
        let z = [1.0, 1.0];
        let r = riemann(&co, &x, &x, &z);
        assert!(crate::tensor::max_abs(&r) < 1e-15);
    }

    #[test]
    fn sphere_ricci_engine_sign() {
        let th = std::f64::consts::FRAC_PI_3;
        let point = [th, 0.4];
        let mj = sphere().metric_jet(&point).unwrap();
        let co = christoffel_from_jet(&mj);
        let ric = ricci(&co);
        // Engine convention: Ric = -g on the unit sphere.
        assert!((ric.get(0, 0) + 1.0).abs() < 1e-12);
        assert!((ric.get(1, 1) + th.sin().powi(2)).abs() < 1e-12);
        assert!(ric.get(0, 1).abs() < 1e-12);
        // Textbook mirror: diag(1, sin²θ) = diag(1, 0.75).
        let classical = ricci_classical(&co);
        assert!((classical.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((classical.get(1, 1) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn scalar_curvature_fixtures() {
        let mj = sphere().metric_jet(&[1.1, 0.4]).unwrap();
        let co = christoffel_from_jet(&mj);
        assert!((scalar(&mj, &co) + 2.0).abs() < 1e-11);
        assert!((scalar_classical(&mj, &co) - 2.0).abs() < 1e-11);

        let hp = hyperbolic_plane();
        let mj = hp.metric_jet(&[0.3, -0.9]).unwrap();
        let co = christoffel_from_jet(&mj);
        assert!((scalar(&mj, &co) - 2.0).abs() < 1e-11);
        assert!((scalar_classical(&mj, &co) + 2.0).abs() < 1e-11);

        let eu = euclidean_plane();
        let mj = eu.metric_jet(&[5.0, 5.0]).unwrap();
        let co = christoffel_from_jet(&mj);
        assert_eq!(scalar(&mj, &co), 0.0);
    }

    #[test]
    fn minkowski_ricci_vanishes() {
        let mj = minkowski().metric_jet(&[0.0, 0.0]).unwrap();
        let co = christoffel_from_jet(&mj);
        assert_eq!(ricci(&co).max_abs(), 0.0);
    }

    #[test]
    fn scalar_calculus_euclidean_square_norm() {
        let chart = euclidean_plane();
        let f = parse("x^2 + y^2", chart.coords()).unwrap();
        let sc = scalar_calculus(&chart, &f, None, &[1.0, 2.0]).unwrap();
        assert_eq!(sc.hessian, Matrix::from_fn(2, |i, j| if i == j { 2.0 } else { 0.0 }));
        assert_eq!(sc.laplacian, -4.0);
        assert_eq!(sc.grad_norm2, 20.0);
    }

    #[test]
    fn scalar_calculus_constant_function() {
        let chart = sphere();
        let f = parse("4", chart.coords()).unwrap();
        let sc = scalar_calculus(&chart, &f, None, &[1.0, 1.0]).unwrap();
        assert_eq!(sc.grad, vec![0.0, 0.0]);
        assert_eq!(sc.hessian.max_abs(), 0.0);
        assert_eq!(sc.laplacian, 0.0);
    }

    #[test]
    fn scalar_calculus_exponential_on_line() {
        let chart = chart(&["t"], &["1"], vec![1]);
        let f = parse("exp(t)", chart.coords()).unwrap();
        let p = VectorField::coordinate(&chart, 0);
        let sc = scalar_calculus(&chart, &f, Some(&p), &[0.0]).unwrap();
        assert_eq!(sc.laplacian, -1.0);
        assert_eq!(sc.p_f, 1.0);
    }

    #[test]
    fn divergence_fixtures() {
        let chart = euclidean_plane();
        let p = VectorField::new(
            &chart,
            vec![
                parse("x", chart.coords()).unwrap(),
                parse("y", chart.coords()).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(divergence(&chart, &p, &[0.7, -0.3]).unwrap(), 2.0);

        let q = VectorField::coordinate(&chart, 0);
        assert_eq!(divergence(&chart, &q, &[1.0, 1.0]).unwrap(), 0.0);

        let hp = hyperbolic_plane();
        let p = VectorField::coordinate(&hp, 0);
        // Γ^x_xt = 1 gives div ∂t = 1
        assert!((divergence(&hp, &p, &[0.4, 2.0]).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn frame_reproduces_signature_and_orthonormality() {
        let mj = minkowski().metric_jet(&[0.0, 0.0]).unwrap();
        let frame = orthonormal_frame(&mj.g, &[0.0, 0.0]).unwrap();
        let mut signs = frame.signs.clone();
        signs.sort_unstable();
        assert_eq!(signs, vec![-1, 1]);
        for (k, ek) in frame.basis.iter().enumerate() {
            for (l, el) in frame.basis.iter().enumerate() {
                let inner = mj.g.bilinear(ek, el);
                let expect = if k == l { frame.signs[k] as f64 } else { 0.0 };
                assert!((inner - expect).abs() < 1e-12);
            }
        }
    }
}

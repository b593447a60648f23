//! The semi-symmetric non-metric connection layer.
//!
//! Given a generating field `P` with associated one-form `π(X) = g(X,P)`,
//! the connection is `∇̄_X Y = ∇_X Y + π(Y) X` on top of the Levi-Civita
//! `∇`. It carries torsion `T(X,Y) = π(Y)X - π(X)Y` and does not preserve
//! the metric: `(∇̄_X g)(Y,Z) = -π(Y)g(X,Z) - π(Z)g(X,Y)`.

use crate::geometry::{
    christoffel_from_jet, ricci, riemann, scalar_from_ricci, ChartManifold, ConnectionCoeffs,
    GeomError, MetricJet, VectorField,
};
use crate::scalar::Real;
use crate::tensor::{dot, max_abs, vec_sub, Matrix, Rank3, Rank4};

/// Which affine connection to use on a chart.
#[derive(Clone, Debug)]
pub enum ConnectionSpec<T> {
    LeviCivita,
    /// Semi-symmetric non-metric connection generated by `P`.
    SemiSymmetricNonMetric { p: VectorField<T> },
}

impl<T: Real> ConnectionSpec<T> {
    pub fn ssnm(p: VectorField<T>) -> Self {
        ConnectionSpec::SemiSymmetricNonMetric { p }
    }

    pub fn generator(&self) -> Option<&VectorField<T>> {
        match self {
            ConnectionSpec::LeviCivita => None,
            ConnectionSpec::SemiSymmetricNonMetric { p } => Some(p),
        }
    }
}

/// One-form values π_j = g_jl P^l and partials ∂_m π_j at a point.
pub struct OneFormJet<T> {
    pub values: Vec<T>,
    /// `d.get(m, j) = ∂_m π_j`
    pub d: Matrix<T>,
}

pub fn pi_jet<T: Real>(
    mj: &MetricJet<T>,
    p: &VectorField<T>,
    point: &[T],
) -> Result<OneFormJet<T>, GeomError> {
    let n = mj.dim();
    let (p_val, p_jac) = p.jet(point)?;
    let values = (0..n)
        .map(|j| (0..n).map(|l| mj.g.get(j, l) * p_val[l]).sum())
        .collect();
    let d = Matrix::from_fn(n, |m, j| {
        (0..n)
            .map(|l| mj.dg.get(m, j, l) * p_val[l] + mj.g.get(j, l) * p_jac.get(l, m))
            .sum()
    });
    Ok(OneFormJet { values, d })
}

/// Coefficients of the requested connection with exact first derivatives.
/// For the semi-symmetric non-metric kind, `Γ̄^k_ij = Γ^k_ij + δ^k_i π_j`
/// (not symmetric in `(i,j)` when π ≠ 0).
pub fn connection_coeffs<T: Real>(
    chart: &ChartManifold<T>,
    spec: &ConnectionSpec<T>,
    point: &[T],
) -> Result<ConnectionCoeffs<T>, GeomError> {
    let mj = chart.metric_jet(point)?;
    connection_coeffs_from_jet(&mj, spec, point)
}

pub fn connection_coeffs_from_jet<T: Real>(
    mj: &MetricJet<T>,
    spec: &ConnectionSpec<T>,
    point: &[T],
) -> Result<ConnectionCoeffs<T>, GeomError> {
    let lc = christoffel_from_jet(mj);
    match spec {
        ConnectionSpec::LeviCivita => Ok(lc),
        ConnectionSpec::SemiSymmetricNonMetric { p } => {
            let pi = pi_jet(mj, p, point)?;
            let n = mj.dim();
            let gamma = Rank3::from_fn(n, |k, i, j| {
                let mut v = lc.gamma.get(k, i, j);
                if k == i {
                    v += pi.values[j];
                }
                v
            });
            let dgamma = Rank4::from_fn(n, |m, k, i, j| {
                let mut v = lc.dgamma.get(m, k, i, j);
                if k == i {
                    v += pi.d.get(m, j);
                }
                v
            });
            Ok(ConnectionCoeffs { gamma, dgamma })
        }
    }
}

/// Torsion T(X,Y) = ∇̄_X Y - ∇̄_Y X - [X,Y], evaluated tensorially from the
/// coefficient antisymmetry: T^k = (Γ̄^k_ij - Γ̄^k_ji) X^i Y^j.
pub fn torsion<T: Real>(
    chart: &ChartManifold<T>,
    spec: &ConnectionSpec<T>,
    point: &[T],
    x: &[T],
    y: &[T],
) -> Result<Vec<T>, GeomError> {
    let coeffs = connection_coeffs(chart, spec, point)?;
    let n = coeffs.dim();
    Ok((0..n)
        .map(|k| {
            let mut acc = T::zero();
            for i in 0..n {
                for j in 0..n {
                    acc += (coeffs.gamma.get(k, i, j) - coeffs.gamma.get(k, j, i)) * x[i] * y[j];
                }
            }
            acc
        })
        .collect())
}

/// Both routes to the curvature of the semi-symmetric connection: the direct
/// computation from its coefficients, and the reconstruction from
/// Levi-Civita data,
/// `R̄(X,Y)Z = R(X,Y)Z + g(Z,∇_X P)Y - g(Z,∇_Y P)X + π(Z)[π(Y)X - π(X)Y]`.
#[derive(Clone, Debug)]
pub struct CurvatureComparison<T> {
    pub direct: Vec<T>,
    pub reconstructed: Vec<T>,
    /// max-abs component difference
    pub error: T,
    /// error / (1 + max |direct|)
    pub scaled_error: T,
}

pub fn curvature_relation_check<T: Real>(
    chart: &ChartManifold<T>,
    p: &VectorField<T>,
    point: &[T],
    x: &[T],
    y: &[T],
    z: &[T],
) -> Result<CurvatureComparison<T>, GeomError> {
    let mj = chart.metric_jet(point)?;
    let lc = christoffel_from_jet(&mj);
    let spec = ConnectionSpec::SemiSymmetricNonMetric { p: p.clone() };
    let bar = connection_coeffs_from_jet(&mj, &spec, point)?;

    let direct = riemann(&bar, x, y, z);

    let (p_val, p_jac) = p.jet(point)?;
    let grad_x_p = crate::geometry::covariant_derivative(&lc, &p_val, &p_jac, x);
    let grad_y_p = crate::geometry::covariant_derivative(&lc, &p_val, &p_jac, y);
    let pi_x = mj.g.bilinear(x, &p_val);
    let pi_y = mj.g.bilinear(y, &p_val);
    let pi_z = mj.g.bilinear(z, &p_val);
    let base = riemann(&lc, x, y, z);
    let n = mj.dim();
    let g_z_dxp = mj.g.bilinear(z, &grad_x_p);
    let g_z_dyp = mj.g.bilinear(z, &grad_y_p);
    let reconstructed: Vec<T> = (0..n)
        .map(|l| {
            base[l] + g_z_dxp * y[l] - g_z_dyp * x[l] + pi_z * (pi_y * x[l] - pi_x * y[l])
        })
        .collect();

    let error = max_abs(&vec_sub(&direct, &reconstructed));
    let scaled_error = error / (T::one() + max_abs(&direct));
    Ok(CurvatureComparison { direct, reconstructed, error, scaled_error })
}

/// Ricci matrix of the semi-symmetric connection (genuinely non-symmetric
/// in general).
pub fn ricci_ssnm<T: Real>(
    chart: &ChartManifold<T>,
    p: &VectorField<T>,
    point: &[T],
) -> Result<Matrix<T>, GeomError> {
    let spec = ConnectionSpec::SemiSymmetricNonMetric { p: p.clone() };
    let coeffs = connection_coeffs(chart, &spec, point)?;
    Ok(ricci(&coeffs))
}

/// Scalar curvature S̄ = g^{ij} Ric̄_ij of the semi-symmetric connection.
pub fn scalar_ssnm<T: Real>(
    chart: &ChartManifold<T>,
    p: &VectorField<T>,
    point: &[T],
) -> Result<T, GeomError> {
    let mj = chart.metric_jet(point)?;
    let spec = ConnectionSpec::SemiSymmetricNonMetric { p: p.clone() };
    let coeffs = connection_coeffs_from_jet(&mj, &spec, point)?;
    Ok(scalar_from_ricci(&mj, &ricci(&coeffs)))
}

/// Covariant derivative of the metric, `(∇̄_i g)_jk = ∂_i g_jk -
/// Γ̄^l_ij g_lk - Γ̄^l_ik g_jl`, indexed `(i, j, k)`. Zero for Levi-Civita;
/// equal to `-π_j g_ik - π_k g_ij` for the semi-symmetric kind.
pub fn metric_covariant_derivative<T: Real>(
    chart: &ChartManifold<T>,
    spec: &ConnectionSpec<T>,
    point: &[T],
) -> Result<Rank3<T>, GeomError> {
    let mj = chart.metric_jet(point)?;
    let coeffs = connection_coeffs_from_jet(&mj, spec, point)?;
    let n = mj.dim();
    Ok(Rank3::from_fn(n, |i, j, k| {
        let mut acc = mj.dg.get(i, j, k);
        for l in 0..n {
            acc -= coeffs.gamma.get(l, i, j) * mj.g.get(l, k);
            acc -= coeffs.gamma.get(l, i, k) * mj.g.get(j, l);
        }
        acc
    }))
}

/// Scalar curvature through an explicit orthonormal frame,
/// `S = Σ_k ε_k Ric(E_k, E_k)`. Test oracle for frame independence.
pub fn scalar_via_frame<T: Real>(mj: &MetricJet<T>, ric: &Matrix<T>, point: &[T]) -> Result<T, GeomError> {
    let frame = crate::geometry::orthonormal_frame(&mj.g, point)?;
    let mut acc = T::zero();
    for (e, &s) in frame.basis.iter().zip(&frame.signs) {
        acc += T::of(s as f64) * ric.bilinear(e, e);
    }
    Ok(acc)
}

/// π(X) = g(X, P) at a point.
pub fn pi_value<T: Real>(
    mj: &MetricJet<T>,
    p: &VectorField<T>,
    point: &[T],
    x: &[T],
) -> Result<T, GeomError> {
    let p_val = p.values(point)?;
    Ok(mj.g.bilinear(x, &p_val))
}

/// π(P) = g(P, P) at a point.
pub fn pi_of_generator<T: Real>(
    mj: &MetricJet<T>,
    p: &VectorField<T>,
    point: &[T],
) -> Result<T, GeomError> {
    let p_val = p.values(point)?;
    Ok(dot(&mj.g.mul_vec(&p_val), &p_val))
}

//! Warped products `B ×_f F` with metric `g_B ⊕ f² g_F`: ambient chart
//! assembly, lifting of factor fields, and evaluation of the curvature /
//! Ricci / scalar decomposition identities that express ambient
//! semi-symmetric-connection geometry through factor-level data.
//!
//! Each decomposition case is checked by computing its left side directly on
//! the assembled ambient chart (with the lifted generator field) and its
//! right side purely from factor-level geometry; the two routes share no
//! code beyond the jet engine.

use std::fmt;
use std::sync::Arc;

use crate::expr::Expression;
use crate::geometry::{
    christoffel_from_jet, covariant_derivative, divergence_from_parts, riemann_apply,
    riemann_tensor, scalar_calculus_from_parts, scalar_from_ricci, ChartManifold,
    ConnectionCoeffs, GeomError, MetricJet, ScalarCalculus, VectorField,
};
use crate::scalar::{scaled_error, scaled_error_slice, Real};
use crate::ssnm::{connection_coeffs_from_jet, ConnectionSpec};
use crate::tensor::{dot, Matrix, Rank4};

/// Which factor a field or tangent vector lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Base,
    Fiber,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Base => "base",
            Placement::Fiber => "fiber",
        })
    }
}

/// A vector field on one factor, to be lifted with zeros in the other block.
#[derive(Clone, Debug)]
pub struct PlacedField<T> {
    placement: Placement,
    field: VectorField<T>,
}

impl<T: Real> PlacedField<T> {
    pub fn new(placement: Placement, field: VectorField<T>) -> Self {
        PlacedField { placement, field }
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn field(&self) -> &VectorField<T> {
        &self.field
    }
}

/// A tangent vector at a point, supported on one factor block.
#[derive(Clone, Debug)]
pub struct PlacedVector<T> {
    pub placement: Placement,
    pub components: Vec<T>,
}

impl<T: Real> PlacedVector<T> {
    pub fn base(components: Vec<T>) -> Self {
        PlacedVector { placement: Placement::Base, components }
    }

    pub fn fiber(components: Vec<T>) -> Self {
        PlacedVector { placement: Placement::Fiber, components }
    }
}

/// The warped product `B ×_f F`: base and fiber charts, the warping function
/// `f` over base coordinates, and the assembled ambient chart with metric
/// blocks `g_B` and `f² g_F` (mixed entries are the zero expression, base
/// coordinates first).
#[derive(Clone, Debug)]
pub struct WarpedProduct<T> {
    base: ChartManifold<T>,
    fiber: ChartManifold<T>,
    warping: Expression<T>,
    ambient: ChartManifold<T>,
}

impl<T: Real> WarpedProduct<T> {
    pub fn build(
        base: ChartManifold<T>,
        fiber: ChartManifold<T>,
        warping: Expression<T>,
    ) -> Result<Self, GeomError> {
        if warping.coords() != base.coords() {
            return Err(GeomError::DimensionMismatch {
                what: "warping function must be bound to the base coordinates".into(),
                expected: base.dim(),
                found: warping.dim(),
            });
        }
        for name in fiber.coords().iter() {
            if base.coords().contains(name) {
                return Err(GeomError::DuplicateCoordinate { name: name.clone() });
            }
        }
        let n1 = base.dim();
        let n2 = fiber.dim();
        let ambient_coords: Arc<[String]> = base
            .coords()
            .iter()
            .chain(fiber.coords().iter())
            .cloned()
            .collect();
        let base_map: Vec<usize> = (0..n1).collect();
        let fiber_map: Vec<usize> = (n1..n1 + n2).collect();
        let f_ambient = warping.rebind(ambient_coords.clone(), &base_map);
        let f_squared = f_ambient.squared();
        let zero = Expression::constant(ambient_coords.clone(), T::zero());
        let dim = n1 + n2;
        let mut metric = vec![vec![zero; dim]; dim];
        for i in 0..n1 {
            for j in 0..n1 {
                metric[i][j] = base.metric_entry(i, j).rebind(ambient_coords.clone(), &base_map);
            }
        }
        for u in 0..n2 {
            for v in 0..n2 {
                let g_f = fiber.metric_entry(u, v).rebind(ambient_coords.clone(), &fiber_map);
                metric[n1 + u][n1 + v] = f_squared.mul(&g_f);
            }
        }
        let mut signature = base.signature().to_vec();
        signature.extend_from_slice(fiber.signature());
        let ambient = ChartManifold::new(ambient_coords, metric, signature)?;
        Ok(WarpedProduct { base, fiber, warping, ambient })
    }

    pub fn base(&self) -> &ChartManifold<T> {
        &self.base
    }

    pub fn fiber(&self) -> &ChartManifold<T> {
        &self.fiber
    }

    pub fn ambient(&self) -> &ChartManifold<T> {
        &self.ambient
    }

    pub fn warping(&self) -> &Expression<T> {
        &self.warping
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber.dim()
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn split_point<'p>(&self, point: &'p [T]) -> (&'p [T], &'p [T]) {
        point.split_at(self.base_dim())
    }

    /// Lift a factor field to the ambient chart (zeros in the other block).
    pub fn lift(&self, placed: &PlacedField<T>) -> VectorField<T> {
        let coords = self.ambient.coords().clone();
        let n1 = self.base_dim();
        let n2 = self.fiber_dim();
        let zero = Expression::constant(coords.clone(), T::zero());
        let mut components = vec![zero; n1 + n2];
        match placed.placement {
            Placement::Base => {
                let map: Vec<usize> = (0..n1).collect();
                for (i, c) in placed.field.components().iter().enumerate() {
                    components[i] = c.rebind(coords.clone(), &map);
                }
            }
            Placement::Fiber => {
                let map: Vec<usize> = (n1..n1 + n2).collect();
                for (u, c) in placed.field.components().iter().enumerate() {
                    components[n1 + u] = c.rebind(coords.clone(), &map);
                }
            }
        }
        VectorField::new(&self.ambient, components).expect("lifted component count matches")
    }

    /// Lift a constant tangent vector.
    pub fn lift_vector(&self, v: &PlacedVector<T>) -> Vec<T> {
        let n1 = self.base_dim();
        let n2 = self.fiber_dim();
        let mut out = vec![T::zero(); n1 + n2];
        match v.placement {
            Placement::Base => {
                assert_eq!(v.components.len(), n1, "base vector dimension");
                out[..n1].copy_from_slice(&v.components);
            }
            Placement::Fiber => {
                assert_eq!(v.components.len(), n2, "fiber vector dimension");
                out[n1..].copy_from_slice(&v.components);
            }
        }
        out
    }

    /// All factor-level and ambient geometry at one ambient point, for the
    /// generator field `p` (absent means the zero field).
    pub fn at<'a>(
        &'a self,
        p: Option<&'a PlacedField<T>>,
        point: &[T],
    ) -> Result<WarpedPoint<'a, T>, GeomError> {
        WarpedPoint::new(self, p, point)
    }
}

/// One side-by-side evaluation of a decomposition identity.
#[derive(Clone, Debug)]
pub struct VectorCheck<T> {
    pub lhs: Vec<T>,
    pub rhs: Vec<T>,
    pub scaled_error: T,
}

#[derive(Clone, Debug)]
pub struct ScalarCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub scaled_error: T,
}

/// Curvature decomposition statements. `B*` cases hold for a base-placed
/// generator, `F*` for fiber-placed; the trailing letter splits statements
/// that share one case label (`B3a`: R̄(X,Y)V = 0, `B3b`: R̄(V,W)X = 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureCase {
    B1,
    B2,
    B3a,
    B3b,
    B4,
    B5,
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
}

impl CurvatureCase {
    pub const ALL: [CurvatureCase; 12] = [
        CurvatureCase::B1,
        CurvatureCase::B2,
        CurvatureCase::B3a,
        CurvatureCase::B3b,
        CurvatureCase::B4,
        CurvatureCase::B5,
        CurvatureCase::F1,
        CurvatureCase::F2,
        CurvatureCase::F3,
        CurvatureCase::F4,
        CurvatureCase::F5,
        CurvatureCase::F6,
    ];

    /// Generator placement this statement is about.
    pub fn family(self) -> Placement {
        match self {
            CurvatureCase::B1
            | CurvatureCase::B2
            | CurvatureCase::B3a
            | CurvatureCase::B3b
            | CurvatureCase::B4
            | CurvatureCase::B5 => Placement::Base,
            _ => Placement::Fiber,
        }
    }

    /// Slot placements of (s1, s2, s3) in R̄(s1, s2)s3.
    pub fn slots(self) -> [Placement; 3] {
        use Placement::{Base as B, Fiber as F};
        match self {
            CurvatureCase::B1 | CurvatureCase::F1 => [B, B, B],
            CurvatureCase::B2 | CurvatureCase::F2 => [F, B, B],
            CurvatureCase::B3a | CurvatureCase::F3 => [B, B, F],
            CurvatureCase::B3b | CurvatureCase::F4 => [F, F, B],
            CurvatureCase::B4 | CurvatureCase::F5 => [B, F, F],
            CurvatureCase::B5 | CurvatureCase::F6 => [F, F, F],
        }
    }
}

impl fmt::Display for CurvatureCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Ricci decomposition statements; `B2a` is Ric̄(X,V) = 0 and `B2b` the
/// transposed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RicciCase {
    B1,
    B2a,
    B2b,
    B3,
    F1,
    F2,
    F3,
    F4,
}

impl RicciCase {
    pub const ALL: [RicciCase; 8] = [
        RicciCase::B1,
        RicciCase::B2a,
        RicciCase::B2b,
        RicciCase::B3,
        RicciCase::F1,
        RicciCase::F2,
        RicciCase::F3,
        RicciCase::F4,
    ];

    pub fn family(self) -> Placement {
        match self {
            RicciCase::B1 | RicciCase::B2a | RicciCase::B2b | RicciCase::B3 => Placement::Base,
            _ => Placement::Fiber,
        }
    }

    /// Slot placements of (s1, s2) in Ric̄(s1, s2).
    pub fn slots(self) -> [Placement; 2] {
        use Placement::{Base as B, Fiber as F};
        match self {
            RicciCase::B1 | RicciCase::F1 => [B, B],
            RicciCase::B2a | RicciCase::F2 => [B, F],
            RicciCase::B2b | RicciCase::F3 => [F, B],
            RicciCase::B3 | RicciCase::F4 => [F, F],
        }
    }
}

impl fmt::Display for RicciCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// All factor-level and ambient geometric data of a warped product at one
/// ambient sample point, ready for identity evaluation.
pub struct WarpedPoint<'a, T> {
    wp: &'a WarpedProduct<T>,
    p: Option<&'a PlacedField<T>>,
    base_point: Vec<T>,
    fiber_point: Vec<T>,
    f_value: T,
    /// Scalar calculus of f on the base (with a base-placed generator wired
    /// in for the Pf term).
    f_calc: ScalarCalculus<T>,
    base_mj: MetricJet<T>,
    base_lc: ConnectionCoeffs<T>,
    /// Curvature of the dispatched base connection: semi-symmetric when the
    /// generator is base-placed, Levi-Civita otherwise.
    base_riemann: Rank4<T>,
    base_ric: Matrix<T>,
    fiber_mj: MetricJet<T>,
    fiber_lc: ConnectionCoeffs<T>,
    fiber_riemann: Rank4<T>,
    fiber_ric: Matrix<T>,
    amb_mj: MetricJet<T>,
    amb_lc: ConnectionCoeffs<T>,
    /// Curvature of the ambient semi-symmetric connection (lifted generator).
    amb_bar_riemann: Rank4<T>,
    amb_bar_ric: Matrix<T>,
    p_ambient_values: Vec<T>,
    p_ambient_jac: Matrix<T>,
    /// Base components and Jacobian of a base-placed generator.
    p_base: Option<(Vec<T>, Matrix<T>)>,
}

impl<'a, T: Real> WarpedPoint<'a, T> {
    fn new(
        wp: &'a WarpedProduct<T>,
        p: Option<&'a PlacedField<T>>,
        point: &[T],
    ) -> Result<Self, GeomError> {
        if point.len() != wp.dim() {
            return Err(GeomError::DimensionMismatch {
                what: "ambient point length".into(),
                expected: wp.dim(),
                found: point.len(),
            });
        }
        let (bp, fp) = wp.split_point(point);
        let base_point = bp.to_vec();
        let fiber_point = fp.to_vec();

        let f_value = wp.warping.eval(&base_point)?;
        if f_value <= T::zero() {
            return Err(GeomError::DegenerateMetric {
                point: crate::geometry::point_label(point),
                det: f_value.to_f64().unwrap_or(f64::NAN),
            });
        }

        let base_mj = wp.base.metric_jet(&base_point)?;
        let base_lc = christoffel_from_jet(&base_mj);
        let fiber_mj = wp.fiber.metric_jet(&fiber_point)?;
        let fiber_lc = christoffel_from_jet(&fiber_mj);

        let p_base_field = match p {
            Some(pf) if pf.placement() == Placement::Base => Some(pf.field()),
            _ => None,
        };
        let base_conn = match p_base_field {
            Some(field) => connection_coeffs_from_jet(
                &base_mj,
                &ConnectionSpec::SemiSymmetricNonMetric { p: field.clone() },
                &base_point,
            )?,
            None => base_lc.clone(),
        };
        let p_base = match p_base_field {
            Some(field) => Some(field.jet(&base_point)?),
            None => None,
        };

        let f_calc = scalar_calculus_from_parts(
            &base_mj,
            &base_lc,
            &wp.warping,
            p_base_field,
            &base_point,
        )?;

        let amb_mj = wp.ambient.metric_jet(point)?;
        let amb_lc = christoffel_from_jet(&amb_mj);
        let lifted_p = p.map(|pf| wp.lift(pf));
        let amb_bar = match &lifted_p {
            Some(field) => connection_coeffs_from_jet(
                &amb_mj,
                &ConnectionSpec::SemiSymmetricNonMetric { p: field.clone() },
                point,
            )?,
            None => amb_lc.clone(),
        };
        let (p_ambient_values, p_ambient_jac) = match &lifted_p {
            Some(field) => field.jet(point)?,
            None => (vec![T::zero(); wp.dim()], Matrix::zeros(wp.dim())),
        };

        let base_riemann = riemann_tensor(&base_conn);
        let base_ric = crate::geometry::ricci_from_riemann(&base_riemann);
        let fiber_riemann = riemann_tensor(&fiber_lc);
        let fiber_ric = crate::geometry::ricci_from_riemann(&fiber_riemann);
        let amb_bar_riemann = riemann_tensor(&amb_bar);
        let amb_bar_ric = crate::geometry::ricci_from_riemann(&amb_bar_riemann);

        Ok(WarpedPoint {
            wp,
            p,
            base_point,
            fiber_point,
            f_value,
            f_calc,
            base_mj,
            base_lc,
            base_riemann,
            base_ric,
            fiber_mj,
            fiber_lc,
            fiber_riemann,
            fiber_ric,
            amb_mj,
            amb_lc,
            amb_bar_riemann,
            amb_bar_ric,
            p_ambient_values,
            p_ambient_jac,
            p_base,
        })
    }

    pub fn warped_product(&self) -> &WarpedProduct<T> {
        self.wp
    }

    pub fn base_point(&self) -> &[T] {
        &self.base_point
    }

    pub fn f_value(&self) -> T {
        self.f_value
    }

    pub fn f_calculus(&self) -> &ScalarCalculus<T> {
        &self.f_calc
    }

    pub fn ambient_metric(&self) -> &MetricJet<T> {
        &self.amb_mj
    }

    pub fn base_metric(&self) -> &MetricJet<T> {
        &self.base_mj
    }

    pub fn fiber_metric(&self) -> &MetricJet<T> {
        &self.fiber_mj
    }

    /// Ambient Ricci matrix of the semi-symmetric connection.
    pub fn ambient_ricci(&self) -> &Matrix<T> {
        &self.amb_bar_ric
    }

    /// Ambient scalar curvature of the semi-symmetric connection.
    pub fn ambient_scalar(&self) -> T {
        scalar_from_ricci(&self.amb_mj, &self.amb_bar_ric)
    }

    /// Base Ricci matrix under the dispatched base connection.
    pub fn base_ricci(&self) -> &Matrix<T> {
        &self.base_ric
    }

    pub fn base_scalar(&self) -> T {
        scalar_from_ricci(&self.base_mj, &self.base_ric)
    }

    /// Fiber Ricci matrix (Levi-Civita).
    pub fn fiber_ricci(&self) -> &Matrix<T> {
        &self.fiber_ric
    }

    pub fn fiber_scalar(&self) -> T {
        scalar_from_ricci(&self.fiber_mj, &self.fiber_ric)
    }

    fn n2(&self) -> T {
        T::of_usize(self.wp.fiber_dim())
    }

    fn nbar(&self) -> T {
        T::of_usize(self.wp.dim())
    }

    /// π(v) = g(v, P) on the ambient chart.
    pub fn pi(&self, v_ambient: &[T]) -> T {
        self.amb_mj.g.bilinear(v_ambient, &self.p_ambient_values)
    }

    /// π(P) = g(P, P) on the ambient chart.
    pub fn pi_of_p(&self) -> T {
        self.amb_mj
            .g
            .bilinear(&self.p_ambient_values, &self.p_ambient_values)
    }

    /// Ambient Levi-Civita ∇_v P for a constant ambient direction.
    pub fn ambient_grad_p(&self, v_ambient: &[T]) -> Vec<T> {
        covariant_derivative(&self.amb_lc, &self.p_ambient_values, &self.p_ambient_jac, v_ambient)
    }

    /// Base Levi-Civita ∇_x P for a base-placed generator and base direction.
    fn base_grad_p(&self, x_base: &[T]) -> Vec<T> {
        match &self.p_base {
            Some((values, jac)) => covariant_derivative(&self.base_lc, values, jac, x_base),
            None => vec![T::zero(); self.wp.base_dim()],
        }
    }

    /// π restricted to base vectors for a base-placed generator.
    fn pi_base(&self, x_base: &[T]) -> T {
        match &self.p_base {
            Some((values, _)) => self.base_mj.g.bilinear(x_base, values),
            None => T::zero(),
        }
    }

    /// g_B(y, ∇^B_x P) for base directions; zero unless the generator is
    /// base-placed.
    pub fn base_grad_p_pairing(&self, x_base: &[T], y_base: &[T]) -> T {
        let grad_x_p = self.base_grad_p(x_base);
        self.base_mj.g.bilinear(y_base, &grad_x_p)
    }

    /// π(x)π(y) for base directions under a base-placed generator.
    pub fn pi_base_pair(&self, x_base: &[T], y_base: &[T]) -> T {
        self.pi_base(x_base) * self.pi_base(y_base)
    }

    /// Divergence of a base-placed generator on the base manifold.
    pub fn base_divergence_of_p(&self) -> Result<T, GeomError> {
        match self.p {
            Some(pf) if pf.placement() == Placement::Base => {
                divergence_from_parts(&self.base_lc, pf.field(), &self.base_point)
            }
            _ => Ok(T::zero()),
        }
    }

    /// Divergence of a fiber-placed generator on the fiber manifold.
    pub fn fiber_divergence_of_p(&self) -> Result<T, GeomError> {
        match self.p {
            Some(pf) if pf.placement() == Placement::Fiber => {
                divergence_from_parts(&self.fiber_lc, pf.field(), &self.fiber_point)
            }
            _ => Ok(T::zero()),
        }
    }

    /// Xf = x^i ∂_i f for a base direction.
    fn xf(&self, x_base: &[T]) -> T {
        dot(x_base, &self.f_calc.df)
    }

    fn check_family(&self, family: Placement, what: &str) -> Result<(), GeomError> {
        if let Some(pf) = self.p {
            if pf.placement() != family {
                return Err(GeomError::PlacementMismatch {
                    what: format!(
                        "{what} expects a {family}-placed generator, found {}-placed",
                        pf.placement()
                    ),
                });
            }
        }
        Ok(())
    }

    fn check_slots<const N: usize>(
        &self,
        slots: &[PlacedVector<T>],
        expected: [Placement; N],
        what: &str,
    ) -> Result<(), GeomError> {
        if slots.len() != N {
            return Err(GeomError::DimensionMismatch {
                what: format!("{what} slot count"),
                expected: N,
                found: slots.len(),
            });
        }
        for (k, (slot, want)) in slots.iter().zip(expected.iter()).enumerate() {
            if slot.placement != *want {
                return Err(GeomError::PlacementMismatch {
                    what: format!("{what} slot {k} must be {want}-placed"),
                });
            }
            let dim = match want {
                Placement::Base => self.wp.base_dim(),
                Placement::Fiber => self.wp.fiber_dim(),
            };
            if slot.components.len() != dim {
                return Err(GeomError::DimensionMismatch {
                    what: format!("{what} slot {k} component count"),
                    expected: dim,
                    found: slot.components.len(),
                });
            }
        }
        Ok(())
    }

    /// Right-hand side of a curvature decomposition statement, as an ambient
    /// vector assembled from factor-level data only.
    pub fn curvature_rhs(
        &self,
        case: CurvatureCase,
        slots: &[PlacedVector<T>],
    ) -> Result<Vec<T>, GeomError> {
        self.check_family(case.family(), "curvature case")?;
        self.check_slots(slots, case.slots(), "curvature case")?;
        let f = self.f_value;
        let dim = self.wp.dim();
        let lift = |v: &PlacedVector<T>| self.wp.lift_vector(v);
        let rhs = match case {
            CurvatureCase::B1 | CurvatureCase::F1 => {
                let r = riemann_apply(
                    &self.base_riemann,
                    &slots[0].components,
                    &slots[1].components,
                    &slots[2].components,
                );
                lift(&PlacedVector::base(r))
            }
            CurvatureCase::B2 => {
                // R̄(V,X)Y = -[H^f(X,Y)/f + g(Y,∇_X P) - π(X)π(Y)] V
                let v = &slots[0];
                let x = &slots[1].components;
                let y = &slots[2].components;
                let h = self.f_calc.hessian.bilinear(x, y);
                let grad_x_p = self.base_grad_p(x);
                let coef = -(h / f) - self.base_mj.g.bilinear(y, &grad_x_p)
                    + self.pi_base(x) * self.pi_base(y);
                crate::tensor::vec_scale(coef, &lift(v))
            }
            CurvatureCase::B3a | CurvatureCase::B3b => vec![T::zero(); dim],
            CurvatureCase::B4 => {
                // R̄(X,V)W = -g(V,W)[∇_X(grad f)/f + (Pf/f) X]
                let x = &slots[0];
                let v = lift(&slots[1]);
                let w = lift(&slots[2]);
                let gvw = self.amb_mj.g.bilinear(&v, &w);
                let grad_deriv = self.f_calc.grad_derivative(&x.components);
                let vec = crate::tensor::axpy(
                    &crate::tensor::vec_scale(f.recip(), &grad_deriv),
                    self.f_calc.p_f / f,
                    &x.components,
                );
                crate::tensor::vec_scale(-gvw, &lift(&PlacedVector::base(vec)))
            }
            CurvatureCase::B5 => {
                // R̄(U,V)W = R^F(U,V)W - [|grad f|²/f² + Pf/f][g(V,W)U - g(U,W)V]
                let u = lift(&slots[0]);
                let v = lift(&slots[1]);
                let w = lift(&slots[2]);
                let rf = riemann_apply(
                    &self.fiber_riemann,
                    &slots[0].components,
                    &slots[1].components,
                    &slots[2].components,
                );
                let coef = self.f_calc.grad_norm2 / (f * f) + self.f_calc.p_f / f;
                let gvw = self.amb_mj.g.bilinear(&v, &w);
                let guw = self.amb_mj.g.bilinear(&u, &w);
                let bracket = crate::tensor::vec_sub(
                    &crate::tensor::vec_scale(gvw, &u),
                    &crate::tensor::vec_scale(guw, &v),
                );
                crate::tensor::vec_sub(
                    &lift(&PlacedVector::fiber(rf)),
                    &crate::tensor::vec_scale(coef, &bracket),
                )
            }
            CurvatureCase::F2 => {
                // R̄(V,X)Y = -[H^f(X,Y)/f] V - π(V) (Yf/f) X
                let v = lift(&slots[0]);
                let x = &slots[1];
                let y = &slots[2].components;
                let h = self.f_calc.hessian.bilinear(&x.components, y);
                let pi_v = self.pi(&v);
                let term1 = crate::tensor::vec_scale(-(h / f), &v);
                let term2 = crate::tensor::vec_scale(
                    -pi_v * self.xf(y) / f,
                    &lift(&PlacedVector::base(x.components.clone())),
                );
                crate::tensor::vec_add(&term1, &term2)
            }
            CurvatureCase::F3 => {
                // R̄(X,Y)V = π(V)[(Xf/f)Y - (Yf/f)X]
                let x = &slots[0];
                let y = &slots[1];
                let v = lift(&slots[2]);
                let pi_v = self.pi(&v);
                let xf = self.xf(&x.components) / f;
                let yf = self.xf(&y.components) / f;
                let vec = crate::tensor::vec_sub(
                    &crate::tensor::vec_scale(xf, &lift(&PlacedVector::base(y.components.clone()))),
                    &crate::tensor::vec_scale(yf, &lift(&PlacedVector::base(x.components.clone()))),
                );
                crate::tensor::vec_scale(pi_v, &vec)
            }
            CurvatureCase::F4 => {
                // R̄(V,W)X = (Xf/f)[π(W)V - π(V)W]
                let v = lift(&slots[0]);
                let w = lift(&slots[1]);
                let x = &slots[2];
                let xf = self.xf(&x.components) / f;
                let vec = crate::tensor::vec_sub(
                    &crate::tensor::vec_scale(self.pi(&w), &v),
                    &crate::tensor::vec_scale(self.pi(&v), &w),
                );
                crate::tensor::vec_scale(xf, &vec)
            }
            CurvatureCase::F5 => {
                // R̄(X,V)W = -g(V,W) ∇_X(grad f)/f + (Xf/f)π(W)V
                //           - g(W,∇_V P) X + π(W)π(V) X
                let x = &slots[0];
                let v = lift(&slots[1]);
                let w = lift(&slots[2]);
                let gvw = self.amb_mj.g.bilinear(&v, &w);
                let grad_deriv = self.f_calc.grad_derivative(&x.components);
                let x_lifted = lift(&PlacedVector::base(x.components.clone()));
                let grad_v_p = self.ambient_grad_p(&v);
                let pi_v = self.pi(&v);
                let pi_w = self.pi(&w);
                let mut out = crate::tensor::vec_scale(
                    -gvw / f,
                    &lift(&PlacedVector::base(grad_deriv)),
                );
                out = crate::tensor::vec_add(
                    &out,
                    &crate::tensor::vec_scale(self.xf(&x.components) / f * pi_w, &v),
                );
                let x_coef = -self.amb_mj.g.bilinear(&w, &grad_v_p) + pi_w * pi_v;
                crate::tensor::vec_add(&out, &crate::tensor::vec_scale(x_coef, &x_lifted))
            }
            CurvatureCase::F6 => {
                // R̄(U,V)W = R^F(U,V)W - (|grad f|²/f²)[g(V,W)U - g(U,W)V]
                //           + g(W,∇_U P)V - g(W,∇_V P)U + π(W)[π(V)U - π(U)V]
                let u = lift(&slots[0]);
                let v = lift(&slots[1]);
                let w = lift(&slots[2]);
                let rf = riemann_apply(
                    &self.fiber_riemann,
                    &slots[0].components,
                    &slots[1].components,
                    &slots[2].components,
                );
                let coef = self.f_calc.grad_norm2 / (f * f);
                let gvw = self.amb_mj.g.bilinear(&v, &w);
                let guw = self.amb_mj.g.bilinear(&u, &w);
                let mut out = lift(&PlacedVector::fiber(rf));
                out = crate::tensor::vec_sub(
                    &out,
                    &crate::tensor::vec_scale(
                        coef,
                        &crate::tensor::vec_sub(
                            &crate::tensor::vec_scale(gvw, &u),
                            &crate::tensor::vec_scale(guw, &v),
                        ),
                    ),
                );
                let grad_u_p = self.ambient_grad_p(&u);
                let grad_v_p = self.ambient_grad_p(&v);
                let g_w_dup = self.amb_mj.g.bilinear(&w, &grad_u_p);
                let g_w_dvp = self.amb_mj.g.bilinear(&w, &grad_v_p);
                out = crate::tensor::vec_add(&out, &crate::tensor::vec_scale(g_w_dup, &v));
                out = crate::tensor::vec_sub(&out, &crate::tensor::vec_scale(g_w_dvp, &u));
                let pi_w = self.pi(&w);
                let pi_u = self.pi(&u);
                let pi_v = self.pi(&v);
                out = crate::tensor::vec_add(
                    &out,
                    &crate::tensor::vec_scale(
                        pi_w,
                        &crate::tensor::vec_sub(
                            &crate::tensor::vec_scale(pi_v, &u),
                            &crate::tensor::vec_scale(pi_u, &v),
                        ),
                    ),
                );
                out
            }
        };
        Ok(rhs)
    }

    /// Direct ambient R̄(s1, s2)s3 with the lifted generator.
    pub fn curvature_lhs(&self, slots: &[PlacedVector<T>]) -> Vec<T> {
        let s: Vec<Vec<T>> = slots.iter().map(|v| self.wp.lift_vector(v)).collect();
        riemann_apply(&self.amb_bar_riemann, &s[0], &s[1], &s[2])
    }

    pub fn curvature_case_check(
        &self,
        case: CurvatureCase,
        slots: &[PlacedVector<T>],
    ) -> Result<VectorCheck<T>, GeomError> {
        let rhs = self.curvature_rhs(case, slots)?;
        let lhs = self.curvature_lhs(slots);
        let scaled_error = scaled_error_slice(&lhs, &rhs);
        Ok(VectorCheck { lhs, rhs, scaled_error })
    }

    /// Right-hand side of a Ricci decomposition statement.
    pub fn ricci_rhs(&self, case: RicciCase, slots: &[PlacedVector<T>]) -> Result<T, GeomError> {
        self.check_family(case.family(), "ricci case")?;
        self.check_slots(slots, case.slots(), "ricci case")?;
        let f = self.f_value;
        let n2 = self.n2();
        let nbar = self.nbar();
        let rhs = match case {
            RicciCase::B1 => {
                // Ric̄^B(X,Y) + n₂[H^f(X,Y)/f + g(Y,∇_X P) - π(X)π(Y)]
                let x = &slots[0].components;
                let y = &slots[1].components;
                let h = self.f_calc.hessian.bilinear(x, y);
                let grad_x_p = self.base_grad_p(x);
                self.base_ric.bilinear(x, y)
                    + n2 * (h / f + self.base_mj.g.bilinear(y, &grad_x_p)
                        - self.pi_base(x) * self.pi_base(y))
            }
            RicciCase::B2a | RicciCase::B2b => T::zero(),
            RicciCase::B3 => {
                // Ric^F(V,W) + {-Δf/f + (n₂-1)|grad f|²/f² + (n̄-1)Pf/f} g(V,W)
                let v = &slots[0];
                let w = &slots[1];
                let gvw = self
                    .amb_mj
                    .g
                    .bilinear(&self.wp.lift_vector(v), &self.wp.lift_vector(w));
                let brace = -self.f_calc.laplacian / f
                    + (n2 - T::one()) * self.f_calc.grad_norm2 / (f * f)
                    + (nbar - T::one()) * self.f_calc.p_f / f;
                self.fiber_ric.bilinear(&v.components, &w.components) + brace * gvw
            }
            RicciCase::F1 => {
                // Ric^B(X,Y) + n₂ H^f(X,Y)/f
                let x = &slots[0].components;
                let y = &slots[1].components;
                self.base_ric.bilinear(x, y) + n2 * self.f_calc.hessian.bilinear(x, y) / f
            }
            RicciCase::F2 => {
                // (n̄-1) π(V) Xf/f
                let x = &slots[0].components;
                let v = self.wp.lift_vector(&slots[1]);
                (nbar - T::one()) * self.pi(&v) * self.xf(x) / f
            }
            RicciCase::F3 => {
                // (1-n̄) π(V) Xf/f
                let v = self.wp.lift_vector(&slots[0]);
                let x = &slots[1].components;
                (T::one() - nbar) * self.pi(&v) * self.xf(x) / f
            }
            RicciCase::F4 => {
                // Ric^F(V,W) + g(V,W)[-Δf/f + (n₂-1)|grad f|²/f²]
                //   + (n̄-1) g(W,∇_V P) + (1-n̄) π(V)π(W)
                let v = self.wp.lift_vector(&slots[0]);
                let w = self.wp.lift_vector(&slots[1]);
                let gvw = self.amb_mj.g.bilinear(&v, &w);
                let bracket = -self.f_calc.laplacian / f
                    + (n2 - T::one()) * self.f_calc.grad_norm2 / (f * f);
                let grad_v_p = self.ambient_grad_p(&v);
                self.fiber_ric.bilinear(&slots[0].components, &slots[1].components)
                    + gvw * bracket
                    + (nbar - T::one()) * self.amb_mj.g.bilinear(&w, &grad_v_p)
                    + (T::one() - nbar) * self.pi(&v) * self.pi(&w)
            }
        };
        Ok(rhs)
    }

    /// Direct ambient Ric̄(s1, s2).
    pub fn ricci_lhs(&self, slots: &[PlacedVector<T>]) -> T {
        let s1 = self.wp.lift_vector(&slots[0]);
        let s2 = self.wp.lift_vector(&slots[1]);
        self.amb_bar_ric.bilinear(&s1, &s2)
    }

    pub fn ricci_case_check(
        &self,
        case: RicciCase,
        slots: &[PlacedVector<T>],
    ) -> Result<ScalarCheck<T>, GeomError> {
        let rhs = self.ricci_rhs(case, slots)?;
        let lhs = self.ricci_lhs(slots);
        Ok(ScalarCheck { lhs, rhs, scaled_error: scaled_error(lhs, rhs) })
    }

    /// Right-hand side of the scalar-curvature decomposition for the
    /// generator's placement (base-placed uses the base-side formula with
    /// divergence over the base; fiber-placed the fiber-side one).
    pub fn scalar_rhs(&self) -> Result<T, GeomError> {
        let f = self.f_value;
        let n2 = self.n2();
        let nbar = self.nbar();
        let common = self.base_scalar() - T::two() * n2 * self.f_calc.laplacian / f
            + self.fiber_scalar() / (f * f)
            + n2 * (n2 - T::one()) * self.f_calc.grad_norm2 / (f * f);
        let placement = self.p.map(|pf| pf.placement()).unwrap_or(Placement::Base);
        let rhs = match placement {
            Placement::Base => {
                common + n2 * (nbar - T::one()) * self.f_calc.p_f / f - n2 * self.pi_of_p()
                    + n2 * self.base_divergence_of_p()?
            }
            Placement::Fiber => {
                common + (T::one() - nbar) * self.pi_of_p()
                    + (nbar - T::one()) * self.fiber_divergence_of_p()?
            }
        };
        Ok(rhs)
    }

    pub fn scalar_check(&self) -> Result<ScalarCheck<T>, GeomError> {
        let rhs = self.scalar_rhs()?;
        let lhs = self.ambient_scalar();
        Ok(ScalarCheck { lhs, rhs, scaled_error: scaled_error(lhs, rhs) })
    }
}

/// Block structure of the ambient metric: mixed base/fiber entries must be
/// exactly zero at any point (they are the zero expression by construction;
/// this is the runtime statement of that invariant, used in tests).
pub fn mixed_block_max_abs<T: Real>(wp: &WarpedProduct<T>, point: &[T]) -> Result<T, GeomError> {
    let mj = wp.ambient().metric_jet(point)?;
    let n1 = wp.base_dim();
    let mut worst = T::zero();
    for i in 0..n1 {
        for u in n1..wp.dim() {
            worst = worst.max(mj.g.get(i, u).abs()).max(mj.g.get(u, i).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coords_of, parse};

    fn line(name: &str) -> ChartManifold<f64> {
        let c = coords_of(&[name]);
        ChartManifold::diagonal(c.clone(), vec![parse("1", &c).unwrap()], vec![1]).unwrap()
    }

    fn plane(a: &str, b: &str) -> ChartManifold<f64> {
        let c = coords_of(&[a, b]);
        let one = parse("1", &c).unwrap();
        ChartManifold::diagonal(c, vec![one.clone(), one], vec![1, 1]).unwrap()
    }

    fn hyperbolic3() -> WarpedProduct<f64> {
        let base = line("t");
        let fiber = plane("x", "y");
        let f = parse("exp(t)", base.coords()).unwrap();
        WarpedProduct::build(base, fiber, f).unwrap()
    }

    fn sine_sphere() -> WarpedProduct<f64> {
        let base = line("t");
        let fiber = line("ph");
        let f = parse("sin(t)", base.coords()).unwrap();
        WarpedProduct::build(base, fiber, f).unwrap()
    }

    fn hyperbolic2_with_base_p() -> (WarpedProduct<f64>, PlacedField<f64>) {
        let base = line("t");
        let fiber = line("x");
        let f = parse("exp(t)", base.coords()).unwrap();
        let wp = WarpedProduct::build(base, fiber, f).unwrap();
        let p = PlacedField::new(Placement::Base, VectorField::coordinate(wp.base(), 0));
        (wp, p)
    }

    #[test]
    fn trivial_product_is_flat() {
        let base = line("t");
        let fiber = line("x");
        let f = parse("1", base.coords()).unwrap();
        let wp = WarpedProduct::build(base, fiber, f).unwrap();
        let at = wp.at(None, &[0.3, -0.7]).unwrap();
        assert_eq!(at.ambient_ricci().max_abs(), 0.0);
        assert_eq!(at.ambient_scalar(), 0.0);
    }

    #[test]
    fn coordinate_collision_rejected() {
        let base = line("t");
        let fiber = line("t");
        let f = parse("1", base.coords()).unwrap();
        assert!(matches!(
            WarpedProduct::build(base, fiber, f),
            Err(GeomError::DuplicateCoordinate { .. })
        ));
    }

    #[test]
    fn warping_must_bind_to_base() {
        let base = line("t");
        let fiber = line("x");
        let f = parse("x", fiber.coords()).unwrap();
        assert!(WarpedProduct::build(base, fiber, f).is_err());
    }

    #[test]
    fn hyperbolic3_is_engine_einstein() {
        let wp = hyperbolic3();
        let at = wp.at(None, &[0.2, 0.5, -0.4]).unwrap();
        // Engine convention mirrors the textbook sign: Ric = +2g here.
        let expect = at.ambient_metric().g.scale(2.0);
        assert!(at.ambient_ricci().max_abs_diff(&expect) < 1e-9);
        assert!((at.ambient_scalar() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn sine_warped_circle_is_round_sphere() {
        let wp = sine_sphere();
        for t in [0.4, 1.1, 2.2] {
            let at = wp.at(None, &[t, 0.8]).unwrap();
            assert!((at.ambient_scalar() + 2.0).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn mixed_metric_block_is_exactly_zero() {
        let wp = hyperbolic3();
        assert_eq!(mixed_block_max_abs(&wp, &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn lift_is_structural() {
        let wp = hyperbolic3();
        let zero = PlacedField::new(Placement::Fiber, VectorField::zero(wp.fiber()));
        assert!(wp.lift(&zero).is_zero());
        let dt = PlacedVector::base(vec![1.0]);
        assert_eq!(wp.lift_vector(&dt), vec![1.0, 0.0, 0.0]);
        let dv = PlacedVector::fiber(vec![2.0, 3.0]);
        assert_eq!(wp.lift_vector(&dv), vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn warping_must_stay_positive_at_samples() {
        let wp = sine_sphere();
        assert!(wp.at(None, &[-0.1, 0.5]).is_err());
    }

    #[test]
    fn base_family_zero_cases() {
        let (wp, p) = hyperbolic2_with_base_p();
        let at = wp.at(Some(&p), &[0.3, 0.9]).unwrap();
        let x = PlacedVector::base(vec![1.0]);
        let y = PlacedVector::base(vec![-0.4]);
        let v = PlacedVector::fiber(vec![0.7]);
        let w = PlacedVector::fiber(vec![1.3]);
        let chk = at
            .curvature_case_check(CurvatureCase::B3a, &[x.clone(), y, v.clone()])
            .unwrap();
        assert!(chk.scaled_error < 1e-12);
        let chk = at.curvature_case_check(CurvatureCase::B3b, &[v, w, x]).unwrap();
        assert!(chk.scaled_error < 1e-12);
    }

    #[test]
    fn hyperbolic3_case_b2_value_at_origin() {
        // With P = ∂t on the base of the e^t-warp, the B2 coefficient
        // -(H^f(∂t,∂t)/f + g(∂t,∇_∂t P) - π(∂t)²) = -(1 + 0 - 1) = 0.
        let wp = hyperbolic3();
        let p = PlacedField::new(Placement::Base, VectorField::coordinate(wp.base(), 0));
        let at = wp.at(Some(&p), &[0.0, 0.3, 0.6]).unwrap();
        let v = PlacedVector::fiber(vec![1.0, 0.0]);
        let x = PlacedVector::base(vec![1.0]);
        let rhs = at
            .curvature_rhs(CurvatureCase::B2, &[v.clone(), x.clone(), x.clone()])
            .unwrap();
        assert!(crate::tensor::max_abs(&rhs) < 1e-13);
        let chk = at.curvature_case_check(CurvatureCase::B2, &[v, x.clone(), x]).unwrap();
        assert!(chk.scaled_error < 1e-12);
    }

    #[test]
    fn hyperbolic2_scalar_decomposition_gives_two() {
        let (wp, p) = hyperbolic2_with_base_p();
        for t in [-0.5, 0.0, 0.8] {
            let at = wp.at(Some(&p), &[t, 0.4]).unwrap();
            let chk = at.scalar_check().unwrap();
            assert!((chk.lhs - 2.0).abs() < 1e-10, "direct S̄ at t={t}: {}", chk.lhs);
            assert!((chk.rhs - 2.0).abs() < 1e-10, "decomposed S̄ at t={t}: {}", chk.rhs);
            assert!(chk.scaled_error < 1e-11);
        }
    }

    #[test]
    fn fiber_generator_ricci_asymmetry_fixture() {
        // Base (R, dt²), fiber (R, dx²), f = e^t, P = ∂x on the fiber:
        // Ric̄(∂t,∂x) = (n̄-1) π(∂x) (∂t f)/f = e^{2t}, and the transposed
        // order flips the sign.
        let base = line("t");
        let fiber = line("x");
        let f = parse("exp(t)", base.coords()).unwrap();
        let wp = WarpedProduct::build(base, fiber, f).unwrap();
        let p = PlacedField::new(Placement::Fiber, VectorField::coordinate(wp.fiber(), 0));
        for t in [-0.3, 0.0, 0.6] {
            let at = wp.at(Some(&p), &[t, 0.2]).unwrap();
            let x = PlacedVector::base(vec![1.0]);
            let v = PlacedVector::fiber(vec![1.0]);
            let expect = (2.0 * t).exp();
            let xv = at.ricci_case_check(RicciCase::F2, &[x.clone(), v.clone()]).unwrap();
            assert!((xv.lhs - expect).abs() < 1e-10, "t={t}: {}", xv.lhs);
            assert!(xv.scaled_error < 1e-12);
            let vx = at.ricci_case_check(RicciCase::F3, &[v, x]).unwrap();
            assert!((vx.lhs + expect).abs() < 1e-10);
            assert!(vx.scaled_error < 1e-12);
        }
    }

    #[test]
    fn placement_mismatch_is_an_error() {
        let (wp, p) = hyperbolic2_with_base_p();
        let at = wp.at(Some(&p), &[0.1, 0.1]).unwrap();
        let x = PlacedVector::base(vec![1.0]);
        let v = PlacedVector::fiber(vec![1.0]);
        // F-family case with a base-placed generator.
        assert!(at.ricci_rhs(RicciCase::F2, &[x.clone(), v.clone()]).is_err());
        // Wrong slot placement.
        assert!(at.ricci_rhs(RicciCase::B1, &[x, v]).is_err());
    }
}

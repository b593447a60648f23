//! Quasi-Einstein and generalized quasi-Einstein structure over warped
//! products: defect tensors, least-squares parameter fitting, the
//! α-constancy diagnostics, conditional replay of the Ricci/scalar
//! propositions, and the Δ_B f = c₀ f bookkeeping extracted from the
//! obstruction arguments.
//!
//! A structure `Ric̄ = a g + b A⊗A (+ c B⊗B)` is checked through its defect
//! `D = Ric̄ - a g - b Â⊗Â - c B̂⊗B̂` with pointwise-normalized unit
//! generators. The proposition checks are conditional identities: each
//! printed equation's residual must stay below `n̄² · max|D| + tol`, which is
//! unconditional on arbitrary manifolds and tight on exact structures.

use crate::expr::Expression;
use crate::geometry::{ChartManifold, GeomError, MetricJet, VectorField};
use crate::sample::SampleRng;
use crate::scalar::Real;
use crate::tensor::Matrix;
use crate::warped::{PlacedField, PlacedVector, Placement, WarpedPoint, WarpedProduct};

/// Quasi-Einstein (`c = 0`, no second generator) or generalized
/// quasi-Einstein coefficients with their unit generator placements.
#[derive(Clone, Debug)]
pub struct QEStructure<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub u1: PlacedField<T>,
    pub u2: Option<PlacedField<T>>,
}

impl<T: Real> QEStructure<T> {
    pub fn quasi(a: T, b: T, u1: PlacedField<T>) -> Self {
        QEStructure { a, b, c: T::zero(), u1, u2: None }
    }

    pub fn generalized(a: T, b: T, c: T, u1: PlacedField<T>, u2: PlacedField<T>) -> Self {
        QEStructure { a, b, c, u1, u2: Some(u2) }
    }

    pub fn is_generalized(&self) -> bool {
        self.u2.is_some()
    }
}

/// Pointwise defect matrices `D = Ric̄ - a g - b Â⊗Â - c B̂⊗B̂` and their
/// max-abs summary over the samples.
#[derive(Clone, Debug)]
pub struct DefectTensor<T> {
    pub matrices: Vec<Matrix<T>>,
    pub max_abs: T,
}

/// Threshold below which |g(U,U)| makes a generator unusable.
pub const NULL_GENERATOR_EPS: f64 = 1e-10;
/// Tolerance on |g(U1,U2)| after normalization.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Normalize a generator at a point: divide by sqrt|g(U,U)|, remembering the
/// sign of g(U,U) so a flip across samples can be reported.
fn normalize_at<T: Real>(
    mj: &MetricJet<T>,
    values: Vec<T>,
    label: &str,
    point: &[T],
    expected_sign: &mut Option<i8>,
) -> Result<Vec<T>, GeomError> {
    let q = mj.g.bilinear(&values, &values);
    if q.abs() <= T::of(NULL_GENERATOR_EPS) {
        return Err(GeomError::Generator {
            what: format!(
                "{label} has |g(U,U)| = {:e} at {} (too close to null)",
                q,
                crate::geometry::point_label(point)
            ),
        });
    }
    let sign = if q > T::zero() { 1i8 } else { -1i8 };
    match expected_sign {
        Some(s) if *s != sign => {
            return Err(GeomError::Generator {
                what: format!("{label}: g(U,U) changes sign across samples"),
            })
        }
        Some(_) => {}
        None => *expected_sign = Some(sign),
    }
    let norm = q.abs().sqrt();
    Ok(values.iter().map(|&v| v / norm).collect())
}

/// Generators resolved to ambient fields on a chart.
struct AmbientGenerators<T> {
    u1: VectorField<T>,
    u2: Option<VectorField<T>>,
}

fn resolve_generators<T: Real>(
    wp: &WarpedProduct<T>,
    qe_u1: &PlacedField<T>,
    qe_u2: Option<&PlacedField<T>>,
) -> AmbientGenerators<T> {
    AmbientGenerators {
        u1: wp.lift(qe_u1),
        u2: qe_u2.map(|u| wp.lift(u)),
    }
}

/// Unit generators at one point (ambient components).
struct UnitGenerators<T> {
    u1: Vec<T>,
    u2: Option<Vec<T>>,
}

struct GeneratorTracker {
    sign1: Option<i8>,
    sign2: Option<i8>,
}

impl GeneratorTracker {
    fn new() -> Self {
        GeneratorTracker { sign1: None, sign2: None }
    }

    fn unit_at<T: Real>(
        &mut self,
        mj: &MetricJet<T>,
        gens: &AmbientGenerators<T>,
        point: &[T],
    ) -> Result<UnitGenerators<T>, GeomError> {
        let u1 = normalize_at(mj, gens.u1.values(point)?, "generator U1", point, &mut self.sign1)?;
        let u2 = match &gens.u2 {
            Some(field) => {
                let u2 =
                    normalize_at(mj, field.values(point)?, "generator U2", point, &mut self.sign2)?;
                let inner = mj.g.bilinear(&u1, &u2);
                if inner.abs() > T::of(ORTHOGONALITY_TOL) {
                    return Err(GeomError::Generator {
                        what: format!(
                            "generators not orthogonal at {}: g(U1,U2) = {:e}",
                            crate::geometry::point_label(point),
                            inner
                        ),
                    });
                }
                Some(u2)
            }
            None => None,
        };
        Ok(UnitGenerators { u1, u2 })
    }
}

/// D = Ric̄ - a g - b Â⊗Â - c B̂⊗B̂ at one point from resolved data.
fn defect_matrix<T: Real>(
    mj: &MetricJet<T>,
    ric: &Matrix<T>,
    units: &UnitGenerators<T>,
    a: T,
    b: T,
    c: T,
) -> Matrix<T> {
    let n = mj.dim();
    let a1 = mj.g.mul_vec(&units.u1);
    let a2 = units.u2.as_ref().map(|u| mj.g.mul_vec(u));
    Matrix::from_fn(n, |i, j| {
        let mut d = ric.get(i, j) - a * mj.g.get(i, j) - b * a1[i] * a1[j];
        if let Some(a2) = &a2 {
            d -= c * a2[i] * a2[j];
        }
        d
    })
}

/// Defect of a (generalized) quasi-Einstein hypothesis on a warped product
/// carrying the semi-symmetric connection of `p` (Levi-Civita when absent).
pub fn defect<T: Real>(
    wp: &WarpedProduct<T>,
    p: Option<&PlacedField<T>>,
    qe: &QEStructure<T>,
    points: &[Vec<T>],
) -> Result<DefectTensor<T>, GeomError> {
    let gens = resolve_generators(wp, &qe.u1, qe.u2.as_ref());
    let mut tracker = GeneratorTracker::new();
    let mut matrices = Vec::with_capacity(points.len());
    let mut max_abs = T::zero();
    for point in points {
        let at = wp.at(p, point)?;
        let units = tracker.unit_at(at.ambient_metric(), &gens, point)?;
        let d = defect_matrix(at.ambient_metric(), at.ambient_ricci(), &units, qe.a, qe.b, qe.c);
        max_abs = max_abs.max(d.max_abs());
        matrices.push(d);
    }
    Ok(DefectTensor { matrices, max_abs })
}

/// Least-squares fit of the structure coefficients.
#[derive(Clone, Debug)]
pub struct FitResult<T> {
    pub a: T,
    pub b: T,
    /// Present exactly when two generators were supplied.
    pub c: Option<T>,
    /// max-abs defect at the fitted coefficients
    pub residual: T,
    /// least-squares objective Σ ‖D‖²_F at the fitted coefficients
    pub objective: T,
}

/// Fit `(a, b[, c])` minimizing `Σ_points ‖Ric̄ - a g - b Â⊗Â - c B̂⊗B̂‖²_F`
/// by the normal equations. Deterministic; errors when the normal equations
/// are rank-deficient (e.g. Â⊗Â proportional to g on the samples).
pub fn fit<T: Real>(
    wp: &WarpedProduct<T>,
    p: Option<&PlacedField<T>>,
    generators: &[PlacedField<T>],
    points: &[Vec<T>],
) -> Result<FitResult<T>, GeomError> {
    if generators.is_empty() || generators.len() > 2 {
        return Err(GeomError::Generator {
            what: format!("fit needs one or two generators, got {}", generators.len()),
        });
    }
    if points.len() < 2 {
        return Err(GeomError::IllPosedFit {
            why: format!("need at least 2 sample points, got {}", points.len()),
        });
    }
    let gens = resolve_generators(wp, &generators[0], generators.get(1));
    let k = 1 + generators.len();
    let mut tracker = GeneratorTracker::new();

    // Basis matrices per point: [g, Â⊗Â, (B̂⊗B̂)]; accumulate the Gram matrix
    // and right-hand side of the normal equations.
    let mut gram = Matrix::<T>::zeros(k);
    let mut rhs = vec![T::zero(); k];
    let mut cached: Vec<(Vec<Matrix<T>>, Matrix<T>)> = Vec::with_capacity(points.len());
    for point in points {
        let at = wp.at(p, point)?;
        let mj = at.ambient_metric();
        let units = tracker.unit_at(mj, &gens, point)?;
        let n = mj.dim();
        let a1 = mj.g.mul_vec(&units.u1);
        let mut basis = vec![mj.g.clone(), Matrix::from_fn(n, |i, j| a1[i] * a1[j])];
        if let Some(u2) = &units.u2 {
            let a2 = mj.g.mul_vec(u2);
            basis.push(Matrix::from_fn(n, |i, j| a2[i] * a2[j]));
        }
        let ric = at.ambient_ricci().clone();
        for r in 0..k {
            for s in 0..k {
                let mut acc = gram.get(r, s);
                for i in 0..n {
                    for j in 0..n {
                        acc += basis[r].get(i, j) * basis[s].get(i, j);
                    }
                }
                gram.set(r, s, acc);
            }
            let mut acc = rhs[r];
            for i in 0..n {
                for j in 0..n {
                    acc += basis[r].get(i, j) * ric.get(i, j);
                }
            }
            rhs[r] = acc;
        }
        cached.push((basis, ric));
    }

    let det = gram.det();
    let mut diag_scale = T::one();
    for r in 0..k {
        diag_scale *= gram.get(r, r).max(T::of(1e-30));
    }
    if det.abs() <= T::of(1e-10) * diag_scale {
        return Err(GeomError::IllPosedFit {
            why: format!("normal equations rank-deficient (det = {det:e})"),
        });
    }
    let inv = gram.inverse().ok_or_else(|| GeomError::IllPosedFit {
        why: "normal equations singular".into(),
    })?;
    let params = inv.mul_vec(&rhs);

    let mut residual = T::zero();
    let mut objective = T::zero();
    for (basis, ric) in &cached {
        let n = ric.dim();
        let d = Matrix::from_fn(n, |i, j| {
            let mut v = ric.get(i, j);
            for (r, m) in basis.iter().enumerate() {
                v -= params[r] * m.get(i, j);
            }
            v
        });
        residual = residual.max(d.max_abs());
        for i in 0..n {
            for j in 0..n {
                objective += d.get(i, j) * d.get(i, j);
            }
        }
    }
    Ok(FitResult {
        a: params[0],
        b: params[1],
        c: params.get(2).copied(),
        residual,
        objective,
    })
}

/// The least-squares objective at explicitly given coefficients (property
/// tests compare this against the fitted optimum).
pub fn fit_objective<T: Real>(
    wp: &WarpedProduct<T>,
    p: Option<&PlacedField<T>>,
    qe: &QEStructure<T>,
    points: &[Vec<T>],
) -> Result<T, GeomError> {
    let d = defect(wp, p, qe, points)?;
    let mut acc = T::zero();
    for m in &d.matrices {
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                acc += m.get(i, j) * m.get(i, j);
            }
        }
    }
    Ok(acc)
}

/// Which α-constant bracket to evaluate. The first/third include the
/// `(1-n̄) f Pf` term (base-placed generator); the second/fourth omit it
/// (fiber-placed generator). Third and fourth are the generalized-structure
/// labels of the same brackets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaKind {
    Alpha1,
    Alpha2,
    Alpha3,
    Alpha4,
}

impl AlphaKind {
    pub fn includes_pf_term(self) -> bool {
        matches!(self, AlphaKind::Alpha1 | AlphaKind::Alpha3)
    }

    pub fn label(self) -> &'static str {
        match self {
            AlphaKind::Alpha1 => "alpha1",
            AlphaKind::Alpha2 => "alpha2",
            AlphaKind::Alpha3 => "alpha3",
            AlphaKind::Alpha4 => "alpha4",
        }
    }
}

/// Samples of the α bracket `f Δ_B f + (1-n₂)|grad_B f|² [+ (1-n̄) f Pf]
/// + a f²` over base points, with the spread `max - min`.
#[derive(Clone, Debug)]
pub struct AlphaConstant<T> {
    pub kind: AlphaKind,
    pub samples: Vec<(Vec<T>, T)>,
    pub spread: T,
}

pub fn alpha_check<T: Real>(
    wp: &WarpedProduct<T>,
    p: Option<&PlacedField<T>>,
    kind: AlphaKind,
    a: T,
    base_points: &[Vec<T>],
) -> Result<AlphaConstant<T>, GeomError> {
    if let Some(pf) = p {
        let want = if kind.includes_pf_term() { Placement::Base } else { Placement::Fiber };
        if pf.placement() != want {
            return Err(GeomError::PlacementMismatch {
                what: format!(
                    "{} expects a {want}-placed generator, found {}-placed",
                    kind.label(),
                    pf.placement()
                ),
            });
        }
    }
    let n2 = T::of_usize(wp.fiber_dim());
    let nbar = T::of_usize(wp.dim());
    let base_p = match p {
        Some(pf) if pf.placement() == Placement::Base => Some(pf.field()),
        _ => None,
    };
    let mut samples = Vec::with_capacity(base_points.len());
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for bp in base_points {
        let f = wp.warping().eval(bp)?;
        let calc = crate::geometry::scalar_calculus(wp.base(), wp.warping(), base_p, bp)?;
        let mut alpha = f * calc.laplacian + (T::one() - n2) * calc.grad_norm2 + a * f * f;
        if kind.includes_pf_term() {
            alpha += (T::one() - nbar) * f * calc.p_f;
        }
        lo = lo.min(alpha);
        hi = hi.max(alpha);
        samples.push((bp.clone(), alpha));
    }
    Ok(AlphaConstant { kind, samples, spread: hi - lo })
}

/// Proposition families: Ricci-level or scalar-level equations, for the
/// plain or generalized structure. The exact printed variant is selected by
/// the placements carried in the structure and the generator field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropositionId {
    QuasiRicci,
    QuasiScalar,
    GeneralizedRicci,
    GeneralizedScalar,
}

impl PropositionId {
    pub fn label(self) -> &'static str {
        match self {
            PropositionId::QuasiRicci => "quasi-ricci",
            PropositionId::QuasiScalar => "quasi-scalar",
            PropositionId::GeneralizedRicci => "generalized-ricci",
            PropositionId::GeneralizedScalar => "generalized-scalar",
        }
    }

    fn is_generalized(self) -> bool {
        matches!(self, PropositionId::GeneralizedRicci | PropositionId::GeneralizedScalar)
    }

    fn is_scalar(self) -> bool {
        matches!(self, PropositionId::QuasiScalar | PropositionId::GeneralizedScalar)
    }
}

#[derive(Clone, Debug)]
pub struct EquationReport<T> {
    pub label: String,
    pub max_residual: T,
}

/// Conditional-identity report: every printed equation of the proposition,
/// the defect it is conditioned on, and the bound `n̄² · defect + tol`.
#[derive(Clone, Debug)]
pub struct PropositionReport<T> {
    pub equations: Vec<EquationReport<T>>,
    pub defect_max: T,
    pub bound: T,
    pub max_residual: T,
    pub pass: bool,
}

fn placement_coefficients<T: Real>(qe: &QEStructure<T>) -> (T, T) {
    // Sum of coefficients of base-placed and fiber-placed generators.
    let mut base = T::zero();
    let mut fiber = T::zero();
    match qe.u1.placement() {
        Placement::Base => base += qe.b,
        Placement::Fiber => fiber += qe.b,
    }
    if let Some(u2) = &qe.u2 {
        match u2.placement() {
            Placement::Base => base += qe.c,
            Placement::Fiber => fiber += qe.c,
        }
    }
    (base, fiber)
}

fn validate_proposition<T: Real>(
    prop: PropositionId,
    qe: &QEStructure<T>,
) -> Result<(), GeomError> {
    if prop.is_generalized() != qe.is_generalized() {
        return Err(GeomError::PlacementMismatch {
            what: format!(
                "{} needs {} structure, got {}",
                prop.label(),
                if prop.is_generalized() { "a generalized (two-generator)" } else { "a plain (one-generator)" },
                if qe.is_generalized() { "two generators" } else { "one generator" }
            ),
        });
    }
    if let Some(u2) = &qe.u2 {
        // Printed variants: (base, base), (fiber, fiber), (base, fiber).
        if qe.u1.placement() == Placement::Fiber && u2.placement() == Placement::Base {
            return Err(GeomError::PlacementMismatch {
                what: "generalized structure placements must be one of (base,base), \
                       (fiber,fiber), (base,fiber)"
                    .into(),
            });
        }
    }
    Ok(())
}

/// Replay the printed equations of a proposition over the sample points,
/// with random slot vectors for the Ricci-level families. `tol` is the
/// additive slack of the conditional contract.
pub fn proposition_check<T: Real>(
    wp: &WarpedProduct<T>,
    p: Option<&PlacedField<T>>,
    prop: PropositionId,
    qe: &QEStructure<T>,
    points: &[Vec<T>],
    rng: &mut SampleRng,
    tol: T,
) -> Result<PropositionReport<T>, GeomError> {
    validate_proposition(prop, qe)?;
    let gens = resolve_generators(wp, &qe.u1, qe.u2.as_ref());
    let mut tracker = GeneratorTracker::new();
    let n1 = wp.base_dim();
    let n2 = wp.fiber_dim();
    let nbar_usize = wp.dim();
    let nbar = T::of_usize(nbar_usize);
    let n1_s = T::of_usize(n1);
    let n2_s = T::of_usize(n2);
    let (b_base, b_fiber) = placement_coefficients(qe);
    let p_placement = p.map(|pf| pf.placement()).unwrap_or(Placement::Base);

    let mut defect_max = T::zero();
    let mut eq_residuals: Vec<(String, T)> = if prop.is_scalar() {
        vec![
            ("ambient scalar".into(), T::zero()),
            ("base scalar".into(), T::zero()),
            ("fiber scalar".into(), T::zero()),
        ]
    } else {
        vec![
            ("base ricci".into(), T::zero()),
            ("fiber ricci".into(), T::zero()),
        ]
    };

    for point in points {
        let at = wp.at(p, point)?;
        let mj = at.ambient_metric();
        let units = tracker.unit_at(mj, &gens, point)?;
        let d = defect_matrix(mj, at.ambient_ricci(), &units, qe.a, qe.b, qe.c);
        defect_max = defect_max.max(d.max_abs());

        let f = at.f_value();
        let calc = at.f_calculus();
        // Split the normalized generators back onto their factors.
        let u1_parts = split_units(wp, &units.u1);
        let u2_parts = units.u2.as_ref().map(|u| split_units(wp, u));

        if prop.is_scalar() {
            // Equation 1: ambient scalar = n̄ a + b (+ c).
            let lhs1 = at.ambient_scalar();
            let rhs1 = nbar * qe.a + qe.b + if qe.is_generalized() { qe.c } else { T::zero() };
            eq_residuals[0].1 = eq_residuals[0].1.max((lhs1 - rhs1).abs());

            // Equation 2: base scalar.
            let lhs2 = at.base_scalar();
            let mut rhs2 = n1_s * qe.a + n2_s * calc.laplacian / f + b_base;
            if p_placement == Placement::Base {
                rhs2 += -n2_s * at.base_divergence_of_p()? + n2_s * at.pi_of_p();
            }
            eq_residuals[1].1 = eq_residuals[1].1.max((lhs2 - rhs2).abs());

            // Equation 3: fiber scalar.
            let lhs3 = at.fiber_scalar();
            let mut bracket =
                f * calc.laplacian + (T::one() - n2_s) * calc.grad_norm2 + qe.a * f * f;
            if p_placement == Placement::Base {
                bracket += (T::one() - nbar) * f * calc.p_f;
            }
            let mut rhs3 = n2_s * bracket + b_fiber * f * f;
            if p_placement == Placement::Fiber {
                rhs3 += (T::one() - nbar) * at.fiber_divergence_of_p()?
                    + (nbar - T::one()) * at.pi_of_p();
            }
            // The printed fiber equation divides by nothing further; note
            // the divergence term for a fiber generator carries (n̄-1).
            eq_residuals[2].1 = eq_residuals[2].1.max((lhs3 - rhs3).abs());
        } else {
            // Ricci-level equations with random slot vectors.
            let x: Vec<T> = (0..n1).map(|_| rng.symmetric(T::one())).collect();
            let y: Vec<T> = (0..n1).map(|_| rng.symmetric(T::one())).collect();
            let v: Vec<T> = (0..n2).map(|_| rng.symmetric(T::one())).collect();
            let w: Vec<T> = (0..n2).map(|_| rng.symmetric(T::one())).collect();

            // Base equation.
            let lhs_b = at.base_ricci().bilinear(&x, &y);
            let mut rhs_b = qe.a * at.base_metric().g.bilinear(&x, &y)
                - n2_s * base_bracket(&at, &x, &y, f);
            rhs_b += generator_term_base(&at, qe.b, &u1_parts, qe.u1.placement(), &x, &y);
            if let (Some(u2), Some(parts)) = (&qe.u2, &u2_parts) {
                rhs_b += generator_term_base(&at, qe.c, parts, u2.placement(), &x, &y);
            }
            eq_residuals[0].1 = eq_residuals[0].1.max((lhs_b - rhs_b).abs());

            // Fiber equation.
            let lhs_f = at.fiber_ricci().bilinear(&v, &w);
            let mut bracket =
                f * calc.laplacian + (T::one() - n2_s) * calc.grad_norm2 + qe.a * f * f;
            if p_placement == Placement::Base {
                bracket += (T::one() - nbar) * f * calc.p_f;
            }
            let gf_vw = at.fiber_metric().g.bilinear(&v, &w);
            let mut rhs_f = gf_vw * bracket;
            if p_placement == Placement::Fiber {
                let v_amb = wp.lift_vector(&PlacedVector::fiber(v.clone()));
                let w_amb = wp.lift_vector(&PlacedVector::fiber(w.clone()));
                let grad_v_p = at.ambient_grad_p(&v_amb);
                rhs_f += (T::one() - nbar) * mj.g.bilinear(&w_amb, &grad_v_p)
                    + (nbar - T::one()) * at.pi(&v_amb) * at.pi(&w_amb);
            }
            rhs_f += generator_term_fiber(&at, qe.b, &u1_parts, qe.u1.placement(), &v, &w, f);
            if let (Some(u2), Some(parts)) = (&qe.u2, &u2_parts) {
                rhs_f += generator_term_fiber(&at, qe.c, parts, u2.placement(), &v, &w, f);
            }
            eq_residuals[1].1 = eq_residuals[1].1.max((lhs_f - rhs_f).abs());
        }
    }

    let bound = T::of_usize(nbar_usize * nbar_usize) * defect_max + tol;
    let max_residual = eq_residuals
        .iter()
        .fold(T::zero(), |m, (_, r)| m.max(*r));
    Ok(PropositionReport {
        equations: eq_residuals
            .into_iter()
            .map(|(label, max_residual)| EquationReport { label, max_residual })
            .collect(),
        defect_max,
        bound,
        max_residual,
        pass: max_residual <= bound,
    })
}

/// Factor components of a normalized ambient generator.
struct UnitParts<T> {
    base: Vec<T>,
    fiber: Vec<T>,
}

fn split_units<T: Real>(wp: &WarpedProduct<T>, u: &[T]) -> UnitParts<T> {
    let (b, f) = u.split_at(wp.base_dim());
    UnitParts { base: b.to_vec(), fiber: f.to_vec() }
}

/// n₂-bracket of the base Ricci equations: H^f(X,Y)/f plus, for a
/// base-placed generator, g(Y,∇_X P) - π(X)π(Y) (those vanish otherwise).
fn base_bracket<T: Real>(at: &WarpedPoint<'_, T>, x: &[T], y: &[T], f: T) -> T {
    let calc = at.f_calculus();
    calc.hessian.bilinear(x, y) / f + at.base_grad_p_pairing(x, y) - at.pi_base_pair(x, y)
}

fn generator_term_base<T: Real>(
    at: &WarpedPoint<'_, T>,
    coef: T,
    parts: &UnitParts<T>,
    placement: Placement,
    x: &[T],
    y: &[T],
) -> T {
    if placement != Placement::Base || coef == T::zero() {
        return T::zero();
    }
    let gb = &at.base_metric().g;
    coef * gb.bilinear(x, &parts.base) * gb.bilinear(y, &parts.base)
}

fn generator_term_fiber<T: Real>(
    at: &WarpedPoint<'_, T>,
    coef: T,
    parts: &UnitParts<T>,
    placement: Placement,
    v: &[T],
    w: &[T],
    f: T,
) -> T {
    if placement != Placement::Fiber || coef == T::zero() {
        return T::zero();
    }
    let gf = &at.fiber_metric().g;
    let f4 = f * f * f * f;
    coef * f4 * gf.bilinear(v, &parts.fiber) * gf.bilinear(w, &parts.fiber)
}

/// Bookkeeping of the `Δ_B f = c₀ f` step in the one-dimensional-base
/// obstruction arguments: check the pointwise-checkable hypotheses, compute
/// c₀ from the printed coefficient formula for the placement pattern, and
/// report `max |Δ_B f - c₀ f|`. The constancy conclusion for `f` is never
/// asserted.
#[derive(Clone, Debug)]
pub struct TheoremReport<T> {
    pub applicable: bool,
    pub notes: Vec<String>,
    pub c0: Option<T>,
    pub max_residual: Option<T>,
}

/// Spread tolerance for the div_B P / π(P) constancy hypotheses.
pub const CONSTANCY_TOL: f64 = 1e-8;

pub fn theorem_bookkeeping<T: Real>(
    wp: &WarpedProduct<T>,
    p: Option<&PlacedField<T>>,
    qe: &QEStructure<T>,
    points: &[Vec<T>],
) -> Result<TheoremReport<T>, GeomError> {
    let mut notes = Vec::new();
    if wp.base_dim() != 1 {
        notes.push(format!("needs a one-dimensional base, found {}", wp.base_dim()));
        return Ok(TheoremReport { applicable: false, notes, c0: None, max_residual: None });
    }
    let p_placement = p.map(|pf| pf.placement()).unwrap_or(Placement::Base);
    let n2 = T::of_usize(wp.fiber_dim());

    // For a base-placed generator, div_B P and π(P) must be constant.
    let mut c1c2 = T::zero();
    if p_placement == Placement::Base {
        let mut div_lo = T::infinity();
        let mut div_hi = T::neg_infinity();
        let mut pi_lo = T::infinity();
        let mut pi_hi = T::neg_infinity();
        let mut first = None;
        for point in points {
            let at = wp.at(p, point)?;
            let div = at.base_divergence_of_p()?;
            let pi = at.pi_of_p();
            div_lo = div_lo.min(div);
            div_hi = div_hi.max(div);
            pi_lo = pi_lo.min(pi);
            pi_hi = pi_hi.max(pi);
            if first.is_none() {
                first = Some((div, pi));
            }
        }
        let tol = T::of(CONSTANCY_TOL);
        if div_hi - div_lo > tol {
            notes.push(format!(
                "div_B P is not constant across samples (spread {:e})",
                div_hi - div_lo
            ));
        }
        if pi_hi - pi_lo > tol {
            notes.push(format!(
                "π(P) is not constant across samples (spread {:e})",
                pi_hi - pi_lo
            ));
        }
        if !notes.is_empty() {
            return Ok(TheoremReport { applicable: false, notes, c0: None, max_residual: None });
        }
        let (c1, c2) = first.unwrap_or((T::zero(), T::zero()));
        c1c2 = c1 - c2;
    }

    // Coefficient sum of base-placed generators enters c₀.
    let (b_base, _) = placement_coefficients(qe);
    let c0 = c1c2 - (qe.a + b_base) / n2;

    let mut max_residual = T::zero();
    for point in points {
        let at = wp.at(p, point)?;
        let calc = at.f_calculus();
        max_residual = max_residual.max((calc.laplacian - c0 * at.f_value()).abs());
    }
    Ok(TheoremReport {
        applicable: true,
        notes,
        c0: Some(c0),
        max_residual: Some(max_residual),
    })
}

/// Pointwise orthogonalization of one generator against another at the
/// expression level: `U2' = U2 - (g(U1,U2)/g(U1,U1)) U1` on the factor
/// chart; used to build valid two-generator structures over random
/// products. `U1` must be non-null on the sampling box.
pub fn orthogonalize_generator<T: Real>(
    chart: &ChartManifold<T>,
    u1: &VectorField<T>,
    u2: &VectorField<T>,
) -> VectorField<T> {
    let n = chart.dim();
    let inner = |a: &VectorField<T>, b: &VectorField<T>| {
        let mut acc = Expression::constant(chart.coords().clone(), T::zero());
        for i in 0..n {
            for j in 0..n {
                let term = chart
                    .metric_entry(i, j)
                    .mul(&a.components()[i])
                    .mul(&b.components()[j]);
                acc = acc.add(&term);
            }
        }
        acc
    };
    let ratio = inner(u1, u2).div(&inner(u1, u1));
    let components = (0..n)
        .map(|k| u2.components()[k].sub(&ratio.mul(&u1.components()[k])))
        .collect();
    VectorField::new(chart, components).expect("component count preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coords_of, parse};
    use crate::geometry::ChartManifold;

    fn line(name: &str) -> ChartManifold<f64> {
        let c = coords_of(&[name]);
        ChartManifold::diagonal(c.clone(), vec![parse("1", &c).unwrap()], vec![1]).unwrap()
    }

    fn sphere2() -> ChartManifold<f64> {
        let c = coords_of(&["th", "ph"]);
        ChartManifold::diagonal(
            c.clone(),
            vec![parse("1", &c).unwrap(), parse("sin(th)^2", &c).unwrap()],
            vec![1, 1],
        )
        .unwrap()
    }

    fn r_cross_s2() -> WarpedProduct<f64> {
        let base = line("t");
        let f = parse("1", base.coords()).unwrap();
        WarpedProduct::build(base, sphere2(), f).unwrap()
    }

    fn hyperbolic3() -> WarpedProduct<f64> {
        let base = line("t");
        let fiber = {
            let c = coords_of(&["x", "y"]);
            let one = parse("1", &c).unwrap();
            ChartManifold::diagonal(c, vec![one.clone(), one], vec![1, 1]).unwrap()
        };
        let f = parse("exp(t)", base.coords()).unwrap();
        WarpedProduct::build(base, fiber, f).unwrap()
    }

    fn sample_points(wp: &WarpedProduct<f64>, n: usize) -> Vec<Vec<f64>> {
        // Stay away from the sphere chart poles.
        let mut rng = SampleRng::seed(11);
        (0..n)
            .map(|_| {
                (0..wp.dim())
                    .map(|k| {
                        if wp.dim() == 3 && k == 1 {
                            rng.range(0.4, std::f64::consts::PI - 0.4)
                        } else {
                            rng.range(-0.9, 0.9)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn u_base(wp: &WarpedProduct<f64>) -> PlacedField<f64> {
        PlacedField::new(Placement::Base, VectorField::coordinate(wp.base(), 0))
    }

    #[test]
    fn product_with_sphere_is_exact_quasi_einstein() {
        // Engine-convention coefficients: Ric = diag(0, -g_sphere) means
        // a = -1, b = +1 with the unit base generator (the textbook-sign
        // pair is (1, -1)).
        let wp = r_cross_s2();
        let points = sample_points(&wp, 6);
        let qe = QEStructure::quasi(-1.0, 1.0, u_base(&wp));
        let d = defect(&wp, None, &qe, &points).unwrap();
        assert!(d.max_abs < 1e-9, "defect {}", d.max_abs);

        // Dropping the generator term leaves exactly the A⊗A deficit.
        let wrong = QEStructure::quasi(-1.0, 0.0, u_base(&wp));
        let d = defect(&wp, None, &wrong, &points).unwrap();
        assert!((d.max_abs - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_recovers_exact_structures() {
        let wp = r_cross_s2();
        let points = sample_points(&wp, 8);
        let fit = fit(&wp, None, &[u_base(&wp)], &points).unwrap();
        assert!((fit.a + 1.0).abs() < 1e-9, "a = {}", fit.a);
        assert!((fit.b - 1.0).abs() < 1e-9, "b = {}", fit.b);
        assert!(fit.residual < 1e-9);

        let h3 = hyperbolic3();
        let points: Vec<Vec<f64>> = {
            let mut rng = SampleRng::seed(5);
            (0..8).map(|_| (0..3).map(|_| rng.symmetric(0.8)).collect()).collect()
        };
        let fit = super::fit(&h3, None, &[u_base(&h3)], &points).unwrap();
        // Engine sign: Ric = +2g on this chart, so (a, b) = (2, 0).
        assert!((fit.a - 2.0).abs() < 1e-8, "a = {}", fit.a);
        assert!(fit.b.abs() < 1e-8, "b = {}", fit.b);
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn flat_product_fits_zero() {
        let base = line("t");
        let fiber = line("x");
        let f = parse("1", base.coords()).unwrap();
        let wp = WarpedProduct::build(base, fiber, f).unwrap();
        let points: Vec<Vec<f64>> = {
            let mut rng = SampleRng::seed(2);
            (0..6).map(|_| (0..2).map(|_| rng.symmetric(0.8)).collect()).collect()
        };
        let fit = super::fit(&wp, None, &[u_base(&wp)], &points).unwrap();
        assert!(fit.a.abs() < 1e-12);
        assert!(fit.b.abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn degenerate_normal_equations_rejected() {
        // On a 1×1 product every symmetric 2-tensor at a point is a multiple
        // of g, and A⊗A with the unit generator equals the base block of g;
        // two generators make the system rank-deficient.
        let base = line("t");
        let fiber = line("x");
        let f = parse("1", base.coords()).unwrap();
        let wp = WarpedProduct::build(base, fiber, f).unwrap();
        let points: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![0.3, -0.4]];
        let gens = vec![u_base(&wp), u_base(&wp)];
        // Same generator twice: not orthogonal, and rank-deficient anyway.
        assert!(super::fit(&wp, None, &gens, &points).is_err());
    }

    #[test]
    fn null_generator_rejected() {
        let wp = r_cross_s2();
        let points = sample_points(&wp, 3);
        let zero_gen = PlacedField::new(Placement::Base, VectorField::zero(wp.base()));
        let qe = QEStructure::quasi(1.0, 0.0, zero_gen);
        let err = defect(&wp, None, &qe, &points).unwrap_err();
        assert!(matches!(err, GeomError::Generator { .. }));
    }

    #[test]
    fn alpha_constant_on_trivial_warp() {
        let wp = r_cross_s2();
        let base_points: Vec<Vec<f64>> = vec![vec![-0.5], vec![0.0], vec![0.7]];
        // f ≡ 1 kills every derivative term, leaving a f² = a.
        let alpha = alpha_check(&wp, None, AlphaKind::Alpha1, -1.0, &base_points).unwrap();
        assert_eq!(alpha.spread, 0.0);
        for (_, v) in &alpha.samples {
            assert_eq!(*v, -1.0);
        }
    }

    #[test]
    fn proposition_scalar_on_exact_structure() {
        let wp = r_cross_s2();
        let points = sample_points(&wp, 6);
        let qe = QEStructure::quasi(-1.0, 1.0, u_base(&wp));
        let mut rng = SampleRng::seed(3);
        let report = proposition_check(
            &wp,
            None,
            PropositionId::QuasiScalar,
            &qe,
            &points,
            &mut rng,
            1e-7,
        )
        .unwrap();
        assert!(report.pass, "residual {} bound {}", report.max_residual, report.bound);
        assert!(report.defect_max < 1e-9);
        // Ambient scalar identity: S̄ = n̄ a + b = -2 exactly here.
        assert!(report.equations[0].max_residual < 1e-9);
    }

    #[test]
    fn proposition_ricci_on_exact_structure() {
        let wp = r_cross_s2();
        let points = sample_points(&wp, 6);
        let qe = QEStructure::quasi(-1.0, 1.0, u_base(&wp));
        let mut rng = SampleRng::seed(4);
        let report = proposition_check(
            &wp,
            None,
            PropositionId::QuasiRicci,
            &qe,
            &points,
            &mut rng,
            1e-7,
        )
        .unwrap();
        assert!(report.pass, "residual {} bound {}", report.max_residual, report.bound);
    }

    #[test]
    fn proposition_structure_mismatch_rejected() {
        let wp = r_cross_s2();
        let qe = QEStructure::quasi(-1.0, 1.0, u_base(&wp));
        let mut rng = SampleRng::seed(4);
        let err = proposition_check(
            &wp,
            None,
            PropositionId::GeneralizedRicci,
            &qe,
            &sample_points(&wp, 2),
            &mut rng,
            1e-7,
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::PlacementMismatch { .. }));
    }

    #[test]
    fn theorem_bookkeeping_on_trivial_warp() {
        // f ≡ 1, base generator, one-dimensional base: Δf = 0 and
        // c₀ = -(a+b)/n₂ = 0 since a + b = 0.
        let wp = r_cross_s2();
        let points = sample_points(&wp, 5);
        let qe = QEStructure::quasi(-1.0, 1.0, u_base(&wp));
        let report = theorem_bookkeeping(&wp, None, &qe, &points).unwrap();
        assert!(report.applicable);
        assert_eq!(report.c0, Some(0.0));
        assert_eq!(report.max_residual, Some(0.0));
    }

    #[test]
    fn theorem_bookkeeping_rejects_wide_base() {
        let base = {
            let c = coords_of(&["s", "t"]);
            let one = parse("1", &c).unwrap();
            ChartManifold::diagonal(c, vec![one.clone(), one], vec![1, 1]).unwrap()
        };
        let fiber = sphere2();
        let f = parse("1", base.coords()).unwrap();
        let wp = WarpedProduct::build(base, fiber, f).unwrap();
        let u = PlacedField::new(Placement::Base, VectorField::coordinate(wp.base(), 0));
        let qe = QEStructure::quasi(0.0, 0.0, u);
        let points = vec![vec![0.1, 0.2, 1.0, 1.0]];
        let report = theorem_bookkeeping(&wp, None, &qe, &points).unwrap();
        assert!(!report.applicable);
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn orthogonalized_generators_pass_the_defect_gate() {
        let wp = r_cross_s2();
        let fiber = wp.fiber();
        let u1 = VectorField::coordinate(fiber, 0);
        // Mix some u1 into u2 so the raw pair is not orthogonal.
        let u2_raw = VectorField::new(
            fiber,
            vec![
                parse("0.3", fiber.coords()).unwrap(),
                parse("1", fiber.coords()).unwrap(),
            ],
        )
        .unwrap();
        let u2 = orthogonalize_generator(fiber, &u1, &u2_raw);
        let qe = QEStructure::generalized(
            -1.0,
            1.0,
            0.0,
            PlacedField::new(Placement::Fiber, u1),
            PlacedField::new(Placement::Fiber, u2),
        );
        let points = sample_points(&wp, 5);
        // b=1 with a fiber generator is not the right structure here, but the
        // generators themselves must normalize and pass orthogonality.
        let d = defect(&wp, None, &qe, &points).unwrap();
        assert!(d.max_abs > 0.0);
    }
}

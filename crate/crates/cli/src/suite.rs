//! Suite orchestration: run the decomposition-identity, connection-law, and
//! quasi-Einstein check families over a manifest at seeded sample points and
//! assemble a deterministic report.

use std::fmt::Write as _;

use warpgeom::einstein::{
    alpha_check, defect, fit, proposition_check, theorem_bookkeeping, AlphaKind, PropositionId,
    QEStructure,
};
use warpgeom::geometry::GeomError;
use warpgeom::sample::SampleRng;
use warpgeom::ssnm::{curvature_relation_check, metric_covariant_derivative, pi_jet, torsion, ConnectionSpec};
use warpgeom::warped::{CurvatureCase, PlacedVector, Placement, RicciCase};

use crate::manifest::Manifest;
use crate::report::{CheckRecord, VerificationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Ssnm,
    Einstein,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        Some(match s {
            "lemmas" => Suite::Lemmas,
            "ssnm" => Suite::Ssnm,
            "einstein" => Suite::Einstein,
            "all" => Suite::All,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Ssnm => "ssnm",
            Suite::Einstein => "einstein",
            Suite::All => "all",
        }
    }

    fn runs_lemmas(self) -> bool {
        matches!(self, Suite::Lemmas | Suite::All)
    }

    fn runs_ssnm(self) -> bool {
        matches!(self, Suite::Ssnm | Suite::All)
    }

    fn runs_einstein(self) -> bool {
        matches!(self, Suite::Einstein | Suite::All)
    }
}

/// Command-line overrides of the manifest's sampling and tolerance fields.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

pub fn engine_version() -> String {
    format!("warpgeom {}", env!("CARGO_PKG_VERSION"))
}

fn placed_vector(rng: &mut SampleRng, m: &Manifest, placement: Placement) -> PlacedVector<f64> {
    let dim = match placement {
        Placement::Base => m.wp.base_dim(),
        Placement::Fiber => m.wp.fiber_dim(),
    };
    PlacedVector {
        placement,
        components: (0..dim).map(|_| rng.symmetric(1.0)).collect(),
    }
}

struct Accumulator {
    id: String,
    label: String,
    samples: usize,
    max_error: f64,
    tolerance: f64,
    note: Option<String>,
}

impl Accumulator {
    fn new(id: impl Into<String>, label: impl Into<String>, tolerance: f64) -> Self {
        Accumulator {
            id: id.into(),
            label: label.into(),
            samples: 0,
            max_error: 0.0,
            tolerance,
            note: None,
        }
    }

    fn record(&mut self, err: f64) {
        self.samples += 1;
        if err > self.max_error {
            self.max_error = err;
        }
    }

    fn fail(&mut self, err: &GeomError) {
        self.max_error = f64::INFINITY;
        if self.note.is_none() {
            self.note = Some(err.to_string());
        }
    }

    fn into_record(self) -> CheckRecord {
        let pass = self.max_error <= self.tolerance;
        CheckRecord {
            id: self.id,
            label: self.label,
            samples: self.samples,
            max_error: self.max_error,
            tolerance: self.tolerance,
            pass,
            note: self.note,
        }
    }
}

/// The generator placements whose identity families apply: the manifest's
/// placement when a generator field is present, both otherwise (the zero
/// field lives in either factor).
fn families(m: &Manifest) -> Vec<Placement> {
    match &m.p {
        Some(p) => vec![p.placement()],
        None => vec![Placement::Base, Placement::Fiber],
    }
}

fn run_lemma_checks(m: &Manifest, points: usize, tol: f64, rng: &mut SampleRng, out: &mut Vec<CheckRecord>) {
    let ambient_box = m.ambient_box();
    for family in families(m) {
        let fam_p = match &m.p {
            Some(p) if p.placement() == family => Some(p),
            _ => None,
        };
        let curv: Vec<CurvatureCase> = CurvatureCase::ALL
            .into_iter()
            .filter(|c| c.family() == family)
            .collect();
        let ricci: Vec<RicciCase> = RicciCase::ALL
            .into_iter()
            .filter(|c| c.family() == family)
            .collect();
        let mut curv_acc: Vec<Accumulator> = curv
            .iter()
            .map(|c| {
                Accumulator::new(
                    format!("lemma.curv.{c}"),
                    format!("curvature decomposition {c} ({family}-placed generator)"),
                    tol,
                )
            })
            .collect();
        let mut ricci_acc: Vec<Accumulator> = ricci
            .iter()
            .map(|c| {
                Accumulator::new(
                    format!("lemma.ricci.{c}"),
                    format!("ricci decomposition {c} ({family}-placed generator)"),
                    tol,
                )
            })
            .collect();
        let fam_letter = match family {
            Placement::Base => "B",
            Placement::Fiber => "F",
        };
        let mut scalar_acc = Accumulator::new(
            format!("lemma.scalar.{fam_letter}"),
            format!("scalar-curvature decomposition ({family}-placed generator)"),
            tol,
        );

        for _ in 0..points {
            let point = ambient_box.sample(rng);
            let at = match m.wp.at(fam_p, &point) {
                Ok(at) => at,
                Err(e) => {
                    for acc in curv_acc.iter_mut().chain(ricci_acc.iter_mut()) {
                        acc.fail(&e);
                    }
                    scalar_acc.fail(&e);
                    continue;
                }
            };
            for (case, acc) in curv.iter().zip(curv_acc.iter_mut()) {
                let slots: Vec<PlacedVector<f64>> = case
                    .slots()
                    .iter()
                    .map(|&pl| placed_vector(rng, m, pl))
                    .collect();
                match at.curvature_case_check(*case, &slots) {
                    Ok(chk) => acc.record(chk.scaled_error),
                    Err(e) => acc.fail(&e),
                }
            }
            for (case, acc) in ricci.iter().zip(ricci_acc.iter_mut()) {
                let slots: Vec<PlacedVector<f64>> = case
                    .slots()
                    .iter()
                    .map(|&pl| placed_vector(rng, m, pl))
                    .collect();
                match at.ricci_case_check(*case, &slots) {
                    Ok(chk) => acc.record(chk.scaled_error),
                    Err(e) => acc.fail(&e),
                }
            }
            match at.scalar_check() {
                Ok(chk) => scalar_acc.record(chk.scaled_error),
                Err(e) => scalar_acc.fail(&e),
            }
        }
        out.extend(curv_acc.into_iter().map(Accumulator::into_record));
        out.extend(ricci_acc.into_iter().map(Accumulator::into_record));
        out.push(scalar_acc.into_record());
    }
}

fn run_ssnm_checks(m: &Manifest, points: usize, tol: f64, rng: &mut SampleRng, out: &mut Vec<CheckRecord>) {
    let ambient = m.wp.ambient();
    let ambient_box = m.ambient_box();
    let dim = m.wp.dim();
    let lifted_p = match &m.p {
        Some(p) => m.wp.lift(p),
        None => warpgeom::geometry::VectorField::zero(ambient),
    };
    let spec = ConnectionSpec::ssnm(lifted_p.clone());

    let mut relation = Accumulator::new(
        "ssnm.curvature-relation",
        "direct curvature vs Levi-Civita reconstruction",
        tol,
    );
    let mut torsion_acc = Accumulator::new(
        "ssnm.torsion",
        "torsion equals the one-form antisymmetrization",
        tol,
    );
    let mut nonmetric = Accumulator::new(
        "ssnm.non-metricity",
        "metric derivative equals -pi(Y)g(X,Z) - pi(Z)g(X,Y)",
        tol,
    );

    for _ in 0..points {
        let point = ambient_box.sample(rng);
        let x: Vec<f64> = (0..dim).map(|_| rng.symmetric(1.0)).collect();
        let y: Vec<f64> = (0..dim).map(|_| rng.symmetric(1.0)).collect();
        let z: Vec<f64> = (0..dim).map(|_| rng.symmetric(1.0)).collect();

        match curvature_relation_check(ambient, &lifted_p, &point, &x, &y, &z) {
            Ok(cmp) => relation.record(cmp.scaled_error),
            Err(e) => relation.fail(&e),
        }

        match (torsion(ambient, &spec, &point, &x, &y), ambient.metric_jet(&point)) {
            (Ok(t), Ok(mj)) => match pi_jet(&mj, &lifted_p, &point) {
                Ok(pi) => {
                    let pi_x: f64 = (0..dim).map(|i| pi.values[i] * x[i]).sum();
                    let pi_y: f64 = (0..dim).map(|i| pi.values[i] * y[i]).sum();
                    let expect: Vec<f64> =
                        (0..dim).map(|k| pi_y * x[k] - pi_x * y[k]).collect();
                    relation_scaled(&t, &expect, &mut torsion_acc);
                }
                Err(e) => torsion_acc.fail(&e),
            },
            (Err(e), _) | (_, Err(e)) => torsion_acc.fail(&e),
        }

        match (
            metric_covariant_derivative(ambient, &spec, &point),
            ambient.metric_jet(&point),
        ) {
            (Ok(nabla_g), Ok(mj)) => match pi_jet(&mj, &lifted_p, &point) {
                Ok(pi) => {
                    let mut worst: f64 = 0.0;
                    for i in 0..dim {
                        for j in 0..dim {
                            for k in 0..dim {
                                let expect = -pi.values[j] * mj.g.get(i, k)
                                    - pi.values[k] * mj.g.get(i, j);
                                let err = (nabla_g.get(i, j, k) - expect).abs()
                                    / (1.0 + expect.abs());
                                worst = worst.max(err);
                            }
                        }
                    }
                    nonmetric.record(worst);
                }
                Err(e) => nonmetric.fail(&e),
            },
            (Err(e), _) | (_, Err(e)) => nonmetric.fail(&e),
        }
    }
    out.push(relation.into_record());
    out.push(torsion_acc.into_record());
    out.push(nonmetric.into_record());
}

fn relation_scaled(got: &[f64], expect: &[f64], acc: &mut Accumulator) {
    let scale = 1.0
        + got
            .iter()
            .chain(expect.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let err = got
        .iter()
        .zip(expect)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    acc.record(err);
}

fn qe_structure(m: &Manifest, a: f64, b: f64, c: f64) -> Option<QEStructure<f64>> {
    let u1 = m.generators.first()?.clone();
    Some(match m.generators.get(1) {
        Some(u2) => QEStructure::generalized(a, b, c, u1, u2.clone()),
        None => QEStructure::quasi(a, b, u1),
    })
}

fn run_einstein_checks(
    m: &Manifest,
    points: usize,
    tol: f64,
    rng: &mut SampleRng,
    out: &mut Vec<CheckRecord>,
) {
    if m.generators.is_empty() {
        return;
    }
    let sample_points = m.ambient_box().sample_many(rng, points);
    let p = m.p.as_ref();

    // Establish coefficients: declared, or fitted when absent.
    let fitted = fit(&m.wp, p, &m.generators, &sample_points);
    let declared = m.qe.as_ref();

    // Fit check.
    let mut fit_acc = match (declared, &fitted) {
        (Some(qe), Ok(f)) => {
            let mut acc = Accumulator::new(
                "qe.fit",
                "fitted coefficients match the declared structure",
                m.fit_tol,
            );
            let mut err = (f.a - qe.a).abs().max((f.b - qe.b).abs()).max(f.residual);
            if let (Some(c_fit), Some(c_decl)) = (f.c, qe.c) {
                err = err.max((c_fit - c_decl).abs());
            }
            acc.samples = sample_points.len();
            acc.max_error = err;
            let mut note = String::new();
            let _ = write!(note, "fitted a = {:.6e}, b = {:.6e}", f.a, f.b);
            if let Some(c) = f.c {
                let _ = write!(note, ", c = {c:.6e}");
            }
            acc.note = Some(note);
            acc
        }
        (None, Ok(f)) => {
            let mut acc = Accumulator::new(
                "qe.fit",
                "least-squares coefficients (diagnostic)",
                f64::INFINITY,
            );
            acc.samples = sample_points.len();
            acc.max_error = f.residual;
            let mut note = String::new();
            let _ = write!(note, "fitted a = {:.6e}, b = {:.6e}", f.a, f.b);
            if let Some(c) = f.c {
                let _ = write!(note, ", c = {c:.6e}");
            }
            let _ = write!(note, ", residual = {:.6e}", f.residual);
            acc.note = Some(note);
            acc
        }
        (_, Err(e)) => {
            let mut acc = Accumulator::new("qe.fit", "least-squares coefficient fit", m.fit_tol);
            acc.fail(e);
            acc
        }
    };
    fit_acc.samples = sample_points.len();
    out.push(fit_acc.into_record());

    let (a, b, c) = match (declared, &fitted) {
        (Some(qe), _) => (qe.a, qe.b, qe.c.unwrap_or(0.0)),
        (None, Ok(f)) => (f.a, f.b, f.c.unwrap_or(0.0)),
        (None, Err(_)) => return,
    };
    let Some(qe) = qe_structure(m, a, b, c) else { return };

    // Defect of the structure actually used downstream.
    let defect_result = defect(&m.wp, p, &qe, &sample_points);
    let zero_defect = match &defect_result {
        Ok(d) => d.max_abs <= m.fit_tol,
        Err(_) => false,
    };
    if declared.is_some() {
        let mut acc = Accumulator::new(
            "qe.defect",
            "declared structure has vanishing defect",
            m.fit_tol,
        );
        acc.samples = sample_points.len();
        match &defect_result {
            Ok(d) => acc.max_error = d.max_abs,
            Err(e) => acc.fail(e),
        }
        out.push(acc.into_record());
    }

    // α-constancy: asserted only when the structure is exact here.
    let alpha_kind = match (p.map(|pf| pf.placement()), qe.is_generalized()) {
        (Some(Placement::Fiber), false) => AlphaKind::Alpha2,
        (Some(Placement::Fiber), true) => AlphaKind::Alpha4,
        (_, false) => AlphaKind::Alpha1,
        (_, true) => AlphaKind::Alpha3,
    };
    let base_points = {
        let mut rng_alpha = rng.derive();
        m.base_box.sample_many(&mut rng_alpha, points)
    };
    let mut alpha_acc = Accumulator::new(
        format!("qe.{}", alpha_kind.label()),
        if zero_defect {
            "alpha bracket is constant over the base"
        } else {
            "alpha bracket spread (diagnostic; structure not exact)"
        },
        if zero_defect { tol } else { f64::INFINITY },
    );
    match alpha_check(&m.wp, p, alpha_kind, a, &base_points) {
        Ok(alpha) => {
            alpha_acc.samples = base_points.len();
            alpha_acc.max_error = alpha.spread;
        }
        Err(e) => alpha_acc.fail(&e),
    }
    out.push(alpha_acc.into_record());

    // Proposition replay under the conditional-identity contract.
    let (ricci_prop, scalar_prop) = if qe.is_generalized() {
        (PropositionId::GeneralizedRicci, PropositionId::GeneralizedScalar)
    } else {
        (PropositionId::QuasiRicci, PropositionId::QuasiScalar)
    };
    for prop in [ricci_prop, scalar_prop] {
        let id = format!("qe.prop.{}", prop.label());
        match proposition_check(&m.wp, p, prop, &qe, &sample_points, rng, tol) {
            Ok(rep) => {
                out.push(CheckRecord {
                    id,
                    label: format!(
                        "{} equations within {} * defect + tol (defect {:.2e})",
                        prop.label(),
                        m.wp.dim() * m.wp.dim(),
                        rep.defect_max
                    ),
                    samples: sample_points.len(),
                    max_error: rep.max_residual,
                    tolerance: rep.bound,
                    pass: rep.pass,
                    note: None,
                });
            }
            Err(e) => {
                let mut acc = Accumulator::new(id, format!("{} equations", prop.label()), tol);
                acc.fail(&e);
                out.push(acc.into_record());
            }
        }
    }

    // One-dimensional-base bookkeeping.
    let mut thm_acc = Accumulator::new(
        "qe.theorem",
        "laplacian of the warping is c0 * f on the samples",
        tol,
    );
    match theorem_bookkeeping(&m.wp, p, &qe, &sample_points) {
        Ok(rep) if rep.applicable => {
            thm_acc.samples = sample_points.len();
            thm_acc.max_error = rep.max_residual.unwrap_or(f64::INFINITY);
            if !zero_defect {
                // The identity only follows for exact structures.
                thm_acc.tolerance = f64::INFINITY;
                thm_acc.label = "laplacian bookkeeping (diagnostic; structure not exact)".into();
            }
            if let Some(c0) = rep.c0 {
                thm_acc.note = Some(format!("c0 = {c0:.6e}"));
            }
        }
        Ok(rep) => {
            thm_acc.samples = sample_points.len();
            thm_acc.tolerance = f64::INFINITY;
            thm_acc.note = Some(format!("not applicable: {}", rep.notes.join("; ")));
        }
        Err(e) => thm_acc.fail(&e),
    }
    out.push(thm_acc.into_record());
}

/// Run the selected suites over one manifest.
pub fn run_suite(m: &Manifest, suite: Suite, overrides: &Overrides) -> VerificationReport {
    let points = overrides.points.unwrap_or(m.points);
    let seed = overrides.seed.unwrap_or(m.seed);
    let tol = overrides.tol.unwrap_or(m.identity_tol);
    let mut rng = SampleRng::seed(seed);
    let mut checks = Vec::new();
    if suite.runs_lemmas() {
        run_lemma_checks(m, points, tol, &mut rng, &mut checks);
    }
    if suite.runs_ssnm() {
        run_ssnm_checks(m, points, tol, &mut rng, &mut checks);
    }
    if suite.runs_einstein() {
        run_einstein_checks(m, points, tol, &mut rng, &mut checks);
    }
    VerificationReport {
        engine: engine_version(),
        manifest: m.name.clone(),
        suite: suite.name().to_string(),
        seed,
        points,
        checks,
    }
}

/// Run the selected suites over the whole fixed catalog, one record stream
/// with ids prefixed by the entry name.
pub fn run_catalog(suite: Suite, overrides: &Overrides) -> VerificationReport {
    let mut checks = Vec::new();
    let mut seed = 0;
    let mut points = 0;
    for name in crate::catalog::names() {
        let m = crate::catalog::get(name).expect("built-in catalog entries load");
        let rep = run_suite(&m, suite, overrides);
        seed = rep.seed;
        points = rep.points;
        for mut c in rep.checks {
            c.id = format!("{name}/{}", c.id);
            checks.push(c);
        }
    }
    VerificationReport {
        engine: engine_version(),
        manifest: "catalog".to_string(),
        suite: suite.name().to_string(),
        seed,
        points,
        checks,
    }
}

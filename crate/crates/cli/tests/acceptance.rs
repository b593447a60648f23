//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Sign conventions: the engine defines Ricci through the frame sum with the
//! frame vector in the second curvature slot and the Laplacian as the
//! negative Hessian trace (the convention in which all decomposition
//! identities close; see the README). Classical textbook-sign values are the
//! mirrors of the engine values; fixtures below that are stated classically
//! are checked through that documented mapping, and the fixtures derived
//! from the semi-symmetric decompositions are checked directly.

use std::time::Instant;

use warpgeom::einstein::{fit, proposition_check, PropositionId, QEStructure};
use warpgeom::expr::{coords_of, parse, Expression};
use warpgeom::geometry::{
    christoffel_from_jet, ricci, ricci_classical, riemann_tensor, scalar_classical,
    scalar_from_ricci, VectorField,
};
use warpgeom::sample::{
    random_chart, random_expression, random_field, random_generator_field,
    random_warped_product, random_warped_product_with_dims, SampleRng,
};
use warpgeom::ssnm::{curvature_relation_check, ricci_ssnm, scalar_ssnm};
use warpgeom::warped::{CurvatureCase, PlacedField, PlacedVector, Placement, RicciCase};
use warpgeom_cli::catalog;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("{} {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_1_curvature_relation_equivalence() {
    let started = Instant::now();
    let mut rng = SampleRng::seed(101);
    let mut worst: f64 = 0.0;
    for chart_idx in 0..20 {
        let dim = 2 + chart_idx % 3;
        let (chart, bx) = random_chart::<f64>(&mut rng, dim, "x");
        let p = random_field(&mut rng, &chart);
        for _ in 0..100 {
            let point = bx.sample(&mut rng);
            let x: Vec<f64> = (0..dim).map(|_| rng.symmetric(1.0)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.symmetric(1.0)).collect();
            let z: Vec<f64> = (0..dim).map(|_| rng.symmetric(1.0)).collect();
            let cmp = curvature_relation_check(&chart, &p, &point, &x, &y, &z).unwrap();
            worst = worst.max(cmp.scaled_error);
        }
    }
    let elapsed = started.elapsed();
    let pass = worst <= 1e-8 && elapsed.as_secs_f64() <= 10.0;
    report(
        "criterion 1 (curvature-relation equivalence)",
        pass,
        &format!(
            "20 charts x 100 points, max scaled error {worst:.3e} (tol 1e-8), {:.2}s (limit 10s)",
            elapsed.as_secs_f64()
        ),
    );
}

struct SuiteCase {
    label: String,
    wp: warpgeom::Warped64,
    p: Option<PlacedField<f64>>,
    sample_box: warpgeom::sample::SampleBox<f64>,
}

fn suite_cases() -> Vec<SuiteCase> {
    let mut cases = Vec::new();
    for name in catalog::names() {
        let m = catalog::get(name).unwrap();
        let sample_box = m.ambient_box();
        cases.push(SuiteCase { label: format!("catalog:{name}"), sample_box, p: m.p, wp: m.wp });
    }
    let mut rng = SampleRng::seed(202);
    for k in 0..20 {
        let placement = if k % 2 == 0 { Placement::Base } else { Placement::Fiber };
        let rw = random_warped_product::<f64>(&mut rng, placement);
        cases.push(SuiteCase {
            label: format!("random:{k}"),
            sample_box: rw.ambient_box(),
            p: Some(rw.p),
            wp: rw.wp,
        });
    }
    cases
}

#[test]
fn criterion_2_decomposition_identity_suite() {
    let started = Instant::now();
    let mut rng = SampleRng::seed(203);
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    let mut statements = 0usize;
    for case in suite_cases() {
        let families: Vec<Placement> = match &case.p {
            Some(p) => vec![p.placement()],
            None => vec![Placement::Base, Placement::Fiber],
        };
        for family in families {
            let fam_p = case.p.as_ref().filter(|p| p.placement() == family);
            for _ in 0..50 {
                let point = case.sample_box.sample(&mut rng);
                let at = case.wp.at(fam_p, &point).unwrap();
                for c in CurvatureCase::ALL.into_iter().filter(|c| c.family() == family) {
                    let slots: Vec<PlacedVector<f64>> = c
                        .slots()
                        .iter()
                        .map(|&pl| placed(&mut rng, &case.wp, pl))
                        .collect();
                    let chk = at.curvature_case_check(c, &slots).unwrap();
                    statements += 1;
                    if chk.scaled_error > worst {
                        worst = chk.scaled_error;
                        worst_at = format!("{c} on {}", case.label);
                    }
                }
                for c in RicciCase::ALL.into_iter().filter(|c| c.family() == family) {
                    let slots: Vec<PlacedVector<f64>> = c
                        .slots()
                        .iter()
                        .map(|&pl| placed(&mut rng, &case.wp, pl))
                        .collect();
                    let chk = at.ricci_case_check(c, &slots).unwrap();
                    statements += 1;
                    if chk.scaled_error > worst {
                        worst = chk.scaled_error;
                        worst_at = format!("{c} on {}", case.label);
                    }
                }
                let chk = at.scalar_check().unwrap();
                statements += 1;
                if chk.scaled_error > worst {
                    worst = chk.scaled_error;
                    worst_at = format!("scalar on {}", case.label);
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let pass = worst <= 1e-7 && elapsed.as_secs_f64() <= 60.0;
    report(
        "criterion 2 (decomposition identity suite)",
        pass,
        &format!(
            "{statements} statement evaluations, max scaled error {worst:.3e} at {worst_at} \
             (tol 1e-7), {:.2}s (limit 60s)",
            elapsed.as_secs_f64()
        ),
    );
}

fn placed(rng: &mut SampleRng, wp: &warpgeom::Warped64, placement: Placement) -> PlacedVector<f64> {
    let dim = match placement {
        Placement::Base => wp.base_dim(),
        Placement::Fiber => wp.fiber_dim(),
    };
    PlacedVector { placement, components: (0..dim).map(|_| rng.symmetric(1.0)).collect() }
}

#[test]
fn criterion_3_closed_form_fixtures() {
    let mut rng = SampleRng::seed(303);
    let mut failures = Vec::new();

    // Sine-warped circle is the round unit sphere: classical scalar 2.
    {
        let m = catalog::get("unit-sphere-warped").unwrap();
        let bx = m.ambient_box();
        let mut worst: f64 = 0.0;
        for _ in 0..25 {
            let point = bx.sample(&mut rng);
            let mj = m.wp.ambient().metric_jet(&point).unwrap();
            let lc = christoffel_from_jet(&mj);
            worst = worst.max((scalar_classical(&mj, &lc) - 2.0).abs());
        }
        if worst > 1e-9 {
            failures.push(format!("sphere scalar error {worst:.3e} > 1e-9"));
        }
    }

    // Exponentially warped plane is hyperbolic 3-space: classical Ric = -2g.
    {
        let m = catalog::get("hyperbolic3").unwrap();
        let bx = m.ambient_box();
        let mut worst: f64 = 0.0;
        for _ in 0..25 {
            let point = bx.sample(&mut rng);
            let mj = m.wp.ambient().metric_jet(&point).unwrap();
            let lc = christoffel_from_jet(&mj);
            let expect = mj.g.scale(-2.0);
            worst = worst.max(ricci_classical(&lc).max_abs_diff(&expect));
        }
        if worst > 1e-8 {
            failures.push(format!("hyperbolic-3 Ricci error {worst:.3e} > 1e-8"));
        }
    }

    // Exponential warp with the unit base generator: direct S̄ = 2.
    {
        let m = catalog::get("hyperbolic2-ssnm").unwrap();
        let bx = m.ambient_box();
        let lifted = m.wp.lift(m.p.as_ref().unwrap());
        let mut worst: f64 = 0.0;
        for _ in 0..25 {
            let point = bx.sample(&mut rng);
            let s = scalar_ssnm(m.wp.ambient(), &lifted, &point).unwrap();
            worst = worst.max((s - 2.0).abs());
        }
        if worst > 1e-8 {
            failures.push(format!("exp-warp semi-symmetric scalar error {worst:.3e} > 1e-8"));
        }
    }

    // Euclidean plane with the unit x-generator: Ric̄ = diag(-1, 0), S̄ = -1.
    {
        let c = coords_of(&["x", "y"]);
        let one: Expression<f64> = parse("1", &c).unwrap();
        let chart =
            warpgeom::geometry::ChartManifold::diagonal(c, vec![one.clone(), one], vec![1, 1])
                .unwrap();
        let p = VectorField::coordinate(&chart, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..25 {
            let point = vec![rng.symmetric(1.0), rng.symmetric(1.0)];
            let ric = ricci_ssnm(&chart, &p, &point).unwrap();
            worst = worst.max((ric.get(0, 0) + 1.0).abs());
            worst = worst.max(ric.get(0, 1).abs());
            worst = worst.max(ric.get(1, 0).abs());
            worst = worst.max(ric.get(1, 1).abs());
            worst = worst.max((scalar_ssnm(&chart, &p, &point).unwrap() + 1.0).abs());
        }
        if worst > 1e-10 {
            failures.push(format!("flat-chart generator Ricci error {worst:.3e} > 1e-10"));
        }
    }

    // Minkowski product: every curvature component vanishes.
    {
        let m = catalog::get("minkowski-flat").unwrap();
        let bx = m.ambient_box();
        let mut worst: f64 = 0.0;
        for _ in 0..25 {
            let point = bx.sample(&mut rng);
            let mj = m.wp.ambient().metric_jet(&point).unwrap();
            let lc = christoffel_from_jet(&mj);
            worst = worst.max(riemann_tensor(&lc).max_abs());
        }
        if worst > 1e-12 {
            failures.push(format!("flat mixed-signature curvature {worst:.3e} > 1e-12"));
        }
    }

    report(
        "criterion 3 (closed-form fixtures)",
        failures.is_empty(),
        &if failures.is_empty() {
            "sphere, hyperbolic-3, exp-warp generator scalar, flat generator Ricci, \
             mixed-signature flatness all within tolerance"
                .to_string()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_4_ricci_asymmetry_fixture() {
    // Base (R, dt²) x_{e^t} (R, dx²) with the fiber generator: the mixed
    // Ricci entries are ±e^{2t}.
    let base = {
        let c = coords_of(&["t"]);
        warpgeom::geometry::ChartManifold::diagonal(
            c.clone(),
            vec![parse("1", &c).unwrap()],
            vec![1],
        )
        .unwrap()
    };
    let fiber = {
        let c = coords_of(&["x"]);
        warpgeom::geometry::ChartManifold::diagonal(
            c.clone(),
            vec![parse("1", &c).unwrap()],
            vec![1],
        )
        .unwrap()
    };
    let f = parse("exp(t)", base.coords()).unwrap();
    let wp = warpgeom::warped::WarpedProduct::build(base, fiber, f).unwrap();
    let p = PlacedField::new(Placement::Fiber, VectorField::coordinate(wp.fiber(), 0));
    let lifted = wp.lift(&p);
    let mut rng = SampleRng::seed(404);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let point: Vec<f64> = vec![rng.symmetric(1.0), rng.symmetric(1.0)];
        let ric = ricci_ssnm(wp.ambient(), &lifted, &point).unwrap();
        let expect = (2.0 * point[0]).exp();
        worst = worst.max((ric.get(0, 1) - expect).abs());
        worst = worst.max((ric.get(1, 0) + expect).abs());
        worst = worst.max((ric.get(0, 1) + ric.get(1, 0)).abs());
    }
    report(
        "criterion 4 (mixed Ricci asymmetry fixture)",
        worst <= 1e-8,
        &format!("max error {worst:.3e} against e^{{2t}} (tol 1e-8)"),
    );
}

#[test]
fn criterion_5_quasi_einstein_machinery() {
    let mut failures = Vec::new();
    let mut rng = SampleRng::seed(505);

    // Fit on the sphere product: classical-sign (a, b) = (1, -1), which is
    // the mirror of the engine pair.
    {
        let m = catalog::get("r-cross-s2").unwrap();
        let points = m.ambient_box().sample_many(&mut rng, 12);
        let f = fit(&m.wp, None, &m.generators, &points).unwrap();
        let (a_cl, b_cl) = (-f.a, -f.b);
        if (a_cl - 1.0).abs() > 1e-8 || (b_cl + 1.0).abs() > 1e-8 || f.residual > 1e-8 {
            failures.push(format!(
                "sphere-product fit: classical ({a_cl:.2e}, {b_cl:.2e}), residual {:.2e}",
                f.residual
            ));
        }

        // Ambient-scalar identity of the scalar-level proposition, first
        // line: classical 2 = 3*1 + (-1), engine -2 = 3*(-1) + 1.
        let point = vec![0.3, 1.2, 2.0];
        let mj = m.wp.ambient().metric_jet(&point).unwrap();
        let lc = christoffel_from_jet(&mj);
        let s_engine = scalar_from_ricci(&mj, &ricci(&lc));
        let nbar = 3.0;
        if (s_engine - (nbar * f.a + f.b)).abs() > 1e-12 {
            failures.push(format!(
                "scalar line: engine {s_engine:.15} vs {:.15}",
                nbar * f.a + f.b
            ));
        }
        if (-s_engine - (nbar * a_cl + b_cl)).abs() > 1e-12 {
            failures.push("classical scalar line failed".to_string());
        }
    }

    // Fit on hyperbolic 3-space: classical (-2, 0).
    {
        let m = catalog::get("hyperbolic3").unwrap();
        let points = m.ambient_box().sample_many(&mut rng, 12);
        let f = fit(&m.wp, None, &m.generators, &points).unwrap();
        let (a_cl, b_cl) = (-f.a, -f.b);
        if (a_cl + 2.0).abs() > 1e-8 || b_cl.abs() > 1e-8 || f.residual > 1e-8 {
            failures.push(format!("hyperbolic-3 fit: classical ({a_cl:.2e}, {b_cl:.2e})"));
        }
    }

    // Conditional-identity contract across every placement pattern, 20
    // random products each.
    let mut contract_runs = 0usize;
    let quasi = [PropositionId::QuasiRicci, PropositionId::QuasiScalar];
    for p_placement in [Placement::Base, Placement::Fiber] {
        for u_placement in [Placement::Base, Placement::Fiber] {
            for _ in 0..20 {
                let n1 = 1 + rng.below(2);
                let n2 = 1 + rng.below(2);
                let rw = random_warped_product_with_dims::<f64>(&mut rng, n1, n2, p_placement);
                let chart = match u_placement {
                    Placement::Base => rw.wp.base(),
                    Placement::Fiber => rw.wp.fiber(),
                };
                let u =
                    PlacedField::new(u_placement, random_generator_field(&mut rng, chart, 0));
                let qe = QEStructure::quasi(0.4, -0.3, u);
                let points = rw.ambient_box().sample_many(&mut rng, 8);
                for prop in quasi {
                    let rep = proposition_check(
                        &rw.wp,
                        Some(&rw.p),
                        prop,
                        &qe,
                        &points,
                        &mut rng,
                        1e-7,
                    )
                    .unwrap();
                    contract_runs += 1;
                    if !rep.pass {
                        failures.push(format!(
                            "quasi contract P:{p_placement} U:{u_placement}: residual {:.2e} \
                             > bound {:.2e}",
                            rep.max_residual, rep.bound
                        ));
                    }
                }
            }
        }
        for (u1_pl, u2_pl) in [
            (Placement::Base, Placement::Base),
            (Placement::Fiber, Placement::Fiber),
            (Placement::Base, Placement::Fiber),
        ] {
            for _ in 0..20 {
                let (n1, n2) = match (u1_pl, u2_pl) {
                    (Placement::Base, Placement::Base) => (2 + rng.below(2), 1 + rng.below(2)),
                    (Placement::Fiber, Placement::Fiber) => (1 + rng.below(2), 2 + rng.below(2)),
                    _ => (1 + rng.below(2), 1 + rng.below(2)),
                };
                let rw = random_warped_product_with_dims::<f64>(&mut rng, n1, n2, p_placement);
                let (u1, u2) = if u1_pl == u2_pl {
                    let chart = match u1_pl {
                        Placement::Base => rw.wp.base(),
                        Placement::Fiber => rw.wp.fiber(),
                    };
                    let g1 = random_generator_field(&mut rng, chart, 0);
                    let g2_raw = random_generator_field(&mut rng, chart, 1);
                    let g2 = warpgeom::einstein::orthogonalize_generator(chart, &g1, &g2_raw);
                    (PlacedField::new(u1_pl, g1), PlacedField::new(u2_pl, g2))
                } else {
                    (
                        PlacedField::new(
                            u1_pl,
                            random_generator_field(&mut rng, rw.wp.base(), 0),
                        ),
                        PlacedField::new(
                            u2_pl,
                            random_generator_field(&mut rng, rw.wp.fiber(), 0),
                        ),
                    )
                };
                let qe = QEStructure::generalized(0.4, -0.3, 0.2, u1, u2);
                let points = rw.ambient_box().sample_many(&mut rng, 8);
                for prop in [
                    PropositionId::GeneralizedRicci,
                    PropositionId::GeneralizedScalar,
                ] {
                    let rep = proposition_check(
                        &rw.wp,
                        Some(&rw.p),
                        prop,
                        &qe,
                        &points,
                        &mut rng,
                        1e-7,
                    )
                    .unwrap();
                    contract_runs += 1;
                    if !rep.pass {
                        failures.push(format!(
                            "generalized contract P:{p_placement} U:({u1_pl},{u2_pl}): \
                             residual {:.2e} > bound {:.2e}",
                            rep.max_residual, rep.bound
                        ));
                    }
                }
            }
        }
    }

    report(
        "criterion 5 (quasi-Einstein machinery)",
        failures.is_empty(),
        &if failures.is_empty() {
            format!(
                "fits recover both structures; scalar line exact; conditional contract held \
                 in {contract_runs} runs over all placement patterns"
            )
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_6_derivative_oracle() {
    const H: f64 = 1e-4;
    let coords = coords_of(&["x", "y", "z"]);
    let mut rng = SampleRng::seed(606);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    while checked < 200 {
        let e: Expression<f64> = random_expression(&mut rng, &coords, 5);
        let p: Vec<f64> = (0..3).map(|_| rng.symmetric(1.0)).collect();
        let Ok(jet) = e.eval_jet2(&p) else { continue };
        checked += 1;
        let eval = |q: &[f64]| e.eval(q).unwrap();
        for i in 0..3 {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[i] += H;
            lo[i] -= H;
            let fd = (eval(&hi) - eval(&lo)) / (2.0 * H);
            let err = (jet.gradient()[i] - fd).abs() / (1.0 + fd.abs().max(jet.gradient()[i].abs()));
            worst = worst.max(err);
        }
        for i in 0..3 {
            for j in i..3 {
                let fd = if i == j {
                    let mut hi = p.clone();
                    let mut lo = p.clone();
                    hi[i] += H;
                    lo[i] -= H;
                    (eval(&hi) - 2.0 * eval(&p) + eval(&lo)) / (H * H)
                } else {
                    let mut pp = p.clone();
                    let mut pm = p.clone();
                    let mut mp = p.clone();
                    let mut mm = p.clone();
                    pp[i] += H;
                    pp[j] += H;
                    pm[i] += H;
                    pm[j] -= H;
                    mp[i] -= H;
                    mp[j] += H;
                    mm[i] -= H;
                    mm[j] -= H;
                    (eval(&pp) - eval(&pm) - eval(&mp) + eval(&mm)) / (4.0 * H * H)
                };
                let err = (jet.hess(i, j) - fd).abs() / (1.0 + fd.abs().max(jet.hess(i, j).abs()));
                worst = worst.max(err);
            }
        }
    }
    report(
        "criterion 6 (derivative oracle)",
        worst <= 1e-5,
        &format!("{checked} expressions, max scaled deviation {worst:.3e} (tol 1e-5)"),
    );
}

#[test]
fn criterion_7_report_determinism() {
    let bin = env!("CARGO_BIN_EXE_warpgeom");
    let dir = std::env::temp_dir();
    let r1 = dir.join("warpgeom-acceptance-run1.toml");
    let r2 = dir.join("warpgeom-acceptance-run2.toml");
    for path in [&r1, &r2] {
        let out = std::process::Command::new(bin)
            .args([
                "check",
                "--suite",
                "all",
                "--seed",
                "42",
                "--report",
                path.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "catalog check failed: {}", String::from_utf8_lossy(&out.stdout));
    }
    let b1 = std::fs::read(&r1).unwrap();
    let b2 = std::fs::read(&r2).unwrap();
    let pass = b1 == b2;
    report(
        "criterion 7 (report determinism)",
        pass,
        &format!("two catalog runs at seed 42: {} bytes, byte-identical = {pass}", b1.len()),
    );
    let _ = std::fs::remove_file(&r1);
    let _ = std::fs::remove_file(&r2);
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use warpgeom_cli::manifest::Manifest;
use warpgeom_cli::suite::{run_catalog, run_suite, Overrides, Suite};
use warpgeom_cli::{catalog, manifest};

/// Chart-based verification of warped-product geometry with a
/// semi-symmetric non-metric connection.
#[derive(Parser)]
#[command(name = "warpgeom", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Path to a manifest file.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Name of a built-in catalog entry (see `catalog --list`).
    #[arg(long)]
    catalog: Option<String>,
}

impl Source {
    /// Resolve to a single manifest; `None` when neither flag was given.
    fn load(&self) -> Result<Option<Manifest>, String> {
        match (&self.manifest, &self.catalog) {
            (Some(_), Some(_)) => {
                Err("pass either --manifest or --catalog, not both".to_string())
            }
            (Some(path), None) => manifest::load(path).map(Some).map_err(|e| e.to_string()),
            (None, Some(name)) => catalog::get(name).map(Some).map_err(|e| e.to_string()),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite over a manifest, a catalog entry, or (with
    /// no source) the whole built-in catalog.
    Check {
        #[command(flatten)]
        source: Source,
        /// Which checks to run: lemmas | ssnm | einstein | all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Sample points per check (overrides the manifest).
        #[arg(long)]
        points: Option<usize>,
        /// PRNG seed (overrides the manifest).
        #[arg(long)]
        seed: Option<u64>,
        /// Identity tolerance (overrides the manifest).
        #[arg(long)]
        tol: Option<f64>,
        /// Write the structured report to this path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// List or show the built-in manifold catalog.
    Catalog {
        /// List entry names.
        #[arg(long)]
        list: bool,
        /// Print the manifest of one entry.
        #[arg(long)]
        show: Option<String>,
    },
    /// Print metric, connection coefficients, Ricci, and scalar curvature
    /// at one chart point.
    Curvature {
        #[command(flatten)]
        source: Source,
        /// Ambient coordinates, comma-separated (base first).
        #[arg(long)]
        at: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { source, suite, points, seed, tol, report } => {
            let suite = match Suite::parse(&suite) {
                Some(s) => s,
                None => {
                    eprintln!(
                        "error: unknown suite `{suite}` (expected lemmas, ssnm, einstein, or all)"
                    );
                    return ExitCode::from(2);
                }
            };
            let overrides = Overrides { points, seed, tol };
            let loaded = match source.load() {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let rep = match &loaded {
                Some(m) => run_suite(m, suite, &overrides),
                None => run_catalog(suite, &overrides),
            };
            print!("{}", rep.to_table());
            if let Some(path) = report {
                if let Err(e) = std::fs::write(&path, rep.to_structured()) {
                    eprintln!("error: cannot write report to {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if rep.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Catalog { list, show } => match (list, show) {
            (true, None) => {
                for name in catalog::names() {
                    println!("{name}");
                }
                println!("random-<seed>");
                ExitCode::SUCCESS
            }
            (false, Some(name)) => match catalog::show(&name) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            },
            _ => {
                eprintln!("error: pass exactly one of --list or --show <name>");
                ExitCode::from(2)
            }
        },
        Command::Curvature { source, at } => {
            let loaded = match source.load() {
                Ok(Some(m)) => m,
                Ok(None) => {
                    eprintln!("error: curvature needs --manifest or --catalog");
                    return ExitCode::from(2);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let point: Result<Vec<f64>, _> =
                at.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let point = match point {
                Ok(p) if p.len() == loaded.wp.dim() => p,
                Ok(p) => {
                    eprintln!(
                        "error: --at has {} coordinates, ambient chart has {}",
                        p.len(),
                        loaded.wp.dim()
                    );
                    return ExitCode::from(2);
                }
                Err(e) => {
                    eprintln!("error: cannot parse --at: {e}");
                    return ExitCode::from(2);
                }
            };
            match print_curvature(&loaded, &point) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn print_curvature(m: &Manifest, point: &[f64]) -> Result<(), String> {
    use warpgeom::geometry::{christoffel_from_jet, ricci, scalar_from_ricci};
    use warpgeom::ssnm::{connection_coeffs_from_jet, ConnectionSpec};

    let ambient = m.wp.ambient();
    let names: Vec<&str> = ambient.coords().iter().map(|s| s.as_str()).collect();
    let mj = ambient.metric_jet(point).map_err(|e| e.to_string())?;
    let lc = christoffel_from_jet(&mj);
    let lifted_p = match &m.p {
        Some(p) => m.wp.lift(p),
        None => warpgeom::geometry::VectorField::zero(ambient),
    };
    let bar = connection_coeffs_from_jet(&mj, &ConnectionSpec::ssnm(lifted_p), point)
        .map_err(|e| e.to_string())?;
    let ric = ricci(&lc);
    let ric_bar = ricci(&bar);
    let n = ambient.dim();

    println!(
        "point: ({})",
        names
            .iter()
            .zip(point)
            .map(|(c, v)| format!("{c} = {v}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("\nmetric g_ij:");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:>12.6}", mj.g.get(i, j))).collect();
        println!("  [{}]", row.join(" "));
    }

    let print_gamma = |title: &str, co: &warpgeom::geometry::ConnectionCoeffs<f64>| {
        println!("\n{title} (nonzero entries):");
        let mut any = false;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = co.gamma.get(k, i, j);
                    if v.abs() > 1e-14 {
                        println!("  [{}; {} {}] = {v:.12}", names[k], names[i], names[j]);
                        any = true;
                    }
                }
            }
        }
        if !any {
            println!("  all zero");
        }
    };
    print_gamma("Levi-Civita coefficients", &lc);
    print_gamma("semi-symmetric connection coefficients", &bar);

    let print_matrix = |title: &str, mat: &warpgeom::tensor::Matrix<f64>| {
        println!("\n{title}:");
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:>12.6}", mat.get(i, j))).collect();
            println!("  [{}]", row.join(" "));
        }
    };
    print_matrix("Ricci (Levi-Civita)", &ric);
    print_matrix("Ricci (semi-symmetric)", &ric_bar);

    println!(
        "\nscalar curvature (Levi-Civita):      {:.12}",
        scalar_from_ricci(&mj, &ric)
    );
    println!(
        "scalar curvature (semi-symmetric):   {:.12}",
        scalar_from_ricci(&mj, &ric_bar)
    );
    Ok(())
}

//! Command-line front end: Green's functions, Royden decompositions, star
//! boundary computations, form checks, approximating forms and the named
//! verification scenarios.
//!
//! Exit codes: 0 on success, 1 when an assertion or verification fails,
//! 2 on input errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graphforms::error::Error;
use graphforms::forms::{
    boundary_grid, compose_form, markov_check, markov_check_matrix, star_function_grid,
    trace_form, NeumannForm,
};
use graphforms::graphspec::{
    build_boundary_form, build_function, build_graph, build_star, BoundaryFormSpec, FunctionSpec,
    GraphSpec,
};
use graphforms::scenario::{run_scenarios, Scenario, ScenarioName};
use graphforms::star::{
    harmonic_measure, qdn_matrix, trace, StarGraph, StarMeasure, WeightFamily,
};
use graphforms::{
    alpha_sweep, greens_function, royden_decompose, Exhaustion, NormalContraction,
};

#[derive(Parser)]
#[command(name = "graphforms", version, about = "Energy forms and boundary forms on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Green's function levels and transience verdict at a vertex
    Green {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        vertex: String,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Royden decomposition of a function file
    Decompose {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star-boundary computations
    Star {
        #[command(subcommand)]
        command: StarCommand,
    },
    /// Form evaluators and their checks
    Forms {
        #[command(subcommand)]
        command: FormsCommand,
    },
    /// Approximating forms and main/killing parts
    Approx {
        #[command(subcommand)]
        command: ApproxCommand,
    },
    /// Named verification scenarios
    Scenario {
        /// One of: star-toy, z-lattice-counterexample, green-transience,
        /// main-theorem-roundtrip, approx-parts
        #[arg(long, conflicts_with = "all")]
        name: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct StarOpts {
    /// Number of rays
    #[arg(long = "N", default_value_t = 3)]
    n: usize,
    /// Weight family, e.g. geometric:2, or comma-separated per-ray families
    #[arg(long, default_value = "geometric:2")]
    weights: String,
    #[arg(long, default_value_t = 20)]
    depth: usize,
    /// Build the star from a graph spec file instead
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StarOpts {
    fn build(&self) -> Result<StarGraph, Error> {
        if let Some(path) = &self.spec {
            return build_star(&GraphSpec::from_file(path)?);
        }
        let families: Vec<WeightFamily> = if self.weights.contains(',') {
            self.weights
                .split(',')
                .map(WeightFamily::parse)
                .collect::<Result<_, _>>()?
        } else {
            vec![WeightFamily::parse(&self.weights)?; self.n]
        };
        if families.len() != self.n {
            return Err(Error::Spec(format!(
                "{} rays but {} weight families",
                self.n,
                families.len()
            )));
        }
        StarGraph::per_ray(families, self.depth, StarMeasure::GeometricDecay)
    }
}

#[derive(Subcommand)]
enum StarCommand {
    /// Dirichlet-to-Neumann matrix of the star boundary
    Qdn {
        #[command(flatten)]
        star: StarOpts,
    },
    /// Boundary trace of a function file with tail error bounds
    Trace {
        #[arg(long)]
        f: PathBuf,
        #[command(flatten)]
        star: StarOpts,
    },
    /// Harmonic measure weights at a vertex
    Measure {
        #[arg(long)]
        vertex: String,
        #[command(flatten)]
        star: StarOpts,
    },
}

#[derive(Subcommand)]
enum FormsCommand {
    /// Trace of a form onto the star boundary
    Trace {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "neumann")]
        form: String,
        /// Boundary form file for --form composed
        #[arg(long)]
        q: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Admit a boundary form and build the composed form
    Compose {
        #[arg(long)]
        q: PathBuf,
        /// Round-trip the composed form back through the trace
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verification suites over forms
    Check {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ApproxCommand {
    /// Approximating-form values along an alpha grid
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Main and killing part of the Neumann form at a function
    Parts {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        f: PathBuf,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn matrix_text(m: &nalgebra::DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        let _ = writeln!(s, "  [{}]", row.join(", "));
    }
    s
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Green {
            spec,
            vertex,
            levels,
            tol,
            out,
            csv,
        } => {
            let g = build_graph(&GraphSpec::from_file(spec)?)?;
            let x = g
                .vertex(&vertex)
                .ok_or_else(|| Error::Eval(format!("unknown vertex {vertex:?}")))?;
            let ex = Exhaustion::metric_balls(&g, x, levels)?;
            let ga = greens_function(&g, x, &ex, tol)?;
            let mut text = String::new();
            let _ = writeln!(text, "green function at {vertex} ({} levels)", ga.radii.len());
            for (i, d) in ga.diagonal.iter().enumerate() {
                let _ = writeln!(text, "  radius {:>3}: g(x) = {}", ga.radii[i], d);
            }
            let _ = writeln!(text, "verdict: {} (heuristic stopping rule, tol {tol:e})", ga.verdict);
            emit(&text, &out)?;
            if let Some(path) = csv {
                let mut c = String::from("parameter,value\n");
                for (i, d) in ga.diagonal.iter().enumerate() {
                    let _ = writeln!(c, "radius_{},{}", ga.radii[i], d);
                }
                std::fs::write(path, c)?;
            }
            Ok(true)
        }
        Command::Decompose {
            spec,
            f,
            levels,
            tol,
            out,
        } => {
            let g = build_graph(&GraphSpec::from_file(spec)?)?;
            let func = build_function(&g, &FunctionSpec::from_file(f)?)?;
            let root = 0;
            let count = levels.unwrap_or(g.vertex_count());
            let ex = Exhaustion::metric_balls(&g, root, count)?;
            let split = royden_decompose(&g, &func, &ex, tol)?;
            let mut text = String::new();
            let _ = writeln!(text, "royden decomposition ({} levels used)", split.levels_used);
            let _ = writeln!(text, "  energy(f)  = {}", graphforms::energy(&g, &func)?);
            let _ = writeln!(text, "  energy(f0) = {}", graphforms::energy(&g, &split.f0)?);
            let _ = writeln!(text, "  energy(fh) = {}", graphforms::energy(&g, &split.fh)?);
            let _ = writeln!(text, "  pythagorean residual = {:e}", split.pythagorean_residual);
            let _ = writeln!(text, "  harmonicity residual = {:e}", split.harmonicity_residual);
            for v in 0..g.vertex_count() {
                let _ = writeln!(
                    text,
                    "  {}: f0 = {}, fh = {}",
                    g.label(v),
                    split.f0.value(v),
                    split.fh.value(v)
                );
            }
            emit(&text, &out)?;
            Ok(true)
        }
        Command::Star { command } => match command {
            StarCommand::Qdn { star } => {
                let s = star.build()?;
                let a = qdn_matrix(&s)?;
                let mut text = format!(
                    "dirichlet-to-neumann form on {} boundary points (b1 = {}, B1 = {})\n",
                    s.rays(),
                    s.b1(),
                    s.big_b(1)
                );
                text.push_str(&matrix_text(a.matrix()));
                let _ = writeln!(
                    text,
                    "kernel check A·1 = 0: {}; second eigenvalue = {}",
                    a.kills_constants(1e-10),
                    a.second_eigenvalue()
                );
                emit(&text, &star.out)?;
                Ok(true)
            }
            StarCommand::Trace { f, star } => {
                let s = star.build()?;
                let func = build_function(s.graph(), &FunctionSpec::from_file(f)?)?;
                let (tr, bounds) = trace(&s, &func)?;
                let mut text = String::from("boundary trace\n");
                for j in 0..s.rays() {
                    let _ = writeln!(
                        text,
                        "  ray {}: value = {} (tail error bound {:e})",
                        j + 1,
                        tr.0[j],
                        bounds[j]
                    );
                }
                emit(&text, &star.out)?;
                Ok(true)
            }
            StarCommand::Measure { vertex, star } => {
                let s = star.build()?;
                let x = s
                    .graph()
                    .vertex(&vertex)
                    .ok_or_else(|| Error::Eval(format!("unknown vertex {vertex:?}")))?;
                let mu = harmonic_measure(&s, x)?;
                let mut text = format!("harmonic measure at {vertex}\n");
                for (j, w) in mu.weights.iter().enumerate() {
                    let _ = writeln!(text, "  boundary point {}: {}", j + 1, w);
                }
                emit(&text, &star.out)?;
                Ok(true)
            }
        },
        Command::Forms { command } => match command {
            FormsCommand::Trace { spec, form, q, out } => {
                let s = build_star(&GraphSpec::from_file(spec)?)?;
                let a = match form.as_str() {
                    "neumann" => trace_form(&s, &NeumannForm::new(s.graph()))?,
                    "composed" => {
                        let qpath = q.ok_or_else(|| {
                            Error::Spec("--form composed needs a --q boundary form file".into())
                        })?;
                        let bf = build_boundary_form(&BoundaryFormSpec::from_file(qpath)?)?;
                        let composed = compose_form(&s, bf)?;
                        trace_form(&s, &composed)?
                    }
                    other => return Err(Error::Spec(format!("unknown form {other:?}"))),
                };
                let mut text = format!("trace of the {form} form\n");
                text.push_str(&matrix_text(a.matrix()));
                emit(&text, &out)?;
                Ok(true)
            }
            FormsCommand::Compose {
                q,
                verify,
                spec,
                tol,
                out,
            } => {
                let s = match spec {
                    Some(path) => build_star(&GraphSpec::from_file(path)?)?,
                    None => StarGraph::uniform(
                        3,
                        WeightFamily::Geometric { ratio: 2.0 },
                        30,
                        StarMeasure::GeometricDecay,
                    )?,
                };
                let bf = build_boundary_form(&BoundaryFormSpec::from_file(q)?)?;
                let composed = compose_form(&s, bf.clone())?;
                let mut text = String::from("boundary form admitted: PSD, dominates the DN form, difference Markovian (sampled)\n");
                let mut ok = true;
                if verify {
                    let back = trace_form(&s, &composed)?;
                    let mut max_dev = 0.0f64;
                    for i in 0..s.rays() {
                        for j in 0..s.rays() {
                            max_dev =
                                max_dev.max((back.matrix()[(i, j)] - bf.matrix()[(i, j)]).abs());
                        }
                    }
                    ok = max_dev <= tol;
                    let _ = writeln!(
                        text,
                        "round trip max deviation = {max_dev:e} (tol {tol:e}): {}",
                        if ok { "pass" } else { "FAIL" }
                    );
                }
                emit(&text, &out)?;
                Ok(ok)
            }
            FormsCommand::Check {
                suite,
                spec,
                seed,
                tol,
                samples,
                out,
            } => {
                let s = match spec {
                    Some(path) => build_star(&GraphSpec::from_file(path)?)?,
                    None => StarGraph::uniform(
                        3,
                        WeightFamily::Geometric { ratio: 2.0 },
                        30,
                        StarMeasure::GeometricDecay,
                    )?,
                };
                match suite.as_str() {
                    "main-theorem" => {
                        let mut sc = Scenario::new(ScenarioName::MainTheoremRoundtrip);
                        sc.seed = seed;
                        sc.tol = tol;
                        let report = graphforms::run_scenario(&sc)?;
                        emit(&report.render(), &out)?;
                        Ok(report.passed())
                    }
                    "markov" => {
                        let tol = tol.unwrap_or(1e-10);
                        let library = NormalContraction::library();
                        let fns = star_function_grid(&s, samples, seed);
                        let energy_report =
                            markov_check(&NeumannForm::new(s.graph()), &fns, &library, tol)?;
                        let qdn = qdn_matrix(&s)?;
                        let grid = boundary_grid(s.rays(), samples, seed);
                        let zero = qdn.matrix() - qdn.matrix();
                        let diff_report = markov_check_matrix(&zero, &grid, &library, tol);
                        let mut text = String::new();
                        let _ = writeln!(
                            text,
                            "energy markov checks: {} run, {} violations",
                            energy_report.checks,
                            energy_report.violations.len()
                        );
                        let _ = writeln!(
                            text,
                            "difference-form markov checks: {} run, {} violations",
                            diff_report.checks,
                            diff_report.violations.len()
                        );
                        emit(&text, &out)?;
                        Ok(energy_report.passed() && diff_report.passed())
                    }
                    other => Err(Error::Spec(format!("unknown suite {other:?}"))),
                }
            }
        },
        Command::Approx { command } => match command {
            ApproxCommand::Sweep {
                spec,
                f,
                alphas,
                out,
                csv,
            } => {
                let g = build_graph(&GraphSpec::from_file(spec)?)?;
                let func = build_function(&g, &FunctionSpec::from_file(f)?)?;
                let sweep = alpha_sweep(&g, &alphas, &func)?;
                let mut text = String::from("approximating form sweep\n");
                for (a, v) in sweep.alphas.iter().zip(&sweep.values) {
                    let _ = writeln!(text, "  alpha = {a}: {v}");
                }
                let _ = writeln!(text, "limit (last value) = {}", sweep.limit);
                emit(&text, &out)?;
                if let Some(path) = csv {
                    let mut c = String::from("parameter,value\n");
                    for (a, v) in sweep.alphas.iter().zip(&sweep.values) {
                        let _ = writeln!(c, "alpha_{a},{v}");
                    }
                    std::fs::write(path, c)?;
                }
                Ok(true)
            }
            ApproxCommand::Parts {
                spec,
                f,
                levels,
                out,
            } => {
                let g = build_graph(&GraphSpec::from_file(spec)?)?;
                let func = build_function(&g, &FunctionSpec::from_file(f)?)?;
                let cutoffs = graphforms::ramp_cutoffs(&g, 0, levels)?;
                let neumann = NeumannForm::new(&g);
                let parts = graphforms::main_and_killing(&neumann, &func, &cutoffs, 1e-10)?;
                let mut text = String::from("main/killing split\n");
                for (i, v) in parts.values.iter().enumerate() {
                    let _ = writeln!(text, "  cutoff {i}: Q_phi = {v}");
                }
                let _ = writeln!(text, "main part    = {}", parts.main);
                let _ = writeln!(text, "killing part = {}", parts.killing);
                emit(&text, &out)?;
                Ok(true)
            }
        },
        Command::Scenario {
            name,
            all,
            spec,
            tol,
            levels,
            size,
            seed,
            parallel,
            out,
            csv,
        } => {
            let names: Vec<ScenarioName> = if all {
                ScenarioName::all().to_vec()
            } else {
                let raw = name.ok_or_else(|| Error::Scenario("give --name or --all".into()))?;
                vec![raw.parse()?]
            };
            let spec = match spec {
                Some(path) => Some(GraphSpec::from_file(path)?),
                None => None,
            };
            let scenarios: Vec<Scenario> = names
                .into_iter()
                .map(|n| Scenario {
                    name: n,
                    spec: spec.clone(),
                    tol,
                    levels,
                    size,
                    seed,
                })
                .collect();
            let reports = run_scenarios(&scenarios, parallel);
            let mut text = String::new();
            let mut csv_text = String::from("parameter,value\n");
            let mut ok = true;
            for r in reports {
                let report = r?;
                text.push_str(&report.render());
                for (k, v) in &report.csv {
                    let _ = writeln!(csv_text, "{}.{k},{v}", report.scenario);
                }
                ok &= report.passed();
            }
            emit(&text, &out)?;
            if let Some(path) = csv {
                std::fs::write(path, csv_text)?;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

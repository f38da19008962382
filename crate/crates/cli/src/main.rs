mod config;
mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use nirenberg::analysis::prescribed_curvature;
use nirenberg::fixedpoint::{
    certify_file, default_radius_grid, reference_table, Certificate, CertifyConfig, Stage, REFERENCE_S3,
    REFERENCE_TD,
};
use nirenberg::harmonics::{read_coeffs, write_coeffs, CoeffFile, CoeffFunction, Samples, SphereGrid};
use nirenberg::rigor::{Interval, Precision};
use nirenberg::solver::{solve, solve_branch, symmetry_diagnosis, Seed, Solution, SolverConfig};
use nirenberg::symmetry::{coset_representatives, pullback, tetrahedral_group, GroupName, SymmetryGroup};

use config::FileConfig;

const EXIT_FAILURE: u8 = 1;
const EXIT_SOLVER: u8 = 3;

fn stage_exit(stage: Stage) -> u8 {
    match stage {
        Stage::Residual => 4,
        Stage::Spectral => 5,
        Stage::FixedPoint => 6,
        Stage::Symmetry => 7,
        Stage::Symmetrize => 8,
    }
}

#[derive(Parser)]
#[command(name = "nirenberg", version, about = "Computer-assisted existence proofs for 1 + Δu = K e^{2u} on S^2")]
struct Cli {
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an approximate solution with Newton's method.
    Solve {
        #[command(flatten)]
        solver: SolverArgs,
        /// Coefficient JSON output.
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate an approximate solution and write its certificate.
    Certify {
        /// Coefficient file of the approximate solution.
        input: PathBuf,
        #[command(flatten)]
        certify: CertifyArgs,
        /// Certificate JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the constant table.
        #[arg(long)]
        table: bool,
    },
    /// Solve and certify each branch, writing all files into a directory.
    Pipeline {
        /// Branches to run.
        #[arg(long, value_delimiter = ',', default_value = "Td,S3")]
        groups: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        certify: CertifyArgs,
        /// Directory for candidates, certificates and orbit images.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample u0 and K on an equiangular grid as CSV.
    ExportGrid {
        /// Coefficient file.
        input: PathBuf,
        /// Latitudes, at θ = (2i + 1)π / (2 ntheta) [default: 90].
        #[arg(long)]
        ntheta: Option<usize>,
        /// Longitudes, at φ = 2πj / nphi [default: 2 ntheta].
        #[arg(long)]
        nphi: Option<usize>,
        /// CSV output with columns theta, phi, u0, K.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print certificate tables side by side, or the reference columns
    /// recomputed from their printed inputs when no file is given.
    PrintTable {
        /// Certificate JSON files, one column each.
        certificates: Vec<PathBuf>,
        /// Digits after the point.
        #[arg(long)]
        digits: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Truncation degree N.
    #[arg(long = "N", alias = "degree")]
    degree: Option<usize>,
    /// Seed: Td, S3, trivial or random.
    #[arg(long)]
    seed: Option<String>,
    /// Seed of the random part of the initial iterate.
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Newton iteration limit.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Target coefficient 2-norm of the residual.
    #[arg(long)]
    tol: Option<f64>,
    /// Prescribed curvature; only Y32 is supported.
    #[arg(long = "K", default_value = "Y32")]
    k: String,
}

#[derive(Args, Clone)]
struct CertifyArgs {
    /// Expected symmetry group: Td, S3 or trivial.
    #[arg(long)]
    group: Option<String>,
    /// Block cutoff L.
    #[arg(long = "L", alias = "l-cut")]
    l_cut: Option<usize>,
    /// Taylor degree of the exponential.
    #[arg(long)]
    p: Option<usize>,
    /// Working precision in bits (53 = binary64 intervals).
    #[arg(long)]
    precision: Option<u32>,
    /// Digits after the point in printed tables.
    #[arg(long)]
    digits: Option<usize>,
}

fn curvature(name: &str) -> Result<()> {
    if !name.eq_ignore_ascii_case("Y32") {
        bail!("unsupported curvature {name:?} (only Y32)");
    }
    Ok(())
}

fn solver_config(a: &SolverArgs, f: &FileConfig, group_default: Option<GroupName>) -> Result<SolverConfig> {
    let d = SolverConfig::default();
    let seed = match a.seed.as_ref().or(f.seed.as_ref()) {
        Some(s) => s.parse::<Seed>()?,
        None => group_default.map_or(d.seed, Seed::Symmetric),
    };
    let default_degree = match group_default {
        Some(GroupName::Td) => REFERENCE_TD.0.degree,
        Some(GroupName::S3) => REFERENCE_S3.0.degree,
        _ => d.degree,
    };
    Ok(SolverConfig {
        degree: a.degree.or(f.degree).unwrap_or(default_degree),
        quad_points: f.quad_points,
        max_iter: a.max_iter.or(f.max_iter).unwrap_or(d.max_iter),
        damping: f.damping.unwrap_or(d.damping),
        tol: a.tol.or(f.tol).unwrap_or(d.tol),
        seed,
        rng_seed: a.rng_seed.or(f.rng_seed).unwrap_or(d.rng_seed),
        amplitude: f.amplitude.unwrap_or(d.amplitude),
        k_weight: d.k_weight,
    })
}

fn certify_config(a: &CertifyArgs, f: &FileConfig, group: Option<GroupName>) -> Result<CertifyConfig> {
    let d = CertifyConfig::default();
    let group = match a.group.as_ref().or(f.group.as_ref()) {
        Some(g) => g.parse()?,
        None => group.unwrap_or(d.group),
    };
    let precision = match a.precision.or(f.precision) {
        Some(b) => Precision::new(b)?,
        None => d.precision,
    };
    Ok(CertifyConfig {
        group,
        precision,
        p: a.p.or(f.p).unwrap_or(d.p),
        l_cut: a.l_cut.or(f.l_cut),
        sup_samples: f.sup_samples.map(|[t, p]| Samples::new(t, p)),
        gap_samples: f.gap_samples.map(|[t, p]| Samples::new(t, p)),
        r_grid: f.r_grid.clone().unwrap_or_else(default_radius_grid),
    })
}

fn digits(a: Option<usize>, f: &FileConfig) -> usize {
    a.or(f.digits).unwrap_or(10)
}

fn check_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn solution_file(sol: &Solution, symmetry: GroupName) -> CoeffFile {
    CoeffFile::approx(&sol.u).with_metadata(json!({
        "K": "Y32",
        "seed": sol.seed.to_string(),
        "rng_seed": sol.rng_seed,
        "iterations": sol.iterations,
        "residual_estimate": format!("{:e}", sol.residual),
        "symmetry": symmetry.to_string(),
    }))
}

fn k_f64() -> CoeffFunction<f64> {
    prescribed_curvature::<Interval>(Precision::DOUBLE).midpoints()
}

fn cmd_solve(solver: &SolverArgs, out: &Path, f: &FileConfig) -> Result<u8> {
    curvature(&solver.k)?;
    check_parent(out)?;
    let cfg = solver_config(solver, f, None)?;
    let sol = match solve(&k_f64(), &cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("solver failed: {e}");
            return Ok(EXIT_SOLVER);
        }
    };
    let sym = symmetry_diagnosis(&sol.u, 1e-8)?;
    info!("residual estimate {:.3e} after {} steps; looks {sym}-symmetric", sol.residual, sol.iterations);
    write_coeffs(out, &solution_file(&sol, sym))?;
    println!("wrote {} (N = {}, residual estimate {:.3e}, symmetry {sym})", out.display(), cfg.degree, sol.residual);
    Ok(0)
}

fn exit_for(cert: &Certificate) -> u8 {
    cert.failed_stage.map_or(0, stage_exit)
}

fn cmd_certify(input: &Path, args: &CertifyArgs, out: Option<&Path>, show: bool, f: &FileConfig) -> Result<u8> {
    if let Some(o) = out {
        check_parent(o)?;
    }
    let file = read_coeffs(input)?;
    let cfg = certify_config(args, f, None)?;
    let cert = certify_file(&file, &cfg)?;
    if let Some(o) = out {
        write_json(o, &cert)?;
    }
    if show {
        print!("{}", table::render_certificate(&cert, digits(args.digits, f)));
    } else if cert.verdict {
        println!("verdict: TRUE");
    } else {
        println!(
            "verdict: FALSE at stage {}: {}",
            cert.failed_stage.map_or("-".into(), |s| s.to_string()),
            cert.failure.as_deref().unwrap_or("")
        );
    }
    Ok(exit_for(&cert))
}

fn cmd_pipeline(
    groups: &[String],
    solver: &SolverArgs,
    certify: &CertifyArgs,
    out_dir: &Path,
    f: &FileConfig,
) -> Result<u8> {
    curvature(&solver.k)?;
    if !out_dir.is_dir() {
        bail!("output directory {} does not exist", out_dir.display());
    }
    let groups: Vec<GroupName> = groups.iter().map(|g| g.parse()).collect::<Result<_, _>>()?;
    let mut code = 0;
    let mut columns = Vec::new();
    let mut certified = Vec::new();
    for &g in &groups {
        let scfg = solver_config(solver, f, Some(g))?;
        let sol = match solve_branch(&k_f64(), &scfg, g, f.attempts.unwrap_or(16)) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{g}: solver failed: {e}");
                code = code.max(EXIT_SOLVER);
                continue;
            }
        };
        let cand_path = out_dir.join(format!("candidate_{g}.json"));
        let file = solution_file(&sol, g);
        write_coeffs(&cand_path, &file)?;
        let mut ccfg = certify_config(certify, f, Some(g))?;
        if ccfg.l_cut.is_none() && solver.degree.or(f.degree).is_none() {
            ccfg.l_cut = Some(match g {
                GroupName::Td => REFERENCE_TD.0.l_cut,
                GroupName::S3 => REFERENCE_S3.0.l_cut,
                GroupName::Trivial => 32,
            });
        }
        let cert = certify_file(&file, &ccfg)?;
        write_json(&out_dir.join(format!("certificate_{g}.json")), &cert)?;
        let verdict = if cert.verdict {
            "TRUE".to_string()
        } else {
            format!("FALSE at stage {}", cert.failed_stage.expect("failed stage"))
        };
        println!("{g}: N = {}, verdict {verdict}", sol.u.degree());
        code = code.max(exit_for(&cert));
        if cert.verdict {
            certified.push(g);
            if g != GroupName::Td {
                write_orbit(&sol.u, g, out_dir)?;
            }
        }
        columns.push((g.to_string(), cert.table));
    }
    print!("{}", table::render(&columns, digits(certify.digits, f)));
    if certified.contains(&GroupName::Td) && certified.contains(&GroupName::S3) {
        let orbit = GroupName::Td.order() / GroupName::S3.order();
        println!(
            "five solutions: 1 ({}) + {orbit} ({} orbit, |{}|/|{}|) = {}",
            GroupName::Td,
            GroupName::S3,
            GroupName::Td,
            GroupName::S3,
            1 + orbit
        );
    }
    Ok(code)
}

/// Writes the images of a certified candidate under coset representatives of
/// its group in the ambient group.
fn write_orbit(u: &CoeffFunction<f64>, g: GroupName, dir: &Path) -> Result<()> {
    let reps = coset_representatives(&SymmetryGroup::new(g), &tetrahedral_group());
    for (i, h) in reps.iter().enumerate() {
        let image = pullback(u, h)?;
        let file = CoeffFile::approx(&image).with_metadata(json!({ "K": "Y32", "orbit_of": g.to_string(), "element": h.label() }));
        write_coeffs(&dir.join(format!("orbit_{g}_{i}.json")), &file)?;
    }
    Ok(())
}

fn cmd_export_grid(input: &Path, ntheta: Option<usize>, nphi: Option<usize>, out: &Path, f: &FileConfig) -> Result<u8> {
    check_parent(out)?;
    let u = read_coeffs(input)?.to_f64()?;
    let k = k_f64();
    let n = u.degree().max(k.degree());
    let nt = ntheta.or(f.ntheta).unwrap_or(90);
    let np = nphi.or(f.nphi).unwrap_or(2 * nt);
    if nt == 0 || np == 0 {
        bail!("grid sizes must be positive");
    }
    let grid = SphereGrid::<f64>::equiangular(n, nt, np, Precision::DOUBLE)?;
    let uv = grid.synthesize(&u.with_degree(n));
    let kv = grid.synthesize(&k.with_degree(n));
    let mut csv = String::from("theta,phi,u0,K\n");
    for i in 0..nt {
        let theta = (2 * i + 1) as f64 * std::f64::consts::PI / (2 * nt) as f64;
        for j in 0..np {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / np as f64;
            let t = i * np + j;
            csv += &format!("{theta:e},{phi:e},{:e},{:e}\n", uv[t], kv[t]);
        }
    }
    fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    Ok(0)
}

fn cmd_print_table(paths: &[PathBuf], digits_flag: Option<usize>, f: &FileConfig) -> Result<u8> {
    let d = digits(digits_flag, f);
    if paths.is_empty() {
        let columns = [REFERENCE_TD, REFERENCE_S3]
            .iter()
            .map(|(inp, _)| Ok((inp.name.to_string(), reference_table(inp)?)))
            .collect::<Result<Vec<_>>>()?;
        print!("{}", table::render(&columns, d));
        return Ok(0);
    }
    let certs = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Certificate>(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    if let [cert] = certs.as_slice() {
        print!("{}", table::render_certificate(cert, d));
        return Ok(0);
    }
    let columns: Vec<_> = certs.iter().map(|c| (c.problem.group.to_string(), c.table.clone())).collect();
    print!("{}", table::render(&columns, d));
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let f = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Solve { solver, out } => cmd_solve(solver, out, &f),
        Command::Certify { input, certify, out, table } => cmd_certify(input, certify, out.as_deref(), *table, &f),
        Command::Pipeline { groups, solver, certify, out_dir } => cmd_pipeline(groups, solver, certify, out_dir, &f),
        Command::ExportGrid { input, ntheta, nphi, out } => cmd_export_grid(input, *ntheta, *nphi, out, &f),
        Command::PrintTable { certificates, digits } => cmd_print_table(certificates, *digits, &f),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use subtour::gap::{gap_plus, max_gap_of, GapCertificate};
use subtour::graphgen::{generate_support_candidates, Mode};
use subtour::io::{compare_lists, format_certificates, read_points, write_points};
use subtour::pipeline::{report_file_name, run, EnumerationReport, RunConfig, VerifyLevel};
use subtour::rational::format_rational;

#[derive(Parser)]
#[command(name = "subtour", version, about = "Extreme points of the subtour polytope and their integrality gaps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List candidate support graphs on n vertices.
    Graphs {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "general")]
        mode: Mode,
        #[arg(long)]
        count_only: bool,
    },
    /// Enumerate extreme point classes for 3..=n-max without gaps.
    Enumerate(RunArgs),
    /// Compute gaps for every point of a point file.
    Gap {
        #[arg(long = "in")]
        input: PathBuf,
        /// Directory for the certificate file.
        #[arg(long)]
        certs: Option<PathBuf>,
        /// Write the point file back with gaps filled in.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_only: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Compare two point files up to isomorphism.
    Compare { a: PathBuf, b: PathBuf },
    /// Print a report produced by `pipeline` as a table.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Full run: enumeration, gaps, point files, certificates and report.
    Pipeline {
        #[command(flatten)]
        run: RunArgs,
        /// Also write gap certificates.
        #[arg(long)]
        certs: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value = "general")]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "sample")]
    verify: VerifyLevel,
}

impl RunArgs {
    fn config(&self, gaps: bool) -> RunConfig {
        RunConfig {
            n_max: self.n_max,
            mode: self.mode,
            workers: self.workers,
            output_dir: self.out.clone(),
            verify_level: self.verify,
            compute_gaps: gaps,
            write_certificates: false,
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Graphs { n, mode, count_only } => {
            let graphs = generate_support_candidates(n, mode);
            if count_only {
                println!("{}", graphs.len());
            } else {
                for g in &graphs {
                    println!("{g}");
                }
            }
        }
        Command::Enumerate(args) => print_report(&run(&args.config(false))?),
        Command::Pipeline { run: args, certs } => {
            let mut config = args.config(true);
            config.write_certificates = certs;
            let report = run(&config)?;
            print_report(&report);
            if let Some(dir) = &config.output_dir {
                eprintln!("wrote {}", dir.join(report_file_name(config.mode)).display());
            }
        }
        Command::Gap {
            input,
            certs,
            out,
            max_only,
            workers,
        } => gap(input, certs, out, max_only, workers)?,
        Command::Compare { a, b } => {
            let c = compare_lists(&a, &b)?;
            println!("missing in a: {} {:?}", c.missing_in_a.len(), c.missing_in_a);
            println!("missing in b: {} {:?}", c.missing_in_b.len(), c.missing_in_b);
        }
        Command::Report { input } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            print_report(&serde_json::from_str(&text)?);
        }
    }
    Ok(())
}

fn gap(input: PathBuf, certs: Option<PathBuf>, out: Option<PathBuf>, max_only: bool, workers: usize) -> Result<()> {
    if workers == 0 {
        bail!("workers must be at least 1");
    }
    let mut list = read_points(&input)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let results: Vec<GapCertificate> = pool.install(|| {
        list.points
            .par_iter()
            .map(|r| gap_plus(&r.point).with_context(|| format!("point id={}", r.id)))
            .collect::<Result<_>>()
    })?;
    for (rec, cert) in list.points.iter_mut().zip(&results) {
        rec.gap = Some(cert.gap_plus.clone());
    }
    match max_gap_of(&results) {
        Some((g, _)) if max_only => {
            let ids: Vec<usize> = list
                .points
                .iter()
                .filter(|r| r.gap.as_ref() == Some(&g))
                .map(|r| r.id)
                .collect();
            println!("max gap {} attained by ids {ids:?}", format_rational(&g));
        }
        _ => {
            for rec in &list.points {
                println!("{} {}", rec.id, format_rational(rec.gap.as_ref().expect("just computed")));
            }
        }
    }
    if let Some(dir) = certs {
        std::fs::create_dir_all(&dir)?;
        let numbered: Vec<(usize, &GapCertificate)> = list.points.iter().map(|r| r.id).zip(&results).collect();
        let path = dir.join(format!("certificates-n{:02}-{}.txt", list.n, list.mode));
        std::fs::write(&path, format_certificates(&numbered))?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = out {
        write_points(&list, &path)?;
    }
    Ok(())
}

fn print_report(r: &EnumerationReport) {
    println!("mode {}", r.mode);
    println!("{:>3} {:>8} {:>7} {:>7} {:>7} {:>7} {:>8}  {:>8}", "n", "graphs", "step2", "step3", "total", "half", "max gap", "seconds");
    for row in &r.rows {
        let s = &row.seconds;
        println!(
            "{:>3} {:>8} {:>7} {:>7} {:>7} {:>7} {:>8}  {:>8.2}",
            row.n,
            row.support_graphs,
            row.step2_classes,
            row.step3_classes,
            row.total,
            row.half_integral,
            row.max_gap.as_deref().unwrap_or("-"),
            s.graphs + s.step2 + s.step3 + s.gaps
        );
    }
}

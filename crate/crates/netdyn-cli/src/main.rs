//! Command-line front end for the netdyn library.
//!
//! Exit codes follow one contract across all subcommands: 0 when the
//! requested property holds (or the command simply succeeded), 1 when the
//! property fails honestly (not a fibration, residual above tolerance,
//! family does not descend, trajectory left the finite range), and 2 for
//! malformed input of any kind.

use clap::{Parser, Subcommand};
use netdyn::io;
use netdyn::prelude::*;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "netdyn", version, about = "Coupled dynamical systems on directed multigraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file: graph shape, dimensions, and dynamics.
    Validate {
        #[arg(long)]
        network: PathBuf,
    },
    /// Decide whether a node/edge map between two networks is a fibration.
    Fibration {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        codomain: PathBuf,
        #[arg(long)]
        map: PathBuf,
    },
    /// Transport the codomain's dynamics back along a fibration and write
    /// the resulting domain network file.
    Pullback {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        codomain: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate with fixed-step RK4 and write a CSV trajectory.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        x0: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long = "t")]
        t_end: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample whether the map intertwines the two networks' vector fields.
    Conjugacy {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        codomain: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Integrate both networks and compare the codomain trajectory, pushed
    /// through the map, against the domain trajectory.
    Semiconjugacy {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        codomain: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Initial condition on the codomain network.
        #[arg(long)]
        x0: PathBuf,
        #[arg(long)]
        h: f64,
        #[arg(long = "t")]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Compute the coarsest balanced partition and write the minimal base
    /// with its descended dynamics, projection, and partition.
    Minbase {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Quotient a network by a partition from a file.
    Quotient {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

const PROPERTY_FAILED: u8 = 1;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_network(path: &Path) -> Result<(Network, ControlFamily), String> {
    io::parse_network(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_morphism(
    path: &Path,
    dom: &Network,
    cod: &Network,
) -> Result<NetworkMorphism, String> {
    let m = io::parse_morphism(&read(path)?, dom.graph(), cod.graph())
        .map_err(|e| format!("{}: {e}", path.display()))?;
    NetworkMorphism::new(m, dom.clone(), cod.clone())
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn require_fibration(phi: &NetworkMorphism) -> Result<Result<FibrationWitness, ExitCode>, String> {
    Ok(match phi.morphism().check_fibration() {
        FibrationOutcome::Fibration(w) => Ok(w),
        FibrationOutcome::NotFibration(f) => {
            println!(
                "not a fibration: at node {}, codomain edge {} has {} lifts ({:?})",
                f.node,
                f.codomain_edge,
                f.lifts.len(),
                f.lifts
            );
            Err(ExitCode::from(PROPERTY_FAILED))
        }
    })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate { network } => {
            let (net, _) = load_network(&network)?;
            println!(
                "ok: {} nodes, {} edges, total dimension {}",
                net.graph().node_count(),
                net.graph().edge_count(),
                net.total_dim()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Fibration { domain, codomain, map } => {
            let (dom, _) = load_network(&domain)?;
            let (cod, _) = load_network(&codomain)?;
            let phi = load_morphism(&map, &dom, &cod)?;
            match require_fibration(&phi)? {
                Ok(witness) => {
                    let rendered = serde_json::to_string_pretty(&witness.lifts)
                        .expect("witness maps serialize");
                    println!("{rendered}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(code) => Ok(code),
            }
        }

        Command::Pullback { domain, codomain, map, out } => {
            let (dom, _) = load_network(&domain)?;
            let (cod, cod_family) = load_network(&codomain)?;
            let phi = load_morphism(&map, &dom, &cod)?;
            let witness = match require_fibration(&phi)? {
                Ok(w) => w,
                Err(code) => return Ok(code),
            };
            let pulled = pullback_family(&phi, &witness, &cod_family)
                .map_err(|e| format!("pullback failed: {e}"))?;
            let text = io::render_network(&dom, &pulled).map_err(|e| e.to_string())?;
            write(&out, &text)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Simulate { network, x0, h, t_end, out } => {
            let (net, family) = load_network(&network)?;
            let start = io::parse_point(&read(&x0)?, &net)
                .map_err(|e| format!("{}: {e}", x0.display()))?;
            let cfg = IntegratorConfig::new(h, t_end).map_err(|e| e.to_string())?;
            let field =
                InterconnectedField::new(net.clone(), family).map_err(|e| e.to_string())?;
            match rk4_integrate(&field, &start, &cfg) {
                Ok(traj) => {
                    write(&out, &io::trajectory_to_csv(&net, &traj))?;
                    println!(
                        "wrote {} ({} steps, t_end {})",
                        out.display(),
                        traj.len() - 1,
                        traj.times.last().unwrap()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(DynamicsError::NonFinite { step, time }) => {
                    println!("integration produced a non-finite value at step {step} (t = {time})");
                    Ok(ExitCode::from(PROPERTY_FAILED))
                }
                Err(e) => Err(e.to_string()),
            }
        }

        Command::Conjugacy { domain, codomain, map, samples, seed, tol } => {
            let (dom, dom_family) = load_network(&domain)?;
            let (cod, cod_family) = load_network(&codomain)?;
            let phi = load_morphism(&map, &dom, &cod)?;
            let dom_field =
                InterconnectedField::new(dom.clone(), dom_family).map_err(|e| e.to_string())?;
            let cod_field =
                InterconnectedField::new(cod.clone(), cod_family).map_err(|e| e.to_string())?;
            let report = check_fields_conjugate(&phi, &dom_field, &cod_field, samples, seed)
                .map_err(|e| e.to_string())?;
            let holds = report.max_residual <= tol;
            let rendered = serde_json::to_string_pretty(&json!({
                "samples": report.samples,
                "seed": report.seed,
                "tol": tol,
                "max_residual": report.max_residual,
                "per_node": report.per_node,
                "holds": holds,
            }))
            .expect("report serializes");
            println!("{rendered}");
            Ok(if holds { ExitCode::SUCCESS } else { ExitCode::from(PROPERTY_FAILED) })
        }

        Command::Semiconjugacy { domain, codomain, map, x0, h, t_end, tol } => {
            let (dom, dom_family) = load_network(&domain)?;
            let (cod, cod_family) = load_network(&codomain)?;
            let phi = load_morphism(&map, &dom, &cod)?;
            let start = io::parse_point(&read(&x0)?, &cod)
                .map_err(|e| format!("{}: {e}", x0.display()))?;
            let cfg = IntegratorConfig::new(h, t_end).map_err(|e| e.to_string())?;
            let dom_field =
                InterconnectedField::new(dom.clone(), dom_family).map_err(|e| e.to_string())?;
            let cod_field =
                InterconnectedField::new(cod.clone(), cod_family).map_err(|e| e.to_string())?;
            let report =
                check_trajectories_semiconjugate(&phi, &dom_field, &cod_field, &start, &cfg)
                    .map_err(|e| e.to_string())?;
            let holds = report.max_deviation <= tol;
            let rendered = serde_json::to_string_pretty(&json!({
                "h": report.h,
                "t_end": report.t_end,
                "steps": report.steps,
                "tol": tol,
                "max_deviation": report.max_deviation,
                "time_of_max": report.time_of_max,
                "holds": holds,
            }))
            .expect("report serializes");
            println!("{rendered}");
            Ok(if holds { ExitCode::SUCCESS } else { ExitCode::from(PROPERTY_FAILED) })
        }

        Command::Minbase { network, out, samples, tol, seed } => {
            let (net, family) = load_network(&network)?;
            let p = coarsest_balanced_partition(&net, None).map_err(|e| e.to_string())?;
            let qr = quotient_network(&net, &p).map_err(|e| e.to_string())?;
            descend_and_write(&qr, &family, samples, tol, seed, &out)
        }

        Command::Quotient { network, partition, out, samples, tol, seed } => {
            let (net, family) = load_network(&network)?;
            let p = io::parse_partition(&read(&partition)?)
                .map_err(|e| format!("{}: {e}", partition.display()))?;
            let qr = match quotient_network(&net, &p) {
                Ok(qr) => qr,
                Err(
                    e @ (QuotientError::NotBalanced { .. } | QuotientError::DimsNotConstant { .. }),
                ) => {
                    println!("{e}");
                    return Ok(ExitCode::from(PROPERTY_FAILED));
                }
                Err(e) => return Err(e.to_string()),
            };
            descend_and_write(&qr, &family, samples, tol, seed, &out)
        }
    }
}

fn descend_and_write(
    qr: &QuotientResult,
    family: &ControlFamily,
    samples: usize,
    tol: f64,
    seed: u64,
    out: &Path,
) -> Result<ExitCode, String> {
    match pushforward_family(qr, family, samples, tol, seed) {
        Ok(descended) => {
            let file = io::quotient_to_file(qr, &descended).map_err(|e| e.to_string())?;
            let text = serde_json::to_string_pretty(&file).expect("quotient file serializes");
            write(out, &text)?;
            println!(
                "partition: {}",
                serde_json::to_string(&io::partition_blocks(&qr.partition))
                    .expect("blocks serialize")
            );
            println!(
                "wrote {} ({} base nodes, {} base edges)",
                out.display(),
                qr.base.graph().node_count(),
                qr.base.graph().edge_count()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(QuotientError::Inconsistent(report)) => {
            match &report.worst {
                Some(w) => println!(
                    "family does not descend: nodes {} and {} disagree by {} (seed {}, state {:?})",
                    w.nodes.0, w.nodes.1, w.deviation, report.seed, w.state
                ),
                None => println!("family does not descend"),
            }
            Ok(ExitCode::from(PROPERTY_FAILED))
        }
        Err(e) => Err(e.to_string()),
    }
}

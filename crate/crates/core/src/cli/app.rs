use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::bench::{bench_dynamic, frames_to_csv, machine_info, Trajectory};
use super::experiments::{self, compute_pattern, render, render_options};
use super::manifest::OutDir;
use super::presets::{shadow_line, shadow_occluder, Preset};
use super::recipes::{reproduce, Figure};
use crate::error::{Error, Result};
use crate::illumination::{line_profile, profile_to_csv, shadow_profile, uniformity, LedPattern};
use crate::io::read_bytes;
use crate::math::Vec2;
use crate::patterns::{target_leakage, Method};
use crate::placement::{optimize_layout, periodic_baseline, periodic_matched, trace_to_csv, OptimizerParams};
use crate::scene::{load_config, Config, LensLayout};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Any failure not covered below (I/O, numerical).
pub const EXIT_FAILURE: i32 = 1;
/// Invalid command line or configuration.
pub const EXIT_CONFIG: i32 = 2;
/// A `reproduce` recipe ran but at least one check failed.
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lfi", version, about = "Target-excluding light-field illumination simulator")]
pub struct Cli {
    /// TOML configuration; the preset's defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in problem size used when no config is given.
    #[arg(long, global = true, default_value = "desk")]
    pub preset: Preset,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory receiving every artifact and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct LayoutArg {
    /// Lens layout CSV; otherwise the configured layout, otherwise a fresh
    /// optimisation.
    #[arg(long)]
    pub layout: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedy aperiodic lens placement.
    OptimizeLayout {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sectors: Option<usize>,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long, default_value = "layout.csv")]
        out: PathBuf,
        /// Per-step trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Record wall time per step in the trace (not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Hexagonal closest packing of the plate.
    PeriodicBaseline {
        /// Shrink the packed area until the count is within 10% of N.
        #[arg(long, value_name = "N")]
        r#match: Option<usize>,
        #[arg(long, default_value = "periodic.csv")]
        out: PathBuf,
    },
    /// Irradiance map of the floor for an LED pattern (all on by default).
    Render {
        #[command(flatten)]
        layout: LayoutArg,
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[arg(long, default_value = "irradiance.pgm")]
        out: PathBuf,
        /// Intensity profile along y = 0 as CSV.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Target-excluding LED pattern.
    Pattern {
        #[command(flatten)]
        layout: LayoutArg,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value = "pattern.pgm")]
        out: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        dilate: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Uniformity and leakage of a rendered pattern.
    Metrics {
        #[command(flatten)]
        layout: LayoutArg,
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[arg(long, default_value = "metrics.csv")]
        out: PathBuf,
    },
    /// Achievable contrast of sinusoidal requests versus frequency.
    Mtf {
        #[command(flatten)]
        layout: LayoutArg,
        #[arg(long, default_value = "mtf.csv")]
        out: PathBuf,
    },
    /// Shadow edge profile behind an opaque disk.
    Shadow {
        #[command(flatten)]
        layout: LayoutArg,
        /// Light with the lens nearest the plate centre only.
        #[arg(long)]
        single: bool,
        #[arg(long, default_value = "shadow.csv")]
        out: PathBuf,
    },
    /// Per-frame latency of the geometry method on a moving target.
    BenchDynamic {
        #[command(flatten)]
        layout: LayoutArg,
        #[arg(long, default_value_t = 600)]
        frames: usize,
        /// Keyframe CSV `frame,tx,ty,tz,rx_deg,ry_deg,rz_deg`; a circular
        /// path when absent.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value = "latency.csv")]
        out: PathBuf,
        /// Also write every frame's pattern.
        #[arg(long)]
        dump_patterns: bool,
    },
    /// Runs a study recipe: fig5, fig6, fig7, fig8, fig9, fig11 or mtf.
    Reproduce {
        figure: Figure,
        /// Include wall-clock measurements (not reproducible).
        #[arg(long)]
        timing: bool,
    },
}

/// What a finished command reports back to `main`.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub failed_checks: usize,
}

pub fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(o) if o.failed_checks > 0 => EXIT_ACCEPTANCE,
        Ok(_) => EXIT_OK,
        Err(e) if e.is_config_error() || matches!(e, Error::Unknown { .. } | Error::Format { .. }) => EXIT_CONFIG,
        Err(_) => EXIT_FAILURE,
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => cli.preset.config(),
    };
    if let Some(s) = cli.seed {
        cfg.solver.seed = s;
    }
    Ok(cfg)
}

fn layout(cfg: &Config, arg: &LayoutArg) -> Result<LensLayout> {
    match &arg.layout {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let l = LensLayout::from_csv(&text, cfg.lens.focal_length, cfg.lens.margin)?;
            l.validate_for(&cfg.geometry)?;
            Ok(l)
        }
        None => experiments::layout_for(cfg),
    }
}

fn read_pattern(path: Option<&Path>, cfg: &Config) -> Result<LedPattern> {
    match path {
        None => Ok(LedPattern::all_on(&cfg.geometry)),
        Some(p) => {
            let pat = LedPattern::from_pgm(&read_bytes(p)?)?;
            pat.matches(&cfg.geometry)?;
            Ok(pat)
        }
    }
}

/// Runs a parsed command line; `argv` is recorded in the manifest.
pub fn run(cli: &Cli, argv: Vec<String>) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let mut cfg = load(cli)?;
    let mut out = OutDir::new(&cli.out_dir, argv);
    let mut o = Outcome::default();
    match &cli.command {
        Command::OptimizeLayout { alpha, sectors, rmax, out: file, trace, timing } => {
            if let Some(a) = alpha {
                cfg.solver.alpha = *a;
            }
            if let Some(s) = sectors {
                cfg.solver.sectors = *s;
            }
            if let Some(r) = rmax {
                cfg.solver.r_max = Some(*r);
            }
            let mut p = OptimizerParams::from_config(&cfg);
            p.timing = *timing;
            let opt = optimize_layout(&cfg.geometry, &p)?;
            out.write(file, opt.layout.to_csv().as_bytes())?;
            if let Some(t) = trace {
                out.write(t, trace_to_csv(&opt.trace).as_bytes())?;
            }
            o.lines.push(format!(
                "{} lenses, D_min {:.4} mm, Q_vmr {:.4}",
                opt.layout.len(),
                opt.state.dmin(),
                opt.state.q_vmr()
            ));
        }
        Command::PeriodicBaseline { r#match, out: file } => {
            let l = match r#match {
                Some(n) => periodic_matched(&cfg.geometry, &cfg.lens, *n, 0.1)?.0,
                None => periodic_baseline(&cfg.geometry, &cfg.lens),
            };
            out.write(file, l.to_csv().as_bytes())?;
            o.lines.push(format!("{} lenses", l.len()));
        }
        Command::Render { layout: la, pattern, out: file, profile } => {
            let l = layout(&cfg, la)?;
            let p = read_pattern(pattern.as_deref(), &cfg)?;
            let map = render(&cfg, &l, &p, &cfg.scene)?;
            let (pgm, side) = map.to_pgm();
            out.write(file, &pgm)?;
            out.write_json(file.with_extension("json"), &side)?;
            if let Some(pf) = profile {
                let r = cfg.floor.rect;
                let prof = line_profile(&map, Vec2::new(r.x_min, 0.0), Vec2::new(r.x_max, 0.0), cfg.floor.cell);
                out.write(pf, profile_to_csv(&prof).as_bytes())?;
            }
            o.lines.push(format!("max {:.6e}, mean {:.6e}", side.max, side.mean));
        }
        Command::Pattern { layout: la, method, out: file, tau, dilate, iters } => {
            if let Some(t) = tau {
                cfg.solver.tau = *t;
            }
            if let Some(d) = dilate {
                cfg.solver.dilation = *d;
            }
            if let Some(i) = iters {
                cfg.solver.ltm_iterations = *i;
            }
            cfg.solver.validate()?;
            let l = layout(&cfg, la)?;
            let p = compute_pattern(*method, &l, &cfg, &cfg.scene)?;
            out.write(file, &p.to_pgm())?;
            o.lines.push(format!("{}: {} of {} pixels off", method.name(), p.off_count(), p.len()));
        }
        Command::Metrics { layout: la, pattern, out: file } => {
            let l = layout(&cfg, la)?;
            let p = read_pattern(pattern.as_deref(), &cfg)?;
            let map = render(&cfg, &l, &p, &cfg.scene)?;
            let u = uniformity(&map, &map.env_mask)?;
            let mut csv = String::from("metric,value\n");
            let _ = writeln!(csv, "env_mean,{}", u.mean);
            let _ = writeln!(csv, "env_stdev,{}", u.stdev);
            let _ = writeln!(csv, "env_cv,{}", u.cv);
            let _ = writeln!(csv, "env_min_over_mean,{}", u.min_over_mean);
            if map.target_mask.iter().any(|&t| t) {
                let _ = writeln!(csv, "target_leakage,{}", target_leakage(&map, &map.target_mask)?);
            }
            let _ = writeln!(csv, "lenses,{}", l.len());
            out.write(file, csv.as_bytes())?;
            o.lines.push(format!("environment CV {:.4}", u.cv));
        }
        Command::Mtf { layout: la, out: file } => {
            let l = layout(&cfg, la)?;
            let pts = experiments::mtf(&cfg, &l)?;
            out.write(file, crate::illumination::mtf_to_csv(&pts).as_bytes())?;
            for p in &pts {
                o.lines.push(format!("{:.4} cyc/mm: {:.4}", p.frequency, p.contrast));
            }
        }
        Command::Shadow { layout: la, single, out: file } => {
            let mut l = layout(&cfg, la)?;
            if *single {
                let c = l
                    .lenses
                    .iter()
                    .min_by(|a, b| a.center.norm().total_cmp(&b.center.norm()))
                    .copied()
                    .ok_or(Error::Empty("lens layout"))?;
                l.lenses = vec![c];
            }
            let (from, to) = shadow_line();
            let prof = shadow_profile(
                &l,
                &LedPattern::all_on(&cfg.geometry),
                &cfg.geometry,
                &shadow_occluder(),
                from,
                to,
                1.0,
                &render_options(&cfg),
            )?;
            out.write(file, profile_to_csv(&prof.points).as_bytes())?;
            o.lines.push(match prof.penumbra {
                Some(w) => format!("penumbra (20-80%) {w:.3} mm"),
                None => "no complete 20-80% edge on the profile".into(),
            });
        }
        Command::BenchDynamic { layout: la, frames, trajectory, out: file, dump_patterns } => {
            let l = layout(&cfg, la)?;
            let traj = match trajectory {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    Trajectory::from_csv(&text, *frames)?
                }
                None => Trajectory::circle(*frames, 100.0)?,
            };
            let run = bench_dynamic(&l, &cfg.geometry, &cfg.scene.markers, &traj, cfg.solver.dilation, true)?;
            out.write(file, run.report.to_csv().as_bytes())?;
            out.write("frames.csv", frames_to_csv(&traj, &run.patterns).as_bytes())?;
            if *dump_patterns {
                for (i, p) in run.patterns.iter().enumerate() {
                    out.write(format!("frames/{i:05}.pgm"), &p.to_pgm())?;
                }
            }
            let r = &run.report;
            o.lines.push(format!(
                "{} frames, {} lenses, {} markers: p50 {:.3} ms, p95 {:.3} ms, max {:.3} ms, {} over budget",
                traj.len(),
                l.len(),
                cfg.scene.markers.len(),
                r.p50,
                r.p95,
                r.max,
                r.missed
            ));
            o.lines.push(format!("machine: {}", machine_info()));
        }
        Command::Reproduce { figure, timing } => {
            let checks = reproduce(*figure, &cfg, &mut out, *timing)?;
            for c in &checks {
                o.lines.push(format!(
                    "{} {}: {} (want {})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.bound
                ));
            }
            o.failed_checks = checks.iter().filter(|c| !c.pass).count();
        }
    }
    let m = out.finish()?;
    o.lines.push(format!("manifest: {}", m.display()));
    Ok(o)
}

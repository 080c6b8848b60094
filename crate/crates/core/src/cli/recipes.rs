//! `reproduce` recipes: each runs one study at the configured scale, writes
//! its images and CSVs and returns pass/fail checks.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use super::experiments::{self, MTF_FREQUENCIES};
use super::manifest::OutDir;
use crate::error::{Error, Result};
use crate::illumination::{mtf_to_csv, profile_to_csv, IrradianceMap, LedPattern};
use crate::math::Vec2;
use crate::patterns::Method;
use crate::placement::{optimize_layout, periodic_baseline, trace_to_csv, OptimizerParams};
use crate::scene::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig11,
    Mtf,
}

impl Figure {
    pub const ALL: [Figure; 7] =
        [Figure::Fig5, Figure::Fig6, Figure::Fig7, Figure::Fig8, Figure::Fig9, Figure::Fig11, Figure::Mtf];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
            Figure::Fig11 => "fig11",
            Figure::Mtf => "mtf",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| Error::Unknown { what: "figure", name: s.into() })
    }
}

/// One verdict against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, bound: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value, bound: bound.into(), pass }
    }
}

pub fn checks_to_csv(checks: &[Check]) -> String {
    let mut s = String::from("check,value,bound,pass\n");
    for c in checks {
        let _ = writeln!(s, "{},{},{},{}", c.name, c.value, c.bound, c.pass);
    }
    s
}

fn write_map(out: &mut OutDir, stem: &str, map: &IrradianceMap) -> Result<()> {
    let (pgm, side) = map.to_pgm();
    out.write(format!("{stem}.pgm"), &pgm)?;
    out.write_json(format!("{stem}.json"), &side)?;
    Ok(())
}

fn write_pattern(out: &mut OutDir, stem: &str, p: &LedPattern) -> Result<()> {
    out.write(format!("{stem}.pgm"), &p.to_pgm())?;
    Ok(())
}

fn points_csv(pts: &[Vec2]) -> String {
    let mut s = String::from("x_mm,y_mm\n");
    for p in pts {
        let _ = writeln!(s, "{},{}", p.x, p.y);
    }
    s
}

/// Lens-count bands scaled by plate area from the full-size 660 x 320 mm plate.
pub fn count_bands(cfg: &Config) -> ((f64, f64), (f64, f64)) {
    let k = cfg.geometry.placement_region.area() / (660.0 * 320.0);
    ((103.0 * k, 119.0 * k), (160.0 * k, 175.0 * k))
}

/// Runs one recipe, writing its artifacts under `out`. Timing-dependent
/// columns are written only when `timing` is set, so outputs stay
/// reproducible by default.
pub fn reproduce(fig: Figure, cfg: &Config, out: &mut OutDir, timing: bool) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    match fig {
        Figure::Fig5 => {
            let t = Instant::now();
            let mut p = OptimizerParams::from_config(cfg);
            p.timing = timing;
            let opt = optimize_layout(&cfg.geometry, &p)?;
            let secs = t.elapsed().as_secs_f64();
            let periodic = periodic_baseline(&cfg.geometry, &cfg.lens);
            out.write("fig5/aperiodic_layout.csv", opt.layout.to_csv().as_bytes())?;
            out.write("fig5/aperiodic_crosstalk.csv", points_csv(opt.state.crosstalk()).as_bytes())?;
            out.write("fig5/periodic_layout.csv", periodic.to_csv().as_bytes())?;
            let (a, b) = count_bands(cfg);
            let n = opt.layout.len() as f64;
            let m = periodic.len() as f64;
            checks.push(Check::new("aperiodic_lenses", n, format!("[{:.1}, {:.1}]", a.0, a.1), n >= a.0 && n <= a.1));
            checks.push(Check::new("periodic_lenses", m, format!("[{:.1}, {:.1}]", b.0, b.1), m >= b.0 && m <= b.1));
            if timing {
                checks.push(Check::new("optimize_seconds", secs, "<= 120", secs <= 120.0));
            }
        }
        Figure::Fig6 => {
            let mut finals = Vec::new();
            for alpha in [0.0, 0.3, 0.5, 1.0] {
                let mut p = OptimizerParams::from_config(cfg);
                p.alpha = alpha;
                p.timing = timing;
                let opt = optimize_layout(&cfg.geometry, &p)?;
                out.write(format!("fig6/trace_alpha_{alpha}.csv"), trace_to_csv(&opt.trace).as_bytes())?;
                finals.push((alpha, opt));
            }
            let get = |a: f64| &finals.iter().find(|f| f.0 == a).expect("alpha run").1;
            let (o0, o5, o1) = (get(0.0), get(0.5), get(1.0));
            let (d0, d5, d1) = (o0.state.dmin(), o5.state.dmin(), o1.state.dmin());
            let (q0, q5, q1) = (o0.state.q_vmr(), o5.state.q_vmr(), o1.state.q_vmr());
            checks.push(Check::new("dmin_alpha0_le_alpha0.5", d5 - d0, ">= 0", d0 <= d5));
            checks.push(Check::new("dmin_alpha0.5_le_alpha1", d1 - d5, ">= 0", d5 <= d1));
            checks.push(Check::new("qvmr_alpha0_ge_alpha0.5", q0 - q5, ">= 0", q0 >= q5));
            checks.push(Check::new("qvmr_alpha0.5_ge_alpha1", q5 - q1, ">= 0", q5 >= q1));
            let z0 = o0.hit_zero_dmin();
            let z1 = o1.hit_zero_dmin();
            checks.push(Check::new("alpha0_reaches_zero_dmin", z0 as u8 as f64, "= 1", z0));
            checks.push(Check::new("alpha1_never_zero_dmin", z1 as u8 as f64, "= 0", !z1));
        }
        Figure::Fig7 => {
            let layout = experiments::layout_for(cfg)?;
            let d = experiments::dark_spots(cfg, &layout)?;
            write_map(out, "fig7/aperiodic_map", &d.maps[0])?;
            write_map(out, "fig7/periodic_map", &d.maps[1])?;
            out.write("fig7/aperiodic_profile.csv", profile_to_csv(&d.profiles[0]).as_bytes())?;
            out.write("fig7/periodic_profile.csv", profile_to_csv(&d.profiles[1]).as_bytes())?;
            out.write_json("fig7/uniformity.json", &d)?;
            let gap = d.aperiodic_lenses.abs_diff(d.periodic_lenses) as f64 / d.aperiodic_lenses as f64;
            checks.push(Check::new("lens_count_mismatch", gap, "<= 0.10", gap <= 0.10));
            checks.push(Check::new("cv_ratio", d.ratio, "<= 0.80 (+0.05)", d.ratio <= 0.85));
        }
        Figure::Fig8 => {
            let layout = experiments::layout_for(cfg)?;
            let (c, patterns) = experiments::contrast(cfg, &layout)?;
            for (m, p) in &patterns {
                write_pattern(out, &format!("fig8/pattern_{}", m.name()), p)?;
            }
            let mut csv = String::from("condition,rms_contrast\n");
            let _ = writeln!(csv, "dark_room,{}", c.dark_room);
            let _ = writeln!(csv, "all_on,{}", c.all_on);
            for (m, v) in &c.methods {
                let _ = writeln!(csv, "{},{v}", m.name());
            }
            out.write("fig8/contrast.csv", csv.as_bytes())?;
            for (m, v) in &c.methods {
                let r = v / c.dark_room;
                checks.push(Check::new(&format!("{}_over_dark_room", m.name()), r, ">= 0.8", r >= 0.8));
                let r = v / c.all_on;
                checks.push(Check::new(&format!("{}_over_all_on", m.name()), r, ">= 1.6", r >= 1.6));
            }
            let s = c.spread();
            checks.push(Check::new("method_spread", s, "< 0.10", s < 0.10));
        }
        Figure::Fig9 => {
            let layout = experiments::layout_for(cfg)?;
            let (l, patterns) = experiments::mirror_leakage(cfg, &layout)?;
            for (m, p) in &patterns {
                write_pattern(out, &format!("fig9/pattern_{}", m.name()), p)?;
            }
            let mut csv = String::from("condition,target_leakage\n");
            let _ = writeln!(csv, "all_on,{}", l.all_on);
            for (m, v) in &l.methods {
                let _ = writeln!(csv, "{},{v}", m.name());
            }
            out.write("fig9/leakage.csv", csv.as_bytes())?;
            let (g, r, t) = (l.get(Method::Geometry), l.get(Method::Raytrace), l.get(Method::Ltm));
            checks.push(Check::new("geometry_over_raytrace", g / r, "> 1.5", g > 1.5 * r));
            let excess = (t - r) / l.all_on;
            checks.push(Check::new("ltm_minus_raytrace_over_all_on", excess, "<= 0.05", excess <= 0.05));
        }
        Figure::Fig11 => {
            let layout = experiments::layout_for(cfg)?;
            let s = experiments::shadows(cfg, &layout)?;
            out.write("fig11/single_lens_profile.csv", profile_to_csv(&s.single_lens.points).as_bytes())?;
            out.write("fig11/all_lenses_profile.csv", profile_to_csv(&s.all_lenses.points).as_bytes())?;
            let soft = s.softening().unwrap_or(f64::NAN);
            checks.push(Check::new("penumbra_ratio", soft, ">= 5", soft >= 5.0));
        }
        Figure::Mtf => {
            let layout = experiments::layout_for(cfg)?;
            let pts = experiments::mtf(cfg, &layout)?;
            out.write("mtf/mtf.csv", mtf_to_csv(&pts).as_bytes())?;
            let worst_rise = pts.windows(2).map(|w| w[1].contrast - w[0].contrast).fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::new("max_rise", worst_rise, "<= 0", worst_rise <= 0.0));
            checks.push(Check::new("dc_gain", pts[0].contrast, ">= 0.99", pts[0].contrast >= 0.99));
            let at = MTF_FREQUENCIES.iter().position(|&f| f == 0.005).expect("0.005 sampled");
            let c = pts[at].contrast;
            checks.push(Check::new("contrast_at_0.005", c, ">= 0.8 (-0.1)", c >= 0.7));
        }
    }
    out.write(format!("{}/summary.csv", fig.name()), checks_to_csv(&checks).as_bytes())?;
    Ok(checks)
}

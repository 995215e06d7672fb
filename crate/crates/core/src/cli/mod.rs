//! Configuration parsing and command execution for the `qrdyn` binary.
//!
//! A configuration is a flat text document of `key = value` lines. `#`
//! starts a comment, blank lines are ignored, keys may appear at most once
//! and unknown keys are rejected. Command-line `KEY=VALUE` arguments are
//! applied on top of the file.

mod config;

pub use config::{parse_complex, parse_config, parse_pairs, parse_with_overrides, Command, RunConfig, KEYS};

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dilatation::{scan_dilatation, ScanRegion};
use crate::error::{Error, Result};
use crate::grids::{
    bounded_component, escape_grid, growth_ratio, label_components, sample_annulus, CoverageScanner,
};
use crate::maps::{eval_l, MapKind};
use crate::orbits::{classify, find_sign_flip, iterate};
use crate::report::{self, BatchRow};
use crate::verify::run_suite;

/// Environment variable that replaces `out_dir`.
pub const OUT_DIR_ENV: &str = "QRDYN_OUT_DIR";

/// What a completed run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// One-line human summary ending in `digest=<hex>`.
    pub line: String,
    pub outputs: Vec<PathBuf>,
    /// SHA-256 over the output files in order.
    pub digest: String,
    /// Extra lines printed before the summary (per-invariant results).
    pub details: Vec<String>,
    /// Failed invariants of a `verify` run.
    pub failures: usize,
}

struct Output {
    name: String,
    bytes: Vec<u8>,
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let result = (|| {
        fs::create_dir_all(dir)?;
        for o in outputs {
            let path = dir.join(&o.name);
            written.push(path.clone());
            fs::write(&path, &o.bytes)?;
        }
        Ok::<_, Error>(())
    })();
    if let Err(e) = result {
        for p in &written {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(written)
}

fn fmt_z(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

/// Executes `cfg`, writing outputs under `out_dir_override` if given, else
/// under `cfg.out_dir`. Nothing is left on disk when an error is returned.
pub fn run(cfg: &RunConfig, out_dir_override: Option<&Path>) -> Result<RunSummary> {
    cfg.map.validate()?;
    let p = &cfg.prefix;
    let mut outputs = vec![Output {
        name: format!("{p}config.txt"),
        bytes: cfg.echo().into_bytes(),
    }];
    let mut details = Vec::new();
    let mut failures = 0;
    let head = format!("{} map={}", cfg.command.name(), cfg.map.kind);

    let info = match cfg.command {
        Command::Orbit => {
            let mut info = String::new();
            if cfg.map.kind != MapKind::Cyl3d {
                let orbit = iterate(&cfg.map, cfg.z0, &cfg.policy)?;
                info = format!(
                    "z0={} class={} iterations={} returns={}",
                    fmt_z(cfg.z0),
                    orbit.classification,
                    orbit.iterations_used,
                    orbit.returns
                );
                outputs.push(Output {
                    name: format!("{p}orbit.csv"),
                    bytes: csv_bytes(|b| report::write_orbit_trace(b, &orbit))?,
                });
            } else if cfg.batch_annulus.is_none() {
                return Err(Error::Unsupported("orbits of f3d are not classified".into()));
            }
            if let Some(n) = cfg.batch_annulus {
                let starts = sample_annulus(n, cfg.batch_count, cfg.seed, false)?;
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers)
                    .build()
                    .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
                let rows: Vec<BatchRow> = pool.install(|| {
                    starts
                        .par_iter()
                        .map(|&z| {
                            let start = if cfg.batch_image {
                                eval_l(z.into()).finite().unwrap_or(z)
                            } else {
                                z
                            };
                            let sign_flip_index = if cfg.map.kind == MapKind::PlanarG && z.re > 0.0 {
                                find_sign_flip(z, cfg.map.params.c, cfg.policy.budget)
                                    .ok()
                                    .and_then(|s| s.index())
                            } else {
                                None
                            };
                            BatchRow {
                                start,
                                summary: classify(&cfg.map, start, &cfg.policy),
                                sign_flip_index,
                            }
                        })
                        .collect()
                });
                let returning = rows
                    .iter()
                    .filter(|r| r.summary.classification == crate::orbits::Classification::Returning)
                    .count();
                info = format!("{info} batch=A_{n}x{} returning={returning}", rows.len())
                    .trim()
                    .to_string();
                outputs.push(Output {
                    name: format!("{p}batch.csv"),
                    bytes: csv_bytes(|b| report::write_batch(b, &rows))?,
                });
            }
            info
        }
        Command::Grid | Command::Components => {
            let grid = escape_grid(&cfg.map, cfg.window, cfg.nx, cfg.ny, &cfg.policy, cfg.workers)?;
            let comps = label_components(&grid, cfg.which, cfg.dilate, &cfg.markers);
            let mut info = format!("{}x{} components={}", cfg.nx, cfg.ny, comps.reports.len());
            if let Some(&m) = cfg.markers.first() {
                if grid.window.contains(m) {
                    let b = bounded_component(&grid, m)?;
                    info += &format!(" marker={} bounded={}", fmt_z(m), b.bounded());
                }
            }
            if cfg.command == Command::Grid {
                outputs.push(Output {
                    name: format!("{p}grid.pgm"),
                    bytes: report::pgm(&grid),
                });
                outputs.push(Output {
                    name: format!("{p}grid.ppm"),
                    bytes: report::ppm(&grid),
                });
            }
            outputs.push(Output {
                name: format!("{p}components.csv"),
                bytes: csv_bytes(|b| report::write_components(b, &comps.reports))?,
            });
            info
        }
        Command::Dilatation => {
            let region = if cfg.map.kind == MapKind::Cyl3d {
                ScanRegion::Cylinder {
                    r_min: cfg.region_rmin,
                    r_max: cfg.region_rmax,
                    x3_min: cfg.region_x3min,
                    x3_max: cfg.region_x3max,
                }
            } else {
                ScanRegion::Annulus {
                    r_min: cfg.region_rmin,
                    r_max: cfg.region_rmax,
                }
            };
            let s = scan_dilatation(&cfg.map, region, cfg.samples, cfg.step, cfg.seed)?;
            outputs.push(Output {
                name: format!("{p}dilatation.csv"),
                bytes: csv_bytes(|b| report::write_dilatation(b, &s.reports))?,
            });
            format!(
                "samples={} max_k={} unreliable={} oscillation_excluded={}",
                s.samples, s.max_k, s.unreliable, s.oscillation_excluded
            )
        }
        Command::Growth => {
            let curve = growth_ratio(&cfg.map, &cfg.radii, cfg.samples)?;
            outputs.push(Output {
                name: format!("{p}growth.csv"),
                bytes: csv_bytes(|b| report::write_growth(b, &curve))?,
            });
            let last = curve.ratios.last().copied().unwrap_or(f64::NAN);
            format!("radii={} final_ratio={last:e}", curve.radii.len())
        }
        Command::Coverage => {
            let scanner = CoverageScanner::new(&cfg.map, cfg.inner_radius, cfg.outer_radius)?;
            let (radius, extra) = match cfg.target_radius {
                Some(l) => (l, String::new()),
                None => {
                    let m = scanner.max_covered(cfg.l_min, cfg.l_max, cfg.scan_steps, cfg.bisections, cfg.targets)?;
                    match m.l_star {
                        Some(l) => (l, format!(" l_star={l:e}")),
                        None => (cfg.l_min, " l_star=none".to_string()),
                    }
                }
            };
            let res = scanner.coverage(radius, cfg.targets)?;
            outputs.push(Output {
                name: format!("{p}witnesses.csv"),
                bytes: csv_bytes(|b| report::write_witnesses(b, &res))?,
            });
            format!("L={radius:e} fraction={}{extra}", res.fraction)
        }
        Command::Verify => {
            let checks = run_suite(cfg.suite, cfg.seed)?;
            let mut text = String::new();
            for c in &checks {
                details.push(c.to_string());
                text += &format!("{c}\n");
            }
            failures = checks.iter().filter(|c| !c.passed).count();
            outputs.push(Output {
                name: format!("{p}verify.txt"),
                bytes: text.into_bytes(),
            });
            format!("suite={} passed={} failed={failures}", cfg.suite.name(), checks.len() - failures)
        }
    };

    let digest = report::digest(outputs.iter().flat_map(|o| [o.name.as_bytes(), o.bytes.as_slice()]));
    let dir = out_dir_override.unwrap_or(&cfg.out_dir);
    let paths = write_outputs(dir, &outputs)?;
    Ok(RunSummary {
        line: format!("{head} {info} digest={digest}"),
        outputs: paths,
        digest,
        details,
        failures,
    })
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grids::Window;
use crate::maps::{MapKind, MapParams, MapSpec};
use crate::orbits::{Classification, EscapePolicy};
use crate::verify::Suite;

/// Subcommand selected by the `command` key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Orbit,
    Grid,
    Components,
    Dilatation,
    Growth,
    Coverage,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Orbit,
        Command::Grid,
        Command::Components,
        Command::Dilatation,
        Command::Growth,
        Command::Coverage,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Grid => "grid",
            Command::Components => "components",
            Command::Dilatation => "dilatation",
            Command::Growth => "growth",
            Command::Coverage => "coverage",
            Command::Verify => "verify",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Recognised configuration keys.
pub const KEYS: &[&str] = &[
    "command",
    "map",
    "c",
    "d",
    "lambda",
    "z0",
    "escape_radius",
    "budget",
    "persistence",
    "window",
    "nx",
    "ny",
    "which",
    "dilate",
    "markers",
    "radii",
    "samples",
    "inner_radius",
    "outer_radius",
    "target_radius",
    "targets",
    "l_min",
    "l_max",
    "scan_steps",
    "bisections",
    "step",
    "region_rmin",
    "region_rmax",
    "region_x3min",
    "region_x3max",
    "seed",
    "suite",
    "out_dir",
    "prefix",
    "workers",
    "batch_annulus",
    "batch_count",
    "batch_image",
];

/// Fully validated run description with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub map: MapSpec,
    pub policy: EscapePolicy,
    pub z0: Complex64,
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub which: Classification,
    pub dilate: bool,
    pub markers: Vec<Complex64>,
    pub radii: Vec<f64>,
    pub samples: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Fixed target radius; `None` runs the largest-covered-radius scan.
    pub target_radius: Option<f64>,
    pub targets: usize,
    pub l_min: f64,
    pub l_max: f64,
    pub scan_steps: usize,
    pub bisections: usize,
    pub step: Option<f64>,
    pub region_rmin: f64,
    pub region_rmax: f64,
    pub region_x3min: f64,
    pub region_x3max: f64,
    pub seed: u64,
    pub suite: Suite,
    pub out_dir: PathBuf,
    pub prefix: String,
    pub workers: usize,
    pub batch_annulus: Option<u32>,
    pub batch_count: usize,
    /// Push batch samples through `L` before iterating.
    pub batch_image: bool,
}

/// Raw `key = value` entries in file order, with their line numbers.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("malformed key `{k}`"),
            });
        }
        if let Some((_, _, first)) = out.iter().find(|(key, _, _)| key == k) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key `{k}` (first set on line {first})"),
            });
        }
        out.push((k.to_string(), v.to_string(), line_no));
    }
    Ok(out)
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also with `j`) or `a,b`.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some((a, b)) = s.split_once(',') {
        return Some(Complex64::new(a.parse().ok()?, b.parse().ok()?));
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Some(Complex64::new(s.parse().ok()?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| -> Option<f64> {
        match t {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => t.parse().ok(),
        }
    };
    match split {
        Some(k) => Some(Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

fn fmt_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

struct Reader {
    values: BTreeMap<String, String>,
}

impl Reader {
    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::validation(key, format!("cannot parse `{v}`"))),
        }
    }

    fn float(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.parse(key, default)?;
        if !v.is_finite() {
            return Err(Error::validation(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.float(key, default)?;
        if !(v > 0.0) {
            return Err(Error::validation(key, format!("must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize, min: usize) -> Result<usize> {
        let v = self.parse(key, default)?;
        if v < min {
            return Err(Error::validation(key, format!("must be at least {min}, got {v}")));
        }
        Ok(v)
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|f| f.is_finite())
                            .ok_or_else(|| Error::validation(key, format!("cannot parse `{x}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn complex(&self, key: &str, default: Complex64) -> Result<Complex64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_complex(v)
                .filter(|z| z.re.is_finite() && z.im.is_finite())
                .ok_or_else(|| Error::validation(key, format!("cannot parse complex number `{v}`"))),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::validation(key, format!("expected true or false, got `{v}`"))),
        }
    }
}

impl RunConfig {
    /// Builds a config from key-value entries; later entries win.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in entries {
            if !KEYS.contains(&k) {
                return Err(Error::validation(k, "unknown key"));
            }
            values.insert(k.to_string(), v.to_string());
        }
        let r = Reader { values };

        let command_name = r
            .get("command")
            .ok_or_else(|| Error::validation("command", "missing"))?;
        let command = Command::from_name(command_name)
            .ok_or_else(|| Error::validation("command", format!("unknown command `{command_name}`")))?;

        let map_name = r.get("map").unwrap_or(match command {
            Command::Dilatation => "g",
            _ => "f",
        });
        let kind = MapKind::from_name(map_name)
            .ok_or_else(|| Error::validation("map", format!("unknown map `{map_name}`")))?;
        let params = MapParams {
            c: r.float("c", crate::maps::DEFAULT_C)?,
            d: r.float("d", crate::maps::DEFAULT_D)?,
            lambda: r.float("lambda", crate::maps::DEFAULT_LAMBDA)?,
        };
        let map = MapSpec::new(kind, params);
        // every parameter is validated, used or not
        params.validate()?;

        let policy = EscapePolicy {
            escape_radius: r.float("escape_radius", 1e3)?,
            budget: r.count("budget", 10_000, 1)?,
            persistence: r.count("persistence", 10, 1)?,
        };
        policy.validate()?;

        let nx = r.count("nx", 512, 2)?;
        let ny = r.count("ny", nx, 2)?;
        let window = match r.floats("window")? {
            None => Window::aligned(Complex64::new(2.0, 0.0), 4.0 / nx as f64, nx, ny)?,
            Some(v) if v.len() == 4 => Window::new(v[0], v[1], v[2], v[3])?,
            Some(_) => return Err(Error::validation("window", "expected xmin,xmax,ymin,ymax")),
        };

        let which_name = r.get("which").unwrap_or("ESCAPING");
        let which = Classification::from_name(which_name)
            .ok_or_else(|| Error::validation("which", format!("unknown classification `{which_name}`")))?;

        let markers = match r.get("markers") {
            None => vec![Complex64::new(2.0, 0.0)],
            Some("") => Vec::new(),
            Some(v) => v
                .split(';')
                .map(|m| {
                    parse_complex(m).ok_or_else(|| Error::validation("markers", format!("cannot parse `{m}`")))
                })
                .collect::<Result<_>>()?,
        };

        let radii = r.floats("radii")?.unwrap_or_else(|| vec![2.0, 2.5, 3.0]);
        if radii.is_empty() || radii.iter().any(|&x| !(x > 0.0)) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("radii", "must be positive and strictly increasing"));
        }

        let default_samples = match command {
            Command::Growth => 1024,
            _ => 10_000,
        };
        let samples = r.count("samples", default_samples, if command == Command::Growth { 16 } else { 1 })?;

        let inner_radius = r.positive("inner_radius", 1.0)?;
        let outer_radius = r.positive("outer_radius", 4.0)?;
        if !(outer_radius > inner_radius) {
            return Err(Error::validation("outer_radius", "must exceed inner_radius"));
        }
        let target_radius = match r.get("target_radius") {
            None => None,
            Some(_) => Some(r.positive("target_radius", 1.0)?),
        };
        let l_min = r.positive("l_min", outer_radius)?;
        let l_max = r.positive("l_max", 1e120)?;
        if !(l_max > l_min) {
            return Err(Error::validation("l_max", "must exceed l_min"));
        }

        let step = match r.get("step") {
            None => None,
            Some(_) => Some(r.positive("step", 1.0)?),
        };
        let (rmin_default, rmax_default) = if kind == MapKind::Cyl3d { (0.5, 4.0) } else { (0.25, 0.75) };
        let region_rmin = r.float("region_rmin", rmin_default)?;
        let region_rmax = r.float("region_rmax", rmax_default)?;
        if !(region_rmin >= 0.0 && region_rmax > region_rmin) {
            return Err(Error::validation("region_rmax", "need 0 <= region_rmin < region_rmax"));
        }
        let region_x3min = r.float("region_x3min", -1.0)?;
        let region_x3max = r.float("region_x3max", 1.0)?;
        if !(region_x3max >= region_x3min) {
            return Err(Error::validation("region_x3max", "must be at least region_x3min"));
        }

        let suite_name = r.get("suite").unwrap_or("all");
        let suite = Suite::from_name(suite_name)
            .ok_or_else(|| Error::validation("suite", format!("unknown suite `{suite_name}`")))?;

        let prefix = r.get("prefix").unwrap_or("").to_string();
        if prefix.contains(['/', '\\']) {
            return Err(Error::validation("prefix", "must not contain path separators"));
        }

        let batch_annulus = match r.get("batch_annulus") {
            None => None,
            Some(_) => Some(r.count("batch_annulus", 2, 2)? as u32),
        };

        Ok(RunConfig {
            command,
            map,
            policy,
            z0: r.complex("z0", Complex64::new(2.0, 0.0))?,
            window,
            nx,
            ny,
            which,
            dilate: r.flag("dilate", true)?,
            markers,
            radii,
            samples,
            inner_radius,
            outer_radius,
            target_radius,
            targets: r.count("targets", 256, 1)?,
            l_min,
            l_max,
            scan_steps: r.count("scan_steps", 60, 2)?,
            bisections: r.count("bisections", 30, 0)?,
            step,
            region_rmin,
            region_rmax,
            region_x3min,
            region_x3max,
            seed: r.parse("seed", 0u64)?,
            suite,
            out_dir: PathBuf::from(r.get("out_dir").unwrap_or(".")),
            prefix,
            workers: r.parse("workers", 0usize)?,
            batch_annulus,
            batch_count: r.count("batch_count", 100, 1)?,
            batch_image: r.flag("batch_image", kind != MapKind::PlanarG)?,
        })
    }

    /// The config as a document that parses back to itself.
    pub fn echo(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let w = &self.window;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("command", self.command.name().into());
        put("map", self.map.kind.name().into());
        put("c", self.map.params.c.to_string());
        put("d", self.map.params.d.to_string());
        put("lambda", self.map.params.lambda.to_string());
        put("z0", fmt_complex(self.z0));
        put("escape_radius", self.policy.escape_radius.to_string());
        put("budget", self.policy.budget.to_string());
        put("persistence", self.policy.persistence.to_string());
        put("window", join(&[w.xmin, w.xmax, w.ymin, w.ymax]));
        put("nx", self.nx.to_string());
        put("ny", self.ny.to_string());
        put("which", self.which.name().into());
        put("dilate", self.dilate.to_string());
        put(
            "markers",
            self.markers.iter().map(|z| fmt_complex(*z)).collect::<Vec<_>>().join(";"),
        );
        put("radii", join(&self.radii));
        put("samples", self.samples.to_string());
        put("inner_radius", self.inner_radius.to_string());
        put("outer_radius", self.outer_radius.to_string());
        if let Some(l) = self.target_radius {
            put("target_radius", l.to_string());
        }
        put("targets", self.targets.to_string());
        put("l_min", self.l_min.to_string());
        put("l_max", self.l_max.to_string());
        put("scan_steps", self.scan_steps.to_string());
        put("bisections", self.bisections.to_string());
        if let Some(h) = self.step {
            put("step", h.to_string());
        }
        put("region_rmin", self.region_rmin.to_string());
        put("region_rmax", self.region_rmax.to_string());
        put("region_x3min", self.region_x3min.to_string());
        put("region_x3max", self.region_x3max.to_string());
        put("seed", self.seed.to_string());
        put("suite", self.suite.name().into());
        put("out_dir", self.out_dir.display().to_string());
        put("prefix", self.prefix.clone());
        put("workers", self.workers.to_string());
        if let Some(n) = self.batch_annulus {
            put("batch_annulus", n.to_string());
        }
        put("batch_count", self.batch_count.to_string());
        put("batch_image", self.batch_image.to_string());
        s
    }
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let pairs = parse_pairs(text)?;
    RunConfig::from_entries(pairs.iter().map(|(k, v, _)| (k.as_str(), v.as_str())))
}

/// Parses a document, then applies `KEY=VALUE` overrides on top.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut entries: Vec<(String, String)> = parse_pairs(text)?
        .into_iter()
        .map(|(k, v, _)| (k, v))
        .collect();
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::validation(o, "override must be KEY=VALUE"))?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    RunConfig::from_entries(entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

//! Escape-time grids and the analyses built on them.

mod components;
mod coverage;
mod growth;

pub use components::{
    bounded_component, dilate, escape_route_blocked, label_components, refinement_disagreements,
    window_contains_ring, BoundedComponentCheck, ComponentReport, Components,
};
pub use coverage::{circle_coverage, CoverageResult, CoverageScanner, CoverageWitness, MaxCovered};
pub use growth::{growth_ratio, max_modulus, GrowthCurve};

use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{Annulus, MapSpec};
use crate::orbits::{classify, Classification, EscapePolicy};

/// Axis-aligned rectangle of the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Window {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let w = Window { xmin, xmax, ymin, ymax };
        w.validate()?;
        Ok(w)
    }

    /// Window of `nx` by `ny` cells of side `cell` in which `center` is the
    /// exact center of cell `(nx/2, ny/2)`. Exact when `cell` and `center`
    /// are dyadic.
    pub fn aligned(center: Complex64, cell: f64, nx: usize, ny: usize) -> Result<Self> {
        let hx = (nx / 2) as f64 + 0.5;
        let hy = (ny / 2) as f64 + 0.5;
        Window::new(
            center.re - hx * cell,
            center.re - hx * cell + nx as f64 * cell,
            center.im - hy * cell,
            center.im - hy * cell + ny as f64 * cell,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.xmin, self.xmax, self.ymin, self.ymax].iter().all(|v| v.is_finite());
        if !finite || !(self.xmax > self.xmin) || !(self.ymax > self.ymin) {
            return Err(Error::validation("window", format!("degenerate window {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.xmin && z.re <= self.xmax && z.im >= self.ymin && z.im <= self.ymax
    }
}

/// One classified grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub class: Classification,
    /// First iteration of the escape, `-1` for non-escaping cells.
    pub escape_iteration: i64,
}

/// Classification of cell centers over a window; row `j = 0` is at `ymin`.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeGrid {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<Cell>,
    pub map: MapSpec,
    pub policy: EscapePolicy,
}

impl EscapeGrid {
    pub fn dx(&self) -> f64 {
        (self.window.xmax - self.window.xmin) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.window.ymax - self.window.ymin) / self.ny as f64
    }

    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        cell_center(&self.window, self.nx, self.ny, i, j)
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[j * self.nx + i]
    }

    /// Cell containing `z`, if inside the window.
    pub fn cell_of(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.window.contains(z) {
            return None;
        }
        let i = (((z.re - self.window.xmin) / self.dx()).floor() as usize).min(self.nx - 1);
        let j = (((z.im - self.window.ymin) / self.dy()).floor() as usize).min(self.ny - 1);
        Some((i, j))
    }

    pub fn count(&self, class: Classification) -> usize {
        self.cells.iter().filter(|c| c.class == class).count()
    }
}

fn cell_center(w: &Window, nx: usize, ny: usize, i: usize, j: usize) -> Complex64 {
    let dx = (w.xmax - w.xmin) / nx as f64;
    let dy = (w.ymax - w.ymin) / ny as f64;
    Complex64::new(w.xmin + (i as f64 + 0.5) * dx, w.ymin + (j as f64 + 0.5) * dy)
}

/// Rows per tile handed to one worker.
pub const TILE_ROWS: usize = 4;

fn classify_cell(map: &MapSpec, policy: &EscapePolicy, z: Complex64) -> Cell {
    let s = classify(map, z, policy);
    Cell {
        class: s.classification,
        escape_iteration: s.escape_iteration.map_or(-1, |k| k as i64),
    }
}

fn check_grid_args(map: &MapSpec, window: &Window, nx: usize, ny: usize, policy: &EscapePolicy) -> Result<()> {
    window.validate()?;
    policy.validate()?;
    if nx < 2 || ny < 2 {
        return Err(Error::validation("nx", "resolution must be at least 2 x 2"));
    }
    if map.kind == crate::maps::MapKind::Cyl3d {
        return Err(Error::Unsupported("escape grids are planar".into()));
    }
    Ok(())
}

/// Classifies rows `rows` of the grid; row-major within the band.
pub fn escape_grid_rows(
    map: &MapSpec,
    window: &Window,
    nx: usize,
    ny: usize,
    policy: &EscapePolicy,
    rows: Range<usize>,
) -> Result<Vec<Cell>> {
    check_grid_args(map, window, nx, ny, policy)?;
    if rows.end > ny {
        return Err(Error::Precondition(format!("rows {rows:?} exceed ny = {ny}")));
    }
    Ok(rows
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| classify_cell(map, policy, cell_center(window, nx, ny, i, j)))
        .collect())
}

/// Classifies every cell center, splitting rows into bands of [`TILE_ROWS`]
/// computed concurrently on `workers` threads (`0` = machine parallelism).
/// The result does not depend on `workers`.
pub fn escape_grid(
    map: &MapSpec,
    window: Window,
    nx: usize,
    ny: usize,
    policy: &EscapePolicy,
    workers: usize,
) -> Result<EscapeGrid> {
    check_grid_args(map, &window, nx, ny, policy)?;
    let mut cells = vec![
        Cell {
            class: Classification::Undetermined,
            escape_iteration: -1,
        };
        nx * ny
    ];
    let fill = |cells: &mut [Cell]| {
        cells
            .par_chunks_mut(nx * TILE_ROWS)
            .enumerate()
            .for_each(|(band, chunk)| {
                for (k, cell) in chunk.iter_mut().enumerate() {
                    let j = band * TILE_ROWS + k / nx;
                    let i = k % nx;
                    *cell = classify_cell(map, policy, cell_center(&window, nx, ny, i, j));
                }
            });
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    pool.install(|| fill(&mut cells));
    Ok(EscapeGrid {
        window,
        nx,
        ny,
        cells,
        map: *map,
        policy: *policy,
    })
}

/// Deterministic uniform points of the ring `A_n`, optionally restricted to
/// `Re z > 0`.
pub fn sample_annulus(n: u32, count: usize, seed: u64, right_half_only: bool) -> Result<Vec<Complex64>> {
    if count < 1 {
        return Err(Error::Precondition("count must be at least 1".into()));
    }
    let ring = Annulus::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(n) << 32));
    let (a2, b2) = (ring.rin * ring.rin, ring.rout * ring.rout);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = (a2 + rng.gen::<f64>() * (b2 - a2)).sqrt();
        let t = if right_half_only {
            rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2)
        } else {
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
        };
        let z = Complex64::from_polar(r, t);
        if r > ring.rin && r < ring.rout && (!right_half_only || z.re > 0.0) {
            out.push(z);
        }
    }
    Ok(out)
}

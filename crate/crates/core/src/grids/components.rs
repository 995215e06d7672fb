use std::collections::VecDeque;

use num_complex::Complex64;

use super::{EscapeGrid, Window};
use crate::error::Result;
use crate::maps::{eval_l, Annulus};
use crate::orbits::Classification;

/// One 4-connected component of a cell mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentReport {
    /// 1-based, in raster order of each component's first cell.
    pub label: u32,
    pub cell_count: usize,
    /// Union of the member cells' extents.
    pub bounding_box: Window,
    pub touches_window_boundary: bool,
    /// Marker points lying in a member cell.
    pub contains: Vec<Complex64>,
}

/// Labels per cell (`0` = not in the mask) and one report per component.
#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    pub labels: Vec<u32>,
    pub reports: Vec<ComponentReport>,
}

impl Components {
    pub fn containing(&self, z: Complex64) -> Option<&ComponentReport> {
        self.reports.iter().find(|r| r.contains.contains(&z))
    }
}

/// One-cell dilation of a mask by the 3x3 square.
pub fn dilate(mask: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for j in 0..ny {
        for i in 0..nx {
            if !mask[j * nx + i] {
                continue;
            }
            for jj in j.saturating_sub(1)..=(j + 1).min(ny - 1) {
                for ii in i.saturating_sub(1)..=(i + 1).min(nx - 1) {
                    out[jj * nx + ii] = true;
                }
            }
        }
    }
    out
}

fn neighbours(i: usize, j: usize, nx: usize, ny: usize) -> impl Iterator<Item = (usize, usize)> {
    let mut v = [(usize::MAX, usize::MAX); 4];
    if i > 0 {
        v[0] = (i - 1, j);
    }
    if i + 1 < nx {
        v[1] = (i + 1, j);
    }
    if j > 0 {
        v[2] = (i, j - 1);
    }
    if j + 1 < ny {
        v[3] = (i, j + 1);
    }
    v.into_iter().filter(|p| p.0 != usize::MAX)
}

fn on_boundary(i: usize, j: usize, nx: usize, ny: usize) -> bool {
    i == 0 || j == 0 || i + 1 == nx || j + 1 == ny
}

/// 4-connected components of the cells classified `which`, optionally after
/// one-cell dilation (the grid stand-in for the closure).
pub fn label_components(
    grid: &EscapeGrid,
    which: Classification,
    dilate_first: bool,
    markers: &[Complex64],
) -> Components {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut mask: Vec<bool> = grid.cells.iter().map(|c| c.class == which).collect();
    if dilate_first {
        mask = dilate(&mask, nx, ny);
    }
    let mut labels = vec![0u32; nx * ny];
    let mut reports = Vec::new();
    let mut queue = VecDeque::new();
    let (dx, dy) = (grid.dx(), grid.dy());
    for start in 0..nx * ny {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        let label = reports.len() as u32 + 1;
        let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
        let mut count = 0;
        let mut touches = false;
        labels[start] = label;
        queue.push_back((start % nx, start / nx));
        while let Some((i, j)) = queue.pop_front() {
            count += 1;
            imin = imin.min(i);
            imax = imax.max(i);
            jmin = jmin.min(j);
            jmax = jmax.max(j);
            touches |= on_boundary(i, j, nx, ny);
            for (a, b) in neighbours(i, j, nx, ny) {
                let k = b * nx + a;
                if mask[k] && labels[k] == 0 {
                    labels[k] = label;
                    queue.push_back((a, b));
                }
            }
        }
        let w = &grid.window;
        reports.push(ComponentReport {
            label,
            cell_count: count,
            bounding_box: Window {
                xmin: w.xmin + imin as f64 * dx,
                xmax: w.xmin + (imax + 1) as f64 * dx,
                ymin: w.ymin + jmin as f64 * dy,
                ymax: w.ymin + (jmax + 1) as f64 * dy,
            },
            touches_window_boundary: touches,
            contains: Vec::new(),
        });
    }
    for &z in markers {
        if let Some((i, j)) = grid.cell_of(z) {
            let l = labels[j * nx + i];
            if l > 0 {
                reports[l as usize - 1].contains.push(z);
            }
        }
    }
    Components { labels, reports }
}

/// True when every 4-connected path of cells from `start` to the window
/// boundary passes through a cell classified `barrier`.
pub fn escape_route_blocked(grid: &EscapeGrid, start: (usize, usize), barrier: Classification) -> bool {
    let (nx, ny) = (grid.nx, grid.ny);
    let idx = |i: usize, j: usize| j * nx + i;
    if grid.cells[idx(start.0, start.1)].class == barrier {
        return true;
    }
    let mut seen = vec![false; nx * ny];
    let mut queue = VecDeque::from([start]);
    seen[idx(start.0, start.1)] = true;
    while let Some((i, j)) = queue.pop_front() {
        if on_boundary(i, j, nx, ny) {
            return false;
        }
        for (a, b) in neighbours(i, j, nx, ny) {
            let k = idx(a, b);
            if !seen[k] && grid.cells[k].class != barrier {
                seen[k] = true;
                queue.push_back((a, b));
            }
        }
    }
    true
}

/// Whether `window` contains all of `L(A_n)`.
///
/// `L` sends `|z| = rho` to the circle with center `1/(1 - rho^2)` and radius
/// `rho/(1 - rho^2)`, and the disc `|z| < rho` to its inside, so `L(A_n)` lies
/// in the closed disc bounded by the image of the outer circle. The check
/// samples that image circle and also tests its bounding box.
pub fn window_contains_ring(window: &Window, n: u32, samples: usize) -> Result<bool> {
    let ring = Annulus::new(n)?;
    let rho = ring.rout;
    let center = 1.0 / (1.0 - rho * rho);
    let radius = rho / (1.0 - rho * rho);
    let bbox_inside = window.xmin <= center - radius
        && window.xmax >= center + radius
        && window.ymin <= -radius
        && window.ymax >= radius;
    let sampled_inside = (0..samples.max(16)).all(|k| {
        let t = 2.0 * std::f64::consts::PI * k as f64 / samples.max(16) as f64;
        match eval_l(Complex64::from_polar(rho, t).into()).finite() {
            Some(w) => window.contains(w),
            None => false,
        }
    });
    Ok(bbox_inside && sampled_inside)
}

/// Grid-level evidence that the component of the closure of the escaping set
/// containing `marker` is bounded.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedComponentCheck {
    pub marker: Complex64,
    pub marker_cell: Option<(usize, usize)>,
    pub marker_class: Option<Classification>,
    /// Component of the dilated escaping set containing the marker.
    pub component: Option<ComponentReport>,
    /// The window contains the separating ring `L(A_2)`.
    pub ring_contained: bool,
    /// Every cell path from the marker to the boundary meets a RETURNING cell.
    pub separated: bool,
}

impl BoundedComponentCheck {
    pub fn bounded(&self) -> bool {
        self.ring_contained
            && self.separated
            && self
                .component
                .as_ref()
                .is_some_and(|c| !c.touches_window_boundary)
    }
}

/// Runs the labeling, ring-containment and separation checks for `marker`.
pub fn bounded_component(grid: &EscapeGrid, marker: Complex64) -> Result<BoundedComponentCheck> {
    let marker_cell = grid.cell_of(marker);
    let comps = label_components(grid, Classification::Escaping, true, &[marker]);
    Ok(BoundedComponentCheck {
        marker,
        marker_cell,
        marker_class: marker_cell.map(|(i, j)| grid.cell(i, j).class),
        component: comps.containing(marker).cloned(),
        ring_contained: window_contains_ring(&grid.window, 2, 4096)?,
        separated: marker_cell
            .is_some_and(|c| escape_route_blocked(grid, c, Classification::Returning)),
    })
}

/// Coarse cells whose four sub-cells in `fine` (same window, twice the
/// resolution) agree on a class different from the coarse cell's.
pub fn refinement_disagreements(coarse: &EscapeGrid, fine: &EscapeGrid) -> Vec<(usize, usize)> {
    assert_eq!(fine.nx, 2 * coarse.nx);
    assert_eq!(fine.ny, 2 * coarse.ny);
    let mut out = Vec::new();
    for j in 0..coarse.ny {
        for i in 0..coarse.nx {
            let sub = [
                fine.cell(2 * i, 2 * j).class,
                fine.cell(2 * i + 1, 2 * j).class,
                fine.cell(2 * i, 2 * j + 1).class,
                fine.cell(2 * i + 1, 2 * j + 1).class,
            ];
            if sub.iter().all(|&c| c == sub[0]) && coarse.cell(i, j).class != sub[0] {
                out.push((i, j));
            }
        }
    }
    out
}

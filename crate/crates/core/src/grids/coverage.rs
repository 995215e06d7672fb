use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::maps::{wrap_angle, MapKind, MapSpec};

/// Outcome for one target point `y` on the circle `|y| = L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageWitness {
    pub target: Complex64,
    /// `x` with `R < |x| < rho` and `|f(x) - y| <= tol * max(1, L)`; `None`
    /// records NO_PREIMAGE.
    pub preimage: Option<Complex64>,
    /// `|f(x) - y|` at the returned preimage, `inf` without one.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageResult {
    pub radius: f64,
    pub fraction: f64,
    pub witnesses: Vec<CoverageWitness>,
}

impl CoverageResult {
    pub fn covered(&self) -> usize {
        self.witnesses.iter().filter(|w| w.preimage.is_some()).count()
    }
}

/// Largest fully covered radius found by a log-spaced scan and bisection.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxCovered {
    /// Largest tested radius with fraction 1, `None` if no tested radius was covered.
    pub l_star: Option<f64>,
    /// Smallest tested radius above `l_star` that was not fully covered.
    pub first_gap: Option<f64>,
    /// `(L, fraction)` for each scanned radius, in scan order.
    pub scan: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug)]
struct Sample {
    z: Complex64,
    log_mod: f64,
    arg: f64,
}

/// Preimage search for circles under a planar map restricted to the
/// annulus `R < |x| < rho`.
#[derive(Clone, Debug)]
pub struct CoverageScanner {
    map: MapSpec,
    r_inner: f64,
    r_outer: f64,
    tol: f64,
    /// Coarse polar samples sorted by `ln |f|`.
    table: Vec<Sample>,
    band: usize,
    candidates: usize,
    max_newton: usize,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const RADIAL_CELLS: usize = 128;
const ANGULAR_CELLS: usize = 1024;

fn log_value(map: &MapSpec, z: Complex64) -> Option<(f64, f64)> {
    let v = map.apply(z);
    if v.is_saturated() {
        return None;
    }
    let l = v.log_modulus();
    l.is_finite().then(|| (l, v.arg()))
}

impl CoverageScanner {
    pub fn new(map: &MapSpec, r_inner: f64, r_outer: f64) -> Result<Self> {
        map.validate()?;
        if map.kind == MapKind::Cyl3d {
            return Err(Error::Unsupported("circle coverage is planar".into()));
        }
        if !(r_inner > 0.0 && r_outer > r_inner && r_outer.is_finite()) {
            return Err(Error::validation(
                "inner_radius",
                format!("need 0 < R < rho, got R = {r_inner}, rho = {r_outer}"),
            ));
        }
        let mut table = Vec::with_capacity(RADIAL_CELLS * ANGULAR_CELLS);
        for i in 0..RADIAL_CELLS {
            let r = r_inner + (r_outer - r_inner) * (i as f64 + 0.5) / RADIAL_CELLS as f64;
            for k in 0..ANGULAR_CELLS {
                let z = Complex64::from_polar(r, TAU * k as f64 / ANGULAR_CELLS as f64);
                if let Some((log_mod, arg)) = log_value(map, z) {
                    table.push(Sample { z, log_mod, arg });
                }
            }
        }
        table.sort_by(|a, b| a.log_mod.total_cmp(&b.log_mod));
        Ok(CoverageScanner {
            map: *map,
            r_inner,
            r_outer,
            tol: DEFAULT_TOLERANCE,
            table,
            band: 4 * ANGULAR_CELLS,
            candidates: 4,
            max_newton: 50,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    fn inside(&self, z: Complex64) -> bool {
        let r = z.norm();
        r > self.r_inner && r < self.r_outer
    }

    /// Table entries whose `ln |f|` is closest to `log_l`.
    fn band_around(&self, log_l: f64) -> &[Sample] {
        let n = self.table.len();
        let k = self.band.min(n);
        let pos = self.table.partition_point(|s| s.log_mod < log_l);
        let (mut lo, mut hi) = (pos, pos);
        while hi - lo < k {
            let take_low = match (lo > 0, hi < n) {
                (true, true) => log_l - self.table[lo - 1].log_mod <= self.table[hi].log_mod - log_l,
                (true, false) => true,
                (false, true) => false,
                (false, false) => break,
            };
            if take_low {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        &self.table[lo..hi]
    }

    /// Mismatch `(ln|f(x)| - ln L, arg f(x) - phi)`, phase wrapped.
    fn residual_vec(&self, z: Complex64, log_l: f64, phi: f64) -> Option<Vector2<f64>> {
        if !self.inside(z) {
            return None;
        }
        let (lm, a) = log_value(&self.map, z)?;
        Some(Vector2::new(lm - log_l, wrap_angle(a - phi)))
    }

    fn accept(&self, z: Complex64, y: Complex64) -> Option<f64> {
        if !self.inside(z) {
            return None;
        }
        let v = self.map.apply(z);
        if v.is_saturated() {
            return None;
        }
        let res = (v.point() - y).norm();
        (res <= self.tol * y.norm().max(1.0)).then_some(res)
    }

    /// Damped Newton on the log-polar mismatch starting from `z`.
    fn newton(&self, mut z: Complex64, y: Complex64) -> Option<(Complex64, f64)> {
        let log_l = y.norm().ln();
        let phi = y.arg();
        let mut g = self.residual_vec(z, log_l, phi)?;
        for _ in 0..self.max_newton {
            if let Some(res) = self.accept(z, y) {
                return Some((z, res));
            }
            let h = 1e-7 * z.norm();
            let diff = |dir: Complex64| -> Option<Vector2<f64>> {
                let d = match self.residual_vec(z + dir * h, log_l, phi) {
                    Some(fwd) => fwd - g,
                    None => g - self.residual_vec(z - dir * h, log_l, phi)?,
                };
                Some(Vector2::new(d[0], wrap_angle(d[1])) / h)
            };
            let (cx, cy) = (diff(Complex64::new(1.0, 0.0))?, diff(Complex64::new(0.0, 1.0))?);
            let jac = Matrix2::from_columns(&[cx, cy]);
            let step = jac.lu().solve(&(-g))?;
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..12 {
                let cand = z + Complex64::new(step[0], step[1]) * t;
                if let Some(gc) = self.residual_vec(cand, log_l, phi) {
                    if gc.norm() < g.norm() {
                        z = cand;
                        g = gc;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                return self.accept(z, y).map(|r| (z, r));
            }
        }
        self.accept(z, y).map(|r| (z, r))
    }

    fn solve(&self, y: Complex64) -> CoverageWitness {
        let log_l = y.norm().ln();
        let phi = y.arg();
        let mut best: Vec<(f64, Complex64)> = Vec::with_capacity(self.candidates + 1);
        for s in self.band_around(log_l) {
            let score = (s.log_mod - log_l).abs() + wrap_angle(s.arg - phi).abs();
            if best.len() < self.candidates || score < best[best.len() - 1].0 {
                let pos = best.partition_point(|b| b.0 <= score);
                best.insert(pos, (score, s.z));
                best.truncate(self.candidates);
            }
        }
        for &(_, z0) in &best {
            if let Some((x, residual)) = self.newton(z0, y) {
                return CoverageWitness {
                    target: y,
                    preimage: Some(x),
                    residual,
                };
            }
        }
        CoverageWitness {
            target: y,
            preimage: None,
            residual: f64::INFINITY,
        }
    }

    fn targets(l: f64, count: usize) -> impl Iterator<Item = Complex64> {
        (0..count).map(move |k| Complex64::from_polar(l, TAU * k as f64 / count as f64))
    }

    fn check_target_args(l: f64, count: usize) -> Result<()> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::validation("target_radius", format!("must be positive and finite, got {l}")));
        }
        if count < 1 {
            return Err(Error::validation("targets", "at least one target is required"));
        }
        Ok(())
    }

    /// Searches a preimage for each of `count` equispaced points of `|y| = l`.
    /// Every eighth hit is re-evaluated from scratch and dropped on mismatch.
    pub fn coverage(&self, l: f64, count: usize) -> Result<CoverageResult> {
        Self::check_target_args(l, count)?;
        let mut hits = 0usize;
        let witnesses: Vec<_> = Self::targets(l, count)
            .map(|y| {
                let mut w = self.solve(y);
                if let Some(x) = w.preimage {
                    hits += 1;
                    if hits % 8 == 1 && self.accept(x, y).is_none() {
                        w.preimage = None;
                        w.residual = f64::INFINITY;
                    }
                }
                w
            })
            .collect();
        let covered = witnesses.iter().filter(|w| w.preimage.is_some()).count();
        Ok(CoverageResult {
            radius: l,
            fraction: covered as f64 / count as f64,
            witnesses,
        })
    }

    /// True when every target on `|y| = l` has a preimage; stops at the first miss.
    pub fn covers(&self, l: f64, count: usize) -> Result<bool> {
        Self::check_target_args(l, count)?;
        Ok(Self::targets(l, count).all(|y| self.solve(y).preimage.is_some()))
    }

    /// Log-spaced scan of `steps` radii over `[l_lo, l_hi]`, then `bisections`
    /// halvings (in `ln L`) between the largest fully covered radius and the
    /// next scanned one.
    pub fn max_covered(&self, l_lo: f64, l_hi: f64, steps: usize, bisections: usize, count: usize) -> Result<MaxCovered> {
        if !(l_lo > 0.0 && l_hi > l_lo && l_hi.is_finite()) || steps < 2 {
            return Err(Error::validation("radii", "need 0 < L_lo < L_hi and at least 2 steps"));
        }
        let (a, b) = (l_lo.ln(), l_hi.ln());
        let mut scan = Vec::with_capacity(steps);
        let mut l_star = None;
        let mut first_gap = None;
        for k in 0..steps {
            let l = (a + (b - a) * k as f64 / (steps - 1) as f64).exp();
            let fraction = self.coverage(l, count)?.fraction;
            scan.push((l, fraction));
            if fraction == 1.0 {
                l_star = Some(l);
                first_gap = None;
            } else if l_star.is_some() && first_gap.is_none() {
                first_gap = Some(l);
            }
        }
        if let (Some(mut lo), Some(mut hi)) = (l_star, first_gap) {
            for _ in 0..bisections {
                let mid = ((lo.ln() + hi.ln()) / 2.0).exp();
                if self.covers(mid, count)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            l_star = Some(lo);
            first_gap = Some(hi);
        }
        Ok(MaxCovered {
            l_star,
            first_gap,
            scan,
        })
    }
}

/// Covered fraction of `|y| = l` by `map` restricted to `R < |x| < rho`.
pub fn circle_coverage(map: &MapSpec, r_inner: f64, r_outer: f64, l: f64, targets: usize) -> Result<CoverageResult> {
    CoverageScanner::new(map, r_inner, r_outer)?.coverage(l, targets)
}

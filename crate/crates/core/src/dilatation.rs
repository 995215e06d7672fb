//! Central-difference Jacobians and dilatation estimates.
//!
//! Planar maps report the Beltrami modulus `|mu| = |f_zbar| / |f_z|` and
//! `K = (1 + |mu|) / (1 - |mu|)`. Maps of R^3 report the singular values of the
//! Cartesian Jacobian and `K = max(K_O, K_I)` with
//! `K_O = s1^3 / (s1 s2 s3)` and `K_I = (s1 s2 s3) / s3^3`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grids::Window;
use crate::maps::{eval_l_inv, CylPoint3, ExtendedPoint, MapKind, MapSpec};

/// Relative finite-difference step.
pub const RELATIVE_STEP: f64 = 1e-6;
/// Smallest absolute step.
pub const STEP_FLOOR: f64 = 1e-9;
/// Points closer than `SEAM_BUFFER * step` to a seam are unreliable.
pub const SEAM_BUFFER: f64 = 10.0;
/// Width of the excluded band `1 - OSCILLATION_BAND < r < 1` of `g`.
pub const OSCILLATION_BAND: f64 = 1e-3;

/// Default step at a point of modulus `scale`.
pub fn default_step(scale: f64) -> f64 {
    (RELATIVE_STEP * scale).max(STEP_FLOOR)
}

/// A planar map that can be differentiated numerically.
pub trait PlanarMap: Sync {
    fn eval(&self, z: Complex64) -> Complex64;

    fn seam_distance(&self, _z: Complex64) -> f64 {
        f64::INFINITY
    }
}

impl<F> PlanarMap for F
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    fn eval(&self, z: Complex64) -> Complex64 {
        self(z)
    }
}

impl PlanarMap for MapSpec {
    fn eval(&self, z: Complex64) -> Complex64 {
        self.apply(z).point()
    }

    fn seam_distance(&self, z: Complex64) -> f64 {
        MapSpec::seam_distance(self, z)
    }
}

/// A map of R^3 in Cartesian coordinates.
pub trait SpatialMap: Sync {
    fn eval3(&self, p: [f64; 3]) -> [f64; 3];
}

impl SpatialMap for MapSpec {
    fn eval3(&self, p: [f64; 3]) -> [f64; 3] {
        self.apply_spatial(p)
    }
}

impl<F> SpatialMap for F
where
    F: Fn([f64; 3]) -> [f64; 3] + Sync,
{
    fn eval3(&self, p: [f64; 3]) -> [f64; 3] {
        self(p)
    }
}

/// Numerical derivative matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Jacobian {
    Planar(Matrix2<f64>),
    Spatial(Matrix3<f64>),
}

/// Planar Jacobian with reliability information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarJacobian {
    /// `[[u_x, u_y], [v_x, v_y]]` for `f = u + i v`.
    pub matrix: Matrix2<f64>,
    pub seam_distance: f64,
    pub reliable: bool,
}

/// Central-difference Jacobian of a planar map.
pub fn jacobian_fd<M: PlanarMap + ?Sized>(map: &M, z: Complex64, step: f64) -> Result<PlanarJacobian> {
    if !(step > 0.0) {
        return Err(Error::Precondition(format!("step {step} is not positive")));
    }
    let dx = Complex64::new(step, 0.0);
    let dy = Complex64::new(0.0, step);
    let fx = (map.eval(z + dx) - map.eval(z - dx)) / (2.0 * step);
    let fy = (map.eval(z + dy) - map.eval(z - dy)) / (2.0 * step);
    let seam_distance = map.seam_distance(z);
    Ok(PlanarJacobian {
        matrix: Matrix2::new(fx.re, fy.re, fx.im, fy.im),
        seam_distance,
        reliable: seam_distance >= SEAM_BUFFER * step,
    })
}

/// Central-difference Jacobian of a map of R^3.
pub fn jacobian_fd_3d<M: SpatialMap + ?Sized>(map: &M, p: [f64; 3], step: f64) -> Result<Matrix3<f64>> {
    if !(step > 0.0) {
        return Err(Error::Precondition(format!("step {step} is not positive")));
    }
    let mut m = Matrix3::zeros();
    for j in 0..3 {
        let mut plus = p;
        let mut minus = p;
        plus[j] += step;
        minus[j] -= step;
        let a = map.eval3(plus);
        let b = map.eval3(minus);
        for i in 0..3 {
            m[(i, j)] = (a[i] - b[i]) / (2.0 * step);
        }
    }
    Ok(m)
}

/// Where and how a dilatation estimate was made.
#[derive(Clone, Debug, PartialEq)]
pub struct DilatationReport {
    /// Cartesian coordinates (two entries for planar maps).
    pub point: Vec<f64>,
    pub step: f64,
    pub jac: Jacobian,
    pub mu_abs: Option<f64>,
    /// Descending; empty for planar maps.
    pub singular_values: Vec<f64>,
    pub k_estimate: f64,
    pub seam_distance: f64,
    pub reliable: bool,
}

/// `(|f_z|, |f_zbar|)` of a real 2x2 Jacobian.
pub fn wirtinger_moduli(j: &Matrix2<f64>) -> (f64, f64) {
    let (ux, uy, vx, vy) = (j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
    let fz = 0.5 * (ux + vy).hypot(vx - uy);
    let fzbar = 0.5 * (ux - vy).hypot(vx + uy);
    (fz, fzbar)
}

/// Beltrami modulus and dilatation of a planar map at `z`.
pub fn beltrami<M: PlanarMap + ?Sized>(map: &M, z: Complex64, step: f64) -> Result<DilatationReport> {
    let pj = jacobian_fd(map, z, step)?;
    let det = pj.matrix.determinant();
    let (fz, fzbar) = wirtinger_moduli(&pj.matrix);
    if !(det > 0.0) || !(fz > fzbar) {
        return Err(Error::Orientation {
            re: z.re,
            im: z.im,
            det,
        });
    }
    let mu = fzbar / fz;
    Ok(DilatationReport {
        point: vec![z.re, z.im],
        step,
        jac: Jacobian::Planar(pj.matrix),
        mu_abs: Some(mu),
        singular_values: Vec::new(),
        k_estimate: (1.0 + mu) / (1.0 - mu),
        seam_distance: pj.seam_distance,
        reliable: pj.reliable,
    })
}

/// Outer and inner dilatation from descending singular values of a 3x3 Jacobian.
pub fn dilatation_from_singular_values(s: &[f64; 3]) -> f64 {
    let vol = s[0] * s[1] * s[2];
    let outer = s[0].powi(3) / vol;
    let inner = vol / s[2].powi(3);
    outer.max(inner)
}

/// Dilatation of a map of R^3 at an off-axis point.
pub fn dilatation_3d<M: SpatialMap + ?Sized>(map: &M, p: CylPoint3, step: f64) -> Result<DilatationReport> {
    if !(p.r > 0.0) {
        return Err(Error::Precondition("axis points are not sampled".into()));
    }
    let x = p.to_cartesian();
    let m = jacobian_fd_3d(map, x, step)?;
    if !(m.determinant() > 0.0) {
        return Err(Error::Orientation {
            re: x[0],
            im: x[1],
            det: m.determinant(),
        });
    }
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let k = dilatation_from_singular_values(&[sv[0], sv[1], sv[2]]);
    Ok(DilatationReport {
        point: x.to_vec(),
        step,
        jac: Jacobian::Spatial(m),
        mu_abs: None,
        singular_values: sv,
        k_estimate: k,
        seam_distance: p.r,
        reliable: p.r >= SEAM_BUFFER * step,
    })
}

/// Region sampled by [`scan_dilatation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScanRegion {
    Window(Window),
    /// `r_min <= |z| <= r_max` in the plane.
    Annulus { r_min: f64, r_max: f64 },
    /// `r_min <= r <= r_max`, `x3_min <= x3 <= x3_max` in R^3.
    Cylinder { r_min: f64, r_max: f64, x3_min: f64, x3_max: f64 },
}

/// Upper edges of the K histogram bins; the last bin is open.
pub const HISTOGRAM_EDGES: [f64; 8] = [1.0 + 1e-6, 1.01, 1.1, 1.5, 2.0, 3.0, 5.0, 10.0];

/// Aggregate of a dilatation scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSummary {
    pub samples: usize,
    /// Largest K among reliable points.
    pub max_k: f64,
    pub argmax: Option<Vec<f64>>,
    /// Counts per bin of [`HISTOGRAM_EDGES`], plus one overflow bin.
    pub histogram: Vec<usize>,
    pub unreliable: usize,
    pub oscillation_excluded: usize,
    pub orientation_failures: usize,
    /// Every reliable report, in sample order.
    pub reports: Vec<DilatationReport>,
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    x
}

/// Point `i` of the Halton sequence in bases 2, 3, 5, offset by `seed`.
pub fn halton(i: u64, seed: u64) -> [f64; 3] {
    let k = i + 1 + seed;
    [radical_inverse(k, 2), radical_inverse(k, 3), radical_inverse(k, 5)]
}

fn in_oscillation_band(map: &MapSpec, z: Complex64) -> bool {
    let band = |r: f64| r > 1.0 - OSCILLATION_BAND && r < 1.0;
    match map.kind {
        MapKind::PlanarG => band(z.norm()),
        MapKind::PlanarH | MapKind::PlanarF if z.re + z.im.abs() >= 0.0 => match eval_l_inv(z.into()) {
            ExtendedPoint::Finite(u) => band(u.norm()),
            ExtendedPoint::Infinity => false,
        },
        _ => false,
    }
}

enum Sample {
    Report(DilatationReport),
    Unreliable,
    Oscillation,
    Orientation,
}

fn sample_point(region: &ScanRegion, u: [f64; 3]) -> Result<[f64; 3]> {
    Ok(match *region {
        ScanRegion::Window(w) => [
            w.xmin + u[0] * (w.xmax - w.xmin),
            w.ymin + u[1] * (w.ymax - w.ymin),
            0.0,
        ],
        ScanRegion::Annulus { r_min, r_max } => {
            let r = (r_min * r_min + u[0] * (r_max * r_max - r_min * r_min)).sqrt();
            let t = -PI + 2.0 * PI * u[1];
            [r * t.cos(), r * t.sin(), 0.0]
        }
        ScanRegion::Cylinder {
            r_min,
            r_max,
            x3_min,
            x3_max,
        } => {
            let r = (r_min * r_min + u[0] * (r_max * r_max - r_min * r_min)).sqrt();
            let t = -PI + 2.0 * PI * u[1];
            [r * t.cos(), r * t.sin(), x3_min + u[2] * (x3_max - x3_min)]
        }
    })
}

fn validate_region(region: &ScanRegion) -> Result<()> {
    let ok = match *region {
        ScanRegion::Window(w) => return w.validate(),
        ScanRegion::Annulus { r_min, r_max } => r_min >= 0.0 && r_max > r_min,
        ScanRegion::Cylinder {
            r_min,
            r_max,
            x3_min,
            x3_max,
        } => r_min >= 0.0 && r_max > r_min && x3_max >= x3_min,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!("degenerate scan region {region:?}")))
    }
}

/// Samples `samples` Halton points of `region`, estimates K at each and
/// summarises. Seam neighbourhoods and the band `1 - 1e-3 < r < 1` of `g` are
/// excluded and counted separately. `step = None` uses [`default_step`].
pub fn scan_dilatation(
    map: &MapSpec,
    region: ScanRegion,
    samples: usize,
    step: Option<f64>,
    seed: u64,
) -> Result<ScanSummary> {
    if samples < 1 {
        return Err(Error::Precondition("samples must be at least 1".into()));
    }
    validate_region(&region)?;
    let spatial = matches!(region, ScanRegion::Cylinder { .. });
    if spatial != (map.kind == MapKind::Cyl3d) {
        return Err(Error::Precondition(format!(
            "map {} cannot be scanned over {region:?}",
            map.kind
        )));
    }
    let outcomes: Vec<Sample> = (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Sample> {
            let x = sample_point(&region, halton(i, seed))?;
            let h = step.unwrap_or_else(|| default_step(x[0].hypot(x[1]).hypot(x[2])));
            if spatial {
                let p = CylPoint3::from_cartesian(x);
                if p.r < SEAM_BUFFER * h {
                    return Ok(Sample::Unreliable);
                }
                return Ok(match dilatation_3d(map, p, h) {
                    Ok(r) => Sample::Report(r),
                    Err(Error::Orientation { .. }) => Sample::Orientation,
                    Err(e) => return Err(e),
                });
            }
            let z = Complex64::new(x[0], x[1]);
            if in_oscillation_band(map, z) {
                return Ok(Sample::Oscillation);
            }
            Ok(match beltrami(map, z, h) {
                Ok(r) if r.reliable => Sample::Report(r),
                Ok(_) => Sample::Unreliable,
                Err(Error::Orientation { .. }) => {
                    if map.seam_distance(z) < SEAM_BUFFER * h {
                        Sample::Unreliable
                    } else {
                        Sample::Orientation
                    }
                }
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut summary = ScanSummary {
        samples,
        max_k: f64::NAN,
        argmax: None,
        histogram: vec![0; HISTOGRAM_EDGES.len() + 1],
        unreliable: 0,
        oscillation_excluded: 0,
        orientation_failures: 0,
        reports: Vec::new(),
    };
    for s in outcomes {
        match s {
            Sample::Report(r) => {
                let bin = HISTOGRAM_EDGES
                    .iter()
                    .position(|&e| r.k_estimate <= e)
                    .unwrap_or(HISTOGRAM_EDGES.len());
                summary.histogram[bin] += 1;
                if summary.max_k.is_nan() || r.k_estimate > summary.max_k {
                    summary.max_k = r.k_estimate;
                    summary.argmax = Some(r.point.clone());
                }
                summary.reports.push(r);
            }
            Sample::Unreliable => summary.unreliable += 1,
            Sample::Oscillation => summary.oscillation_excluded += 1,
            Sample::Orientation => summary.orientation_failures += 1,
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{eval_g, eval_l, MapParams};
    use approx::assert_abs_diff_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_jacobian() {
        let id = |z: Complex64| z;
        let j = jacobian_fd(&id, cx(0.3, -1.2), 1e-6).unwrap();
        assert_abs_diff_eq!((j.matrix - Matrix2::identity()).norm(), 0.0, epsilon = 1e-9);
        let r = beltrami(&id, cx(0.3, -1.2), 1e-6).unwrap();
        assert_abs_diff_eq!(r.mu_abs.unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.k_estimate, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn second_branch_radial_law() {
        // c = 0: z -> e^{it} / (2 - r). At r = 0.75, t = 0 the radial derivative
        // is 1/(2 - r)^2 = 0.64 and the tangential stretch (1/(2 - r))/r = 1.0667.
        let g0 = |z: Complex64| eval_g(z, 0.0);
        let j = jacobian_fd(&g0, cx(0.75, 0.0), 1e-6).unwrap();
        assert_abs_diff_eq!(j.matrix[(0, 0)], 0.64, epsilon = 1e-8);
        assert_abs_diff_eq!(j.matrix[(1, 1)], 1.0 / (1.25 * 0.75), epsilon = 1e-8);
        assert_abs_diff_eq!(j.matrix[(0, 1)], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(j.matrix[(1, 0)], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn k_near_half_with_zero_rotation() {
        let map = MapSpec::new(MapKind::PlanarG, MapParams { c: 0.0, ..MapParams::default() });
        for t in [0.4, 1.3, -2.0] {
            let r = 0.5 + 1e-4;
            let rep = beltrami(&map, Complex64::from_polar(r, t), default_step(r)).unwrap();
            assert!(rep.reliable);
            assert_abs_diff_eq!(rep.k_estimate, (2.0 - r) / r, epsilon = 1e-6);
            assert_abs_diff_eq!(rep.k_estimate, 3.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn identity_branch_is_conformal() {
        let map = MapSpec::g(0.5);
        let rep = beltrami(&map, cx(3.0, 0.4), default_step(3.0)).unwrap();
        assert_abs_diff_eq!(rep.mu_abs.unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.k_estimate, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn reflection_is_an_orientation_error() {
        let conj = |z: Complex64| z.conj();
        assert!(matches!(
            beltrami(&conj, cx(1.0, 1.0), 1e-6),
            Err(Error::Orientation { .. })
        ));
    }

    #[test]
    fn seam_points_are_flagged() {
        let map = MapSpec::g(0.5);
        let rep = beltrami(&map, Complex64::from_polar(0.5 + 1e-7, 1.0), 1e-6).unwrap();
        assert!(!rep.reliable);
    }

    #[test]
    fn conjugation_preserves_k() {
        let g = MapSpec::g(0.5);
        let h = MapSpec::h(0.5);
        for z in [Complex64::from_polar(0.6, 0.7), Complex64::from_polar(0.3, -2.0), Complex64::from_polar(1.4, 2.5)] {
            let w = eval_l(z.into()).finite().unwrap();
            let kg = beltrami(&g, z, 1e-6).unwrap().k_estimate;
            let kh = beltrami(&h, w, 1e-6 * w.norm().max(1.0)).unwrap().k_estimate;
            assert_abs_diff_eq!(kg, kh, epsilon = 1e-4);
        }
    }

    #[test]
    fn halton_is_in_unit_cube_and_deterministic() {
        for i in 0..100 {
            let a = halton(i, 7);
            assert_eq!(a, halton(i, 7));
            assert!(a.iter().all(|x| (0.0..1.0).contains(x)));
        }
        assert_eq!(halton(0, 0), [0.5, 1.0 / 3.0, 0.2]);
    }

    #[test]
    fn scan_identity_region() {
        let s = scan_dilatation(
            &MapSpec::g(0.5),
            ScanRegion::Annulus { r_min: 2.01, r_max: 6.0 },
            500,
            None,
            0,
        )
        .unwrap();
        assert!(s.max_k <= 1.0 + 1e-6);
        assert_eq!(s.reports.len() + s.unreliable, 500);
    }

    #[test]
    fn scan_excludes_oscillation_band() {
        let s = scan_dilatation(
            &MapSpec::g(0.5),
            ScanRegion::Annulus { r_min: 0.9985, r_max: 0.99999 },
            200,
            None,
            3,
        )
        .unwrap();
        assert!(s.oscillation_excluded > 100);
    }

    #[test]
    fn scan_rejects_mismatched_region() {
        let r = scan_dilatation(
            &MapSpec::cyl3d(1.0),
            ScanRegion::Annulus { r_min: 1.0, r_max: 2.0 },
            10,
            None,
            0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn axis_points_rejected() {
        assert!(dilatation_3d(&MapSpec::cyl3d(1.0), CylPoint3::new(0.0, 0.0, 1.0), 1e-6).is_err());
    }
}

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::maps::{MapKind, MapSpec};

/// Maximum-modulus table `M(r, f)` and `M(r, f) / r`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCurve {
    pub radii: Vec<f64>,
    pub m_values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub samples: usize,
}

const GOLDEN_ITERS: usize = 80;

fn planar_modulus(map: &MapSpec, r: f64, t: f64) -> f64 {
    map.apply(Complex64::from_polar(r, t)).log_modulus().exp()
}

fn spatial_modulus(map: &MapSpec, r: f64, theta: f64, phi: f64) -> f64 {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let q = map.apply_spatial([r * cp * ct, r * cp * st, r * sp]);
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
}

/// Golden-section maximisation of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Estimate of `M(r, f) = max |f(x)|` over `|x| = r`.
///
/// Planar maps: maximum over `samples` equispaced angles starting at 0,
/// followed by a golden-section pass within one spacing of the best sample.
/// `f3d`: the sphere is sampled on a latitude-longitude lattice that contains
/// the equator, then refined in longitude along the best latitude.
pub fn max_modulus(map: &MapSpec, r: f64, samples: usize) -> Result<f64> {
    if samples < 16 {
        return Err(Error::validation("samples", "at least 16 samples are required"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::validation("radii", format!("radius must be positive, got {r}")));
    }
    map.validate()?;
    let h = TAU / samples as f64;
    let refine = |f: &dyn Fn(f64) -> f64, t0: f64, best: f64| {
        let (_, v) = golden_max(f, t0 - h, t0 + h);
        best.max(v)
    };
    if map.kind == MapKind::Cyl3d {
        let lat = (samples / 4).max(4);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for a in 0..=2 * lat {
            let phi = (a as f64 - lat as f64) * (PI / 2.0) / lat as f64;
            for k in 0..samples {
                let theta = k as f64 * h;
                let v = spatial_modulus(map, r, theta, phi);
                if v > best.0 {
                    best = (v, theta, phi);
                }
            }
        }
        let phi = best.2;
        return Ok(refine(&|t| spatial_modulus(map, r, t, phi), best.1, best.0));
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..samples {
        let t = k as f64 * h;
        let v = planar_modulus(map, r, t);
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok(refine(&|t| planar_modulus(map, r, t), best.1, best.0))
}

/// `M(r, f) / r` along strictly increasing `radii`.
pub fn growth_ratio(map: &MapSpec, radii: &[f64], samples: usize) -> Result<GrowthCurve> {
    if radii.is_empty() {
        return Err(Error::validation("radii", "no radii given"));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("radii", "radii must be strictly increasing"));
    }
    let m_values = radii
        .iter()
        .map(|&r| max_modulus(map, r, samples))
        .collect::<Result<Vec<_>>>()?;
    let ratios = m_values.iter().zip(radii).map(|(m, r)| m / r).collect();
    Ok(GrowthCurve {
        radii: radii.to_vec(),
        m_values,
        ratios,
        samples,
    })
}

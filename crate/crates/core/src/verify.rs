//! Invariant suite behind the `verify` command.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dilatation::{beltrami, default_step, jacobian_fd_3d};
use crate::error::{Error, Result};
use crate::grids::{
    bounded_component, circle_coverage, escape_grid, escape_grid_rows, max_modulus,
    refinement_disagreements, sample_annulus, Window,
};
use crate::maps::{
    eval_f3d, eval_g, eval_l, eval_l_inv, principal_arg, wedge_normal, wedge_point, Annulus,
    CylPoint3, ExtendedPoint, MapParams, MapSpec,
};
use crate::orbits::{
    c_prime, classify, detect_returns, find_sign_flip, integer_ray_check, iterate, Classification,
    EscapePolicy,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Maps,
    Orbits,
    Grids,
    Dilatation,
    All,
}

impl Suite {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "maps" => Some(Suite::Maps),
            "orbits" => Some(Suite::Orbits),
            "grids" => Some(Suite::Grids),
            "dilatation" => Some(Suite::Dilatation),
            "all" => Some(Suite::All),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Maps => "maps",
            Suite::Orbits => "orbits",
            Suite::Grids => "grids",
            Suite::Dilatation => "dilatation",
            Suite::All => "all",
        }
    }
}

/// Outcome of one invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}::{} {}", self.suite, self.name, self.detail)
    }
}

fn check(suite: &'static str, name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        suite,
        name,
        passed,
        detail,
    }
}

/// Seam-crossing constant `max |F(z + eps u) - F(z - eps u)| / eps`.
pub fn seam_jump(
    eval: impl Fn(Complex64) -> Complex64,
    points: impl IntoIterator<Item = (Complex64, Complex64)>,
    eps: f64,
) -> f64 {
    points
        .into_iter()
        .map(|(z, u)| (eval(z + u * eps) - eval(z - u * eps)).norm() / eps)
        .fold(0.0, f64::max)
}

/// `count` points with unit normals on each seam of `g`: the circles
/// `r = 1/2, 1, 2` and the wedge `|t| = a(r)`.
pub fn g_seam_points(count: usize) -> Vec<(&'static str, Vec<(Complex64, Complex64)>)> {
    let circle = |r: f64| {
        (0..count)
            .map(|k| {
                let t = -PI + TAU * (k as f64 + 0.5) / count as f64;
                let u = Complex64::from_polar(1.0, t);
                (u * r, u)
            })
            .collect::<Vec<_>>()
    };
    let wedge = (0..count)
        .map(|k| {
            let upper = k % 2 == 0;
            let r = 1.0 + (k as f64 + 0.5) / count as f64;
            (wedge_point(r, upper), wedge_normal(upper))
        })
        .collect();
    vec![
        ("r=1/2", circle(0.5)),
        ("r=1", circle(1.0)),
        ("wedge", wedge),
        ("r=2", circle(2.0)),
    ]
}

/// `count` points with unit normals on the seams `s = 0` and `s = -1` of `f`,
/// `s = Re z + |Im z|`, away from the vertices.
pub fn f_seam_points(count: usize) -> Vec<(&'static str, Vec<(Complex64, Complex64)>)> {
    let line = |k0: f64, ymin: f64, ymax: f64| {
        (0..count)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let y = sign * (ymin + (ymax - ymin) * (k as f64 + 0.5) / count as f64);
                let z = Complex64::new(k0 - y.abs(), y);
                let u = Complex64::new(1.0, sign) / 2f64.sqrt();
                (z, u)
            })
            .collect::<Vec<_>>()
    };
    vec![("s=0", line(0.0, 0.05, 1.5)), ("s=-1", line(-1.0, 0.01, 1.0))]
}

fn maps_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    const S: &str = "maps";
    let c = 0.5;
    let params = MapParams::default();
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for (_, pts) in g_seam_points(1000) {
        worst = worst.max(seam_jump(|z| eval_g(z, c), pts, 1e-7));
    }
    out.push(check(S, "g_seam_continuity", worst <= 100.0, format!("max jump/eps = {worst:.3}")));

    let f = MapSpec::f(params);
    let mut worst: f64 = 0.0;
    for (_, pts) in f_seam_points(1000) {
        worst = worst.max(seam_jump(|z| f.apply(z).point(), pts, 1e-7));
    }
    out.push(check(S, "f_seam_continuity", worst <= 100.0, format!("max jump/eps = {worst:.3}")));

    let mut worst: f64 = 0.0;
    for _ in 0..3000 {
        let z = Complex64::from_polar(rng.gen_range(0.0..3.0), rng.gen_range(-PI..PI));
        let r = z.norm();
        let law = if r < 0.5 {
            4.0 / 3.0 * r
        } else if r < 1.0 {
            1.0 / (2.0 - r)
        } else {
            r
        };
        worst = worst.max((eval_g(z, c).norm() - law).abs());
    }
    out.push(check(S, "g_modulus_law", worst <= 1e-12, format!("max error {worst:.2e}")));

    let disk_ok = (0..1000).all(|_| {
        let t = rng.gen_range(-PI..PI);
        let inside = Complex64::from_polar(rng.gen_range(0.0..1.0), t);
        let on = Complex64::from_polar(1.0, t);
        eval_g(inside, c).norm() < 1.0 && (eval_g(on, c).norm() - 1.0).abs() <= 1e-12
    });
    out.push(check(S, "unit_disk_invariance", disk_ok, String::new()));

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let y: f64 = rng.gen_range(-3.0..3.0);
        let z = Complex64::new(y.abs() + 1.0 + rng.gen_range(0.0..3.0), y);
        worst = worst.max((eval_g(z, c) - z).norm());
    }
    out.push(check(S, "identity_sector", worst <= 1e-12, format!("max |g(z) - z| {worst:.2e}")));

    let mut misses = 0;
    for n in 2..=20u32 {
        let next = Annulus::new(n + 1).unwrap();
        for z in sample_annulus(n, 1000, rng.gen(), false).unwrap() {
            if !next.contains(eval_g(z, c)) {
                misses += 1;
            }
        }
    }
    let radius_identity = (2..=20u32).all(|n| {
        [0.25f64, 0.75].iter().all(|k| {
            let lhs = 1.0 / (2.0 - (1.0 - 1.0 / (f64::from(n) + k)));
            let rhs = 1.0 - 1.0 / (f64::from(n) + 1.0 + k);
            (lhs - rhs).abs() <= 1e-15
        })
    });
    out.push(check(
        S,
        "annulus_mapping",
        misses == 0 && radius_identity,
        format!("{misses} images outside A_(n+1)"),
    ));

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let w = Complex64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI));
        if let Some(back) = eval_l(eval_l_inv(w.into())).finite() {
            worst = worst.max((back - w).norm() / w.norm().max(1.0));
        } else {
            worst = f64::INFINITY;
        }
    }
    out.push(check(S, "mobius_round_trip", worst <= 1e-12, format!("max error {worst:.2e}")));

    let h = MapSpec::h(c);
    let worst = (1..=100)
        .map(|n| {
            let v = h.apply(Complex64::new(f64::from(n) + 1.0, 0.0)).point();
            (v - (f64::from(n) + 2.0)).norm() / (f64::from(n) + 2.0)
        })
        .fold(0.0, f64::max);
    out.push(check(S, "conjugate_integer_ray", worst <= 1e-9, format!("max relative error {worst:.2e}")));

    let half_plane = (2..=10u32).all(|n| {
        sample_annulus(n, 1000, rng.gen(), false)
            .unwrap()
            .into_iter()
            .all(|z| matches!(eval_l(z.into()), ExtendedPoint::Finite(w) if w.re > 0.0))
    });
    out.push(check(S, "ring_images_in_right_half_plane", half_plane, String::new()));

    let (mut inv, mut hom): (f64, f64) = (0.0, 0.0);
    for _ in 0..10_000 {
        let p = CylPoint3::new(rng.gen_range(0.0..10.0), rng.gen_range(-PI..PI), rng.gen_range(-10.0..10.0));
        let q = eval_f3d(eval_f3d(p, 1.0), 1.0).to_cartesian();
        let x = p.to_cartesian();
        inv = inv.max((0..3).map(|i| (q[i] - x[i]).abs()).fold(0.0, f64::max));
        let a = f_cart(x.map(|v| 2.0 * v));
        let b = f_cart(x);
        hom = hom.max((0..3).map(|i| (a[i] - 2.0 * b[i]).abs()).fold(0.0, f64::max));
    }
    out.push(check(S, "f3d_involution", inv < 1e-12 * 100.0, format!("max error {inv:.2e}")));
    out.push(check(S, "f3d_homogeneity", hom < 1e-12 * 1e3, format!("max error {hom:.2e}")));
    out
}

fn f_cart(p: [f64; 3]) -> [f64; 3] {
    eval_f3d(CylPoint3::from_cartesian(p), 1.0).to_cartesian()
}

fn orbits_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    const S: &str = "orbits";
    let c = 0.5;
    let policy = EscapePolicy::default();
    let f = MapSpec::f(MapParams::default());
    let mut out = Vec::new();

    let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let same = iterate(&f, z, &policy).ok() == iterate(&f, z, &policy).ok();
    out.push(check(S, "orbit_determinism", same, format!("start {z}")));

    let mut march_ok = true;
    for n in 2..=6u32 {
        for z0 in sample_annulus(n, 50, rng.gen(), false).unwrap() {
            let mut z = z0;
            for k in 1..=200u32 {
                z = eval_g(z, c);
                march_ok &= Annulus::new(n + k).unwrap().contains(z);
            }
        }
    }
    out.push(check(S, "annulus_march", march_ok, String::new()));

    let (mut growth_ok, mut recovery_ok) = (true, true);
    for n in 2..=10u32 {
        for z0 in sample_annulus(n, 50, rng.gen(), true).unwrap() {
            let mut z = z0;
            for k in 0..200u32 {
                let t = principal_arg(z);
                if t.abs() >= FRAC_PI_2 {
                    break;
                }
                let next = eval_g(z, c);
                let t1 = principal_arg(next);
                if t > 0.0 {
                    growth_ok &= t1 >= (1.0 + 2.0 * c / PI) * t;
                } else {
                    let m1 = f64::from(n + k) + 1.0;
                    recovery_ok &= t1 >= (1.0 - 2.0 * c / PI) * t + c_prime(c) / (m1 * m1);
                }
                z = next;
            }
        }
    }
    out.push(check(S, "argument_growth", growth_ok, String::new()));
    out.push(check(S, "argument_recovery", recovery_ok, String::new()));

    let mut flip_max = 0;
    let mut flip_ok = true;
    for z in sample_annulus(3, 200, rng.gen(), true).unwrap() {
        match find_sign_flip(z, c, 1000).ok().and_then(|s| s.index()) {
            Some(k) => flip_max = flip_max.max(k),
            None => flip_ok = false,
        }
    }
    out.push(check(S, "sign_flip", flip_ok, format!("max index {flip_max}")));

    let h = MapSpec::h(c);
    let mut worst = (Classification::Returning, usize::MAX);
    let mut ring_ok = true;
    for n in 2..=10u32 {
        for z in sample_annulus(n, 10, rng.gen(), false).unwrap() {
            let w = eval_l(z.into()).finite().unwrap();
            let s = classify(&h, w, &policy);
            ring_ok &= s.classification == Classification::Returning;
            if s.returns < worst.1 {
                worst = (s.classification, s.returns);
            }
        }
    }
    out.push(check(S, "rings_do_not_escape", ring_ok, format!("fewest returns {}", worst.1)));

    let esc = classify(&f, Complex64::new(2.0, 0.0), &policy).classification == Classification::Escaping;
    let dev = integer_ray_check(&f, 2, 100).unwrap_or(f64::INFINITY);
    let ret = detect_returns(Complex64::new(2.0, 0.0), c, 1000);
    out.push(check(
        S,
        "integer_ray_escapes",
        esc && dev < 1e-6 && ret == 0,
        format!("deviation {dev:.2e}"),
    ));
    out
}

fn grids_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    const S: &str = "grids";
    let f = MapSpec::f(MapParams::default());
    let policy = EscapePolicy::default();
    let mut out = Vec::new();

    let w = Window::new(-1.3, 2.7, -1.1, 1.3).unwrap();
    let full = escape_grid(&f, w, 40, 24, &policy, 0).unwrap();
    let mut stitched = Vec::new();
    for rows in [0..7, 7..8, 8..24] {
        stitched.extend(escape_grid_rows(&f, &w, 40, 24, &policy, rows).unwrap());
    }
    out.push(check(S, "tile_independence", full.cells == stitched, String::new()));

    let fine = escape_grid(&f, w, 80, 48, &policy, 0).unwrap();
    let flips = refinement_disagreements(&full, &fine);
    out.push(check(
        S,
        "resolution_refinement",
        flips.is_empty(),
        format!("{} coarse cells disagree with unanimous sub-cells", flips.len()),
    ));

    let aligned = Window::aligned(Complex64::new(2.0, 0.0), 1.0 / 32.0, 128, 128).unwrap();
    let grid = escape_grid(&f, aligned, 128, 128, &policy, 0).unwrap();
    let b = bounded_component(&grid, Complex64::new(2.0, 0.0)).unwrap();
    out.push(check(S, "separation_witness", b.bounded(), format!("ring contained {}", b.ring_contained)));

    let mut prev = 1.0;
    let mut mono = true;
    for l in [4.5, 6.0, 9.0] {
        let frac = circle_coverage(&MapSpec::identity(), 1.0, 4.0, l, 16).unwrap().fraction;
        mono &= frac <= prev;
        prev = frac;
    }
    out.push(check(S, "coverage_monotonicity", mono, String::new()));

    let r = rng.gen_range(1.5..2.8);
    let ms: Vec<f64> = [16, 32, 64, 128].iter().map(|&s| max_modulus(&f, r, s).unwrap()).collect();
    let grows = ms.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-12));
    out.push(check(S, "growth_curve_consistency", grows, format!("r = {r:.3}")));
    out
}

fn dilatation_suite(rng: &mut ChaCha8Rng) -> Vec<Check> {
    const S: &str = "dilatation";
    let mut out = Vec::new();

    // c = 0 second branch is z / (|z| (2 - |z|)): K = max(a, 1/a) with a = r / (2 - r).
    let z = Complex64::from_polar(rng.gen_range(0.55..0.65), rng.gen_range(0.3..1.2));
    let r = z.norm();
    let oracle = {
        let a = r / (2.0 - r);
        a.max(1.0 / a)
    };
    let diffs: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&c| {
            let g = MapSpec::g(c);
            beltrami(&g, z, default_step(r)).map_or(f64::INFINITY, |d| (d.k_estimate - oracle).abs())
        })
        .collect();
    let shrinking = diffs.windows(2).all(|d| d[1] < d[0]);
    out.push(check(S, "k_tends_to_c0_oracle", shrinking, format!("{:?}", diffs)));

    let g = MapSpec::g(0.5);
    let z = Complex64::from_polar(0.3, 0.7);
    let ks: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&h| beltrami(&g, z, h).map_or(f64::NAN, |d| d.k_estimate))
        .collect();
    let (d1, d2) = ((ks[1] - ks[0]).abs(), (ks[2] - ks[1]).abs());
    out.push(check(S, "step_halving", d2 < 4.0 * d1 || d2 < 1e-12, format!("changes {d1:.2e}, {d2:.2e}")));

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = Complex64::from_polar(rng.gen_range(0.3..0.45), rng.gen_range(0.3..2.8));
        let w = eval_l(z.into()).finite().unwrap();
        let kg = beltrami(&g, z, default_step(z.norm())).map(|d| d.k_estimate);
        let kh = beltrami(&MapSpec::h(0.5), w, default_step(w.norm())).map(|d| d.k_estimate);
        worst = match (kg, kh) {
            (Ok(a), Ok(b)) => worst.max((a - b).abs()),
            _ => f64::INFINITY,
        };
    }
    out.push(check(S, "conjugation_sanity", worst <= 1e-4, format!("max |K_g - K_h| {worst:.2e}")));

    let f3 = MapSpec::cyl3d(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = CylPoint3::new(rng.gen_range(0.5..3.0), rng.gen_range(-PI..PI), rng.gen_range(-2.0..2.0));
        let x = p.to_cartesian();
        let y = f3.apply_spatial(x);
        let h = 1e-6;
        let prod = jacobian_fd_3d(&f3, y, h * y[0].hypot(y[1])).unwrap() * jacobian_fd_3d(&f3, x, h * p.r).unwrap();
        worst = worst.max((prod - nalgebra::Matrix3::identity()).abs().max());
    }
    out.push(check(S, "f3d_involution_derivative", worst <= 1e-5, format!("max entry error {worst:.2e}")));
    out
}

/// Runs `suite` with all randomness drawn from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Maps {
        out.extend(maps_suite(&mut rng));
    }
    if all || suite == Suite::Orbits {
        out.extend(orbits_suite(&mut rng));
    }
    if all || suite == Suite::Grids {
        out.extend(grids_suite(&mut rng));
    }
    if all || suite == Suite::Dilatation {
        out.extend(dilatation_suite(&mut rng));
    }
    if out.is_empty() {
        return Err(Error::validation("suite", "empty suite"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Maps, Suite::Orbits, Suite::Grids, Suite::Dilatation, Suite::All] {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
        assert_eq!(Suite::from_name("everything"), None);
    }

    #[test]
    fn maps_suite_passes() {
        for c in run_suite(Suite::Maps, 7).unwrap() {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn dilatation_suite_passes() {
        for c in run_suite(Suite::Dilatation, 7).unwrap() {
            assert!(c.passed, "{c}");
        }
    }
}

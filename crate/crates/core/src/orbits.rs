//! Orbit iteration and classification, and the finite checks of the rotation
//! lemma for `g` on the rings `A_n`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::maps::{eval_g, principal_arg, Annulus, MapKind, MapSpec, MapValue};

/// Orbits closer than this to a fixed point are classified as fixed.
pub const FIXED_TOLERANCE: f64 = 1e-12;
/// Iterates stored one by one before thinning starts.
pub const STORE_EXACT: usize = 1024;
/// Stride of stored iterates after [`STORE_EXACT`].
pub const STORE_STRIDE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Classification {
    Escaping,
    Returning,
    Fixed,
    Undetermined,
}

impl Classification {
    pub const ALL: [Classification; 4] = [
        Classification::Escaping,
        Classification::Returning,
        Classification::Fixed,
        Classification::Undetermined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Classification::Escaping => "ESCAPING",
            Classification::Returning => "RETURNING",
            Classification::Fixed => "FIXED",
            Classification::Undetermined => "UNDETERMINED",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let upper = s.to_ascii_uppercase();
        Classification::ALL.into_iter().find(|c| c.name() == upper)
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Finite-budget stand-in for `f^n(z) -> infinity`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapePolicy {
    pub escape_radius: f64,
    pub budget: usize,
    pub persistence: usize,
}

impl Default for EscapePolicy {
    fn default() -> Self {
        EscapePolicy {
            escape_radius: 1e3,
            budget: 10_000,
            persistence: 10,
        }
    }
}

impl EscapePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.escape_radius > 10.0) {
            return Err(Error::validation("escape_radius", "must exceed 10"));
        }
        if self.budget < 1 {
            return Err(Error::validation("budget", "must be at least 1"));
        }
        if self.persistence < 1 {
            return Err(Error::validation("persistence", "must be at least 1"));
        }
        Ok(())
    }
}

/// Result of iterating one starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub start: Complex64,
    /// `(k, z_k)` pairs; every iterate up to [`STORE_EXACT`], then every
    /// [`STORE_STRIDE`]-th.
    pub points: Vec<(usize, Complex64)>,
    pub classification: Classification,
    pub iterations_used: usize,
    /// Indices `k >= 1` with `|z_k| <= 1` occurring after the orbit first had modulus above 1.
    pub returns: usize,
    /// First index of the final run above the escape radius.
    pub escape_iteration: Option<usize>,
    /// Set when escape was declared because the map saturated.
    pub saturated: bool,
    pub sign_flip_index: Option<usize>,
}

/// Classification data without stored iterates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitSummary {
    pub classification: Classification,
    pub iterations_used: usize,
    pub returns: usize,
    pub escape_iteration: Option<usize>,
    pub saturated: bool,
}

fn run_orbit(
    map: &MapSpec,
    z0: Complex64,
    policy: &EscapePolicy,
    mut store: Option<&mut Vec<(usize, Complex64)>>,
) -> OrbitSummary {
    let mut z = z0;
    let mut exceeded = z0.norm() > 1.0;
    let mut returns = 0;
    let mut above = 0;
    if let Some(s) = store.as_deref_mut() {
        s.push((0, z0));
    }
    let done = |classification, k, returns, escape_iteration, saturated| OrbitSummary {
        classification,
        iterations_used: k,
        returns,
        escape_iteration,
        saturated,
    };
    for k in 1..=policy.budget {
        let next = match map.apply(z) {
            MapValue::Finite(w) if w.re.is_finite() && w.im.is_finite() => w,
            _ => return done(Classification::Escaping, k, returns, Some(k), true),
        };
        if (next - z).norm() < FIXED_TOLERANCE {
            return done(Classification::Fixed, k, returns, None, false);
        }
        z = next;
        if let Some(s) = store.as_deref_mut() {
            if k < STORE_EXACT || k % STORE_STRIDE == 0 {
                s.push((k, z));
            }
        }
        let m = z.norm();
        if m <= 1.0 {
            if exceeded {
                returns += 1;
                if returns >= policy.persistence {
                    return done(Classification::Returning, k, returns, None, false);
                }
            }
        } else {
            exceeded = true;
        }
        if m > policy.escape_radius {
            above += 1;
            if above >= policy.persistence {
                return done(Classification::Escaping, k, returns, Some(k + 1 - above), false);
            }
        } else {
            above = 0;
        }
    }
    done(Classification::Undetermined, policy.budget, returns, None, false)
}

fn require_planar(map: &MapSpec) -> Result<()> {
    if map.kind == MapKind::Cyl3d {
        return Err(Error::Unsupported(
            "orbits of the cylindrical map are not iterated in the plane".into(),
        ));
    }
    Ok(())
}

/// Iterates `map` from `z0`, storing the orbit, until the classification
/// resolves or the budget is spent.
///
/// ESCAPING needs `persistence` consecutive iterates above the escape radius
/// (or a saturated map value); RETURNING needs `persistence` returns to the
/// closed unit disk after the orbit has left it; FIXED means two consecutive
/// iterates closer than [`FIXED_TOLERANCE`].
pub fn iterate(map: &MapSpec, z0: Complex64, policy: &EscapePolicy) -> Result<OrbitRecord> {
    require_planar(map)?;
    policy.validate()?;
    let mut points = Vec::new();
    let s = run_orbit(map, z0, policy, Some(&mut points));
    let sign_flip_index = if map.kind == MapKind::PlanarG {
        points.iter().find(|(_, z)| z.re <= 0.0).map(|&(k, _)| k)
    } else {
        None
    };
    Ok(OrbitRecord {
        start: z0,
        points,
        classification: s.classification,
        iterations_used: s.iterations_used,
        returns: s.returns,
        escape_iteration: s.escape_iteration,
        saturated: s.saturated,
        sign_flip_index,
    })
}

/// Streaming classification used by the grids.
pub fn classify(map: &MapSpec, z0: Complex64, policy: &EscapePolicy) -> OrbitSummary {
    run_orbit(map, z0, policy, None)
}

/// Outcome of checking the two rotation inequalities at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationCheck {
    pub ring: u32,
    pub t: f64,
    pub image_arg: f64,
    /// Slack in the upper bound (`t + 2c` for `t > 0`, `pi/2` otherwise).
    pub upper_margin: f64,
    /// Slack in the lower bound.
    pub lower_margin: f64,
    pub passed: bool,
}

/// `c' = c sqrt(2) / 2`.
pub fn c_prime(c: f64) -> f64 {
    0.5 * c * SQRT_2
}

/// Checks, for `z` in some ring `A_m` with `Re z > 0`,
/// `t + 2c >= arg g(z) >= (1 + 2c/pi) t` when `0 < t < pi/2`, and
/// `pi/2 > arg g(z) >= (1 - 2c/pi) t + c'/(m + 1)^2` when `-pi/2 < t <= 0`.
pub fn verify_rotation_lower(z: Complex64, c: f64) -> Result<RotationCheck> {
    let ring = Annulus::index_of(z)
        .ok_or_else(|| Error::Precondition(format!("{z} lies in no ring A_m")))?;
    let t = principal_arg(z);
    if !(t.abs() < FRAC_PI_2) {
        return Err(Error::Precondition(format!("{z} is not in the right half-plane")));
    }
    let image_arg = principal_arg(eval_g(z, c));
    let (upper_margin, lower_margin) = if t > 0.0 {
        (t + 2.0 * c - image_arg, image_arg - (1.0 + 2.0 * c / PI) * t)
    } else {
        let m1 = f64::from(ring) + 1.0;
        (
            FRAC_PI_2 - image_arg,
            image_arg - ((1.0 - 2.0 * c / PI) * t + c_prime(c) / (m1 * m1)),
        )
    };
    Ok(RotationCheck {
        ring,
        t,
        image_arg,
        upper_margin,
        lower_margin,
        passed: upper_margin >= 0.0 && lower_margin >= 0.0,
    })
}

/// Result of the sign-flip search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignFlip {
    /// Smallest `k` with `Re g^k(z) <= 0`, and the a priori bound on it.
    Found { k: usize, bound: usize },
    NotFound { budget: usize, bound: usize },
}

impl SignFlip {
    pub fn index(&self) -> Option<usize> {
        match *self {
            SignFlip::Found { k, .. } => Some(k),
            SignFlip::NotFound { .. } => None,
        }
    }
}

/// A priori bound on the sign-flip index of a point of `A_m` with argument `t`.
///
/// Both rotation inequalities combine into `t_{k+1} >= u + (2c/pi)|u| + c'/(m + k + 1)^2`
/// for `|t_k| < pi/2`. The right side is increasing in `u`, so iterating it from
/// `t_0` gives a lower envelope for the arguments; the first step at which the
/// envelope reaches `pi/2` bounds the flip index. Returns `usize::MAX` if
/// the envelope has not reached `pi/2` after `cap` steps.
pub fn sign_flip_bound(ring: u32, t0: f64, c: f64, cap: usize) -> usize {
    let cp = c_prime(c);
    let mut u = t0;
    for k in 0..=cap {
        if u >= FRAC_PI_2 {
            return k;
        }
        let m1 = f64::from(ring) + k as f64 + 1.0;
        u = u + 2.0 * c / PI * u.abs() + cp / (m1 * m1);
    }
    usize::MAX
}

/// Smallest `k <= k_max` with `Re g^k(z) <= 0` for `z` in a ring `A_n`.
pub fn find_sign_flip(z: Complex64, c: f64, k_max: usize) -> Result<SignFlip> {
    let ring = Annulus::index_of(z)
        .ok_or_else(|| Error::Precondition(format!("{z} lies in no ring A_n")))?;
    let t0 = principal_arg(z);
    let bound = if t0.abs() < FRAC_PI_2 {
        sign_flip_bound(ring, t0, c, 1_000_000)
    } else {
        0
    };
    let mut w = z;
    for k in 0..=k_max {
        if w.re <= 0.0 {
            return Ok(SignFlip::Found { k, bound });
        }
        w = eval_g(w, c);
    }
    Ok(SignFlip::NotFound { budget: k_max, bound })
}

/// Iterates `h` for `budget` steps and counts returns to the closed unit
/// disk after the orbit first left it.
pub fn detect_returns(z0: Complex64, c: f64, budget: usize) -> usize {
    let map = MapSpec::h(c);
    let mut z = z0;
    let mut exceeded = z0.norm() > 1.0;
    let mut returns = 0;
    for _ in 0..budget {
        let next = map.apply(z).point();
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        if next == z {
            break;
        }
        z = next;
        if z.norm() <= 1.0 {
            if exceeded {
                returns += 1;
            }
        } else {
            exceeded = true;
        }
    }
    returns
}

/// Iterates `f` from the integer `n` and returns `max_k |f^k(n) - (n + k)|`.
pub fn integer_ray_check(map: &MapSpec, n: u32, steps: usize) -> Result<f64> {
    if steps < 1 {
        return Err(Error::Precondition("steps must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::Precondition(format!("start {n} < 2")));
    }
    let mut z = Complex64::new(f64::from(n), 0.0);
    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        z = match map.apply(z) {
            MapValue::Finite(w) => w,
            MapValue::Saturated { .. } => return Ok(f64::INFINITY),
        };
        let expect = Complex64::new(f64::from(n) + k as f64, 0.0);
        worst = worst.max((z - expect).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{eval_l, MapParams};

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ring_point(n: u32, t: f64) -> Complex64 {
        let a = Annulus::new(n).unwrap();
        Complex64::from_polar(0.5 * (a.rin + a.rout), t)
    }

    #[test]
    fn f_from_two_escapes_along_the_integers() {
        let map = MapSpec::f(MapParams::default());
        let rec = iterate(&map, cx(2.0, 0.0), &EscapePolicy::default()).unwrap();
        assert_eq!(rec.classification, Classification::Escaping);
        assert!(!rec.saturated);
        for &(k, z) in rec.points.iter().take(200) {
            assert_eq!(z, cx(k as f64 + 2.0, 0.0));
        }
        // first iterate above 1000 is 1001 = f^999(2)
        assert_eq!(rec.escape_iteration, Some(999));
        assert_eq!(rec.iterations_used, 1008);
        assert_eq!(rec.returns, 0);
    }

    #[test]
    fn fixed_points() {
        let rec = iterate(&MapSpec::h(0.5), cx(-1.0, -1.0), &EscapePolicy::default()).unwrap();
        assert_eq!(rec.classification, Classification::Fixed);
        assert_eq!(rec.iterations_used, 1);
        let rec = iterate(&MapSpec::g(0.5), cx(0.0, 0.0), &EscapePolicy::default()).unwrap();
        assert_eq!(rec.classification, Classification::Fixed);
    }

    #[test]
    fn saturation_counts_as_escape() {
        let map = MapSpec::f(MapParams::default());
        let rec = iterate(&map, cx(-5.0, 0.0), &EscapePolicy::default()).unwrap();
        assert_eq!(rec.classification, Classification::Escaping);
        assert!(rec.saturated);
        assert_eq!(rec.iterations_used, 1);
    }

    #[test]
    fn orbit_storage_thins_after_the_exact_prefix() {
        let map = MapSpec::f(MapParams::default());
        let policy = EscapePolicy {
            escape_radius: 3000.0,
            ..EscapePolicy::default()
        };
        let rec = iterate(&map, cx(2.0, 0.0), &policy).unwrap();
        assert_eq!(rec.iterations_used, 3008);
        let idx: Vec<usize> = rec.points.iter().map(|p| p.0).collect();
        assert_eq!(&idx[..STORE_EXACT], &(0..STORE_EXACT).collect::<Vec<_>>()[..]);
        assert!(idx[STORE_EXACT..].iter().all(|k| k % STORE_STRIDE == 0));
    }

    #[test]
    fn orbits_are_deterministic() {
        let map = MapSpec::h(0.5);
        let z0 = eval_l(ring_point(3, 0.4).into()).finite().unwrap();
        let a = iterate(&map, z0, &EscapePolicy::default()).unwrap();
        let b = iterate(&map, z0, &EscapePolicy::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.classification, Classification::Returning);
    }

    #[test]
    fn policy_validation() {
        let bad = EscapePolicy {
            escape_radius: 5.0,
            ..EscapePolicy::default()
        };
        assert!(iterate(&MapSpec::g(0.5), cx(0.1, 0.0), &bad).is_err());
        assert!(iterate(&MapSpec::cyl3d(1.0), cx(0.1, 0.0), &EscapePolicy::default()).is_err());
    }

    #[test]
    fn rotation_examples() {
        let z = ring_point(5, 0.3);
        let chk = verify_rotation_lower(z, 0.5).unwrap();
        assert!(chk.passed);
        assert!(chk.image_arg >= (1.0 + 1.0 / PI) * 0.3);

        let z = ring_point(5, 0.0);
        let chk = verify_rotation_lower(z, 0.5).unwrap();
        assert!(chk.passed);
        assert!(chk.image_arg >= c_prime(0.5) / 36.0);

        let z = ring_point(10, -0.4);
        let chk = verify_rotation_lower(z, 0.3).unwrap();
        assert!(chk.passed);
        assert_eq!(chk.ring, 10);
    }

    #[test]
    fn rotation_preconditions() {
        assert!(verify_rotation_lower(cx(2.0 / 3.0, 0.0), 0.5).is_err());
        assert!(verify_rotation_lower(ring_point(4, 2.0), 0.5).is_err());
    }

    #[test]
    fn sign_flip_examples() {
        let z = ring_point(2, 1.0);
        match find_sign_flip(z, 0.5, 1000).unwrap() {
            SignFlip::Found { k, bound } => {
                assert!(k >= 1 && k <= bound);
            }
            other => panic!("{other:?}"),
        }
        let z = ring_point(2, FRAC_PI_2 + 0.01);
        assert_eq!(find_sign_flip(z, 0.5, 1000).unwrap().index(), Some(0));
        assert!(find_sign_flip(cx(0.1, 0.0), 0.5, 10).is_err());
        let z = ring_point(6, -1.2);
        assert!(matches!(
            find_sign_flip(z, 0.5, 1).unwrap(),
            SignFlip::NotFound { budget: 1, .. }
        ));
    }

    #[test]
    fn returns_examples() {
        let z0 = eval_l(ring_point(3, 0.7).into()).finite().unwrap();
        assert!(detect_returns(z0, 0.5, 10_000) >= 5);
        assert_eq!(detect_returns(cx(2.0, 0.0), 0.5, 10_000), 0);
        assert_eq!(detect_returns(cx(-5.0, 0.0), 0.5, 10_000), 0);
    }

    #[test]
    fn integer_ray_examples() {
        let map = MapSpec::f(MapParams::default());
        assert!(integer_ray_check(&map, 2, 100).unwrap() < 1e-6);
        assert!(integer_ray_check(&map, 2, 1).unwrap() < 1e-12);
        assert!(integer_ray_check(&map, 50, 50).unwrap() < 1e-6);
        assert!(integer_ray_check(&map, 2, 0).is_err());
    }
}

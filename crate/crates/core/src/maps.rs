//! Closed-form evaluation of the planar maps `g`, `L`, `L^-1`, `h = L∘g∘L^-1`,
//! the interpolated map `f`, and the cylindrical example on R^3.
//!
//! Every evaluator is a pure function. The conjugate `h` is evaluated directly
//! in the image plane of `L` (see [`eval_h`]) so that the integer ray
//! `n + 1 -> n + 2` is reproduced without rounding drift.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A finite point of the plane.
pub type ComplexPoint = Complex64;

/// `Re z^4` above which `exp(z^4)` is carried in log-magnitude form.
pub const EXP_SATURATION: f64 = 500.0;

/// Default rotation amplitude of `g`.
pub const DEFAULT_C: f64 = 0.5;
/// Default perturbation amplitude of the left sector of `f`.
pub const DEFAULT_D: f64 = 1e-3;
/// Default radial stretch exponent of the cylindrical map.
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(t: f64) -> f64 {
    if !t.is_finite() {
        return t;
    }
    let mut a = t % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Principal argument in `(-pi, pi]`.
pub fn principal_arg(z: Complex64) -> f64 {
    let t = z.im.atan2(z.re);
    if t == -PI {
        PI
    } else {
        t
    }
}

/// `|sin(pi x)|`, with the argument reduced modulo 1 before multiplying by pi
/// so that integer `x` gives exactly zero.
fn abs_sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return 0.0;
    }
    let frac = x - x.round();
    (PI * frac).sin().abs()
}

/// A point of the extended plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedPoint {
    Finite(Complex64),
    Infinity,
}

impl ExtendedPoint {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtendedPoint::Finite(z) => Some(z),
            ExtendedPoint::Infinity => None,
        }
    }
}

impl From<Complex64> for ExtendedPoint {
    fn from(z: Complex64) -> Self {
        ExtendedPoint::Finite(z)
    }
}

/// Polar coordinates with the principal argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub t: f64,
}

impl PolarPoint {
    pub fn from_complex(z: Complex64) -> Self {
        PolarPoint {
            r: z.norm(),
            t: principal_arg(z),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.r, self.t)
    }
}

/// Parameters shared by the maps: rotation `c`, perturbation `d`, stretch `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapParams {
    pub c: f64,
    pub d: f64,
    pub lambda: f64,
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams {
            c: DEFAULT_C,
            d: DEFAULT_D,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

impl MapParams {
    /// Builds validated parameters.
    pub fn new(c: f64, d: f64, lambda: f64) -> Result<Self> {
        let p = MapParams { c, d, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn with_c(self, c: f64) -> Self {
        MapParams { c, ..self }
    }

    pub fn with_d(self, d: f64) -> Self {
        MapParams { d, ..self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        MapParams { lambda, ..self }
    }

    /// Checks `0 < c < pi/4`, `d > 0`, `lambda > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < FRAC_PI_4) {
            return Err(Error::validation("c", format!("{} is not in (0, pi/4)", self.c)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::validation("d", format!("{} is not a positive number", self.d)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::validation(
                "lambda",
                format!("{} is not a positive number", self.lambda),
            ));
        }
        Ok(())
    }
}

/// The ring `1 - 1/(n + 1/4) < |z| < 1 - 1/(n + 3/4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus {
    pub n: u32,
    pub rin: f64,
    pub rout: f64,
}

/// Slack applied to the closed radii when testing membership.
pub const ANNULUS_SLACK: f64 = 1e-12;

impl Annulus {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("annulus index {n} < 2")));
        }
        let nf = f64::from(n);
        Ok(Annulus {
            n,
            rin: 1.0 - 1.0 / (nf + 0.25),
            rout: 1.0 - 1.0 / (nf + 0.75),
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r >= self.rin - ANNULUS_SLACK && r <= self.rout + ANNULUS_SLACK
    }

    /// Index of the ring containing `z`, if any.
    pub fn index_of(z: Complex64) -> Option<u32> {
        let r = z.norm();
        if !(r < 1.0) {
            return None;
        }
        let y = 1.0 / (1.0 - r);
        let n = (y - 0.5).round();
        if !(2.0..=f64::from(u32::MAX)).contains(&n) {
            return None;
        }
        let ring = Annulus::new(n as u32).ok()?;
        ring.contains(z).then_some(ring.n)
    }
}

/// Cylindrical coordinates `(r cos theta, r sin theta, x3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylPoint3 {
    pub r: f64,
    pub theta: f64,
    pub x3: f64,
}

impl CylPoint3 {
    pub fn new(r: f64, theta: f64, x3: f64) -> Self {
        CylPoint3 {
            r,
            theta: wrap_angle(theta),
            x3,
        }
    }

    pub fn from_cartesian(p: [f64; 3]) -> Self {
        let r = p[0].hypot(p[1]);
        let theta = if r == 0.0 {
            0.0
        } else {
            principal_arg(Complex64::new(p[0], p[1]))
        };
        CylPoint3 { r, theta, x3: p[2] }
    }

    pub fn to_cartesian(self) -> [f64; 3] {
        let (s, c) = self.theta.sin_cos();
        [self.r * c, self.r * s, self.x3]
    }
}

/// Which of the explicit maps a [`MapSpec`] refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapKind {
    PlanarG,
    MobiusL,
    MobiusLInv,
    PlanarH,
    PlanarF,
    Cyl3d,
    Identity,
}

impl MapKind {
    pub const ALL: [MapKind; 7] = [
        MapKind::PlanarG,
        MapKind::MobiusL,
        MapKind::MobiusLInv,
        MapKind::PlanarH,
        MapKind::PlanarF,
        MapKind::Cyl3d,
        MapKind::Identity,
    ];

    /// Name used in configuration files.
    pub fn name(self) -> &'static str {
        match self {
            MapKind::PlanarG => "g",
            MapKind::MobiusL => "L",
            MapKind::MobiusLInv => "L_inv",
            MapKind::PlanarH => "h",
            MapKind::PlanarF => "f",
            MapKind::Cyl3d => "f3d",
            MapKind::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        MapKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Value produced by a planar map: either an ordinary point or a saturated
/// one whose modulus is only known through its logarithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapValue {
    Finite(Complex64),
    Saturated { log_modulus: f64, arg: f64 },
}

impl MapValue {
    pub fn is_saturated(&self) -> bool {
        matches!(self, MapValue::Saturated { .. })
    }

    /// The point itself, or the largest representable point in the saturated direction.
    pub fn point(&self) -> Complex64 {
        match *self {
            MapValue::Finite(z) => z,
            MapValue::Saturated { arg, .. } => Complex64::from_polar(f64::MAX, arg),
        }
    }

    pub fn log_modulus(&self) -> f64 {
        match *self {
            MapValue::Finite(z) => z.norm().ln(),
            MapValue::Saturated { log_modulus, .. } => log_modulus,
        }
    }

    pub fn arg(&self) -> f64 {
        match *self {
            MapValue::Finite(z) => principal_arg(z),
            MapValue::Saturated { arg, .. } => arg,
        }
    }
}

/// Selector plus parameters identifying one map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapSpec {
    pub kind: MapKind,
    pub params: MapParams,
}

impl MapSpec {
    pub fn new(kind: MapKind, params: MapParams) -> Self {
        MapSpec { kind, params }
    }

    pub fn g(c: f64) -> Self {
        MapSpec::new(MapKind::PlanarG, MapParams::default().with_c(c))
    }

    pub fn h(c: f64) -> Self {
        MapSpec::new(MapKind::PlanarH, MapParams::default().with_c(c))
    }

    pub fn f(params: MapParams) -> Self {
        MapSpec::new(MapKind::PlanarF, params)
    }

    pub fn cyl3d(lambda: f64) -> Self {
        MapSpec::new(MapKind::Cyl3d, MapParams::default().with_lambda(lambda))
    }

    pub fn identity() -> Self {
        MapSpec::new(MapKind::Identity, MapParams::default())
    }

    /// Checks the parameters this kind consumes.
    pub fn validate(&self) -> Result<()> {
        let p = self.params;
        match self.kind {
            MapKind::PlanarG | MapKind::PlanarH => MapParams { d: DEFAULT_D, lambda: DEFAULT_LAMBDA, ..p }.validate(),
            MapKind::PlanarF => MapParams { lambda: DEFAULT_LAMBDA, ..p }.validate(),
            MapKind::Cyl3d => MapParams { c: DEFAULT_C, d: DEFAULT_D, ..p }.validate(),
            MapKind::MobiusL | MapKind::MobiusLInv | MapKind::Identity => Ok(()),
        }
    }

    /// Evaluates the map on the plane. `f3d` acts on its `x3 = 0` slice.
    pub fn apply(&self, z: Complex64) -> MapValue {
        match self.kind {
            MapKind::PlanarG => MapValue::Finite(eval_g(z, self.params.c)),
            MapKind::PlanarH => MapValue::Finite(eval_h(z, self.params.c)),
            MapKind::PlanarF => eval_f(z, &self.params),
            MapKind::MobiusL => extended_to_value(eval_l(z.into())),
            MapKind::MobiusLInv => extended_to_value(eval_l_inv(z.into())),
            MapKind::Cyl3d => {
                let p = eval_f3d(
                    CylPoint3::from_cartesian([z.re, z.im, 0.0]),
                    self.params.lambda,
                )
                .to_cartesian();
                MapValue::Finite(Complex64::new(p[0], p[1]))
            }
            MapKind::Identity => MapValue::Finite(z),
        }
    }

    /// Evaluates the map on R^3; planar maps act on `(x1, x2)` and fix `x3`.
    pub fn apply_spatial(&self, p: [f64; 3]) -> [f64; 3] {
        match self.kind {
            MapKind::Cyl3d => {
                eval_f3d(CylPoint3::from_cartesian(p), self.params.lambda).to_cartesian()
            }
            _ => {
                let w = self.apply(Complex64::new(p[0], p[1])).point();
                [w.re, w.im, p[2]]
            }
        }
    }

    /// Distance from `z` to the nearest curve on which the map is not smooth.
    pub fn seam_distance(&self, z: Complex64) -> f64 {
        match self.kind {
            MapKind::PlanarG => g_seam_distance(z),
            MapKind::PlanarH => h_seam_distance(z),
            MapKind::PlanarF => f_seam_distance(z),
            MapKind::MobiusL => (z - 1.0).norm(),
            MapKind::MobiusLInv | MapKind::Cyl3d => z.norm(),
            MapKind::Identity => f64::INFINITY,
        }
    }
}

fn extended_to_value(p: ExtendedPoint) -> MapValue {
    match p {
        ExtendedPoint::Finite(z) => MapValue::Finite(z),
        ExtendedPoint::Infinity => MapValue::Saturated {
            log_modulus: f64::INFINITY,
            arg: 0.0,
        },
    }
}

/// `a(r) = pi/4 - arcsin(sqrt(2) / (2 r))` on `[1, 2]`.
pub fn eval_a(r: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&r) {
        return Err(Error::Domain(format!("a(r) requires 1 <= r <= 2, got {r}")));
    }
    Ok(a_unchecked(r))
}

fn a_unchecked(r: f64) -> f64 {
    let r = r.clamp(1.0, 2.0);
    FRAC_PI_4 - (SQRT_2 / (2.0 * r)).asin()
}

/// Radial data of a point. `gap = 1 - r` and `inv_gap = 1 / gap` are carried
/// separately because callers can often compute them more accurately than
/// by subtracting from one.
#[derive(Clone, Copy, Debug)]
struct Radial {
    r: f64,
    gap: f64,
    inv_gap: f64,
}

impl Radial {
    fn from_modulus(r: f64) -> Self {
        let gap = 1.0 - r;
        Radial {
            r,
            gap,
            inv_gap: 1.0 / gap,
        }
    }
}

/// Image of a non-identity branch of `g` in polar form, with `1 - rho` and
/// its reciprocal, which the conjugation by `L` needs.
#[derive(Clone, Copy, Debug)]
struct Moved {
    rho: f64,
    theta: f64,
    one_minus_rho: f64,
    inv_one_minus_rho: f64,
}

/// Branch selection of `g`. `None` means `g` is the identity at this point.
fn g_polar(rad: Radial, t: f64, c: f64) -> Option<Moved> {
    let Radial { r, gap, inv_gap } = rad;
    let abs_t = t.abs();
    if r < 0.5 {
        let rho = 4.0 * r / 3.0;
        let one_minus_rho = 1.0 - rho;
        Some(Moved {
            rho,
            theta: t + c * t.sin().abs(),
            one_minus_rho,
            inv_one_minus_rho: 1.0 / one_minus_rho,
        })
    } else if gap > 0.0 {
        // 1/2 <= r < 1; rho = 1/(2 - r) = 1/(1 + gap)
        let wobble = c * gap * gap * abs_sin_pi(inv_gap);
        Some(Moved {
            rho: 1.0 / (1.0 + gap),
            theta: t + c * t.sin().abs() + wobble,
            one_minus_rho: gap / (1.0 + gap),
            inv_one_minus_rho: 1.0 + inv_gap,
        })
    } else if r <= 2.0 {
        let a = a_unchecked(r);
        if abs_t <= a {
            return None;
        }
        let phase = (abs_t - a) / (PI - a) * PI;
        Some(Moved {
            rho: r,
            theta: t + c * (2.0 - r) * phase.sin(),
            one_minus_rho: gap,
            inv_one_minus_rho: inv_gap,
        })
    } else {
        None
    }
}

/// The five-branch quasiconformal map `g`.
///
/// Branches are half-open: `r < 1/2`, `1/2 <= r < 1`, `1 <= r <= 2` split by
/// `|t|` against `a(r)`, and `r > 2`. `g(0) = 0`.
pub fn eval_g(z: Complex64, c: f64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    let r = z.norm();
    match g_polar(Radial::from_modulus(r), principal_arg(z), c) {
        None => z,
        Some(m) => Complex64::from_polar(m.rho, m.theta),
    }
}

/// `L(z) = 1 / (1 - z)` on the extended plane.
pub fn eval_l(z: ExtendedPoint) -> ExtendedPoint {
    match z {
        ExtendedPoint::Infinity => ExtendedPoint::Finite(Complex64::new(0.0, 0.0)),
        ExtendedPoint::Finite(z) if z == Complex64::new(1.0, 0.0) => ExtendedPoint::Infinity,
        ExtendedPoint::Finite(z) => ExtendedPoint::Finite((Complex64::new(1.0, 0.0) - z).inv()),
    }
}

/// `L^-1(w) = 1 - 1/w` on the extended plane.
pub fn eval_l_inv(w: ExtendedPoint) -> ExtendedPoint {
    match w {
        ExtendedPoint::Infinity => ExtendedPoint::Finite(Complex64::new(1.0, 0.0)),
        ExtendedPoint::Finite(w) if w == Complex64::new(0.0, 0.0) => ExtendedPoint::Infinity,
        ExtendedPoint::Finite(w) => ExtendedPoint::Finite(Complex64::new(1.0, 0.0) - w.inv()),
    }
}

/// The conjugate `h = L∘g∘L^-1`.
///
/// With `z = L^-1(w) = (w - 1)/w` the polar data of `z` is read off `w`
/// directly: `r = |w - 1| / |w|`, `arg z = arg((w - 1) conj(w))` and
/// `1/(1 - r) = |w| (|w| + |w - 1|) / (2 Re w - 1)`. For integer `w` these are
/// exact, so `h(n + 1) = n + 2` holds bit for bit. The outer `L` is applied as
/// `h = s / (1 + s rho (1 - e^{i theta}))` with `s = 1/(1 - rho)`.
pub fn eval_h(w: Complex64, c: f64) -> Complex64 {
    if w == Complex64::new(0.0, 0.0) {
        // L^-1(0) = infinity, where g is the identity.
        return w;
    }
    let na = w.norm();
    let nb = (w - 1.0).norm();
    let denom = 2.0 * w.re - 1.0;
    let scale = na * (na + nb);
    let rad = Radial {
        r: nb / na,
        gap: denom / scale,
        inv_gap: scale / denom,
    };
    let t = {
        let t = w.im.atan2(na * na - w.re);
        if t == -PI {
            PI
        } else {
            t
        }
    };
    match g_polar(rad, t, c) {
        None => w,
        Some(m) => {
            let half = (0.5 * m.theta).sin();
            // 1 - e^{i theta}
            let q = Complex64::new(2.0 * half * half, -m.theta.sin());
            let inv = m.inv_one_minus_rho;
            if inv.is_finite() && inv.abs() < 1e300 {
                inv / (1.0 + inv * m.rho * q)
            } else {
                (m.one_minus_rho + m.rho * q).inv()
            }
        }
    }
}

/// Reference composition `L(g(L^-1(w)))` in plain floating point.
///
/// Agrees with [`eval_h`] away from the repelling integer ray; kept as the
/// independent route for cross-checks.
pub fn eval_h_composed(w: Complex64, c: f64) -> ExtendedPoint {
    match eval_l_inv(w.into()) {
        ExtendedPoint::Infinity => eval_l(ExtendedPoint::Infinity),
        ExtendedPoint::Finite(z) => eval_l(eval_g(z, c).into()),
    }
}

/// `exp(z4)` scaled by a positive real `k`, switching to log form when
/// `Re z4` exceeds [`EXP_SATURATION`].
fn scaled_exp(k: f64, z4: Complex64) -> MapValue {
    if z4.re > EXP_SATURATION {
        MapValue::Saturated {
            log_modulus: k.ln() + z4.re,
            arg: wrap_angle(z4.im),
        }
    } else {
        MapValue::Finite(k * z4.exp())
    }
}

fn fourth_power(z: Complex64) -> Complex64 {
    let z2 = z * z;
    z2 * z2
}

/// `phi(z) = (Re z + |Im z|) exp(z^4)` on the strip `-1 < Re z + |Im z| < 0`.
pub fn eval_phi(z: Complex64) -> Result<MapValue> {
    let s = z.re + z.im.abs();
    if !(s > -1.0 && s < 0.0) {
        return Err(Error::Domain(format!(
            "phi is defined for -1 < Re z + |Im z| < 0, got {s}"
        )));
    }
    Ok(match scaled_exp(-s, fourth_power(z)) {
        MapValue::Finite(v) => MapValue::Finite(-v),
        MapValue::Saturated { log_modulus, arg } => MapValue::Saturated {
            log_modulus,
            arg: wrap_angle(arg + PI),
        },
    })
}

/// The quasiregular map `f`: `h` where `Re z + |Im z| >= 0`, `z + d exp(z^4)`
/// where `Re z + |Im z| <= -1`, and `z - d phi(z)` in between.
pub fn eval_f(z: Complex64, params: &MapParams) -> MapValue {
    let s = z.re + z.im.abs();
    if s >= 0.0 {
        return MapValue::Finite(eval_h(z, params.c));
    }
    // Outside the h-sector the perturbation is d * k * exp(z^4) with k = 1 on
    // the left sector and k = -s across the strip.
    let k = if s <= -1.0 { 1.0 } else { -s };
    match scaled_exp(params.d * k, fourth_power(z)) {
        MapValue::Finite(v) => MapValue::Finite(z + v),
        sat => sat,
    }
}

/// The cylindrical map `(r e^{i theta}, x3) -> (r e^{lambda cos theta + i(theta + pi)}, x3)`.
pub fn eval_f3d(p: CylPoint3, lambda: f64) -> CylPoint3 {
    if p.r == 0.0 {
        return p;
    }
    let theta = if p.theta > 0.0 {
        p.theta - PI
    } else {
        p.theta + PI
    };
    CylPoint3 {
        r: p.r * (lambda * p.theta.cos()).exp(),
        theta,
        x3: p.x3,
    }
}

/// Distance from `p` to the line `x - |y| = 1` (the seam `|t| = a(r)` of `g`).
fn dist_to_identity_wedge(z: Complex64) -> f64 {
    (z.re - z.im.abs() - 1.0).abs() / SQRT_2
}

/// Distance to the non-smooth set of `g`: the circles `r = 1/2, 1, 2`, the real
/// axis inside `r < 2` (where `|sin t|` has its kinks), the wedge `Re z = 1 + |Im z|`,
/// and the circles `r = 1 - 1/k` where `|sin(pi/(1 - r))|` vanishes.
pub fn g_seam_distance(z: Complex64) -> f64 {
    let r = z.norm();
    let mut d = (r - 0.5).abs().min((r - 1.0).abs()).min((r - 2.0).abs());
    if r < 2.0 {
        d = d.min(z.im.abs());
    }
    if r > 1.0 - 1e-9 && r < 2.0 + 1e-9 {
        d = d.min(dist_to_identity_wedge(z));
    }
    if (0.5..1.0).contains(&r) {
        let k = (1.0 / (1.0 - r)).round().max(2.0);
        d = d.min((r - (1.0 - 1.0 / k)).abs());
    }
    d
}

/// First-order transport of the seam distance of `g` through `L`: near
/// `z = L^-1(w)` lengths scale by `|L'(z)| = |w|^2`.
fn h_seam_distance(w: Complex64) -> f64 {
    match eval_l_inv(w.into()) {
        ExtendedPoint::Infinity => f64::INFINITY,
        ExtendedPoint::Finite(z) => g_seam_distance(z) * w.norm_sqr(),
    }
}

/// Distance from `z` to the curve `Re z + |Im z| = k`.
fn dist_to_vee(z: Complex64, k: f64) -> f64 {
    // Two rays from the vertex (k, 0): along (-1, 1) for y >= 0 and (-1, -1) for y <= 0.
    let p = (z.re - k, z.im.abs());
    let dir = (-FRAC_1_SQRT_2, FRAC_1_SQRT_2);
    let along = p.0 * dir.0 + p.1 * dir.1;
    if along <= 0.0 {
        p.0.hypot(p.1)
    } else {
        (p.0 * dir.1 - p.1 * dir.0).abs()
    }
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn f_seam_distance(z: Complex64) -> f64 {
    let s = z.re + z.im.abs();
    let mut d = dist_to_vee(z, 0.0).min(dist_to_vee(z, -1.0));
    if s < 0.0 {
        // |Im z| is not smooth across the real axis.
        d = d.min(z.im.abs());
    } else {
        d = d.min(h_seam_distance(z));
    }
    d
}

/// Points of the seam `|t| = a(r)`, `1 <= r <= 2`, parametrised by `r`.
pub fn wedge_point(r: f64, upper: bool) -> Complex64 {
    let a = a_unchecked(r);
    Complex64::from_polar(r, if upper { a } else { -a })
}

/// Unit normal of the wedge `Re z = 1 + |Im z|` at a point of it.
pub fn wedge_normal(upper: bool) -> Complex64 {
    if upper {
        Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    } else {
        Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn a_values() {
        assert_abs_diff_eq!(eval_a(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_a(SQRT_2).unwrap(), PI / 12.0, epsilon = 1e-15);
        let a2 = eval_a(2.0).unwrap();
        assert_abs_diff_eq!(a2, FRAC_PI_4 - (SQRT_2 / 4.0).asin(), epsilon = 1e-15);
        assert_abs_diff_eq!(a2, 0.42403, epsilon = 1e-5);
        assert!(eval_a(0.99).is_err());
        assert!(eval_a(2.01).is_err());
    }

    #[test]
    fn a_traces_the_wedge_line() {
        let mut prev = -1.0;
        for i in 0..=1000 {
            let r = 1.0 + f64::from(i) / 1000.0;
            let a = eval_a(r).unwrap();
            assert!(a >= prev);
            prev = a;
            let z = Complex64::from_polar(r, a);
            assert_abs_diff_eq!(z.re, 1.0 + z.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn g_examples() {
        for c in [0.1, 0.5, 0.7] {
            assert_eq!(eval_g(cx(3.0, 0.0), c), cx(3.0, 0.0));
            let half = eval_g(cx(0.5, 0.0), c);
            assert_abs_diff_eq!(half.re, 2.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(half.im, 0.0, epsilon = 1e-15);
            let quarter = eval_g(cx(0.25, 0.0), c);
            assert_abs_diff_eq!(quarter.re, 1.0 / 3.0, epsilon = 1e-15);
            assert_eq!(quarter.im, 0.0);
            assert_eq!(eval_g(cx(0.0, 0.0), c), cx(0.0, 0.0));
        }
    }

    #[test]
    fn g_half_ray() {
        for n in 1..200 {
            let nf = f64::from(n);
            let z = cx(1.0 - 1.0 / (nf + 1.0), 0.0);
            let w = eval_g(z, 0.5);
            assert_abs_diff_eq!(w.re, 1.0 - 1.0 / (nf + 2.0), epsilon = 1e-14);
            assert!(w.im.abs() < 1e-14);
        }
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(eval_l(cx(0.0, 0.0).into()), ExtendedPoint::Finite(cx(1.0, 0.0)));
        assert_eq!(eval_l(cx(0.5, 0.0).into()), ExtendedPoint::Finite(cx(2.0, 0.0)));
        assert_eq!(eval_l(cx(1.0, 0.0).into()), ExtendedPoint::Infinity);
        assert_eq!(eval_l(ExtendedPoint::Infinity), ExtendedPoint::Finite(cx(0.0, 0.0)));
        assert_eq!(eval_l_inv(cx(4.0, 0.0).into()), ExtendedPoint::Finite(cx(0.75, 0.0)));
        assert_eq!(eval_l_inv(cx(0.0, 0.0).into()), ExtendedPoint::Infinity);
        assert_eq!(eval_l_inv(ExtendedPoint::Infinity), ExtendedPoint::Finite(cx(1.0, 0.0)));
        assert_eq!(eval_l(eval_l_inv(ExtendedPoint::Infinity)), ExtendedPoint::Infinity);
    }

    #[test]
    fn h_examples() {
        assert_eq!(eval_h(cx(2.0, 0.0), 0.5), cx(3.0, 0.0));
        assert_eq!(eval_h(cx(-1.0, -1.0), 0.5), cx(-1.0, -1.0));
        assert_eq!(eval_h(cx(0.0, 0.0), 0.5), cx(0.0, 0.0));
    }

    #[test]
    fn h_integer_ray_is_exact() {
        for n in 1..5000u32 {
            let w = cx(f64::from(n) + 1.0, 0.0);
            assert_eq!(eval_h(w, 0.5), cx(f64::from(n) + 2.0, 0.0), "n = {n}");
        }
    }

    #[test]
    fn h_matches_naive_composition() {
        let mut worst: f64 = 0.0;
        for i in 0..60 {
            for j in 0..60 {
                let w = cx(-3.0 + 0.1 * f64::from(i) + 0.013, -3.0 + 0.1 * f64::from(j) + 0.007);
                let a = eval_h(w, 0.5);
                let b = eval_h_composed(w, 0.5).finite().unwrap();
                worst = worst.max((a - b).norm() / (1.0 + b.norm()));
            }
        }
        assert!(worst < 1e-9, "worst relative gap {worst}");
    }

    #[test]
    fn phi_examples() {
        let v = eval_phi(cx(-0.5, 0.0)).unwrap().point();
        assert_abs_diff_eq!(v.re, -0.5 * (1.0f64 / 16.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);

        let z = cx(-0.5, 0.25);
        let v = eval_phi(z).unwrap().point();
        let expect = -0.25 * (z * z * z * z).exp();
        assert_abs_diff_eq!((v - expect).norm(), 0.0, epsilon = 1e-15);

        let near = eval_phi(cx(-1e-12, 0.0)).unwrap().point();
        assert!(near.norm() < 2e-12);

        assert!(eval_phi(cx(0.5, 0.0)).is_err());
        assert!(eval_phi(cx(-2.0, 0.0)).is_err());
    }

    #[test]
    fn f_examples() {
        let p = MapParams::default();
        assert_eq!(eval_f(cx(2.0, 0.0), &p), MapValue::Finite(cx(3.0, 0.0)));
        let left = eval_f(cx(-2.0, 0.0), &p).point();
        assert_abs_diff_eq!(left.re, -2.0 + 1e-3 * 16f64.exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(left.im, 0.0, epsilon = 1e-9);
        let seam = cx(-0.7, 0.7);
        assert!((eval_f(seam, &p).point() - seam).norm() < 1e-14);
    }

    #[test]
    fn f_saturates_instead_of_overflowing() {
        let p = MapParams::default();
        let v = eval_f(cx(-5.0, 0.0), &p);
        match v {
            MapValue::Saturated { log_modulus, arg } => {
                assert_abs_diff_eq!(log_modulus, 1e-3f64.ln() + 625.0, epsilon = 1e-9);
                assert_abs_diff_eq!(arg, 0.0, epsilon = 1e-12);
            }
            other => panic!("expected saturation, got {other:?}"),
        }
        assert!(v.point().norm().is_finite());
    }

    #[test]
    fn f3d_examples() {
        let axis = CylPoint3::new(0.0, 0.3, 5.0);
        assert_eq!(eval_f3d(axis, 1.0), axis);
        let q = eval_f3d(CylPoint3::new(1.0, 0.0, 0.0), 1.0);
        assert_abs_diff_eq!(q.r, std::f64::consts::E, epsilon = 1e-15);
        assert_abs_diff_eq!(q.theta, PI, epsilon = 1e-15);
        assert_eq!(q.x3, 0.0);
    }

    #[test]
    fn annulus_radii_and_membership() {
        let a2 = Annulus::new(2).unwrap();
        assert_abs_diff_eq!(a2.rin, 1.0 - 1.0 / 2.25, epsilon = 1e-16);
        assert_abs_diff_eq!(a2.rout, 1.0 - 1.0 / 2.75, epsilon = 1e-16);
        assert!(Annulus::new(1).is_err());
        assert_eq!(Annulus::index_of(cx(0.6, 0.0)), Some(2));
        assert_eq!(Annulus::index_of(cx(0.0, 0.6)), Some(2));
        // 1 - 1/3 = 0.666.. sits in the gap between A_2 and A_3
        assert_eq!(Annulus::index_of(cx(2.0 / 3.0, 0.0)), None);
        assert_eq!(Annulus::index_of(cx(1.5, 0.0)), None);
    }

    #[test]
    fn params_validation() {
        assert!(MapParams::new(0.5, 1e-3, 1.0).is_ok());
        assert!(MapParams::new(1.0, 1e-3, 1.0).is_err());
        assert!(MapParams::new(0.0, 1e-3, 1.0).is_err());
        assert!(MapParams::new(0.5, 0.0, 1.0).is_err());
        assert!(MapParams::new(0.5, 1e-3, -1.0).is_err());
    }

    #[test]
    fn principal_arg_range() {
        assert_eq!(principal_arg(cx(-1.0, -0.0)), PI);
        assert_eq!(principal_arg(cx(-1.0, 0.0)), PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
    }

    #[test]
    fn seam_distance_vanishes_on_seams() {
        assert!(g_seam_distance(Complex64::from_polar(0.5, 1.0)) < 1e-15);
        assert!(g_seam_distance(wedge_point(1.5, true)) < 1e-12);
        assert!(g_seam_distance(cx(0.3, 0.0)) == 0.0);
        assert!(g_seam_distance(cx(0.0, 3.0)) > 0.9);
        assert!(f_seam_distance(cx(-0.5, 0.5)) < 1e-12);
        assert!(f_seam_distance(cx(-1.5, 0.5)) < 1e-12);
    }
}

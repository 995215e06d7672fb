//! CSV tables, raster images and digests.

use std::io::Write;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::dilatation::DilatationReport;
use crate::error::Result;
use crate::grids::{ComponentReport, CoverageResult, EscapeGrid, GrowthCurve};
use crate::orbits::{Classification, OrbitRecord, OrbitSummary};

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out)
}

/// One iterate per row: `k, re, im, modulus`.
pub fn write_orbit_trace<W: Write>(out: W, orbit: &OrbitRecord) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["k", "re", "im", "modulus"])?;
    for &(k, z) in &orbit.points {
        w.write_record([k.to_string(), num(z.re), num(z.im), num(z.norm())])?;
    }
    w.flush()?;
    Ok(())
}

/// One classified start point of a batch run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchRow {
    pub start: Complex64,
    pub summary: OrbitSummary,
    pub sign_flip_index: Option<usize>,
}

pub fn write_batch<W: Write>(out: W, rows: &[BatchRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "re",
        "im",
        "classification",
        "iterations",
        "returns",
        "escape_iteration",
        "saturated",
        "sign_flip_index",
    ])?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            num(r.start.re),
            num(r.start.im),
            s.classification.name().to_string(),
            s.iterations_used.to_string(),
            s.returns.to_string(),
            opt(s.escape_iteration),
            s.saturated.to_string(),
            opt(r.sign_flip_index),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_components<W: Write>(out: W, comps: &[ComponentReport]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "label",
        "cell_count",
        "xmin",
        "xmax",
        "ymin",
        "ymax",
        "touches_window_boundary",
        "contains",
    ])?;
    for c in comps {
        let markers = c
            .contains
            .iter()
            .map(|z| format!("{}{:+}i", z.re, z.im))
            .collect::<Vec<_>>()
            .join(";");
        let b = &c.bounding_box;
        w.write_record([
            c.label.to_string(),
            c.cell_count.to_string(),
            num(b.xmin),
            num(b.xmax),
            num(b.ymin),
            num(b.ymax),
            c.touches_window_boundary.to_string(),
            markers,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_growth<W: Write>(out: W, curve: &GrowthCurve) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["r", "m", "ratio", "samples"])?;
    for ((r, m), q) in curve.radii.iter().zip(&curve.m_values).zip(&curve.ratios) {
        w.write_record([num(*r), num(*m), num(*q), curve.samples.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `target, preimage, residual`; an empty preimage marks NO_PREIMAGE.
pub fn write_witnesses<W: Write>(out: W, result: &CoverageResult) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["target_re", "target_im", "preimage_re", "preimage_im", "residual"])?;
    for x in &result.witnesses {
        let (pre, pim) = match x.preimage {
            Some(p) => (num(p.re), num(p.im)),
            None => (String::new(), String::new()),
        };
        w.write_record([num(x.target.re), num(x.target.im), pre, pim, num(x.residual)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dilatation<W: Write>(out: W, reports: &[DilatationReport]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["x1", "x2", "x3", "step", "mu_abs", "s1", "s2", "s3", "k_estimate", "reliable"])?;
    for r in reports {
        let coord = |i: usize| r.point.get(i).map_or_else(String::new, |v| num(*v));
        let sv = |i: usize| r.singular_values.get(i).map_or_else(String::new, |v| num(*v));
        w.write_record([
            coord(0),
            coord(1),
            coord(2),
            num(r.step),
            r.mu_abs.map_or_else(String::new, num),
            sv(0),
            sv(1),
            sv(2),
            num(r.k_estimate),
            r.reliable.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Gray level of a cell: escaping cells ramp from 255 (immediate) down to
/// 160 (escape iteration 1023 or later).
pub fn gray_level(class: Classification, escape_iteration: i64) -> u8 {
    match class {
        Classification::Escaping => {
            let k = escape_iteration.clamp(0, 1023) as u32;
            (255 - k * 95 / 1023) as u8
        }
        Classification::Returning => 128,
        Classification::Fixed => 64,
        Classification::Undetermined => 0,
    }
}

fn pixels(grid: &EscapeGrid) -> impl Iterator<Item = u8> + '_ {
    (0..grid.ny).rev().flat_map(move |j| {
        (0..grid.nx).map(move |i| {
            let c = grid.cell(i, j);
            gray_level(c.class, c.escape_iteration)
        })
    })
}

/// Binary portable graymap, one pixel per cell, top row at `ymax`.
pub fn pgm(grid: &EscapeGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    out.extend(pixels(grid));
    out
}

/// Binary portable pixmap with the same gray table on all channels.
pub fn ppm(grid: &EscapeGrid) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    out.extend(pixels(grid).flat_map(|v| [v, v, v]));
    out
}

/// Hex SHA-256 over the given byte strings, each prefixed by its length.
pub fn digest<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{escape_grid, Window};
    use crate::maps::MapSpec;
    use crate::orbits::{iterate, EscapePolicy};

    #[test]
    fn gray_table() {
        assert_eq!(gray_level(Classification::Escaping, 0), 255);
        assert_eq!(gray_level(Classification::Escaping, 1023), 160);
        assert_eq!(gray_level(Classification::Escaping, 50_000), 160);
        assert_eq!(gray_level(Classification::Returning, -1), 128);
        assert_eq!(gray_level(Classification::Fixed, -1), 64);
        assert_eq!(gray_level(Classification::Undetermined, -1), 0);
    }

    #[test]
    fn images_have_one_pixel_per_cell() {
        let w = Window::new(-5.5, -4.5, -0.5, 0.5).unwrap();
        let g = escape_grid(&MapSpec::h(0.5), w, 5, 3, &EscapePolicy::default(), 1).unwrap();
        let p5 = pgm(&g);
        assert!(p5.starts_with(b"P5\n5 3\n255\n"));
        assert_eq!(p5.len(), 11 + 15);
        assert!(p5[11..].iter().all(|&v| v == 64));
        assert_eq!(ppm(&g).len(), 11 + 45);
    }

    #[test]
    fn trace_csv() {
        let o = iterate(&MapSpec::f(Default::default()), Complex64::new(2.0, 0.0), &EscapePolicy::default()).unwrap();
        let mut buf = Vec::new();
        write_orbit_trace(&mut buf, &o).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,re,im,modulus"));
        assert_eq!(lines.next(), Some("0,2,0,2"));
        assert_eq!(lines.next(), Some("1,3,0,3"));
    }

    #[test]
    fn digest_is_framed() {
        assert_ne!(digest([&b"ab"[..], b"c"]), digest([&b"a"[..], b"bc"]));
        assert_eq!(digest([&b"x"[..]]).len(), 64);
    }
}

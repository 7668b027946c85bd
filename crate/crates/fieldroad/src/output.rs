//! Run artifacts: the diagnostics CSV and a self-contained SVG of the
//! entropy decay. Floats are written with Rust's shortest round-trip
//! formatting, so files parse back to bit-identical values and two runs of
//! the same configuration produce byte-identical output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{DecayFit, Record};
use crate::error::Result;

pub const CSV_VERSION_LINE: &str = concat!("# fieldroad ", env!("CARGO_PKG_VERSION"));
pub const CSV_HEADER: &str = "t,H,D,mass,weighted_mass,linf_v,linf_u,lp_gap,newton_iters";

pub fn csv_string(records: &[Record]) -> String {
    let mut out = String::new();
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t, r.h, r.diss, r.mass, r.weighted_mass, r.linf_v, r.linf_u, r.lp_gap, r.newton_iters
        )
        .expect("string write");
    }
    out
}

pub fn write_csv(path: &Path, records: &[Record]) -> Result<()> {
    fs::write(path, csv_string(records))?;
    Ok(())
}

/// Renders ln-scale entropy against time, with the fitted decay line dashed
/// on top when available. Plots only records with positive entropy; with
/// fewer than two such records the file carries a note instead of axes.
pub fn render_svg(path: &Path, records: &[Record], fit: Option<&DecayFit>) -> Result<()> {
    fs::write(path, svg_string(records, fit))?;
    Ok(())
}

const W: f64 = 800.0;
const H: f64 = 500.0;
const ML: f64 = 70.0; // left margin holds the 10^k labels
const MR: f64 = 20.0;
const MT: f64 = 30.0;
const MB: f64 = 50.0;

fn svg_string(records: &[Record], fit: Option<&DecayFit>) -> String {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.h > 0.0)
        .map(|r| (r.t, r.h.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    if pts.len() < 2 {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">entropy non-positive; nothing to plot</text>",
            W / 2.0,
            H / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }
    let (t0, t1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.0), b.max(p.0))
    });
    let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.1), b.max(p.1))
    });
    let t_span = (t1 - t0).max(1e-300);
    let y_span = (y1 - y0).max(1e-12);
    let px = |t: f64| ML + (t - t0) / t_span * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / y_span * (H - MT - MB);

    let _ = writeln!(
        svg,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - ML - MR,
        H - MT - MB
    );
    // Decade ticks on the entropy axis.
    let mut k = y0.ceil() as i64;
    while (k as f64) <= y1 {
        let y = py(k as f64);
        let _ = writeln!(
            svg,
            "<line x1=\"{ML}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>",
            W - MR
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">1e{k}</text>",
            ML - 6.0,
            y + 4.0
        );
        k += 1;
    }
    // A handful of time ticks.
    for i in 0..=5 {
        let t = t0 + t_span * (i as f64) / 5.0;
        let x = px(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{t:.6}</text>",
            H - MB + 20.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">t</text>",
        (ML + W - MR) / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {})\">H</text>",
        15.0,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    );

    let mut path_data = String::new();
    for (t, y) in &pts {
        let _ = write!(path_data, "{:.2},{:.2} ", px(*t), py(*y));
    }
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>",
        path_data.trim_end()
    );

    if let Some(f) = fit {
        // ln H = ln H(t_first) - lambda (t - t_first), drawn across the fit
        // window in decimal logs.
        let h_first = records
            .iter()
            .find(|r| (r.t - f.t_first).abs() <= 1e-12 * f.t_first.abs().max(1.0))
            .map(|r| r.h);
        if let Some(hf) = h_first {
            let log_e = std::f64::consts::LOG10_E;
            let ya = hf.log10();
            let yb = ya - f.lambda * (f.t_last - f.t_first) * log_e;
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"#d62728\" stroke-dasharray=\"6 4\" stroke-width=\"1.5\"/>",
                px(f.t_first),
                py(ya),
                px(f.t_last),
                py(yb)
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" fill=\"#d62728\">lambda = {:.6}, R2 = {:.6}</text>",
                ML + 12.0,
                MT + 18.0,
                f.lambda,
                f.r_squared
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

//! CSV and plot-script emitters.
//!
//! All floats are serialized with 17 significant digits in scientific
//! notation so that identical inputs produce byte-identical files. Plot
//! scripts are gnuplot-compatible and reference the CSVs by relative path.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::efc::Contour;
use crate::error::Result;
use crate::geometry::LatticeGeometry;
use crate::scatter::ScatterReport;
use crate::spectra::{DensityField, LocalizationMetrics, Spectrum};

/// Fixed 17-significant-digit scientific formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

/// `kx,ky,imE,vx,vy,polyline_id` rows, one per contour point.
pub fn contour_csv(contour: &Contour) -> String {
    let mut out = String::from("kx,ky,imE,vx,vy,polyline_id\n");
    for (id, pl) in contour.polylines.iter().enumerate() {
        for p in &pl.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(p.k[0]),
                fmt_f64(p.k[1]),
                fmt_f64(p.im_e),
                fmt_f64(p.velocity[0]),
                fmt_f64(p.velocity[1]),
                id
            );
        }
    }
    out
}

/// `kx,ky,A` rows of a scalar momentum-space field.
pub fn grid_csv(points: &[([f64; 2], f64)]) -> String {
    let mut out = String::from("kx,ky,A\n");
    for (k, a) in points {
        let _ = writeln!(out, "{},{},{}", fmt_f64(k[0]), fmt_f64(k[1]), fmt_f64(*a));
    }
    out
}

/// `index,reE,imE` rows of a spectrum.
pub fn spectrum_csv(spec: &Spectrum) -> String {
    let mut out = String::from("index,reE,imE\n");
    for (i, e) in spec.eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i, fmt_f64(e.re), fmt_f64(e.im));
    }
    out
}

/// `x,y,P` rows of a site density field.
pub fn density_csv(field: &DensityField, geometry: &LatticeGeometry) -> String {
    let mut out = String::from("x,y,P\n");
    for (i, &(x, y)) in geometry.sites().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", x, y, fmt_f64(field.values[i]));
    }
    out
}

/// One-line localization summary record.
pub fn metrics_line(omega: f64, m: &LocalizationMetrics) -> String {
    format!(
        "omega={} edge_fraction={} uniform_edge_fraction={} ipr={} edge_width={} n_edge_sites={}\n",
        fmt_f64(omega),
        fmt_f64(m.edge_fraction),
        fmt_f64(m.uniform_edge_fraction),
        fmt_f64(m.ipr),
        m.edge_width,
        m.n_edge_sites
    )
}

/// Pole table plus a summary line with winding, classification, and kappa.
pub fn scatter_csv(report: &ScatterReport) -> String {
    let mut out = String::from("re,im,abs,side,C_re,C_im\n");
    for p in &report.poles_in {
        let _ = writeln!(
            out,
            "{},{},{},in,{},{}",
            fmt_f64(p.z.re),
            fmt_f64(p.z.im),
            fmt_f64(p.modulus),
            fmt_f64(p.residue_c.re),
            fmt_f64(p.residue_c.im)
        );
    }
    for p in &report.poles_out {
        let _ = writeln!(
            out,
            "{},{},{},out,{},{}",
            fmt_f64(p.z.re),
            fmt_f64(p.z.im),
            fmt_f64(p.modulus),
            fmt_f64(p.residue_c.re),
            fmt_f64(p.residue_c.im)
        );
    }
    let _ = writeln!(
        out,
        "# w={} classification={} kappa={}",
        report.winding,
        report.classification,
        fmt_f64(report.kappa)
    );
    out
}

/// `r_perp,re,im,abs` rows of a scattered-wave profile.
pub fn profile_csv(values: &[(i64, Complex64)]) -> String {
    let mut out = String::from("r_perp,re,im,abs\n");
    for (r, amp) in values {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r,
            fmt_f64(amp.re),
            fmt_f64(amp.im),
            fmt_f64(amp.norm())
        );
    }
    out
}

/// `x,y,density` rows for one snapshot.
pub fn snapshot_csv(traj: &Trajectory, snapshot: usize) -> String {
    let mut out = String::from("x,y,density\n");
    let density = traj.snapshots[snapshot].site_density(traj.dim);
    for (i, &(x, y)) in traj.geometry.sites().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", x, y, fmt_f64(density[i]));
    }
    out
}

/// `time,<label...>` rows of per-snapshot region weights.
pub fn weights_csv(times: &[f64], weights: &[std::collections::BTreeMap<String, f64>]) -> String {
    let labels: Vec<String> = weights
        .first()
        .map(|w| w.keys().cloned().collect())
        .unwrap_or_default();
    let mut out = format!("time,{}\n", labels.join(","));
    for (t, w) in times.iter().zip(weights.iter()) {
        let cols: Vec<String> =
            labels.iter().map(|l| fmt_f64(w.get(l).copied().unwrap_or(0.0))).collect();
        let _ = writeln!(out, "{},{}", fmt_f64(*t), cols.join(","));
    }
    out
}

/// Line-oriented `key=value` manifest.
pub fn manifest(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

/// Gnuplot script drawing contour polylines from a contour CSV.
pub fn contour_plot_script(csv_name: &str, omega: f64) -> String {
    format!(
        "set datafile separator ','\n\
         set size square\n\
         set xrange [-pi:pi]\n\
         set yrange [-pi:pi]\n\
         set xlabel 'kx'\n\
         set ylabel 'ky'\n\
         set title 'equal-frequency contour, omega = {omega}'\n\
         plot '{csv_name}' skip 1 using 1:2:3 with points pt 7 ps 0.4 palette \
         title 'Im E on contour'\n"
    )
}

/// Gnuplot script rendering a momentum-space heatmap CSV.
pub fn momentum_heatmap_script(csv_name: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set size square\n\
         set xlabel 'kx'\n\
         set ylabel 'ky'\n\
         set title '{title}'\n\
         set view map\n\
         splot '{csv_name}' skip 1 using 1:2:3 with points pt 5 ps 0.6 palette notitle\n"
    )
}

/// Gnuplot script rendering a real-space heatmap CSV (`x,y,value`).
pub fn lattice_heatmap_script(csv_name: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set size square\n\
         set xlabel 'x'\n\
         set ylabel 'y'\n\
         set title '{title}'\n\
         set view map\n\
         splot '{csv_name}' skip 1 using 1:2:3 with points pt 5 ps 1.0 palette notitle\n"
    )
}

/// Gnuplot script for a complex-plane spectrum CSV.
pub fn spectrum_plot_script(csv_name: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set xlabel 'Re E'\n\
         set ylabel 'Im E'\n\
         set title '{title}'\n\
         plot '{csv_name}' skip 1 using 2:3 with points pt 7 ps 0.5 notitle\n"
    )
}

//! Plain-CSV plot data. Every header names the column and its unit.

use std::path::Path;
use std::str::FromStr;

use crate::chaos::liouville_q;
use crate::dms::SphereSample;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    MassHistogram,
    RadialProfile,
    ProbeScatter,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mass-histogram" => Ok(PlotKind::MassHistogram),
            "radial-profile" => Ok(PlotKind::RadialProfile),
            "probe-scatter" => Ok(PlotKind::ProbeScatter),
            other => Err(Error::Usage(format!(
                "unknown plot kind '{other}' (expected mass-histogram, radial-profile or probe-scatter)"
            ))),
        }
    }
}

pub enum PlotInput<'a> {
    Ensemble(&'a Ensemble),
    /// A sphere sample and the γ it was drawn at.
    Sphere(&'a SphereSample, f64),
}

pub const HISTOGRAM_BINS: usize = 20;

/// Renders the plot data as CSV text.
pub fn plot_data(input: &PlotInput, kind: PlotKind) -> Result<String> {
    match (kind, input) {
        (PlotKind::MassHistogram, PlotInput::Ensemble(e)) => mass_histogram(e, HISTOGRAM_BINS),
        (PlotKind::ProbeScatter, PlotInput::Ensemble(e)) => probe_scatter(e),
        (PlotKind::RadialProfile, PlotInput::Sphere(s, gamma)) => Ok(radial_profile(s, *gamma)),
        (PlotKind::RadialProfile, PlotInput::Ensemble(_)) => {
            Err(Error::Usage("radial-profile needs a sphere sample, not an ensemble".into()))
        }
        (_, PlotInput::Sphere(..)) => Err(Error::Usage("mass-histogram and probe-scatter need an ensemble".into())),
    }
}

pub fn emit_plot_data(input: &PlotInput, kind: &str, path: &Path) -> Result<()> {
    let kind = PlotKind::from_str(kind)?;
    let text = plot_data(input, kind)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Weighted histogram of each probe's mass fraction on `[0, 1]`; each probe
/// column holds normalized weight per bin.
fn mass_histogram(e: &Ensemble, bins: usize) -> Result<String> {
    let w = e.normalized_weights()?;
    let np = e.probe_names.len();
    let mut h = vec![vec![0.0; np]; bins];
    for (r, wi) in e.records.iter().zip(&w) {
        for (p, &x) in r.observables.iter().enumerate() {
            let b = ((x.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
            h[b][p] += wi;
        }
    }
    let mut out = String::from("bin_lo[fraction],bin_hi[fraction]");
    for name in &e.probe_names {
        out.push_str(&format!(",{name}[probability]"));
    }
    out.push('\n');
    for (b, row) in h.iter().enumerate() {
        out.push_str(&format!("{},{}", b as f64 / bins as f64, (b + 1) as f64 / bins as f64));
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

fn probe_scatter(e: &Ensemble) -> Result<String> {
    let w = e.normalized_weights()?;
    let mut out = String::from("seed[index],weight[normalized]");
    for name in &e.probe_names {
        out.push_str(&format!(",{name}[fraction]"));
    }
    out.push('\n');
    for (r, wi) in e.records.iter().zip(&w) {
        out.push_str(&format!("{},{}", r.seed, wi));
        for v in &r.observables {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Per row: circle mean of the field, of `X = h + Q t`, and the row's mass.
fn radial_profile(s: &SphereSample, gamma: f64) -> String {
    let g = s.grid();
    let q = liouville_q(gamma);
    let path = s.radial_path(gamma);
    let masses = s.measure.masses();
    let nth = g.n_theta();
    let mut out = String::from("t[log-radius],field_mean[field],radial_x[field],row_mass[area]\n");
    for (row, (&t, &x)) in path.t.iter().zip(&path.x).enumerate() {
        let m: f64 = masses[row * nth..(row + 1) * nth].iter().sum();
        out.push_str(&format!("{t},{},{x},{m}\n", x - q * t));
    }
    out
}

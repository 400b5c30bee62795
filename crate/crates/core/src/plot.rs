//! SVG line charts of a recorded trace: positions per coordinate against the
//! oracle, velocities, and errors on a log axis.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::sim::Trace;

const PANEL_W: u32 = 900;
const PANEL_H: u32 = 300;
const LOG_FLOOR: f64 = 1e-12;

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

fn bounds(series: &[Vec<(f64, f64)>]) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flatten()
        .map(|p| p.1)
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn color(k: usize) -> RGBColor {
    const PALETTE: [RGBColor; 8] = [
        RGBColor(31, 119, 180),
        RGBColor(255, 127, 14),
        RGBColor(44, 160, 44),
        RGBColor(214, 39, 40),
        RGBColor(148, 103, 189),
        RGBColor(140, 86, 75),
        RGBColor(227, 119, 194),
        RGBColor(127, 127, 127),
    ];
    PALETTE[k % PALETTE.len()]
}

fn linear_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    title: &str,
    t_range: (f64, f64),
    series: &[(String, Vec<(f64, f64)>)],
    reference: Option<&Vec<(f64, f64)>>,
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let mut all: Vec<Vec<(f64, f64)>> = series.iter().map(|s| s.1.clone()).collect();
    all.extend(reference.cloned());
    let (lo, hi) = bounds(&all);
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 18))
        .margin(8)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(t_range.0..t_range.1, lo..hi)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("t").draw().map_err(plot_err)?;
    for (k, (label, pts)) in series.iter().enumerate() {
        let c = color(k);
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), &c))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
    }
    if let Some(r) = reference {
        chart
            .draw_series(LineSeries::new(r.iter().copied(), BLACK.stroke_width(2)))
            .map_err(plot_err)?
            .label("x*")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLACK.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

fn log_panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    t_range: (f64, f64),
    series: &[(String, Vec<(f64, f64)>)],
) -> Result<()>
where
    DB::ErrorType: 'static,
{
    let hi = series
        .iter()
        .flat_map(|s| s.1.iter().map(|p| p.1))
        .fold(LOG_FLOOR * 10.0, f64::max);
    let lo = series
        .iter()
        .flat_map(|s| s.1.iter().map(|p| p.1))
        .filter(|v| *v > 0.0)
        .fold(hi, f64::min)
        .max(LOG_FLOOR);
    let mut chart = ChartBuilder::on(area)
        .caption("errors", ("sans-serif", 18))
        .margin(8)
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(t_range.0..t_range.1, (lo..hi * 1.5).log_scale())
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("t").draw().map_err(plot_err)?;
    for (k, (label, pts)) in series.iter().enumerate() {
        let c = color(k);
        let clamped = pts.iter().map(|&(t, v)| (t, v.max(LOG_FLOOR)));
        chart
            .draw_series(LineSeries::new(clamped, &c))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

/// Write all panels of `trace`, stacked vertically, to an SVG file.
pub fn plot_trace(trace: &Trace, out: &Path) -> Result<()> {
    let recs = &trace.records;
    if recs.is_empty() {
        return Err(Error::Plot("trace has no records".into()));
    }
    let lay = &trace.layout;
    let t_range = (recs[0].t, recs[recs.len() - 1].t.max(recs[0].t + 1e-9));
    let vel_panels = if lay.has_velocity { lay.dim } else { 0 };
    let rows = lay.dim + vel_panels + 1;
    let root = SVGBackend::new(out, (PANEL_W, PANEL_H * rows as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let areas = root.split_evenly((rows, 1));

    for k in 0..lay.dim {
        let series: Vec<_> = (0..lay.n_agents)
            .map(|i| (format!("agent {}", i + 1), recs.iter().map(|r| (r.t, r.x[i][k])).collect()))
            .collect();
        let reference: Vec<_> = recs.iter().map(|r| (r.t, r.x_star[k])).collect();
        linear_panel(&areas[k], &format!("position, coordinate {}", k + 1), t_range, &series, Some(&reference))?;
    }
    for k in 0..vel_panels {
        let series: Vec<_> = (0..lay.n_agents)
            .map(|i| {
                let pts = recs
                    .iter()
                    .filter_map(|r| r.v.as_ref().map(|v| (r.t, v[i][k])))
                    .collect();
                (format!("agent {}", i + 1), pts)
            })
            .collect();
        linear_panel(&areas[lay.dim + k], &format!("velocity, coordinate {}", k + 1), t_range, &series, None)?;
    }
    let mut errors = vec![
        ("tracking".to_string(), recs.iter().map(|r| (r.t, r.tracking_error)).collect::<Vec<_>>()),
    ];
    if lay.n_agents > 1 {
        errors.push(("consensus".into(), recs.iter().map(|r| (r.t, r.consensus_error)).collect()));
    }
    let est: Vec<_> = recs.iter().filter_map(|r| r.estimator_error.map(|e| (r.t, e))).collect();
    if !est.is_empty() {
        errors.push(("estimator".into(), est));
    }
    log_panel(&areas[rows - 1], t_range, &errors)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

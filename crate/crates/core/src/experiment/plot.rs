//! Static SVG figures.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Drawn in grey underneath the coloured series.
    pub background: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            style: Style::Line,
            background: false,
        }
    }

    pub fn points(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            style: Style::Points,
            ..Self::line(name, points)
        }
    }

    pub fn behind(mut self) -> Self {
        self.background = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(format!("plot: {e}")))
}

fn bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            xr = (xr.0.min(x), xr.1.max(x));
            yr = (yr.0.min(y), yr.1.max(y));
        }
    }
    let pad = |(lo, hi): (f64, f64)| {
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        let w = (hi - lo).max(1e-9);
        (lo - 0.05 * w, hi + 0.05 * w)
    };
    (pad(xr), pad(yr))
}

/// Writes the panels stacked vertically into one SVG file.
pub fn render(path: &Path, panels: &[Panel]) -> Result<()> {
    let height = 360 * panels.len().max(1) as u32;
    let root = SVGBackend::new(path, (760, height)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let areas = root.split_evenly((panels.len().max(1), 1));
    for (panel, area) in panels.iter().zip(areas) {
        let ((x0, x1), (y0, y1)) = bounds(&panel.series);
        let mut chart = ChartBuilder::on(&area)
            .caption(&panel.title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(panel.x_label.as_str())
            .y_desc(panel.y_label.as_str())
            .draw()
            .map_err(plot_err)?;
        let mut colour = 0;
        let mut labelled = false;
        for s in panel.series.iter().filter(|s| s.background).chain(panel.series.iter().filter(|s| !s.background)) {
            let c: RGBColor = if s.background {
                RGBColor(170, 170, 170)
            } else {
                colour += 1;
                let p = Palette99::pick(colour - 1).to_rgba();
                RGBColor(p.0, p.1, p.2)
            };
            let pts = s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite());
            let anno = match s.style {
                Style::Line => chart
                    .draw_series(LineSeries::new(pts, c.stroke_width(2)))
                    .map_err(plot_err)?,
                Style::Points => chart
                    .draw_series(pts.map(|p| Circle::new(p, 2, c.filled())))
                    .map_err(plot_err)?,
            };
            if !s.name.is_empty() {
                labelled = true;
                anno.label(s.name.clone())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], c.stroke_width(2)));
            }
        }
        if labelled {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(plot_err)?;
        }
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

//! SVG charts: learning curves and spend vs emission per class.

use std::path::Path;

use plotters::prelude::*;

use crate::classifiers::EpochLog;
use crate::emission::EmissionReport;
use crate::error::{Error, Result};

fn draw_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Serde(format!("plot: {e:?}"))
}

/// Train and validation loss per epoch.
pub fn learning_curve(log: &[EpochLog], path: &Path) -> Result<()> {
    if log.is_empty() {
        return Err(Error::Input("empty epoch log".into()));
    }
    let max_loss = log
        .iter()
        .flat_map(|e| [e.train_loss, e.validation_loss])
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let last = log.last().map(|e| e.epoch).unwrap_or(1).max(2);

    let root = SVGBackend::new(path, (720, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Learning curve", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(52)
        .build_cartesian_2d(1f64..last as f64, 0f64..max_loss * 1.05)
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("epoch")
        .y_desc("loss")
        .draw()
        .map_err(draw_err)?;
    chart
        .draw_series(LineSeries::new(log.iter().map(|e| (e.epoch as f64, e.train_loss)), &BLUE))
        .map_err(draw_err)?
        .label("train")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLUE));
    chart
        .draw_series(LineSeries::new(log.iter().map(|e| (e.epoch as f64, e.validation_loss)), &RED))
        .map_err(draw_err)?
        .label("validation")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], RED));
    chart
        .configure_series_labels()
        .background_style(WHITE)
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

/// Paired bars per class: spend on the left, emission on the right, both on one axis.
pub fn spend_emission_bars(report: &EmissionReport, path: &Path) -> Result<()> {
    let rows: Vec<(&String, f64, f64)> = report
        .per_class
        .iter()
        .map(|(c, t)| (c, t.total_spend, t.total_emission))
        .collect();
    let hi = rows.iter().flat_map(|r| [r.1, r.2]).fold(0.0f64, f64::max).max(1.0);
    let lo = rows.iter().flat_map(|r| [r.1, r.2]).fold(0.0f64, f64::min);
    let n = rows.len().max(1);

    let width = (120 + 48 * n).max(480) as u32;
    let root = SVGBackend::new(path, (width, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Spend (USD) and emission (kg CO2e) by class", ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(64)
        .build_cartesian_2d(0f64..n as f64, lo * 1.05..hi * 1.05)
        .map_err(draw_err)?;
    let codes: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(n)
        .x_label_formatter(&|x| {
            let i = x.floor() as usize;
            codes.get(i).cloned().unwrap_or_default()
        })
        .draw()
        .map_err(draw_err)?;
    let spend_color = RGBColor(70, 110, 180);
    let emission_color = RGBColor(200, 90, 60);
    chart
        .draw_series(
            rows.iter()
                .enumerate()
                .map(|(i, r)| Rectangle::new([(i as f64 + 0.1, 0.0), (i as f64 + 0.5, r.1)], spend_color.filled())),
        )
        .map_err(draw_err)?
        .label("spend")
        .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], spend_color.filled()));
    chart
        .draw_series(
            rows.iter()
                .enumerate()
                .map(|(i, r)| Rectangle::new([(i as f64 + 0.5, 0.0), (i as f64 + 0.9, r.2)], emission_color.filled())),
        )
        .map_err(draw_err)?
        .label("emission")
        .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], emission_color.filled()));
    chart
        .configure_series_labels()
        .background_style(WHITE)
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

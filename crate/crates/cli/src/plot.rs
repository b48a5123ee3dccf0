use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;
use qoqudit_core::scaling::{count_bound, ScalingRecord};

use crate::output::write_atomic;

/// log2 of the pulse count against n, with the count bound and a 2^n guide.
pub fn scaling_svg(records: &[ScalingRecord], clean_boundary: bool, path: &Path) -> Result<()> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
        let n_lo = records.first().map_or(3, |r| r.n) as f64;
        let n_hi = records.last().map_or(4, |r| r.n) as f64;
        let bound = |r: &ScalingRecord| (count_bound(r.n, r.l, clean_boundary) as f64).log2();
        let y_hi = records.iter().map(bound).fold(1.0, f64::max).ceil() + 1.0;
        let mut chart = ChartBuilder::on(&root)
            .caption("pulse count scaling", ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(40)
            .y_label_area_size(56)
            .build_cartesian_2d((n_lo - 0.5)..(n_hi + 0.5), 0.0..y_hi)
            .map_err(|e| anyhow!("{e}"))?;
        chart
            .configure_mesh()
            .x_desc("n")
            .y_desc("log2(pulse count)")
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        let measured: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, (r.pulse_count as f64).log2())).collect();
        chart
            .draw_series(LineSeries::new(measured.clone(), BLUE.stroke_width(2)))
            .map_err(|e| anyhow!("{e}"))?
            .label("synthesized")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLUE.stroke_width(2)));
        chart
            .draw_series(measured.iter().map(|&p| Circle::new(p, 4, BLUE.filled())))
            .map_err(|e| anyhow!("{e}"))?;
        chart
            .draw_series(LineSeries::new(records.iter().map(|r| (r.n as f64, bound(r))), RED.stroke_width(1)))
            .map_err(|e| anyhow!("{e}"))?
            .label("count bound")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], RED));
        chart
            .draw_series(LineSeries::new(records.iter().map(|r| (r.n as f64, r.n as f64)), BLACK.mix(0.4)))
            .map_err(|e| anyhow!("{e}"))?
            .label("2^n")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLACK.mix(0.4)));
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperLeft)
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        root.present().map_err(|e| anyhow!("{e}"))?;
    }
    write_atomic(path, svg.as_bytes())
}

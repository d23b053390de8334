//! Static tracking plot: good-agent states as solid lines, the trusted
//! reference average `rbar_T(t-1)` dashed, adversary emissions dotted.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::consensus::SimulationTrace;
use crate::graph::{AgentId, AgentRole};

const PALETTE: [RGBColor; 6] = [
    RGBColor(0, 90, 200),
    RGBColor(0, 150, 70),
    RGBColor(120, 60, 170),
    RGBColor(220, 130, 0),
    RGBColor(0, 160, 160),
    RGBColor(90, 90, 90),
];

/// Adversary series that leave the y-range are cut into in-range pieces.
fn in_range_segments(points: &[(f64, f64)], lo: f64, hi: f64) -> Vec<Vec<(f64, f64)>> {
    let mut segments = vec![Vec::new()];
    for &(t, v) in points {
        if (lo..=hi).contains(&v) {
            segments.last_mut().unwrap().push((t, v));
        } else if !segments.last().unwrap().is_empty() {
            segments.push(Vec::new());
        }
    }
    segments.retain(|s| s.len() > 1);
    segments
}

pub fn tracking_plot(
    path: &Path,
    trace: &SimulationTrace,
) -> Result<(), Box<dyn std::error::Error>> {
    let topo = &trace.topology;
    let horizon = trace.horizon as f64;
    let target: Vec<(f64, f64)> = (1..=trace.horizon)
        .map(|t| (t as f64, trace.trusted_reference_mean(t - 1)))
        .collect();

    // One emission series per adversary: its value toward the lowest-id good neighbour.
    let mut injected: BTreeMap<AgentId, Vec<(f64, f64)>> = BTreeMap::new();
    for record in &trace.rounds {
        for (sender, receiver, value) in record.adversary_emissions(topo) {
            let first = topo
                .neighbors(sender)
                .iter()
                .find(|j| topo.role(**j) != AgentRole::Adversarial);
            if Some(&receiver) == first {
                injected
                    .entry(sender)
                    .or_default()
                    .push((record.t as f64, value));
            }
        }
    }

    let (mut lo, mut hi) = trace
        .states
        .iter()
        .flatten()
        .chain(target.iter().map(|(_, v)| v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let pad = ((hi - lo) * 0.05).max(1e-6);
    lo -= pad;
    hi += pad;

    let root = SVGBackend::new(path, (1000, 600)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(1.0..horizon.max(2.0), lo..hi)?;
    chart.configure_mesh().x_desc("t").y_desc("state").draw()?;

    for (k, id) in topo.good().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let series: Vec<(f64, f64)> = (1..=trace.horizon)
            .map(|t| (t as f64, trace.state(t, id)))
            .collect();
        chart.draw_series(LineSeries::new(series, color.stroke_width(1)))?;
    }
    chart.draw_series(DashedLineSeries::new(target, 8, 5, BLUE.stroke_width(2)))?;
    for points in injected.values() {
        for segment in in_range_segments(points, lo, hi) {
            chart.draw_series(DashedLineSeries::new(segment, 1, 4, RED.stroke_width(2)))?;
        }
    }
    root.present()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_break_on_out_of_range() {
        let pts = [
            (1.0, 0.0),
            (2.0, 0.5),
            (3.0, 9.0),
            (4.0, 0.2),
            (5.0, 0.3),
            (6.0, 0.1),
        ];
        let segs = in_range_segments(&pts, 0.0, 1.0);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[1].len(), 3);
    }
}

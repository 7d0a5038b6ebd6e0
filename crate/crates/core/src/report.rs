//! CSV writers for every artifact, plus SVG charts rendered from those CSVs.

use std::io::{Read, Write};

use crate::commsched::{Direction, InterOrbitPath, TransmissionPlan};
use crate::constellation::{EcefPosition, SatId, TimeGrid, Window, WindowStats};
use crate::fedsim::{OverheadRow, RoundTiming};
use crate::netgraph::{EdgeKind, TopologySnapshot};

pub type CsvResult = Result<(), csv::Error>;

pub const ROUND_HEADER: [&str; 7] =
    ["round", "on_board_s", "terrestrial_s", "intra_orbit_s", "inter_orbit_s", "sat_ground_s", "wall_clock_s"];

const COMPONENTS: [&str; 6] = ["on_board_s", "terrestrial_s", "intra_orbit_s", "inter_orbit_s", "sat_ground_s", "wall_clock_s"];

fn component_fields(t: &RoundTiming) -> [String; 6] {
    [
        t.on_board_s.to_string(),
        t.terrestrial_s.to_string(),
        t.intra_orbit_s.to_string(),
        t.inter_orbit_s.to_string(),
        t.sat_ground_s.to_string(),
        t.wall_clock_s.to_string(),
    ]
}

pub fn write_rounds(w: impl Write, rounds: &[RoundTiming]) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ROUND_HEADER)?;
    for r in rounds {
        let mut rec = vec![r.round.to_string()];
        rec.extend(component_fields(r));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// `slice,orbit,link_from,link_to,bits`. Uplinks run satellite to station,
/// downlinks station to satellite.
pub fn write_plans<'a>(w: impl Write, plans: impl IntoIterator<Item = &'a TransmissionPlan>) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["slice", "orbit", "link_from", "link_to", "bits"])?;
    for plan in plans {
        for a in &plan.assignments {
            let sat = a.sat.to_string();
            let gs = format!("GS{}", a.gs_id);
            let (from, to) = match plan.direction {
                Direction::Up => (sat, gs),
                Direction::Down => (gs, sat),
            };
            out.write_record([a.slice.to_string(), a.sat.plane.to_string(), from, to, a.bits.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Ordered hop list with per-hop delays.
pub fn write_paths<'a>(w: impl Write, paths: impl IntoIterator<Item = (usize, &'a InterOrbitPath)>) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["round", "hop", "from", "to", "distance_m", "rate_bps", "propagation_s", "transmission_s"])?;
    for (round, path) in paths {
        for (i, h) in path.hops.iter().enumerate() {
            out.write_record([
                round.to_string(),
                (i + 1).to_string(),
                h.from.to_string(),
                h.to.to_string(),
                h.distance_m.to_string(),
                h.rate_bps.to_string(),
                h.propagation_s.to_string(),
                h.transmission_s.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `step,kind,from,to,rate_bps` edge list.
pub fn write_topology<'a>(w: impl Write, snaps: impl IntoIterator<Item = &'a TopologySnapshot>) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "kind", "from", "to", "rate_bps"])?;
    for s in snaps {
        let step = s.step.to_string();
        for (kind, edges) in [(EdgeKind::IntraOrbit, &s.intra_orbit_edges), (EdgeKind::InterOrbit, &s.inter_orbit_edges)] {
            for e in edges {
                out.write_record([&step, kind.as_str(), &e.a.to_string(), &e.b.to_string(), &e.rate_bps.to_string()])?;
            }
        }
        for e in &s.sgl_edges {
            let gs = format!("GS{}", e.gs_id);
            out.write_record([&step, EdgeKind::Sgl.as_str(), &e.sat.to_string(), &gs, &e.rate_bps.to_string()])?;
        }
        for e in &s.gs_ps_edges {
            let rate = e.rate_bps.map_or_else(|| "inf".to_string(), |r| r.to_string());
            out.write_record([&step, EdgeKind::GsPs.as_str(), &format!("GS{}", e.gs_id), "PS", &rate])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `step,plane,slot,x_m,y_m,z_m`; `positions[k]` holds the satellites of
/// `steps[k]` in index order.
pub fn write_positions(w: impl Write, steps: &[usize], sats: &[SatId], positions: &[Vec<EcefPosition>]) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "plane", "slot", "x_m", "y_m", "z_m"])?;
    for (step, pos) in steps.iter().zip(positions) {
        for (id, p) in sats.iter().zip(pos) {
            out.write_record([
                step.to_string(),
                id.plane.to_string(),
                id.slot.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                p.z.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per communication window.
pub fn write_windows(w: impl Write, sats: &[SatId], windows: &[Vec<Window>], grid: &TimeGrid) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sat", "gs", "start_step", "end_step", "start_s", "duration_s"])?;
    for (id, list) in sats.iter().zip(windows) {
        for win in list {
            out.write_record([
                id.to_string(),
                format!("GS{}", win.gs_id),
                win.start_step.to_string(),
                win.end_step.to_string(),
                grid.time_of(win.start_step).to_string(),
                win.duration_s(grid).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_window_stats(w: impl Write, stats: &WindowStats) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["windows", "mean_window_s", "revisits", "mean_revisit_s"])?;
    out.write_record([
        stats.windows.to_string(),
        stats.mean_window_s.to_string(),
        stats.revisits.to_string(),
        stats.mean_revisit_s.to_string(),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn write_overhead(w: impl Write, rows: &[OverheadRow]) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dataset",
        "raw_bits_per_image",
        "transmitted_bits_per_image",
        "ratio",
        "raw_bits_total",
        "transmitted_bits_total",
        "beneficial",
    ])?;
    for r in rows {
        out.write_record([
            r.name.clone(),
            r.raw_bits_per_image.to_string(),
            r.transmitted_bits_per_image.to_string(),
            r.ratio.to_string(),
            r.raw_bits_total.to_string(),
            r.transmitted_bits_total.to_string(),
            r.beneficial.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_losses(w: impl Write, losses: &[f64]) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["round", "global_loss"])?;
    for (i, l) in losses.iter().enumerate() {
        out.write_record([i.to_string(), l.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// One sweep grid point: axis values, strategy, and totals (`None` when the
/// run did not complete). With no axes this is a plain strategy summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    pub strategy: String,
    pub totals: Option<RoundTiming>,
}

pub fn write_sweep(w: impl Write, axes: &[String], rows: &[SweepRow]) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = axes.to_vec();
    header.extend(["strategy", "status", "rounds"].map(String::from));
    header.extend(COMPONENTS.map(String::from));
    out.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = r.axis_values.iter().map(f64::to_string).collect();
        rec.push(r.strategy.clone());
        match &r.totals {
            Some(t) => {
                rec.push("ok".into());
                rec.push(t.round.to_string());
                rec.extend(component_fields(t));
            }
            None => {
                rec.push("non_completion".into());
                rec.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

const PALETTE: [&str; 5] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Stacked bars of the five components, one bar per data row. `label_cols`
/// name the columns joined into each bar's label. Reads a CSV produced by
/// [`write_rounds`] or [`write_sweep`].
pub fn svg_stacked_components(csv_text: impl Read, label_cols: &[&str], title: &str) -> Result<String, csv::Error> {
    let mut rdr = csv::Reader::from_reader(csv_text);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let label_idx: Vec<usize> = label_cols.iter().filter_map(|c| col(c)).collect();
    let comp_idx: Vec<usize> = COMPONENTS[..5].iter().filter_map(|c| col(c)).collect();
    let mut bars: Vec<(String, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let label = label_idx.iter().map(|&i| &rec[i]).collect::<Vec<_>>().join(" ");
        let values: Vec<f64> = comp_idx.iter().map(|&i| rec[i].parse().unwrap_or(0.0)).collect();
        bars.push((label, values));
    }
    let max = bars.iter().map(|(_, v)| v.iter().sum::<f64>()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (bar_w, gap, plot_h, left, top) = (36.0, 14.0, 300.0, 70.0, 40.0);
    let width = left + bars.len() as f64 * (bar_w + gap) + 180.0;
    let height = top + plot_h + 90.0;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    s.push_str(&format!("<text x=\"{left}\" y=\"20\" font-size=\"14\">{}</text>\n", escape(title)));
    s.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h,
        width - 170.0,
        top + plot_h
    ));
    s.push_str(&format!(
        "<text x=\"4\" y=\"{}\">{:.3e} s</text>\n<text x=\"4\" y=\"{}\">0</text>\n",
        top + 4.0,
        max,
        top + plot_h
    ));
    for (i, (label, values)) in bars.iter().enumerate() {
        let x = left + gap / 2.0 + i as f64 * (bar_w + gap);
        let mut y = top + plot_h;
        for (k, v) in values.iter().enumerate() {
            let h = v / max * plot_h;
            y -= h;
            s.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w}\" height=\"{h:.2}\" fill=\"{}\"/>\n",
                PALETTE[k % PALETTE.len()]
            ));
        }
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" transform=\"rotate(45 {:.2} {:.2})\">{}</text>\n",
            x,
            top + plot_h + 14.0,
            x,
            top + plot_h + 14.0,
            escape(label)
        ));
    }
    for (k, name) in COMPONENTS[..5].iter().enumerate() {
        let y = top + 14.0 * k as f64;
        let x = width - 160.0;
        s.push_str(&format!(
            "<rect x=\"{x}\" y=\"{y}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}</text>\n",
            PALETTE[k],
            x + 14.0,
            y + 9.0,
            name
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

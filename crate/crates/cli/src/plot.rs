//! Static SVG charts from result CSVs.
//!
//! Accepts either the per-epoch training schema (one row per seed and epoch)
//! or the aggregated comparison schema, and renders loss and accuracy panels
//! with a mean line and a min/max band per model. Output is deterministic:
//! the same CSV always yields byte-identical SVG.

use std::fmt::Write as _;

use crate::data::DataError;
use crate::{CliError, CliResult};

const TRAIN_HEADER: &str = "model,seed,epoch,train_loss,test_accuracy,wall_seconds";
const COMPARE_HEADER: &str =
    "model,base_seed,repeats,epoch,loss_mean,loss_min,loss_max,acc_mean,acc_min,acc_max";

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Clone, Copy, Debug)]
struct Band {
    epoch: f64,
    mean: f64,
    lo: f64,
    hi: f64,
}

#[derive(Clone, Debug)]
struct Series {
    model: String,
    loss: Vec<Band>,
    acc: Vec<Band>,
}

fn malformed(what: impl std::fmt::Display) -> CliError {
    CliError::Data(DataError::Malformed(format!("plot input: {what}")))
}

fn parse_f64(field: &str, line: usize) -> CliResult<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(format!("line {line}: bad number '{field}'")))
}

/// Parses a results CSV into per-model series, aggregating over seeds when
/// given the raw training schema.
fn parse_series(text: &str) -> CliResult<Vec<Series>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| malformed("empty file"))?;
    let header = header.trim();

    // per epoch: (epoch, losses over seeds, accuracies over seeds)
    type EpochSamples = Vec<(f64, Vec<f64>, Vec<f64>)>;
    let mut order: Vec<String> = Vec::new();
    let mut per_model: std::collections::HashMap<String, EpochSamples> =
        std::collections::HashMap::new();

    if header == TRAIN_HEADER {
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(malformed(format!("line {}: expected 6 fields", lineno + 1)));
            }
            let model = fields[0].trim().to_string();
            let epoch = parse_f64(fields[2], lineno + 1)?;
            let loss = parse_f64(fields[3], lineno + 1)?;
            let acc = parse_f64(fields[4], lineno + 1)?;
            if !per_model.contains_key(&model) {
                order.push(model.clone());
            }
            let rows = per_model.entry(model).or_default();
            match rows.iter_mut().find(|(e, _, _)| *e == epoch) {
                Some((_, losses, accs)) => {
                    losses.push(loss);
                    accs.push(acc);
                }
                None => rows.push((epoch, vec![loss], vec![acc])),
            }
        }
        let mut series = Vec::new();
        for model in order {
            let mut rows = per_model.remove(&model).unwrap();
            rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let band = |vals: &[f64], epoch: f64| Band {
                epoch,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                lo: vals.iter().cloned().fold(f64::INFINITY, f64::min),
                hi: vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            };
            series.push(Series {
                model: model.clone(),
                loss: rows.iter().map(|(e, l, _)| band(l, *e)).collect(),
                acc: rows.iter().map(|(e, _, a)| band(a, *e)).collect(),
            });
        }
        if series.iter().all(|s| s.loss.is_empty()) {
            return Err(malformed("no data rows"));
        }
        Ok(series)
    } else if header == COMPARE_HEADER {
        let mut series: Vec<Series> = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(malformed(format!(
                    "line {}: expected 10 fields",
                    lineno + 1
                )));
            }
            let model = fields[0].trim().to_string();
            let epoch = parse_f64(fields[3], lineno + 1)?;
            let loss = Band {
                epoch,
                mean: parse_f64(fields[4], lineno + 1)?,
                lo: parse_f64(fields[5], lineno + 1)?,
                hi: parse_f64(fields[6], lineno + 1)?,
            };
            let acc = Band {
                epoch,
                mean: parse_f64(fields[7], lineno + 1)?,
                lo: parse_f64(fields[8], lineno + 1)?,
                hi: parse_f64(fields[9], lineno + 1)?,
            };
            match series.iter_mut().find(|s| s.model == model) {
                Some(s) => {
                    s.loss.push(loss);
                    s.acc.push(acc);
                }
                None => series.push(Series {
                    model,
                    loss: vec![loss],
                    acc: vec![acc],
                }),
            }
        }
        if series.is_empty() {
            return Err(malformed("no data rows"));
        }
        for s in &mut series {
            s.loss
                .sort_by(|a, b| a.epoch.partial_cmp(&b.epoch).unwrap());
            s.acc.sort_by(|a, b| a.epoch.partial_cmp(&b.epoch).unwrap());
        }
        Ok(series)
    } else {
        Err(malformed(format!("unrecognized header '{header}'")))
    }
}

struct PanelGeom {
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl PanelGeom {
    fn sx(&self, x: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-9);
        self.x0 + (x - self.x_min) / span * self.width
    }

    fn sy(&self, y: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-9);
        self.y0 + self.height - (y - self.y_min) / span * self.height
    }
}

fn draw_panel(
    out: &mut String,
    geom: &PanelGeom,
    title: &str,
    series: &[Series],
    select: impl Fn(&Series) -> &[Band],
) {
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333" stroke-width="1"/>"##,
        geom.x0, geom.y0, geom.width, geom.height
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"##,
        geom.x0 + geom.width / 2.0,
        geom.y0 - 10.0
    );
    // ticks
    for i in 0..=4 {
        let fx = geom.x_min + (geom.x_max - geom.x_min) * i as f64 / 4.0;
        let px = geom.sx(fx);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333" stroke-width="1"/>"##,
            geom.y0 + geom.height,
            geom.y0 + geom.height + 4.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{px:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{fx:.0}</text>"##,
            geom.y0 + geom.height + 16.0
        );
        let fy = geom.y_min + (geom.y_max - geom.y_min) * i as f64 / 4.0;
        let py = geom.sy(fy);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#333" stroke-width="1"/>"##,
            geom.x0 - 4.0,
            geom.x0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{fy:.3}</text>"##,
            geom.x0 - 7.0,
            py + 3.0
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">epoch</text>"##,
        geom.x0 + geom.width / 2.0,
        geom.y0 + geom.height + 30.0
    );

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let bands = select(s);
        if bands.is_empty() {
            continue;
        }
        // min/max band
        let mut points = String::new();
        for b in bands {
            let _ = write!(points, "{:.2},{:.2} ", geom.sx(b.epoch), geom.sy(b.hi));
        }
        for b in bands.iter().rev() {
            let _ = write!(points, "{:.2},{:.2} ", geom.sx(b.epoch), geom.sy(b.lo));
        }
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"##,
            points.trim_end()
        );
        // mean line
        let mut points = String::new();
        for b in bands {
            let _ = write!(points, "{:.2},{:.2} ", geom.sx(b.epoch), geom.sy(b.mean));
        }
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"##,
            points.trim_end()
        );
    }
}

/// Renders the CSV text into a two-panel SVG (loss left, accuracy right).
pub fn render_svg(csv_text: &str) -> CliResult<String> {
    let series = parse_series(csv_text)?;

    let x_min = series
        .iter()
        .flat_map(|s| s.loss.iter())
        .map(|b| b.epoch)
        .fold(f64::INFINITY, f64::min);
    let x_max = series
        .iter()
        .flat_map(|s| s.loss.iter())
        .map(|b| b.epoch)
        .fold(f64::NEG_INFINITY, f64::max);
    let loss_max = series
        .iter()
        .flat_map(|s| s.loss.iter())
        .map(|b| b.hi)
        .fold(0.0f64, f64::max);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="900" height="400" viewBox="0 0 900 400">"#
    );
    let _ = writeln!(out, r##"<rect width="900" height="400" fill="white"/>"##);

    let loss_geom = PanelGeom {
        x0: 60.0,
        y0: 40.0,
        width: 350.0,
        height: 290.0,
        x_min,
        x_max,
        y_min: 0.0,
        y_max: if loss_max > 0.0 { loss_max * 1.05 } else { 1.0 },
    };
    draw_panel(&mut out, &loss_geom, "training loss", &series, |s| &s.loss);

    let acc_geom = PanelGeom {
        x0: 520.0,
        y0: 40.0,
        width: 350.0,
        height: 290.0,
        x_min,
        x_max,
        y_min: 0.0,
        y_max: 1.0,
    };
    draw_panel(&mut out, &acc_geom, "test accuracy", &series, |s| &s.acc);

    // legend
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let y = 382.0 - 14.0 * (series.len() - 1 - idx) as f64;
        let _ = writeln!(
            out,
            r##"<line x1="60" y1="{y:.2}" x2="84" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"##
        );
        let _ = writeln!(
            out,
            r##"<text x="90" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"##,
            y + 3.5,
            s.model
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

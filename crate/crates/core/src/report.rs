//! Score streams, moving averages and SVG plots of per-event anomaly
//! scores.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::event::EventId;
use crate::ngram::ScoredEvent;

pub const SCORE_HEADER: &str =
    "position,event_id,occurrence,probability,ma_occ_100,ma_occ_1000,ma_prob_100,ma_prob_1000";

/// Trailing mean: `out[i]` averages `values[i + 1 - window ..= i]`, using
/// the shorter available prefix near the start.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 1 {
        return Err(Error::argument("moving-average window must be at least 1"));
    }
    Ok((0..values.len())
        .map(|i| {
            let span = &values[(i + 1).saturating_sub(window)..=i];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect())
}

/// `log10(count + 1)`: keeps zero counts visible at 0.
pub fn log_occurrence(count: u64) -> f64 {
    (count as f64 + 1.0).log10()
}

/// One row of a score file.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub position: usize,
    pub event_id: EventId,
    pub occurrence: u64,
    pub probability: f64,
    pub ma_occ_100: Option<f64>,
    pub ma_occ_1000: Option<f64>,
    pub ma_prob_100: Option<f64>,
    pub ma_prob_1000: Option<f64>,
}

/// Score records with 100- and 1000-event trailing moving averages of the
/// raw occurrence counts and probabilities.
pub fn score_records(scored: &[ScoredEvent]) -> Vec<ScoreRecord> {
    let occ: Vec<f64> = scored.iter().map(|s| s.score.occurrence as f64).collect();
    let prob: Vec<f64> = scored.iter().map(|s| s.score.probability).collect();
    let ma = |v: &[f64], w| moving_average(v, w).expect("window is positive");
    let (occ100, occ1000) = (ma(&occ, 100), ma(&occ, 1000));
    let (prob100, prob1000) = (ma(&prob, 100), ma(&prob, 1000));
    scored
        .iter()
        .enumerate()
        .map(|(i, s)| ScoreRecord {
            position: s.position,
            event_id: s.event,
            occurrence: s.score.occurrence,
            probability: s.score.probability,
            ma_occ_100: Some(occ100[i]),
            ma_occ_1000: Some(occ1000[i]),
            ma_prob_100: Some(prob100[i]),
            ma_prob_1000: Some(prob1000[i]),
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_scores(records: &[ScoreRecord], w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
    writeln!(w, "{SCORE_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:.6},{},{},{},{}",
            r.position,
            r.event_id,
            r.occurrence,
            r.probability,
            opt(r.ma_occ_100),
            opt(r.ma_occ_1000),
            opt(r.ma_prob_100),
            opt(r.ma_prob_1000)
        )?;
    }
    Ok(())
}

/// Writes the score file: header plus one row per record, fixed
/// six-decimal floats.
pub fn emit_scores(records: &[ScoreRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_scores(records, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_scores(r: impl BufRead) -> Result<Vec<ScoreRecord>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io("<score file>", e))?
        .ok_or_else(|| Error::format("empty score file"))?;
    if header != SCORE_HEADER {
        return Err(Error::format(format!("bad score header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("<score file>", e))?;
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format(format!("line {}: bad {what}", i + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad("field count"));
        }
        let float = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(what))
            }
        };
        out.push(ScoreRecord {
            position: f[0].parse().map_err(|_| bad("position"))?,
            event_id: f[1].parse().map_err(|_| bad("event_id"))?,
            occurrence: f[2].parse().map_err(|_| bad("occurrence"))?,
            probability: float(f[3], "probability")?.ok_or_else(|| bad("probability"))?,
            ma_occ_100: float(f[4], "ma_occ_100")?,
            ma_occ_1000: float(f[5], "ma_occ_1000")?,
            ma_prob_100: float(f[6], "ma_prob_100")?,
            ma_prob_1000: float(f[7], "ma_prob_1000")?,
        });
    }
    Ok(out)
}

pub fn load_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scores(BufReader::new(file))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotMetric {
    /// `log10(occurrence + 1)`.
    OccurrenceLog,
    Probability,
}

impl PlotMetric {
    fn label(self) -> &'static str {
        match self {
            PlotMetric::OccurrenceLog => "log10(occurrence count + 1)",
            PlotMetric::Probability => "probability",
        }
    }

    fn value(self, r: &ScoreRecord) -> f64 {
        match self {
            PlotMetric::OccurrenceLog => log_occurrence(r.occurrence),
            PlotMetric::Probability => r.probability,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Overlays {
    pub raw: bool,
    pub ma100: bool,
    pub ma1000: bool,
}

impl Default for Overlays {
    fn default() -> Self {
        Self {
            raw: true,
            ma100: true,
            ma1000: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub metric: PlotMetric,
    pub overlays: Overlays,
    pub output: PathBuf,
}

/// Renders a scatter of per-event values with moving-average polylines to
/// an SVG file. Moving averages are taken over the plotted (transformed)
/// values.
pub fn emit_plot(records: &[ScoreRecord], spec: &PlotSpec) -> Result<()> {
    let svg = render_plot(records, spec.metric, spec.overlays)?;
    std::fs::write(&spec.output, svg).map_err(|e| Error::io(&spec.output, e))
}

pub fn render_plot(
    records: &[ScoreRecord],
    metric: PlotMetric,
    overlays: Overlays,
) -> Result<String> {
    let values: Vec<f64> = records.iter().map(|r| metric.value(r)).collect();
    let xs: Vec<f64> = records.iter().map(|r| r.position as f64).collect();
    let x_max = xs.last().copied().unwrap_or(1.0).max(1.0);
    let y_max = match metric {
        PlotMetric::Probability => 1.0,
        PlotMetric::OccurrenceLog => values.iter().copied().fold(1.0, f64::max).ceil(),
    };
    let plot_err = |e: &dyn std::fmt::Display| Error::format(format!("plot rendering failed: {e}"));

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (1200, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| plot_err(&e))?;
        let mut chart = ChartBuilder::on(&root)
            .margin(20)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(0f64..x_max, 0f64..y_max * 1.02)
            .map_err(|e| plot_err(&e))?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc("event position")
            .y_desc(metric.label())
            .draw()
            .map_err(|e| plot_err(&e))?;

        if overlays.raw {
            chart
                .draw_series(
                    xs.iter()
                        .zip(&values)
                        .map(|(&x, &y)| Circle::new((x, y), 1, BLUE.mix(0.6).filled())),
                )
                .map_err(|e| plot_err(&e))?;
        }
        for (on, window, color) in [(overlays.ma100, 100, &RED), (overlays.ma1000, 1000, &BLACK)] {
            if !on || values.is_empty() {
                continue;
            }
            let ma = moving_average(&values, window)?;
            chart
                .draw_series(LineSeries::new(
                    xs.iter().copied().zip(ma),
                    color.stroke_width(2),
                ))
                .map_err(|e| plot_err(&e))?;
        }
        root.present().map_err(|e| plot_err(&e))?;
    }
    Ok(svg)
}

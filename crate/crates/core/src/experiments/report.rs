use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::harness::{ComparisonResult, Summary, SweepResult};
use crate::error::Result;
use crate::filterbank::FilterbankConfig;
use crate::power::relative_power;

pub const RESULTS_HEADER: [&str; 8] = [
    "sweep_param",
    "point_value",
    "trial",
    "seed",
    "accuracy",
    "relative_power",
    "ci_low",
    "ci_high",
];

/// One results-CSV line. Failed trials leave `accuracy` empty; the interval repeats on every row of a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_param: String,
    pub point_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub relative_power: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.points
            .iter()
            .flat_map(|p| {
                p.trials.iter().map(move |t| ResultRow {
                    sweep_param: self.parameter.name().to_owned(),
                    point_value: p.value,
                    trial: t.trial,
                    seed: t.seed,
                    accuracy: t.accuracy(),
                    relative_power: p.relative_power,
                    ci_low: p.summary.ci.map(|c| c.0),
                    ci_high: p.summary.ci.map(|c| c.1),
                })
            })
            .collect()
    }
}

pub fn write_results_csv<W: Write>(results: &[SweepResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    // An empty result set still gets a header line.
    if results.iter().all(|r| r.n_records() == 0) {
        w.write_record(RESULTS_HEADER)?;
    }
    for row in results.iter().flat_map(SweepResult::rows) {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_owned(), |v| format!("{:.2}", 100.0 * v))
}

fn text_row(out: &mut String, label: &str, c: &FilterbankConfig, power: f64, s: &Summary) {
    let ci = s.ci.map_or_else(|| "n/a".to_owned(), |(lo, hi)| format!("[{}, {}]", pct(Some(lo)), pct(Some(hi))));
    let _ = writeln!(
        out,
        "{label:<10} {:>9} {:>9} {:>6} {:>14} {:>10} {:>18} {:>6}",
        c.n_filters,
        c.f_max_hz,
        c.q_filter,
        power,
        pct(s.mean),
        ci,
        format!("{}/{}", s.completed, s.requested)
    );
}

/// Side-by-side relative power and accuracy with 95% intervals.
pub fn comparison_text(r: &ComparisonResult, label_a: &str, label_b: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>9} {:>9} {:>6} {:>14} {:>10} {:>18} {:>6}",
        "config", "n_filters", "f_max_hz", "q", "relative_power", "accuracy%", "95% CI", "trials"
    );
    let units = |c: &FilterbankConfig| relative_power(c).map_or(f64::NAN, |p| p.relative_units);
    text_row(&mut out, label_a, &r.a, units(&r.a), &r.a_summary);
    text_row(&mut out, label_b, &r.b, units(&r.b), &r.b_summary);
    let _ = writeln!(out, "power ratio ({label_a}/{label_b}): {:.2}", r.power_ratio);
    let _ = writeln!(
        out,
        "accuracy delta ({label_a} - {label_b}): {} points",
        r.accuracy_delta().map_or_else(|| "n/a".to_owned(), |d| format!("{:.2}", 100.0 * d))
    );
    out
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    config: &'a str,
    n_filters: usize,
    f_max_hz: f64,
    q: f64,
    relative_power: f64,
    power_ratio: f64,
    trials_completed: usize,
    trials_requested: usize,
    mean_accuracy: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
}

/// Two rows, one per configuration; `power_ratio` is relative to `b`.
pub fn comparison_csv<W: Write>(r: &ComparisonResult, label_a: &str, label_b: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let pb = relative_power(&r.b)?.relative_units;
    for (label, c, s, ratio) in [(label_a, &r.a, &r.a_summary, r.power_ratio), (label_b, &r.b, &r.b_summary, 1.0)] {
        w.serialize(ComparisonRow {
            config: label,
            n_filters: c.n_filters,
            f_max_hz: c.f_max_hz,
            q: c.q_filter,
            relative_power: pb * ratio,
            power_ratio: ratio,
            trials_completed: s.completed,
            trials_requested: s.requested,
            mean_accuracy: s.mean,
            ci_low: s.ci.map(|c| c.0),
            ci_high: s.ci.map(|c| c.1),
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

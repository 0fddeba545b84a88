//! Statistical aggregation and bit-stable result serialization.
//!
//! All numeric output goes through [`fmt_sig`] (6 significant digits) so
//! that identical runs produce byte-identical files.

use crate::error::{Error, Result};
use crate::experiment::{ExperimentRecord, RecordPayload};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Empirical CDF: sorted unique values with cumulative probabilities.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CdfSeries {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Sample mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n: usize,
}

/// Mean and 95% CI (`mean +- 1.96 std/sqrt(n)`); a single sample yields a
/// degenerate interval at the mean.
pub fn mean_ci(samples: &[f64]) -> Result<(f64, (f64, f64))> {
    let s = summarize(samples)?;
    Ok((s.mean, (s.ci95_low, s.ci95_high)))
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    if samples.is_empty() {
        return Err(Error::invalid("mean_ci requires at least one sample".to_string()));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(Summary {
            mean,
            std: 0.0,
            ci95_low: mean,
            ci95_high: mean,
            n,
        });
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    let half = 1.96 * std / (n as f64).sqrt();
    Ok(Summary {
        mean,
        std,
        ci95_low: mean - half,
        ci95_high: mean + half,
        n,
    })
}

/// Step CDF at sorted unique sample values, probability `rank/n`.
pub fn empirical_cdf(samples: &[f64]) -> Result<CdfSeries> {
    if samples.is_empty() {
        return Err(Error::invalid(
            "empirical_cdf requires at least one sample".to_string(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let mut values = Vec::new();
    let mut probs = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        while i < sorted.len() && sorted[i] == v {
            i += 1;
        }
        values.push(v);
        probs.push(i as f64 / n);
    }
    Ok(CdfSeries { values, probs })
}

impl CdfSeries {
    fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.len() != self.probs.len() {
            return Err(Error::invalid("malformed CDF series".to_string()));
        }
        for w in self.values.windows(2) {
            if w[1] < w[0] {
                return Err(Error::invalid("CDF values must be non-decreasing".to_string()));
            }
        }
        for w in self.probs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid(
                    "CDF probabilities must be strictly increasing".to_string(),
                ));
            }
        }
        let last = *self.probs.last().unwrap();
        if (last - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "CDF must terminate at probability 1.0, got {last}"
            )));
        }
        Ok(())
    }
}

/// Formats with 6 significant digits, plain decimal for moderate exponents
/// and e-notation outside. Pure string manipulation after one `{:.5e}`
/// rounding, so output is deterministic.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{:.5e}", x);
    let (mant, exp) = s.split_once('e').expect("e-notation");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 6);
    let body = if (-4..=14).contains(&exp) {
        let out = if exp >= 5 {
            format!("{digits}{}", "0".repeat(exp as usize - 5))
        } else if exp >= 0 {
            let split = exp as usize + 1;
            let frac = digits[split..].trim_end_matches('0');
            if frac.is_empty() {
                digits[..split].to_string()
            } else {
                format!("{}.{}", &digits[..split], frac)
            }
        } else {
            let frac = format!("{}{}", "0".repeat((-exp - 1) as usize), digits);
            format!("0.{}", frac.trim_end_matches('0'))
        };
        out
    } else {
        let frac = digits[1..].trim_end_matches('0');
        if frac.is_empty() {
            format!("{}e{exp}", &digits[..1])
        } else {
            format!("{}.{}e{exp}", &digits[..1], frac)
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",")
}

/// Serializes one experiment record into its file set under `dir`.
/// Returns the paths written, in a fixed order.
pub fn write_results(
    record: &ExperimentRecord,
    dir: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    match &record.payload {
        RecordPayload::SelectionAccuracy { rows } => {
            let mut body = String::from("gamma_db,rounds_k,n_drops,accuracy,ci95_low,ci95_high\n");
            for r in rows {
                let _ = writeln!(
                    body,
                    "{}",
                    csv_line(&[
                        fmt_sig(r.gamma_db),
                        r.rounds_k.to_string(),
                        r.n_drops.to_string(),
                        fmt_sig(r.accuracy),
                        fmt_sig(r.ci95_low),
                        fmt_sig(r.ci95_high),
                    ])
                );
            }
            written.push(emit(dir, "selection_accuracy", &body, record, format)?);
            // gnuplot layout: one accuracy column per gamma bin
            let mut bins: Vec<f64> = rows.iter().map(|r| r.gamma_db).collect();
            bins.dedup();
            let mut ks: Vec<u32> = rows.iter().map(|r| r.rounds_k).collect();
            ks.sort_unstable();
            ks.dedup();
            let mut dat = String::from("# rounds_k");
            for b in &bins {
                let _ = write!(dat, " acc_gamma_{}", fmt_sig(*b));
            }
            dat.push('\n');
            for k in &ks {
                let _ = write!(dat, "{k}");
                for b in &bins {
                    let row = rows
                        .iter()
                        .find(|r| r.rounds_k == *k && r.gamma_db == *b)
                        .expect("complete grid");
                    let _ = write!(dat, " {}", fmt_sig(row.accuracy));
                }
                dat.push('\n');
            }
            written.push(write_file(&dir.join("gnuplot"), "selection_accuracy.dat", &dat)?);
        }
        RecordPayload::TtestRounds { rows } => {
            let mut body =
                String::from("gamma_db,mean_rounds,std_rounds,n_reached,n_not_reached\n");
            for r in rows {
                let _ = writeln!(
                    body,
                    "{}",
                    csv_line(&[
                        fmt_sig(r.gamma_db),
                        fmt_sig(r.mean_rounds),
                        fmt_sig(r.std_rounds),
                        r.n_reached.to_string(),
                        r.n_not_reached.to_string(),
                    ])
                );
            }
            written.push(emit(dir, "ttest_rounds", &body, record, format)?);
            let mut dat = String::from("# gamma_db mean_rounds std_rounds\n");
            for r in rows {
                let _ = writeln!(
                    dat,
                    "{} {} {}",
                    fmt_sig(r.gamma_db),
                    fmt_sig(r.mean_rounds),
                    fmt_sig(r.std_rounds)
                );
            }
            written.push(write_file(&dir.join("gnuplot"), "ttest_rounds.dat", &dat)?);
        }
        RecordPayload::ServedUes { rows } => {
            let mut body = String::from(
                "gamma_db,config,patch_kind,misalignment_deg,mean_served,ci95_low,ci95_high,n_drops\n",
            );
            for r in rows {
                let _ = writeln!(
                    body,
                    "{}",
                    csv_line(&[
                        fmt_sig(r.gamma_db),
                        r.config.clone(),
                        r.patch_kind.clone(),
                        fmt_sig(r.misalignment_deg),
                        fmt_sig(r.mean_served),
                        fmt_sig(r.ci95_low),
                        fmt_sig(r.ci95_high),
                        r.n_drops.to_string(),
                    ])
                );
            }
            written.push(emit(dir, "served_ues", &body, record, format)?);
            for patch in ["single", "double"] {
                let sub: Vec<_> = rows.iter().filter(|r| r.patch_kind == patch).collect();
                if sub.is_empty() {
                    continue;
                }
                let mut series: Vec<String> = Vec::new();
                for r in &sub {
                    let name = if r.config == "fixed" {
                        format!("fixed_{}", fmt_sig(r.misalignment_deg))
                    } else {
                        r.config.clone()
                    };
                    if !series.contains(&name) {
                        series.push(name);
                    }
                }
                let mut bins: Vec<f64> = sub.iter().map(|r| r.gamma_db).collect();
                bins.sort_by(|a, b| a.partial_cmp(b).unwrap());
                bins.dedup();
                let mut dat = String::from("# gamma_db");
                for s in &series {
                    let _ = write!(dat, " {s}");
                }
                dat.push('\n');
                for b in &bins {
                    let _ = write!(dat, "{}", fmt_sig(*b));
                    for s in &series {
                        let row = sub
                            .iter()
                            .find(|r| {
                                r.gamma_db == *b
                                    && if r.config == "fixed" {
                                        format!("fixed_{}", fmt_sig(r.misalignment_deg)) == *s
                                    } else {
                                        r.config == *s
                                    }
                            })
                            .expect("complete grid");
                        let _ = write!(dat, " {}", fmt_sig(row.mean_served));
                    }
                    dat.push('\n');
                }
                written.push(write_file(
                    &dir.join("gnuplot"),
                    &format!("served_ues_{patch}.dat"),
                    &dat,
                )?);
            }
        }
        RecordPayload::RateCdf { series, totals } => {
            for s in series {
                s.cdf.validate()?;
            }
            let mut body = String::from("config,patch_kind,rate_bps,cdf\n");
            for s in series {
                for (v, p) in s.cdf.values.iter().zip(&s.cdf.probs) {
                    let _ = writeln!(
                        body,
                        "{}",
                        csv_line(&[
                            s.config.clone(),
                            s.patch_kind.clone(),
                            fmt_sig(*v),
                            fmt_sig(*p),
                        ])
                    );
                }
            }
            written.push(emit(dir, "rate_cdf", &body, record, format)?);

            let mut tot = String::from("config,patch_kind,mean_total_rate_bps,gain_over_oda_pct\n");
            for t in totals {
                let _ = writeln!(
                    tot,
                    "{}",
                    csv_line(&[
                        t.config.clone(),
                        t.patch_kind.clone(),
                        fmt_sig(t.mean_total_rate_bps),
                        fmt_sig(t.gain_over_oda_pct),
                    ])
                );
            }
            written.push(emit(dir, "totals", &tot, record, format)?);

            for s in series {
                let mut dat = String::from("# rate_bps cdf\n");
                for (v, p) in s.cdf.values.iter().zip(&s.cdf.probs) {
                    let _ = writeln!(dat, "{} {}", fmt_sig(*v), fmt_sig(*p));
                }
                written.push(write_file(
                    &dir.join("gnuplot"),
                    &format!("rate_cdf_{}.dat", s.config),
                    &dat,
                )?);
            }
        }
    }
    Ok(written)
}

/// Writes the primary artifact as CSV or as a JSON mirror of the same rows.
fn emit(
    dir: &Path,
    stem: &str,
    csv_body: &str,
    record: &ExperimentRecord,
    format: OutputFormat,
) -> Result<PathBuf> {
    match format {
        OutputFormat::Csv => write_file(dir, &format!("{stem}.csv"), csv_body),
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "experiment": record.experiment,
                "n_drops": record.n_drops,
                "config_fingerprint": record.config_fingerprint,
                "rows": csv_to_rows(csv_body),
            });
            let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
            text.push('\n');
            write_file(dir, &format!("{stem}.json"), &text)
        }
    }
}

/// Re-shapes the CSV body as JSON rows keyed by the header names, keeping
/// the already-rounded string values so both formats agree byte-for-byte on
/// numbers.
fn csv_to_rows(body: &str) -> Vec<serde_json::Value> {
    let mut lines = body.lines();
    let header: Vec<&str> = match lines.next() {
        Some(h) => h.split(',').collect(),
        None => return Vec::new(),
    };
    lines
        .map(|line| {
            let mut obj = serde_json::Map::new();
            for (k, v) in header.iter().zip(line.split(',')) {
                obj.insert(k.to_string(), serde_json::Value::String(v.to_string()));
            }
            serde_json::Value::Object(obj)
        })
        .collect()
}

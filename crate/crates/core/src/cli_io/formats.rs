//! CSV encodings. Floats are written with Rust's shortest round-trip
//! representation, so a write followed by a read reproduces every value
//! bit for bit.
//!
//! Trial CSV:
//!
//! ```text
//! # horizon=8.0
//! # true_beta=0.5            (optional, `;`-separated for d > 1)
//! subject_id,entry_time,observed_time,event_indicator,arm,z0
//! 0,0.013,1.25,1,0,0.0:-1.5
//! 1,0.021,0.5,0,1,0.0:1.5;0.3:0.0
//! ```
//!
//! Column `z{p}` holds covariate `p` as `w:value` pairs separated by `;`,
//! one pair per segment of the path starting at `w = 0`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::info_time::RescaledPath;
use crate::sim_engine::AllocationRecord;
use crate::trial_core::{CovariatePath, Subject, TrialData};

const FIXED_COLUMNS: [&str; 5] = ["subject_id", "entry_time", "observed_time", "event_indicator", "arm"];

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_error(e: csv::Error, offset: usize) -> Error {
    let line = e.position().map_or(offset + 1, |p| offset + p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn into_string(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn write_row(writer: &mut csv::Writer<Vec<u8>>, row: &[String]) -> Result<()> {
    writer.write_record(row).map_err(|e| Error::Io(e.to_string()))
}

fn encode_path(path: &CovariatePath, p: usize) -> String {
    let mut out = String::new();
    for (k, &w) in path.jump_times().iter().enumerate() {
        if k > 0 {
            out.push(';');
        }
        let _ = write!(out, "{}:{}", num(w), num(path.segment_value(k)[p]));
    }
    out
}

pub fn trial_to_csv(data: &TrialData) -> Result<String> {
    let mut head = format!("# horizon={}\n", num(data.horizon()));
    if let Some(beta) = &data.true_beta {
        let joined: Vec<String> = beta.iter().map(|&b| num(b)).collect();
        let _ = writeln!(head, "# true_beta={}", joined.join(";"));
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..data.dim()).map(|p| format!("z{p}")));
    write_row(&mut writer, &header)?;
    for (i, s) in data.subjects().iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            num(s.entry_time),
            num(s.observed_time),
            s.event_indicator().to_string(),
            s.arm.to_string(),
        ];
        row.extend((0..data.dim()).map(|p| encode_path(&s.covariates, p)));
        write_row(&mut writer, &row)?;
    }
    Ok(head + &into_string(writer)?)
}

fn parse_f64(text: &str, line: usize, what: &str) -> Result<f64> {
    text.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what}: `{text}` is not a number"),
    })
}

fn decode_paths(cells: &[&str], line: usize) -> Result<CovariatePath> {
    let mut dims: Vec<Vec<(f64, f64)>> = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut pairs = Vec::new();
        for pair in cell.split(';') {
            let (w, v) = pair.split_once(':').ok_or_else(|| Error::Parse {
                line,
                message: format!("covariate segment `{pair}` is not `w:value`"),
            })?;
            pairs.push((parse_f64(w, line, "jump time")?, parse_f64(v, line, "covariate value")?));
        }
        dims.push(pairs);
    }
    let mut jumps: Vec<f64> = dims.iter().flatten().map(|&(w, _)| w).collect();
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    let mut values = Vec::with_capacity(jumps.len());
    for &w in &jumps {
        let row: Option<Vec<f64>> = dims
            .iter()
            .map(|pairs| pairs.iter().take_while(|&&(j, _)| j <= w).last().map(|&(_, v)| v))
            .collect();
        values.push(row.ok_or_else(|| Error::Parse {
            line,
            message: "every covariate path must start at w = 0".into(),
        })?);
    }
    CovariatePath::new(jumps, values).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })
}

pub fn trial_from_csv(text: &str) -> Result<TrialData> {
    let mut horizon = None;
    let mut true_beta = None;
    let mut skipped = 0;
    let mut body = text;
    while let Some(rest) = body.strip_prefix('#') {
        skipped += 1;
        let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        let line = line.trim();
        if let Some(value) = line.strip_prefix("horizon=") {
            horizon = Some(parse_f64(value, skipped, "horizon")?);
        } else if let Some(value) = line.strip_prefix("true_beta=") {
            true_beta = Some(
                value
                    .split(';')
                    .map(|b| parse_f64(b, skipped, "true_beta"))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        body = tail;
    }
    let horizon = horizon.ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing `# horizon=` line".into(),
    })?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| csv_error(e, skipped))?.clone();
    let columns: Vec<&str> = header.iter().collect();
    let dim = columns.len().saturating_sub(FIXED_COLUMNS.len());
    let expected_z = (0..dim).map(|p| format!("z{p}"));
    if dim == 0
        || columns[..FIXED_COLUMNS.len()] != FIXED_COLUMNS
        || !columns[FIXED_COLUMNS.len()..]
            .iter()
            .copied()
            .eq(expected_z.collect::<Vec<_>>().iter().map(String::as_str))
    {
        return Err(Error::Parse {
            line: skipped + 1,
            message: format!("unexpected header `{}`", columns.join(",")),
        });
    }
    let mut subjects = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, skipped))?;
        let line = skipped + record.position().map_or(0, |p| p.line() as usize);
        let cells: Vec<&str> = record.iter().collect();
        let entry = parse_f64(cells[1], line, "entry_time")?;
        let observed = parse_f64(cells[2], line, "observed_time")?;
        let event = match cells[3].trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("event_indicator must be 0 or 1, got `{other}`"),
                })
            }
        };
        let arm = cells[4].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("arm `{}` is not a nonnegative integer", cells[4]),
        })?;
        let path = decode_paths(&cells[FIXED_COLUMNS.len()..], line)?;
        subjects.push(Subject::observed(entry, path, arm, observed, event)?);
    }
    let mut data = TrialData::new(subjects, horizon)?;
    data.true_beta = true_beta;
    Ok(data)
}

pub fn allocation_log_csv(log: &[AllocationRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = ["subject", "entry_time", "arm", "uniform", "urn", "referenced"];
    write_row(&mut writer, &header.map(String::from))?;
    for rec in log {
        let urn: Vec<String> = rec.urn.iter().map(u64::to_string).collect();
        let referenced: Vec<String> = rec
            .referenced
            .iter()
            .map(|(s, at)| format!("{s}@{}", num(*at)))
            .collect();
        write_row(
            &mut writer,
            &[
                rec.subject.to_string(),
                num(rec.entry_time),
                rec.arm.to_string(),
                opt(rec.uniform),
                urn.join(";"),
                referenced.join(";"),
            ],
        )?;
    }
    into_string(writer)
}

pub fn rescaled_path_csv(path: &RescaledPath) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write_row(&mut writer, &["v", "sigma_hat", "bhat", "reached"].map(String::from))?;
    for (k, &v) in path.v_grid.iter().enumerate() {
        write_row(
            &mut writer,
            &[
                num(v),
                opt(path.sigma_hat[k]),
                opt(path.bhat[k]),
                u8::from(path.reached(k)).to_string(),
            ],
        )?;
    }
    into_string(writer)
}

pub fn boundaries_csv(v_grid: &[f64], alpha_spent: &[f64], boundaries: &[f64]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write_row(&mut writer, &["k", "v", "alpha_spent", "c_k"].map(String::from))?;
    for (k, ((&v, &a), &c)) in v_grid.iter().zip(alpha_spent).zip(boundaries).enumerate() {
        write_row(&mut writer, &[(k + 1).to_string(), num(v), num(a), num(c)])?;
    }
    into_string(writer)
}

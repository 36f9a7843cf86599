//! Reading p-value and score files.

use std::fs;
use std::io::{self, Read};
use std::path::Path;

use fdrlab::conformal::ScoreBatch;
use fdrlab::PValueBatch;

use crate::CliError;

fn read_source(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text).map_err(|e| CliError::input(format!("reading stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| CliError::input(format!("reading {}: {e}", path.display())))?;
    }
    Ok(text)
}

fn has_header(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.chars().any(|c| c.is_ascii_alphabetic() && !matches!(c, 'e' | 'E')))
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" => Some(true),
        "0" | "false" | "f" | "no" => Some(false),
        _ => None,
    }
}

fn parse_value(s: &str, line: usize) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::input(format!("line {line}: `{}` is not a number", s.trim())))
}

/// Either bare numbers (one or more per line, comma or whitespace separated)
/// or a CSV with a `pvalue` column and an optional `is_null` column.
pub fn read_pvalues(path: &Path) -> Result<PValueBatch, CliError> {
    let text = read_source(path)?;
    let batch = if has_header(&text) { parse_pvalue_csv(&text)? } else { parse_bare(&text)? };
    Ok(batch)
}

fn parse_bare(text: &str) -> Result<PValueBatch, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for field in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()) {
            values.push(parse_value(field, i + 1)?);
        }
    }
    if values.is_empty() {
        return Err(CliError::input("no p-values in input"));
    }
    Ok(PValueBatch::new(values)?)
}

fn parse_pvalue_csv(text: &str) -> Result<PValueBatch, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::input(format!("bad CSV header: {e}")))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let p_col = column("pvalue").ok_or_else(|| CliError::input("CSV input needs a `pvalue` column"))?;
    let null_col = column("is_null");
    let (mut values, mut labels) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::input(format!("line {line}: {e}")))?;
        values.push(parse_value(record.get(p_col).unwrap_or_default(), line)?);
        if let Some(c) = null_col {
            let raw = record.get(c).unwrap_or_default();
            labels.push(parse_flag(raw).ok_or_else(|| CliError::input(format!("line {line}: bad is_null `{raw}`")))?);
        }
    }
    if values.is_empty() {
        return Err(CliError::input("no p-values in input"));
    }
    Ok(match null_col {
        Some(_) => PValueBatch::with_labels(values, labels)?,
        None => PValueBatch::new(values)?,
    })
}

/// CSV with `score` and `role` (test | nc) columns, plus an optional `is_null`
/// column for test rows.
pub fn read_scores(path: &Path) -> Result<ScoreBatch, CliError> {
    let text = read_source(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::input(format!("bad CSV header: {e}")))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let score_col = column("score").ok_or_else(|| CliError::input("score file needs a `score` column"))?;
    let role_col = column("role").ok_or_else(|| CliError::input("score file needs a `role` column"))?;
    let null_col = column("is_null");
    let (mut test, mut nc, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::input(format!("line {line}: {e}")))?;
        let score = parse_value(record.get(score_col).unwrap_or_default(), line)?;
        match record.get(role_col).unwrap_or_default().to_ascii_lowercase().as_str() {
            "test" => {
                test.push(score);
                if let Some(c) = null_col {
                    let raw = record.get(c).unwrap_or_default();
                    labels.push(
                        parse_flag(raw).ok_or_else(|| CliError::input(format!("line {line}: bad is_null `{raw}`")))?,
                    );
                }
            }
            "nc" => nc.push(score),
            other => return Err(CliError::input(format!("line {line}: role must be `test` or `nc`, got `{other}`"))),
        }
    }
    let labels = null_col.map(|_| labels);
    Ok(ScoreBatch::new(test, nc, labels)?)
}

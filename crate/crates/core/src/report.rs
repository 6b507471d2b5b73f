//! Table rendering: per-split corpus statistics and multi-system
//! leaderboards, as Markdown, CSV or JSON.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::corpus::SplitStats;
use crate::metrics::ScoreReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}` (expected md, csv or json)"))),
        }
    }
}

/// Leaderboard columns that come first, in this order, when present.
pub const CORE_COLUMNS: [&str; 4] = ["rouge1", "rouge2", "rougeLsum", "bertscore_f1"];

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardRow {
    pub system_name: String,
    pub values: BTreeMap<String, f64>,
}

/// Rows sorted descending by `sort_key`, ties broken by system name.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    columns: Vec<String>,
    rows: Vec<LeaderboardRow>,
    sort_key: String,
}

impl Leaderboard {
    pub fn new(mut rows: Vec<LeaderboardRow>, sort_key: &str) -> Result<Self> {
        let names: BTreeSet<&String> = rows.first().map(|r| r.values.keys().collect()).unwrap_or_default();
        for row in &rows {
            let here: BTreeSet<&String> = row.values.keys().collect();
            if let Some(missing) = names.difference(&here).next() {
                return Err(Error::InvalidArgument(format!(
                    "row `{}` is missing column `{missing}`",
                    row.system_name
                )));
            }
            if let Some(extra) = here.difference(&names).next() {
                return Err(Error::InvalidArgument(format!(
                    "row `{}` has column `{extra}` that `{}` lacks",
                    row.system_name, rows[0].system_name
                )));
            }
            if let Some((col, v)) = row.values.iter().find(|(_, v)| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "row `{}` has non-finite {col} = {v}",
                    row.system_name
                )));
            }
        }
        let mut columns: Vec<String> = CORE_COLUMNS
            .iter()
            .filter(|c| names.iter().any(|n| n == *c))
            .map(|c| c.to_string())
            .collect();
        columns.extend(
            names
                .iter()
                .filter(|n| !CORE_COLUMNS.contains(&n.as_str()))
                .map(|n| n.to_string()),
        );
        if !rows.is_empty() && !columns.iter().any(|c| c == sort_key) {
            return Err(Error::InvalidArgument(format!(
                "unknown sort column `{sort_key}` (have: {})",
                columns.join(", ")
            )));
        }
        rows.sort_by(|a, b| {
            b.values[sort_key]
                .total_cmp(&a.values[sort_key])
                .then_with(|| a.system_name.cmp(&b.system_name))
        });
        Ok(Self {
            columns,
            rows,
            sort_key: sort_key.to_string(),
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[LeaderboardRow] {
        &self.rows
    }

    pub fn sort_key(&self) -> &str {
        &self.sort_key
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Markdown => {
                let mut header = vec!["system_name".to_string()];
                header.extend(self.columns.iter().cloned());
                let body = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut cells = vec![r.system_name.clone()];
                        cells.extend(self.columns.iter().map(|c| format!("{:.2}", r.values[c])));
                        cells
                    })
                    .collect::<Vec<_>>();
                markdown_table(&header, &body)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let mut header = vec!["system_name"];
                header.extend(self.columns.iter().map(String::as_str));
                w.write_record(&header).unwrap();
                for r in &self.rows {
                    let mut cells = vec![r.system_name.clone()];
                    cells.extend(self.columns.iter().map(|c| format!("{:.2}", r.values[c])));
                    w.write_record(&cells).unwrap();
                }
                String::from_utf8(w.into_inner().unwrap()).unwrap()
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut obj = Map::new();
                        obj.insert("system_name".into(), Value::from(r.system_name.clone()));
                        for c in &self.columns {
                            obj.insert(c.clone(), Value::from(r.values[c]));
                        }
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).unwrap();
                s.push('\n');
                s
            }
        }
    }
}

fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", header.join(" | "));
    let align: Vec<&str> = (0..header.len()).map(|i| if i == 0 { "---" } else { "---:" }).collect();
    out.push_str(&format!("| {} |\n", align.join(" | ")));
    for row in rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

/// One row per report, holding the corpus-mean F1 of each metric in
/// percentage points.
pub fn rows_from_reports(reports: &[ScoreReport]) -> Vec<LeaderboardRow> {
    reports
        .iter()
        .map(|rep| {
            let m = &rep.corpus_mean;
            let mut values = BTreeMap::new();
            let pct = |v: f64| v * 100.0;
            if let Some(s) = m.rouge1 {
                values.insert("rouge1".to_string(), pct(s.f1));
            }
            if let Some(s) = m.rouge2 {
                values.insert("rouge2".to_string(), pct(s.f1));
            }
            if let Some(s) = m.rouge_lsum {
                values.insert("rougeLsum".to_string(), pct(s.f1));
            }
            if let Some(s) = m.bertscore {
                values.insert("bertscore_f1".to_string(), pct(s.f1));
            }
            LeaderboardRow {
                system_name: rep.system_name.clone(),
                values,
            }
        })
        .collect()
}

/// Parses a JSON array of `{"system_name": ..., "<column>": number, ...}`.
pub fn parse_rows_json(text: &str) -> Result<Vec<LeaderboardRow>> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("leaderboard rows: {e}")))?;
    let Value::Array(items) = value else {
        return Err(Error::InvalidArgument("leaderboard rows must be a JSON array".into()));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let Value::Object(obj) = item else {
                return Err(Error::InvalidArgument(format!("row {i} is not an object")));
            };
            let mut system_name = None;
            let mut values = BTreeMap::new();
            for (k, v) in obj {
                if k == "system_name" {
                    system_name = v.as_str().map(str::to_string);
                } else {
                    let x = v.as_f64().ok_or_else(|| {
                        Error::InvalidArgument(format!("row {i}: column `{k}` is not a number"))
                    })?;
                    values.insert(k, x);
                }
            }
            let system_name =
                system_name.ok_or_else(|| Error::InvalidArgument(format!("row {i} has no system_name")))?;
            Ok(LeaderboardRow { system_name, values })
        })
        .collect()
}

/// Parses CSV with a `system_name` column and numeric other columns.
pub fn parse_rows_csv(text: &str) -> Result<Vec<LeaderboardRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("leaderboard csv: {e}")))?
        .clone();
    let name_col = headers
        .iter()
        .position(|h| h == "system_name")
        .ok_or_else(|| Error::InvalidArgument("leaderboard csv has no system_name column".into()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidArgument(format!("leaderboard csv: {e}")))?;
        let mut values = BTreeMap::new();
        for (j, (h, cell)) in headers.iter().zip(record.iter()).enumerate() {
            if j == name_col {
                continue;
            }
            let x: f64 = cell.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("csv row {}: `{cell}` in column `{h}` is not a number", i + 1))
            })?;
            values.insert(h.to_string(), x);
        }
        rows.push(LeaderboardRow {
            system_name: record[name_col].to_string(),
            values,
        });
    }
    Ok(rows)
}

pub fn render_leaderboard(rows: Vec<LeaderboardRow>, format: Format, sort_key: &str) -> Result<String> {
    Ok(Leaderboard::new(rows, sort_key)?.render(format))
}

const STATS_ROWS: [&str; 4] = ["encounters", "avg turns", "avg dialogue tokens", "avg note tokens"];

/// Splits as columns (train, valid, test1, test2, test3 order), one row per
/// statistic.
pub fn render_stats_table(stats: &[SplitStats], format: Format) -> Result<String> {
    let mut sorted: Vec<&SplitStats> = stats.iter().collect();
    sorted.sort_by_key(|s| s.split);
    if let Some(w) = sorted.windows(2).find(|w| w[0].split == w[1].split) {
        return Err(Error::InvalidArgument(format!("split `{}` appears twice", w[0].split)));
    }
    let cells = |s: &SplitStats| -> [String; 4] {
        [
            s.num_encounters.to_string(),
            format!("{:.2}", s.avg_turns),
            format!("{:.2}", s.avg_dialogue_tokens),
            format!("{:.2}", s.avg_note_tokens),
        ]
    };
    let columns: Vec<[String; 4]> = sorted.iter().map(|s| cells(s)).collect();

    Ok(match format {
        Format::Markdown => {
            let mut header = vec!["statistic".to_string()];
            header.extend(sorted.iter().map(|s| s.split.to_string()));
            let body: Vec<Vec<String>> = if sorted.is_empty() {
                Vec::new()
            } else {
                STATS_ROWS
                    .iter()
                    .enumerate()
                    .map(|(i, name)| {
                        let mut row = vec![name.to_string()];
                        row.extend(columns.iter().map(|c| c[i].clone()));
                        row
                    })
                    .collect()
            };
            markdown_table(&header, &body)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["statistic".to_string()];
            header.extend(sorted.iter().map(|s| s.split.to_string()));
            w.write_record(&header).unwrap();
            if !sorted.is_empty() {
                for (i, name) in STATS_ROWS.iter().enumerate() {
                    let mut row = vec![name.to_string()];
                    row.extend(columns.iter().map(|c| c[i].clone()));
                    w.write_record(&row).unwrap();
                }
            }
            String::from_utf8(w.into_inner().unwrap()).unwrap()
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&sorted).unwrap();
            s.push('\n');
            s
        }
    })
}

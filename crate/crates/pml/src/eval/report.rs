//! Benchmark tables: a fixed-header TSV for machines and an aligned text
//! table for reading, one section per track family with one column per
//! agent.

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "town\tagent\ttask\truns\tavg_deviation\tsuccess_rate";

/// One parsed metrics line; `task` is a label so overall rows and future
/// task names pass through untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub town: String,
    pub agent: String,
    pub task: String,
    pub runs: usize,
    pub avg_deviation: f64,
    pub success_rate: f64,
}

pub fn rows_to_tsv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.town, r.agent, r.task, r.runs, r.avg_deviation, r.success_rate
        ));
    }
    out
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => {
            return Err(Error::Eval(format!(
                "metrics file must start with {METRICS_HEADER:?}, found {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::Eval(format!(
                "metrics line {} has {} fields, expected 6",
                i + 2,
                fields.len()
            )));
        }
        let num = |what: &str, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Eval(format!("bad {what} {s:?} on metrics line {}", i + 2)))
        };
        rows.push(MetricsRow {
            town: fields[0].to_string(),
            agent: fields[1].to_string(),
            task: fields[2].to_string(),
            runs: fields[3]
                .parse::<usize>()
                .map_err(|_| Error::Eval(format!("bad runs {:?} on metrics line {}", fields[3], i + 2)))?,
            avg_deviation: num("deviation", fields[4])?,
            success_rate: num("success rate", fields[5])?,
        });
    }
    Ok(rows)
}

/// Display order within a family section; anything unrecognized sorts
/// after the known tasks, alphabetically, but still renders.
fn task_order(task: &str) -> (u8, &str) {
    match task {
        "straight" => (0, task),
        "one_turn" => (1, task),
        "two_turns" => (2, task),
        "overall" => (3, task),
        other => (4, other),
    }
}

fn cell(dev: f64, success: f64) -> String {
    format!("{dev:.4} / {success:.2}")
}

/// Renders merged metrics rows as one aligned table per family, agents as
/// columns in sorted order, cells as "deviation / success".
pub fn render_report(rows: &[MetricsRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Eval("no metrics rows to report".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for r in rows {
        if !seen.insert((&r.town, &r.agent, &r.task)) {
            return Err(Error::Eval(format!(
                "duplicate metrics row for {}/{}/{}",
                r.town, r.agent, r.task
            )));
        }
    }

    let mut towns: Vec<&str> = rows.iter().map(|r| r.town.as_str()).collect();
    towns.sort_unstable();
    towns.dedup();
    let mut agents: Vec<&str> = rows.iter().map(|r| r.agent.as_str()).collect();
    agents.sort_unstable();
    agents.dedup();

    let mut out = String::new();
    out.push_str("avg deviation (m, lower is better) / success (%, higher is better)\n");
    for town in towns {
        let town_rows: Vec<&MetricsRow> = rows.iter().filter(|r| r.town == town).collect();
        let mut tasks: Vec<&str> = town_rows.iter().map(|r| r.task.as_str()).collect();
        tasks.sort_unstable_by(|a, b| task_order(a).cmp(&task_order(b)));
        tasks.dedup();

        let mut header: Vec<String> = vec!["task".to_string()];
        header.extend(agents.iter().map(|a| a.to_string()));
        let mut grid: Vec<Vec<String>> = vec![header];
        for task in &tasks {
            let mut line = vec![task.to_string()];
            for agent in &agents {
                let cell_text = town_rows
                    .iter()
                    .find(|r| r.agent == *agent && r.task == *task)
                    .map(|r| cell(r.avg_deviation, r.success_rate))
                    .unwrap_or_else(|| "-".to_string());
                line.push(cell_text);
            }
            grid.push(line);
        }

        let cols = grid[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| grid.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        out.push_str(&format!("\n== {town} ==\n"));
        for (i, row) in grid.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(text, w)| format!("{text:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                out.push_str(rule.join("  ").trim_end());
                out.push('\n');
            }
        }
    }
    Ok(out)
}

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::QuestStep;
use crate::session::{LogRecord, QuestFold};

const BAR_WIDTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCount {
    pub step: QuestStep,
    pub letter: String,
    pub label: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub per_step: Vec<StepCount>,
    pub total: u32,
    /// Fraction of sessions that completed the last step; 0 when there are
    /// no sessions, with `success_rate_defined` false.
    pub success_rate: f64,
    pub success_rate_defined: bool,
    pub skipped: u32,
    pub warnings: Vec<String>,
}

impl FunnelReport {
    pub fn count(&self, step: QuestStep) -> u32 {
        self.per_step.iter().find(|s| s.step == step).map_or(0, |s| s.count)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Aligned text table with one bar per step.
    pub fn render_table(&self) -> String {
        let width = self.per_step.iter().map(|s| s.label.len()).max().unwrap_or(0);
        let mut out = format!("Quest funnel over {} sessions\n", self.total);
        for s in &self.per_step {
            let bar = if self.total == 0 { 0 } else { (s.count * BAR_WIDTH).div_ceil(self.total) };
            out.push_str(&format!(
                "({}) {:<width$}  {:>4}  {}\n",
                s.letter,
                s.label,
                s.count,
                "#".repeat(bar as usize)
            ));
        }
        if self.success_rate_defined {
            out.push_str(&format!(
                "success rate: {:.1}% ({}/{})\n",
                self.success_rate * 100.0,
                self.count(QuestStep::GiveSword),
                self.total
            ));
        } else {
            out.push_str("success rate: n/a (no sessions)\n");
        }
        if self.skipped > 0 {
            out.push_str(&format!("skipped: {}\n", self.skipped));
        }
        out
    }
}

/// Builds the funnel from session logs given as `(name, contents)` pairs.
/// A log may hold several sessions; quest progress is recomputed from each
/// session's events. Sessions with unreadable lines are skipped.
pub fn funnel<'a>(logs: impl IntoIterator<Item = (&'a str, &'a str)>) -> FunnelReport {
    let mut sessions: Vec<(String, Vec<LogRecord>, bool)> = Vec::new();
    let mut skipped = 0;
    let mut warnings = Vec::new();

    for (name, text) in logs {
        let mut local: Vec<(String, Vec<LogRecord>, bool)> = Vec::new();
        let mut unattributed = false;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (session, record) = match serde_json::from_str::<LogRecord>(line) {
                Ok(r) => (r.session.clone(), Some(r)),
                Err(e) => {
                    warnings.push(format!("{name}:{}: {e}", i + 1));
                    let id = serde_json::from_str::<Value>(line)
                        .ok()
                        .and_then(|v| v.get("session").and_then(Value::as_str).map(str::to_string));
                    match id {
                        Some(id) => (id, None),
                        None => {
                            unattributed = true;
                            continue;
                        }
                    }
                }
            };
            let slot = match local.iter().position(|(id, _, _)| *id == session) {
                Some(p) => p,
                None => {
                    local.push((session, Vec::new(), true));
                    local.len() - 1
                }
            };
            match record {
                Some(r) => local[slot].1.push(r),
                None => local[slot].2 = false,
            }
        }
        if unattributed {
            skipped += local.len().max(1) as u32;
            continue;
        }
        sessions.extend(local);
    }

    let mut counts = [0u32; 7];
    let mut total = 0;
    for (_, records, ok) in &sessions {
        if !ok {
            skipped += 1;
            continue;
        }
        total += 1;
        let mut fold = QuestFold::new();
        for r in records {
            fold.feed(r);
        }
        for step in fold.progress.completed_steps() {
            counts[step as usize] += 1;
        }
    }

    let per_step = QuestStep::ALL
        .iter()
        .map(|&step| StepCount {
            step,
            letter: step.letter().to_string(),
            label: step.label().to_string(),
            count: counts[step as usize],
        })
        .collect();
    let defined = total > 0;
    FunnelReport {
        per_step,
        total,
        success_rate: if defined { counts[QuestStep::GiveSword as usize] as f64 / total as f64 } else { 0.0 },
        success_rate_defined: defined,
        skipped,
        warnings,
    }
}

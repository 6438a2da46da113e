//! KPI records, per-group summaries, ratio reports and deterministic export.
//!
//! Means include timed-out runs; `success_rate` reports the other view.
//! Percentiles use the nearest-rank definition: the `p`-th percentile of `n`
//! sorted values is the element at rank `ceil(p/100 * n)`.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core5g::{Outcome, Procedure};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("record for UE {ue_id} ({procedure}) ends before it starts")]
    NegativeDuration { ue_id: u32, procedure: KpiProcedure },
    #[error("duplicate KPI for UE {ue_id} ({procedure}) starting at {start} ms")]
    DuplicateKpi {
        ue_id: u32,
        procedure: KpiProcedure,
        start: f64,
    },
    #[error("no records in group")]
    EmptyGroup,
    #[error("no baseline summary for {use_case}/{procedure}")]
    MissingBaseline {
        use_case: String,
        procedure: KpiProcedure,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KpiProcedure {
    Registration,
    PduEstablishment,
    DataTransfer,
    /// Use-case level latency: one per downlink chunk, otherwise one per UE
    /// spanning its whole workload.
    EndToEnd,
}

impl KpiProcedure {
    pub fn as_str(self) -> &'static str {
        match self {
            KpiProcedure::Registration => "registration",
            KpiProcedure::PduEstablishment => "pdu_establishment",
            KpiProcedure::DataTransfer => "data_transfer",
            KpiProcedure::EndToEnd => "end_to_end",
        }
    }
}

impl std::fmt::Display for KpiProcedure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<Procedure> for KpiProcedure {
    fn from(p: Procedure) -> Self {
        match p {
            Procedure::Registration => KpiProcedure::Registration,
            Procedure::PduEstablishment => KpiProcedure::PduEstablishment,
            Procedure::DataTransfer => KpiProcedure::DataTransfer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiRecord {
    pub scenario: String,
    pub architecture: String,
    pub use_case: String,
    pub ue_id: u32,
    pub procedure: KpiProcedure,
    pub start: f64,
    pub end: f64,
    pub outcome: Outcome,
    pub messages_sent: u64,
}

impl KpiRecord {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Append-only store for one simulation instance.
#[derive(Debug, Default)]
pub struct MetricsStore {
    records: Vec<KpiRecord>,
    seen: HashSet<(u32, KpiProcedure, u64)>,
}

impl MetricsStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, r: KpiRecord) -> Result<(), MetricsError> {
        if r.start.is_nan() || r.end.is_nan() || r.end < r.start {
            return Err(MetricsError::NegativeDuration {
                ue_id: r.ue_id,
                procedure: r.procedure,
            });
        }
        if !self.seen.insert((r.ue_id, r.procedure, r.start.to_bits())) {
            return Err(MetricsError::DuplicateKpi {
                ue_id: r.ue_id,
                procedure: r.procedure,
                start: r.start,
            });
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[KpiRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<KpiRecord> {
        self.records
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub architecture: String,
    pub use_case: String,
    pub procedure: KpiProcedure,
}

impl GroupKey {
    fn of(r: &KpiRecord) -> Self {
        Self {
            architecture: r.architecture.clone(),
            use_case: r.use_case.clone(),
            procedure: r.procedure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub architecture: String,
    pub use_case: String,
    pub procedure: KpiProcedure,
    pub n: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub success_rate: f64,
    pub total_messages: u64,
}

impl Summary {
    pub fn key(&self) -> GroupKey {
        GroupKey {
            architecture: self.architecture.clone(),
            use_case: self.use_case.clone(),
            procedure: self.procedure,
        }
    }
}

/// Nearest-rank percentile over ascending `sorted`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Summary of the records matching `key`.
pub fn aggregate(records: &[KpiRecord], key: &GroupKey) -> Result<Summary, MetricsError> {
    let group: Vec<&KpiRecord> = records.iter().filter(|r| GroupKey::of(r) == *key).collect();
    summarize_group(key, &group)
}

fn summarize_group(key: &GroupKey, group: &[&KpiRecord]) -> Result<Summary, MetricsError> {
    if group.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    // summing in sorted order keeps the mean independent of insertion order
    let mut durations: Vec<f64> = group.iter().map(|r| r.duration()).collect();
    durations.sort_by(f64::total_cmp);
    let n = durations.len();
    let mean = durations.iter().sum::<f64>() / n as f64;
    let successes = group
        .iter()
        .filter(|r| r.outcome == Outcome::Success)
        .count();
    Ok(Summary {
        architecture: key.architecture.clone(),
        use_case: key.use_case.clone(),
        procedure: key.procedure,
        n,
        mean_ms: mean,
        p50_ms: nearest_rank(&durations, 50.0),
        p95_ms: nearest_rank(&durations, 95.0),
        success_rate: successes as f64 / n as f64,
        total_messages: group.iter().map(|r| r.messages_sent).sum(),
    })
}

/// One summary per group present in `records`, ordered by group key.
pub fn summarize(records: &[KpiRecord]) -> Vec<Summary> {
    let mut groups: BTreeMap<GroupKey, Vec<&KpiRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(GroupKey::of(r)).or_default().push(r);
    }
    groups
        .iter()
        .map(|(k, g)| summarize_group(k, g).expect("groups are nonempty"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub use_case: String,
    pub procedure: KpiProcedure,
    pub baseline: String,
    pub candidate: String,
    pub baseline_mean_ms: f64,
    pub candidate_mean_ms: f64,
    /// Baseline mean over candidate mean; above 1 means the candidate is faster.
    pub ratio: f64,
    /// Procedure mean as a fraction of the end-to-end mean, when both exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_share: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_share: Option<f64>,
}

fn share(summaries: &[Summary], s: &Summary) -> Option<f64> {
    if s.procedure == KpiProcedure::EndToEnd {
        return None;
    }
    summaries
        .iter()
        .find(|t| {
            t.procedure == KpiProcedure::EndToEnd
                && t.architecture == s.architecture
                && t.use_case == s.use_case
        })
        .filter(|t| t.mean_ms > 0.0)
        .map(|t| s.mean_ms / t.mean_ms)
}

/// Matches every candidate group with the baseline group of the same use case
/// and procedure.
pub fn compare(
    baseline: &[Summary],
    candidates: &[Summary],
) -> Result<Vec<RatioRow>, MetricsError> {
    candidates
        .iter()
        .map(|c| {
            let b = baseline
                .iter()
                .find(|b| b.use_case == c.use_case && b.procedure == c.procedure)
                .ok_or_else(|| MetricsError::MissingBaseline {
                    use_case: c.use_case.clone(),
                    procedure: c.procedure,
                })?;
            Ok(RatioRow {
                use_case: c.use_case.clone(),
                procedure: c.procedure,
                baseline: b.architecture.clone(),
                candidate: c.architecture.clone(),
                baseline_mean_ms: b.mean_ms,
                candidate_mean_ms: c.mean_ms,
                ratio: b.mean_ms / c.mean_ms,
                baseline_share: share(baseline, b),
                candidate_share: share(candidates, c),
            })
        })
        .collect()
}

pub const CSV_HEADER: [&str; 10] = [
    "scenario",
    "architecture",
    "use_case",
    "ue_id",
    "procedure",
    "start_ms",
    "end_ms",
    "duration_ms",
    "outcome",
    "messages_sent",
];

/// Records in export order: by UE, procedure, then start time.
pub fn sorted(records: &[KpiRecord]) -> Vec<&KpiRecord> {
    let mut out: Vec<&KpiRecord> = records.iter().collect();
    out.sort_by(|a, b| {
        (a.ue_id, a.procedure)
            .cmp(&(b.ue_id, b.procedure))
            .then(a.start.total_cmp(&b.start))
    });
    out
}

pub fn write_kpis_csv<W: Write>(records: &[KpiRecord], w: W) -> Result<(), MetricsError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in sorted(records) {
        out.write_record([
            r.scenario.as_str(),
            &r.architecture,
            &r.use_case,
            &r.ue_id.to_string(),
            r.procedure.as_str(),
            &format!("{:.6}", r.start),
            &format!("{:.6}", r.end),
            &format!("{:.6}", r.duration()),
            r.outcome.as_str(),
            &r.messages_sent.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Summaries as pretty JSON; values are written at full precision so they
/// read back unchanged.
pub fn write_summary_json<W: Write>(summaries: &[Summary], mut w: W) -> Result<(), MetricsError> {
    serde_json::to_writer_pretty(&mut w, summaries)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_summary_json<R: std::io::Read>(r: R) -> Result<Vec<Summary>, MetricsError> {
    Ok(serde_json::from_reader(r)?)
}

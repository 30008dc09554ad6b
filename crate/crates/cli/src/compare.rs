//! Side-by-side fairness numbers for two random or bench scenarios.

use semrw_core::FairnessReport;
use serde::{Deserialize, Serialize};

use crate::run::run_scenario;
use crate::scenario::{Mode, ScenarioFile};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub label: String,
    pub max_bypass: Option<u64>,
    pub writer_wait_p99: Option<u64>,
    pub throughput: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub wait_unit: String,
    pub throughput_unit: String,
    pub a: Column,
    pub b: Column,
}

fn column(scenario: &ScenarioFile, report: &FairnessReport) -> Column {
    let mut label = format!("{}/{}", scenario.variant, scenario.policy);
    if let Some(seed) = scenario.seed {
        label.push_str(&format!(" seed {seed}"));
    }
    Column {
        label,
        max_bypass: report.max_bypass,
        writer_wait_p99: report.writer_wait_p99,
        throughput: report.throughput,
    }
}

pub fn compare(a: &ScenarioFile, b: &ScenarioFile) -> Result<CompareTable, CliError> {
    for s in [a, b] {
        if !matches!(s.mode, Mode::Random | Mode::Bench) {
            return Err(CliError::Mismatch(format!("{} mode has no fairness statistics", s.mode)));
        }
    }
    if a.shape() != b.shape() {
        return Err(CliError::Mismatch(format!("shapes differ: {:?} vs {:?}", a.shape(), b.shape())));
    }
    let ra = run_scenario(a)?.report;
    let rb = run_scenario(b)?.report;
    let (fa, fb) = (ra.result.fairness().expect("fairness mode"), rb.result.fairness().expect("fairness mode"));
    Ok(CompareTable {
        wait_unit: match fa.unit {
            semrw_core::TimeUnit::Steps => "steps".into(),
            semrw_core::TimeUnit::Micros => "us".into(),
        },
        throughput_unit: fa.throughput_unit().into(),
        a: column(&ra.scenario, fa),
        b: column(&rb.scenario, fb),
    })
}

impl CompareTable {
    fn rows(&self) -> [(String, String, String); 3] {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
        [
            ("max_bypass".into(), opt(self.a.max_bypass), opt(self.b.max_bypass)),
            (format!("writer_wait_p99 ({})", self.wait_unit), opt(self.a.writer_wait_p99), opt(self.b.writer_wait_p99)),
            (
                format!("throughput ({})", self.throughput_unit),
                format!("{:.3}", self.a.throughput),
                format!("{:.3}", self.b.throughput),
            ),
        ]
    }

    pub fn to_text(&self) -> String {
        let rows = self.rows();
        let header = ("metric".to_string(), format!("A: {}", self.a.label), format!("B: {}", self.b.label));
        let w0 = rows.iter().map(|r| r.0.len()).chain([header.0.len()]).max().unwrap();
        let w1 = rows.iter().map(|r| r.1.len()).chain([header.1.len()]).max().unwrap();
        let mut out = String::new();
        for (m, a, b) in std::iter::once(&header).chain(rows.iter()) {
            out.push_str(&format!("{m:<w0$}  {a:>w1$}  {b}\n"));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", &self.a.label, &self.b.label]).unwrap();
        for (m, a, b) in self.rows() {
            let blank = |s: String| if s == "-" { String::new() } else { s };
            w.write_record([m, blank(a), blank(b)]).unwrap();
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tables serialize");
        s.push('\n');
        s
    }
}

use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use serde_json::{json, Value as Json};
use uadb_core::{KRelation, Result, Semiring, Tuple};

/// How labeled certain answers compare with exact ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub answers: usize,
    pub oracle_certain: usize,
    pub labeled_certain: usize,
    /// Certain answers whose label falls short of the exact annotation.
    pub false_negatives: usize,
    /// Labels above the exact annotation. Zero for sound labelings.
    pub false_positives: usize,
    pub false_negative_rate: f64,
    pub false_positive_rate: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub label_time: Duration,
    pub oracle_time: Duration,
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    /// `labels` and `oracle` are annotated in `sr`; `answers` counts the
    /// tuples of the best-guess answer.
    pub fn compare(labels: &KRelation, oracle: &KRelation, sr: &Semiring, answers: usize) -> Result<MetricsReport> {
        let mut fneg = 0;
        for (t, exact) in oracle.iter() {
            let got = labels.get(t);
            if got != *exact && sr.leq(&got, exact)? {
                fneg += 1;
            }
        }
        let mut fpos = 0;
        for (t, got) in labels.iter() {
            if !sr.leq(got, &oracle.get(t))? {
                fpos += 1;
            }
        }
        Ok(MetricsReport {
            answers,
            oracle_certain: oracle.len(),
            labeled_certain: labels.len(),
            false_negatives: fneg,
            false_positives: fpos,
            false_negative_rate: rate(fneg, oracle.len()),
            false_positive_rate: rate(fpos, labels.len()),
            ..MetricsReport::default()
        })
    }

    pub fn to_json(&self) -> Json {
        json!({
            "answers": self.answers,
            "oracle_certain": self.oracle_certain,
            "labeled_certain": self.labeled_certain,
            "false_negatives": self.false_negatives,
            "false_positives": self.false_positives,
            "false_negative_rate": self.false_negative_rate,
            "false_positive_rate": self.false_positive_rate,
            "precision": self.precision,
            "recall": self.recall,
            "label_ms": self.label_time.as_secs_f64() * 1e3,
            "oracle_ms": self.oracle_time.as_secs_f64() * 1e3,
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "answers          {}", self.answers)?;
        writeln!(f, "oracle certain   {}", self.oracle_certain)?;
        writeln!(f, "labeled certain  {}", self.labeled_certain)?;
        writeln!(
            f,
            "FNR              {:.4} ({})",
            self.false_negative_rate, self.false_negatives
        )?;
        writeln!(
            f,
            "FPR              {:.4} ({})",
            self.false_positive_rate, self.false_positives
        )?;
        if let (Some(p), Some(r)) = (self.precision, self.recall) {
            writeln!(f, "precision        {p:.4}")?;
            writeln!(f, "recall           {r:.4}")?;
        }
        writeln!(f, "label time       {:.1} ms", self.label_time.as_secs_f64() * 1e3)?;
        write!(f, "oracle time      {:.1} ms", self.oracle_time.as_secs_f64() * 1e3)
    }
}

/// Precision and recall of `got` against `truth`. Empty answers are
/// perfectly precise; an empty truth is perfectly recalled.
pub fn precision_recall(got: &BTreeSet<Tuple>, truth: &BTreeSet<Tuple>) -> (f64, f64) {
    let hit = got.intersection(truth).count();
    let p = if got.is_empty() {
        1.0
    } else {
        hit as f64 / got.len() as f64
    };
    let r = if truth.is_empty() {
        1.0
    } else {
        hit as f64 / truth.len() as f64
    };
    (p, r)
}

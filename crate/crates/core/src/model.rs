//! Trial counts, the bundled published dataset, and dataset I/O.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Severe-disease counts among the infected of each arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SevereCounts {
    pub vaccine: u64,
    pub placebo: u64,
}

/// Observed counts of one two-arm trial.
///
/// The number of assaulted placebo participants equals `n_pi` in this model
/// (every assaulted, unprotected participant is infected), so it has no field
/// of its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTrial", into = "RawTrial")]
pub struct TrialCounts {
    pub label: String,
    pub n_v: u64,
    pub n_p: u64,
    pub n_vi: u64,
    pub n_pi: u64,
    pub severe: Option<SevereCounts>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrial {
    label: String,
    #[serde(rename = "nV")]
    n_v: u64,
    #[serde(rename = "nP")]
    n_p: u64,
    #[serde(rename = "nVI")]
    n_vi: u64,
    #[serde(rename = "nPI")]
    n_pi: u64,
    #[serde(rename = "nVIs", default, skip_serializing_if = "Option::is_none")]
    n_vis: Option<u64>,
    #[serde(rename = "nPIs", default, skip_serializing_if = "Option::is_none")]
    n_pis: Option<u64>,
}

impl TryFrom<RawTrial> for TrialCounts {
    type Error = Error;
    fn try_from(raw: RawTrial) -> Result<Self> {
        let severe = match (raw.n_vis, raw.n_pis) {
            (Some(vaccine), Some(placebo)) => Some(SevereCounts { vaccine, placebo }),
            (None, None) => None,
            _ => {
                return Err(Error::Validation {
                    record: raw.label,
                    constraint: "nVIs and nPIs must be both present or both absent".into(),
                })
            }
        };
        TrialCounts::new(raw.label, raw.n_v, raw.n_p, raw.n_vi, raw.n_pi, severe)
    }
}

impl From<TrialCounts> for RawTrial {
    fn from(t: TrialCounts) -> Self {
        RawTrial {
            label: t.label,
            n_v: t.n_v,
            n_p: t.n_p,
            n_vi: t.n_vi,
            n_pi: t.n_pi,
            n_vis: t.severe.map(|s| s.vaccine),
            n_pis: t.severe.map(|s| s.placebo),
        }
    }
}

impl TrialCounts {
    /// Builds and validates a record.
    pub fn new(
        label: impl Into<String>,
        n_v: u64,
        n_p: u64,
        n_vi: u64,
        n_pi: u64,
        severe: Option<SevereCounts>,
    ) -> Result<Self> {
        let t = Self { label: label.into(), n_v, n_p, n_vi, n_pi, severe };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |constraint: String| {
            Err(Error::Validation { record: self.label.clone(), constraint })
        };
        if self.n_vi > self.n_v {
            return fail(format!("nVI ({}) must not exceed nV ({})", self.n_vi, self.n_v));
        }
        if self.n_pi > self.n_p {
            return fail(format!("nPI ({}) must not exceed nP ({})", self.n_pi, self.n_p));
        }
        if let Some(s) = self.severe {
            if s.vaccine > self.n_vi {
                return fail(format!("nVIs ({}) must not exceed nVI ({})", s.vaccine, self.n_vi));
            }
            if s.placebo > self.n_pi {
                return fail(format!("nPIs ({}) must not exceed nPI ({})", s.placebo, self.n_pi));
            }
        }
        Ok(())
    }

    /// Copy without severity counts.
    pub fn without_severity(&self) -> Self {
        Self { severe: None, ..self.clone() }
    }

    /// Same infected counts with both arm sizes multiplied by `factor`.
    pub fn scaled_arms(&self, factor: u64) -> Self {
        Self {
            label: format!("{} (arms x{factor})", self.label),
            n_v: self.n_v * factor,
            n_p: self.n_p * factor,
            ..self.clone()
        }
    }
}

/// Posterior summary of a scalar in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSummary {
    pub mean: f64,
    pub sd: f64,
    pub mode: f64,
    /// Lower end of the central 95% credible interval.
    pub ci_low: f64,
    /// Upper end of the central 95% credible interval.
    pub ci_high: f64,
    pub tail_threshold: f64,
    /// `P(x >= tail_threshold)`.
    pub tail_prob: f64,
}

struct Builtin {
    slug: &'static str,
    label: &'static str,
    counts: [u64; 4],
    severe: Option<(u64, u64)>,
}

const BUILTINS: [Builtin; 5] = [
    Builtin { slug: "moderna-1", label: "Moderna-1", counts: [14134, 14073, 5, 90], severe: None },
    Builtin { slug: "moderna-2", label: "Moderna-2", counts: [14134, 14073, 11, 185], severe: Some((0, 30)) },
    Builtin { slug: "pfizer", label: "Pfizer", counts: [18198, 18325, 8, 162], severe: Some((1, 9)) },
    Builtin { slug: "az-ldsd", label: "AstraZeneca LD-SD", counts: [1367, 1374, 3, 30], severe: None },
    Builtin { slug: "az-sdsd", label: "AstraZeneca SD-SD", counts: [4440, 4455, 27, 71], severe: None },
];

fn build(b: &Builtin) -> TrialCounts {
    let [n_v, n_p, n_vi, n_pi] = b.counts;
    TrialCounts {
        label: b.label.to_string(),
        n_v,
        n_p,
        n_vi,
        n_pi,
        severe: b.severe.map(|(vaccine, placebo)| SevereCounts { vaccine, placebo }),
    }
}

/// The five published trial results (interim and final Moderna, Pfizer, and
/// the two AstraZeneca dosing regimens).
pub fn builtin_dataset() -> Vec<TrialCounts> {
    BUILTINS.iter().map(build).collect()
}

/// Short command-line names of the built-in trials, in dataset order.
pub fn builtin_slugs() -> Vec<&'static str> {
    BUILTINS.iter().map(|b| b.slug).collect()
}

/// Looks up a built-in trial by slug (`pfizer`, `az-sdsd`, ...) or by its
/// full label, ignoring case.
pub fn find_builtin(name: &str) -> Option<TrialCounts> {
    BUILTINS
        .iter()
        .find(|b| b.slug.eq_ignore_ascii_case(name) || b.label.eq_ignore_ascii_case(name))
        .map(build)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Json,
    Csv,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Dataset {
    trials: Vec<TrialCounts>,
}

pub const CSV_HEADER: [&str; 7] = ["label", "nV", "nP", "nVI", "nPI", "nVIs", "nPIs"];

/// Parses and validates a dataset in either interchange format.
pub fn load_dataset(source: &str, format: DataFormat) -> Result<Vec<TrialCounts>> {
    match format {
        DataFormat::Json => load_json(source),
        DataFormat::Csv => load_csv(source),
    }
}

fn load_json(source: &str) -> Result<Vec<TrialCounts>> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawDataset {
        trials: Vec<RawTrial>,
    }
    let raw: RawDataset = serde_json::from_str(source).map_err(|e| Error::Format {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    raw.trials.into_iter().map(TrialCounts::try_from).collect()
}

fn load_csv(source: &str) -> Result<Vec<TrialCounts>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source.as_bytes());
    let header = reader.headers().map_err(|e| Error::Format {
        location: "line 1".into(),
        message: e.to_string(),
    })?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Format {
            location: "line 1".into(),
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format {
            location: e
                .position()
                .map(|p| format!("line {}", p.line()))
                .unwrap_or_else(|| "unknown line".into()),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<Option<u64>> {
            let cell = record.get(i).unwrap_or("");
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<u64>().map(Some).map_err(|_| Error::Format {
                location: format!("line {line}, field `{}`", CSV_HEADER[i]),
                message: format!("`{cell}` is not a non-negative integer"),
            })
        };
        let required = |i: usize| -> Result<u64> {
            field(i)?.ok_or_else(|| Error::Format {
                location: format!("line {line}, field `{}`", CSV_HEADER[i]),
                message: "missing value".into(),
            })
        };
        let raw = RawTrial {
            label: record.get(0).unwrap_or("").to_string(),
            n_v: required(1)?,
            n_p: required(2)?,
            n_vi: required(3)?,
            n_pi: required(4)?,
            n_vis: field(5)?,
            n_pis: field(6)?,
        };
        out.push(TrialCounts::try_from(raw)?);
    }
    Ok(out)
}

/// Canonical serialization of a dataset.
pub fn serialize_dataset(trials: &[TrialCounts], format: DataFormat) -> String {
    match format {
        DataFormat::Json => {
            let d = Dataset { trials: trials.to_vec() };
            serde_json::to_string_pretty(&d).expect("dataset serializes") + "\n"
        }
        DataFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER).expect("in-memory write");
            for t in trials {
                let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
                w.write_record([
                    t.label.clone(),
                    t.n_v.to_string(),
                    t.n_p.to_string(),
                    t.n_vi.to_string(),
                    t.n_pi.to_string(),
                    opt(t.severe.map(|s| s.vaccine)),
                    opt(t.severe.map(|s| s.placebo)),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_rows() {
        let d = builtin_dataset();
        assert_eq!(d.len(), 5);
        assert_eq!(d[2].label, "Pfizer");
        assert_eq!(d[2].n_vi, 8);
        assert_eq!(d[1].severe.unwrap().placebo, 30);
        assert_eq!(d[1].severe.unwrap().vaccine, 0);
        assert!(d[0].severe.is_none());
        for t in &d {
            t.validate().unwrap();
        }
    }

    #[test]
    fn lookup_by_slug_or_label() {
        assert_eq!(find_builtin("PFIZER").unwrap().n_v, 18198);
        assert_eq!(find_builtin("AstraZeneca SD-SD").unwrap().n_pi, 71);
        assert!(find_builtin("nosuch").is_none());
    }

    #[test]
    fn json_record_matches_builtin() {
        let src = r#"{"trials":[{"label":"Moderna-2","nV":14134,"nP":14073,"nVI":11,"nPI":185,"nVIs":0,"nPIs":30}]}"#;
        let d = load_dataset(src, DataFormat::Json).unwrap();
        assert_eq!(d, vec![find_builtin("moderna-2").unwrap()]);
    }

    #[test]
    fn constraint_violation_is_reported() {
        let src = r#"{"trials":[{"label":"bad","nV":10,"nP":10,"nVI":11,"nPI":1}]}"#;
        match load_dataset(src, DataFormat::Json) {
            Err(Error::Validation { record, constraint }) => {
                assert_eq!(record, "bad");
                assert!(constraint.contains("nVI"), "{constraint}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
        let csv = "label,nV,nP,nVI,nPI,nVIs,nPIs\nbad,10,10,11,1,,\n";
        assert!(matches!(
            load_dataset(csv, DataFormat::Csv),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn half_present_severity_rejected() {
        let src = r#"{"trials":[{"label":"x","nV":10,"nP":10,"nVI":1,"nPI":1,"nVIs":0}]}"#;
        assert!(matches!(
            load_dataset(src, DataFormat::Json),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn unknown_fields_rejected() {
        let src = r#"{"trials":[{"label":"x","nV":10,"nP":10,"nVI":1,"nPI":1,"age":3}]}"#;
        assert!(matches!(load_dataset(src, DataFormat::Json), Err(Error::Format { .. })));
    }

    #[test]
    fn empty_inputs() {
        assert!(load_dataset(r#"{"trials":[]}"#, DataFormat::Json).unwrap().is_empty());
        assert!(load_dataset("label,nV,nP,nVI,nPI,nVIs,nPIs\n", DataFormat::Csv)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn csv_errors_carry_location() {
        let csv = "label,nV,nP,nVI,nPI,nVIs,nPIs\nok,10,10,1,1,,\nx,10,ten,1,1,,\n";
        match load_dataset(csv, DataFormat::Csv) {
            Err(Error::Format { location, .. }) => {
                assert!(location.contains("line 3") && location.contains("nP"), "{location}")
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_dataset("a,b\n1,2\n", DataFormat::Csv),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn csv_round_trip_of_builtins() {
        let d = builtin_dataset();
        let text = serialize_dataset(&d, DataFormat::Csv);
        assert_eq!(load_dataset(&text, DataFormat::Csv).unwrap(), d);
        assert!(text.contains("Moderna-1,14134,14073,5,90,,\n"));
    }
}

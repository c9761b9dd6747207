//! Result manifests: line-delimited JSON records plus a flat table export,
//! and the schema validator every emitted manifest must satisfy.
//!
//! A records manifest is one JSON object per line:
//!   header  — version, command, master seed, full config echo
//!   trial   — per-trial scientific fields (run / certify / demo)
//!   bench   — one row per chain length in a scaling sweep
//!   tensors — extracted tensor family (only with --emit-tensors)
//!   summary — campaign totals and the verdict counts
//!
//! Rerunning a campaign with the same seed reproduces every field except the
//! `wall_ms*` timings bit-for-bit.

use mpstomo::linalg::{CMatrix, CVector};
use mpstomo::{Certificate, ExtractedTensors};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;

pub const MANIFEST_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct CertificateRecord {
    pub cumulative_bound: f64,
    pub threshold: f64,
    pub accept: bool,
}

impl From<&Certificate> for CertificateRecord {
    fn from(c: &Certificate) -> Self {
        Self { cumulative_bound: c.cumulative_bound, threshold: c.threshold, accept: c.accept }
    }
}

/// Scientific outcome of one trial.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub backend: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub chi: usize,
    pub windows: usize,
    pub settings_per_window: u64,
    pub total_settings: u64,
    pub p_min: f64,
    pub max_loss: f64,
    pub cumulative_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_max_bond: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted_phases: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered_phases: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<[f64; 2]>>,
    pub wall_ms: f64,
}

/// One chain length of a scaling sweep.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub n: usize,
    pub k: usize,
    pub windows: usize,
    pub settings_per_window: u64,
    pub total_settings: u64,
    /// `d^{2n} - 1` real parameters of full state tomography (computed, not
    /// executed).
    pub full_tomography_params: f64,
    pub wall_ms_mean: f64,
    pub fidelity_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ratio_vs_prev: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub accepted: usize,
    pub rejected: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_phase_error: Option<f64>,
    pub wall_ms_total: f64,
}

/// Assembled campaign output.
#[derive(Debug)]
pub struct Manifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub bench: Vec<BenchRecord>,
    pub tensors: Vec<(usize, Value)>,
    pub summary: Summary,
}

impl Manifest {
    pub fn new(command: &str, config: ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            config,
            trials: Vec::new(),
            bench: Vec::new(),
            tensors: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn finish(&mut self) {
        self.summary.trials = self.trials.len();
        self.summary.accepted = self
            .trials
            .iter()
            .filter(|t| t.certificate.as_ref().is_some_and(|c| c.accept))
            .count();
        self.summary.rejected = self
            .trials
            .iter()
            .filter(|t| t.certificate.as_ref().is_some_and(|c| !c.accept))
            .count();
        self.summary.fidelity_min = self
            .trials
            .iter()
            .filter_map(|t| t.fidelity)
            .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.min(f))));
        self.summary.max_phase_error = self
            .trials
            .iter()
            .filter_map(|t| t.phase_error)
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
        self.summary.wall_ms_total = self.trials.iter().map(|t| t.wall_ms).sum::<f64>()
            + self.bench.iter().map(|b| b.wall_ms_mean).sum::<f64>();
    }

    /// Any certification verdict rejected?
    pub fn any_reject(&self) -> bool {
        self.summary.rejected > 0
    }

    /// Line-delimited JSON records.
    pub fn to_records(&self) -> String {
        let mut lines = Vec::new();
        lines.push(
            json!({
                "record": "header",
                "version": MANIFEST_VERSION,
                "command": self.command,
                "master_seed": self.config.seed,
                "config": serde_json::to_value(&self.config).expect("config serializes"),
            })
            .to_string(),
        );
        for t in &self.trials {
            let mut obj = serde_json::to_value(t).expect("trial serializes");
            tag(&mut obj, "trial");
            lines.push(obj.to_string());
        }
        for b in &self.bench {
            let mut obj = serde_json::to_value(b).expect("bench serializes");
            tag(&mut obj, "bench");
            lines.push(obj.to_string());
        }
        for (index, tensors) in &self.tensors {
            let mut obj = tensors.clone();
            if let Value::Object(map) = &mut obj {
                map.insert("index".into(), json!(index));
            }
            tag(&mut obj, "tensors");
            lines.push(obj.to_string());
        }
        let mut summary = serde_json::to_value(&self.summary).expect("summary serializes");
        tag(&mut summary, "summary");
        lines.push(summary.to_string());
        lines.join("\n") + "\n"
    }

    /// Flat TSV: one row per trial (or per bench size).
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if !self.bench.is_empty() {
            out.push_str("n\tk\twindows\tsettings_per_window\ttotal_settings\tfull_tomography_params\twall_ms_mean\tfidelity_min\twall_ratio_vs_prev\n");
            for b in &self.bench {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{:.6e}\t{:.3}\t{:.12}\t{}\n",
                    b.n,
                    b.k,
                    b.windows,
                    b.settings_per_window,
                    b.total_settings,
                    b.full_tomography_params,
                    b.wall_ms_mean,
                    b.fidelity_min,
                    b.wall_ratio_vs_prev.map_or("-".into(), |r| format!("{r:.3}")),
                ));
            }
            return out;
        }
        out.push_str("index\tstate_seed\tnoise_seed\tp_min\tmax_loss\tcumulative_bound\tfidelity\taccept\tphase_error\twall_ms\n");
        for t in &self.trials {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.12}\t{:.6e}\t{:.6e}\t{}\t{}\t{}\t{:.3}\n",
                t.index,
                t.state_seed.map_or("-".into(), |s| s.to_string()),
                t.noise_seed.map_or("-".into(), |s| s.to_string()),
                t.p_min,
                t.max_loss,
                t.cumulative_bound,
                t.fidelity.map_or("-".into(), |f| format!("{f:.12}")),
                t.certificate.as_ref().map_or("-".into(), |c| c.accept.to_string()),
                t.phase_error.map_or("-".into(), |e| format!("{e:.6e}")),
                t.wall_ms,
            ));
        }
        out
    }
}

fn tag(value: &mut Value, record: &str) {
    if let Value::Object(map) = value {
        map.insert("record".into(), Value::String(record.into()));
    }
}

fn matrix_json(m: &CMatrix) -> Value {
    json!({
        "rows": m.nrows(),
        "cols": m.ncols(),
        "re": m.iter().map(|x| x.re).collect::<Vec<_>>(),
        "im": m.iter().map(|x| x.im).collect::<Vec<_>>(),
    })
}

fn vector_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|x| [x.re, x.im]).collect()
}

/// JSON form of the extracted tensor family (column-major matrix data).
pub fn tensors_json(t: &ExtractedTensors) -> Value {
    json!({
        "n": t.n,
        "d": t.d,
        "k": t.k,
        "t": t.t.iter().map(|site| site.iter().map(matrix_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "v": t.v.iter().map(|site| site.iter().map(matrix_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "eta": vector_pairs(&t.eta),
    })
}

pub fn eta_pairs(eta: &CVector) -> Vec<[f64; 2]> {
    vector_pairs(eta)
}

/// Validate a records manifest against the published schema: every line is a
/// JSON object whose `record` field names a known type carrying its required
/// fields, starting with a header and ending with a summary.
pub fn validate_records(text: &str) -> Result<(), String> {
    let mut kinds = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).map_err(|e| format!("line {}: not JSON: {e}", lineno + 1))?;
        let obj = value.as_object().ok_or_else(|| format!("line {}: not an object", lineno + 1))?;
        let kind = obj
            .get("record")
            .and_then(Value::as_str)
            .ok_or_else(|| format!("line {}: missing record tag", lineno + 1))?;
        let required: &[(&str, fn(&Value) -> bool)] = match kind {
            "header" => &[
                ("version", Value::is_string),
                ("command", Value::is_string),
                ("master_seed", Value::is_u64),
                ("config", Value::is_object),
            ],
            "trial" => &[
                ("index", Value::is_u64),
                ("backend", Value::is_string),
                ("n", Value::is_u64),
                ("d", Value::is_u64),
                ("k", Value::is_u64),
                ("chi", Value::is_u64),
                ("windows", Value::is_u64),
                ("settings_per_window", Value::is_u64),
                ("total_settings", Value::is_u64),
                ("p_min", Value::is_number),
                ("max_loss", Value::is_number),
                ("cumulative_bound", Value::is_number),
                ("wall_ms", Value::is_number),
            ],
            "bench" => &[
                ("n", Value::is_u64),
                ("k", Value::is_u64),
                ("windows", Value::is_u64),
                ("settings_per_window", Value::is_u64),
                ("total_settings", Value::is_u64),
                ("full_tomography_params", Value::is_number),
                ("wall_ms_mean", Value::is_number),
                ("fidelity_min", Value::is_number),
            ],
            "tensors" => &[
                ("index", Value::is_u64),
                ("n", Value::is_u64),
                ("d", Value::is_u64),
                ("k", Value::is_u64),
                ("t", Value::is_array),
                ("v", Value::is_array),
                ("eta", Value::is_array),
            ],
            "summary" => &[
                ("trials", Value::is_u64),
                ("accepted", Value::is_u64),
                ("rejected", Value::is_u64),
                ("wall_ms_total", Value::is_number),
            ],
            other => return Err(format!("line {}: unknown record type `{other}`", lineno + 1)),
        };
        for (field, check) in required {
            let v = obj
                .get(*field)
                .ok_or_else(|| format!("line {}: {kind} record missing `{field}`", lineno + 1))?;
            if !check(v) {
                return Err(format!("line {}: {kind} field `{field}` has the wrong type", lineno + 1));
            }
        }
        kinds.push(kind.to_string());
    }
    if kinds.first().map(String::as_str) != Some("header") {
        return Err("manifest must start with a header record".into());
    }
    if kinds.last().map(String::as_str) != Some("summary") {
        return Err("manifest must end with a summary record".into());
    }
    Ok(())
}

/// Strip the wall-clock fields so reruns can be compared bit-for-bit.
pub fn strip_timings(records: &str) -> String {
    records
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let mut value: Value = serde_json::from_str(line).expect("validated records");
            if let Value::Object(map) = &mut value {
                let keys: Vec<String> = map.keys().filter(|k| k.starts_with("wall_ms")).cloned().collect();
                for k in keys {
                    map.insert(k, Value::Null);
                }
                sort_keys(map);
            }
            value.to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn sort_keys(map: &mut Map<String, Value>) {
    let sorted: Map<String, Value> = std::mem::take(map).into_iter().collect();
    *map = sorted;
}

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use sphbound_core::verdict::{Status, Verdict};

pub const SCHEMA: u32 = 1;

/// Machine-readable record of one command. Everything except `timings_ms`
/// is a function of the inputs; `digest` hashes that part.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub values: BTreeMap<String, Value>,
    pub artifacts: BTreeMap<String, String>,
    pub overall: Status,
    pub digest: String,
    pub timings_ms: BTreeMap<String, u128>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct ReportBuilder {
    report: RunReport,
    started: Instant,
}

impl ReportBuilder {
    pub fn new(command: &str) -> Self {
        ReportBuilder {
            report: RunReport {
                schema: SCHEMA,
                command: command.into(),
                inputs: BTreeMap::new(),
                verdicts: Vec::new(),
                values: BTreeMap::new(),
                artifacts: BTreeMap::new(),
                overall: Status::Pass,
                digest: String::new(),
                timings_ms: BTreeMap::new(),
            },
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.report.inputs.insert(key.into(), serde_json::to_value(v).expect("serialisable input"));
        self
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.report.values.insert(key.into(), serde_json::to_value(v).expect("serialisable value"));
        self
    }

    pub fn verdict(&mut self, v: Verdict) -> &mut Self {
        self.report.verdicts.push(v);
        self
    }

    pub fn verdicts<'a>(&mut self, vs: impl IntoIterator<Item = &'a Verdict>) -> &mut Self {
        self.report.verdicts.extend(vs.into_iter().cloned());
        self
    }

    pub fn artifact(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.report.artifacts.insert(name.into(), sha256_hex(bytes));
        self
    }

    pub fn timing(&mut self, key: &str, since: Instant) -> &mut Self {
        self.report.timings_ms.insert(key.into(), since.elapsed().as_millis());
        self
    }

    pub fn finish(mut self) -> RunReport {
        self.report.timings_ms.insert("total".into(), self.started.elapsed().as_millis());
        let mut overall = Status::Pass;
        for v in &self.report.verdicts {
            overall = overall.and(v.status);
        }
        self.report.overall = overall;
        let mut stable = serde_json::to_value(&self.report).expect("serialisable report");
        if let Value::Object(m) = &mut stable {
            m.remove("timings_ms");
            m.remove("digest");
        }
        self.report.digest = sha256_hex(stable.to_string().as_bytes());
        self.report
    }
}

impl RunReport {
    /// Every verdict passed.
    pub fn success(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed())
    }
}

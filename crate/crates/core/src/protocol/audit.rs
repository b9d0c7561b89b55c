//! Privacy audit and the line-oriented trace export it can run on.
//!
//! Export format: a `# dapmlm-trace v1` line, a commented column header,
//! one tab-separated line per message, then one `# owner-raw` line per data
//! owner carrying the digest of its raw partition.

use std::collections::BTreeMap;
use std::fmt;

use super::{EntityId, ProtocolError, Role, SimulationTrace};

const MAGIC: &str = "# dapmlm-trace v1";
const COLUMNS: &str = "# seq\tsender\treceiver\tkind\tprivacy\treply_to\tdigest";
const RAW_PREFIX: &str = "# owner-raw\t";

/// One message as seen by the audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub seq: u64,
    pub sender: EntityId,
    pub receiver: EntityId,
    pub kind: String,
    pub privacy: String,
    pub reply_to: Option<u64>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub seq: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuditReport {
    pub messages_checked: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn offending(&self) -> Vec<u64> {
        let mut seqs: Vec<u64> = self.violations.iter().map(|v| v.seq).collect();
        seqs.dedup();
        seqs
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "audit passed ({} messages)", self.messages_checked);
        }
        writeln!(
            f,
            "audit failed: {} violation(s) in {} messages",
            self.violations.len(),
            self.messages_checked
        )?;
        for v in &self.violations {
            writeln!(f, "  message {}: {}", v.seq, v.reason)?;
        }
        Ok(())
    }
}

fn records(trace: &SimulationTrace) -> Vec<TraceRecord> {
    trace
        .messages
        .iter()
        .map(|m| TraceRecord {
            seq: m.seq,
            sender: m.sender,
            receiver: m.receiver,
            kind: m.payload.kind().to_string(),
            privacy: m.payload.privacy(),
            reply_to: m.reply_to,
            digest: m.payload.digest(),
        })
        .collect()
}

/// Checks the log of `trace`:
/// no unperturbed data or model payload, no owner upload identical to that
/// owner's raw data, no owner-to-owner message, strictly increasing sequence
/// numbers, and every reply after the message it answers.
pub fn audit_trace(trace: &SimulationTrace) -> AuditReport {
    audit_records(&records(trace), &trace.owner_raw_digests)
}

/// Runs the same checks on an exported trace.
pub fn audit_export(text: &str) -> Result<AuditReport, ProtocolError> {
    let (records, raw) = parse_export(text)?;
    Ok(audit_records(&records, &raw))
}

fn audit_records(records: &[TraceRecord], raw: &[(EntityId, String)]) -> AuditReport {
    let raw: BTreeMap<EntityId, &str> = raw.iter().map(|(e, d)| (*e, d.as_str())).collect();
    let mut seen: BTreeMap<u64, &TraceRecord> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut flag = |seq: u64, reason: String| violations.push(Violation { seq, reason });
    let mut last: Option<u64> = None;

    for r in records {
        if last.is_some_and(|l| r.seq <= l) {
            flag(r.seq, format!("sequence number not increasing after {}", last.unwrap()));
        }
        last = Some(r.seq);
        if r.sender.role == Role::DataOwner && r.receiver.role == Role::DataOwner {
            flag(r.seq, format!("direct message {} -> {}", r.sender, r.receiver));
        }
        if r.privacy == "unperturbed" {
            flag(r.seq, format!("{} carries an unperturbed payload", r.kind));
        }
        match r.kind.as_str() {
            "UploadData" => {
                if r.sender.role != Role::DataOwner {
                    flag(r.seq, format!("data upload from {}", r.sender));
                }
                if raw.get(&r.sender) == Some(&r.digest.as_str()) {
                    flag(r.seq, format!("upload from {} equals its raw data", r.sender));
                }
            }
            "UploadModel" if r.sender.role != Role::ClassifierOwner => {
                flag(r.seq, format!("model upload from {}", r.sender));
            }
            _ => {}
        }
        if let Some(to) = r.reply_to {
            match seen.get(&to) {
                None => flag(r.seq, format!("replies to message {to}, which precedes nothing")),
                Some(req) => {
                    let expected = match r.kind.as_str() {
                        "ClassifyResponse" => Some("ClassifyRequest"),
                        "DataGrant" => Some("DataRequest"),
                        _ => None,
                    };
                    if expected.is_some_and(|k| req.kind != k) {
                        flag(r.seq, format!("{} answers a {}", r.kind, req.kind));
                    }
                }
            }
        } else if matches!(r.kind.as_str(), "ClassifyResponse" | "DataGrant") {
            flag(r.seq, format!("{} answers no request", r.kind));
        }
        seen.insert(r.seq, r);
    }
    AuditReport {
        messages_checked: records.len(),
        violations,
    }
}

/// Deterministic text rendering of `trace` for external audit.
pub fn export_trace(trace: &SimulationTrace) -> String {
    let mut out = format!("{MAGIC}\n{COLUMNS}\n");
    for r in records(trace) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.seq,
            r.sender,
            r.receiver,
            r.kind,
            r.privacy,
            r.reply_to.map_or("-".to_string(), |s| s.to_string()),
            r.digest
        ));
    }
    for (e, d) in &trace.owner_raw_digests {
        out.push_str(&format!("{RAW_PREFIX}{e}\t{d}\n"));
    }
    out
}

#[allow(clippy::type_complexity)]
pub fn parse_export(
    text: &str,
) -> Result<(Vec<TraceRecord>, Vec<(EntityId, String)>), ProtocolError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        _ => return Err(ProtocolError::Export(format!("missing `{MAGIC}` header"))),
    }
    let bad = |n: usize, what: &str| ProtocolError::Export(format!("line {}: {what}", n + 1));
    let mut records = Vec::new();
    let mut raw = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(RAW_PREFIX) {
            let (e, d) = rest.split_once('\t').ok_or_else(|| bad(n, "malformed owner-raw line"))?;
            raw.push((e.parse()?, d.to_string()));
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let [seq, sender, receiver, kind, privacy, reply_to, digest] = f.as_slice() else {
            return Err(bad(n, "expected 7 tab-separated fields"));
        };
        records.push(TraceRecord {
            seq: seq.parse().map_err(|_| bad(n, "bad sequence number"))?,
            sender: sender.parse()?,
            receiver: receiver.parse()?,
            kind: kind.to_string(),
            privacy: privacy.to_string(),
            reply_to: match *reply_to {
                "-" => None,
                s => Some(s.parse().map_err(|_| bad(n, "bad reply_to"))?),
            },
            digest: digest.to_string(),
        });
    }
    Ok((records, raw))
}

//! Multi-party protocol simulation.
//!
//! Data owners release perturbed partitions, the classifier owner releases a
//! perturbed model, and a cloud service provider stores datasets in one cloud
//! (C1) and serves classification from another (C2). Request users query
//! through the provider. Every hop is a [`ProtocolMessage`] in a single
//! totally ordered log, and [`audit_trace`] re-checks the privacy claims
//! against that log.
//!
//! Payloads are typed so that raw [`Dataset`](crate::data::Dataset) values
//! cannot be sent at all. Unperturbed releases exist only through explicit
//! baseline constructors and are reported by the audit.

mod audit;
mod sim;

pub use audit::{
    audit_export, audit_trace, export_trace, parse_export, AuditReport, TraceRecord, Violation,
};
pub use sim::{
    run_protocol, ConstantPerEntity, DataRelease, Event, ModelRelease, NoiseProvider, Query,
    Scenario, SeededNoise,
};

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{ClassId, NormalizationParams, SyntheticDataset};
use crate::model::{to_text, NbModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("scenario needs at least one data owner")]
    NoOwners,
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("shared model must be noisy; use SharedModel::unperturbed for baselines")]
    RawModel,
    #[error("cannot parse trace: {0}")]
    Export(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    DataOwner,
    ClassifierOwner,
    Csp,
    Cloud1,
    Cloud2,
    RequestUser,
}

impl Role {
    fn tag(self) -> &'static str {
        match self {
            Role::DataOwner => "DO",
            Role::ClassifierOwner => "CO",
            Role::Csp => "CSP",
            Role::Cloud1 => "C1",
            Role::Cloud2 => "C2",
            Role::RequestUser => "RU",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    pub role: Role,
    pub index: u32,
}

impl EntityId {
    pub const CSP: EntityId = EntityId::new(Role::Csp, 0);
    pub const C1: EntityId = EntityId::new(Role::Cloud1, 0);
    pub const C2: EntityId = EntityId::new(Role::Cloud2, 0);
    pub const CO: EntityId = EntityId::new(Role::ClassifierOwner, 0);

    pub const fn new(role: Role, index: u32) -> Self {
        Self { role, index }
    }

    pub const fn owner(index: u32) -> Self {
        Self::new(Role::DataOwner, index)
    }

    pub const fn user(index: u32) -> Self {
        Self::new(Role::RequestUser, index)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.role.tag(), self.index)
    }
}

impl FromStr for EntityId {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, index) = s
            .split_once('-')
            .ok_or_else(|| ProtocolError::Export(format!("bad entity `{s}`")))?;
        let role = [
            Role::DataOwner,
            Role::ClassifierOwner,
            Role::Csp,
            Role::Cloud1,
            Role::Cloud2,
            Role::RequestUser,
        ]
        .into_iter()
        .find(|r| r.tag() == tag)
        .ok_or_else(|| ProtocolError::Export(format!("bad role in `{s}`")))?;
        let index = index
            .parse()
            .map_err(|_| ProtocolError::Export(format!("bad index in `{s}`")))?;
        Ok(Self { role, index })
    }
}

/// A model as it travels from the classifier owner.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedModel {
    model: NbModel,
}

impl SharedModel {
    /// Wraps a noisy model; raw models are refused.
    pub fn new(model: NbModel) -> Result<Self, ProtocolError> {
        if model.is_noisy() {
            Ok(Self { model })
        } else {
            Err(ProtocolError::RawModel)
        }
    }

    /// Wraps a raw model. Not private; exists for baselines and is flagged by
    /// the audit.
    pub fn unperturbed(model: NbModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &NbModel {
        &self.model
    }

    pub fn is_noisy(&self) -> bool {
        self.model.is_noisy()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    UploadData(SyntheticDataset),
    UploadModel(SharedModel),
    DataRequest { dataset: String },
    DataGrant(Vec<SyntheticDataset>),
    ClassifyRequest { request_id: u64, rows: Vec<Vec<f64>> },
    ClassifyResponse { request_id: u64, labels: Vec<ClassId> },
    Ack,
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::UploadData(_) => "UploadData",
            Payload::UploadModel(_) => "UploadModel",
            Payload::DataRequest { .. } => "DataRequest",
            Payload::DataGrant(_) => "DataGrant",
            Payload::ClassifyRequest { .. } => "ClassifyRequest",
            Payload::ClassifyResponse { .. } => "ClassifyResponse",
            Payload::Ack => "Ack",
        }
    }

    /// Privacy status of the carried data or model; `-` when it carries
    /// neither.
    pub fn privacy(&self) -> String {
        match self {
            Payload::UploadData(d) => data_privacy(std::slice::from_ref(d)),
            Payload::DataGrant(ds) => data_privacy(ds),
            Payload::UploadModel(m) => match m.model().tag() {
                crate::model::ModelTag::Noisy { epsilon, .. } => {
                    format!("noisy:{}", epsilon.epsilon())
                }
                crate::model::ModelTag::Raw => "unperturbed".into(),
            },
            _ => "-".into(),
        }
    }

    /// Hex SHA-256 of the payload. Data uploads hash only their records and
    /// labels so the value can be compared with the owner's raw data.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        match self {
            Payload::UploadData(d) => h.update(records_bytes(d.records(), d.labels())),
            Payload::DataGrant(ds) => {
                for d in ds {
                    h.update(d.canonical_bytes());
                }
            }
            Payload::UploadModel(m) => h.update(to_text(m.model()).as_bytes()),
            Payload::DataRequest { dataset } => h.update(dataset.as_bytes()),
            Payload::ClassifyRequest { request_id, rows } => {
                h.update(request_id.to_le_bytes());
                for row in rows {
                    for v in row {
                        h.update(v.to_bits().to_le_bytes());
                    }
                }
            }
            Payload::ClassifyResponse { request_id, labels } => {
                h.update(request_id.to_le_bytes());
                for l in labels {
                    h.update(l.0.to_le_bytes());
                }
            }
            Payload::Ack => h.update(b"ack"),
        }
        hex::encode(h.finalize())
    }
}

fn data_privacy(ds: &[SyntheticDataset]) -> String {
    use crate::data::Release;
    let mut eps = None;
    for d in ds {
        match d.release() {
            Release::Unperturbed => return "unperturbed".into(),
            Release::Perturbed { budget, .. } => eps = Some(budget.epsilon()),
        }
    }
    match eps {
        Some(e) => format!("perturbed:{e}"),
        None => "-".into(),
    }
}

/// Byte encoding of records and labels shared by upload digests and raw
/// reference digests.
pub fn records_bytes(records: &[Vec<f64>], labels: &[ClassId]) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * (records.first().map_or(0, Vec::len) * 8 + 4));
    for (row, label) in records.iter().zip(labels) {
        for v in row {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        out.extend_from_slice(&label.0.to_le_bytes());
    }
    out
}

pub fn records_digest(records: &[Vec<f64>], labels: &[ClassId]) -> String {
    hex::encode(Sha256::digest(records_bytes(records, labels)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolMessage {
    pub seq: u64,
    pub sender: EntityId,
    pub receiver: EntityId,
    pub payload: Payload,
    /// Sequence number of the message this one answers.
    pub reply_to: Option<u64>,
}

/// A protocol step that could not be served.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolFault {
    /// Message that triggered the fault.
    pub seq: u64,
    pub message: String,
}

/// Complete record of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub messages: Vec<ProtocolMessage>,
    /// Storage cloud contents: released datasets only.
    pub c1: Vec<SyntheticDataset>,
    /// Classification cloud contents: the serving model only.
    pub c2: Option<SharedModel>,
    /// Parameters the provider applies to query rows.
    pub normalizer: Option<NormalizationParams>,
    pub faults: Vec<ProtocolFault>,
    /// Digest of each owner's raw partition, for the audit only. Never sent.
    pub owner_raw_digests: Vec<(EntityId, String)>,
}

impl SimulationTrace {
    /// Labels answered for `request_id`, if any.
    pub fn response(&self, request_id: u64) -> Option<&[ClassId]> {
        self.messages.iter().find_map(|m| match &m.payload {
            Payload::ClassifyResponse {
                request_id: id,
                labels,
            } if *id == request_id => Some(labels.as_slice()),
            _ => None,
        })
    }

    pub fn count(&self, kind: &str) -> usize {
        self.messages.iter().filter(|m| m.payload.kind() == kind).count()
    }
}

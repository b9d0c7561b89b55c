//! Deterministic single-threaded scheduler.
//!
//! Delivery is synchronous and FIFO on one logical clock. The provider
//! deposits uploads straight into its clouds, so a deposit is not a separate
//! message.

use std::collections::BTreeMap;

use crate::data::{
    apply_normalizer, fit_normalizer, perturb_dataset, pool, AttributeBounds, Dataset, NoiseLayout,
    OwnerId, SyntheticDataset,
};
use crate::dp::{ConstantNoise, NoiseSampler, NoiseSource, PrivacyBudget};
use crate::model::{class_sensitivities, perturb_model, predict_batch, train, ModelTag};

use super::{
    records_digest, EntityId, Payload, ProtocolError, ProtocolFault, ProtocolMessage, Role,
    SharedModel, SimulationTrace,
};

/// What data owners send.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataRelease {
    Perturb {
        budget: PrivacyBudget,
        layout: NoiseLayout,
    },
    /// Baseline only.
    Unperturbed,
}

/// What the classifier owner sends, and what C2 re-applies after training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelRelease {
    Perturb {
        budget: PrivacyBudget,
        count_noise_scale: f64,
    },
    /// Baseline only.
    Unperturbed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// Rows in the data's original units; the provider normalizes them.
    Classify { user: u32, rows: Vec<Vec<f64>> },
    Data { user: u32, dataset: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Owner at this index releases and uploads its partition.
    OwnerUpload(usize),
    ModelUpload,
    Query(Query),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Raw partition of each data owner.
    pub owners: Vec<Dataset>,
    /// The classifier owner's own training data.
    pub classifier_data: Dataset,
    pub data_release: DataRelease,
    pub model_release: ModelRelease,
    pub events: Vec<Event>,
}

impl Scenario {
    /// Every owner uploads, then the model, then the queries in order.
    pub fn standard(
        owners: Vec<Dataset>,
        classifier_data: Dataset,
        data_release: DataRelease,
        model_release: ModelRelease,
        queries: Vec<Query>,
    ) -> Self {
        let mut events: Vec<Event> = (0..owners.len()).map(Event::OwnerUpload).collect();
        events.push(Event::ModelUpload);
        events.extend(queries.into_iter().map(Event::Query));
        Self {
            owners,
            classifier_data,
            data_release,
            model_release,
            events,
        }
    }
}

/// Hands each entity its own noise sampler. Asked at most once per entity.
pub trait NoiseProvider {
    fn sampler(&mut self, entity: EntityId) -> Box<dyn NoiseSampler>;
}

/// Independent seeded sub-streams keyed by entity.
#[derive(Debug, Clone, Copy)]
pub struct SeededNoise(pub u64);

impl NoiseProvider for SeededNoise {
    fn sampler(&mut self, entity: EntityId) -> Box<dyn NoiseSampler> {
        Box::new(NoiseSource::from_seed(self.0).substream(entity.role.tag(), entity.index as u64))
    }
}

/// Fixed noise value per entity; entities not listed draw zero.
#[derive(Debug, Clone, Default)]
pub struct ConstantPerEntity(pub BTreeMap<EntityId, f64>);

impl NoiseProvider for ConstantPerEntity {
    fn sampler(&mut self, entity: EntityId) -> Box<dyn NoiseSampler> {
        Box::new(ConstantNoise(self.0.get(&entity).copied().unwrap_or(0.0)))
    }
}

struct Sim<'a> {
    noise: &'a mut dyn NoiseProvider,
    samplers: BTreeMap<EntityId, Box<dyn NoiseSampler>>,
    trace: SimulationTrace,
    model_policy: Option<ModelTag>,
    next_request: u64,
}

fn invalid(e: impl std::fmt::Display) -> ProtocolError {
    ProtocolError::Invalid(e.to_string())
}

impl Sim<'_> {
    fn sampler(&mut self, entity: EntityId) -> &mut dyn NoiseSampler {
        let noise = &mut *self.noise;
        self.samplers
            .entry(entity)
            .or_insert_with(|| noise.sampler(entity))
            .as_mut()
    }

    fn send(
        &mut self,
        sender: EntityId,
        receiver: EntityId,
        payload: Payload,
        reply_to: Option<u64>,
    ) -> u64 {
        let seq = self.trace.messages.len() as u64;
        self.trace.messages.push(ProtocolMessage {
            seq,
            sender,
            receiver,
            payload,
            reply_to,
        });
        seq
    }

    fn fault(&mut self, seq: u64, message: impl Into<String>) {
        self.trace.faults.push(ProtocolFault {
            seq,
            message: message.into(),
        });
    }

    /// C2 fits raw parameters on the pooled, normalized C1 data and applies
    /// the classifier owner's perturbation before anything is served.
    fn train_c2(&mut self, trigger: u64) -> Result<(), ProtocolError> {
        let Some(policy) = self.model_policy else {
            return Ok(());
        };
        let (rows, labels) = pool(&self.trace.c1).map_err(invalid)?;
        let params = match fit_normalizer(&rows) {
            Ok(p) => p,
            Err(e) => {
                self.fault(trigger, format!("cannot train: {e}"));
                return Ok(());
            }
        };
        let normalized = apply_normalizer(&rows, &params).map_err(invalid)?;
        let raw = train(&normalized, &labels).map_err(invalid)?;
        let shared = match policy {
            ModelTag::Raw => SharedModel::unperturbed(raw),
            ModelTag::Noisy {
                epsilon,
                count_noise_scale,
            } => {
                let bounds = normalized_bounds(&self.trace.c1, params.mean(), params.std())?;
                let sens = class_sensitivities(&raw, &bounds).map_err(invalid)?;
                let sampler = self.sampler(EntityId::C2);
                let noisy = perturb_model(&raw, &sens, epsilon, count_noise_scale, sampler)
                    .map_err(invalid)?;
                SharedModel::new(noisy)?
            }
        };
        self.trace.c2 = Some(shared);
        self.trace.normalizer = Some(params);
        self.send(EntityId::C2, EntityId::CO, Payload::Ack, Some(trigger));
        Ok(())
    }
}

/// Union of the released datasets' source bounds, mapped through the
/// normalizer.
fn normalized_bounds(
    c1: &[SyntheticDataset],
    mean: &[f64],
    std: &[f64],
) -> Result<Vec<AttributeBounds>, ProtocolError> {
    let mut lo = vec![f64::INFINITY; mean.len()];
    let mut hi = vec![f64::NEG_INFINITY; mean.len()];
    for d in c1 {
        for (j, b) in d.source_bounds().iter().enumerate() {
            lo[j] = lo[j].min(b.lower());
            hi[j] = hi[j].max(b.upper());
        }
    }
    (0..mean.len())
        .map(|j| AttributeBounds::new((lo[j] - mean[j]) / std[j], (hi[j] - mean[j]) / std[j]))
        .collect::<Result<_, _>>()
        .map_err(invalid)
}

/// Runs `scenario` to completion.
///
/// Configuration errors abort. Requests that cannot be served are recorded
/// as faults in the trace and the run continues.
pub fn run_protocol(
    scenario: &Scenario,
    noise: &mut dyn NoiseProvider,
) -> Result<SimulationTrace, ProtocolError> {
    if scenario.owners.is_empty() {
        return Err(ProtocolError::NoOwners);
    }
    let mut sim = Sim {
        noise,
        samplers: BTreeMap::new(),
        trace: SimulationTrace {
            messages: Vec::new(),
            c1: Vec::new(),
            c2: None,
            normalizer: None,
            faults: Vec::new(),
            owner_raw_digests: Vec::new(),
        },
        model_policy: None,
        next_request: 0,
    };

    for event in &scenario.events {
        match event {
            Event::OwnerUpload(i) => {
                let raw = scenario
                    .owners
                    .get(*i)
                    .ok_or_else(|| invalid(format!("no data owner {i}")))?;
                let who = EntityId::owner(*i as u32);
                let owner = OwnerId(*i as u32);
                let released = match scenario.data_release {
                    DataRelease::Perturb { budget, layout } => {
                        perturb_dataset(raw, owner, budget, layout, sim.sampler(who))
                            .map_err(invalid)?
                    }
                    DataRelease::Unperturbed => SyntheticDataset::unperturbed(raw, owner),
                };
                sim.trace
                    .owner_raw_digests
                    .push((who, records_digest(raw.records(), raw.labels())));
                sim.trace.c1.push(released.clone());
                let seq = sim.send(who, EntityId::CSP, Payload::UploadData(released), None);
                sim.train_c2(seq)?;
            }
            Event::ModelUpload => {
                let data = &scenario.classifier_data;
                let own = train(data.records(), data.labels()).map_err(invalid)?;
                let shared = match scenario.model_release {
                    ModelRelease::Unperturbed => SharedModel::unperturbed(own),
                    ModelRelease::Perturb {
                        budget,
                        count_noise_scale,
                    } => {
                        let sens = class_sensitivities(&own, data.bounds()).map_err(invalid)?;
                        let sampler = sim.sampler(EntityId::CO);
                        let noisy = perturb_model(&own, &sens, budget, count_noise_scale, sampler)
                            .map_err(invalid)?;
                        SharedModel::new(noisy)?
                    }
                };
                sim.model_policy = Some(shared.model().tag());
                let seq = sim.send(EntityId::CO, EntityId::CSP, Payload::UploadModel(shared), None);
                sim.train_c2(seq)?;
            }
            Event::Query(Query::Classify { user, rows }) => {
                let request_id = sim.next_request;
                sim.next_request += 1;
                let ru = EntityId::user(*user);
                let asked = sim.send(
                    ru,
                    EntityId::CSP,
                    Payload::ClassifyRequest {
                        request_id,
                        rows: rows.clone(),
                    },
                    None,
                );
                let (Some(model), Some(params)) = (&sim.trace.c2, &sim.trace.normalizer) else {
                    sim.fault(asked, "classification requested before a model was trained");
                    continue;
                };
                let normalized = match apply_normalizer(rows, params) {
                    Ok(z) => z,
                    Err(e) => {
                        sim.fault(asked, e.to_string());
                        continue;
                    }
                };
                let labels = predict_batch(model.model(), &normalized).map_err(invalid)?;
                sim.send(
                    EntityId::CSP,
                    EntityId::C2,
                    Payload::ClassifyRequest {
                        request_id,
                        rows: normalized,
                    },
                    Some(asked),
                );
                sim.send(
                    EntityId::C2,
                    ru,
                    Payload::ClassifyResponse { request_id, labels },
                    Some(asked),
                );
            }
            Event::Query(Query::Data { user, dataset }) => {
                let ru = EntityId::user(*user);
                let payload = Payload::DataRequest {
                    dataset: dataset.clone(),
                };
                let asked = sim.send(ru, EntityId::CSP, payload.clone(), None);
                sim.send(EntityId::CSP, EntityId::C1, payload, Some(asked));
                let grant: Vec<SyntheticDataset> = sim
                    .trace
                    .c1
                    .iter()
                    .filter(|d| d.name() == dataset)
                    .cloned()
                    .collect();
                if grant.is_empty() {
                    sim.fault(asked, format!("no dataset named `{dataset}` in storage"));
                    continue;
                }
                sim.send(EntityId::C1, ru, Payload::DataGrant(grant), Some(asked));
            }
        }
    }
    debug_assert!(sim
        .trace
        .messages
        .iter()
        .all(|m| m.sender.role != Role::DataOwner || m.receiver.role != Role::DataOwner));
    Ok(sim.trace)
}

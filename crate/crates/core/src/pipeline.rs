//! Log ingestion and trait aggregation.
//!
//! Raw interaction logs become validated [`Event`]s, a [`TraitStore`]
//! aggregates them into static and time-windowed dynamic traits, and a
//! [`ContextSchema`] turns a subject's traits into a fixed-width feature
//! vector for the decision policies.
//!
//! Late and out-of-order events are accepted: aggregates are recomputed from
//! the retained per-subject event list at query time, which makes the store
//! deterministic under any arrival order of the same events.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scalar payload value carried by an event field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayloadValue {
    Number(f64),
    Bool(bool),
    Text(String),
}

impl PayloadValue {
    /// Numeric view: numbers as-is, booleans as 0/1, text as missing.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            PayloadValue::Number(v) => Some(*v),
            PayloadValue::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            PayloadValue::Text(_) => None,
        }
    }
}

/// One validated log event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub subject_id: String,
    pub kind: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub payload: BTreeMap<String, PayloadValue>,
}

impl Event {
    /// Validates a structured record. Timestamps are truncated to whole
    /// seconds; unknown payload keys are preserved.
    pub fn from_json_value(value: &serde_json::Value) -> Result<Event> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidParameter("event record must be a JSON object".into()))?;
        let subject_id = obj
            .get("subject_id")
            .and_then(|v| v.as_str())
            .ok_or(Error::MissingField("subject_id"))?
            .to_string();
        let kind = obj
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or(Error::MissingField("kind"))?
            .to_string();
        if kind.is_empty() {
            return Err(Error::InvalidParameter("event kind must be non-empty".into()));
        }
        let ts_raw = obj
            .get("timestamp")
            .and_then(|v| v.as_str())
            .ok_or(Error::MissingField("timestamp"))?;
        let timestamp = DateTime::parse_from_rfc3339(ts_raw)
            .map_err(|_| Error::MalformedTimestamp(ts_raw.to_string()))?
            .with_timezone(&Utc)
            .with_nanosecond(0)
            .expect("zero nanoseconds is always valid");
        let mut payload = BTreeMap::new();
        if let Some(p) = obj.get("payload") {
            let map = p.as_object().ok_or_else(|| {
                Error::InvalidParameter("payload must be a flat JSON object".into())
            })?;
            for (k, v) in map {
                let value = match v {
                    serde_json::Value::Number(n) => PayloadValue::Number(n.as_f64().ok_or(
                        Error::NonFinite("payload number outside the f64 range"),
                    )?),
                    serde_json::Value::Bool(b) => PayloadValue::Bool(*b),
                    serde_json::Value::String(s) => PayloadValue::Text(s.clone()),
                    _ => {
                        return Err(Error::InvalidParameter(format!(
                            "payload key {k:?} holds a non-scalar value"
                        )))
                    }
                };
                payload.insert(k.clone(), value);
            }
        }
        Ok(Event {
            subject_id,
            kind,
            timestamp,
            payload,
        })
    }

    /// Parses one line of a line-delimited JSON event log.
    pub fn from_json_line(line: &str) -> Result<Event> {
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::InvalidParameter(format!("invalid JSON: {e}")))?;
        Event::from_json_value(&value)
    }
}

/// Reads a line-delimited JSON event log, tagging failures with line numbers.
pub fn read_event_log<R: BufRead>(reader: R) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidParameter(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let event = Event::from_json_line(&line).map_err(|e| e.at_line(idx + 1))?;
        events.push(event);
    }
    Ok(events)
}

/// Windowed aggregation rule for one dynamic trait.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregator {
    /// Number of matching events in the window.
    Count,
    /// Sum of a numeric payload field over the window.
    Sum { field: String },
    /// Mean of a numeric payload field; missing over an empty window.
    Mean { field: String },
    /// Most recent value of a numeric payload field; missing when empty.
    Last { field: String },
}

/// Definition of one dynamic trait.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraitDef {
    /// Unique trait name referenced by schemas.
    pub name: String,
    /// Event kind this trait aggregates.
    pub kind: String,
    pub aggregator: Aggregator,
    /// Look-back window in days; events in `(now - window, now]` count.
    pub window_days: u32,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct SubjectState {
    statics: BTreeMap<String, f64>,
    events: Vec<Event>,
    last_updated: Option<DateTime<Utc>>,
}

/// Per-subject static traits plus retained events backing dynamic traits.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TraitStore {
    defs: BTreeMap<String, TraitDef>,
    subjects: BTreeMap<String, SubjectState>,
}

impl TraitStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a dynamic trait. Definitions must precede the events they
    /// aggregate; events of unregistered kinds are dropped.
    pub fn register_trait(&mut self, def: TraitDef) -> Result<()> {
        if self.defs.contains_key(&def.name) {
            return Err(Error::InvalidParameter(format!(
                "duplicate trait name {:?}",
                def.name
            )));
        }
        self.defs.insert(def.name.clone(), def);
        Ok(())
    }

    pub fn set_static(&mut self, subject_id: &str, name: &str, value: f64) {
        let state = self.subjects.entry(subject_id.to_string()).or_default();
        state.statics.insert(name.to_string(), value);
    }

    pub fn contains_subject(&self, subject_id: &str) -> bool {
        self.subjects.contains_key(subject_id)
    }

    pub fn subject_ids(&self) -> impl Iterator<Item = &str> {
        self.subjects.keys().map(String::as_str)
    }

    pub fn last_updated(&self, subject_id: &str) -> Option<DateTime<Utc>> {
        self.subjects.get(subject_id)?.last_updated
    }

    /// Folds one event into the store. Events whose kind matches no
    /// registered trait leave the store unchanged; late arrivals are fine
    /// because aggregates are recomputed from the retained list.
    pub fn update(&mut self, event: &Event) {
        if !self.defs.values().any(|d| d.kind == event.kind) {
            return;
        }
        let state = self.subjects.entry(event.subject_id.clone()).or_default();
        state.events.push(event.clone());
        state.last_updated = Some(match state.last_updated {
            Some(prev) => prev.max(event.timestamp),
            None => event.timestamp,
        });
    }

    /// Current value of a trait, dynamic first, then static. `None` means
    /// missing (unknown name, empty mean/last window, or non-numeric field).
    pub fn trait_value(&self, subject_id: &str, name: &str, now: DateTime<Utc>) -> Option<f64> {
        let state = self.subjects.get(subject_id)?;
        if let Some(def) = self.defs.get(name) {
            return aggregate(&state.events, def, now);
        }
        state.statics.get(name).copied()
    }
}

fn aggregate(events: &[Event], def: &TraitDef, now: DateTime<Utc>) -> Option<f64> {
    let cutoff = now - Duration::days(i64::from(def.window_days));
    let in_window = events
        .iter()
        .filter(|e| e.kind == def.kind && e.timestamp > cutoff && e.timestamp <= now);
    match &def.aggregator {
        Aggregator::Count => Some(in_window.count() as f64),
        Aggregator::Sum { field } => Some(
            in_window
                .filter_map(|e| e.payload.get(field).and_then(PayloadValue::as_number))
                .sum(),
        ),
        Aggregator::Mean { field } => {
            let values: Vec<f64> = in_window
                .filter_map(|e| e.payload.get(field).and_then(PayloadValue::as_number))
                .collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        }
        Aggregator::Last { field } => in_window
            .filter_map(|e| {
                let v = e.payload.get(field).and_then(PayloadValue::as_number)?;
                Some((e.timestamp, v))
            })
            // Total order on (timestamp, value) keeps "last" stable under
            // arrival-order permutations.
            .max_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
            .map(|(_, v)| v),
    }
}

/// One column of a context schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraitColumn {
    /// Trait name to look up (dynamic first, then static).
    pub trait_name: String,
    /// Emit a companion 0/1 missing-indicator column.
    pub missing_indicator: bool,
    /// Optional fixed `(mean, scale)` standardization of present values.
    pub standardize: Option<(f64, f64)>,
}

impl TraitColumn {
    pub fn plain(trait_name: &str) -> Self {
        Self {
            trait_name: trait_name.to_string(),
            missing_indicator: true,
            standardize: None,
        }
    }
}

/// Fixed, ordered context layout. The expanded dimension `d` never changes
/// over the schema's lifetime, and standardization constants are frozen at
/// construction so contexts stay stationary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextSchema {
    columns: Vec<TraitColumn>,
}

impl ContextSchema {
    pub fn new(columns: Vec<TraitColumn>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for col in &columns {
            if !seen.insert(col.trait_name.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate schema trait {:?}",
                    col.trait_name
                )));
            }
            if let Some((_, scale)) = col.standardize {
                if scale == 0.0 || !scale.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "bad standardization scale for {:?}",
                        col.trait_name
                    )));
                }
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[TraitColumn] {
        &self.columns
    }

    /// Expanded context dimension (values plus indicator columns).
    pub fn dim(&self) -> usize {
        self.columns
            .iter()
            .map(|c| 1 + usize::from(c.missing_indicator))
            .sum()
    }
}

/// Builds the context vector for one subject at instant `now`.
///
/// Missing traits are imputed as zero with their indicator set to 1;
/// present values are standardized when the column says so.
pub fn build_context<S: Scalar>(
    store: &TraitStore,
    subject_id: &str,
    schema: &ContextSchema,
    now: DateTime<Utc>,
) -> Result<Vec<S>> {
    if !store.contains_subject(subject_id) {
        return Err(Error::UnknownSubject(subject_id.to_string()));
    }
    let mut out = Vec::with_capacity(schema.dim());
    for col in &schema.columns {
        match store.trait_value(subject_id, &col.trait_name, now) {
            Some(raw) => {
                let value = match col.standardize {
                    Some((mean, scale)) => (raw - mean) / scale,
                    None => raw,
                };
                out.push(S::cast(value));
                if col.missing_indicator {
                    out.push(S::zero());
                }
            }
            None => {
                out.push(S::zero());
                if col.missing_indicator {
                    out.push(S::one());
                }
            }
        }
    }
    debug_assert_eq!(out.len(), schema.dim());
    Ok(out)
}

use std::fmt;
use std::io::Write;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    GrainDisappearance,
    GrainSplit,
    LineSplit,
    JunctionCreation,
    JunctionDecomposition,
    Nucleation,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::GrainDisappearance => "grain_disappearance",
            EventKind::GrainSplit => "grain_split",
            EventKind::LineSplit => "line_split",
            EventKind::JunctionCreation => "junction_creation",
            EventKind::JunctionDecomposition => "junction_decomposition",
            EventKind::Nucleation => "nucleation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            EventKind::GrainDisappearance,
            EventKind::GrainSplit,
            EventKind::LineSplit,
            EventKind::JunctionCreation,
            EventKind::JunctionDecomposition,
            EventKind::Nucleation,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One topological event. Entity ids depend on the kind:
/// disappearance `[surface]`, split `[parent, child]`, nucleation `[surface, center node]`,
/// junction events and line splits list node ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub ids: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, time: f64, kind: EventKind, ids: Vec<u32>) {
        self.events.push(Event { time, kind, ids });
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// Change in grain count implied by the log.
    pub fn grain_balance(&self) -> i64 {
        self.events
            .iter()
            .map(|e| match e.kind {
                EventKind::GrainDisappearance => -1,
                EventKind::GrainSplit | EventKind::Nucleation => 1,
                _ => 0,
            })
            .sum()
    }

    /// CSV rows `time,kind,ids` with ids joined by spaces.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "time,kind,entity_ids")?;
        }
        for e in &self.events {
            let ids: Vec<String> = e.ids.iter().map(|i| i.to_string()).collect();
            writeln!(w, "{:e},{},{}", e.time, e.kind, ids.join(" "))?;
        }
        Ok(())
    }
}

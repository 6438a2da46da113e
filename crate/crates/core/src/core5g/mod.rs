//! Modeled 5G core: network functions, UE state, the normative signaling flow
//! tables and the simulation driver that plays them over the topology.
//!
//! A flow table is an ordered list of single-hop legs. Each leg is sent when
//! the previous one has been delivered and processed by its receiving NF, so
//! with zero processing delay a procedure lasts exactly the sum of its leg
//! latencies.

mod deploy;
mod network;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;
use crate::placement::PlacementError;

pub use deploy::{core_pods, instantiate_core, PlacementRule};
pub use network::{run_data_transfer, run_pdu_establishment, run_registration};
pub use network::{
    ChunkKpi, CoreConfig, CoreNetwork, CoreSetup, E2eRecord, RunOutput, Step, TransferSpec,
    DEFAULT_CHUNK_BYTES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid flow table for {procedure:?}: {reason}")]
    InvalidFlow {
        procedure: Procedure,
        reason: String,
    },
    #[error("UE {ue} is {state:?}, expected {expected:?}")]
    InvalidState {
        ue: u32,
        state: UeState,
        expected: UeState,
    },
    #[error("network function set: {0}")]
    NfSet(String),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NfKind {
    Amf,
    Smf,
    Upf,
    /// AUSF, UDM, PCF and NRF bundled into one datacenter endpoint.
    Dccore,
    Gnb,
    Ue,
    Dn,
}

impl NfKind {
    /// Network functions deployed as pods, in scheduling order.
    pub const DEPLOYED: [NfKind; 6] = [
        NfKind::Amf,
        NfKind::Smf,
        NfKind::Upf,
        NfKind::Dccore,
        NfKind::Gnb,
        NfKind::Dn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NfKind::Amf => "amf",
            NfKind::Smf => "smf",
            NfKind::Upf => "upf",
            NfKind::Dccore => "dccore",
            NfKind::Gnb => "gnb",
            NfKind::Ue => "ue",
            NfKind::Dn => "dn",
        }
    }

    /// Pod name of the single instance of this NF.
    pub fn pod_name(self) -> &'static str {
        self.as_str()
    }
}

impl fmt::Display for NfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn ue_pod(ue: u32) -> String {
    format!("ue-{ue}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Registration,
    PduEstablishment,
    DataTransfer,
}

impl Procedure {
    pub fn as_str(self) -> &'static str {
        match self {
            Procedure::Registration => "registration",
            Procedure::PduEstablishment => "pdu_establishment",
            Procedure::DataTransfer => "data_transfer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkClass {
    Radio,
    N2,
    N3,
    N4,
    N6,
    Local,
    AmfDc,
    SmfDc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Leg {
    pub from: NfKind,
    pub to: NfKind,
    pub class: LinkClass,
    #[serde(default)]
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowTable {
    pub procedure: Procedure,
    pub legs: Vec<Leg>,
}

impl FlowTable {
    /// Legs must be nonempty, start at the UE and chain receiver to sender.
    pub fn validate(&self) -> Result<(), CoreError> {
        let err = |reason: String| CoreError::InvalidFlow {
            procedure: self.procedure,
            reason,
        };
        let first = self.legs.first().ok_or_else(|| err("no legs".into()))?;
        if first.from != NfKind::Ue {
            return Err(err("first leg must leave the UE".into()));
        }
        for (i, pair) in self.legs.windows(2).enumerate() {
            if pair[0].to != pair[1].from {
                return Err(err(format!(
                    "leg {} ends at {} but leg {} starts at {}",
                    i,
                    pair[0].to,
                    i + 1,
                    pair[1].from
                )));
            }
        }
        if let Some(leg) = self.legs.iter().find(|l| l.from == l.to) {
            return Err(err(format!("leg {}->{} does not move", leg.from, leg.to)));
        }
        Ok(())
    }

    pub fn count(&self, class: LinkClass) -> usize {
        self.legs.iter().filter(|l| l.class == class).count()
    }

    pub fn with_bytes(mut self, bytes: u64) -> Self {
        for leg in &mut self.legs {
            leg.bytes = bytes;
        }
        self
    }
}

fn leg(from: NfKind, to: NfKind, class: LinkClass) -> Leg {
    Leg {
        from,
        to,
        class,
        bytes: 0,
    }
}

/// Normative registration exchange: 5 RADIO, 5 N2 and 8 AMF<->DC legs.
pub fn registration_flow() -> FlowTable {
    use LinkClass::*;
    use NfKind::*;
    let mut legs = vec![leg(Ue, Gnb, Radio), leg(Gnb, Amf, N2)];
    // authentication: two round trips towards the datacenter core
    for _ in 0..2 {
        legs.push(leg(Amf, Dccore, AmfDc));
        legs.push(leg(Dccore, Amf, AmfDc));
    }
    // challenge and response
    legs.extend([
        leg(Amf, Gnb, N2),
        leg(Gnb, Ue, Radio),
        leg(Ue, Gnb, Radio),
        leg(Gnb, Amf, N2),
    ]);
    // subscription data: two more round trips
    for _ in 0..2 {
        legs.push(leg(Amf, Dccore, AmfDc));
        legs.push(leg(Dccore, Amf, AmfDc));
    }
    // accept and complete
    legs.extend([
        leg(Amf, Gnb, N2),
        leg(Gnb, Ue, Radio),
        leg(Ue, Gnb, Radio),
        leg(Gnb, Amf, N2),
    ]);
    FlowTable {
        procedure: Procedure::Registration,
        legs,
    }
}

/// Normative PDU session establishment: 3 RADIO, 3 N2, 3 LOCAL, 2 SMF<->DC
/// and 4 N4 legs.
pub fn pdu_establishment_flow() -> FlowTable {
    use LinkClass::*;
    use NfKind::*;
    FlowTable {
        procedure: Procedure::PduEstablishment,
        legs: vec![
            leg(Ue, Gnb, Radio),
            leg(Gnb, Amf, N2),
            leg(Amf, Smf, Local),
            leg(Smf, Dccore, SmfDc),
            leg(Dccore, Smf, SmfDc),
            leg(Smf, Upf, N4),
            leg(Upf, Smf, N4),
            leg(Smf, Amf, Local),
            leg(Amf, Gnb, N2),
            leg(Gnb, Ue, Radio),
            leg(Ue, Gnb, Radio),
            leg(Gnb, Amf, N2),
            leg(Amf, Smf, Local),
            leg(Smf, Upf, N4),
            leg(Upf, Smf, N4),
        ],
    }
}

/// User-plane path from UE to data network; reversed for downlink.
pub fn data_path_flow() -> FlowTable {
    use LinkClass::*;
    use NfKind::*;
    FlowTable {
        procedure: Procedure::DataTransfer,
        legs: vec![leg(Ue, Gnb, Radio), leg(Gnb, Upf, N3), leg(Upf, Dn, N6)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeState {
    Deregistered,
    Registering,
    Registered,
    SessionActive,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeContext {
    pub ue_id: u32,
    pub state: UeState,
    pub attempts_used: u32,
    pub gnb: String,
}

impl UeContext {
    pub fn new(ue_id: u32, state: UeState) -> Self {
        Self {
            ue_id,
            state,
            attempts_used: 0,
            gnb: NfKind::Gnb.pod_name().to_string(),
        }
    }

    /// Applies a transition; illegal transitions are rejected.
    pub fn transition(&mut self, next: UeState) -> bool {
        use UeState::*;
        let ok = matches!(
            (self.state, next),
            (Deregistered, Registering)
                | (Registering, Registering)
                | (Registering, Registered)
                | (Registering, Failed)
                | (Registered, SessionActive)
        );
        if ok {
            self.state = next;
        }
        ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Timeout,
    /// Still in flight when the run horizon was reached.
    Abandoned,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Timeout => "timeout",
            Outcome::Abandoned => "abandoned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureResult {
    pub ue_id: u32,
    pub procedure: Procedure,
    pub start: f64,
    pub end: f64,
    pub outcome: Outcome,
    pub attempts: u32,
    pub messages_sent: u64,
}

impl ProcedureResult {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

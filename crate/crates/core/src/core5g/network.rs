use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{
    data_path_flow, pdu_establishment_flow, registration_flow, ue_pod, CoreError, FlowTable,
    NfKind, Outcome, Procedure, ProcedureResult, UeContext, UeState,
};
use crate::engine::{Engine, EventBody, Message, TimerId, TimerPurpose, TraceRecord, Transit};
use crate::placement::Assignment;
use crate::topology::Topology;
use crate::workload::Direction;

pub const DEFAULT_CHUNK_BYTES: u64 = 1500;

#[derive(Debug, Clone, PartialEq)]
pub struct CoreConfig {
    /// Per-message service time at each NF; NFs are FIFO single servers.
    pub processing_ms: BTreeMap<NfKind, f64>,
    pub registration_timer_ms: f64,
    pub session_timer_ms: f64,
    pub max_retries: u32,
    pub chunk_bytes: u64,
    pub registration: FlowTable,
    pub pdu_establishment: FlowTable,
    pub data_path: FlowTable,
}

impl Default for CoreConfig {
    fn default() -> Self {
        Self {
            processing_ms: BTreeMap::new(),
            registration_timer_ms: 1000.0,
            session_timer_ms: 1000.0,
            max_retries: 2,
            chunk_bytes: DEFAULT_CHUNK_BYTES,
            registration: registration_flow(),
            pdu_establishment: pdu_establishment_flow(),
            data_path: data_path_flow(),
        }
    }
}

impl CoreConfig {
    fn flow(&self, p: Procedure) -> &FlowTable {
        match p {
            Procedure::Registration => &self.registration,
            Procedure::PduEstablishment => &self.pdu_establishment,
            Procedure::DataTransfer => &self.data_path,
        }
    }

    fn validate(&self) -> Result<(), CoreError> {
        for p in [
            Procedure::Registration,
            Procedure::PduEstablishment,
            Procedure::DataTransfer,
        ] {
            let f = self.flow(p);
            if f.procedure != p {
                return Err(CoreError::InvalidFlow {
                    procedure: p,
                    reason: format!("table is declared for {:?}", f.procedure),
                });
            }
            f.validate()?;
        }
        let path = &self.data_path.legs;
        if path.last().map(|l| l.to) != Some(NfKind::Dn) {
            return Err(CoreError::InvalidFlow {
                procedure: Procedure::DataTransfer,
                reason: "data path must end at the data network".into(),
            });
        }
        if self.chunk_bytes == 0 {
            return Err(CoreError::InvalidFlow {
                procedure: Procedure::DataTransfer,
                reason: "chunk size must be > 0".into(),
            });
        }
        Ok(())
    }
}

/// Everything a simulation instance needs besides its workload.
#[derive(Debug, Clone)]
pub struct CoreSetup {
    pub topology: Topology,
    pub assignment: Assignment,
    pub ue_node: String,
    pub config: CoreConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSpec {
    pub payload_bytes: u64,
    pub direction: Direction,
    pub server_proc_ms: f64,
    pub response_bytes: u64,
    /// Paces downlink chunks; `None` sends them back to back.
    pub stream_rate_bps: Option<f64>,
    /// Emit one latency KPI per downlink chunk instead of one per UE.
    pub per_chunk_kpi: bool,
}

impl TransferSpec {
    pub fn new(payload_bytes: u64, direction: Direction, server_proc_ms: f64) -> Self {
        Self {
            payload_bytes,
            direction,
            server_proc_ms,
            response_bytes: if direction == Direction::Updown {
                DEFAULT_CHUNK_BYTES
            } else {
                0
            },
            stream_rate_bps: None,
            per_chunk_kpi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Register,
    Establish,
    Transfer(TransferSpec),
}

/// Whole-workload span of one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct E2eRecord {
    pub ue_id: u32,
    pub start: f64,
    pub end: f64,
    pub outcome: Outcome,
    pub messages_sent: u64,
}

/// Server-to-UE latency of one downlink chunk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkKpi {
    pub ue_id: u32,
    pub index: u32,
    pub start: f64,
    pub end: f64,
    pub hops: u32,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub results: Vec<ProcedureResult>,
    pub end_to_end: Vec<E2eRecord>,
    pub chunks: Vec<ChunkKpi>,
    pub ues: Vec<UeContext>,
    pub trace: Option<Vec<TraceRecord>>,
    pub final_clock: f64,
}

impl RunOutput {
    pub fn result(&self, ue: u32, procedure: Procedure) -> Option<&ProcedureResult> {
        self.results
            .iter()
            .find(|r| r.ue_id == ue && r.procedure == procedure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Up,
    Down,
    Response,
}

impl Stage {
    fn as_str(self) -> &'static str {
        match self {
            Stage::Up => "up",
            Stage::Down => "down",
            Stage::Response => "resp",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Signal {
    Begin {
        ue: u32,
    },
    Leg {
        ue: u32,
        procedure: Procedure,
        attempt: u32,
        index: usize,
    },
    Chunk {
        ue: u32,
        stage: Stage,
        hop: usize,
        index: u32,
        bytes: u64,
    },
    Release {
        ue: u32,
        index: u32,
    },
    Respond {
        ue: u32,
    },
}

#[derive(Debug, Clone, Copy)]
struct Active {
    procedure: Procedure,
    attempt: u32,
    timer: TimerId,
    deadline: f64,
}

#[derive(Debug)]
struct Transfer {
    spec: TransferSpec,
    start: f64,
    expected: u32,
    received: u32,
    origins: Vec<f64>,
}

#[derive(Debug)]
struct UeRuntime {
    ctx: UeContext,
    pod: String,
    plan: VecDeque<Step>,
    active: Option<Active>,
    transfer: Option<Transfer>,
    e2e_start: Option<f64>,
    e2e_done: Option<(f64, Outcome)>,
    per_chunk: bool,
}

#[derive(Debug, Default)]
struct ProcRun {
    start: f64,
    end: Option<f64>,
    outcome: Option<Outcome>,
    attempts: u32,
    messages: u64,
}

fn chunk_count(payload: u64, chunk: u64) -> u32 {
    payload.div_ceil(chunk).max(1) as u32
}

fn chunk_size(payload: u64, chunk: u64, index: u32) -> u64 {
    payload.saturating_sub(u64::from(index) * chunk).min(chunk)
}

struct CoreState {
    config: CoreConfig,
    ues: HashMap<u32, UeRuntime>,
    busy_until: HashMap<NfKind, f64>,
    timers: HashMap<TimerId, (u32, Procedure, u32)>,
    runs: BTreeMap<(u32, Procedure), ProcRun>,
    chunks: Vec<ChunkKpi>,
}

/// One simulation instance: the engine plus NF and UE state. Single threaded.
pub struct CoreNetwork {
    engine: Engine<Signal>,
    ue_node: String,
    state: CoreState,
}

impl CoreNetwork {
    pub fn new(setup: &CoreSetup, trace: bool) -> Result<Self, CoreError> {
        setup.config.validate()?;
        let locations: Vec<(&str, &str)> = setup.assignment.iter().collect();
        let mut engine = Engine::new(setup.topology.clone(), locations);
        if trace {
            engine = engine.with_trace();
        }
        let net = Self {
            engine,
            ue_node: setup.ue_node.clone(),
            state: CoreState {
                config: setup.config.clone(),
                ues: HashMap::new(),
                busy_until: HashMap::new(),
                timers: HashMap::new(),
                runs: BTreeMap::new(),
                chunks: Vec::new(),
            },
        };
        net.check_routes(&setup.assignment)?;
        Ok(net)
    }

    /// Every hop any flow can take must exist before the run starts; the
    /// event handlers rely on it.
    fn check_routes(&self, assignment: &Assignment) -> Result<(), CoreError> {
        let topo = self.engine.topology();
        let node_of = |nf: NfKind| -> Result<&str, CoreError> {
            if nf == NfKind::Ue {
                return Ok(self.ue_node.as_str());
            }
            assignment
                .node_of(nf.pod_name())
                .ok_or_else(|| CoreError::NfSet(format!("{nf} is not placed")))
        };
        if topo.node(&self.ue_node).is_none() {
            return Err(CoreError::NfSet(format!(
                "UE node `{}` does not exist",
                self.ue_node
            )));
        }
        let c = &self.state.config;
        for leg in c
            .registration
            .legs
            .iter()
            .chain(&c.pdu_establishment.legs)
            .chain(&c.data_path.legs)
        {
            let (a, b) = (node_of(leg.from)?, node_of(leg.to)?);
            for (s, d) in [(a, b), (b, a)] {
                topo.effective_latency(s, d)
                    .map_err(|e| crate::engine::EngineError::NoRoute {
                        src: leg.from.to_string(),
                        dst: leg.to.to_string(),
                        reason: e.to_string(),
                    })?;
            }
        }
        Ok(())
    }

    /// Adds a UE that starts working through `steps` at `start_at`.
    pub fn add_ue(
        &mut self,
        ctx: UeContext,
        steps: Vec<Step>,
        start_at: f64,
    ) -> Result<(), CoreError> {
        let id = ctx.ue_id;
        let pod = ue_pod(id);
        if self.state.ues.contains_key(&id) || !self.engine.attach(&pod, &self.ue_node) {
            return Err(CoreError::NfSet(format!("cannot attach UE {id}")));
        }
        let per_chunk = steps
            .iter()
            .any(|s| matches!(s, Step::Transfer(t) if t.per_chunk_kpi));
        self.state.ues.insert(
            id,
            UeRuntime {
                ctx,
                pod,
                plan: steps.into(),
                active: None,
                transfer: None,
                e2e_start: None,
                e2e_done: None,
                per_chunk,
            },
        );
        self.engine
            .schedule_workload(start_at, Signal::Begin { ue: id });
        Ok(())
    }

    pub fn run(mut self, until: Option<f64>) -> RunOutput {
        let state = &mut self.state;
        let clock = self
            .engine
            .run(until, |eng, ev| state.handle(eng, ev.time, ev.body));
        let trace = self.engine.take_trace();
        self.state.finish(clock, trace)
    }
}

impl CoreState {
    fn handle(&mut self, eng: &mut Engine<Signal>, now: f64, body: EventBody<Signal>) {
        match body {
            EventBody::WorkloadStart(Signal::Begin { ue }) => {
                let rt = self.ues.get_mut(&ue).expect("known UE");
                rt.e2e_start = Some(now);
                self.advance(eng, ue, now);
            }
            EventBody::WorkloadStart(Signal::Release { ue, index }) => self.release(eng, ue, index),
            EventBody::WorkloadStart(Signal::Respond { ue }) => self.respond(eng, ue),
            EventBody::TimerFire(t) => self.on_timer(eng, t.id, now),
            EventBody::Delivery {
                payload:
                    Signal::Leg {
                        ue,
                        procedure,
                        attempt,
                        index,
                    },
                ..
            } => self.on_leg(eng, ue, procedure, attempt, index, now),
            EventBody::Delivery {
                payload:
                    Signal::Chunk {
                        ue,
                        stage,
                        hop,
                        index,
                        bytes,
                    },
                ..
            } => self.on_chunk(eng, ue, stage, hop, index, bytes, now),
            other => unreachable!("unexpected event {other:?}"),
        }
    }

    /// FIFO single-server processing at `nf`; returns the completion time.
    fn process(&mut self, nf: NfKind, arrival: f64) -> f64 {
        let p = self.config.processing_ms.get(&nf).copied().unwrap_or(0.0);
        if p <= 0.0 {
            return arrival;
        }
        let busy = self.busy_until.entry(nf).or_insert(f64::NEG_INFINITY);
        let done = arrival.max(*busy) + p;
        *busy = done;
        done
    }

    fn pod(&self, ue: u32, nf: NfKind) -> String {
        if nf == NfKind::Ue {
            self.ues[&ue].pod.clone()
        } else {
            nf.pod_name().to_string()
        }
    }

    fn advance(&mut self, eng: &mut Engine<Signal>, ue: u32, at: f64) {
        let rt = self.ues.get_mut(&ue).expect("known UE");
        let Some(step) = rt.plan.pop_front() else {
            if rt.e2e_done.is_none() {
                rt.e2e_done = Some((at, Outcome::Success));
            }
            return;
        };
        match step {
            Step::Register => {
                let moved = rt.ctx.transition(UeState::Registering);
                debug_assert!(moved, "UE {ue} cannot register from {:?}", rt.ctx.state);
                self.start_procedure(eng, ue, Procedure::Registration, at);
            }
            Step::Establish => {
                debug_assert_eq!(rt.ctx.state, UeState::Registered);
                self.start_procedure(eng, ue, Procedure::PduEstablishment, at);
            }
            Step::Transfer(spec) => {
                debug_assert_eq!(rt.ctx.state, UeState::SessionActive);
                self.start_transfer(eng, ue, spec, at);
            }
        }
    }

    fn start_procedure(
        &mut self,
        eng: &mut Engine<Signal>,
        ue: u32,
        procedure: Procedure,
        at: f64,
    ) {
        self.runs.insert(
            (ue, procedure),
            ProcRun {
                start: at,
                ..Default::default()
            },
        );
        self.start_attempt(eng, ue, procedure, 1, at);
    }

    fn start_attempt(
        &mut self,
        eng: &mut Engine<Signal>,
        ue: u32,
        procedure: Procedure,
        attempt: u32,
        at: f64,
    ) {
        let (timer_ms, purpose) = match procedure {
            Procedure::Registration => (
                self.config.registration_timer_ms,
                TimerPurpose::RegistrationTimer,
            ),
            _ => (self.config.session_timer_ms, TimerPurpose::SessionTimer),
        };
        let rt = self.ues.get_mut(&ue).expect("known UE");
        let deadline = at + timer_ms;
        let timer = eng.set_timer_at(&rt.pod, deadline, purpose);
        rt.active = Some(Active {
            procedure,
            attempt,
            timer,
            deadline,
        });
        if procedure == Procedure::Registration {
            rt.ctx.attempts_used = attempt;
        }
        self.timers.insert(timer, (ue, procedure, attempt));
        self.runs
            .get_mut(&(ue, procedure))
            .expect("run started")
            .attempts = attempt;
        self.send_leg(eng, ue, procedure, attempt, 0, at);
    }

    fn send_leg(
        &mut self,
        eng: &mut Engine<Signal>,
        ue: u32,
        procedure: Procedure,
        attempt: u32,
        index: usize,
        at: f64,
    ) {
        let leg = self.config.flow(procedure).legs[index];
        let msg = Message {
            src_pod: self.pod(ue, leg.from),
            dst_pod: self.pod(ue, leg.to),
            size: leg.bytes,
            tag: format!(
                "ue{ue}/{}/a{attempt}/{index}/{:?}",
                procedure.as_str(),
                leg.class
            ),
        };
        eng.send(
            msg,
            at,
            Signal::Leg {
                ue,
                procedure,
                attempt,
                index,
            },
        )
        .expect("routes checked at setup");
        if let Some(run) = self.runs.get_mut(&(ue, procedure)) {
            run.messages += 1;
        }
    }

    fn on_leg(
        &mut self,
        eng: &mut Engine<Signal>,
        ue: u32,
        procedure: Procedure,
        attempt: u32,
        index: usize,
        now: f64,
    ) {
        let flow = self.config.flow(procedure);
        let leg = flow.legs[index];
        let last = index + 1 == flow.legs.len();
        let done = self.process(leg.to, now);
        if !last {
            // stale attempts keep running so the signaling load stays visible
            self.send_leg(eng, ue, procedure, attempt, index + 1, done);
            return;
        }
        let rt = self.ues.get_mut(&ue).expect("known UE");
        let Some(active) = rt.active else { return };
        if active.procedure != procedure || active.attempt != attempt || done >= active.deadline {
            return;
        }
        eng.cancel_timer(active.timer);
        self.timers.remove(&active.timer);
        rt.active = None;
        let next = match procedure {
            Procedure::Registration => UeState::Registered,
            _ => UeState::SessionActive,
        };
        rt.ctx.transition(next);
        let run = self.runs.get_mut(&(ue, procedure)).expect("run started");
        run.end = Some(done);
        run.outcome = Some(Outcome::Success);
        self.advance(eng, ue, done);
    }

    fn on_timer(&mut self, eng: &mut Engine<Signal>, id: TimerId, now: f64) {
        let Some((ue, procedure, attempt)) = self.timers.remove(&id) else {
            return;
        };
        let rt = self.ues.get_mut(&ue).expect("known UE");
        match rt.active {
            Some(a) if a.procedure == procedure && a.attempt == attempt => {}
            _ => return,
        }
        if attempt < 1 + self.config.max_retries {
            self.start_attempt(eng, ue, procedure, attempt + 1, now);
            return;
        }
        rt.active = None;
        if procedure == Procedure::Registration {
            rt.ctx.transition(UeState::Failed);
        }
        rt.plan.clear();
        rt.e2e_done = Some((now, Outcome::Timeout));
        let run = self.runs.get_mut(&(ue, procedure)).expect("run started");
        run.end = Some(now);
        run.outcome = Some(Outcome::Timeout);
    }

    fn hop_nfs(&self, stage: Stage, hop: usize) -> (NfKind, NfKind) {
        let legs = &self.config.data_path.legs;
        match stage {
            Stage::Up => (legs[hop].from, legs[hop].to),
            Stage::Down | Stage::Response => {
                let l = legs[legs.len() - 1 - hop];
                (l.to, l.from)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn send_chunk(
        &mut self,
        eng: &mut Engine<Signal>,
        ue: u32,
        stage: Stage,
        hop: usize,
        index: u32,
        bytes: u64,
        at: f64,
    ) -> Transit {
        let (from, to) = self.hop_nfs(stage, hop);
        let msg = Message {
            src_pod: self.pod(ue, from),
            dst_pod: self.pod(ue, to),
            size: bytes,
            tag: format!("ue{ue}/data/{}/{index}/h{hop}", stage.as_str()),
        };
        let transit = eng
            .send(
                msg,
                at,
                Signal::Chunk {
                    ue,
                    stage,
                    hop,
                    index,
                    bytes,
                },
            )
            .expect("routes checked at setup");
        if let Some(run) = self.runs.get_mut(&(ue, Procedure::DataTransfer)) {
            run.messages += 1;
        }
        transit
    }

    fn start_transfer(&mut self, eng: &mut Engine<Signal>, ue: u32, spec: TransferSpec, at: f64) {
        self.runs.insert(
            (ue, Procedure::DataTransfer),
            ProcRun {
                start: at,
                attempts: 1,
                ..Default::default()
            },
        );
        let chunk = self.config.chunk_bytes;
        let n = chunk_count(spec.payload_bytes, chunk);
        let origins = if spec.per_chunk_kpi {
            vec![f64::NAN; n as usize]
        } else {
            Vec::new()
        };
        let direction = spec.direction;
        let paced = spec.stream_rate_bps.is_some();
        let payload = spec.payload_bytes;
        self.ues.get_mut(&ue).expect("known UE").transfer = Some(Transfer {
            spec,
            start: at,
            expected: n,
            received: 0,
            origins,
        });
        match direction {
            Direction::Up | Direction::Updown => {
                for i in 0..n {
                    self.send_chunk(eng, ue, Stage::Up, 0, i, chunk_size(payload, chunk, i), at);
                }
            }
            Direction::Down if paced => {
                eng.schedule_workload(at, Signal::Release { ue, index: 0 });
            }
            Direction::Down => {
                for i in 0..n {
                    self.release_one(eng, ue, i, at);
                }
            }
        }
    }

    fn release_one(&mut self, eng: &mut Engine<Signal>, ue: u32, index: u32, at: f64) {
        let chunk = self.config.chunk_bytes;
        let payload = self.ues[&ue]
            .transfer
            .as_ref()
            .expect("transfer")
            .spec
            .payload_bytes;
        let transit = self.send_chunk(
            eng,
            ue,
            Stage::Down,
            0,
            index,
            chunk_size(payload, chunk, index),
            at,
        );
        let t = self
            .ues
            .get_mut(&ue)
            .and_then(|rt| rt.transfer.as_mut())
            .expect("transfer");
        if let Some(slot) = t.origins.get_mut(index as usize) {
            *slot = transit.depart_ms;
        }
    }

    /// Paced downlink: chunk `index` leaves the server at
    /// `start + bytes_before(index) * 8 / rate`.
    fn release(&mut self, eng: &mut Engine<Signal>, ue: u32, index: u32) {
        let now = eng.now();
        self.release_one(eng, ue, index, now);
        let t = self.ues[&ue].transfer.as_ref().expect("transfer");
        let next = index + 1;
        if next < t.expected {
            let rate = t.spec.stream_rate_bps.expect("paced stream");
            let offset = u64::from(next) * self.config.chunk_bytes;
            let at = t.start + offset as f64 * 8.0 / rate * 1000.0;
            eng.schedule_workload(at, Signal::Release { ue, index: next });
        }
    }

    fn respond(&mut self, eng: &mut Engine<Signal>, ue: u32) {
        let now = eng.now();
        let chunk = self.config.chunk_bytes;
        let t = self
            .ues
            .get_mut(&ue)
            .and_then(|rt| rt.transfer.as_mut())
            .expect("transfer");
        let bytes = t.spec.response_bytes;
        let n = chunk_count(bytes, chunk);
        t.expected = n;
        t.received = 0;
        for i in 0..n {
            self.send_chunk(
                eng,
                ue,
                Stage::Response,
                0,
                i,
                chunk_size(bytes, chunk, i),
                now,
            );
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_chunk(
        &mut self,
        eng: &mut Engine<Signal>,
        ue: u32,
        stage: Stage,
        hop: usize,
        index: u32,
        bytes: u64,
        now: f64,
    ) {
        let (_, to) = self.hop_nfs(stage, hop);
        let done = self.process(to, now);
        if hop + 1 < self.config.data_path.legs.len() {
            self.send_chunk(eng, ue, stage, hop + 1, index, bytes, done);
            return;
        }
        let hops = self.config.data_path.legs.len() as u32;
        let rt = self.ues.get_mut(&ue).expect("known UE");
        let t = rt.transfer.as_mut().expect("transfer in flight");
        if stage == Stage::Down && t.spec.per_chunk_kpi {
            self.chunks.push(ChunkKpi {
                ue_id: ue,
                index,
                start: t.origins[index as usize],
                end: done,
                hops,
            });
        }
        t.received += 1;
        if t.received < t.expected {
            return;
        }
        if stage == Stage::Up && t.spec.direction == Direction::Updown {
            let at = done + t.spec.server_proc_ms;
            eng.schedule_workload(at, Signal::Respond { ue });
            return;
        }
        rt.transfer = None;
        let run = self
            .runs
            .get_mut(&(ue, Procedure::DataTransfer))
            .expect("run started");
        run.end = Some(done);
        run.outcome = Some(Outcome::Success);
        self.advance(eng, ue, done);
    }

    fn finish(self, clock: f64, trace: Option<Vec<TraceRecord>>) -> RunOutput {
        let mut ue_ids: Vec<u32> = self.ues.keys().copied().collect();
        ue_ids.sort_unstable();

        let results: Vec<ProcedureResult> = self
            .runs
            .iter()
            .map(|(&(ue_id, procedure), run)| ProcedureResult {
                ue_id,
                procedure,
                start: run.start,
                end: run.end.unwrap_or(clock.max(run.start)),
                outcome: run.outcome.unwrap_or(Outcome::Abandoned),
                attempts: run.attempts,
                messages_sent: run.messages,
            })
            .collect();

        let mut end_to_end = Vec::new();
        let mut ues = Vec::new();
        for id in ue_ids {
            let rt = &self.ues[&id];
            ues.push(rt.ctx.clone());
            if rt.per_chunk {
                continue;
            }
            let Some(start) = rt.e2e_start else { continue };
            let (end, outcome) = rt
                .e2e_done
                .unwrap_or((clock.max(start), Outcome::Abandoned));
            let messages_sent = results
                .iter()
                .filter(|r| r.ue_id == id)
                .map(|r| r.messages_sent)
                .sum();
            end_to_end.push(E2eRecord {
                ue_id: id,
                start,
                end,
                outcome,
                messages_sent,
            });
        }

        let mut chunks = self.chunks;
        chunks.sort_by_key(|c| (c.ue_id, c.index));

        RunOutput {
            results,
            end_to_end,
            chunks,
            ues,
            trace,
            final_clock: clock,
        }
    }
}

fn run_single(
    setup: &CoreSetup,
    ue: &mut UeContext,
    step: Step,
    procedure: Procedure,
) -> Result<ProcedureResult, CoreError> {
    let mut net = CoreNetwork::new(setup, false)?;
    net.add_ue(ue.clone(), vec![step], 0.0)?;
    let out = net.run(None);
    if let Some(ctx) = out.ues.iter().find(|c| c.ue_id == ue.ue_id) {
        *ue = ctx.clone();
    }
    Ok(out
        .result(ue.ue_id, procedure)
        .cloned()
        .expect("procedure was started"))
}

fn require(ue: &UeContext, expected: UeState) -> Result<(), CoreError> {
    if ue.state == expected {
        Ok(())
    } else {
        Err(CoreError::InvalidState {
            ue: ue.ue_id,
            state: ue.state,
            expected,
        })
    }
}

/// Registers a single UE on an otherwise idle core, starting at t = 0.
pub fn run_registration(
    setup: &CoreSetup,
    ue: &mut UeContext,
) -> Result<ProcedureResult, CoreError> {
    require(ue, UeState::Deregistered)?;
    run_single(setup, ue, Step::Register, Procedure::Registration)
}

pub fn run_pdu_establishment(
    setup: &CoreSetup,
    ue: &mut UeContext,
) -> Result<ProcedureResult, CoreError> {
    require(ue, UeState::Registered)?;
    run_single(setup, ue, Step::Establish, Procedure::PduEstablishment)
}

pub fn run_data_transfer(
    setup: &CoreSetup,
    ue: &mut UeContext,
    payload_bytes: u64,
    direction: Direction,
    server_proc_ms: f64,
) -> Result<ProcedureResult, CoreError> {
    require(ue, UeState::SessionActive)?;
    let spec = TransferSpec::new(payload_bytes, direction, server_proc_ms);
    run_single(setup, ue, Step::Transfer(spec), Procedure::DataTransfer)
}

//! Deterministic discrete-event core: virtual clock, (time, seq) ordered event
//! queue, single-hop message delivery with per-egress FIFO serialization, and
//! timers.
//!
//! The engine knows nothing about the application. Each event carries an
//! opaque payload `P` that is handed back to the handler passed to
//! [`Engine::run`]. Randomness never enters here.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{serialization_ms, Topology, TopologyError};

pub type TimerId = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("no route from pod `{src}` to pod `{dst}`: {reason}")]
    NoRoute {
        src: String,
        dst: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    MessageDelivery,
    TimerFire,
    WorkloadStart,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub src_pod: String,
    pub dst_pod: String,
    pub size: u64,
    pub tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerPurpose {
    RegistrationTimer,
    SessionTimer,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timer {
    pub id: TimerId,
    pub owner: String,
    pub deadline: f64,
    pub purpose: TimerPurpose,
}

/// Timing of one hop as computed at send time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transit {
    pub sent_ms: f64,
    pub depart_ms: f64,
    pub arrive_ms: f64,
    pub latency_ms: f64,
    pub serialization_ms: f64,
}

impl Transit {
    pub fn fifo_wait_ms(&self) -> f64 {
        self.depart_ms - self.sent_ms
    }
}

#[derive(Debug, Clone)]
pub enum EventBody<P> {
    Delivery {
        msg: Message,
        transit: Transit,
        payload: P,
    },
    TimerFire(Timer),
    WorkloadStart(P),
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: f64,
    pub seq: u64,
    pub body: EventBody<P>,
}

impl<P> Event<P> {
    pub fn kind(&self) -> EventKind {
        match self.body {
            EventBody::Delivery { .. } => EventKind::MessageDelivery,
            EventBody::TimerFire(_) => EventKind::TimerFire,
            EventBody::WorkloadStart(_) => EventKind::WorkloadStart,
        }
    }
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<P> Eq for Queued<P> {}
impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: reverse so the earliest (time, seq) pops first
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    MessageDelivery,
    TimerFire,
    WorkloadStart,
    /// Cancellation of a timer id that was never issued.
    CancelUnknown,
}

/// One line of `trace.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_ms: f64,
    pub seq: u64,
    pub kind: TraceKind,
    pub src: String,
    pub dst: String,
    pub size: u64,
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sent_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depart_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst_node: Option<String>,
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CancelOutcome {
    Cancelled,
    /// Already fired or already cancelled.
    Inactive,
    /// Never issued; recorded in the trace.
    Unknown,
}

type HopCost = Result<(f64, Option<f64>), TopologyError>;

pub struct Engine<P> {
    topology: Topology,
    node_names: Vec<String>,
    node_ids: HashMap<String, usize>,
    pods: HashMap<String, (usize, usize)>,
    hop_cache: HashMap<(usize, usize), HopCost>,
    egress_free: HashMap<(usize, usize), f64>,
    clock: f64,
    next_seq: u64,
    queue: BinaryHeap<Queued<P>>,
    next_timer: TimerId,
    active_timers: HashSet<TimerId>,
    trace: Option<Vec<TraceRecord>>,
}

impl<P> Engine<P> {
    /// `locations` maps every pod that will send or receive to its node.
    pub fn new<'a, I>(topology: Topology, locations: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let node_names: Vec<String> = topology.nodes().iter().map(|n| n.name.clone()).collect();
        let node_ids = node_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect::<HashMap<_, _>>();
        let mut pods = HashMap::new();
        for (pod, node) in locations {
            if let Some(&nid) = node_ids.get(node) {
                let pid = pods.len();
                pods.entry(pod.to_string()).or_insert((pid, nid));
            }
        }
        Self {
            topology,
            node_names,
            node_ids,
            pods,
            hop_cache: HashMap::new(),
            egress_free: HashMap::new(),
            clock: 0.0,
            next_seq: 1,
            queue: BinaryHeap::new(),
            next_timer: 1,
            active_timers: HashSet::new(),
            trace: None,
        }
    }

    /// Places `pod` on `node`. Returns false if the node does not exist or the
    /// pod is already placed elsewhere.
    pub fn attach(&mut self, pod: &str, node: &str) -> bool {
        let Some(&nid) = self.node_ids.get(node) else {
            return false;
        };
        match self.pods.get(pod) {
            Some(&(_, existing)) => existing == nid,
            None => {
                let pid = self.pods.len();
                self.pods.insert(pod.to_string(), (pid, nid));
                true
            }
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn now(&self) -> f64 {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn node_of(&self, pod: &str) -> Option<&str> {
        self.pods
            .get(pod)
            .map(|&(_, nid)| self.node_names[nid].as_str())
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceRecord>> {
        self.trace.take()
    }

    fn push(&mut self, time: f64, body: EventBody<P>) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(Event { time, seq, body }));
        seq
    }

    fn hop_cost(&mut self, src: usize, dst: usize) -> HopCost {
        if let Some(c) = self.hop_cache.get(&(src, dst)) {
            return c.clone();
        }
        let (s, d) = (&self.node_names[src], &self.node_names[dst]);
        let cost = self
            .topology
            .effective_latency(s, d)
            .and_then(|lat| Ok((lat, self.topology.egress_rate(s, d)?)));
        self.hop_cache.insert((src, dst), cost.clone());
        cost
    }

    /// Schedules delivery of `msg` over the single hop between the pods'
    /// nodes. Serialization starts at `at` or when the previous message from
    /// the same pod to the same node has left, whichever is later.
    pub fn send(&mut self, msg: Message, at: f64, payload: P) -> Result<Transit, EngineError> {
        let no_route = |reason: String| EngineError::NoRoute {
            src: msg.src_pod.clone(),
            dst: msg.dst_pod.clone(),
            reason,
        };
        let &(src_pod, src_node) = self
            .pods
            .get(&msg.src_pod)
            .ok_or_else(|| no_route("source pod is not assigned".into()))?;
        let &(_, dst_node) = self
            .pods
            .get(&msg.dst_pod)
            .ok_or_else(|| no_route("destination pod is not assigned".into()))?;
        let (latency_ms, rate) = self
            .hop_cost(src_node, dst_node)
            .map_err(|e| no_route(e.to_string()))?;

        let sent_ms = at.max(self.clock);
        let ser = serialization_ms(msg.size, rate);
        let free = self
            .egress_free
            .entry((src_pod, dst_node))
            .or_insert(f64::NEG_INFINITY);
        let depart_ms = sent_ms.max(*free);
        *free = depart_ms + ser;
        let transit = Transit {
            sent_ms,
            depart_ms,
            arrive_ms: depart_ms + ser + latency_ms,
            latency_ms,
            serialization_ms: ser,
        };
        self.push(
            transit.arrive_ms,
            EventBody::Delivery {
                msg,
                transit,
                payload,
            },
        );
        Ok(transit)
    }

    pub fn set_timer(&mut self, owner: &str, delay: f64, purpose: TimerPurpose) -> TimerId {
        assert!(delay >= 0.0, "timer delay must be non-negative");
        let deadline = self.clock + delay;
        self.set_timer_at(owner, deadline, purpose)
    }

    /// Absolute-deadline variant; deadlines in the past are clamped to now.
    pub fn set_timer_at(&mut self, owner: &str, deadline: f64, purpose: TimerPurpose) -> TimerId {
        let id = self.next_timer;
        self.next_timer += 1;
        let deadline = deadline.max(self.clock);
        self.active_timers.insert(id);
        self.push(
            deadline,
            EventBody::TimerFire(Timer {
                id,
                owner: owner.to_string(),
                deadline,
                purpose,
            }),
        );
        id
    }

    pub fn cancel_timer(&mut self, id: TimerId) -> CancelOutcome {
        if self.active_timers.remove(&id) {
            CancelOutcome::Cancelled
        } else if id > 0 && id < self.next_timer {
            CancelOutcome::Inactive
        } else {
            let seq = self.next_seq;
            self.next_seq += 1;
            if let Some(trace) = self.trace.as_mut() {
                trace.push(TraceRecord {
                    time_ms: self.clock,
                    seq,
                    kind: TraceKind::CancelUnknown,
                    src: String::new(),
                    dst: String::new(),
                    size: 0,
                    tag: format!("timer:{id}"),
                    sent_ms: None,
                    depart_ms: None,
                    src_node: None,
                    dst_node: None,
                });
            }
            CancelOutcome::Unknown
        }
    }

    pub fn schedule_workload(&mut self, at: f64, payload: P) -> u64 {
        let at = at.max(self.clock);
        self.push(at, EventBody::WorkloadStart(payload))
    }

    fn record(&mut self, ev: &Event<P>) {
        let Some(trace) = self.trace.as_mut() else {
            return;
        };
        let rec = match &ev.body {
            EventBody::Delivery { msg, transit, .. } => {
                let node = |pod: &str| {
                    self.pods
                        .get(pod)
                        .map(|&(_, nid)| self.node_names[nid].clone())
                };
                TraceRecord {
                    time_ms: ev.time,
                    seq: ev.seq,
                    kind: TraceKind::MessageDelivery,
                    src: msg.src_pod.clone(),
                    dst: msg.dst_pod.clone(),
                    size: msg.size,
                    tag: msg.tag.clone(),
                    sent_ms: Some(transit.sent_ms),
                    depart_ms: Some(transit.depart_ms),
                    src_node: node(&msg.src_pod),
                    dst_node: node(&msg.dst_pod),
                }
            }
            EventBody::TimerFire(t) => TraceRecord {
                time_ms: ev.time,
                seq: ev.seq,
                kind: TraceKind::TimerFire,
                src: t.owner.clone(),
                dst: String::new(),
                size: 0,
                tag: format!("timer:{}:{:?}", t.id, t.purpose),
                sent_ms: None,
                depart_ms: None,
                src_node: None,
                dst_node: None,
            },
            EventBody::WorkloadStart(_) => TraceRecord {
                time_ms: ev.time,
                seq: ev.seq,
                kind: TraceKind::WorkloadStart,
                src: String::new(),
                dst: String::new(),
                size: 0,
                tag: String::new(),
                sent_ms: None,
                depart_ms: None,
                src_node: None,
                dst_node: None,
            },
        };
        trace.push(rec);
    }

    /// Processes events in (time, seq) order until the queue is empty or the
    /// next event lies beyond `until`. Returns the final clock.
    pub fn run<F>(&mut self, until: Option<f64>, mut handler: F) -> f64
    where
        F: FnMut(&mut Self, Event<P>),
    {
        while let Some(top) = self.queue.peek() {
            if let Some(limit) = until {
                if top.0.time > limit {
                    self.clock = self.clock.max(limit);
                    return self.clock;
                }
            }
            let Queued(ev) = self.queue.pop().expect("peeked");
            if let EventBody::TimerFire(t) = &ev.body {
                if !self.active_timers.remove(&t.id) {
                    continue;
                }
            }
            debug_assert!(ev.time >= self.clock, "clock went backwards");
            self.clock = ev.time;
            self.record(&ev);
            handler(self, ev);
        }
        self.clock
    }

    /// Node id lookup for callers that need to reason about egress keys.
    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.node_ids.get(name).copied()
    }
}

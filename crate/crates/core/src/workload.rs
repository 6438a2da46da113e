//! Use-case workloads (AR, IIoT, MIoT) and their seeded arrival schedules.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseCaseKind {
    Ar,
    Iiot,
    Miot,
}

impl UseCaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UseCaseKind::Ar => "ar",
            UseCaseKind::Iiot => "iiot",
            UseCaseKind::Miot => "miot",
        }
    }

    pub fn spec(self) -> UseCaseSpec {
        match self {
            UseCaseKind::Ar => gen_ar(),
            UseCaseKind::Iiot => gen_iiot(),
            UseCaseKind::Miot => gen_miot(),
        }
    }
}

impl fmt::Display for UseCaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// UE to data network.
    Up,
    /// Data network to UE.
    Down,
    /// Upload, server processing, then a response back to the UE.
    Updown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UseCaseSpec {
    pub kind: UseCaseKind,
    pub n_ues: u32,
    pub payload_bytes: u64,
    pub direction: Direction,
    pub includes_registration: bool,
    pub includes_establishment: bool,
    pub arrival_window_ms: f64,
    /// Pacing of a downlink stream; `None` sends chunks back to back.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream_rate_bps: Option<f64>,
    pub server_proc_ms: f64,
    pub response_bytes: u64,
}

const AR_STREAM_BITS: u64 = 460_000_000;

pub fn gen_ar() -> UseCaseSpec {
    UseCaseSpec {
        kind: UseCaseKind::Ar,
        n_ues: 3,
        payload_bytes: AR_STREAM_BITS / 8,
        direction: Direction::Down,
        includes_registration: false,
        includes_establishment: false,
        // streams start together
        arrival_window_ms: 0.0,
        stream_rate_bps: Some(100e6),
        server_proc_ms: 0.0,
        response_bytes: 0,
    }
}

pub fn gen_iiot() -> UseCaseSpec {
    UseCaseSpec {
        kind: UseCaseKind::Iiot,
        n_ues: 20,
        payload_bytes: 640_000,
        direction: Direction::Updown,
        // attached at power-up
        includes_registration: false,
        includes_establishment: true,
        arrival_window_ms: 1000.0,
        stream_rate_bps: None,
        server_proc_ms: 1.0,
        response_bytes: 1500,
    }
}

pub fn gen_miot() -> UseCaseSpec {
    UseCaseSpec {
        kind: UseCaseKind::Miot,
        n_ues: 50,
        payload_bytes: 100_000,
        direction: Direction::Up,
        includes_registration: true,
        includes_establishment: true,
        arrival_window_ms: 1000.0,
        stream_rate_bps: None,
        server_proc_ms: 0.0,
        response_bytes: 0,
    }
}

impl UseCaseSpec {
    pub fn payload_bits(&self) -> u64 {
        self.payload_bytes * 8
    }

    /// Returns `(field, reason)` for the first violated invariant.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.n_ues == 0 {
            return Err(("n_ues", "must be > 0".into()));
        }
        if !(self.arrival_window_ms >= 0.0 && self.arrival_window_ms.is_finite()) {
            return Err(("arrival_window_ms", "must be a finite value >= 0".into()));
        }
        if !(self.server_proc_ms >= 0.0 && self.server_proc_ms.is_finite()) {
            return Err(("server_proc_ms", "must be a finite value >= 0".into()));
        }
        if let Some(rate) = self.stream_rate_bps {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(("stream_rate_bps", "must be > 0".into()));
            }
        }
        if self.includes_registration && !self.includes_establishment {
            return Err((
                "includes_establishment",
                "a workload that registers must also establish a session".into(),
            ));
        }
        Ok(())
    }
}

/// UE start times drawn uniformly over `[0, arrival_window_ms]`, sorted by
/// time then UE id. UE `i` receives the `i`-th draw.
pub fn arrival_schedule(spec: &UseCaseSpec, seed: u64) -> Vec<(u32, f64)> {
    let window = spec.arrival_window_ms;
    let mut out: Vec<(u32, f64)> = if window <= 0.0 {
        (0..spec.n_ues).map(|ue| (ue, 0.0)).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..spec.n_ues)
            .map(|ue| (ue, rng.gen_range(0.0..=window)))
            .collect()
    };
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar_constants() {
        let s = gen_ar();
        assert_eq!(s.n_ues, 3);
        assert_eq!(s.payload_bits(), 460_000_000);
        assert!(!s.includes_registration);
        assert_eq!(s.direction, Direction::Down);
        assert_eq!(s.stream_rate_bps, Some(100e6));
    }

    #[test]
    fn iiot_constants() {
        let s = gen_iiot();
        assert_eq!(s.n_ues, 20);
        assert_eq!(s.payload_bytes, 640_000);
        assert!(!s.includes_registration);
        assert!(s.includes_establishment);
        assert_eq!(s.server_proc_ms, 1.0);
        assert_eq!(s.response_bytes, 1500);
    }

    #[test]
    fn miot_constants() {
        let s = gen_miot();
        assert_eq!(s.n_ues, 50);
        assert!(s.includes_registration && s.includes_establishment);
        assert_eq!(s.payload_bytes, 100_000);
    }

    #[test]
    fn zero_window_starts_everyone_at_zero() {
        let mut s = gen_miot();
        s.arrival_window_ms = 0.0;
        let sched = arrival_schedule(&s, 7);
        assert_eq!(sched.len(), 50);
        assert!(sched.iter().all(|&(_, t)| t == 0.0));
    }

    #[test]
    fn same_seed_same_schedule() {
        let s = gen_miot();
        assert_eq!(arrival_schedule(&s, 42), arrival_schedule(&s, 42));
        assert_ne!(arrival_schedule(&s, 42), arrival_schedule(&s, 43));
    }

    #[test]
    fn schedule_is_sorted_and_bounded() {
        let s = gen_miot();
        let sched = arrival_schedule(&s, 42);
        assert!(sched.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(sched.iter().all(|&(_, t)| (0.0..=1000.0).contains(&t)));
        let mut ids: Vec<u32> = sched.iter().map(|x| x.0).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn validation() {
        let mut s = gen_iiot();
        s.n_ues = 0;
        assert_eq!(s.validate().unwrap_err().0, "n_ues");
        let mut s = gen_ar();
        s.stream_rate_bps = Some(0.0);
        assert_eq!(s.validate().unwrap_err().0, "stream_rate_bps");
    }
}

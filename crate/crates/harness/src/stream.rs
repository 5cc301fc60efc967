//! Snapshot series and the per-value update stream interpolated between
//! consecutive snapshots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use te_core::model::Instance;
use thiserror::Error;

use crate::io::SnapshotOverrides;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StreamError {
    #[error("a drift stream needs at least two snapshots, got {0}")]
    TooFew(usize),
    #[error("snapshot {index} at t={t} does not come after t={previous}")]
    NotIncreasing { index: usize, t: f64, previous: f64 },
    #[error("snapshot {index} has {got} {what}, expected {expected}")]
    Shape {
        index: usize,
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("base snapshot {0} out of range")]
    NoSuchSnapshot(usize),
    #[error("t={t} precedes base snapshot time {base}")]
    BeforeBase { t: f64, base: f64 },
}

/// Full network state at one instant, aligned with an instance's commodity
/// and edge indexes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t_seconds: f64,
    pub demands: Vec<f64>,
    pub capacities: Vec<f64>,
}

impl Snapshot {
    pub fn of(instance: &Instance, t_seconds: f64) -> Self {
        Snapshot {
            t_seconds,
            demands: instance.demands().to_vec(),
            capacities: instance.capacities().to_vec(),
        }
    }

    /// `base` with `overrides` applied on top.
    pub fn overridden(base: &Snapshot, overrides: &SnapshotOverrides) -> Self {
        let mut out = base.clone();
        out.t_seconds = overrides.t_seconds;
        for (&c, &v) in &overrides.demands {
            out.demands[c] = v;
        }
        for (&e, &v) in &overrides.capacities {
            out.capacities[e] = v;
        }
        out
    }

    pub fn instance(&self, base: &Instance) -> te_core::Result<Instance> {
        base.with_values(&self.capacities, &self.demands)
    }

    fn apply(&mut self, event: &UpdateEvent) {
        match event.target {
            Target::Demand(c) => self.demands[c] = event.value,
            Target::Capacity(e) => self.capacities[e] = event.value,
        }
    }
}

/// What a single update changes. Demands sort before capacities, each by
/// index, which fixes the event order within an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Target {
    Demand(usize),
    Capacity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub t_seconds: f64,
    pub target: Target,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftStream {
    pub snapshots: Vec<Snapshot>,
    /// Sorted by time; ties keep the target order.
    pub events: Vec<UpdateEvent>,
}

/// Spreads the `N` values that differ between snapshots `i` and `i + 1`
/// uniformly over the gap `T`: the j-th change (0-based, in target order)
/// lands at `t_i + T·(j+1)/(N+1)`.
pub fn make_drift_stream(snapshots: Vec<Snapshot>) -> Result<DriftStream, StreamError> {
    if snapshots.len() < 2 {
        return Err(StreamError::TooFew(snapshots.len()));
    }
    let (nd, ne) = (snapshots[0].demands.len(), snapshots[0].capacities.len());
    for (i, s) in snapshots.iter().enumerate() {
        if s.demands.len() != nd {
            return Err(StreamError::Shape { index: i, what: "demands", expected: nd, got: s.demands.len() });
        }
        if s.capacities.len() != ne {
            return Err(StreamError::Shape { index: i, what: "capacities", expected: ne, got: s.capacities.len() });
        }
        if i > 0 && !(s.t_seconds > snapshots[i - 1].t_seconds) {
            return Err(StreamError::NotIncreasing { index: i, t: s.t_seconds, previous: snapshots[i - 1].t_seconds });
        }
    }
    let mut events = Vec::new();
    for pair in snapshots.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let changes: Vec<(Target, f64)> = (0..nd)
            .filter(|&c| a.demands[c].to_bits() != b.demands[c].to_bits())
            .map(|c| (Target::Demand(c), b.demands[c]))
            .chain(
                (0..ne)
                    .filter(|&e| a.capacities[e].to_bits() != b.capacities[e].to_bits())
                    .map(|e| (Target::Capacity(e), b.capacities[e])),
            )
            .collect();
        let span = b.t_seconds - a.t_seconds;
        let n = changes.len() as f64;
        for (j, (target, value)) in changes.into_iter().enumerate() {
            events.push(UpdateEvent {
                t_seconds: a.t_seconds + span * (j as f64 + 1.0) / (n + 1.0),
                target,
                value,
            });
        }
    }
    Ok(DriftStream { snapshots, events })
}

/// Snapshot `base` with every event in `(t_base, t]` applied.
pub fn state_at(stream: &DriftStream, base: usize, t: f64) -> Result<Snapshot, StreamError> {
    let start = stream.snapshots.get(base).ok_or(StreamError::NoSuchSnapshot(base))?;
    if t < start.t_seconds {
        return Err(StreamError::BeforeBase { t, base: start.t_seconds });
    }
    let mut out = start.clone();
    for event in stream.events.iter().filter(|ev| ev.t_seconds > start.t_seconds && ev.t_seconds <= t) {
        out.apply(event);
    }
    out.t_seconds = t;
    Ok(out)
}

/// Synthetic drift: `count` snapshots `interval_s` apart, each multiplying
/// every demand of the previous one by an independent factor in
/// `[1 - noise, 1 + noise]`. Capacities stay fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDrift {
    pub count: usize,
    #[serde(default = "default_interval")]
    pub interval_s: f64,
    #[serde(default = "default_noise")]
    pub demand_noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_interval() -> f64 {
    12.0
}

fn default_noise() -> f64 {
    0.05
}

impl SyntheticDrift {
    pub fn snapshots(&self, first: &Snapshot) -> Vec<Snapshot> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = vec![first.clone()];
        for i in 1..self.count.max(1) {
            let prev = &out[i - 1];
            let mut next = prev.clone();
            next.t_seconds = first.t_seconds + self.interval_s * i as f64;
            for d in next.demands.iter_mut() {
                *d *= 1.0 + rng.gen_range(-self.demand_noise..=self.demand_noise);
            }
            out.push(next);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(t: f64, demands: &[f64], capacities: &[f64]) -> Snapshot {
        Snapshot { t_seconds: t, demands: demands.to_vec(), capacities: capacities.to_vec() }
    }

    #[test]
    fn six_changes_spread_over_a_minute() {
        let a = snap(0.0, &[1.0, 2.0, 3.0], &[10.0, 10.0, 10.0]);
        let b = snap(60.0, &[2.0, 3.0, 4.0], &[11.0, 12.0, 13.0]);
        let s = make_drift_stream(vec![a, b]).unwrap();
        assert_eq!(s.events.len(), 6);
        for (j, ev) in s.events.iter().enumerate() {
            assert!((ev.t_seconds - 60.0 / 7.0 * (j + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(s.events[0].target, Target::Demand(0));
        assert_eq!(s.events[5].target, Target::Capacity(2));
    }

    #[test]
    fn unchanged_interval_has_no_events() {
        let a = snap(0.0, &[1.0], &[1.0]);
        let b = snap(5.0, &[1.0], &[1.0]);
        assert!(make_drift_stream(vec![a, b]).unwrap().events.is_empty());
    }

    #[test]
    fn rejects_bad_timestamps_and_short_series() {
        let a = snap(5.0, &[1.0], &[1.0]);
        assert!(matches!(make_drift_stream(vec![a.clone()]), Err(StreamError::TooFew(1))));
        assert!(matches!(
            make_drift_stream(vec![a.clone(), a]),
            Err(StreamError::NotIncreasing { index: 1, .. })
        ));
    }

    #[test]
    fn state_at_boundaries_and_prefix() {
        let a = snap(0.0, &[1.0, 1.0], &[1.0]);
        let b = snap(30.0, &[2.0, 3.0], &[4.0]);
        let s = make_drift_stream(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(state_at(&s, 0, 0.0).unwrap(), a);
        let end = state_at(&s, 0, 100.0).unwrap();
        assert_eq!((end.demands, end.capacities), (b.demands.clone(), b.capacities.clone()));
        // Events at 7.5, 15, 22.5: two of them applied by t = 16.
        let mid = state_at(&s, 0, 16.0).unwrap();
        assert_eq!(mid.demands, vec![2.0, 3.0]);
        assert_eq!(mid.capacities, vec![1.0]);
        assert!(state_at(&s, 1, 10.0).is_err());
    }
}

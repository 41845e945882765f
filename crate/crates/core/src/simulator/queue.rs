//! Event-driven FCFS multi-server queue.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand_chacha::ChaCha8Rng;

use super::rng::{draw, stream_rng};

/// One Poisson input to a queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalStream {
    pub rate: f64,
    /// ChaCha stream number; see [`super::rng`].
    pub stream_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueModel {
    pub servers: u32,
    pub service_rate: f64,
    pub streams: Vec<ArrivalStream>,
}

impl QueueModel {
    pub fn offered_load(&self) -> f64 {
        self.streams.iter().map(|s| s.rate).sum::<f64>() / self.service_rate
    }

    pub fn utilization(&self) -> f64 {
        self.offered_load() / f64::from(self.servers)
    }
}

/// Which of the queue's arrivals are observed.
///
/// Arrivals are numbered globally across streams. The first `warmup` are
/// discarded; afterwards every `spacing`-th arrival is recorded until
/// `recorded` observations exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunPlan {
    pub warmup: u64,
    pub recorded: u64,
    pub spacing: u64,
}

impl RunPlan {
    pub fn total_arrivals(&self) -> u64 {
        if self.recorded == 0 {
            self.warmup
        } else {
            self.warmup + (self.recorded - 1) * self.spacing + 1
        }
    }

    fn records(&self, index: u64) -> bool {
        index >= self.warmup && (index - self.warmup).is_multiple_of(self.spacing)
    }
}

/// Number-in-system distribution after warmup: time-weighted and as seen by arrivals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Occupancy {
    pub time_in_state: Vec<f64>,
    pub seen_by_arrivals: Vec<u64>,
}

impl Occupancy {
    pub fn time_distribution(&self) -> Vec<f64> {
        let total: f64 = self.time_in_state.iter().sum();
        self.time_in_state.iter().map(|t| t / total).collect()
    }

    pub fn arrival_distribution(&self) -> Vec<f64> {
        let total: u64 = self.seen_by_arrivals.iter().sum();
        self.seen_by_arrivals
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }

    fn add_time(&mut self, n: usize, dt: f64) {
        if self.time_in_state.len() <= n {
            self.time_in_state.resize(n + 1, 0.0);
        }
        self.time_in_state[n] += dt;
    }

    fn add_arrival(&mut self, n: usize) {
        if self.seen_by_arrivals.len() <= n {
            self.seen_by_arrivals.resize(n + 1, 0);
        }
        self.seen_by_arrivals[n] += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrival(usize),
    Departure,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
}

/// Pending events popped in `(time, seq)` order, `seq` being the scheduling order.
///
/// Each stream has at most one pending arrival, kept in its own slot; departures
/// live in a min-heap keyed by the bit pattern of the (non-negative) time.
#[derive(Default)]
struct EventQueue {
    arrivals: Vec<Option<(f64, u64)>>,
    departures: BinaryHeap<Reverse<(u64, u64)>>,
    next_seq: u64,
}

impl EventQueue {
    fn schedule(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time >= 0.0);
        let seq = self.next_seq;
        self.next_seq += 1;
        match kind {
            EventKind::Arrival(k) => {
                if self.arrivals.len() <= k {
                    self.arrivals.resize(k + 1, None);
                }
                debug_assert!(self.arrivals[k].is_none());
                self.arrivals[k] = Some((time, seq));
            }
            EventKind::Departure => self.departures.push(Reverse((time.to_bits(), seq))),
        }
    }

    fn pop(&mut self) -> Option<Event> {
        let mut best: Option<(usize, f64, u64)> = None;
        for (k, slot) in self.arrivals.iter().enumerate() {
            if let Some((t, seq)) = *slot {
                if best.is_none_or(|(_, bt, bs)| (t, seq) < (bt, bs)) {
                    best = Some((k, t, seq));
                }
            }
        }
        let departure = self
            .departures
            .peek()
            .map(|Reverse((bits, seq))| (f64::from_bits(*bits), *seq));
        match (best, departure) {
            (Some((k, t, seq)), Some((dt, dseq))) if (t, seq) < (dt, dseq) => {
                self.arrivals[k] = None;
                Some(Event {
                    time: t,
                    kind: EventKind::Arrival(k),
                })
            }
            (Some((k, t, _)), None) => {
                self.arrivals[k] = None;
                Some(Event {
                    time: t,
                    kind: EventKind::Arrival(k),
                })
            }
            (_, Some((dt, _))) => {
                self.departures.pop();
                Some(Event {
                    time: dt,
                    kind: EventKind::Departure,
                })
            }
            (None, None) => None,
        }
    }
}

struct Waiting {
    stream: usize,
    arrived: f64,
    service: f64,
    record: bool,
}

/// Runs one replication of the queue.
///
/// `observe(stream_index, wait)` is called once per recorded arrival with its
/// queueing delay (arrival to service start). Service requirements are drawn
/// from the arriving stream's generator at arrival, so a queue's sample path
/// depends only on its input streams. Nobody reneges.
pub fn run_queue<F>(
    model: &QueueModel,
    plan: &RunPlan,
    replication_seed: u64,
    mut observe: F,
    mut occupancy: Option<&mut Occupancy>,
) where
    F: FnMut(usize, f64),
{
    assert!(model.servers > 0 && plan.spacing > 0);
    let total = plan.total_arrivals();
    if total == 0 {
        return;
    }
    let servers = model.servers as usize;
    let mu = model.service_rate;
    let mut rngs: Vec<ChaCha8Rng> = model
        .streams
        .iter()
        .map(|s| stream_rng(replication_seed, s.stream_id))
        .collect();

    let mut events = EventQueue::default();
    for (k, s) in model.streams.iter().enumerate() {
        let t = draw(s.rate, &mut rngs[k]);
        events.schedule(t, EventKind::Arrival(k));
    }

    let mut generated = 0u64;
    let mut busy = 0usize;
    let mut waiting: VecDeque<Waiting> = VecDeque::new();
    let mut measuring = false;
    let mut last_time = 0.0;

    while let Some(ev) = events.pop() {
        let now = ev.time;
        if measuring {
            if let Some(occ) = occupancy.as_deref_mut() {
                occ.add_time(busy + waiting.len(), now - last_time);
            }
        }
        last_time = now;
        match ev.kind {
            EventKind::Arrival(k) => {
                if generated == total {
                    continue;
                }
                let index = generated;
                generated += 1;
                let service = draw(mu, &mut rngs[k]);
                if index == plan.warmup {
                    measuring = true;
                }
                if measuring {
                    if let Some(occ) = occupancy.as_deref_mut() {
                        occ.add_arrival(busy + waiting.len());
                    }
                }
                if generated < total {
                    let next = now + draw(model.streams[k].rate, &mut rngs[k]);
                    events.schedule(next, EventKind::Arrival(k));
                } else {
                    measuring = false;
                }
                let record = plan.records(index);
                if busy < servers {
                    busy += 1;
                    if record {
                        observe(k, 0.0);
                    }
                    events.schedule(now + service, EventKind::Departure);
                } else {
                    waiting.push_back(Waiting {
                        stream: k,
                        arrived: now,
                        service,
                        record,
                    });
                }
            }
            EventKind::Departure => {
                busy -= 1;
                if let Some(w) = waiting.pop_front() {
                    busy += 1;
                    if w.record {
                        observe(w.stream, now - w.arrived);
                    }
                    events.schedule(now + w.service, EventKind::Departure);
                }
            }
        }
        if generated == total && waiting.is_empty() {
            break;
        }
    }
}

/// Empirical `P(W_q > x)` for each `x` in `xs` from one single-stream run.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfEstimate {
    pub xs: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub recorded: u64,
}

impl CcdfEstimate {
    /// Binomial standard error at index `k` evaluated at probability `p`.
    pub fn binomial_se(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.recorded as f64).sqrt()
    }
}

pub fn estimate_wait_ccdf(
    servers: u32,
    arrival_rate: f64,
    service_rate: f64,
    xs: &[f64],
    plan: &RunPlan,
    replication_seed: u64,
) -> CcdfEstimate {
    let model = QueueModel {
        servers,
        service_rate,
        streams: vec![ArrivalStream {
            rate: arrival_rate,
            stream_id: 0,
        }],
    };
    let mut exceed = vec![0u64; xs.len()];
    let mut recorded = 0u64;
    run_queue(
        &model,
        plan,
        replication_seed,
        |_, wait| {
            recorded += 1;
            for (count, &x) in exceed.iter_mut().zip(xs) {
                if wait > x {
                    *count += 1;
                }
            }
        },
        None,
    );
    CcdfEstimate {
        xs: xs.to_vec(),
        p_hat: exceed
            .iter()
            .map(|&c| c as f64 / recorded as f64)
            .collect(),
        recorded,
    }
}

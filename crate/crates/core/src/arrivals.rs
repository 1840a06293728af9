//! Bit-arrival processes: how the message bits reach the encoder over time.
//!
//! Every model delivers the first bit at `t = 1`. Between consecutive steps a
//! string of length `l < n` either stays put or grows by one equiprobable bit;
//! [`ArrivalModel::weights_at`] returns the two transition masses.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::strings::{VarString, MAX_LEN};

/// Per-step arrival probability q(t), possibly time-varying.
#[derive(Clone, Debug, PartialEq)]
pub enum QSchedule {
    Constant(f64),
    /// `(start, q)` pairs sorted by start time: q(t) is the value of the last
    /// pair with `start <= t`; before the first pair q is 1.
    Steps(Vec<(u64, f64)>),
}

impl QSchedule {
    pub fn at(&self, t: u64) -> f64 {
        match self {
            QSchedule::Constant(q) => *q,
            QSchedule::Steps(steps) => steps
                .iter()
                .take_while(|(start, _)| *start <= t)
                .last()
                .map_or(1.0, |&(_, q)| q),
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |q: f64| {
            if q > 0.0 && q <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "arrival probability must lie in (0, 1], got {q}"
                )))
            }
        };
        match self {
            QSchedule::Constant(q) => check(*q),
            QSchedule::Steps(steps) => {
                if steps.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::InvalidParameter(
                        "q schedule start times must increase".into(),
                    ));
                }
                steps.iter().try_for_each(|&(_, q)| check(q))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ArrivalKind {
    /// One bit per step: `tau_k = k`.
    Periodic,
    /// After the first bit, a new bit arrives at each step with probability q(t).
    Bernoulli(QSchedule),
    /// All `n` bits are available at `t = 1`.
    BlockAtStart,
    /// Bits arrive according to the inner process but are held back and
    /// released together at the inner `tau_n`.
    Buffered(Box<ArrivalKind>),
}

impl ArrivalKind {
    pub fn bernoulli(q: f64) -> Self {
        ArrivalKind::Bernoulli(QSchedule::Constant(q))
    }

    /// Constant arrival probability, or `None` for block-style and time-varying models.
    pub fn constant_q(&self) -> Option<f64> {
        match self {
            ArrivalKind::Periodic => Some(1.0),
            ArrivalKind::Bernoulli(QSchedule::Constant(q)) => Some(*q),
            _ => None,
        }
    }

    /// True for models that grow strings bit by bit (the ones the codecs track online).
    pub fn is_incremental(&self) -> bool {
        matches!(self, ArrivalKind::Periodic | ArrivalKind::Bernoulli(_))
    }
}

impl fmt::Display for ArrivalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrivalKind::Periodic => f.write_str("periodic"),
            ArrivalKind::Bernoulli(QSchedule::Constant(q)) => write!(f, "bernoulli:{q}"),
            ArrivalKind::Bernoulli(QSchedule::Steps(steps)) => {
                let parts: Vec<String> = steps.iter().map(|(s, q)| format!("{s}@{q}")).collect();
                write!(f, "bernoulli:{}", parts.join("/"))
            }
            ArrivalKind::BlockAtStart => f.write_str("block"),
            ArrivalKind::Buffered(inner) => write!(f, "buffered:{inner}"),
        }
    }
}

/// Parses `periodic`, `bernoulli:<q>`, `bernoulli:<t0>@<q0>/<t1>@<q1>...`,
/// `block`, or `buffered:<inner>`.
impl FromStr for ArrivalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let bad = || Error::InvalidParameter(format!("cannot parse arrival model `{s}`"));
        let kind = match (head.to_ascii_lowercase().as_str(), rest) {
            ("periodic", None) => ArrivalKind::Periodic,
            ("block", None) => ArrivalKind::BlockAtStart,
            ("bernoulli", Some(r)) if r.contains('@') => {
                let steps = r
                    .split('/')
                    .map(|part| {
                        let (start, q) = part.split_once('@').ok_or_else(bad)?;
                        Ok((
                            start.trim().parse().map_err(|_| bad())?,
                            q.trim().parse().map_err(|_| bad())?,
                        ))
                    })
                    .collect::<Result<Vec<(u64, f64)>>>()?;
                ArrivalKind::Bernoulli(QSchedule::Steps(steps))
            }
            ("bernoulli", Some(r)) => ArrivalKind::bernoulli(r.trim().parse().map_err(|_| bad())?),
            ("buffered", Some(r)) => {
                let inner: ArrivalKind = r.parse()?;
                if !inner.is_incremental() {
                    return Err(Error::InvalidParameter(
                        "buffered needs a periodic or bernoulli inner model".into(),
                    ));
                }
                ArrivalKind::Buffered(Box::new(inner))
            }
            _ => return Err(bad()),
        };
        if let ArrivalKind::Bernoulli(schedule) = &kind {
            schedule.validate()?;
        }
        Ok(kind)
    }
}

/// An arrival process for an `n`-bit message.
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalModel {
    kind: ArrivalKind,
    n: u32,
}

impl ArrivalModel {
    pub fn new(kind: ArrivalKind, n: u32) -> Result<Self> {
        if n == 0 || n > MAX_LEN {
            return Err(Error::InvalidParameter(format!(
                "message length must be in 1..={MAX_LEN}, got {n}"
            )));
        }
        match &kind {
            ArrivalKind::Bernoulli(s) => s.validate()?,
            ArrivalKind::Buffered(inner) if !inner.is_incremental() => {
                return Err(Error::InvalidParameter(
                    "buffered needs a periodic or bernoulli inner model".into(),
                ))
            }
            _ => {}
        }
        Ok(ArrivalModel { kind, n })
    }

    pub fn periodic(n: u32) -> Result<Self> {
        Self::new(ArrivalKind::Periodic, n)
    }

    pub fn bernoulli(n: u32, q: f64) -> Result<Self> {
        Self::new(ArrivalKind::bernoulli(q), n)
    }

    pub fn block(n: u32) -> Result<Self> {
        Self::new(ArrivalKind::BlockAtStart, n)
    }

    pub fn kind(&self) -> &ArrivalKind {
        &self.kind
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Arrival probability used for the transition into step `t`.
    pub fn q_at(&self, t: u64) -> f64 {
        match &self.kind {
            ArrivalKind::Periodic => 1.0,
            ArrivalKind::Bernoulli(s) => s.at(t),
            ArrivalKind::BlockAtStart | ArrivalKind::Buffered(_) => 0.0,
        }
    }

    /// `(stay, grow)` masses for a string of length `len` moving into step `t`:
    /// it stays with probability `stay` and becomes each of its two children
    /// with probability `grow`.
    pub fn weights_at(&self, len: u32, t: u64) -> (f64, f64) {
        if len >= self.n {
            return (1.0, 0.0);
        }
        match &self.kind {
            ArrivalKind::BlockAtStart | ArrivalKind::Buffered(_) => (1.0, 0.0),
            _ => {
                let q = self.q_at(t);
                (1.0 - q, q / 2.0)
            }
        }
    }

    /// Time-invariant weights; for a time-varying schedule this uses q(2).
    pub fn prior_mixture_weights(&self, len: u32) -> (f64, f64) {
        self.weights_at(len, 2)
    }

    /// Belief over `B*_1` before any channel output.
    pub fn initial_prior(&self) -> Vec<(VarString, f64)> {
        match &self.kind {
            ArrivalKind::BlockAtStart | ArrivalKind::Buffered(_) => {
                let count = 1u128 << self.n;
                let mass = 1.0 / count as f64;
                (0..count)
                    .map(|payload| (VarString::from_payload(self.n, payload), mass))
                    .collect()
            }
            _ => vec![
                (VarString::from_payload(1, 0), 0.5),
                (VarString::from_payload(1, 1), 0.5),
            ],
        }
    }

    pub fn sample_trace<R: Rng + ?Sized>(&self, rng: &mut R) -> ArrivalTrace {
        let n = self.n as usize;
        let bits: Vec<u8> = (0..n).map(|_| rng.random_bool(0.5) as u8).collect();
        let tau = match &self.kind {
            ArrivalKind::BlockAtStart => vec![1; n],
            ArrivalKind::Buffered(inner) => {
                let inner = ArrivalModel {
                    kind: (**inner).clone(),
                    n: self.n,
                };
                sample_times(&inner, rng)
            }
            _ => sample_times(self, rng),
        };
        ArrivalTrace { bits, tau }
    }

    pub fn arrival_stats(&self) -> ArrivalStats {
        let n = self.n as f64;
        match &self.kind {
            ArrivalKind::Periodic => ArrivalStats {
                tau_bar: n,
                slack: Some(0.0),
            },
            ArrivalKind::BlockAtStart => ArrivalStats {
                tau_bar: 1.0,
                slack: Some(0.0),
            },
            ArrivalKind::Bernoulli(QSchedule::Constant(q)) if *q >= 1.0 => ArrivalStats {
                tau_bar: n,
                slack: Some(0.0),
            },
            ArrivalKind::Bernoulli(QSchedule::Constant(q)) => ArrivalStats {
                tau_bar: 1.0 + (n - 1.0) / q,
                slack: None,
            },
            ArrivalKind::Bernoulli(QSchedule::Steps(_)) => ArrivalStats {
                tau_bar: expected_tau_n(self),
                slack: None,
            },
            ArrivalKind::Buffered(inner) => ArrivalModel {
                kind: (**inner).clone(),
                n: self.n,
            }
            .arrival_stats(),
        }
    }
}

fn sample_times<R: Rng + ?Sized>(model: &ArrivalModel, rng: &mut R) -> Vec<u64> {
    let n = model.n as usize;
    let mut tau = Vec::with_capacity(n);
    tau.push(1u64);
    let mut t = 1u64;
    while tau.len() < n {
        t += 1;
        let q = model.q_at(t);
        if q >= 1.0 || rng.random_bool(q) {
            tau.push(t);
        }
    }
    tau
}

/// E[tau_n] for a time-varying schedule by propagating the distribution of
/// the number of arrived bits.
fn expected_tau_n(model: &ArrivalModel) -> f64 {
    let n = model.n as usize;
    // arrived[k] = P(k bits have arrived by time t), k < n
    if n == 1 {
        return 1.0;
    }
    let mut arrived = vec![0.0; n];
    arrived[1] = 1.0;
    let mut remaining = 1.0;
    let mut expectation = 0.0;
    let mut t = 1u64;
    while remaining > 1e-15 && t < 10_000_000 {
        t += 1;
        let q = model.q_at(t);
        let done = arrived[n - 1] * q;
        expectation += t as f64 * done;
        remaining -= done;
        for k in (1..n).rev() {
            let moved_in = if k > 1 { arrived[k - 1] * q } else { 0.0 };
            arrived[k] = arrived[k] * (1.0 - q) + moved_in;
        }
    }
    expectation
}

/// Expected arrival time of the last bit and the almost-sure slack `d(n)`
/// with `tau_n <= tau_bar + d(n)`; `slack` is `None` when no finite bound exists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrivalStats {
    pub tau_bar: f64,
    pub slack: Option<f64>,
}

/// A sampled message with the arrival time of each bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrivalTrace {
    pub bits: Vec<u8>,
    pub tau: Vec<u64>,
}

impl ArrivalTrace {
    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn tau_n(&self) -> u64 {
        *self.tau.last().expect("traces are non-empty")
    }

    /// Number of bits that have arrived by time `t`.
    pub fn arrived_by(&self, t: u64) -> usize {
        self.tau.partition_point(|&tk| tk <= t)
    }

    /// `B*_t`, the prefix received by time `t`.
    pub fn prefix_at(&self, t: u64) -> VarString {
        VarString::from_bits(&self.bits[..self.arrived_by(t)]).expect("n is bounded")
    }

    pub fn message(&self) -> VarString {
        VarString::from_bits(&self.bits).expect("n is bounded")
    }

    pub const CSV_HEADER: &'static str = "k,tau_k,bit_k";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (k, (tau, bit)) in self.tau.iter().zip(&self.bits).enumerate() {
            out.push_str(&format!("{},{},{}\n", k + 1, tau, bit));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn periodic_trace() {
        let m = ArrivalModel::periodic(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = m.sample_trace(&mut rng);
        assert_eq!(trace.tau, vec![1, 2, 3, 4]);
        assert_eq!(trace.bits.len(), 4);
        assert_eq!(trace.message().len(), 4);
    }

    #[test]
    fn bernoulli_one_is_periodic() {
        let m = ArrivalModel::bernoulli(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(m.sample_trace(&mut rng).tau, vec![1, 2, 3, 4]);
        assert_eq!(m.arrival_stats().slack, Some(0.0));
    }

    #[test]
    fn bits_are_roughly_fair() {
        let m = ArrivalModel::periodic(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ones: usize = (0..2000)
            .map(|_| m.sample_trace(&mut rng).bits.iter().filter(|&&b| b == 1).count())
            .sum();
        assert_abs_diff_eq!(ones as f64 / 32000.0, 0.5, epsilon = 0.015);
    }

    #[test]
    fn bernoulli_mean_tau_n() {
        let m = ArrivalModel::bernoulli(100, 0.98).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let traces = 10_000;
        let samples: Vec<f64> = (0..traces)
            .map(|_| m.sample_trace(&mut rng).tau_n() as f64)
            .collect();
        let mean = samples.iter().sum::<f64>() / traces as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (traces - 1) as f64;
        let stats = m.arrival_stats();
        assert_abs_diff_eq!(stats.tau_bar, 1.0 + 99.0 / 0.98, epsilon = 1e-12);
        assert_abs_diff_eq!(mean, 102.0, epsilon = 0.5);
        assert!((mean - stats.tau_bar).abs() <= 3.0 * (var / traces as f64).sqrt());
        assert_eq!(stats.slack, None);
    }

    #[test]
    fn traces_are_strictly_increasing_from_one() {
        let m = ArrivalModel::bernoulli(30, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let tr = m.sample_trace(&mut rng);
            assert_eq!(tr.tau[0], 1);
            assert!(tr.tau.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(tr.prefix_at(tr.tau_n()), tr.message());
            assert_eq!(tr.prefix_at(1).len(), 1);
        }
    }

    #[test]
    fn mixture_weights() {
        let m = ArrivalModel::bernoulli(10, 0.98).unwrap();
        let (stay, grow) = m.prior_mixture_weights(3);
        assert_abs_diff_eq!(stay, 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(grow, 0.49, epsilon = 1e-15);
        assert_eq!(m.prior_mixture_weights(10), (1.0, 0.0));
        let p = ArrivalModel::periodic(10).unwrap();
        assert_eq!(p.prior_mixture_weights(9), (0.0, 0.5));
        assert_eq!(p.prior_mixture_weights(10), (1.0, 0.0));
        assert_eq!(ArrivalModel::block(10).unwrap().prior_mixture_weights(10), (1.0, 0.0));
    }

    #[test]
    fn transition_masses_sum_to_one() {
        for q in [0.1, 0.5, 0.98, 1.0] {
            let m = ArrivalModel::bernoulli(8, q).unwrap();
            for len in 1..=8 {
                let (stay, grow) = m.prior_mixture_weights(len);
                assert_abs_diff_eq!(stay + 2.0 * grow, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn arrival_stats_examples() {
        assert_eq!(
            ArrivalModel::periodic(100).unwrap().arrival_stats(),
            ArrivalStats { tau_bar: 100.0, slack: Some(0.0) }
        );
        assert_eq!(
            ArrivalModel::block(100).unwrap().arrival_stats(),
            ArrivalStats { tau_bar: 1.0, slack: Some(0.0) }
        );
        let s = ArrivalModel::bernoulli(100, 0.98).unwrap().arrival_stats();
        assert_abs_diff_eq!(s.tau_bar, 102.0204, epsilon = 1e-4);
    }

    #[test]
    fn time_varying_schedule() {
        let kind: ArrivalKind = "bernoulli:1@1/20@0.5".parse().unwrap();
        let m = ArrivalModel::new(kind, 30).unwrap();
        assert_eq!(m.q_at(5), 1.0);
        assert_eq!(m.q_at(25), 0.5);
        // bits 1..=19 arrive deterministically at t = 1..=19; the other 11 need
        // geometric(0.5) gaps of mean 2
        assert_abs_diff_eq!(m.arrival_stats().tau_bar, 19.0 + 22.0, epsilon = 1e-9);
        let constant = ArrivalModel::new("bernoulli:1@0.25".parse().unwrap(), 12).unwrap();
        assert_abs_diff_eq!(constant.arrival_stats().tau_bar, 1.0 + 11.0 / 0.25, epsilon = 1e-9);
    }

    #[test]
    fn buffered_and_block() {
        let m = ArrivalModel::new("buffered:bernoulli:0.5".parse().unwrap(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tr = m.sample_trace(&mut rng);
        assert_eq!(tr.tau[0], 1);
        assert!(tr.tau.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(m.initial_prior().len(), 64);
        assert_abs_diff_eq!(m.arrival_stats().tau_bar, 11.0, epsilon = 1e-12);
        let b = ArrivalModel::block(3).unwrap();
        assert_eq!(b.sample_trace(&mut rng).tau, vec![1, 1, 1]);
        let total: f64 = b.initial_prior().iter().map(|(_, m)| m).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["periodic", "bernoulli:0.98", "block", "buffered:bernoulli:0.5", "buffered:periodic"] {
            let k: ArrivalKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("bernoulli:0".parse::<ArrivalKind>().is_err());
        assert!("bernoulli:1.5".parse::<ArrivalKind>().is_err());
        assert!("buffered:block".parse::<ArrivalKind>().is_err());
        assert!("poisson:2".parse::<ArrivalKind>().is_err());
    }

    #[test]
    fn trace_csv() {
        let tr = ArrivalTrace { bits: vec![1, 0], tau: vec![1, 3] };
        assert_eq!(tr.to_csv(), "k,tau_k,bit_k\n1,1,1\n2,3,0\n");
        assert_eq!(tr.arrived_by(2), 1);
        assert_eq!(tr.prefix_at(2).to_string(), "1");
    }
}

//! Discrete memoryless channels and their information-theoretic summary.
//!
//! All quantities are in bits.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Iteration cap for Blahut-Arimoto.
pub const BA_MAX_ITERATIONS: usize = 100_000;
/// Default convergence tolerance for [`channel_info`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A finite-alphabet channel given by its row-stochastic transition matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dmc {
    input_size: usize,
    output_size: usize,
    // row-major, W[x * output_size + y] = P(y | x)
    w: Vec<f64>,
    strictly_positive: bool,
}

impl Dmc {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let input_size = rows.len();
        if input_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "a channel needs at least two inputs, got {input_size}"
            )));
        }
        let output_size = rows[0].len();
        if output_size == 0 {
            return Err(Error::InvalidParameter("empty output alphabet".into()));
        }
        let mut w = Vec::with_capacity(input_size * output_size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::InvalidParameter(format!(
                    "row {x} has {} entries, expected {output_size}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidParameter(format!(
                    "row {x} has entry {bad} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidParameter(format!("row {x} sums to {sum}")));
            }
            w.extend_from_slice(row);
        }
        let strictly_positive = w.iter().all(|&v| v > 0.0);
        Ok(Dmc {
            input_size,
            output_size,
            w,
            strictly_positive,
        })
    }

    /// Binary symmetric channel with crossover probability `p` in (0, 1).
    pub fn bsc(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "BSC crossover must lie in (0, 1), got {p}"
            )));
        }
        Dmc::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Identity channel on `k` symbols. Violates strict positivity; meant for tests.
    pub fn noiseless(k: usize) -> Self {
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Dmc::new(rows).expect("identity matrix is stochastic")
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    /// P(y | x).
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.output_size + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.w[x * self.output_size..(x + 1) * self.output_size]
    }

    /// Crossover probability if this is a 2x2 symmetric channel.
    pub fn bsc_crossover(&self) -> Option<f64> {
        if self.input_size != 2 || self.output_size != 2 {
            return None;
        }
        let p = self.prob(0, 1);
        ((self.prob(1, 0) - p).abs() <= ROW_SUM_TOLERANCE).then_some(p)
    }

    /// Draws an output for input `x` by inverting the row CDF with one uniform.
    pub fn sample_output<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        assert!(x < self.input_size, "input symbol {x} out of range");
        let u: f64 = rng.random();
        let row = self.row(x);
        let mut acc = 0.0;
        for (y, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return y;
            }
        }
        // u landed in the rounding slack above the last cumulative sum
        row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

impl fmt::Display for Dmc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.bsc_crossover() {
            return write!(f, "bsc:{p}");
        }
        f.write_str("matrix:")?;
        for x in 0..self.input_size {
            if x > 0 {
                f.write_str(";")?;
            }
            let row: Vec<String> = self.row(x).iter().map(|v| v.to_string()).collect();
            f.write_str(&row.join(","))?;
        }
        Ok(())
    }
}

/// Parses `bsc:<p>`, `bsc <p>`, or `matrix:<row>;<row>...` with comma-separated
/// row entries.
impl FromStr for Dmc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(|c: char| c == ':' || c.is_whitespace())
            .ok_or_else(|| Error::InvalidParameter(format!("cannot parse channel `{s}`")))?;
        let rest = rest.trim();
        match kind.to_ascii_lowercase().as_str() {
            "bsc" => {
                let p: f64 = rest.parse().map_err(|_| {
                    Error::InvalidParameter(format!("bad BSC crossover `{rest}`"))
                })?;
                Dmc::bsc(p)
            }
            "matrix" => {
                let rows = rest
                    .split(';')
                    .map(|row| {
                        row.split(|c: char| c == ',' || c.is_whitespace())
                            .filter(|v| !v.is_empty())
                            .map(|v| {
                                v.parse::<f64>().map_err(|_| {
                                    Error::InvalidParameter(format!("bad matrix entry `{v}`"))
                                })
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Dmc::new(rows)
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown channel kind `{other}` (expected bsc or matrix)"
            ))),
        }
    }
}

/// Capacity, capacity-achieving input distribution, and the largest pairwise
/// output divergence of a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelInfo {
    pub capacity: f64,
    pub caid: Vec<f64>,
    pub c1: f64,
    pub c1_argmax: (usize, usize),
}

impl ChannelInfo {
    pub const CSV_HEADER: &'static str = "C,caid0,caid1,C1,x1,x2";

    /// One CSV row matching [`Self::CSV_HEADER`]; only the first two caid entries are written.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.capacity,
            self.caid[0],
            self.caid.get(1).copied().unwrap_or(0.0),
            self.c1,
            self.c1_argmax.0,
            self.c1_argmax.1
        )
    }
}

impl fmt::Display for ChannelInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "capacity C      = {:.9} bits/use", self.capacity)?;
        let caid: Vec<String> = self.caid.iter().map(|v| format!("{v:.9}")).collect();
        writeln!(f, "caid P*_X       = ({})", caid.join(", "))?;
        writeln!(f, "C1              = {:.9} bits", self.c1)?;
        write!(
            f,
            "C1 attained at  = (x1={}, x2={})",
            self.c1_argmax.0, self.c1_argmax.1
        )
    }
}

/// D(p || q) in bits. Infinite when `q` misses mass that `p` has.
pub fn divergence_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| {
            if qi == 0.0 {
                f64::INFINITY
            } else {
                pi * (pi / qi).log2()
            }
        })
        .sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Blahut-Arimoto capacity iteration.
///
/// Stops once the standard upper bound `max_x D(W_x || r W)` and lower bound
/// `log2 sum_x r(x) 2^{D(W_x || r W)}` are within `tol`.
pub fn blahut_arimoto(ch: &Dmc, tol: f64, max_iterations: usize) -> Result<(f64, Vec<f64>)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let k = ch.input_size();
    let mut r = vec![1.0 / k as f64; k];
    let mut output = vec![0.0; ch.output_size()];
    let mut d = vec![0.0; k];
    let mut gap = f64::INFINITY;
    for _ in 0..max_iterations {
        output.iter_mut().for_each(|o| *o = 0.0);
        for (x, &rx) in r.iter().enumerate() {
            for (o, &w) in output.iter_mut().zip(ch.row(x)) {
                *o += rx * w;
            }
        }
        for (x, dx) in d.iter_mut().enumerate() {
            *dx = divergence_bits(ch.row(x), &output);
        }
        let upper = d
            .iter()
            .zip(&r)
            .filter(|(_, &rx)| rx > 0.0)
            .map(|(&dx, _)| dx)
            .fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = r.iter().zip(&d).map(|(&rx, &dx)| rx * dx.exp2()).sum();
        let lower = z.log2();
        gap = upper - lower;
        if gap < tol {
            return Ok((lower.max(0.0), r));
        }
        for (rx, &dx) in r.iter_mut().zip(&d) {
            *rx *= dx.exp2() / z;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        gap,
    })
}

pub fn channel_info(ch: &Dmc, tol: f64) -> Result<ChannelInfo> {
    let (capacity, caid) = blahut_arimoto(ch, tol, BA_MAX_ITERATIONS)?;
    let (c1, c1_argmax) = max_pairwise_divergence(ch);
    Ok(ChannelInfo {
        capacity,
        caid,
        c1,
        c1_argmax,
    })
}

/// Largest D(W_x1 || W_x2) over ordered pairs x1 != x2. Near-ties (relative
/// 1e-12) keep the lexicographically smaller pair.
pub fn max_pairwise_divergence(ch: &Dmc) -> (f64, (usize, usize)) {
    let k = ch.input_size();
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0, 1);
    for x1 in 0..k {
        for x2 in 0..k {
            if x1 == x2 {
                continue;
            }
            let d = divergence_bits(ch.row(x1), ch.row(x2));
            let better = if best.is_finite() {
                d > best + 1e-12 * best.abs().max(1.0)
            } else {
                d > best
            };
            if better {
                best = d;
                arg = (x1, x2);
            }
        }
    }
    (best.max(0.0), arg)
}

/// Channel conditions behind the reliability lower bounds for 2-input channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssumptionReport {
    /// The capacity-achieving input distribution is (1/2, 1/2).
    pub uniform_caid: bool,
    /// C1 is attained at (x1, x2) = (0, 1).
    pub c1_at_zero_one: bool,
    /// Every transition probability is positive.
    pub strictly_positive: bool,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.uniform_caid && self.c1_at_zero_one && self.strictly_positive
    }
}

pub fn check_bound_assumptions(ch: &Dmc, tol: f64) -> Result<AssumptionReport> {
    if ch.input_size() != 2 {
        return Err(Error::UnsupportedChannel(format!(
            "the assumption check needs a 2-input channel, got {} inputs",
            ch.input_size()
        )));
    }
    let info = channel_info(ch, tol.min(DEFAULT_TOLERANCE))?;
    Ok(AssumptionReport {
        uniform_caid: info.caid.iter().all(|&c| (c - 0.5).abs() <= tol),
        c1_at_zero_one: info.c1_argmax == (0, 1),
        strictly_positive: ch.is_strictly_positive(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // closed form 1 - h2(p)
    fn bsc_capacity(p: f64) -> f64 {
        1.0 - binary_entropy(p)
    }

    #[test]
    fn make_bsc_rows() {
        let ch = Dmc::bsc(0.02).unwrap();
        assert_eq!(ch.row(0), &[0.98, 0.02]);
        assert_eq!(ch.row(1), &[0.02, 0.98]);
        let ch = Dmc::bsc(0.5).unwrap();
        assert_eq!(ch.row(0), &[0.5, 0.5]);
        assert_eq!(ch.row(1), &[0.5, 0.5]);
        let ch = Dmc::bsc(0.9).unwrap();
        assert_abs_diff_eq!(ch.prob(0, 0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.prob(1, 0), 0.9, epsilon = 1e-15);
    }

    #[test]
    fn make_bsc_rejects_degenerate_crossover() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(Dmc::bsc(p).is_err(), "p = {p}");
        }
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(Dmc::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(Dmc::new(vec![vec![1.2, -0.2], vec![0.5, 0.5]]).is_err());
        assert!(Dmc::new(vec![vec![1.0]]).is_err());
    }

    #[test]
    fn noiseless_row_always_maps_to_itself() {
        let ch = Dmc::noiseless(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert_eq!(ch.sample_output(0, &mut rng), 0);
            assert_eq!(ch.sample_output(1, &mut rng), 1);
        }
        assert!(!ch.is_strictly_positive());
    }

    #[test]
    fn sample_frequency_matches_row() {
        let ch = Dmc::bsc(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 100_000;
        let zeros = (0..draws)
            .filter(|_| ch.sample_output(1, &mut rng) == 0)
            .count();
        assert_abs_diff_eq!(zeros as f64 / draws as f64, 0.1, epsilon = 0.01);
    }

    #[test]
    fn sample_is_deterministic_per_seed() {
        let ch = Dmc::new(vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.3, 0.1]]).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..50)
                .map(|i| ch.sample_output(i % 2, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn chi_square_sanity_on_three_outputs() {
        let row = [0.2, 0.3, 0.5];
        let ch = Dmc::new(vec![row.to_vec(), vec![0.6, 0.3, 0.1]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..m {
            counts[ch.sample_output(0, &mut rng)] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(row)
            .map(|(&c, p)| {
                let e = p * m as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 2 degrees of freedom, 0.999 quantile is 13.8
        assert!(chi2 < 13.8, "chi2 = {chi2}");
    }

    #[test]
    fn bsc_0_02_information() {
        let info = channel_info(&Dmc::bsc(0.02).unwrap(), DEFAULT_TOLERANCE).unwrap();
        assert_abs_diff_eq!(info.capacity, bsc_capacity(0.02), epsilon = 1e-8);
        assert_abs_diff_eq!(info.capacity, 0.858556, epsilon = 1e-5);
        assert_abs_diff_eq!(info.caid[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(info.caid[1], 0.5, epsilon = 1e-10);
        let closed = (1.0 - 2.0 * 0.02) * (0.98f64 / 0.02).log2();
        let summed = 0.98 * (0.98f64 / 0.02).log2() + 0.02 * (0.02f64 / 0.98).log2();
        assert_abs_diff_eq!(closed, summed, epsilon = 1e-12);
        assert_abs_diff_eq!(info.c1, closed, epsilon = 1e-10);
        assert_abs_diff_eq!(info.c1, 5.39013, epsilon = 1e-5);
        assert_eq!(info.c1_argmax, (0, 1));
    }

    #[test]
    fn useless_channel_has_zero_capacity() {
        let info = channel_info(&Dmc::bsc(0.5).unwrap(), DEFAULT_TOLERANCE).unwrap();
        assert_abs_diff_eq!(info.capacity, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(info.c1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn capacity_grid_matches_closed_form() {
        for k in 1..50 {
            let p = k as f64 / 100.0;
            let ch = Dmc::bsc(p).unwrap();
            let info = channel_info(&ch, DEFAULT_TOLERANCE).unwrap();
            assert_abs_diff_eq!(info.capacity, bsc_capacity(p), epsilon = 1e-8);
            let closed = (1.0 - 2.0 * p) * ((1.0 - p) / p).log2();
            assert_abs_diff_eq!(info.c1, closed, epsilon = 1e-10);
        }
    }

    #[test]
    fn z_like_channel_capacity() {
        // Asymmetric channel; check BA against a brute-force maximisation of I(X;Y).
        let ch = Dmc::new(vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        let info = channel_info(&ch, DEFAULT_TOLERANCE).unwrap();
        let mutual = |a: f64| {
            let r = [a, 1.0 - a];
            let out: Vec<f64> = (0..2)
                .map(|y| r[0] * ch.prob(0, y) + r[1] * ch.prob(1, y))
                .collect();
            r[0] * divergence_bits(ch.row(0), &out) + r[1] * divergence_bits(ch.row(1), &out)
        };
        let (mut best, mut best_a) = (0.0, 0.0);
        for i in 0..=100_000 {
            let a = i as f64 / 100_000.0;
            let v = mutual(a);
            if v > best {
                best = v;
                best_a = a;
            }
        }
        assert_abs_diff_eq!(info.capacity, best, epsilon = 1e-9);
        assert_abs_diff_eq!(info.caid[0], best_a, epsilon = 1e-4);
        assert!((info.caid[0] - 0.5).abs() > 1e-3);
    }

    #[test]
    fn assumption_report() {
        let bsc = Dmc::bsc(0.02).unwrap();
        let report = check_bound_assumptions(&bsc, 1e-6).unwrap();
        assert_eq!(
            report,
            AssumptionReport {
                uniform_caid: true,
                c1_at_zero_one: true,
                strictly_positive: true
            }
        );
        let skew = Dmc::new(vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        assert!(!check_bound_assumptions(&skew, 1e-6).unwrap().uniform_caid);
        let zero = Dmc::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(!check_bound_assumptions(&zero, 1e-6).unwrap().strictly_positive);
        let ternary = Dmc::new(vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            check_bound_assumptions(&ternary, 1e-6),
            Err(Error::UnsupportedChannel(_))
        ));
    }

    #[test]
    fn parse_channel_specs() {
        let a: Dmc = "bsc:0.02".parse().unwrap();
        let b: Dmc = "bsc 0.02".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bsc_crossover(), Some(0.02));
        let m: Dmc = "matrix:0.9,0.1;0.4,0.6".parse().unwrap();
        assert_eq!(m.row(1), &[0.4, 0.6]);
        assert_eq!(m.bsc_crossover(), None);
        assert!("awgn:1".parse::<Dmc>().is_err());
        assert!("bsc:0".parse::<Dmc>().is_err());
        let round: Dmc = a.to_string().parse().unwrap();
        assert_eq!(round, a);
    }
}

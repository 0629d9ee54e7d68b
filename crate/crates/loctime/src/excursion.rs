//! Excursion decomposition, return times, directional local times, and the
//! large/small excursion splice of two independent walks.

use crate::walk::StepSequence;
use crate::{Error, Result};
use std::io::Write;

/// Times of returns to zero. `rho[i-1]` is the i-th return; `rho_plus`
/// holds the endpoints of upward zero-excursions (a subsequence of `rho`).
#[derive(Clone, Debug, Default)]
pub struct ReturnTimes {
    pub rho: Vec<u64>,
    pub rho_plus: Vec<u64>,
}

/// All zeros of the path in (0, up_to], in order, with the upward ones
/// marked. Possibly empty.
pub fn return_times(path: &StepSequence, up_to: u64) -> ReturnTimes {
    let up_to = up_to.min(path.len());
    let mut out = ReturnTimes::default();
    let mut s = 0i64;
    let mut first_step_up = false;
    for (i, x) in path.steps().enumerate() {
        let t = i as u64 + 1;
        if t > up_to {
            break;
        }
        if s == 0 {
            first_step_up = x == 1;
        }
        s += x as i64;
        if s == 0 {
            out.rho.push(t);
            if first_step_up {
                out.rho_plus.push(t);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Upward,
    Downward,
}

/// Maximal segment with `S_start = S_end = level` and `S_i != level`
/// strictly inside, signed by its first step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Excursion {
    pub start: u64,
    pub end: u64,
    pub sign: Sign,
}

impl Excursion {
    pub fn length(&self) -> u64 {
        self.end - self.start
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExcursionList {
    pub level: i64,
    pub excursions: Vec<Excursion>,
}

impl ExcursionList {
    /// Rows `start,end,sign,length`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "start,end,sign,length")?;
        for e in &self.excursions {
            writeln!(
                w,
                "{},{},{},{}",
                e.start,
                e.end,
                match e.sign {
                    Sign::Upward => "up",
                    Sign::Downward => "down",
                },
                e.length()
            )?;
        }
        Ok(())
    }
}

/// Completed excursions away from `level`, in path order; an incomplete
/// trailing excursion is excluded. For `level = 0` the decomposition starts
/// at time 0; for other levels it starts at the first visit.
pub fn classify_excursions(path: &StepSequence, level: i64) -> ExcursionList {
    let mut list = ExcursionList {
        level,
        excursions: Vec::new(),
    };
    let mut s = 0i64;
    let mut last_visit: Option<u64> = if level == 0 { Some(0) } else { None };
    let mut first_step_up = false;
    for (i, x) in path.steps().enumerate() {
        let t = i as u64 + 1;
        if s == level {
            first_step_up = x == 1;
        }
        s += x as i64;
        if s == level {
            if let Some(a) = last_visit {
                list.excursions.push(Excursion {
                    start: a,
                    end: t,
                    sign: if first_step_up {
                        Sign::Upward
                    } else {
                        Sign::Downward
                    },
                });
            }
            last_visit = Some(t);
        }
    }
    list
}

/// Directional excursion counts away from a level up to time n.
///
/// `up`/`down` count completed excursions (one ending exactly at `n`
/// included). The `*_started` fields count excursions by their first step
/// off the level instead; at upward-return times those are what the
/// branching identities consume (a walk sitting at zero always has one
/// unfinished downward excursion away from each positive level it has
/// visited, so completion counting there undercounts by exactly that one).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DirectionalLocalTime {
    pub level: i64,
    pub time: u64,
    pub up: u64,
    pub down: u64,
    pub up_started: u64,
    pub down_started: u64,
}

pub fn directional_counts(path: &StepSequence, level: i64, n: u64) -> DirectionalLocalTime {
    assert!(n <= path.len(), "directional_counts: n beyond path length");
    let mut out = DirectionalLocalTime {
        level,
        time: n,
        ..Default::default()
    };
    let mut s = 0i64;
    let mut visited = level == 0;
    let mut above = false;
    for (i, x) in path.steps().enumerate() {
        if i as u64 >= n {
            break;
        }
        if s == level {
            if x == 1 {
                out.up_started += 1;
                above = true;
            } else {
                out.down_started += 1;
                above = false;
            }
        }
        s += x as i64;
        if s == level {
            if visited {
                if above {
                    out.up += 1;
                } else {
                    out.down += 1;
                }
            }
            visited = true;
        }
    }
    out
}

/// Dyadic block layout for the excursion splice: block l covers excursion
/// indices (N_{l-1}, N_l] with N_l = 2^l, and an excursion in block l is
/// large when its length strictly exceeds r_l^{4/3}, r_l = N_l - N_{l-1}.
#[derive(Clone, Copy, Debug)]
pub struct BlockSchedule {
    pub levels: u32,
}

impl BlockSchedule {
    pub fn new(levels: u32) -> Self {
        assert!(levels >= 1 && levels < 63);
        Self { levels }
    }

    pub fn n_at(&self, l: u32) -> u64 {
        if l == 0 {
            0
        } else {
            1u64 << l
        }
    }

    /// Block width r_l = N_l - N_{l-1} (2 for l = 1, else 2^{l-1}).
    pub fn width(&self, l: u32) -> u64 {
        self.n_at(l) - self.n_at(l - 1)
    }

    pub fn total_excursions(&self) -> u64 {
        self.n_at(self.levels)
    }

    /// Large-excursion threshold for block l, compared with strict `>`.
    pub fn threshold(&self, l: u32) -> f64 {
        (self.width(l) as f64).powf(4.0 / 3.0)
    }

    pub fn is_large(&self, l: u32, length: u64) -> bool {
        length as f64 > self.threshold(l)
    }
}

fn zero_excursion_bounds(path: &StepSequence, count: u64) -> Result<Vec<(u64, u64)>> {
    let rho = return_times(path, path.len()).rho;
    if (rho.len() as u64) < count {
        return Err(Error::InsufficientExcursions {
            required: count,
            available: rho.len() as u64,
        });
    }
    let mut bounds = Vec::with_capacity(count as usize);
    let mut prev = 0u64;
    for &r in rho.iter().take(count as usize) {
        bounds.push((prev, r));
        prev = r;
    }
    Ok(bounds)
}

fn copy_segment(src: &StepSequence, from: u64, to: u64, dst: &mut StepSequence) {
    for i in from..to {
        dst.push(src.step(i));
    }
}

/// Splice two walks block by block: large excursions of `walk1` stay in
/// place, its small excursions are replaced by `walk2`'s small excursions
/// from the same block in order, and when `walk2` runs short the remaining
/// small excursions of `walk1` are kept. The output stops at the end of
/// block `schedule.levels`.
pub fn splice_walks(
    walk1: &StepSequence,
    walk2: &StepSequence,
    schedule: &BlockSchedule,
) -> Result<StepSequence> {
    let total = schedule.total_excursions();
    let exc1 = zero_excursion_bounds(walk1, total)?;
    let exc2 = zero_excursion_bounds(walk2, total)?;
    let mut out = StepSequence::new();
    for l in 1..=schedule.levels {
        let lo = schedule.n_at(l - 1) as usize;
        let hi = schedule.n_at(l) as usize;
        let mut donors = exc2[lo..hi]
            .iter()
            .filter(|(a, b)| !schedule.is_large(l, b - a))
            .copied();
        for &(a, b) in &exc1[lo..hi] {
            if schedule.is_large(l, b - a) {
                copy_segment(walk1, a, b, &mut out);
            } else if let Some((c, d)) = donors.next() {
                copy_segment(walk2, c, d, &mut out);
            } else {
                copy_segment(walk1, a, b, &mut out);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::walk::local_time;

    fn seq(steps: &[i8]) -> StepSequence {
        StepSequence::from_steps(steps.iter().copied())
    }

    #[test]
    fn return_times_examples() {
        let p = seq(&[1, -1, 1, -1]);
        let rt = return_times(&p, 4);
        assert_eq!(rt.rho, vec![2, 4]);
        assert_eq!(rt.rho_plus, vec![2, 4]);

        let q = seq(&[-1, 1]);
        let rt = return_times(&q, 2);
        assert_eq!(rt.rho, vec![2]);
        assert!(rt.rho_plus.is_empty());
    }

    #[test]
    fn rho_one_law_matches_enumeration() {
        // P(rho_1 = 2) = 1/2, P(rho_1 = 4) = 1/8 by enumerating length-2 and
        // length-4 paths; Monte Carlo with a 99% binomial band.
        let reps = 200_000u32;
        let mut hits2 = 0u32;
        let mut hits4 = 0u32;
        let root = RngStream::new(11).child("rho1");
        for rep in 0..reps {
            let w = StepSequence::simulate(4, &root.child(rep));
            let rho = return_times(&w, 4).rho;
            match rho.first() {
                Some(2) => hits2 += 1,
                Some(4) => hits4 += 1,
                _ => {}
            }
        }
        let n = reps as f64;
        for (hits, p) in [(hits2, 0.5f64), (hits4, 0.125)] {
            let phat = hits as f64 / n;
            let band = 2.576 * (p * (1.0 - p) / n).sqrt();
            assert!((phat - p).abs() < band, "phat={} p={}", phat, p);
        }
    }

    #[test]
    fn classify_excursion_examples() {
        let q = seq(&[1, 1, -1, -1]);
        let at0 = classify_excursions(&q, 0);
        assert_eq!(at0.excursions.len(), 1);
        assert_eq!(
            at0.excursions[0],
            Excursion {
                start: 0,
                end: 4,
                sign: Sign::Upward
            }
        );
        let at1 = classify_excursions(&q, 1);
        assert_eq!(at1.excursions.len(), 1);
        assert_eq!(
            at1.excursions[0],
            Excursion {
                start: 1,
                end: 3,
                sign: Sign::Upward
            }
        );
    }

    #[test]
    fn excursions_partition_the_zero_set() {
        let stream = RngStream::new(5).child("part");
        let w = StepSequence::simulate(4096, &stream);
        let list = classify_excursions(&w, 0);
        let rt = return_times(&w, w.len());
        // endpoints of classified excursions = all zeros, in order
        let ends: Vec<u64> = list.excursions.iter().map(|e| e.end).collect();
        assert_eq!(ends, rt.rho);
        let mut prev = 0;
        for e in &list.excursions {
            assert_eq!(e.start, prev);
            prev = e.end;
        }
    }

    #[test]
    fn directional_examples() {
        let p = seq(&[1, -1, 1, -1]);
        let d = directional_counts(&p, 0, 4);
        assert_eq!((d.up, d.down), (2, 0));
        let d0 = directional_counts(&p, 0, 0);
        assert_eq!((d0.up, d0.down), (0, 0));
        // single upward zero-excursion (+1,-1): at rho_1+ = 2, identity
        // convention: one downward excursion away from level 1 has started.
        let e = directional_counts(&seq(&[1, -1]), 1, 2);
        assert_eq!(e.down_started, 1);
        assert_eq!(directional_counts(&seq(&[1, -1]), 0, 2).up, 1);
    }

    #[test]
    fn directional_identity_on_random_paths() {
        // xi(k, rho_N+, down-started) = xi(k-1, rho_N+, up-completed),
        // exactly, for every path and level.
        let root = RngStream::new(21).child("dir");
        for rep in 0..40 {
            let w = StepSequence::simulate(2000, &root.child(rep));
            let rt = return_times(&w, w.len());
            if rt.rho_plus.is_empty() {
                continue;
            }
            let t = *rt.rho_plus.last().unwrap();
            for k in 1..=6i64 {
                let dk = directional_counts(&w, k, t);
                let dk1 = directional_counts(&w, k - 1, t);
                assert_eq!(dk.down_started, dk1.up, "k={} t={}", k, t);
            }
        }
    }

    #[test]
    fn rho_plus_counts_upward_excursions() {
        let stream = RngStream::new(8).child("rhoplus");
        let w = StepSequence::simulate(4096, &stream);
        let rt = return_times(&w, w.len());
        let d = directional_counts(&w, 0, w.len());
        // completed upward zero-excursions = |rho_plus|
        assert_eq!(rt.rho_plus.len() as u64, d.up);
        // xi(0, rho_N) = N for every N
        for (i, &r) in rt.rho.iter().enumerate() {
            assert_eq!(local_time(&w, 0, r), i as u64 + 1);
        }
    }

    #[test]
    fn block_schedule_invariants() {
        let sch = BlockSchedule::new(6);
        assert_eq!(sch.total_excursions(), 64);
        let mut sum = 0;
        for l in 1..=6 {
            assert_eq!(sch.n_at(l) - sch.n_at(l - 1), sch.width(l));
            sum += sch.width(l);
            assert!(sch.threshold(l) > 0.0);
            if l > 1 {
                assert!(sch.threshold(l) >= sch.threshold(l - 1));
            }
        }
        assert_eq!(sum, 64);
        // strict comparison: length equal to the threshold is small
        assert!(!sch.is_large(3, 4u64.pow(4) / 64)); // 4^{4/3} ~ 6.35; 4 is small
        assert!(sch.is_large(3, 7));
    }

    #[test]
    fn identity_splice_is_verbatim_prefix() {
        let root = RngStream::new(17).child("splice-id");
        // keep drawing until the walk has 16 zero-excursions
        let mut n = 1 << 12;
        let (w, sch) = loop {
            let w = StepSequence::simulate(n, &root.child(n));
            let sch = BlockSchedule::new(4);
            if return_times(&w, w.len()).rho.len() as u64 >= sch.total_excursions() {
                break (w, sch);
            }
            n *= 2;
        };
        let spliced = splice_walks(&w, &w, &sch).unwrap();
        let rho16 = return_times(&w, w.len()).rho[15];
        assert_eq!(spliced.len(), rho16);
        assert!(spliced.steps().zip(w.steps()).all(|(a, b)| a == b));
    }

    #[test]
    fn splice_preserves_count_and_large_excursions() {
        let root = RngStream::new(29).child("splice");
        let sch = BlockSchedule::new(5);
        let mut walks = Vec::new();
        let mut rep = 0u32;
        while walks.len() < 2 {
            let w = StepSequence::simulate(1 << 14, &root.child(rep));
            if return_times(&w, w.len()).rho.len() as u64 >= sch.total_excursions() {
                walks.push(w);
            }
            rep += 1;
        }
        let spliced = splice_walks(&walks[0], &walks[1], &sch).unwrap();
        let out_exc = classify_excursions(&spliced, 0);
        assert_eq!(out_exc.excursions.len() as u64, sch.total_excursions());
        // every large output excursion appears identically in walk1
        let exc1 = classify_excursions(&walks[0], 0);
        for l in 1..=sch.levels {
            let (lo, hi) = (sch.n_at(l - 1) as usize, sch.n_at(l) as usize);
            for (eo, e1) in out_exc.excursions[lo..hi]
                .iter()
                .zip(&exc1.excursions[lo..hi])
            {
                if sch.is_large(l, eo.length()) {
                    assert_eq!(eo.length(), e1.length());
                    let a: Vec<i8> = (eo.start..eo.end).map(|i| spliced.step(i)).collect();
                    let b: Vec<i8> = (e1.start..e1.end).map(|i| walks[0].step(i)).collect();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn splice_insufficient_excursions_errors() {
        let w1 = seq(&[1, -1, 1, -1]);
        let w2 = seq(&[1, -1, -1, 1]);
        let err = splice_walks(&w1, &w2, &BlockSchedule::new(3)).unwrap_err();
        assert!(matches!(err, Error::InsufficientExcursions { .. }));
    }

    #[test]
    fn csv_export_shape() {
        let q = seq(&[1, 1, -1, -1, -1, 1]);
        let list = classify_excursions(&q, 0);
        let mut buf = Vec::new();
        list.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("start,end,sign,length"));
        assert_eq!(lines.next(), Some("0,4,up,4"));
        assert_eq!(lines.next(), Some("4,6,down,2"));
    }
}

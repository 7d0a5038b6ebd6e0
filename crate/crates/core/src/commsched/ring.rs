//! Ring collectives over the intra-orbit ring.
//!
//! Satellites are numbered `1..=N` and always send to their successor
//! `n % N + 1`. In global round `r` satellite `n` sends chunk
//! `((n - r) mod N) + 1`; the scatter-reduce phase uses rounds `1..N` and the
//! gather phase continues with rounds `N..2N-1`.

use std::ops::Range;

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingPhase {
    ScatterReduce,
    Gather,
    /// Concatenating broadcast: blocks are forwarded, never reduced.
    AllGather,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingTransfer {
    pub sender: usize,
    pub receiver: usize,
    pub chunk: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingRound {
    /// Global round number used in the chunk law.
    pub round: usize,
    pub transfers: Vec<RingTransfer>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingSchedule {
    pub participants: usize,
    pub phase: RingPhase,
    pub rounds: Vec<RingRound>,
}

/// `((n - r) mod N) + 1` for 1-based `n` and any round `r`.
pub fn chunk_index(n: usize, round: usize, participants: usize) -> usize {
    let m = participants as i64;
    ((n as i64 - round as i64).rem_euclid(m)) as usize + 1
}

fn rounds(participants: usize, first_round: usize) -> Vec<RingRound> {
    if participants <= 1 {
        return Vec::new();
    }
    (first_round..first_round + participants - 1)
        .map(|round| {
            // the chunk law advances by one per sender, so only the first needs the modulus
            let mut chunk = chunk_index(1, round, participants);
            let transfers = (1..=participants)
                .map(|n| {
                    let t = RingTransfer { sender: n, receiver: if n == participants { 1 } else { n + 1 }, chunk };
                    chunk = if chunk == participants { 1 } else { chunk + 1 };
                    t
                })
                .collect();
            RingRound { round, transfers }
        })
        .collect()
}

/// Scatter-reduce and gather schedules for `participants` satellites.
pub fn ring_allreduce_schedule(participants: usize) -> (RingSchedule, RingSchedule) {
    (
        RingSchedule { participants, phase: RingPhase::ScatterReduce, rounds: rounds(participants, 1) },
        RingSchedule { participants, phase: RingPhase::Gather, rounds: rounds(participants, participants) },
    )
}

/// Concatenating broadcast: after `N - 1` rounds every satellite holds all
/// `N` blocks.
pub fn ring_broadcast_schedule(participants: usize) -> RingSchedule {
    RingSchedule { participants, phase: RingPhase::AllGather, rounds: rounds(participants, 1) }
}

/// Index range of chunk `chunk` (1-based) when `len` elements are split into
/// `parts` near-equal chunks.
pub fn chunk_range(len: usize, parts: usize, chunk: usize) -> Range<usize> {
    let i = chunk - 1;
    let base = len / parts;
    let extra = len % parts;
    let start = i * base + i.min(extra);
    let size = base + usize::from(i < extra);
    start..start + size
}

/// Executes scatter-reduce then gather on `data` (one vector per satellite,
/// all the same length). Afterwards every vector holds the elementwise sum.
pub fn execute_allreduce(data: &mut [Vec<f64>]) -> Result<(), SimError> {
    let participants = data.len();
    if participants == 0 {
        return Ok(());
    }
    let len = data[0].len();
    if data.iter().any(|d| d.len() != len) {
        return Err(SimError::InvalidInput("all participants must contribute vectors of equal length".into()));
    }
    let (scatter, gather) = ring_allreduce_schedule(participants);
    let ranges: Vec<Range<usize>> = (1..=participants).map(|c| chunk_range(len, participants, c)).collect();
    let mut sent: Vec<f64> = Vec::with_capacity(len + participants);
    for (schedule, reduce) in [(&scatter, true), (&gather, false)] {
        for round in &schedule.rounds {
            // all sends of a round happen simultaneously, so snapshot them first
            sent.clear();
            for t in &round.transfers {
                sent.extend_from_slice(&data[t.sender - 1][ranges[t.chunk - 1].clone()]);
            }
            let mut offset = 0;
            for t in &round.transfers {
                let dst = &mut data[t.receiver - 1][ranges[t.chunk - 1].clone()];
                let payload = &sent[offset..offset + dst.len()];
                offset += dst.len();
                if reduce {
                    dst.iter_mut().zip(payload).for_each(|(d, p)| *d += p);
                } else {
                    dst.copy_from_slice(payload);
                }
            }
        }
    }
    Ok(())
}

/// Executes the concatenating broadcast. Returns, for each satellite, the
/// blocks it holds indexed by origin (`None` if never received).
pub fn execute_allgather<T: Clone>(blocks: &[T]) -> Vec<Vec<Option<T>>> {
    let participants = blocks.len();
    let mut held: Vec<Vec<Option<T>>> = (0..participants)
        .map(|n| (0..participants).map(|b| (b == n).then(|| blocks[b].clone())).collect())
        .collect();
    for round in ring_broadcast_schedule(participants).rounds {
        let sends: Vec<(usize, usize, Option<T>)> = round
            .transfers
            .iter()
            .map(|t| (t.receiver - 1, t.chunk - 1, held[t.sender - 1][t.chunk - 1].clone()))
            .collect();
        for (dst, chunk, payload) in sends {
            if payload.is_some() {
                held[dst][chunk] = payload;
            }
        }
    }
    held
}

fn check_rate(rate_bps: f64) -> Result<(), SimError> {
    if !(rate_bps > 0.0) {
        return Err(SimError::InvalidInput(format!("link rate must be positive, got {rate_bps}")));
    }
    Ok(())
}

/// `2 (N - 1) size / (N r)`; zero for a single satellite.
pub fn ring_allreduce_time(participants: usize, size_bits: f64, rate_bps: f64) -> Result<f64, SimError> {
    check_rate(rate_bps)?;
    if participants <= 1 {
        return Ok(0.0);
    }
    let n = participants as f64;
    Ok(2.0 * (n - 1.0) * size_bits / (n * rate_bps))
}

/// `(N - 1) c / r` for a per-satellite payload of `c` bits.
pub fn ring_broadcast_time(participants: usize, payload_bits: f64, rate_bps: f64) -> Result<f64, SimError> {
    check_rate(rate_bps)?;
    if participants <= 1 {
        return Ok(0.0);
    }
    Ok((participants - 1) as f64 * payload_bits / rate_bps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_satellites_first_round() {
        let (scatter, gather) = ring_allreduce_schedule(3);
        let chunks: Vec<usize> = scatter.rounds[0].transfers.iter().map(|t| t.chunk).collect();
        assert_eq!(chunks, vec![1, 2, 3]);
        assert_eq!(scatter.rounds.len(), 2);
        assert_eq!(gather.rounds.len(), 2);
        assert_eq!(scatter.rounds[0].transfers[2].receiver, 1);
    }

    #[test]
    fn single_satellite_is_empty() {
        let (s, g) = ring_allreduce_schedule(1);
        assert!(s.rounds.is_empty() && g.rounds.is_empty());
        assert_eq!(ring_allreduce_time(1, 1e9, 1e9).unwrap(), 0.0);
        assert_eq!(ring_broadcast_time(1, 1e9, 1e9).unwrap(), 0.0);
        let mut data = vec![vec![1.0, 2.0]];
        execute_allreduce(&mut data).unwrap();
        assert_eq!(data, vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn every_chunk_visits_every_satellite_once_per_phase() {
        for n in 2..12 {
            let (scatter, gather) = ring_allreduce_schedule(n);
            for sched in [&scatter, &gather] {
                for chunk in 1..=n {
                    let mut senders: Vec<usize> = sched
                        .rounds
                        .iter()
                        .flat_map(|r| r.transfers.iter().filter(|t| t.chunk == chunk).map(|t| t.sender))
                        .collect();
                    senders.sort_unstable();
                    senders.dedup();
                    assert_eq!(senders.len(), n - 1);
                }
            }
        }
    }

    #[test]
    fn five_way_sum() {
        let mut data: Vec<Vec<f64>> = (0..5).map(|i| (0..7).map(|j| (i * 10 + j) as f64).collect()).collect();
        let expect: Vec<f64> = (0..7).map(|j| (0..5).map(|i| (i * 10 + j) as f64).sum()).collect();
        execute_allreduce(&mut data).unwrap();
        for d in &data {
            assert_eq!(d, &expect);
        }
    }

    #[test]
    fn allgather_delivers_all_blocks() {
        let blocks: Vec<String> = (1..=6).map(|i| format!("E{i}")).collect();
        let held = execute_allgather(&blocks);
        for sat in held {
            let got: Vec<String> = sat.into_iter().map(Option::unwrap).collect();
            assert_eq!(got, blocks);
        }
    }

    #[test]
    fn latency_formulas() {
        let t = 7.5;
        let three = ring_allreduce_time(3, t * 1e9, 1e9).unwrap();
        assert_eq!(three, 2.0 * 2.0 * (1.0 / 3.0) * t);
        let head = ring_allreduce_time(20, 35.2e6, 1e9).unwrap();
        assert!((head - 0.06688).abs() < 1e-9);
        let bc = ring_broadcast_time(20, 1.6e8, 1e10).unwrap();
        assert!((bc - 0.304).abs() < 1e-12);
        assert!(ring_allreduce_time(3, 1.0, 0.0).is_err());
        assert!(ring_broadcast_time(3, 1.0, 0.0).is_err());
        let big = ring_allreduce_time(1_000_000, 1e9, 1e9).unwrap();
        assert!((big - 2.0).abs() < 1e-5);
    }

    #[test]
    fn chunk_ranges_tile_the_vector() {
        for len in 0..20 {
            for parts in 1..8 {
                let mut next = 0;
                for c in 1..=parts {
                    let r = chunk_range(len, parts, c);
                    assert_eq!(r.start, next);
                    next = r.end;
                }
                assert_eq!(next, len);
            }
        }
    }
}

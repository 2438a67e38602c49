//! Rent-exponent extraction by recursive min-cut bisection.
//!
//! Each block is split by a graph-growing initial partition refined with
//! Fiduccia-Mattheyses passes (best of several starts). For every block the
//! number of nets with pins both inside and outside it is counted against
//! the whole netlist. Per-level means are fitted with least squares on
//! `ln E = ln A + r ln G`.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelStat {
    pub depth: usize,
    pub blocks: usize,
    pub mean_size: f64,
    pub mean_terminals: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RentFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub levels: Vec<LevelStat>,
}

/// Fits `E = A * G^r` over bisection levels whose mean block size lies in
/// `[min_size, max_size]`.
pub fn fit_rent(
    num_cells: usize,
    nets: &[Vec<usize>],
    seed: u64,
    min_size: f64,
    max_size: f64,
) -> RentFit {
    let levels = bisection_levels(num_cells, nets, seed);
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.mean_size >= min_size && l.mean_size <= max_size && l.mean_terminals > 0.0)
        .map(|l| (l.mean_size.ln(), l.mean_terminals.ln()))
        .collect();
    let (slope, intercept) = least_squares(&pts);
    RentFit {
        exponent: slope,
        coefficient: intercept.exp(),
        levels,
    }
}

pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

/// Recursively bisects all cells down to single cells and reports the
/// mean block size and mean external net count at every depth below the
/// root.
pub fn bisection_levels(num_cells: usize, nets: &[Vec<usize>], seed: u64) -> Vec<LevelStat> {
    let mut cell_nets = vec![Vec::new(); num_cells];
    for (ni, net) in nets.iter().enumerate() {
        for &c in net {
            cell_nets[c].push(ni);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![(0..num_cells).collect()];
    let mut depth = 0;
    let mut stamp = vec![usize::MAX; nets.len()];
    let mut inside = vec![0usize; nets.len()];

    while frontier.iter().any(|b| b.len() > 1) {
        depth += 1;
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for block in &frontier {
            if block.len() < 2 {
                next.push(block.clone());
                continue;
            }
            let (a, b) = bisect(block, nets, &cell_nets, &mut rng);
            next.push(a);
            next.push(b);
        }
        frontier = next;

        let mut total_terms = 0usize;
        for (bi, block) in frontier.iter().enumerate() {
            let key = depth * 1_000_000_000 + bi;
            let mut external = 0;
            for &c in block {
                for &ni in &cell_nets[c] {
                    if stamp[ni] != key {
                        stamp[ni] = key;
                        inside[ni] = 0;
                    }
                    inside[ni] += 1;
                }
            }
            for &c in block {
                for &ni in &cell_nets[c] {
                    if stamp[ni] == key && inside[ni] > 0 {
                        if inside[ni] < nets[ni].len() {
                            external += 1;
                        }
                        inside[ni] = 0;
                    }
                }
            }
            total_terms += external;
        }
        let blocks = frontier.len();
        stats.push(LevelStat {
            depth,
            blocks,
            mean_size: num_cells as f64 / blocks as f64,
            mean_terminals: total_terms as f64 / blocks as f64,
        });
    }
    stats
}

const STARTS: usize = 12;

fn bisect(
    block: &[usize],
    nets: &[Vec<usize>],
    cell_nets: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let n = block.len();
    let mut local = std::collections::HashMap::with_capacity(n);
    for (i, &c) in block.iter().enumerate() {
        local.insert(c, i);
    }
    // nets with at least two pins in this block, in local indices
    let mut lnets: Vec<Vec<usize>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &c in block {
        for &ni in &cell_nets[c] {
            if seen.insert(ni) {
                let pins: Vec<usize> = nets[ni]
                    .iter()
                    .filter_map(|x| local.get(x).copied())
                    .collect();
                if pins.len() >= 2 {
                    lnets.push(pins);
                }
            }
        }
    }
    let mut lcell_nets = vec![Vec::new(); n];
    for (ni, pins) in lnets.iter().enumerate() {
        for &p in pins {
            lcell_nets[p].push(ni);
        }
    }

    let mut best: Option<(usize, Vec<u8>)> = None;
    for _ in 0..STARTS {
        let mut side = grow(n, &lnets, &lcell_nets, rng);
        fm_refine(&mut side, &lnets, &lcell_nets);
        let cut = cut_size(&side, &lnets);
        if best.as_ref().map_or(true, |(b, _)| cut < *b) {
            best = Some((cut, side));
        }
    }
    let side = best.unwrap().1;
    let mut a = Vec::with_capacity(n / 2 + 1);
    let mut b = Vec::with_capacity(n / 2 + 1);
    for (i, &c) in block.iter().enumerate() {
        if side[i] == 0 {
            a.push(c);
        } else {
            b.push(c);
        }
    }
    (a, b)
}

fn cut_size(side: &[u8], nets: &[Vec<usize>]) -> usize {
    nets.iter()
        .filter(|pins| {
            let s0 = side[pins[0]];
            pins.iter().any(|&p| side[p] != s0)
        })
        .count()
}

/// Breadth-first region growing from random seeds until half the block is
/// on side 0.
fn grow(n: usize, nets: &[Vec<usize>], cell_nets: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let half = n / 2;
    let mut side = vec![1u8; n];
    let mut taken = 0;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut q = VecDeque::new();
    let mut oi = 0;
    while taken < half {
        if q.is_empty() {
            while side[order[oi]] == 0 {
                oi += 1;
            }
            let s = order[oi];
            side[s] = 0;
            taken += 1;
            q.push_back(s);
            continue;
        }
        let c = q.pop_front().unwrap();
        let mut nbrs: Vec<usize> = cell_nets[c]
            .iter()
            .flat_map(|&ni| nets[ni].iter().copied())
            .collect();
        nbrs.shuffle(rng);
        for x in nbrs {
            if taken >= half {
                break;
            }
            if side[x] == 1 {
                side[x] = 0;
                taken += 1;
                q.push_back(x);
            }
        }
    }
    side
}

fn fm_refine(side: &mut [u8], nets: &[Vec<usize>], cell_nets: &[Vec<usize>]) {
    let n = side.len();
    let tol = n / 50;
    let lo = (n / 2).saturating_sub(tol).max(1);
    let hi = (n.div_ceil(2) + tol).min(n - 1);
    for _ in 0..20 {
        if !fm_pass(side, nets, cell_nets, lo, hi) {
            break;
        }
    }
}

fn fm_pass(
    side: &mut [u8],
    nets: &[Vec<usize>],
    cell_nets: &[Vec<usize>],
    lo: usize,
    hi: usize,
) -> bool {
    let n = side.len();
    let mut count = vec![[0i32; 2]; nets.len()];
    for (ni, pins) in nets.iter().enumerate() {
        for &p in pins {
            count[ni][side[p] as usize] += 1;
        }
    }
    let gain_of = |c: usize, side: &[u8], count: &[[i32; 2]]| -> i32 {
        let s = side[c] as usize;
        let mut g = 0;
        for &ni in &cell_nets[c] {
            if count[ni][s] == 1 {
                g += 1;
            }
            if count[ni][1 - s] == 0 {
                g -= 1;
            }
        }
        g
    };
    let mut gain: Vec<i32> = (0..n).map(|c| gain_of(c, side, &count)).collect();
    let mut heap: BTreeSet<(i32, usize)> = (0..n).map(|c| (-gain[c], c)).collect();
    let mut locked = vec![false; n];
    let mut size0 = side.iter().filter(|&&s| s == 0).count();

    let mut moves = Vec::new();
    let mut running = 0i32;
    let mut best = 0i32;
    let mut best_len = 0usize;

    loop {
        let pick = heap.iter().copied().find(|&(_, c)| {
            let new0 = if side[c] == 0 { size0 - 1 } else { size0 + 1 };
            new0 >= lo && new0 <= hi
        });
        let Some((ng, c)) = pick else { break };
        heap.remove(&(ng, c));
        locked[c] = true;
        let from = side[c] as usize;
        side[c] = 1 - side[c];
        if from == 0 {
            size0 -= 1;
        } else {
            size0 += 1;
        }
        for &ni in &cell_nets[c] {
            count[ni][from] -= 1;
            count[ni][1 - from] += 1;
        }
        running += -ng;
        moves.push(c);
        if running > best {
            best = running;
            best_len = moves.len();
        }
        for &ni in &cell_nets[c] {
            for &x in &nets[ni] {
                if locked[x] {
                    continue;
                }
                let g = gain_of(x, side, &count);
                if g != gain[x] {
                    heap.remove(&(-gain[x], x));
                    gain[x] = g;
                    heap.insert((-g, x));
                }
            }
        }
    }
    for &c in moves[best_len..].iter().rev() {
        side[c] = 1 - side[c];
    }
    best > 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_recovers_line() {
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 0.75 * i as f64 + 1.0)).collect();
        let (m, b) = least_squares(&pts);
        assert!((m - 0.75).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_cliques_split_cleanly() {
        // two 8-cell rings joined by a single net
        let mut nets = Vec::new();
        for base in [0, 8] {
            for i in 0..8 {
                nets.push(vec![base + i, base + (i + 1) % 8]);
            }
        }
        nets.push(vec![0, 8]);
        let levels = bisection_levels(16, &nets, 3);
        assert_eq!(levels[0].blocks, 2);
        assert_eq!(levels[0].mean_terminals, 1.0);
    }
}

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{CellInstance, MasterDecl, Net, Netlist, Terminal};

/// Largest net arity the generator emits.
pub const MAX_NET_ARITY: usize = 16;
/// Mean of the (untruncated) net arity distribution.
pub const MEAN_NET_ARITY: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisParams {
    pub num_cells: usize,
    pub rent_exponent: f64,
    pub avg_pins_per_cell: f64,
    pub sequential_fraction: f64,
    pub seed: u64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            num_cells: 4096,
            rent_exponent: 0.75,
            avg_pins_per_cell: 3.0,
            sequential_fraction: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("num_cells = {0} is too small for Rent statistics (need at least 8)")]
    TooFewCells(usize),
    #[error("rent exponent {0} outside (0.5, 1.0)")]
    RentExponent(f64),
    #[error("average pins per cell {0} must be at least 2")]
    PinsPerCell(f64),
    #[error("sequential fraction {0} outside [0, 1]")]
    SequentialFraction(f64),
}

impl SynthesisParams {
    pub fn check(&self) -> Result<(), SynthError> {
        if self.num_cells < 8 {
            return Err(SynthError::TooFewCells(self.num_cells));
        }
        if !(self.rent_exponent > 0.5 && self.rent_exponent < 1.0) {
            return Err(SynthError::RentExponent(self.rent_exponent));
        }
        if !(self.avg_pins_per_cell >= 2.0) || !self.avg_pins_per_cell.is_finite() {
            return Err(SynthError::PinsPerCell(self.avg_pins_per_cell));
        }
        if !(0.0..=1.0).contains(&self.sequential_fraction) {
            return Err(SynthError::SequentialFraction(self.sequential_fraction));
        }
        Ok(())
    }
}

/// Net arity distribution for a block of `size` cells: geometric on
/// `2..=min(16, size)` with ratio 1/2, which has mean 3 before truncation.
fn arity_weights(size: usize) -> Vec<(usize, f64)> {
    let kmax = MAX_NET_ARITY.min(size);
    let p = 1.0 / (MEAN_NET_ARITY - 1.0);
    let mut w: Vec<(usize, f64)> = (2..=kmax)
        .map(|k| (k, (1.0 - p).powi(k as i32 - 2)))
        .collect();
    let total: f64 = w.iter().map(|(_, x)| x).sum();
    for (_, x) in &mut w {
        *x /= total;
    }
    w
}

const PICK_CHOICES: usize = 4;
const CLUSTER_SPREAD: usize = 4;

struct Builder<'a> {
    params: &'a SynthesisParams,
    rng: ChaCha8Rng,
    degree: Vec<u32>,
    /// Nets touching each hierarchy position.
    pos_nets: Vec<Vec<u32>>,
    nets: Vec<Vec<usize>>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl Builder<'_> {
    fn target(&self, size: usize) -> f64 {
        self.params.avg_pins_per_cell * (size as f64).powf(self.params.rent_exponent)
    }

    /// Number of existing nets with a terminal in `[lo, hi)`. Every such net
    /// was created by an enclosing block and so also has a terminal outside.
    fn external(&mut self, lo: usize, hi: usize) -> usize {
        self.epoch += 1;
        let mut count = 0;
        for p in lo..hi {
            for &ni in &self.pos_nets[p] {
                if self.stamp[ni as usize] != self.epoch {
                    self.stamp[ni as usize] = self.epoch;
                    count += 1;
                }
            }
        }
        count
    }

    /// Recursively bisects `[lo, hi)`, adding nets across each cut until
    /// both children's external net counts reach `A * size^r`.
    fn split(&mut self, lo: usize, hi: usize) {
        let size = hi - lo;
        if size < 2 {
            return;
        }
        let mid = lo + size / 2;
        let deficit_lo = self.target(mid - lo) - self.external(lo, mid) as f64;
        let deficit_hi = self.target(hi - mid) - self.external(mid, hi) as f64;
        let expected = ((deficit_lo + deficit_hi) / 2.0).max(0.0);

        let mut count = expected.floor() as usize;
        if self.rng.gen::<f64>() < expected.fract() {
            count += 1;
        }
        let weights = arity_weights(1 + (hi - mid));
        for _ in 0..count {
            let k = self.sample_arity(&weights);
            let members = self.make_net(lo, mid, hi, k);
            let ni = self.nets.len() as u32;
            for &m in &members {
                self.pos_nets[m].push(ni);
                self.degree[m] += 1;
            }
            self.nets.push(members);
        }
        self.stamp.resize(self.nets.len(), 0);

        self.split(lo, mid);
        self.split(mid, hi);
    }

    fn sample_arity(&mut self, weights: &[(usize, f64)]) -> usize {
        let mut u: f64 = self.rng.gen();
        for &(k, w) in weights {
            if u < w {
                return k;
            }
            u -= w;
        }
        weights.last().map(|&(k, _)| k).unwrap_or(2)
    }

    /// One terminal in one half and a tight cluster of `k - 1` terminals in
    /// the other: the cluster sits in the smallest enclosing sub-block that
    /// can hold it, so the net crosses as few lower cuts as possible.
    fn make_net(&mut self, lo: usize, mid: usize, hi: usize, k: usize) -> Vec<usize> {
        let cluster = k - 1;
        let lo_fits = mid - lo >= cluster;
        let cluster_in_hi = if lo_fits {
            self.rng.gen::<bool>()
        } else {
            true
        };
        let ((slo, shi), (clo, chi)) = if cluster_in_hi {
            ((lo, mid), (mid, hi))
        } else {
            ((mid, hi), (lo, mid))
        };

        let mut members = Vec::with_capacity(k);
        members.push(self.pick(slo, shi, &[]));
        let anchor = self.pick(clo, chi, &[]);
        let (mut nlo, mut nhi) = (clo, chi);
        loop {
            let nmid = nlo + (nhi - nlo) / 2;
            let (a, b) = if anchor < nmid {
                (nlo, nmid)
            } else {
                (nmid, nhi)
            };
            if b - a < cluster * CLUSTER_SPREAD || b - a == nhi - nlo {
                break;
            }
            nlo = a;
            nhi = b;
        }
        members.push(anchor);
        while members.len() < k {
            let m = self.pick(nlo, nhi, &members);
            members.push(m);
        }
        members
    }

    /// The least-loaded of `PICK_CHOICES` uniform draws from `[lo, hi)`
    /// that is not in `taken`.
    fn pick(&mut self, lo: usize, hi: usize, taken: &[usize]) -> usize {
        loop {
            let mut best: Option<usize> = None;
            for _ in 0..PICK_CHOICES {
                let c = self.rng.gen_range(lo..hi);
                if taken.contains(&c) {
                    continue;
                }
                if best.map_or(true, |b| self.degree[c] < self.degree[b]) {
                    best = Some(c);
                }
            }
            if let Some(c) = best {
                return c;
            }
        }
    }
}

/// Generates a netlist whose recursive-bisection terminal counts follow
/// Rent's rule `E = A * G^r`.
///
/// Cells are arranged in a balanced bisection hierarchy. Walking it top
/// down, each block receives just enough new nets across its cut that the
/// number of nets leaving each child approaches `A * size^r`. Net arity is
/// geometric with mean 3 (truncated at 16 and at the block size). Every
/// cell drives at most one net through output pin `Y`; inputs are
/// `A0, A1, ...`.
pub fn generate_synthetic(params: &SynthesisParams) -> Result<Netlist, SynthError> {
    params.check()?;
    let n = params.num_cells;
    let mut b = Builder {
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        degree: vec![0; n],
        pos_nets: vec![Vec::new(); n],
        nets: Vec::new(),
        stamp: Vec::new(),
        epoch: 0,
    };
    b.split(0, n);

    // hierarchy position -> cell index, so ids carry no structure
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut b.rng);
    let seq: Vec<bool> = (0..n)
        .map(|_| b.rng.gen::<f64>() < params.sequential_fraction)
        .collect();

    let mut drives = vec![false; n];
    let mut inputs = vec![0usize; n];
    let mut nets = Vec::with_capacity(b.nets.len());
    for (ni, members) in b.nets.iter().enumerate() {
        let cells: Vec<usize> = members.iter().map(|&m| perm[m]).collect();
        let driver = cells.iter().position(|&c| !drives[c]);
        let mut terminals = Vec::with_capacity(cells.len());
        if let Some(d) = driver {
            drives[cells[d]] = true;
            terminals.push(Terminal::new(format!("c{}", cells[d]), "Y"));
        }
        for (i, &c) in cells.iter().enumerate() {
            if Some(i) == driver {
                continue;
            }
            terminals.push(Terminal::new(format!("c{c}"), format!("A{}", inputs[c])));
            inputs[c] += 1;
        }
        nets.push(Net {
            id: format!("n{ni}"),
            terminals,
            driver: driver.map(|_| 0),
        });
    }

    let mut masters = BTreeMap::new();
    let mut cells = Vec::with_capacity(n);
    for c in 0..n {
        let name = format!("G{}", inputs[c]);
        masters.entry(name.clone()).or_insert_with(|| {
            let mut pins: Vec<String> = (0..inputs[c]).map(|i| format!("A{i}")).collect();
            pins.push("Y".into());
            MasterDecl {
                name: name.clone(),
                pins,
            }
        });
        cells.push(CellInstance {
            id: format!("c{c}"),
            master: name,
            is_sequential: seq[c],
        });
    }

    Ok(Netlist {
        name: format!(
            "synth_n{}_r{}_a{}_s{}",
            n, params.rent_exponent, params.avg_pins_per_cell, params.seed
        ),
        masters,
        cells,
        nets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{validate, write_netlist};

    fn params(n: usize, seed: u64) -> SynthesisParams {
        SynthesisParams {
            num_cells: n,
            seed,
            ..SynthesisParams::default()
        }
    }

    #[test]
    fn rejects_tiny_designs() {
        assert_eq!(
            generate_synthetic(&params(4, 1)).unwrap_err(),
            SynthError::TooFewCells(4)
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = params(64, 1);
        p.rent_exponent = 0.5;
        assert!(matches!(
            generate_synthetic(&p),
            Err(SynthError::RentExponent(_))
        ));
        let mut p = params(64, 1);
        p.avg_pins_per_cell = 1.5;
        assert!(matches!(
            generate_synthetic(&p),
            Err(SynthError::PinsPerCell(_))
        ));
        let mut p = params(64, 1);
        p.sequential_fraction = 1.5;
        assert!(matches!(
            generate_synthetic(&p),
            Err(SynthError::SequentialFraction(_))
        ));
    }

    #[test]
    fn arity_weights_have_mean_three_when_untruncated() {
        let w = arity_weights(1 << 20);
        let mean: f64 = w.iter().map(|&(k, p)| k as f64 * p).sum();
        // truncation at 16 trims a 2^-15 tail
        assert!((mean - 3.0).abs() < 1e-3, "{mean}");
        assert_eq!(arity_weights(2), vec![(2, 1.0)]);
    }

    #[test]
    fn output_is_valid_and_deterministic() {
        let a = generate_synthetic(&params(512, 7)).unwrap();
        let b = generate_synthetic(&params(512, 7)).unwrap();
        assert_eq!(write_netlist(&a), write_netlist(&b));
        assert!(validate(&a).is_empty());
        assert!(a.nets.iter().all(|n| n.terminals.len() >= 2));
        let c = generate_synthetic(&params(512, 8)).unwrap();
        assert_ne!(write_netlist(&a), write_netlist(&c));
    }

    #[test]
    fn terminal_count_tracks_pins_per_cell() {
        for (n, a) in [(1024, 3.0), (2048, 2.5), (4096, 4.0)] {
            let p = SynthesisParams {
                num_cells: n,
                avg_pins_per_cell: a,
                ..SynthesisParams::default()
            };
            let net = generate_synthetic(&p).unwrap();
            let want = n as f64 * a;
            let got = net.total_terminals() as f64;
            assert!(
                (got - want).abs() / want <= 0.05,
                "n={n} a={a}: {got} vs {want}"
            );
        }
    }
}

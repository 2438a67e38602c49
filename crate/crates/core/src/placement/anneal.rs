use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Die, PinModel, PlaceError, Placement};
use crate::fabric::FabricSpec;
use crate::netlist::Netlist;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceParams {
    pub seed: u64,
    pub moves_per_cell: usize,
    pub cooling: f64,
    /// Independent anneals from fresh random placements; the best wins.
    pub restarts: usize,
    pub min_acceptance: f64,
}

impl Default for PlaceParams {
    fn default() -> Self {
        Self {
            seed: 1,
            moves_per_cell: 100,
            cooling: 0.95,
            restarts: 1,
            min_acceptance: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaceStats {
    pub initial_hpwl: f64,
    pub final_hpwl: f64,
    pub temperatures: usize,
    pub moves: u64,
}

/// Anneals with default parameters.
pub fn place(
    netlist: &Netlist,
    fabric: &FabricSpec,
    die: &Die,
    seed: u64,
) -> Result<Placement, PlaceError> {
    let params = PlaceParams {
        seed,
        ..PlaceParams::default()
    };
    place_with(netlist, fabric, die, &params).map(|(p, _)| p)
}

/// Simulated annealing over a grid of cell slots. Moves swap a cell with
/// the occupant of a slot inside a shrinking window, or relocate it there
/// if the slot is empty.
pub fn place_with(
    netlist: &Netlist,
    fabric: &FabricSpec,
    die: &Die,
    params: &PlaceParams,
) -> Result<(Placement, PlaceStats), PlaceError> {
    let n = netlist.cells.len();
    if n == 0 {
        return Err(PlaceError::EmptyNetlist);
    }
    let (cols, rows) = die.slots(fabric.cell_width, fabric.cell_height);
    let slots = cols as usize * rows as usize;
    if slots < n {
        return Err(PlaceError::Infeasible { cells: n, slots });
    }
    let lib = fabric.library(netlist);
    let model = PinModel::new(netlist, &lib)?;
    let grid = Grid {
        cols,
        rows,
        cw: fabric.cell_width,
        ch: fabric.cell_height,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(f64, Vec<u32>, PlaceStats)> = None;
    for _ in 0..params.restarts.max(1) {
        let mut a = Annealer::new(&model, grid, n, &mut rng);
        let stats = a.run(params, &mut rng);
        let cost = model.total(&a.pos);
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, a.best_slots, stats));
        }
    }
    let (_, slots, stats) = best.expect("at least one restart");
    let positions = slots.iter().map(|&s| grid.origin(s)).collect();
    Ok((
        Placement {
            die: *die,
            positions,
        },
        stats,
    ))
}

#[derive(Clone, Copy)]
struct Grid {
    cols: u32,
    rows: u32,
    cw: u32,
    ch: u32,
}

impl Grid {
    fn origin(&self, slot: u32) -> (u32, u32) {
        ((slot % self.cols) * self.cw, (slot / self.cols) * self.ch)
    }
}

struct Annealer<'a> {
    model: &'a PinModel,
    grid: Grid,
    cell_slot: Vec<u32>,
    slot_cell: Vec<u32>,
    pos: Vec<(u32, u32)>,
    net_cost: Vec<f64>,
    best_slots: Vec<u32>,
    touched: Vec<usize>,
    new_cost: Vec<f64>,
}

const EMPTY: u32 = u32::MAX;
const QUENCH_RADIUS: u32 = 3;
const QUENCH_SWEEPS: usize = 10;

impl<'a> Annealer<'a> {
    fn new(model: &'a PinModel, grid: Grid, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let total = grid.cols as usize * grid.rows as usize;
        let mut order: Vec<u32> = (0..total as u32).collect();
        order.shuffle(rng);
        let cell_slot: Vec<u32> = order[..n].to_vec();
        let mut slot_cell = vec![EMPTY; total];
        for (c, &s) in cell_slot.iter().enumerate() {
            slot_cell[s as usize] = c as u32;
        }
        let pos: Vec<(u32, u32)> = cell_slot.iter().map(|&s| grid.origin(s)).collect();
        let net_cost = (0..model.nets.len())
            .map(|ni| model.net_cost(ni, &pos))
            .collect();
        Self {
            model,
            grid,
            best_slots: cell_slot.clone(),
            cell_slot,
            slot_cell,
            pos,
            net_cost,
            touched: Vec::new(),
            new_cost: Vec::new(),
        }
    }

    fn total(&self) -> f64 {
        self.net_cost.iter().fold(0.0, |a, b| a + b)
    }

    /// Picks a cell and a different target slot within `rlim` slots.
    fn propose(&self, rlim: u32, rng: &mut ChaCha8Rng) -> Option<(usize, u32)> {
        let n = self.cell_slot.len();
        let c = rng.gen_range(0..n);
        let s = self.cell_slot[c];
        let (sx, sy) = (s % self.grid.cols, s / self.grid.cols);
        let x0 = sx.saturating_sub(rlim);
        let x1 = (sx + rlim).min(self.grid.cols - 1);
        let y0 = sy.saturating_sub(rlim);
        let y1 = (sy + rlim).min(self.grid.rows - 1);
        let t = rng.gen_range(y0..=y1) * self.grid.cols + rng.gen_range(x0..=x1);
        (t != s).then_some((c, t))
    }

    /// Applies the move tentatively and returns the cost change. The
    /// affected nets and their new costs are left in `touched`/`new_cost`.
    fn try_move(&mut self, c: usize, target: u32) -> f64 {
        let other = self.slot_cell[target as usize];
        self.touched.clear();
        self.touched.extend_from_slice(&self.model.cell_nets[c]);
        if other != EMPTY {
            self.touched
                .extend_from_slice(&self.model.cell_nets[other as usize]);
            self.touched.sort_unstable();
            self.touched.dedup();
        }
        let from = self.cell_slot[c];
        self.pos[c] = self.grid.origin(target);
        if other != EMPTY {
            self.pos[other as usize] = self.grid.origin(from);
        }
        self.new_cost.clear();
        let mut delta = 0.0;
        for &ni in &self.touched {
            let nc = self.model.net_cost(ni, &self.pos);
            delta += nc - self.net_cost[ni];
            self.new_cost.push(nc);
        }
        delta
    }

    fn commit(&mut self, c: usize, target: u32) {
        let other = self.slot_cell[target as usize];
        let from = self.cell_slot[c];
        self.slot_cell[target as usize] = c as u32;
        self.slot_cell[from as usize] = other;
        self.cell_slot[c] = target;
        if other != EMPTY {
            self.cell_slot[other as usize] = from;
        }
        for (&ni, &nc) in self.touched.iter().zip(&self.new_cost) {
            self.net_cost[ni] = nc;
        }
    }

    fn revert(&mut self, c: usize, target: u32) {
        let other = self.slot_cell[target as usize];
        self.pos[c] = self.grid.origin(self.cell_slot[c]);
        if other != EMPTY {
            self.pos[other as usize] = self.grid.origin(target);
        }
    }

    fn run(&mut self, params: &PlaceParams, rng: &mut ChaCha8Rng) -> PlaceStats {
        let n = self.cell_slot.len();
        let nets = self.model.nets.len().max(1);
        let initial = self.total();
        let mut stats = PlaceStats {
            initial_hpwl: initial,
            final_hpwl: initial,
            ..PlaceStats::default()
        };
        let max_rlim = self.grid.cols.max(self.grid.rows);
        if max_rlim <= 1 && self.grid.cols * self.grid.rows <= 1 {
            return stats;
        }

        // initial temperature from the spread of random move deltas
        let samples = n.max(64);
        let mut deltas = Vec::with_capacity(samples);
        for _ in 0..samples {
            if let Some((c, t)) = self.propose(max_rlim, rng) {
                deltas.push(self.try_move(c, t));
                self.revert(c, t);
            }
        }
        let mean = deltas.iter().sum::<f64>() / deltas.len().max(1) as f64;
        let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / deltas.len().max(1) as f64;
        let mut temp = 20.0 * var.sqrt();
        if !(temp > 0.0) {
            return stats;
        }

        // The best state is tracked move by move: `journal` holds the moves
        // committed since `best_slots` was last synced, or `stale` is set
        // once it would outgrow a full copy.
        let mut best_cost = initial;
        let mut cur = initial;
        let mut journal: Vec<(usize, u32, u32, u32)> = Vec::with_capacity(n);
        let mut stale = false;
        let mut rlim = max_rlim as f64;
        let moves = (params.moves_per_cell * n).max(1);
        loop {
            let mut accepted = 0usize;
            for _ in 0..moves {
                let Some((c, t)) = self.propose(rlim.round().max(1.0) as u32, rng) else {
                    continue;
                };
                let d = self.try_move(c, t);
                let ok = if d < 0.0 {
                    true
                } else if d == 0.0 {
                    rng.gen_bool(0.5)
                } else {
                    rng.gen::<f64>() < (-d / temp).exp()
                };
                if ok {
                    let (from, other) = (self.cell_slot[c], self.slot_cell[t as usize]);
                    self.commit(c, t);
                    accepted += 1;
                    cur += d;
                    if journal.len() < n {
                        journal.push((c, t, other, from));
                    } else {
                        stale = true;
                    }
                    if cur < best_cost - 1e-9 {
                        best_cost = cur;
                        if stale {
                            self.best_slots.clone_from(&self.cell_slot);
                        } else {
                            for &(c, t, other, from) in &journal {
                                self.best_slots[c] = t;
                                if other != EMPTY {
                                    self.best_slots[other as usize] = from;
                                }
                            }
                        }
                        journal.clear();
                        stale = false;
                    }
                } else {
                    self.revert(c, t);
                }
            }
            stats.moves += moves as u64;
            stats.temperatures += 1;
            // re-sum from the per-net cache so drift cannot accumulate
            let cost = self.total();
            cur = cost;
            let rate = accepted as f64 / moves as f64;
            rlim = (rlim * (1.0 - 0.44 + rate)).clamp(1.0, max_rlim as f64);
            temp *= params.cooling;
            // Zero-cost moves keep the acceptance rate up at any
            // temperature, so also stop once uphill moves are negligible.
            if rate < params.min_acceptance
                || temp < 0.005 * cost / nets as f64
                || stats.temperatures >= 10_000
            {
                break;
            }
        }
        self.restore_best();
        stats.final_hpwl = self.quench();
        stats
    }

    fn restore_best(&mut self) {
        self.slot_cell.iter_mut().for_each(|s| *s = EMPTY);
        for (c, &s) in self.best_slots.iter().enumerate() {
            self.cell_slot[c] = s;
            self.slot_cell[s as usize] = c as u32;
            self.pos[c] = self.grid.origin(s);
        }
        for ni in 0..self.net_cost.len() {
            self.net_cost[ni] = self.model.net_cost(ni, &self.pos);
        }
    }

    /// Greedy zero-temperature sweeps: every cell tries every slot within
    /// `QUENCH_RADIUS` and keeps strict improvements, until a sweep changes
    /// nothing.
    fn quench(&mut self) -> f64 {
        for _ in 0..QUENCH_SWEEPS {
            let mut improved = false;
            for c in 0..self.cell_slot.len() {
                let s = self.cell_slot[c];
                let (sx, sy) = (s % self.grid.cols, s / self.grid.cols);
                let x0 = sx.saturating_sub(QUENCH_RADIUS);
                let x1 = (sx + QUENCH_RADIUS).min(self.grid.cols - 1);
                let y0 = sy.saturating_sub(QUENCH_RADIUS);
                let y1 = (sy + QUENCH_RADIUS).min(self.grid.rows - 1);
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let t = y * self.grid.cols + x;
                        if t == self.cell_slot[c] {
                            continue;
                        }
                        if self.try_move(c, t) < -1e-9 {
                            self.commit(c, t);
                            improved = true;
                        } else {
                            self.revert(c, t);
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        self.best_slots.clone_from(&self.cell_slot);
        self.total()
    }
}

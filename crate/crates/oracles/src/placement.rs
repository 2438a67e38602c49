//! Exhaustive slot assignment for tiny placement instances.

/// Least total half-perimeter wirelength over every assignment of `cells`
/// unit cells to distinct slots of an `nx` x `ny` grid. Each net lists
/// `(cell, dx, dy)` pin offsets from the cell origin.
pub fn best_hpwl(nx: usize, ny: usize, cells: usize, nets: &[Vec<(usize, f64, f64)>]) -> f64 {
    assert!(cells <= nx * ny);
    let mut pos = vec![(0usize, 0usize); cells];
    let mut used = vec![false; nx * ny];
    let mut best = f64::INFINITY;
    assign(0, nx, &mut pos, &mut used, nets, &mut best);
    best
}

fn cost(pos: &[(usize, usize)], nets: &[Vec<(usize, f64, f64)>]) -> f64 {
    let mut total = 0.0;
    for net in nets {
        if net.len() < 2 {
            continue;
        }
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(c, dx, dy) in net {
            let x = pos[c].0 as f64 + dx;
            let y = pos[c].1 as f64 + dy;
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        total += (x1 - x0) + (y1 - y0);
    }
    total
}

fn assign(
    i: usize,
    nx: usize,
    pos: &mut Vec<(usize, usize)>,
    used: &mut Vec<bool>,
    nets: &[Vec<(usize, f64, f64)>],
    best: &mut f64,
) {
    if i == pos.len() {
        *best = best.min(cost(pos, nets));
        return;
    }
    for s in 0..used.len() {
        if used[s] {
            continue;
        }
        used[s] = true;
        pos[i] = (s % nx, s / nx);
        assign(i + 1, nx, pos, used, nets, best);
        used[s] = false;
    }
}

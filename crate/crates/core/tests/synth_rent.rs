use skyroute::netlist::{generate_synthetic, Netlist, SynthesisParams};
use skyroute_oracles::rentfit;

fn nets_by_index(n: &Netlist) -> Vec<Vec<usize>> {
    let conn = n.connectivity().unwrap();
    conn.net_pins
        .iter()
        .map(|p| p.iter().map(|r| r.cell).collect())
        .collect()
}

#[test]
fn fitted_exponent_tracks_target() {
    for seed in 1..=5 {
        let p = SynthesisParams {
            num_cells: 4096,
            seed,
            ..Default::default()
        };
        let n = generate_synthetic(&p).unwrap();
        let fit = rentfit::fit_rent(n.cells.len(), &nets_by_index(&n), seed, 1.0, 4096.0);
        assert!(
            (0.70..=0.80).contains(&fit.exponent),
            "seed {seed}: r = {}",
            fit.exponent
        );
    }
}

use std::collections::BTreeSet;

use proptest::prelude::*;
use skyroute::fabric::{builtin_fabric, FabricKind, FabricSpec};
use skyroute::globalroute::{
    apply_obstacles, build_grid, route, terminal_gcells, EdgeKind, ResourceKind, RouteParams,
};
use skyroute::metrics::{normalize, percent_delta, ppa, wire_power, BenchmarkReport, PowerParams};
use skyroute::netlist::{
    generate_synthetic, parse_netlist, write_netlist, Netlist, SynthesisParams,
};
use skyroute::placement::{check_legal, hpwl, place_with, size_die, PlaceParams, Placement};
use skyroute::rent::{compare_demand, estimate, PinDensityInput, RentParams};

fn kind() -> impl Strategy<Value = FabricKind> {
    prop_oneof![
        Just(FabricKind::Planar2D),
        Just(FabricKind::TransistorMonolithic3D),
        Just(FabricKind::SkybridgeS3DC),
    ]
}

fn synth(cells: usize, seed: u64) -> Netlist {
    generate_synthetic(&SynthesisParams {
        num_cells: cells,
        seed,
        ..SynthesisParams::default()
    })
    .unwrap()
}

fn quick_place(nl: &Netlist, f: &FabricSpec, seed: u64) -> Placement {
    let die = size_die(nl, f, 0.6).unwrap();
    let params = PlaceParams {
        seed,
        moves_per_cell: 5,
        ..PlaceParams::default()
    };
    place_with(nl, f, &die, &params).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn netlist_round_trips(cells in 8usize..200, seed in any::<u64>()) {
        let nl = synth(cells, seed);
        let back = parse_netlist(&write_netlist(&nl)).unwrap();
        prop_assert_eq!(back, nl);
    }

    #[test]
    fn generator_is_deterministic_without_dangling_nets(cells in 8usize..300, seed in any::<u64>()) {
        let a = synth(cells, seed);
        prop_assert!(a.nets.iter().all(|n| n.terminals.len() >= 2));
        prop_assert_eq!(a, synth(cells, seed));
    }

    #[test]
    fn builtin_fabric_is_pure(k in kind()) {
        prop_assert_eq!(builtin_fabric(k), builtin_fabric(k));
    }

    #[test]
    fn access_layers_per_fabric(cells in 8usize..64, seed in any::<u64>(), k in kind()) {
        let nl = synth(cells, seed);
        let f = builtin_fabric(k);
        for m in f.library(&nl).masters.values() {
            let layers: BTreeSet<u32> = m.pins.iter().flat_map(|p| &p.accesses).map(|a| a.layer).collect();
            match k {
                FabricKind::SkybridgeS3DC => prop_assert_eq!(layers.len(), 5),
                _ => prop_assert_eq!(layers, BTreeSet::from([1])),
            }
        }
    }

    #[test]
    fn demand_is_scale_invariant(pins in 1u64..1_000_000, area in 1e-3f64..1e6, k in 1e-3f64..1e3, n in 1u32..8) {
        let p = RentParams::default();
        let a = estimate(&PinDensityInput { total_pins: pins, die_area: area, pin_access_layers: n }, &p).unwrap();
        // scale by an integer so the pin count stays whole
        let ki = k.ceil() as u64;
        let b = estimate(&PinDensityInput { total_pins: pins * ki, die_area: area * ki as f64, pin_access_layers: n }, &p).unwrap();
        for (x, y) in [(a.e_effective, b.e_effective), (a.g, b.g), (a.l, b.l)] {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }

    #[test]
    fn demand_falls_with_access_layers(pins in 1u64..1_000_000, area in 1e-3f64..1e6, n in 1u32..12) {
        let p = RentParams::default();
        let at = |n| estimate(&PinDensityInput { total_pins: pins, die_area: area, pin_access_layers: n }, &p).unwrap().l;
        prop_assert!(at(n + 1) < at(n));
    }

    #[test]
    fn self_comparison_is_one(pins in 1u64..1_000_000, area in 1e-3f64..1e6, n in 1u32..8) {
        let d = PinDensityInput { total_pins: pins, die_area: area, pin_access_layers: n };
        let rows = compare_demand(&[("x".to_string(), d)], &RentParams::default(), "x").unwrap();
        prop_assert_eq!(rows[0].l_normalized, 1.0);
    }

    #[test]
    fn annealing_is_legal_and_improves(cells in 2usize..120, seed in any::<u64>(), k in kind()) {
        let nl = synth(cells.max(8), seed);
        let f = builtin_fabric(k);
        let die = size_die(&nl, &f, 0.6).unwrap();
        let params = PlaceParams { seed, moves_per_cell: 10, ..PlaceParams::default() };
        let (p, stats) = place_with(&nl, &f, &die, &params).unwrap();
        check_legal(&nl, &f, &p).unwrap();
        prop_assert!(stats.final_hpwl <= stats.initial_hpwl);
    }

    #[test]
    fn hpwl_is_translation_invariant(cells in 8usize..100, seed in any::<u64>(), dx in 0i64..5000, dy in 0i64..5000, k in kind()) {
        let nl = synth(cells, seed);
        let f = builtin_fabric(k);
        let p = quick_place(&nl, &f, seed);
        let lib = f.library(&nl);
        prop_assert_eq!(hpwl(&nl, &lib, &p).unwrap(), hpwl(&nl, &lib, &p.translate(dx, dy)).unwrap());
    }

    #[test]
    fn power_homogeneity(c in 1e-3f64..1e4, act in 0.01f64..0.5, v in 0.3f64..1.5, k in 0.1f64..2.0) {
        let f = builtin_fabric(FabricKind::Planar2D);
        let shape = build_grid(&f, &skyroute::placement::Die { width: 40, height: 4, site_nm: 200.0, utilization: 0.6 }, 1).shape;
        let len = (c as usize % 30) + 1;
        let routes = vec![skyroute::globalroute::NetRoute { net: 0, id: "n".into(), edges: (0..len as u32).collect() }];
        let p = PowerParams { clock_freq: 1.0, supply_voltage: v, switching_activity: act };
        let base = wire_power(&routes, &shape, &f, &p);
        let ka = wire_power(&routes, &shape, &f, &PowerParams { switching_activity: act * k, ..p });
        let kv = wire_power(&routes, &shape, &f, &PowerParams { supply_voltage: v * k, ..p });
        prop_assert!((ka - k * base).abs() <= 1e-12 * ka.abs());
        prop_assert!((kv - k * k * base).abs() <= 1e-12 * kv.abs());
    }

    #[test]
    fn report_identities(w in 1e-6f64..10.0, pp in 1e-6f64..10.0, ip in 1e-6f64..10.0, s in 1e-3f64..1e6, k in 1e-3f64..1e3,
                         w2 in 1e-6f64..10.0, s2 in 1e-3f64..1e6) {
        let a = BenchmarkReport::new("a", 1, 1.0, 1.0, (w, pp, ip), s, 0.0, 0);
        prop_assert_eq!(a.total_power, w + pp + ip);
        let b = BenchmarkReport::new("b", 1, 0.9, 1.0, (w2, pp, ip), s2, 0.0, 0);
        let scaled: Vec<BenchmarkReport> = [&a, &b]
            .iter()
            .map(|r| BenchmarkReport::new(&r.label, 1, r.clock_freq, 1.0, (r.wire_power * k, r.pin_power * k, r.internal_power * k), r.footprint, 0.0, 0))
            .collect();
        let p1 = ppa(&[a.clone(), b.clone()], "a").unwrap();
        let p2 = ppa(&scaled, "a").unwrap();
        prop_assert!((p1[1] - p2[1]).abs() <= 1e-12 * p1[1]);
        let mut rows = vec![a.clone()];
        normalize(&mut rows, "a").unwrap();
        prop_assert_eq!(rows[0].ppa_normalized, 1.0);
        for x in [w, pp, ip, s] {
            prop_assert_eq!(percent_delta(x, x), "0%");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn routes_conserve_demand_and_form_trees(cells in 8usize..80, seed in any::<u64>(), k in kind(), gcell in 1u32..5) {
        let nl = synth(cells, seed);
        let f = builtin_fabric(k);
        let p = quick_place(&nl, &f, seed);
        let lib = f.library(&nl);
        let mut g = build_grid(&f, &p.die, gcell);
        apply_obstacles(&mut g, &f, &p);
        let shape = g.shape.clone();
        let out = route(&nl, &lib, &p, g, &RouteParams { max_iters: 10, ..RouteParams::default() }).unwrap();

        // conservation, edge by edge and layer by layer
        let mut demand = vec![0u32; shape.num_edges()];
        for r in &out.routes {
            for &e in &r.edges {
                demand[e as usize] += 1;
            }
        }
        prop_assert_eq!(&demand, &out.map.demand);
        for row in out.map.layer_ratios() {
            let sum: u64 = (0..shape.num_edges() as u32)
                .filter(|&e| match (shape.kind(e), row.kind) {
                    (EdgeKind::Planar(l, ..), ResourceKind::Planar) | (EdgeKind::Via(l, ..), ResourceKind::Via) => l as u32 + 1 == row.layer,
                    _ => false,
                })
                .map(|e| demand[e as usize] as u64)
                .sum();
            prop_assert_eq!(sum, row.demand);
        }

        // soundness of a clean result
        if !out.map.is_congested() {
            prop_assert!(out.map.demand.iter().zip(&out.map.capacity).all(|(d, c)| d <= c));
        }

        // every route is acyclic and joins all of its pins, each pin
        // connecting its own access points
        let conn = nl.connectivity().unwrap();
        for r in &out.routes {
            let mut uf = UnionFind::new(shape.num_nodes());
            for &e in &r.edges {
                let (a, b) = shape.endpoints(e);
                prop_assert!(uf.union(a as usize, b as usize), "cycle in net {}", r.id);
            }
            let mut roots = BTreeSet::new();
            for &pin in &conn.net_pins[r.net] {
                let nodes: Vec<usize> = terminal_gcells(&shape, &lib, &nl, &p, pin)
                    .iter()
                    .map(|&(x, y, l)| shape.node(l as usize - 1, x, y) as usize)
                    .collect();
                for w in nodes.windows(2) {
                    uf.union(w[0], w[1]);
                }
                roots.insert(nodes[0]);
            }
            let comps: BTreeSet<usize> = roots.iter().map(|&n| uf.find(n)).collect();
            prop_assert_eq!(comps.len(), 1, "net {} is split", r.id);
        }
    }

    #[test]
    fn more_capacity_never_adds_overflow(cells in 30usize..120, seed in any::<u64>(), k in kind()) {
        let nl = synth(cells, seed);
        let f = builtin_fabric(k);
        let p = quick_place(&nl, &f, seed);
        let lib = f.library(&nl);
        let mut tight = f.clone();
        for l in &mut tight.layers {
            l.capacity = 2;
        }
        let mut wide = tight.clone();
        for l in &mut wide.layers {
            l.capacity *= 2;
        }
        let overflow = |fab: &FabricSpec| {
            let mut g = build_grid(fab, &p.die, 4);
            apply_obstacles(&mut g, fab, &p);
            route(&nl, &lib, &p, g, &RouteParams::default()).unwrap().map.overflow().0
        };
        prop_assert!(overflow(&wide) <= overflow(&tight));
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// false if already joined
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
        ra != rb
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsicolor::coloring::{read_coloring, write_coloring, PartialColoring};
use sparsicolor::experiment::ExperimentConfig;
use sparsicolor::graph::{gen_gnp, gen_planted, planted_for_delta, read_edge_list, write_edge_list, GenSpec};
use sparsicolor::palette::{build_sparsified, keep_probability, sample_palettes, ColorLists, Sublist};
use sparsicolor::params::Resolved;
use sparsicolor::Params;

fn planted_spec() -> impl Strategy<Value = GenSpec> {
    (2usize..5, 4usize..30, 0.0f64..0.3, 0.0f64..0.3, 0.0f64..1.0, any::<u64>()).prop_map(
        |(count, size, holes, cross, bg, seed)| GenSpec {
            n: count * size + size,
            clique_count: count,
            clique_size: size,
            epsilon_holes: holes,
            cross_fraction: cross,
            background_p: bg,
            seed,
            ..GenSpec::default()
        },
    )
}

proptest! {
    #[test]
    fn planted_instances_respect_their_spec(spec in planted_spec()) {
        let (g, part) = gen_planted(&spec).unwrap();
        prop_assert!(g.check_invariants());
        prop_assert_eq!(part.cliques.len(), spec.clique_count);
        let cap = (spec.cross_fraction * spec.clique_size as f64).floor() as usize;
        let owner = |v: usize| part.cliques.iter().position(|c| c.contains(&v));
        for (i, c) in part.cliques.iter().enumerate() {
            prop_assert_eq!(c.len(), spec.clique_size);
            for &v in c {
                let ext = g.neighbors(v).iter().filter(|&&u| owner(u) != Some(i)).count();
                prop_assert!(ext <= cap, "node {} has {} external edges, cap {}", v, ext, cap);
            }
        }
        if spec.epsilon_holes == 0.0 {
            for c in &part.cliques {
                for &u in c {
                    for &v in c {
                        prop_assert!(u == v || g.has_edge(u, v));
                    }
                }
            }
        }
        prop_assert_eq!(gen_planted(&spec).unwrap().0, g);
    }

    #[test]
    fn edge_lists_round_trip(n in 1usize..60, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = gen_gnp(n, p, seed);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        prop_assert_eq!(read_edge_list(&buf[..]).unwrap(), g);
    }

    #[test]
    fn colorings_round_trip(colors in proptest::collection::vec(proptest::option::of(1u32..50), 0..80)) {
        let c = PartialColoring::from_colors(colors);
        let mut buf = Vec::new();
        write_coloring(&c, &mut buf).unwrap();
        prop_assert_eq!(read_coloring(&buf[..], c.n()).unwrap(), c);
    }

    #[test]
    fn sparsified_graph_keeps_exactly_the_sharing_edges(n in 2usize..80, p in 0.1f64..0.9, seed in any::<u64>()) {
        let g = gen_gnp(n, p, seed);
        let r = Params::desk().resolve(g.n(), g.delta().max(1)).unwrap();
        let lists = sample_palettes(g.n(), &r, seed);
        let sparse = build_sparsified(&g, &lists);
        prop_assert!(sparse.check_invariants());
        for (u, v) in g.edges() {
            prop_assert_eq!(sparse.has_edge(u, v), lists.shares_color(u, v));
        }
        for (u, v) in sparse.edges() {
            prop_assert!(g.has_edge(u, v));
        }
        for v in 0..n {
            let l1 = lists.get(v, Sublist::L1);
            prop_assert!(l1.len() <= r.l1_len);
            let mut d = l1.to_vec();
            d.sort_unstable();
            d.dedup();
            prop_assert_eq!(d.len(), l1.len());
            for s in lists.layout().all() {
                prop_assert!(lists.get(v, s).iter().all(|&c| (1..=r.palette).contains(&c)));
            }
        }
    }

    #[test]
    fn lists_survive_dump_and_load(n in 1usize..30, delta in 1usize..40, seed in any::<u64>()) {
        let r = Params::desk().resolve(n.max(2), delta).unwrap();
        let lists = sample_palettes(n, &r, seed);
        let mut buf = Vec::new();
        lists.dump(&mut buf).unwrap();
        let back = ColorLists::load(&buf[..]).unwrap();
        for v in 0..n {
            for s in lists.layout().all() {
                prop_assert_eq!(back.get(v, s), lists.get(v, s));
            }
        }
    }

    #[test]
    fn key_value_and_json_configs_agree(delta in 8usize..300, seeds in 1u64..20, alpha in 2usize..9, holes in 0.0f64..0.3) {
        let kv = format!("delta = {delta}\nseeds = {seeds}\nalpha = {alpha}\n# comment\ngenerator.holes = {holes}\n");
        let json = format!(r#"{{"delta": {delta}, "seeds": {seeds}, "alpha": {alpha}, "generator.holes": {holes}}}"#);
        let a = ExperimentConfig::parse(&kv).unwrap();
        let b = ExperimentConfig::parse(&json).unwrap();
        prop_assert_eq!(&a.gen, &b.gen);
        prop_assert_eq!(&a.params, &b.params);
        prop_assert_eq!(&a.seeds, &b.seeds);
        prop_assert_eq!(a.params.alpha, alpha);
        prop_assert_eq!(a.seeds.len() as u64, seeds);
        prop_assert_eq!(a.gen.epsilon_holes, holes);
    }
}

/// Monte Carlo estimate of the chance that two independently drawn lists
/// intersect, sampling with a separate generator.
fn simulated_keep(r: &Resolved, pairs: usize) -> f64 {
    let mut g = ChaCha8Rng::seed_from_u64(99);
    let pal = r.palette as usize;
    let draw = |g: &mut ChaCha8Rng| {
        let mut has = vec![false; pal + 1];
        for _ in 0..r.l1_len {
            has[g.gen_range(1..=pal)] = true;
        }
        let rates = std::iter::repeat_n(r.l2_rate, r.l2_count)
            .chain([r.l2_star_rate])
            .chain(std::iter::repeat_n(r.l3_rate, 2 * r.beta));
        for rate in rates {
            for h in has.iter_mut().skip(1) {
                *h |= g.gen_bool(rate);
            }
        }
        has
    };
    let hits = (0..pairs)
        .filter(|_| {
            let (a, b) = (draw(&mut g), draw(&mut g));
            a.iter().zip(&b).any(|(x, y)| *x && *y)
        })
        .count();
    hits as f64 / pairs as f64
}

fn thin() -> Params {
    Params {
        c1: 0.25,
        l2_scale: 1.0,
        l2_sublists: Some(2),
        l3_scale: 0.0005,
        beta: Some(2),
        gamma: 0.5,
        ..Params::desk()
    }
}

#[test]
fn keep_probability_matches_simulation() {
    for (n, delta) in [(200, 60), (1000, 500)] {
        let r = thin().resolve(n, delta).unwrap();
        let exact = keep_probability(&r);
        let sim = simulated_keep(&r, 20_000);
        assert!((exact - sim).abs() < 0.015, "n={n} Δ={delta}: exact {exact}, simulated {sim}");
    }
}

#[test]
fn frozen_keep_probabilities() {
    let cases = [(200, 60, KEEP_200_60), (1000, 500, KEEP_1000_500)];
    for (n, delta, want) in cases {
        let got = keep_probability(&thin().resolve(n, delta).unwrap());
        assert!((got - want).abs() < 1e-9, "n={n} Δ={delta}: {got}");
    }
    assert!(keep_probability(&Params::desk().resolve(1027, 261).unwrap()) > 0.999);
}

// Agree with `simulated_keep` to within 0.015.
const KEEP_200_60: f64 = 0.987_854_900_378_286_5;
const KEEP_1000_500: f64 = 0.757_068_630_873_073_6;

#[test]
fn resolved_desk_constants() {
    let r = Params::desk().resolve(1027, 256).unwrap();
    assert_eq!(r.beta, 10);
    assert_eq!(r.palette, 257);
    assert_eq!(r.bandwidth, 44);
    assert_eq!(r.neighbor_budget, 10_000);
    assert_eq!(r.round_cap, 3400);
    assert_eq!(r.l1_len, 201);
    assert_eq!(r.l2_count, 100);
    assert_eq!(r.aug_iterations, 32);
    assert_eq!(r.lambda, 20_480);
    assert!((r.reduce_target() - 6.4).abs() < 1e-12);
}

#[test]
fn planted_for_delta_shape() {
    let spec = planted_for_delta(256, 3);
    assert_eq!(spec.n, 1027);
    assert_eq!(spec.clique_size, 257);
    assert_eq!((spec.cross_fraction * 257.0).floor() as usize, 5);
}

#[test]
fn mean_l2_sublist_size_follows_the_per_color_rate() {
    let params = Params {
        l2_scale: 1.0,
        l2_sublists: Some(4),
        ..Params::desk()
    };
    let r = params.resolve(1024, 512).unwrap();
    let lists = sample_palettes(1024, &r, 7);
    let sizes: Vec<usize> = (0..1024)
        .flat_map(|v| (0..4).map(move |i| (v, i)))
        .map(|(v, i)| lists.get(v, Sublist::L2(i)).len())
        .collect();
    let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
    let p = 1.0 / (4.0 * 512.0);
    let want = 513.0 * p;
    let sd = (513.0 * p * (1.0 - p) / sizes.len() as f64).sqrt();
    assert!((mean - want).abs() < 4.0 * sd, "mean {mean}, want {want}");
}

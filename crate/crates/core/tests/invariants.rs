use gnet::decomposition::{decompose, disjoint_union, project, recombine, restrict};
use gnet::equilibrium::is_nash_prop3;
use gnet::expectations::Evaluator;
use gnet::format::{parse_game, print_game};
use gnet::games::{random_bimatrix, random_net};
use gnet::model::all_states;
use gnet::{GNet, Profile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn net_from_seed(seed: u64) -> GNet {
    random_net(&mut ChaCha8Rng::seed_from_u64(seed), 4, 3)
}

/// Interior profile built from raw weights in [0.05, 1).
fn interior(ev: &Evaluator, raw: &[f64]) -> Profile {
    let layout = ev.layout();
    let mut free: Vec<f64> = raw.iter().copied().cycle().take(ev.free_dim()).collect();
    for &b in &layout.free_blocks {
        let range = layout.free_range(b);
        let s: f64 = free[range.clone()].iter().sum();
        free[range].iter_mut().for_each(|v| *v /= s);
    }
    layout.with_free(&free)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_games_parse_back(seed in any::<u64>()) {
        let net = net_from_seed(seed);
        let text = print_game(&net);
        let back = parse_game(&text).unwrap();
        prop_assert_eq!(print_game(&back), text);
        prop_assert_eq!(back.nodes.len(), net.nodes.len());
    }

    #[test]
    fn joint_distribution_sums_to_one(seed in any::<u64>(), raw in prop::collection::vec(0.05f64..1.0, 1..8)) {
        let net = net_from_seed(seed);
        let ev = Evaluator::new(&net).unwrap();
        let p = interior(&ev, &raw);
        let total: f64 = all_states(&net).map(|x| ev.joint_probability(&p, &x).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn value_map_stays_in_the_simplex(seed in any::<u64>(), raw in prop::collection::vec(0.05f64..1.0, 1..8)) {
        let net = net_from_seed(seed);
        let ev = Evaluator::new(&net).unwrap();
        let v = ev.value_map(&interior(&ev, &raw)).unwrap();
        prop_assert!(v.values.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        for block in &ev.layout().blocks {
            let s: f64 = v.values[block.start..block.start + block.len].iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn restrict_undoes_recombine(a in any::<u64>(), b in any::<u64>(), raw in prop::collection::vec(0.05f64..1.0, 1..8)) {
        let joint = disjoint_union(
            &random_bimatrix(&mut ChaCha8Rng::seed_from_u64(a), 2, 2, 1.0, 2.0),
            &random_bimatrix(&mut ChaCha8Rng::seed_from_u64(b), 2, 3, 1.0, 2.0),
        );
        let ev = Evaluator::new(&joint).unwrap();
        let p = interior(&ev, &raw);
        let components = decompose(&joint);
        prop_assert_eq!(components.len(), 2);
        let parts: Vec<Profile> = components.iter().map(|c| restrict(&joint, c, &p)).collect();
        prop_assert_eq!(recombine(&joint, &components, &parts), p);
    }

    #[test]
    fn value_map_is_componentwise(a in any::<u64>(), b in any::<u64>(), raw in prop::collection::vec(0.05f64..1.0, 1..8)) {
        let joint = disjoint_union(&net_from_seed(a), &net_from_seed(b));
        let ev = Evaluator::new(&joint).unwrap();
        let p = interior(&ev, &raw);
        let whole = ev.value_map(&p).unwrap();
        for c in decompose(&joint) {
            let sub = project(&joint, &c);
            let local = Evaluator::new(&sub).unwrap().value_map(&restrict(&joint, &c, &p)).unwrap();
            let expect = restrict(&joint, &c, &whole);
            for (x, y) in local.values.iter().zip(&expect.values) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn pure_nash_of_random_bimatrices_pass_the_test() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let net = random_bimatrix(&mut rng, 2, 2, 1.0, 2.0);
        let ev = Evaluator::new(&net).unwrap();
        let layout = ev.layout();
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let mut free = vec![0.0; 4];
            free[r] = 1.0;
            free[2 + c] = 1.0;
            let p = layout.with_free(&free);
            let u = |player: usize, rr: usize, cc: usize| {
                gnet::model::utility(&net, gnet::PlayerId::Agent(player), &[rr, cc]).unwrap()
            };
            let best = u(0, r, c) >= u(0, 1 - r, c) && u(1, r, c) >= u(1, r, 1 - c);
            assert_eq!(is_nash_prop3(&ev, &p, 1e-9).unwrap().is_nash, best);
        }
    }
}

/// Reports whether swapping the declaration order of the two players moves
/// the first equilibrium. Only Nash-ness is asserted.
#[test]
fn first_equilibrium_under_player_reordering() {
    use gnet::first_equilibrium::{track_first_equilibrium, TrackerConfig};
    use rand::Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = TrackerConfig::default();
    let (mut same, total) = (0, 30);
    for _ in 0..total {
        let a: Vec<Vec<f64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(1.0..2.0)).collect()).collect();
        let b: Vec<Vec<f64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(1.0..2.0)).collect()).collect();
        let t = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> { (0..2).map(|j| (0..2).map(|i| m[i][j]).collect()).collect() };
        let net = GNet::bimatrix(&a, &b);
        let swapped = GNet::bimatrix(&t(&b), &t(&a));
        let p = track_first_equilibrium(&net, &cfg).unwrap();
        let q = track_first_equilibrium(&swapped, &cfg).unwrap();
        for (g, r) in [(&net, &p), (&swapped, &q)] {
            let ev = Evaluator::new(g).unwrap();
            assert!(is_nash_prop3(&ev, &r.profile, 1e-6).unwrap().is_nash);
        }
        let (x, y) = (&p.profile.values, &q.profile.values);
        let mirrored = [y[2], y[3], y[0], y[1]];
        same += usize::from(x.iter().zip(&mirrored).all(|(u, v)| (u - v).abs() < 1e-6));
    }
    eprintln!("first equilibrium unchanged by player reordering in {same}/{total} games");
}

use proptest::prelude::*;

use shufflecut::dynamics::{
    apply_update, corner_flip_run, run_sep, run_trajectory, sample_update_stream, CensoringScheme,
    CornerFlipStream,
};
use shufflecut::exact::{enumerate, evolve, Distribution, Model, DEFAULT_STATE_CAP};
use shufflecut::path::extremal_paths;
use shufflecut::rng::substream_seed;
use shufflecut::Permutation;

fn perm(n: usize) -> impl Strategy<Value = Permutation> {
    Just((1..=n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|labels| Permutation::new(labels).unwrap())
}

/// A permutation together with one obtained from it by sort-ups, so the
/// second sits above the first.
fn ordered_pair() -> impl Strategy<Value = (Permutation, Permutation)> {
    (2usize..=8)
        .prop_flat_map(|n| (perm(n), prop::collection::vec(1..n, 0..30)))
        .prop_map(|(p, sites)| {
            let q = sites
                .iter()
                .fold(p.clone(), |q, &s| apply_update(&q, s, true).unwrap());
            (p, q)
        })
}

fn scheme(n: usize, horizon: f64) -> impl Strategy<Value = CensoringScheme> {
    prop::collection::vec((0.01f64..1.0, prop::collection::vec(1..n, 0..n)), 1..5).prop_map(
        move |raw| {
            let mut start = 0.0;
            let mut pieces = Vec::new();
            for (i, (gap, sites)) in raw.into_iter().enumerate() {
                if i > 0 {
                    start += gap * horizon / 5.0;
                }
                pieces.push((start, sites));
            }
            CensoringScheme::new(n, horizon, pieces).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn coupling_preserves_order((p, q) in ordered_pair(), seed in any::<u64>()) {
        prop_assert!(p.leq(&q).unwrap());
        let s = sample_update_stream(p.n(), 3.0, seed).unwrap();
        let a = run_trajectory(&p, &s, None).unwrap();
        let b = run_trajectory(&q, &s, None).unwrap();
        prop_assert!(a.leq(&b).unwrap());
    }

    #[test]
    fn censored_run_equals_run_on_filtered_stream(
        (p, c) in (2usize..=8).prop_flat_map(|n| (perm(n), scheme(n, 4.0))),
        seed in any::<u64>(),
    ) {
        let s = sample_update_stream(p.n(), 4.0, seed).unwrap();
        let direct = run_trajectory(&p, &s, Some(&c)).unwrap();
        let filtered = run_trajectory(&p, &s.filtered(&c).unwrap(), None).unwrap();
        prop_assert_eq!(direct, filtered);
    }

    #[test]
    fn projection_commutes_with_dynamics(p in (2usize..=9).prop_flat_map(perm), seed in any::<u64>()) {
        let n = p.n();
        let s = sample_update_stream(n, 2.0, seed).unwrap();
        let end = run_trajectory(&p, &s, None).unwrap();
        for k in 1..n {
            let projected = run_sep(&p.to_exclusion(k).unwrap(), &s, None).unwrap();
            prop_assert_eq!(end.to_exclusion(k).unwrap(), projected);
        }
    }
}

#[test]
fn corner_flip_top_path_has_exclusion_law() {
    let (n, k) = (4, 2);
    let replicas = 100_000u64;
    let times = [0.3, 1.0, 2.5];
    let space = enumerate(Model::exclusion(n, k).unwrap(), DEFAULT_STATE_CAP).unwrap();
    let (top, _) = extremal_paths(n, k).unwrap();
    assert_eq!(space.path(space.top_index()).unwrap(), top);
    let init = Distribution::point_mass(&space, space.top_index());
    for (ti, &t) in times.iter().enumerate() {
        let mut counts = vec![0u64; space.size()];
        for r in 0..replicas {
            let stream = CornerFlipStream::new(n, k, t, substream_seed(ti as u64, r)).unwrap();
            let mut path = top.clone();
            for ev in stream.events() {
                if path.scaled(ev.x) == ev.level {
                    path.push(ev.x, ev.up);
                }
            }
            counts[space.path_index(&path).unwrap()] += 1;
        }
        let exact = evolve(&space, &init, None, t).unwrap();
        for (i, &c) in counts.iter().enumerate() {
            let p = exact.get(i);
            let freq = c as f64 / replicas as f64;
            let se = (p * (1.0 - p) / replicas as f64).sqrt().max(1e-4);
            assert!(
                (freq - p).abs() <= 4.0 * se,
                "t={t} state {i}: {freq} vs {p}"
            );
        }
    }
}

#[test]
fn corner_flip_traces_are_clean() {
    for seed in 0..300u64 {
        let n = 4 + (seed % 13) as usize;
        let k = 1 + (seed as usize / 13) % (n - 1);
        let run = corner_flip_run(n, k, 40.0, seed, &[1.0, 5.0, 20.0]).unwrap();
        assert_eq!(run.trace.violations(), 0, "N={n} k={k} seed={seed}");
        assert!(run.pair.bottom().leq(run.pair.top()).unwrap());
    }
}

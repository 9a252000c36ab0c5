use std::collections::HashSet;

use proptest::prelude::*;

use shufflecut::dynamics::apply_update;
use shufflecut::exact::{enumerate, Model, DEFAULT_STATE_CAP};
use shufflecut::{BlockPartition, Permutation};

fn all_perms(n: usize) -> Vec<Permutation> {
    let s = enumerate(Model::shuffle(n).unwrap(), DEFAULT_STATE_CAP).unwrap();
    (0..s.size()).map(|i| s.perm(i).unwrap()).collect()
}

fn perm(n: usize) -> impl Strategy<Value = Permutation> {
    Just((1..=n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::new(v).unwrap())
}

/// A permutation and one above it, reached by sorting adjacent pairs.
fn ordered_pair(n: usize) -> impl Strategy<Value = (Permutation, Permutation)> {
    (perm(n), prop::collection::vec(1..n, 0..3 * n)).prop_map(|(lo, sites)| {
        let hi = sites
            .iter()
            .fold(lo.clone(), |p, &s| apply_update(&p, s, true).unwrap());
        (lo, hi)
    })
}

/// A permutation mapping every block of `bp` onto itself.
fn block_preserving(bp: &BlockPartition, seed: &[u32]) -> Permutation {
    let mut labels: Vec<usize> = (1..=bp.n()).collect();
    for i in 1..=bp.k_blocks() {
        let block = &mut labels[bp.cut(i - 1)..bp.cut(i)];
        let m = block.len();
        for j in (1..m).rev() {
            block.swap(j, seed[(bp.cut(i - 1) + j) % seed.len()] as usize % (j + 1));
        }
    }
    Permutation::new(labels).unwrap()
}

#[test]
fn height_fields_are_injective() {
    for n in 2..=6 {
        let perms = all_perms(n);
        let fields: HashSet<Vec<i64>> = perms
            .iter()
            .map(|p| {
                let hf = p.height_field();
                (0..=n)
                    .flat_map(|x| (0..=n).map(move |y| (x, y)))
                    .map(|(x, y)| hf.scaled(x, y))
                    .collect()
            })
            .collect();
        assert_eq!(fields.len(), perms.len(), "N={n}");
    }
}

#[test]
fn order_axioms_exhaustive() {
    for n in 2..=4 {
        let perms = all_perms(n);
        let le: Vec<Vec<bool>> = perms
            .iter()
            .map(|a| perms.iter().map(|b| a.leq(b).unwrap()).collect())
            .collect();
        let m = perms.len();
        for a in 0..m {
            assert!(le[a][a]);
            for b in 0..m {
                if a != b {
                    assert!(!(le[a][b] && le[b][a]));
                }
                for c in 0..m {
                    if le[a][b] && le[b][c] {
                        assert!(le[a][c]);
                    }
                }
            }
        }
        assert!(perms
            .iter()
            .all(|p| p.leq(&Permutation::identity(n)).unwrap()));
        assert!(perms
            .iter()
            .all(|p| Permutation::reversal(n).leq(p).unwrap()));
    }
}

#[test]
fn block_sort_moves_up() {
    for n in 2..=5 {
        for k in 1..=n {
            let bp = BlockPartition::new(n, k).unwrap();
            for p in all_perms(n) {
                let sorted = p.block_sort(&bp).unwrap();
                assert!(p.leq(&sorted).unwrap(), "N={n} K={k} {p}");
                assert_eq!(sorted.skeleton(&bp).unwrap(), p.skeleton(&bp).unwrap());
            }
        }
    }
}

proptest! {
    #[test]
    fn order_axioms_on_random_triples(
        n in 2usize..=8,
        seeds in prop::collection::vec(any::<u64>(), 3),
    ) {
        let perms: Vec<Permutation> = seeds
            .iter()
            .map(|&s| {
                let mut labels: Vec<usize> = (1..=n).collect();
                let mut r = shufflecut::rng::rng_from_seed(s);
                rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut r);
                Permutation::new(labels).unwrap()
            })
            .collect();
        let (a, b, c) = (&perms[0], &perms[1], &perms[2]);
        prop_assert!(a.leq(a).unwrap());
        if a.leq(b).unwrap() && b.leq(a).unwrap() {
            prop_assert_eq!(a, b);
        }
        if a.leq(b).unwrap() && b.leq(c).unwrap() {
            prop_assert!(a.leq(c).unwrap());
        }
    }

    #[test]
    fn sorted_chains_are_transitive((lo, mid) in ordered_pair(7), ups in prop::collection::vec(1usize..7, 0..12)) {
        let hi = ups.iter().fold(mid.clone(), |p, &s| apply_update(&p, s, true).unwrap());
        prop_assert!(lo.leq(&mid).unwrap());
        prop_assert!(mid.leq(&hi).unwrap());
        prop_assert!(lo.leq(&hi).unwrap());
    }

    #[test]
    fn projection_is_monotone((lo, hi) in (2usize..=8).prop_flat_map(ordered_pair)) {
        for k in 1..lo.n() {
            let a = lo.to_exclusion(k).unwrap();
            let b = hi.to_exclusion(k).unwrap();
            prop_assert!(a.leq(&b).unwrap(), "k={}", k);
        }
    }

    #[test]
    fn semi_skeleton_ignores_block_relabeling(
        (p, k) in (2usize..=8).prop_flat_map(|n| (perm(n), 1..=n)),
        seed in prop::collection::vec(any::<u32>(), 8),
    ) {
        let bp = BlockPartition::new(p.n(), k).unwrap();
        let g = block_preserving(&bp, &seed);
        prop_assert!(g.preserves_blocks(&bp).unwrap());
        let q = p.relabel(&g).unwrap();
        prop_assert_eq!(q.semi_skeleton(&bp).unwrap(), p.semi_skeleton(&bp).unwrap());
    }
}

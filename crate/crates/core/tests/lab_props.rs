use rayon::prelude::*;

use shufflecut::exact::{enumerate, evolve_many, Distribution, Method, Model, DEFAULT_STATE_CAP};
use shufflecut::lab::mc::{height_field_means, sep_samples};
use shufflecut::lab::{
    area_audit, cutoff_profile, tv_upper_curve, AreaAuditParams, Coupling, CutoffParams, KRule,
    Mode, ModelKind, TvUpperParams,
};
use shufflecut::path::extremal_paths;
use shufflecut::rng::substream_seed;

fn csv_twice<F: Fn() -> String>(f: F) -> (String, String) {
    (f(), f())
}

#[test]
fn experiments_replay_from_seed_and_config() {
    for coupling in [Coupling::Grand, Coupling::CornerFlip] {
        let p = TvUpperParams {
            n: 10,
            k: 5,
            times: vec![1.0, 4.0, 16.0, 64.0],
            replicas: 500,
            seed: 5,
            coupling,
        };
        let (a, b) = csv_twice(|| tv_upper_curve(&p).unwrap().to_csv(None));
        assert_eq!(a, b);
        let other = tv_upper_curve(&TvUpperParams {
            seed: 6,
            ..p.clone()
        })
        .unwrap()
        .to_csv(None);
        assert_ne!(a, other);
    }

    let p = AreaAuditParams {
        n: 12,
        k: 6,
        horizon: 60.0,
        replicas: 300,
        seed: 11,
        eps: 0.01,
        grid_points: 16,
    };
    let (a, b) = csv_twice(|| area_audit(&p).unwrap().to_csv(None));
    assert_eq!(a, b);

    let p = CutoffParams {
        model: ModelKind::Sep,
        ns: vec![6, 8],
        k: KRule::Half,
        eps: vec![0.25, 0.5],
        mode: Mode::Mc,
        replicas: 400,
        seed: 3,
        state_cap: DEFAULT_STATE_CAP,
        t_max: None,
    };
    let (a, b) = csv_twice(|| cutoff_profile(&p).unwrap().to_csv(None));
    assert_eq!(a, b);
}

/// Fraction of `(mean, se, exact)` triples with `|mean − exact| ≤ 4 se`.
fn share_within(points: &[(f64, f64, f64)]) -> f64 {
    let hits = points
        .iter()
        .filter(|(m, se, e)| (m - e).abs() <= 4.0 * se.max(1e-4))
        .count();
    hits as f64 / points.len() as f64
}

#[test]
fn simulated_exclusion_heights_match_exact_means() {
    let (n, k) = (8, 4);
    let replicas = 10_000u64;
    let times = [0.2, 0.6, 1.5, 3.0, 6.0, 12.0];
    let space = enumerate(Model::exclusion(n, k).unwrap(), DEFAULT_STATE_CAP).unwrap();
    let exact = evolve_many(
        &space,
        &Distribution::point_mass(&space, space.top_index()),
        &times,
        Method::Uniformization,
    )
    .unwrap();
    let (top, _) = extremal_paths(n, k).unwrap();
    let samples: Vec<Vec<_>> = (0..replicas)
        .into_par_iter()
        .map(|r| sep_samples(&top, &times, substream_seed(41, r)).unwrap())
        .collect();
    let mut points = Vec::new();
    for (j, d) in exact.iter().enumerate() {
        for x in 1..n {
            let want: f64 = (0..space.size())
                .map(|i| d.get(i) * space.path(i).unwrap().value(x))
                .sum();
            let values: Vec<f64> = samples.iter().map(|s| s[j].value(x)).collect();
            let (mean, se) = shufflecut::lab::report::mean_se(&values);
            points.push((mean, se, want));
        }
    }
    assert!(share_within(&points) >= 0.95, "{points:?}");
}

#[test]
fn simulated_height_fields_match_exact_means() {
    let n = 5;
    let times = [0.3, 1.0, 2.5, 5.0];
    let space = enumerate(Model::shuffle(n).unwrap(), DEFAULT_STATE_CAP).unwrap();
    let exact = evolve_many(
        &space,
        &Distribution::point_mass(&space, space.top_index()),
        &times,
        Method::Uniformization,
    )
    .unwrap();
    let means = height_field_means(n, &times, 10_000, 8).unwrap();
    let mut points = Vec::new();
    for (j, d) in exact.iter().enumerate() {
        for x in 1..n {
            for y in 1..n {
                let want: f64 = (0..space.size())
                    .map(|i| d.get(i) * space.perm(i).unwrap().height_field().value(x, y))
                    .sum();
                let (mean, se) = means[j][x * (n + 1) + y];
                points.push((mean, se, want));
            }
        }
    }
    assert!(share_within(&points) >= 0.95, "{points:?}");
}

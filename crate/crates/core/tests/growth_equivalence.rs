use pgrowth::chain::chain_height;
use pgrowth::growth::{
    evaluate_lpp, evaluate_oracle, run_event_driven, simulate_event_driven, validate_search_box,
    Evaluator, GrowthError, HeightProfile, ProfileSpec, Query, SearchBox, StaircaseField,
};
use pgrowth::macroscopic::MacroProfile;
use pgrowth::poisson::{mix, sample, PointCloud};
use pgrowth::{Height, Point, TaggedCorner};
use proptest::prelude::*;

fn grid_queries(d: usize, hi: f64, per_axis: usize, times: &[f64]) -> Vec<Query> {
    let mut out = Vec::new();
    let step = hi / per_axis as f64;
    for &t in times {
        for k in 0..per_axis.pow(d as u32) {
            let mut x = Vec::with_capacity(d);
            let mut r = k;
            for _ in 0..d {
                x.push((r % per_axis) as f64 * step + 0.37 * step);
                r /= per_axis;
            }
            out.push(Query::new(x, t));
        }
    }
    out
}

fn cloud(d: usize, lo: f64, hi: f64, t: f64, seed: u64) -> PointCloud {
    let mut lower = vec![lo; d];
    lower.push(0.0);
    let mut upper = vec![hi; d];
    upper.push(t);
    sample(&Point::from(lower), &Point::from(upper), 1.0, seed).unwrap()
}

#[test]
fn empty_cloud_returns_initial_heights() {
    let profile = ProfileSpec::rounded(MacroProfile::flat(vec![1.0, 2.0]).unwrap(), 10.0);
    let empty = cloud(2, -3.0, 3.0, 0.0, 1);
    let c = PointCloud::from_points(
        Point::from([-3.0, -3.0, 0.0]),
        Point::from([3.0, 3.0, 2.0]),
        &[],
        1.0,
        0,
    )
    .unwrap();
    assert!(empty.is_empty());
    let sb = SearchBox::at(&[-3.0, -3.0], &[3.0, 3.0]);
    let qs = grid_queries(2, 3.0, 4, &[1.0, 2.0]);
    let lpp = evaluate_lpp(&profile, &c, &qs, &sb).unwrap();
    let oracle = evaluate_oracle(&profile, &c, &qs, &sb).unwrap();
    for (q, v) in qs.iter().zip(&lpp.values) {
        assert_eq!(*v, profile.eval(&q.x));
    }
    assert_eq!(lpp.values, oracle.values);
}

#[test]
fn single_point_wedge_and_flat_staircase() {
    let c = PointCloud::from_points(
        Point::from([-1.0, -1.0, 0.0]),
        Point::from([2.0, 2.0, 2.0]),
        &[vec![0.5, 0.7, 0.3]],
        1.0,
        0,
    )
    .unwrap();
    let sb = SearchBox::at(&[-1.0, -1.0], &[2.0, 2.0]);
    let wedge = ProfileSpec::wedge(vec![0.0, 0.0]);
    let q = vec![Query::new(vec![1.0, 1.0], 1.0)];
    assert_eq!(evaluate_oracle(&wedge, &c, &q, &sb).unwrap().values, vec![Height::Finite(1)]);
    assert_eq!(evaluate_lpp(&wedge, &c, &q, &sb).unwrap().values, vec![Height::Finite(1)]);

    let flat = StaircaseField::constant(&[-1.0, -1.0], &[2.0, 2.0], Height::Finite(4)).unwrap();
    let none = PointCloud::from_points(
        Point::from([-1.0, -1.0, 0.0]),
        Point::from([2.0, 2.0, 2.0]),
        &[],
        1.0,
        0,
    )
    .unwrap();
    let out = evaluate_oracle(&flat, &none, &q, &sb).unwrap();
    assert_eq!(out.values, vec![Height::Finite(4)]);
    assert_eq!(out.maximizers[0].len(), 1);
}

#[test]
fn query_errors_are_reported() {
    let c = cloud(1, -2.0, 2.0, 1.0, 3);
    let sb = SearchBox::at(&[-2.0], &[2.0]);
    let wedge = ProfileSpec::wedge(vec![0.0]);
    let late = vec![Query::new(vec![1.0], 1.5)];
    assert!(matches!(
        evaluate_lpp(&wedge, &c, &late, &sb),
        Err(GrowthError::QueryTimeOutOfRange { .. })
    ));
    let far = vec![Query::new(vec![3.0], 0.5)];
    assert!(matches!(
        evaluate_oracle(&wedge, &c, &far, &sb),
        Err(GrowthError::QueryOutsideBox { .. })
    ));
    let wide = SearchBox::at(&[-5.0], &[2.0]);
    assert_eq!(
        evaluate_lpp(&wedge, &c, &[Query::new(vec![1.0], 0.5)], &wide),
        Err(GrowthError::CloudDoesNotCover)
    );
    let flat = ProfileSpec::rounded(MacroProfile::flat(vec![1.0]).unwrap(), 1.0);
    assert_eq!(
        simulate_event_driven(&flat, &c, (&[-2.0], &[2.0]), 1.0).unwrap_err(),
        GrowthError::UnboundedLevelSets
    );
}

#[test]
fn event_driven_single_point() {
    let c = PointCloud::from_points(
        Point::from([0.0, 0.0, 0.0]),
        Point::from([3.0, 3.0, 1.0]),
        &[vec![1.0, 2.0, 0.5]],
        1.0,
        0,
    )
    .unwrap();
    let snaps =
        simulate_event_driven(&ProfileSpec::wedge(vec![0.0, 0.0]), &c, (&[0.0, 0.0], &[3.0, 3.0]), 1.0)
            .unwrap();
    assert_eq!(snaps.len(), 2);
    assert_eq!(snaps[0].time, 0.0);
    let last = &snaps[1].field;
    assert_eq!(last.eval(&[1.0, 2.0]), Height::Finite(1));
    assert_eq!(last.eval(&[2.5, 2.5]), Height::Finite(1));
    assert_eq!(last.eval(&[0.99, 2.5]), Height::ZERO);
    assert_eq!(last.eval(&[2.5, 1.99]), Height::ZERO);
    assert_eq!(last.eval(&[-0.1, 1.0]), Height::NegInf);

    let none = cloud(2, 0.0, 3.0, 0.0, 1);
    let wedge = ProfileSpec::wedge(vec![0.0, 0.0]);
    let init = pgrowth::growth::event::initial_field(&wedge, (&[0.0, 0.0], &[3.0, 3.0])).unwrap();
    let last = run_event_driven(&wedge, &none, (&[0.0, 0.0], &[3.0, 3.0]), 0.0, |_, _| {}).unwrap();
    assert_eq!(last, init);
}

#[test]
fn wedge_triple_equivalence_small() {
    let wedge = ProfileSpec::wedge(vec![0.0, 0.0]);
    let sb = SearchBox::at(&[-1.0, -1.0], &[4.0, 4.0]);
    let qs = grid_queries(2, 4.0, 4, &[1.5, 3.0]);
    for seed in 0..20 {
        let c = cloud(2, -1.0, 4.0, 3.0, mix(11, seed));
        let lpp = evaluate_lpp(&wedge, &c, &qs, &sb).unwrap();
        let oracle = evaluate_oracle(&wedge, &c, &qs, &sb).unwrap();
        assert_eq!(lpp.values, oracle.values, "seed {seed}");
        for (i, q) in qs.iter().enumerate() {
            let mut upper = q.x.clone();
            upper.push(q.t);
            let h = chain_height(&c, &TaggedCorner::at(&[0.0, 0.0]), &Point::from(upper));
            assert_eq!(lpp.values[i], Height::Finite(h as i64));
        }
        for t in [1.5, 3.0] {
            let field = run_event_driven(&wedge, &c, (&[0.0, 0.0], &[4.0, 4.0]), t, |_, _| {}).unwrap();
            for (q, v) in qs.iter().zip(&lpp.values) {
                if q.t == t {
                    assert_eq!(field.eval(&q.x), *v, "seed {seed} {q:?}");
                }
            }
        }
    }
}

#[test]
fn reported_maximizers_attain_the_value() {
    let profile = ProfileSpec::rounded(MacroProfile::shock(vec![0.5], vec![1.5]).unwrap(), 1.0);
    let sb = SearchBox::at(&[-8.0], &[4.0]);
    let qs = grid_queries(1, 4.0, 9, &[2.0, 4.0]);
    for seed in 0..10 {
        let c = cloud(1, -8.0, 4.0, 4.0, mix(5, seed));
        for out in [
            evaluate_lpp(&profile, &c, &qs, &sb).unwrap(),
            evaluate_oracle(&profile, &c, &qs, &sb).unwrap(),
        ] {
            for (i, q) in qs.iter().enumerate() {
                assert!(!out.maximizers[i].is_empty());
                for y in &out.maximizers[i] {
                    let mut upper = q.x.clone();
                    upper.push(q.t);
                    let h = chain_height(&c, y, &Point::from(upper));
                    assert_eq!(profile.value_at(&y.coords) + h as i64, out.values[i]);
                }
            }
        }
    }
}

#[test]
fn search_box_doubling_detects_a_small_box() {
    // Steep flat profile: maximizers lie far to the left, so a tight box cuts them off.
    let profile = ProfileSpec::rounded(MacroProfile::flat(vec![0.5]).unwrap(), 1.0);
    let c = cloud(1, -40.0, 2.0, 3.0, 17);
    let qs = vec![Query::new(vec![1.5], 3.0)];
    let tight = SearchBox::at(&[-0.5], &[2.0]);
    let err = validate_search_box(Evaluator::Lpp, &profile, &c, &qs, &tight).unwrap_err();
    assert!(matches!(err, GrowthError::SearchBoxTooSmall { .. }), "{err:?}");
    let roomy = SearchBox::at(&[-19.0], &[2.0]);
    assert!(validate_search_box(Evaluator::Oracle, &profile, &c, &qs, &roomy).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monotone_in_space_and_time(seed in any::<u64>()) {
        let profile = ProfileSpec::rounded(MacroProfile::flat(vec![1.0, 0.5]).unwrap(), 1.0);
        let sb = SearchBox::at(&[-6.0, -6.0], &[3.0, 3.0]);
        let c = cloud(2, -6.0, 3.0, 2.0, seed);
        let qs = grid_queries(2, 3.0, 4, &[0.5, 1.0, 2.0]);
        let out = evaluate_lpp(&profile, &c, &qs, &sb).unwrap();
        for (i, a) in qs.iter().enumerate() {
            for (j, b) in qs.iter().enumerate() {
                let below = a.t <= b.t && a.x.iter().zip(&b.x).all(|(u, v)| u <= v);
                if below {
                    prop_assert!(out.values[i] <= out.values[j]);
                }
            }
        }
    }

    #[test]
    fn attractive_and_preserves_height_differences(seed in any::<u64>(), h in 1i64..4) {
        let flat = MacroProfile::flat(vec![1.0]).unwrap();
        let sigma = ProfileSpec::rounded(flat.clone(), 1.0);
        // ζ₀ = σ₀ + h on y ≥ 0: monotone and sandwiched.
        let grid = pgrowth::GridSpec::uniform(Point::from([-10.0]), Point::from([10.0]), 20).unwrap();
        let a0 = pgrowth::GridRegion::from_predicate(grid, |y| y[0] >= 0.0);
        let zeta = pgrowth::growth::RaisedProfile::new(sigma.clone(), a0, h, &[-10.0], &[10.0]).unwrap();
        let sb = SearchBox::at(&[-10.0], &[5.0]);
        let c = cloud(1, -10.0, 5.0, 3.0, seed);
        let qs = grid_queries(1, 5.0, 10, &[1.0, 3.0]);
        let s = evaluate_lpp(&sigma, &c, &qs, &sb).unwrap();
        let z = evaluate_lpp(&zeta, &c, &qs, &sb).unwrap();
        for (a, b) in s.values.iter().zip(&z.values) {
            prop_assert!(a <= b);
            prop_assert!(*b <= *a + h);
        }
    }
}

fn random_staircase(steps0: &[i64], steps1: &[i64]) -> StaircaseField {
    let b: Vec<f64> = (0..=steps0.len()).map(|k| k as f64 * 0.75).collect();
    let mut values = Vec::new();
    for i in 0..steps0.len() {
        for j in 0..steps1.len() {
            values.push(Height::Finite(
                steps0[..=i].iter().sum::<i64>() + steps1[..=j].iter().sum::<i64>(),
            ));
        }
    }
    StaircaseField::new(vec![b.clone(), b], values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn staircase_triple_equivalence(
        seed in any::<u64>(),
        steps0 in proptest::collection::vec(0i64..3, 4),
        steps1 in proptest::collection::vec(0i64..3, 4),
    ) {
        let field = random_staircase(&steps0, &steps1);
        let spec = ProfileSpec::Staircase { field: field.clone() };
        let sb = SearchBox::at(&[0.0, 0.0], &[3.0, 3.0]);
        let c = cloud(2, 0.0, 3.0, 2.0, seed);
        let qs = grid_queries(2, 3.0, 5, &[0.7, 2.0]);
        let lpp = evaluate_lpp(&spec, &c, &qs, &sb).unwrap();
        let oracle = evaluate_oracle(&spec, &c, &qs, &sb).unwrap();
        prop_assert_eq!(&lpp.values, &oracle.values);
        for t in [0.7, 2.0] {
            let f = run_event_driven(&spec, &c, (&[0.0, 0.0], &[3.0, 3.0]), t, |_, _| {}).unwrap();
            for (q, v) in qs.iter().zip(&lpp.values) {
                if q.t == t {
                    prop_assert_eq!(f.eval(&q.x), *v);
                }
            }
        }
    }

    #[test]
    fn rounded_lpp_matches_oracle_in_two_dimensions(seed in any::<u64>()) {
        let profile = ProfileSpec::rounded(
            MacroProfile::rarefaction(vec![0.6, 0.8], vec![1.4, 1.2]).unwrap(),
            3.0,
        );
        let sb = SearchBox::at(&[-4.0, -4.0], &[3.0, 3.0]);
        let c = cloud(2, -4.0, 3.0, 2.0, seed);
        let qs = grid_queries(2, 3.0, 3, &[1.0, 2.0]);
        let lpp = evaluate_lpp(&profile, &c, &qs, &sb).unwrap();
        let oracle = evaluate_oracle(&profile, &c, &qs, &sb).unwrap();
        prop_assert_eq!(lpp.values, oracle.values);
    }
}

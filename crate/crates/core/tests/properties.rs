use num_traits::Zero;
use proptest::prelude::*;

use prismlab::bell::{ch_full, ChSettings};
use prismlab::io::{model_from_json, model_to_json};
use prismlab::rates::{exact_rates, RateKey};
use prismlab::rational::{int, ratio};
use prismlab::{Block, EventQuery, ExperimentGeometry, PrismModel, ResponseFunction, Spin, Wing};

const CODES: [char; 3] = ['U', 'D', '-'];

fn arb_model() -> impl Strategy<Value = PrismModel> {
    let dims = (1usize..4, 1usize..4);
    dims.prop_flat_map(|(ml, mr)| {
        let block = (1i64..50, proptest::collection::vec(0usize..3, ml + mr));
        proptest::collection::vec(block, 1..12).prop_map(move |blocks| {
            let total: i64 = blocks.iter().map(|b| b.0).sum();
            let geometry = ExperimentGeometry::from_degrees(
                &(0..ml).map(|i| 40.0 * i as f64).collect::<Vec<_>>(),
                &(0..mr).map(|j| 25.0 + 55.0 * j as f64).collect::<Vec<_>>(),
            )
            .unwrap();
            let blocks = blocks
                .into_iter()
                .map(|(w, codes)| {
                    let l: String = codes[..ml].iter().map(|&c| CODES[c]).collect();
                    let r: String = codes[ml..].iter().map(|&c| CODES[c]).collect();
                    Block::new(ratio(w, total), ResponseFunction::from_codes(&l, &r).unwrap())
                })
                .collect();
            PrismModel::new(geometry, blocks).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn up_and_down_partition_show(m in arb_model()) {
        let g = m.geometry().clone();
        for i in 0..g.len(Wing::Left) {
            let up = m.event_measure(&EventQuery::all().left(i, Spin::Up)).unwrap();
            let down = m.event_measure(&EventQuery::all().left(i, Spin::Down)).unwrap();
            prop_assert_eq!(up + down, m.event_measure(&EventQuery::all().shows_left(i)).unwrap());
            let both = m.event_measure(&EventQuery::all().left(i, Spin::Up).left(i, Spin::Down)).unwrap();
            prop_assert!(both.is_zero());
        }
    }

    #[test]
    fn conjunction_never_increases_measure(m in arb_model(), i in 0usize..3, j in 0usize..3) {
        let g = m.geometry().clone();
        let (i, j) = (i % g.len(Wing::Left), j % g.len(Wing::Right));
        let base = EventQuery::all().left(i, Spin::Up);
        let narrower = base.clone().shows_right(j);
        let narrowest = narrower.clone().right(j, Spin::Down);
        let a = m.event_measure(&base).unwrap();
        let b = m.event_measure(&narrower).unwrap();
        let c = m.event_measure(&narrowest).unwrap();
        prop_assert!(a >= b && b >= c);
        if let Ok(p) = m.conditional_probability(&narrowest, &narrower) {
            prop_assert!(p >= int(0) && p <= int(1));
        }
    }

    #[test]
    fn screening_off_holds_for_every_deterministic_model(m in arb_model()) {
        let g = m.geometry().clone();
        for i in 0..g.len(Wing::Left) {
            for j in 0..g.len(Wing::Right) {
                prop_assert!(m.check_screening_off(i, j).unwrap().passed);
            }
        }
    }

    #[test]
    fn rate_relations(m in arb_model()) {
        let r = exact_rates(&m);
        for (key, entry) in &r.entries {
            let v = entry.exact.clone().unwrap();
            prop_assert!(v >= int(0) && v <= int(1));
            if let RateKey::Pair { left, right } = key {
                let single = |wing, index| r.get(&RateKey::Single { wing, index }).unwrap().exact.clone().unwrap();
                prop_assert!(v <= single(Wing::Left, *left) && v <= single(Wing::Right, *right));
            }
        }
    }

    #[test]
    fn full_ch_bounded_when_two_directions_per_wing(m in arb_model()) {
        let g = m.geometry();
        if g.len(Wing::Left) >= 2 && g.len(Wing::Right) >= 2 {
            let v = ch_full(&m, &ChSettings::default()).unwrap();
            prop_assert!(v >= int(-1) && v <= int(0));
        }
    }

    #[test]
    fn json_round_trip_is_byte_identical(m in arb_model()) {
        let text = model_to_json(&m);
        let back = model_from_json(&text).unwrap();
        prop_assert_eq!(model_to_json(&back), text);
    }
}

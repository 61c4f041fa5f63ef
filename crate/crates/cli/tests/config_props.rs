use hopleg::{ControllerMode, Gains, StopCondition};
use hopleg_cli::{parse_config_str, RunConfig, PRESETS};
use proptest::prelude::*;

fn any_config() -> impl Strategy<Value = RunConfig> {
    (
        0..PRESETS.len(),
        0.5f64..20.0,
        1.0f64..5000.0,
        proptest::option::of((1.0f64..1e4, 0.0f64..50.0)),
        prop_oneof![
            (1usize..10).prop_map(StopCondition::Hops),
            (0.0f64..5.0).prop_map(StopCondition::Duration)
        ],
        any::<bool>(),
        0.05f64..1.0,
    )
        .prop_map(|(i, m, k_s, gains, stop, plots, headroom)| {
            let mut c = RunConfig::preset(PRESETS[i]).unwrap();
            c.hopper.m = m;
            c.hopper.k_s = k_s;
            c.gains = gains.map(|(k_p, k_d)| Gains { k_p, k_d });
            if c.gains.is_none() {
                c.controller = ControllerMode::Position;
            }
            c.stop = stop;
            c.plots = plots;
            c.headroom = headroom;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialized_config_parses_back_equal(c in any_config()) {
        let text = c.to_config_string();
        prop_assert_eq!(parse_config_str(&text).unwrap(), c);
    }

    #[test]
    fn stray_keys_are_rejected(key in "[a-z]{3,8}_x") {
        let text = format!("preset = physical-force\n{key} = 1\n");
        let err = parse_config_str(&text).unwrap_err().to_string();
        prop_assert!(err.starts_with("line 2: unknown key"), "{}", err);
    }
}

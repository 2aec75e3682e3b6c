mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cata_core::parse_script;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn standard_form_is_equisatisfiable(seed in any::<u64>()) {
        let text = common::random_script(&mut ChaCha8Rng::seed_from_u64(seed));
        let script = parse_script(&text).unwrap();
        if let Err(e) = common::check_normalizer(&script) {
            panic!("{e}\n{text}");
        }
    }
}

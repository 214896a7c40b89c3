use proptest::test_runner::{Config, RngSeed};

/// Property-test settings with a fixed seed, so every run checks the same
/// cases.
pub fn fixed_cases(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x6d64_676e), failure_persistence: None, ..Config::default() }
}

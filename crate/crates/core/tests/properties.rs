use num_traits::{One, Zero};
use proptest::prelude::*;

use roughvol::algebra::{
    decompose_to_generators, shuffle, Alphabet, Coeff, Letter, Word, WordPolynomial,
};
use roughvol::pricing::{
    mc_call_prices, read_quotes, write_quotes, Contract, McSettings, OptionQuote, PathCache,
    QHestonParams, REFERENCE_FIT,
};

fn letter() -> impl Strategy<Value = Letter> {
    prop_oneof![
        (0u8..2).prop_map(Letter::X),
        (0u8..2).prop_map(Letter::W),
        Just(Letter::Time),
    ]
}

fn word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(letter(), 0..=max).prop_map(Word::new)
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

proptest! {
    #[test]
    fn shuffle_mass_is_binomial(a in word(4), b in word(4)) {
        let p = shuffle(&a, &b);
        let mass = p.iter().fold(Coeff::zero(), |acc, (_, c)| acc + c);
        prop_assert_eq!(mass, Coeff::from(binomial(a.len() + b.len(), a.len())));
        for (w, c) in p.iter() {
            prop_assert_eq!(w.len(), a.len() + b.len());
            prop_assert!(*c > Coeff::zero());
        }
    }

    #[test]
    fn shuffle_is_commutative(a in word(4), b in word(4)) {
        prop_assert_eq!(shuffle(&a, &b), shuffle(&b, &a));
    }

    #[test]
    fn shuffle_is_associative(a in word(3), b in word(3), c in word(3)) {
        let left = shuffle(&a, &b).shuffle(&WordPolynomial::from_word(c.clone()));
        let right = WordPolynomial::from_word(a).shuffle(&shuffle(&b, &c));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn decomposition_expands_back_to_the_word(
        hurst in prop_oneof![Just(0.1), Just(0.2), Just(0.25), Just(0.3)],
        pick in any::<prop::sample::Index>(),
    ) {
        let alphabet = Alphabet::new(2, 1, hurst).unwrap();
        let words = alphabet.words_up_to_unit_weight();
        let w = pick.get(&words).clone();
        let expanded = decompose_to_generators(&w, &alphabet).unwrap().expand();
        prop_assert_eq!(expanded.coeff(&w), Coeff::one());
        prop_assert_eq!(expanded.len(), 1);
    }

    #[test]
    fn quotes_round_trip(rows in prop::collection::vec((1e-3..5.0f64, 0.1..3.0f64, 0.0..1.0f64), 1..20)) {
        let quotes: Vec<OptionQuote> = rows
            .iter()
            .map(|&(t, k, p)| OptionQuote::new(t, k, p).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_quotes(&mut buf, &quotes).unwrap();
        prop_assert_eq!(read_quotes(buf.as_slice()).unwrap(), quotes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // With common paths, call prices inherit monotonicity and convexity in
    // the strike from the payoff, path by path.
    #[test]
    fn prices_are_decreasing_and_convex_in_strike(
        a in 0.0..0.5f64,
        z0 in -0.3..0.3f64,
        seed in 0u64..1000,
        k0 in 0.7..0.95f64,
        dk in 0.02..0.1f64,
    ) {
        let params = QHestonParams { a, z0, hurst: 0.2, ..REFERENCE_FIT };
        let contracts: Vec<Contract> = (0..5)
            .map(|i| Contract { maturity: 0.25, strike: k0 + dk * i as f64 })
            .collect();
        let mc = McSettings::new(8, 64, seed);
        let prices: Vec<f64> = mc_call_prices(&params, &contracts, &mc, &PathCache::new())
            .unwrap()
            .prices
            .iter()
            .map(|p| p.price)
            .collect();
        for pair in prices.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-15, "{:?}", prices);
        }
        for tri in prices.windows(3) {
            prop_assert!(tri[0] - 2.0 * tri[1] + tri[2] >= -1e-12, "{:?}", prices);
        }
    }
}

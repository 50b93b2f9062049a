//! Shuffle products and the generator decomposition of a few words.

use roughvol::algebra::{decompose_to_generators, shuffle, w, Alphabet};

fn main() -> roughvol::Result<()> {
    println!("0a ⧢ 1 = {}", shuffle(&w("0a"), &w("1")));
    println!("a ⧢ ab = {}", shuffle(&w("a"), &w("ab")));

    // three X-letters and two W-letters
    let alphabet = Alphabet::new(3, 2, 0.1)?;
    for lit in ["0a12", "0a0", "0a00", "a0"] {
        let word = w(lit);
        let poly = decompose_to_generators(&word, &alphabet)?;
        println!("{lit:>5} (weight {:.2}) = {poly}", alphabet.weight(&word));
        assert_eq!(
            poly.expand(),
            roughvol::algebra::WordPolynomial::from_word(word)
        );
    }

    // words above unit weight have no Itô lift and are refused
    let heavy = roughvol::algebra::Word::x_power(11);
    match decompose_to_generators(&heavy, &alphabet) {
        Err(e) => println!("{heavy}: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

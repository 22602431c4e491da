//! Parses a network description and prints its stoichiometry and rates.

use lna_mor::netparse::{parse_network, KineticModel};

const SOURCE: &str = "
# Reversible dimerization with production and decay of the monomer.
species a = 2
species d = 0
param k = 0.5
volume = 50
output a
reaction make: -> a @ 1
reaction bind: 2 a -> d @ k * a^2
reaction split: d -> 2 a @ 0.1 * d
reaction decay: a -> @ 0.2 * a
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_network(SOURCE)?;
    println!("species: {:?}", net.species());
    println!("volume: {}", net.volume());
    println!("stoichiometry:{}", net.stoichiometry());
    let f = net.rates(net.x0())?;
    for (i, v) in f.iter().enumerate() {
        println!("rate {} at x0 = {v}", net.reaction_name(i));
    }
    println!("d f / d x at x0:{}", net.rate_jacobian_at(net.x0())?);
    print!("round trip:\n{}", net.to_dsl());
    Ok(())
}

//! Outcome rules and TrueSkill updates between two players.

use skate::rating::{derive_outcome_absolute, derive_outcome_relative, update_pair};
use skate::{Outcome, TrueSkillParams};

fn main() {
    let params = TrueSkillParams::default();
    println!("prior: mu={:.3} sigma={:.3}, draw margin {:.4}", params.mu0, params.sigma0, params.draw_margin());

    println!("\np_a\tp_b\trelative\tabsolute(0.5)");
    for (a, b) in [(0.9, 0.88), (0.9, 0.85), (0.6, 0.4), (0.45, 0.3), (0.55, 0.51)] {
        println!("{a}\t{b}\t{:?}\t{:?}", derive_outcome_relative(a, b, 0.05), derive_outcome_absolute(a, b, 0.5));
    }

    // a stronger player wins three, then draws twice
    let (mut a, mut b) = (params.prior(), params.prior());
    println!("\nstep\toutcome\tmu_a\tsigma_a\tmu_b\tsigma_b");
    for (step, outcome) in [Outcome::AWins, Outcome::AWins, Outcome::AWins, Outcome::Draw, Outcome::Draw].into_iter().enumerate() {
        (a, b) = update_pair(a, b, outcome, &params).unwrap();
        println!("{}\t{outcome:?}\t{:.3}\t{:.3}\t{:.3}\t{:.3}", step + 1, a.mu, a.sigma, b.mu, b.sigma);
    }
}

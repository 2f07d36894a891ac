//! The pixel-cosine shortcut: perfect on centred pairs, chance on translated
//! pairs, and a smooth similarity decay on noise with inverted pixels.

use premack::esbnprobe::{discriminator_accuracy, flip_sweep, gen_paired_sd, ProbeMode, DEFAULT_THRESHOLD};
use premack::rng::SeededRng;

fn main() -> premack::Result<()> {
    let rng = SeededRng::new(2024);
    for mode in [ProbeMode::Centered, ProbeMode::Translated] {
        let pairs = gen_paired_sd(mode, 2000, &rng)?;
        let acc = discriminator_accuracy(&pairs, DEFAULT_THRESHOLD)?;
        println!("{:>10}: accuracy {:.2}%", mode.name(), 100.0 * acc);
    }
    let rows = flip_sweep(&rng, 20)?;
    for r in rows.iter().step_by(100) {
        println!("k = {:>4}  mean similarity {:.5}  sd {:.5}", r.k, r.mean, r.sd);
    }
    Ok(())
}

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::StudentId;

/// Seeded experimental/control split. The experimental side gets
/// `round(fraction * n)` students; neither side may be empty.
pub fn experiment_split(
    students: &[StudentId],
    fraction: f64,
    seed: u64,
) -> Result<(BTreeSet<StudentId>, BTreeSet<StudentId>)> {
    let mut pool: Vec<StudentId> = students.to_vec();
    pool.sort();
    pool.dedup();
    let n = pool.len();
    if n < 2 {
        return Err(Error::param("a split needs at least two students"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param(format!("fraction {fraction} outside (0, 1)")));
    }
    let k = (fraction * n as f64).round() as usize;
    if k == 0 || k == n {
        return Err(Error::param(format!(
            "fraction {fraction} of {n} students leaves one side empty"
        )));
    }
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let control = pool.split_off(k);
    Ok((pool.into_iter().collect(), control.into_iter().collect()))
}

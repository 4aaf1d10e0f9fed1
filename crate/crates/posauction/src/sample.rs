//! Small random instances for the bound and dominance checks.

use posauction_core::{Matrix, ProblemInstance};
use rand::Rng;

/// Up to `max_n` bidders and `max_m` auctions. Values are `U(0.05, 2)` with
/// 15% left at zero; each auction has `1..=min(n, 3)` slots with decaying
/// normalizers.
pub fn small_instance<R: Rng + ?Sized>(rng: &mut R, max_n: usize, max_m: usize) -> ProblemInstance {
    let n = rng.random_range(1..=max_n.max(1));
    let m = rng.random_range(1..=max_m.max(1));
    let mut values = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            if rng.random_bool(0.85) {
                values.set(i, j, rng.random_range(0.05..2.0));
            }
        }
    }
    let pos = (0..m)
        .map(|_| {
            let s = rng.random_range(1..=n.min(3));
            let mut p = vec![1.0];
            for _ in 1..s {
                let last = p[p.len() - 1];
                p.push(last * rng.random_range(0.3..1.0));
            }
            p
        })
        .collect();
    ProblemInstance::new(values, pos).expect("generated instance is valid")
}

/// Two bidders, two auctions, values `U(0.1, 1)` with 10% zeros, one or two
/// slots per auction.
pub fn two_by_two<R: Rng + ?Sized>(rng: &mut R) -> ProblemInstance {
    let mut values = Matrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            if rng.random_bool(0.9) {
                values.set(i, j, rng.random_range(0.1..1.0));
            }
        }
    }
    let pos =
        (0..2).map(|_| if rng.random_bool(0.5) { vec![1.0] } else { vec![1.0, rng.random_range(0.3..0.9)] }).collect();
    ProblemInstance::new(values, pos).expect("generated instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use posauction_core::rng::substream;

    #[test]
    fn shapes_stay_in_range() {
        let mut rng = substream(1, &["sample"]);
        for _ in 0..200 {
            let inst = small_instance(&mut rng, 4, 3);
            assert!((1..=4).contains(&inst.num_bidders()));
            assert!((1..=3).contains(&inst.num_auctions()));
            for j in 0..inst.num_auctions() {
                assert!(inst.slots(j) <= inst.num_bidders().min(3));
            }
            let t = two_by_two(&mut rng);
            assert_eq!((t.num_bidders(), t.num_auctions()), (2, 2));
        }
    }
}

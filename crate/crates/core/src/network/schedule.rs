use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NetworkError;

pub type AppId = u32;

/// Repeating time-bin pattern starting at t = 0. Bin `k` covers
/// `[k·L, (k+1)·L)` and belongs to `pattern[k mod |pattern|]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSchedule {
    pub bin_length_ns: u64,
    pub pattern: Vec<AppId>,
}

impl NetworkSchedule {
    pub fn new(bin_length_ns: u64, pattern: Vec<AppId>) -> Result<Self, NetworkError> {
        if bin_length_ns == 0 || pattern.is_empty() {
            return Err(NetworkError::Parameter("schedule needs a positive bin length and a non-empty pattern".into()));
        }
        Ok(Self { bin_length_ns, pattern })
    }

    pub fn bin_index(&self, t: u64) -> u64 {
        t / self.bin_length_ns
    }

    pub fn owner_of_bin(&self, k: u64) -> AppId {
        self.pattern[(k % self.pattern.len() as u64) as usize]
    }

    pub fn owner_at(&self, t: u64) -> AppId {
        self.owner_of_bin(self.bin_index(t))
    }

    pub fn bin_end(&self, t: u64) -> u64 {
        (self.bin_index(t) + 1) * self.bin_length_ns
    }

    /// Start of the first bin owned by `app` that begins at or after `t`,
    /// or `None` if `app` is not in the pattern.
    pub fn next_owned_start(&self, app: AppId, t: u64) -> Option<u64> {
        let len = self.pattern.len() as u64;
        let first = self.bin_index(t) + u64::from(t % self.bin_length_ns != 0);
        (0..len).map(|i| first + i).find(|&k| self.owner_of_bin(k) == app).map(|k| k * self.bin_length_ns)
    }
}

/// Bins of `bin_multiple × expected_epr_ns`, in a uniformly random order of
/// `apps` repeated cyclically.
pub fn build_schedule<R: Rng + ?Sized>(
    apps: &[AppId],
    bin_multiple: u32,
    expected_epr_ns: f64,
    rng: &mut R,
) -> Result<NetworkSchedule, NetworkError> {
    if apps.is_empty() || bin_multiple == 0 || !(expected_epr_ns > 0.0) {
        return Err(NetworkError::Parameter("schedule needs apps, a positive multiple and a positive EPR time".into()));
    }
    let mut pattern = apps.to_vec();
    pattern.shuffle(rng);
    NetworkSchedule::new((bin_multiple as f64 * expected_epr_ns).round() as u64, pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_app_owns_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = build_schedule(&[7], 1, 15_384_615.4, &mut rng).unwrap();
        assert_eq!(s.bin_length_ns, 15_384_615);
        for k in 0..10 {
            assert_eq!(s.owner_of_bin(k), 7);
        }
    }

    #[test]
    fn reproducible_under_seed() {
        let a = build_schedule(&[1, 2], 3, 1000.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = build_schedule(&[1, 2], 3, 1000.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.pattern == vec![1, 2] || a.pattern == vec![2, 1]);
        assert_eq!(a.bin_length_ns, 3000);
    }

    #[test]
    fn each_app_owns_one_bin_in_every_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = build_schedule(&[0, 1, 2], 2, 500.0, &mut rng).unwrap();
        let l = 40;
        for app in 0..3 {
            let owned = (0..3 * l).filter(|&k| s.owner_of_bin(k) == app).count();
            assert_eq!(owned, l as usize);
        }
        for start in 0..30 {
            let mut w: Vec<_> = (start..start + 3).map(|k| s.owner_of_bin(k)).collect();
            w.sort();
            assert_eq!(w, vec![0, 1, 2]);
        }
    }

    #[test]
    fn permutations_are_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut first = [0; 3];
        for _ in 0..3000 {
            let s = build_schedule(&[0, 1, 2], 1, 10.0, &mut rng).unwrap();
            first[s.pattern[0] as usize] += 1;
        }
        assert!(first.iter().all(|&c| (850..1150).contains(&c)), "{first:?}");
    }

    #[test]
    fn next_owned_start() {
        let s = NetworkSchedule::new(100, vec![4, 5]).unwrap();
        assert_eq!(s.next_owned_start(4, 0), Some(0));
        assert_eq!(s.next_owned_start(5, 0), Some(100));
        assert_eq!(s.next_owned_start(4, 1), Some(200));
        assert_eq!(s.next_owned_start(5, 100), Some(100));
        assert_eq!(s.next_owned_start(9, 0), None);
        assert_eq!(s.owner_at(250), 4);
        assert_eq!(s.bin_end(250), 300);
    }

    #[test]
    fn rejects_empty_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(build_schedule(&[], 1, 1.0, &mut rng).is_err());
        assert!(build_schedule(&[1], 0, 1.0, &mut rng).is_err());
    }
}

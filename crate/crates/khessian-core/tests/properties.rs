//! Property tests for the symmetric-function layer, checked against
//! independent oracles (subset enumeration, central differences).

use khessian_core::symfun::{self, binomial};
use khessian_core::{ConeQuery, Spectrum};
use proptest::prelude::*;

/// Subset-enumeration oracle for sigma_k: exponential, test-only.
fn sigma_enum(lam: &[f64], k: usize) -> f64 {
    let n = lam.len();
    let mut total = 0.0;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        total += idx.iter().map(|&i| lam[i]).product::<f64>();
        // next k-combination
        let mut i = k;
        loop {
            if i == 0 {
                return total;
            }
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn spectrum_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn matches_subset_enumeration(n in 1usize..=8, lam in prop::collection::vec(-10.0f64..10.0, 8)) {
        let lam = &lam[..n];
        let s = Spectrum::new(lam.to_vec()).unwrap();
        for k in 1..=n {
            prop_assert!(rel_close(s.sigma(k).unwrap(), sigma_enum(lam, k), 1e-12));
        }
    }

    #[test]
    fn permutation_symmetry(lam in spectrum_strategy(5), seed in any::<u64>()) {
        let s = Spectrum::new(lam.clone()).unwrap();
        let mut perm = lam.clone();
        // Fisher-Yates driven by the seed.
        let mut state = seed | 1;
        for i in (1..perm.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            perm.swap(i, j);
        }
        let p = Spectrum::new(perm).unwrap();
        for k in 1..=5 {
            prop_assert_eq!(s.sigma(k).unwrap(), p.sigma(k).unwrap());
        }
    }

    #[test]
    fn homogeneity(lam in spectrum_strategy(4), t in 0.1f64..10.0) {
        let s = Spectrum::new(lam.clone()).unwrap();
        let scaled = Spectrum::new(lam.iter().map(|x| t * x).collect()).unwrap();
        for k in 1..=4 {
            let lhs = scaled.sigma(k).unwrap();
            let rhs = t.powi(k as i32) * s.sigma(k).unwrap();
            prop_assert!(rel_close(lhs, rhs, 1e-12));
        }
    }

    #[test]
    fn euler_identity(lam in spectrum_strategy(5)) {
        let s = Spectrum::new(lam.clone()).unwrap();
        for k in 1..=5 {
            let g = s.sigma_grad(k).unwrap();
            let dot: f64 = lam.iter().zip(&g).map(|(x, d)| x * d).sum();
            prop_assert!(rel_close(dot, k as f64 * s.sigma(k).unwrap(), 1e-12));
        }
    }

    #[test]
    fn grad_matches_central_differences(lam in spectrum_strategy(4)) {
        let s = Spectrum::new(lam.clone()).unwrap();
        let h = 1e-6;
        for k in 1..=4 {
            let g = s.sigma_grad(k).unwrap();
            for i in 0..4 {
                let mut up = lam.clone();
                let mut dn = lam.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (symfun::elem_sym(&up, k) - symfun::elem_sym(&dn, k)) / (2.0 * h);
                prop_assert!((g[i] - fd).abs() <= 5e-6 * (1.0 + g[i].abs()));
            }
        }
    }

    #[test]
    fn cone_nesting_on_positive_spectra(lam in prop::collection::vec(0.01f64..5.0, 4)) {
        let s = Spectrum::new(lam).unwrap();
        for k in 1..=4 {
            prop_assert!(s.in_gamma(ConeQuery::strict(k)));
        }
    }

    #[test]
    fn nesting_from_definition(lam in spectrum_strategy(4)) {
        let s = Spectrum::new(lam).unwrap();
        for k in (2..=4).rev() {
            if s.in_gamma(ConeQuery::strict(k)) {
                prop_assert!(s.in_gamma(ConeQuery::strict(k - 1)));
            }
        }
    }
}

/// Deterministic LCG sampler for cone points: uniform in [-1, 2]^n, rejected
/// against the cone.
struct ConeSampler {
    state: u64,
    n: usize,
    k: usize,
}

impl ConeSampler {
    fn new(seed: u64, n: usize, k: usize) -> Self {
        ConeSampler { state: seed.max(1), n, k }
    }

    fn next_f64(&mut self) -> f64 {
        self.state = self
            .state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.state >> 11) as f64 / (1u64 << 53) as f64
    }

    fn next(&mut self) -> Spectrum {
        loop {
            let lam: Vec<f64> = (0..self.n).map(|_| -1.0 + 3.0 * self.next_f64()).collect();
            let s = Spectrum::new(lam).unwrap();
            if s.in_gamma(ConeQuery::strict(self.k)) {
                return s;
            }
        }
    }
}

#[test]
fn ellipticity_on_the_cone() {
    for (n, k) in [(2, 2), (3, 2), (3, 3), (4, 3)] {
        let mut sampler = ConeSampler::new(7, n, k);
        for _ in 0..1000 {
            let s = sampler.next();
            let g = s.sigma_grad(k).unwrap();
            assert!(g.iter().all(|&x| x > 0.0), "non-positive grad at {:?}", s);
        }
    }
}

#[test]
fn fk_concavity_on_the_cone() {
    for (n, k) in [(2, 2), (3, 2), (3, 3), (4, 4)] {
        let mut sampler = ConeSampler::new(11, n, k);
        for i in 0..1000 {
            let a = sampler.next();
            let b = sampler.next();
            let t = 0.5 + 0.4 * (i as f64 / 1000.0 - 0.5);
            let mid: Vec<f64> = a
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(x, y)| t * x + (1.0 - t) * y)
                .collect();
            let fm = Spectrum::new(mid).unwrap().fk_value(k).unwrap();
            let fa = a.fk_value(k).unwrap();
            let fb = b.fk_value(k).unwrap();
            assert!(fm >= t * fa + (1.0 - t) * fb - 1e-10);
        }
    }
}

#[test]
fn maclaurin_chain_non_increasing() {
    for (n, k) in [(3, 2), (3, 3), (4, 4), (5, 3)] {
        let mut sampler = ConeSampler::new(13, n, k);
        for _ in 0..500 {
            let s = sampler.next();
            let m = s.maclaurin_chain(k).unwrap();
            for w in m.windows(2) {
                assert!(w[0] >= w[1] - 1e-12, "chain not monotone: {:?}", m);
            }
        }
    }
}

#[test]
fn maclaurin_reference_spectrum() {
    // lambda = (6,3,3): m = (4, sqrt(15)); binomial normalization visible.
    let s = Spectrum::new(vec![6.0, 3.0, 3.0]).unwrap();
    let m = s.maclaurin_chain(2).unwrap();
    assert!((m[0] - 12.0 / binomial(3, 1)).abs() < 1e-14);
    assert!((m[1] - (45.0 / binomial(3, 2)).sqrt()).abs() < 1e-14);
}
